"""Non-ID regime battery: how each scheduler moves when one system
parameter shifts away from the default domain.

Usage: python3 scripts/ood_battery.py [--policies ed-unicast,sacm++]
       [--regimes file60,file120,file150,pcache0.20,pcache0.40,delay10,delay30]
       [--seeds 50:60] [--episodes 200] [--zipf]
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from mergecast.evalharness import EvalPlan, render_table, run_plan, save_results

UNIFORM_REGIMES = ["id-default", "file60", "file120", "file150",
                   "pcache0.20", "pcache0.40", "delay10", "delay30"]
ZIPF_REGIMES = ["zipf-id", "zipf-alpha0.6", "zipf-alpha1.0", "zipf-alpha1.2",
                "zipf-mandelbrot", "zipf-pcache0.20", "zipf-pcache0.40",
                "zipf-delay10", "zipf-delay30"]


def parse_seeds(text):
    lo, _, hi = text.partition(":")
    return tuple(range(int(lo), int(hi)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--policies", default="ed-unicast,sacm++")
    ap.add_argument("--regimes", default=None)
    ap.add_argument("--seeds", default="50:60")
    ap.add_argument("--episodes", type=int, default=200)
    ap.add_argument("--zipf", action="store_true",
                    help="use the skewed-demand battery (adds sacm++pop)")
    ap.add_argument("--out", default="ood_results.jsonl")
    args = ap.parse_args()

    if args.regimes:
        regimes = args.regimes.split(",")
    else:
        regimes = ZIPF_REGIMES if args.zipf else UNIFORM_REGIMES
    policies = args.policies.split(",")
    if args.zipf and "sacm++pop" not in policies:
        policies.append("sacm++pop")

    plan = EvalPlan(regimes=regimes, policies=policies,
                    seeds=parse_seeds(args.seeds),
                    episodes_per_seed=args.episodes)
    results = run_plan(plan, progress=lambda d, t: print(
        f"  {d}/{t} contexts", file=sys.stderr))
    for regime in regimes:
        print(render_table(results, regime,
                           metrics=("rho", "delta", "sigma", "served_per_tx",
                                    "expirations", "merge_rate")))
        print()
    save_results(results, args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
