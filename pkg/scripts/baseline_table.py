"""Reproduce the headline baseline comparison at desk scale.

Runs every built-in scheduler over the shared holdout grid on the default
system (uniform demand) and prints the per-policy metric table plus paired
differences against the strongest always-merge baseline.

Usage: python3 scripts/baseline_table.py [--seeds 50:60] [--episodes 200]
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from mergecast.evalharness import (EvalPlan, paired_difference, render_table,
                                   run_plan, save_results)

POLICIES = ["ed-unicast", "gcm", "sacm", "sacm+", "sacm++",
            "taufit:0", "taufit:1", "taufit:2", "taufit:3"]


def parse_seeds(text):
    lo, _, hi = text.partition(":")
    return tuple(range(int(lo), int(hi)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", default="50:60")
    ap.add_argument("--episodes", type=int, default=200)
    ap.add_argument("--out", default="baseline_results.jsonl")
    args = ap.parse_args()

    plan = EvalPlan(regimes=["id-default"], policies=POLICIES,
                    seeds=parse_seeds(args.seeds),
                    episodes_per_seed=args.episodes)
    t0 = time.time()
    results = run_plan(plan, progress=lambda d, t: print(
        f"  {d}/{t} contexts", file=sys.stderr))
    print(f"ran {len(plan.seeds) * args.episodes} shared contexts "
          f"x {len(POLICIES)} policies in {time.time() - t0:.1f}s\n")
    print(render_table(results, "id-default"))
    if len(plan.seeds) >= 2:
        print("\npaired differences vs sacm++ (percentile bootstrap, 95%):")
        for policy in POLICIES:
            if policy == "sacm++":
                continue
            for metric in ("rho", "sigma"):
                mean, lo, hi = paired_difference(results, "id-default", policy,
                                                 "sacm++", metric)
                print(f"  {policy:12s} d{metric:6s} {mean:+.4f} "
                      f"[{lo:+.4f}, {hi:+.4f}]")
    save_results(results, args.out)
    print(f"\nwrote {args.out}")


if __name__ == "__main__":
    main()
