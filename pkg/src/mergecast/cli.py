"""Command-line front end.

Verbs: run one traced episode, batch-evaluate policies over seed grids,
reanalyze results (lambda sweeps, threshold selection, fairness, reports),
generate teacher datasets, and audit engine invariants.

Exit codes: 0 success, 1 simulation fault, 2 configuration fault.
"""

from __future__ import annotations

import argparse
import sys

from . import evalharness, trace
from .audit import run_audit
from .config import REGIMES, load_config, regime_config
from .engine import make_episode, run_episode
from .errors import ConfigError, PolicyFaultError
from .metrics import METRIC_KEYS, EpisodeMetrics, accumulate, finalize
from .planner import PlannerConfig, emit_bc_dataset
from .policies import get_policy

EXIT_OK = 0
EXIT_SIM_FAULT = 1
EXIT_CONFIG_FAULT = 2


def _parse_seeds(text: str) -> tuple[int, ...]:
    """'50:60' is a half-open range; '1,2,3' is an explicit list."""
    text = text.strip()
    if ":" in text:
        lo, _, hi = text.partition(":")
        return tuple(range(int(lo), int(hi)))
    return tuple(int(s) for s in text.split(","))


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.regime:
        cfg = regime_config(cfg, args.regime)
    policy = get_policy(args.policy)
    state = make_episode(cfg, args.seed)
    acc = EpisodeMetrics(cfg)
    outcomes = run_episode(state, policy,
                           on_step=lambda o, s: accumulate(acc, o))
    metric_map = finalize(acc)
    out = args.out or f"trace_{args.seed}.txt"
    trace.write_trace(out, cfg, args.seed, outcomes, metric_map,
                      verbose=args.verbose)
    print(f"policy {policy.name}: wrote {len(outcomes)} steps to {out}")
    for key in METRIC_KEYS:
        value = metric_map[key]
        print(f"  {key} = {'---' if value is None else value}")
    return EXIT_OK


def cmd_eval(args) -> int:
    base = load_config(args.config)
    plan = evalharness.EvalPlan(
        regimes=args.regimes.split(","),
        policies=args.policies.split(","),
        seeds=_parse_seeds(args.seeds),
        episodes_per_seed=args.episodes,
        base_config=base,
    )
    results = evalharness.run_plan(
        plan, workers=args.workers,
        progress=lambda d, t: print(f"  {d}/{t} episodes", file=sys.stderr))
    evalharness.save_results(results, args.out)
    for regime in plan.regimes:
        print(evalharness.render_table(results, regime))
        print()
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_sweep_lambda(args) -> int:
    results = evalharness.load_results(args.results)
    lambdas = [float(v) for v in args.lambdas.split(",")]
    for regime in results.plan.regimes:
        cfg = regime_config(results.plan.base_config, regime)
        table = evalharness.lambda_sweep(results, regime, lambdas,
                                         horizon=cfg.horizon)
        print(f"regime: {regime}")
        header = "policy".ljust(14) + "".join(f"sigma({v:g})".rjust(14) for v in lambdas)
        print(header)
        for policy, rows in table.items():
            print(policy.ljust(14)
                  + "".join(f"{rows[v]['sigma']:14.4f}" for v in lambdas))
        print("request selection score:")
        for policy, rows in table.items():
            print(policy.ljust(14)
                  + "".join(f"{rows[v]['sigma_req']:14.4f}" for v in lambdas))
    return EXIT_OK


def cmd_sweep_tau(args) -> int:
    base = load_config(args.config)
    taus = [int(v) for v in args.taus.split(",")]
    plan = evalharness.EvalPlan(
        regimes=[args.regime],
        policies=[f"taufit:{t}" for t in taus],
        seeds=_parse_seeds(args.validation_seeds),
        episodes_per_seed=args.episodes,
        base_config=base,
    )
    validation = evalharness.run_plan(plan, workers=args.workers)
    best = evalharness.oracle_tau(validation, args.regime, args.metric,
                                  taus=taus)
    print(f"validation pick for {args.metric}: tau* = {best}")
    holdout_plan = evalharness.EvalPlan(
        regimes=[args.regime], policies=[f"taufit:{best}"],
        seeds=_parse_seeds(args.holdout_seeds),
        episodes_per_seed=args.episodes, base_config=base,
    )
    holdout = evalharness.run_plan(holdout_plan, workers=args.workers)
    mean, lo, hi = holdout.summary(args.regime, f"taufit:{best}", args.metric)
    print(f"holdout {args.metric} at tau*={best}: {mean:.4f} [{lo:.4f}, {hi:.4f}]")
    return EXIT_OK


def cmd_sweep_erasure(args) -> int:
    base = load_config(args.config)
    from dataclasses import replace
    print("policy".ljust(14) + "".join(f"rho(eps={e:g})".rjust(16)
                                       for e in (0.0, 0.05, 0.10, 0.20)))
    for policy in args.policies.split(","):
        row = [policy.ljust(14)]
        for eps in (0.0, 0.05, 0.10, 0.20):
            cfg = replace(base, erasure_prob=eps).validate()
            plan = evalharness.EvalPlan(
                regimes=[args.regime], policies=[policy],
                seeds=_parse_seeds(args.seeds),
                episodes_per_seed=args.episodes, base_config=cfg,
            )
            results = evalharness.run_plan(plan, workers=args.workers)
            mean, _, _ = results.summary(args.regime, policy, "rho")
            row.append(f"{mean:16.4f}")
        print("".join(row))
    return EXIT_OK


def cmd_teach(args) -> int:
    base = load_config(args.config)
    pcfg = PlannerConfig(
        top_k_pairs=args.top_k, lookahead_depth=args.depth,
        mc_seeds=args.mc_seeds, track=args.track,
    )
    n = emit_bc_dataset(args.n, pcfg, args.seed, args.out, system_cfg=base,
                        expert_mix=args.expert_mix)
    print(f"wrote {n} labeled states to {args.out}")
    return EXIT_OK


def cmd_audit(args) -> int:
    counters = run_audit(n_episodes=args.episodes, seed=args.seed)
    for name in sorted(counters.checks):
        print(f"  {name}: {counters.checks[name]} checks")
    print(f"violations: {counters.total_violations}")
    for v in counters.violations[:20]:
        print(f"  {v}")
    return EXIT_OK if counters.total_violations == 0 else EXIT_SIM_FAULT


def cmd_report(args) -> int:
    results = evalharness.load_results(args.results)
    if args.flat:
        print(evalharness.render_flat(results))
        return EXIT_OK
    for regime in results.plan.regimes:
        print(evalharness.render_table(results, regime))
        if args.fairness:
            for policy in results.plan.policies:
                rep = evalharness.fairness_report(results, regime, policy)
                rhos = " ".join(f"{v:.4f}" for v in rep["rho_per_cache"])
                ratio = rep["max_min_ratio"]
                print(f"  fairness {policy}: rho_k = [{rhos}] "
                      f"max/min = {'---' if ratio is None else f'{ratio:.3f}'}")
        print()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mergecast",
        description="deadline-constrained XOR merge multicast simulator")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="one traced episode")
    p.add_argument("--config", default=None)
    p.add_argument("--regime", default=None, choices=sorted(REGIMES))
    p.add_argument("--policy", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--verbose", action="store_true",
                   help="append completed/missed id lists to each step line")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("eval", help="paired multi-policy evaluation")
    p.add_argument("--config", default=None)
    p.add_argument("--regimes", default="id-default")
    p.add_argument("--policies", default="ed-unicast,sacm++")
    p.add_argument("--seeds", default="50:100")
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results.jsonl")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep-lambda", help="reweight composite scores from saved results")
    p.add_argument("--results", required=True)
    p.add_argument("--lambdas", default="0.5,1,2,3")
    p.set_defaults(fn=cmd_sweep_lambda)

    p = sub.add_parser("sweep-tau", help="validation-picked threshold, holdout-evaluated")
    p.add_argument("--config", default=None)
    p.add_argument("--regime", default="id-default")
    p.add_argument("--metric", default="sigma")
    p.add_argument("--taus", default="0,1,2,3")
    p.add_argument("--validation-seeds", default="0:10")
    p.add_argument("--holdout-seeds", default="50:60")
    p.add_argument("--episodes", type=int, default=50)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_sweep_tau)

    p = sub.add_parser("sweep-erasure", help="expiration ratio across erasure rates")
    p.add_argument("--config", default=None)
    p.add_argument("--regime", default="id-default")
    p.add_argument("--policies", default="ed-unicast,sacm++")
    p.add_argument("--seeds", default="50:55")
    p.add_argument("--episodes", type=int, default=50)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_sweep_erasure)

    p = sub.add_parser("teach", help="emit a labeled teacher dataset")
    p.add_argument("--config", default=None)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="teacher_dataset.jsonl")
    p.add_argument("--top-k", type=int, default=16)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--mc-seeds", type=int, default=4)
    p.add_argument("--track", default="A", choices=["A", "B"])
    p.add_argument("--expert-mix", type=float, default=0.0)
    p.set_defaults(fn=cmd_teach)

    p = sub.add_parser("audit", help="randomized invariant audit")
    p.add_argument("--episodes", type=int, default=150)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("report", help="render saved results")
    p.add_argument("--results", required=True)
    p.add_argument("--flat", action="store_true", help="TSV, one metric per row")
    p.add_argument("--fairness", action="store_true")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_FAULT
    except (PolicyFaultError, OSError, RuntimeError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM_FAULT


if __name__ == "__main__":
    sys.exit(main())
