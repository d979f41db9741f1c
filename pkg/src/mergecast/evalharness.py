"""Paired-seed evaluation protocol.

Every policy in a plan sees the identical (seed, episode) grid: one shared
initial state (placement plus starting queue) is built per episode seed and
each policy runs from its own clone. RNG draws inside an episode then
follow that policy's own trajectory, so the pairing holds at the
seed/context level, not pathwise.

Statistics are computed on per-seed means (episodes pooled within a seed
first), with normal-approximation intervals for single policies and a
percentile bootstrap for paired differences.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig, regime_config
from .engine import clone_env, make_episode, step
from .errors import PolicyFaultError
from .metrics import EpisodeMetrics, METRIC_DIRECTIONS, accumulate, finalize
from .policies import get_policy
from .rng import episode_seed

VALIDATION_SEEDS = tuple(range(0, 50))
HOLDOUT_SEEDS = tuple(range(50, 100))


@dataclass
class EvalPlan:
    regimes: list[str] = field(default_factory=lambda: ["id-default"])
    policies: list[str] = field(default_factory=lambda: ["ed-unicast", "sacm++"])
    seeds: tuple[int, ...] = HOLDOUT_SEEDS
    episodes_per_seed: int = 200
    bootstrap_resamples: int = 10_000
    base_config: SystemConfig = field(default_factory=SystemConfig)


@dataclass
class EvalResults:
    """Per-episode metric maps keyed by (regime, policy, seed, episode)."""

    plan: EvalPlan
    records: dict = field(default_factory=dict)

    def add(self, regime, policy, seed, episode, metric_map):
        self.records[(regime, policy, seed, episode)] = metric_map

    def per_seed_means(self, regime: str, policy: str, metric: str) -> np.ndarray:
        """One mean per seed, episodes pooled; absent values drop out."""
        means = []
        for seed in self.plan.seeds:
            vals = [self.records[(regime, policy, seed, e)][metric]
                    for e in range(self.plan.episodes_per_seed)
                    if self.records[(regime, policy, seed, e)][metric] is not None]
            means.append(float(np.mean(vals)) if vals else np.nan)
        return np.array(means)

    def summary(self, regime: str, policy: str, metric: str):
        means = self.per_seed_means(regime, policy, metric)
        means = means[~np.isnan(means)]
        if means.size == 0:
            return None, None, None
        grand = float(means.mean())
        if means.size < 2:
            return grand, grand, grand
        half = 1.96 * float(means.std(ddof=1)) / math.sqrt(means.size)
        return grand, grand - half, grand + half


def _run_episode_cell(cfg: SystemConfig, policy_names, seed: int,
                      episode: int) -> list[dict]:
    """All policies on one shared context; returns metric maps per policy."""
    ep_seed = episode_seed(seed, episode)
    shared = make_episode(cfg, ep_seed)
    maps = []
    unicast = cfg.unicast_action
    for name in policy_names:
        policy = get_policy(name)
        state = clone_env(shared)
        acc = EpisodeMetrics(cfg)
        while not state.done:
            action = policy(state)
            if action != unicast and action // 2 >= len(state.merge_set):
                raise PolicyFaultError(
                    f"policy {policy.name} chose masked action {action} "
                    f"at step {state.step_count} (seed {ep_seed})")
            outcome, state = step(state, action)
            accumulate(acc, outcome)
        maps.append(finalize(acc))
    return maps


def _worker(job):
    regime, cfg, policy_names, seed, episode = job
    return (regime, seed, episode), _run_episode_cell(cfg, policy_names, seed, episode)


def run_plan(plan: EvalPlan, workers: int = 1, progress=None) -> EvalResults:
    """Execute the full grid. Results are identical for any worker count."""
    results = EvalResults(plan)
    jobs = []
    for regime in plan.regimes:
        cfg = regime_config(plan.base_config, regime)
        for seed in plan.seeds:
            for episode in range(plan.episodes_per_seed):
                jobs.append((regime, cfg, plan.policies, seed, episode))

    if workers <= 1:
        outputs = map(_worker, jobs)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        outputs = pool.map(_worker, jobs, chunksize=32)

    done = 0
    for (regime, seed, episode), maps in outputs:
        for name, metric_map in zip(plan.policies, maps):
            results.add(regime, name, seed, episode, metric_map)
        done += 1
        if progress is not None and done % 500 == 0:
            progress(done, len(jobs))
    if workers > 1:
        pool.shutdown()
    return results


def paired_bootstrap(diffs, resamples: int = 10_000,
                     seed: int = 0) -> tuple[float, float, float]:
    """Percentile CI of the mean of per-seed paired differences.

    Resamples the seed-level values with replacement; endpoints are the
    2.5th and 97.5th percentiles of the resampled means. Deterministic for
    a fixed report seed.
    """
    diffs = np.asarray(diffs, dtype=float)
    if diffs.size < 2:
        raise ValueError("paired bootstrap needs at least two seed values")
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.integers(0, diffs.size, size=(resamples, diffs.size))
    means = diffs[idx].mean(axis=1)
    lo, hi = np.percentile(means, [2.5, 97.5])
    return float(diffs.mean()), float(lo), float(hi)


def paired_difference(results: EvalResults, regime: str, policy_a: str,
                      policy_b: str, metric: str, seed: int = 0):
    """Bootstrap CI of per-seed mean(metric(a) - metric(b))."""
    a = results.per_seed_means(regime, policy_a, metric)
    b = results.per_seed_means(regime, policy_b, metric)
    return paired_bootstrap(a - b, results.plan.bootstrap_resamples, seed=seed)


def lambda_sweep(results: EvalResults, regime: str, lambdas,
                 horizon: int | None = None) -> dict:
    """Recompute the two composite scores per policy per weight from the
    stored per-episode sums; no re-simulation."""
    plan = results.plan
    h = horizon if horizon is not None else regime_config(
        plan.base_config, regime).horizon
    table: dict = {}
    for policy in plan.policies:
        rows = {}
        for lam in lambdas:
            sig, req = [], []
            for seed in plan.seeds:
                s_vals, r_vals = [], []
                for e in range(plan.episodes_per_seed):
                    m = results.records[(regime, policy, seed, e)]
                    s_vals.append((m["sum_u"] - lam * m["sum_e"]) / h)
                    r_vals.append((m["sum_completed"] - lam * m["sum_missed"]) / h)
                sig.append(np.mean(s_vals))
                req.append(np.mean(r_vals))
            rows[lam] = {"sigma": float(np.mean(sig)),
                         "sigma_req": float(np.mean(req))}
        table[policy] = rows
    return table


def crossover_lambda(results: EvalResults, regime: str, policy_a: str,
                     policy_b: str) -> float | None:
    """Smallest weight at which policy_a's request selection score reaches
    policy_b's; the score is affine in the weight, so the crossover is the
    root of the mean difference. None when a never catches b."""
    ca = results.per_seed_means(regime, policy_a, "sum_completed").mean()
    ma = results.per_seed_means(regime, policy_a, "sum_missed").mean()
    cb = results.per_seed_means(regime, policy_b, "sum_completed").mean()
    mb = results.per_seed_means(regime, policy_b, "sum_missed").mean()
    # f(lam) = (ca - cb) - lam (ma - mb); want smallest lam >= 0 with f >= 0.
    slope = mb - ma
    intercept = ca - cb
    if intercept >= 0:
        return 0.0
    if slope <= 0:
        return None
    return float(-intercept / slope)


def oracle_tau(validation: EvalResults, regime: str, metric: str,
               taus=(0, 1, 2, 3)) -> int:
    """Retrospective threshold pick: the tau whose validation mean is best
    for the metric's direction; ties keep the smaller tau."""
    direction = METRIC_DIRECTIONS.get(metric)
    if direction is None:
        raise ValueError(f"metric {metric!r} has no improvement direction")
    best_tau, best_val = None, None
    for tau in taus:
        mean, _, _ = validation.summary(regime, f"taufit:{tau}", metric)
        if mean is None:
            continue
        better = (best_val is None
                  or (direction == "up" and mean > best_val)
                  or (direction == "down" and mean < best_val))
        if better:
            best_tau, best_val = tau, mean
    return best_tau


def fairness_report(results: EvalResults, regime: str, policy: str) -> dict:
    """Per-cache expiration ratio from pooled served/expired record counts,
    plus the worst-case max/min ratio across caches."""
    plan = results.plan
    k = regime_config(plan.base_config, regime).n_caches
    served = np.zeros(k)
    expired = np.zeros(k)
    for seed in plan.seeds:
        for e in range(plan.episodes_per_seed):
            m = results.records[(regime, policy, seed, e)]
            served += np.array(m["served_by_cache"])
            expired += np.array(m["expired_by_cache"])
    with np.errstate(invalid="ignore"):
        rho_k = expired / (expired + served)
    rho_k = np.nan_to_num(rho_k)
    positive = rho_k[rho_k > 0]
    ratio = float(rho_k.max() / rho_k.min()) if rho_k.min() > 0 else None
    return {"rho_per_cache": [float(v) for v in rho_k],
            "max_min_ratio": ratio,
            "n_caches_with_expirations": int(positive.size)}


def fairness_from_counts(served_by_cache, expired_by_cache) -> dict:
    served = np.asarray(served_by_cache, dtype=float)
    expired = np.asarray(expired_by_cache, dtype=float)
    rho_k = expired / np.maximum(expired + served, 1.0)
    ratio = float(rho_k.max() / rho_k.min()) if rho_k.min() > 0 else None
    return {"rho_per_cache": [float(v) for v in rho_k], "max_min_ratio": ratio}


def _config_dict(cfg: SystemConfig) -> dict:
    return {
        "n_files": cfg.n_files, "subfiles_per_file": cfg.subfiles_per_file,
        "n_caches": cfg.n_caches, "queue_depth": cfg.queue_depth,
        "max_deadline": cfg.max_deadline, "horizon": cfg.horizon,
        "cache_fraction": cfg.cache_fraction,
        "demand_law": cfg.demand_law.label(),
        "erasure_prob": cfg.erasure_prob,
    }


def _config_from_dict(d: dict) -> SystemConfig:
    from .config import parse_demand_law
    d = dict(d)
    d["demand_law"] = parse_demand_law(d["demand_law"])
    return SystemConfig(**d).validate()


def save_results(results: EvalResults, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "regimes": results.plan.regimes,
            "policies": results.plan.policies,
            "seeds": list(results.plan.seeds),
            "episodes_per_seed": results.plan.episodes_per_seed,
            "bootstrap_resamples": results.plan.bootstrap_resamples,
            "base_config": _config_dict(results.plan.base_config),
        }
        fh.write(json.dumps({"plan": header}) + "\n")
        for (regime, policy, seed, episode), m in sorted(results.records.items()):
            rec = {"regime": regime, "policy": policy, "seed": seed,
                   "episode": episode, "metrics": m}
            fh.write(json.dumps(rec) + "\n")


def load_results(path: str,
                 base_config: SystemConfig | None = None) -> EvalResults:
    with open(path, "r", encoding="utf-8") as fh:
        head = json.loads(fh.readline())["plan"]
        if base_config is None:
            base_config = _config_from_dict(head["base_config"]) \
                if "base_config" in head else SystemConfig()
        plan = EvalPlan(
            regimes=head["regimes"], policies=head["policies"],
            seeds=tuple(head["seeds"]),
            episodes_per_seed=head["episodes_per_seed"],
            bootstrap_resamples=head["bootstrap_resamples"],
            base_config=base_config,
        )
        results = EvalResults(plan)
        for line in fh:
            rec = json.loads(line)
            results.add(rec["regime"], rec["policy"], rec["seed"],
                        rec["episode"], rec["metrics"])
    return results


def render_table(results: EvalResults, regime: str,
                 metrics=("sigma", "rho", "delta", "served_per_tx",
                          "coding_gain", "expirations", "merge_rate",
                          "opportunity_rate")) -> str:
    """Human-readable per-policy table. Cells show mean +/- half-width of
    the normal 95% interval across per-seed means; absent metrics render
    as ---."""
    lines = [f"regime: {regime} "
             f"(mean +/- 1.96 * sd / sqrt(n_seeds), per-seed means)"]
    header = ["policy"] + list(metrics)
    rows = []
    for policy in results.plan.policies:
        row = [policy]
        for metric in metrics:
            mean, lo, hi = results.summary(regime, policy, metric)
            if mean is None:
                row.append("---")
            else:
                row.append(f"{mean:.3f} +/- {(hi - lo) / 2:.3f}")
        rows.append(row)
    widths = [max(len(str(r[c])) for r in [header] + rows)
              for c in range(len(header))]
    for r in [header] + rows:
        lines.append("  ".join(str(v).ljust(w) for v, w in zip(r, widths)))
    return "\n".join(lines)


def render_flat(results: EvalResults) -> str:
    """Machine-readable TSV: one row per (regime, policy, metric)."""
    from .metrics import METRIC_KEYS
    lines = ["regime\tpolicy\tmetric\tmean\tci_lo\tci_hi\tn_seeds"]
    for regime in results.plan.regimes:
        for policy in results.plan.policies:
            for metric in METRIC_KEYS:
                mean, lo, hi = results.summary(regime, policy, metric)
                if mean is None:
                    lines.append(f"{regime}\t{policy}\t{metric}\tnan\tnan\tnan\t0")
                else:
                    lines.append(
                        f"{regime}\t{policy}\t{metric}\t{mean!r}\t{lo!r}\t{hi!r}"
                        f"\t{len(results.plan.seeds)}")
    return "\n".join(lines)
