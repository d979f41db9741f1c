"""Per-episode metric accounting.

Three accounting families run side by side:

* broadcast level: packet-set XOR degree served per slot (u) against
  expired packet mass (e);
* file identity: each file counted once per episode; an expired record
  contributes only file identities not yet delivered at the moment it
  expires;
* request level: every arrival id credited exactly once as completed or
  missed via the annotation ledgers.

Feed outcomes in step order through :func:`accumulate`, then call
:func:`finalize` for the thirteen-metric map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import SystemConfig
from .core import file_ids
from .engine import CodedMerge, ErasedMerge, StepOutcome, Unicast


@dataclass
class EpisodeMetrics:
    cfg: SystemConfig
    sum_u: int = 0
    sum_e: int = 0
    sum_u_uniq: int = 0
    sum_e_uniq: int = 0
    sum_completed: int = 0
    sum_missed: int = 0
    n_expired_records: int = 0
    coded_steps: int = 0
    merged_steps: int = 0
    opportunity_steps: int = 0
    coded_with_opportunity: int = 0
    sum_u_coded: int = 0
    sum_intersection_norm: float = 0.0
    n_merges: int = 0
    reward_sum: float = 0.0
    steps_seen: int = 0
    size_histogram: dict[int, int] = field(default_factory=dict)
    served_by_cache: list[int] = field(init=False)
    expired_by_cache: list[int] = field(init=False)
    _files_served: set[int] = field(default_factory=set)

    def __post_init__(self):
        self.served_by_cache = [0] * self.cfg.n_caches
        self.expired_by_cache = [0] * self.cfg.n_caches


def accumulate(acc: EpisodeMetrics, outcome: StepOutcome) -> EpisodeMetrics:
    """Fold one step outcome into the accumulator (step order enforced)."""
    if outcome.step != acc.steps_seen:
        raise ValueError(
            f"outcomes must arrive in step order: expected {acc.steps_seen}, "
            f"got {outcome.step}")
    cfg = acc.cfg
    acc.steps_seen += 1

    for size in outcome.queue_sizes:
        acc.size_histogram[size] = acc.size_histogram.get(size, 0) + 1

    acc.sum_u += outcome.u
    acc.sum_e += outcome.e
    acc.sum_completed += len(outcome.newly_completed)
    acc.sum_missed += len(outcome.newly_missed)
    acc.n_expired_records += len(outcome.expired_records)
    acc.reward_sum += outcome.reward.total

    opportunity = outcome.n_pairs > 0
    coded = isinstance(outcome.executed, (CodedMerge, ErasedMerge))
    if opportunity:
        acc.opportunity_steps += 1
        if coded:
            acc.coded_with_opportunity += 1
    if coded:
        acc.coded_steps += 1
        acc.sum_u_coded += outcome.u

    # Unique-demand accounting: new file identities per transmission, then
    # expired identities checked against everything served so far,
    # including this step's own broadcast.
    tx_packets = None
    if isinstance(outcome.executed, CodedMerge):
        tx_packets = outcome.executed.merged_record.packet_set
    elif isinstance(outcome.executed, Unicast):
        tx_packets = outcome.executed.record.packet_set
    if tx_packets is not None:
        tx_files = file_ids(tx_packets, cfg)
        acc.sum_u_uniq += len(tx_files - acc._files_served)
        acc._files_served |= tx_files

    if outcome.expired_records:
        expired_files: set[int] = set()
        for rec in outcome.expired_records:
            expired_files |= file_ids(rec.packet_set, cfg)
            acc.expired_by_cache[rec.dest] += 1
        acc.sum_e_uniq += len(expired_files - acc._files_served)

    for dest in outcome.served_dests:
        acc.served_by_cache[dest] += 1

    if isinstance(outcome.executed, CodedMerge):
        acc.merged_steps += 1
        acc.n_merges += 1
        inter = len(outcome.executed.merged_record.side_info)
        acc.sum_intersection_norm += inter / max(cfg.n_caches - 2, 1)
    return acc


def run_metrics(cfg: SystemConfig, outcomes) -> EpisodeMetrics:
    acc = EpisodeMetrics(cfg)
    for outcome in outcomes:
        accumulate(acc, outcome)
    return acc


def finalize(acc: EpisodeMetrics, horizon: int | None = None,
             miss_weight: float = 1.0) -> dict:
    """Thirteen-metric map plus the raw sums the sweeps reanalyze.

    Ratios with empty denominators degrade explicitly: no traffic means a
    zero expiration ratio, no coded step leaves the coding gain absent
    (None), and no opportunity step leaves the merge rate absent.
    """
    h = horizon if horizon is not None else acc.cfg.horizon
    lam = miss_weight
    traffic = acc.sum_u + acc.sum_e
    uniq_total = acc.sum_u_uniq + acc.sum_e_uniq
    delta = acc.sum_u_uniq / uniq_total if uniq_total else 1.0
    out = {
        "rho": acc.sum_e / traffic if traffic else 0.0,
        "delta": delta,
        "sigma": (acc.sum_u - lam * acc.sum_e) / h,
        "served_per_tx": acc.sum_u / h,
        "coding_gain": (acc.sum_u_coded / acc.coded_steps
                        if acc.coded_steps else None),
        "expirations": acc.n_expired_records,
        "rho_uniq": 1.0 - delta,
        "eta_req": acc.sum_completed / h,
        "m_req": acc.sum_missed / h,
        "sigma_req": (acc.sum_completed - lam * acc.sum_missed) / h,
        "merge_rate": (acc.coded_with_opportunity / acc.opportunity_steps
                       if acc.opportunity_steps else None),
        "opportunity_rate": acc.opportunity_steps / h,
        "reward_per_step": acc.reward_sum / h,
        "avg_intersection_per_merge": (acc.sum_intersection_norm / acc.n_merges
                                       if acc.n_merges else None),
        # Raw sums for trace-free reanalysis (lambda sweeps, fairness).
        "sum_u": acc.sum_u,
        "sum_e": acc.sum_e,
        "sum_u_uniq": acc.sum_u_uniq,
        "sum_e_uniq": acc.sum_e_uniq,
        "sum_completed": acc.sum_completed,
        "sum_missed": acc.sum_missed,
        "served_by_cache": list(acc.served_by_cache),
        "expired_by_cache": list(acc.expired_by_cache),
    }
    return out


METRIC_KEYS = [
    "rho", "delta", "sigma", "served_per_tx", "coding_gain", "expirations",
    "rho_uniq", "eta_req", "m_req", "sigma_req", "merge_rate",
    "opportunity_rate", "reward_per_step",
]

# Direction of improvement per metric; diagnostics carry None.
METRIC_DIRECTIONS = {
    "rho": "down", "delta": "up", "sigma": "up", "served_per_tx": "up",
    "coding_gain": "up", "expirations": "down", "rho_uniq": "down",
    "eta_req": "up", "m_req": "down", "sigma_req": "up",
    "merge_rate": None, "opportunity_rate": None, "reward_per_step": None,
    "avg_intersection_per_merge": None,
}
