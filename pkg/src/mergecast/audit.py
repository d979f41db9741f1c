"""Randomized invariant audits.

The validators are pure functions over (state before, outcome, state after)
so tests can feed them deliberately corrupted data; the campaign driver
runs them over randomized episodes with random mask-valid actions and
counts violations. A healthy engine produces zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .config import SystemConfig, Zipf
from .engine import (CodedMerge, SimState, StepOutcome, check_one_gap,
                     clone_env, make_episode, step)
from .metrics import EpisodeMetrics, accumulate, finalize
from .rng import RngStream, make_rng, mix64


@dataclass
class AuditCounters:
    checks: dict[str, int] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)

    def count(self, name: str, n: int = 1):
        self.checks[name] = self.checks.get(name, 0) + n

    def fail(self, message: str):
        self.violations.append(message)

    @property
    def total_violations(self) -> int:
        return len(self.violations)


def brute_force_merge_set(queue, caches) -> list[tuple[int, int]]:
    """Independent feasibility oracle: explicit subset checks on the cache
    contents, no side-info shortcut."""
    out = []
    n = len(queue)
    for i in range(n - 1):
        for j in range(i + 1, n):
            ri, rj = queue[i], queue[j]
            if (ri.packet_set <= caches.contents[rj.dest]
                    and rj.packet_set <= caches.contents[ri.dest]):
                out.append((i, j))
    return out


def validate_merge_outcome(before: SimState, outcome: StepOutcome,
                           counters: AuditCounters):
    """Merge algebra on an executed coded action."""
    if not isinstance(outcome.executed, CodedMerge):
        return
    i, j = outcome.executed.pair
    merged = outcome.executed.merged_record
    r_i, r_j = before.queue[i], before.queue[j]
    counters.count("merge_events")
    if merged.packet_set != r_i.packet_set | r_j.packet_set:
        counters.fail(f"merged packet set is not the union at step {outcome.step}")
    if merged.deadline + 1 != min(r_i.deadline, r_j.deadline):
        # after-state deadline reflects the same-step decrement
        counters.fail(f"merged deadline is not the min at step {outcome.step}")
    if not merged.side_info <= (r_i.side_info & r_j.side_info):
        counters.fail(f"merged side info exceeds the intersection at step {outcome.step}")
    if merged.side_info != (r_i.side_info & r_j.side_info):
        counters.fail(f"merged side info dropped providers at step {outcome.step}")
    if merged.dest not in (r_i.dest, r_j.dest):
        counters.fail(f"representative outside the endpoints at step {outcome.step}")
    if merged.annotations != r_i.annotations | r_j.annotations:
        counters.fail(f"merged annotations are not the union at step {outcome.step}")


def validate_refill_timing(outcome: StepOutcome, after: SimState, cfg: SystemConfig,
                           counters: AuditCounters):
    """Phase-1 refills decrement once in their arrival step (domain 0..D-1
    post-decrement, expiring at 0); phase-3 refills keep their sampled
    deadline (domain 1..D)."""
    d = cfg.max_deadline
    expired_ids = set()
    for rec in outcome.expired_records:
        expired_ids |= rec.annotations
    for slot, d_created in outcome.phase1_refills:
        counters.count("phase1_refills")
        if not 1 <= d_created <= d:
            counters.fail(f"phase-1 refill drew deadline {d_created}")
        decremented = d_created - 1
        if not 0 <= decremented <= d - 1:
            counters.fail(f"phase-1 refill post-decrement deadline {decremented}")
        rec_now = after.queue[slot]
        if decremented == 0:
            # must have expired this same step and been replaced
            if rec_now.deadline == 0:
                counters.fail("zero-deadline record survived phase 3")
            counters.count("phase1_same_step_expiry")
        elif slot not in [s for s, _ in outcome.phase3_refills]:
            if rec_now.deadline != decremented:
                counters.fail(
                    f"phase-1 refill deadline {rec_now.deadline} != {decremented}")
    for slot, d_created in outcome.phase3_refills:
        counters.count("phase3_refills")
        if not 1 <= d_created <= d:
            counters.fail(f"phase-3 refill drew deadline {d_created}")
        if after.queue[slot].deadline != d_created:
            counters.fail("phase-3 refill was decremented in its arrival step")


def validate_mask_parity(state: SimState, counters: AuditCounters):
    """Engine merge set equals the brute-force oracle, order included."""
    oracle = brute_force_merge_set(state.queue, state.caches)
    counters.count("mask_parity_pairs", state.cfg.max_pairs)
    if oracle != state.merge_set:
        counters.fail(f"merge set mismatch at step {state.step_count}: "
                      f"engine {state.merge_set} oracle {oracle}")


def validate_one_gap(state: SimState, counters: AuditCounters):
    for rec in state.queue:
        counters.count("one_gap_checks")
        res = check_one_gap(rec, state.caches)
        if not res.ok:
            counters.fail(f"one-gap violation: missing {res.missing} on {rec!r}")


def validate_ledgers(state: SimState, counters: AuditCounters):
    """Every issued arrival id is completed, missed, or still pending, and
    the two ledgers never overlap."""
    pending: set[int] = set()
    for rec in state.queue:
        pending |= rec.annotations
    counters.count("ledger_ids", state.next_request_id)
    if state.completed_ids & state.missed_ids:
        counters.fail("completed and missed ledgers overlap")
    accounted = state.completed_ids | state.missed_ids | pending
    if len(accounted) != state.next_request_id or \
            any(i >= state.next_request_id for i in accounted):
        counters.fail("request ids lost or duplicated across ledgers and queue")
    # pending ids may appear in the completed ledger (merge credit) but
    # never in the missed ledger
    if pending & state.missed_ids:
        counters.fail("a missed id is still pending in the queue")


def validate_metric_identities(metric_map: dict, cfg: SystemConfig,
                               counters: AuditCounters):
    counters.count("metric_identity_checks")
    if abs((metric_map["rho_uniq"]) - (1.0 - metric_map["delta"])) > 1e-12:
        counters.fail("rho_uniq != 1 - delta")
    lhs = metric_map["sigma"] * cfg.horizon
    rhs = metric_map["sum_u"] - metric_map["sum_e"]
    if abs(lhs - rhs) > 1e-9:
        counters.fail("sigma * H != sum_u - sum_e")


def random_valid_action(state: SimState, rng: RngStream) -> int:
    """Mask-valid action chosen uniformly, with a bias toward coded moves so
    merge-dependent invariants get exercised."""
    n = len(state.merge_set)
    if n == 0:
        return state.cfg.unicast_action
    if rng.random() < 0.2:
        return state.cfg.unicast_action
    return rng.integers(0, 2 * n)


def _campaign_config(rng: RngStream) -> SystemConfig:
    law = Zipf(0.8) if rng.random() < 0.3 else None
    cfg = SystemConfig(
        n_files=int(rng.integers(20, 120)),
        subfiles_per_file=int(rng.integers(2, 12)),
        n_caches=int(rng.integers(3, 7)),
        queue_depth=int(rng.integers(4, 12)),
        max_deadline=int(rng.integers(4, 30)),
        horizon=25,
        cache_fraction=0.2 + 0.4 * rng.random(),
    )
    if law is not None:
        cfg = replace(cfg, demand_law=law)
    return cfg.validate()


def run_audit(n_episodes: int = 200, seed: int = 0,
              deep_parity: bool = True) -> AuditCounters:
    """Randomized episode campaign over varied configs; returns counters
    with any violations found."""
    counters = AuditCounters()
    driver = make_rng(mix64(seed, 0xA0D17))
    for ep in range(n_episodes):
        cfg = _campaign_config(driver)
        state = make_episode(cfg, mix64(seed, ep))
        acc = EpisodeMetrics(cfg)
        while not state.done:
            if deep_parity:
                validate_mask_parity(state, counters)
            validate_one_gap(state, counters)
            before = clone_env(state)
            action = random_valid_action(state, driver)
            outcome, state = step(state, action)
            accumulate(acc, outcome)
            validate_merge_outcome(before, outcome, counters)
            validate_refill_timing(outcome, state, cfg, counters)
        validate_ledgers(state, counters)
        validate_metric_identities(finalize(acc), cfg, counters)
    return counters
