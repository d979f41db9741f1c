import pytest

from mergecast.audit import (AuditCounters, brute_force_merge_set, run_audit,
                             validate_ledgers, validate_mask_parity,
                             validate_merge_outcome, validate_metric_identities,
                             validate_refill_timing)
from mergecast.core import QueueRecord
from mergecast.engine import CodedMerge, clone_env, step

from state_builders import SMALL_CFG, stepped_state


def test_audit_campaign_clean():
    counters = run_audit(n_episodes=40, seed=0)
    assert counters.total_violations == 0, counters.violations[:5]
    assert counters.checks["one_gap_checks"] > 0
    assert counters.checks["mask_parity_pairs"] > 0
    assert counters.checks.get("merge_events", 0) > 0


def test_audit_deterministic():
    a = run_audit(n_episodes=5, seed=3)
    b = run_audit(n_episodes=5, seed=3)
    assert a.checks == b.checks


def _merged_step(seed=4):
    state = stepped_state(seed, n_steps=0)
    tries = 0
    while not state.merge_set and tries < 40:
        _, state = step(state, state.cfg.unicast_action)
        tries += 1
    assert state.merge_set
    before = clone_env(state)
    outcome, after = step(state, 0)
    assert isinstance(outcome.executed, CodedMerge)
    return before, outcome, after


def test_mutant_union_side_info_is_flagged():
    """Corrupting the merged side info to the union must trip the
    shrinking-side-information check."""
    before, outcome, after = _merged_step()
    i, j = outcome.executed.pair
    merged = outcome.executed.merged_record
    union = before.queue[i].side_info | before.queue[j].side_info
    forged = QueueRecord(merged.dest, merged.packet_set, merged.deadline,
                         union, merged.annotations, merged.insertion_order)
    outcome.executed.merged_record = forged
    counters = AuditCounters()
    validate_merge_outcome(before, outcome, counters)
    if union != before.queue[i].side_info & before.queue[j].side_info:
        assert counters.total_violations > 0
    else:
        pytest.skip("degenerate state: union equals intersection")


def test_mutant_outside_representative_is_flagged():
    before, outcome, after = _merged_step(seed=6)
    merged = outcome.executed.merged_record
    k = before.cfg.n_caches
    i, j = outcome.executed.pair
    bad_dest = next(d for d in range(k)
                    if d not in (before.queue[i].dest, before.queue[j].dest))
    outcome.executed.merged_record = QueueRecord(
        bad_dest, merged.packet_set, merged.deadline, merged.side_info,
        merged.annotations, merged.insertion_order)
    counters = AuditCounters()
    validate_merge_outcome(before, outcome, counters)
    assert any("representative" in v for v in counters.violations)


def test_mutant_phase1_after_decrement_is_flagged():
    """A refill that skipped the same-step decrement shows up with its full
    sampled deadline at the next decision step."""
    state = stepped_state(7)
    outcome, after = step(state, state.cfg.unicast_action)
    slot, created = outcome.phase1_refills[0]
    if created == 1:
        pytest.skip("refill expired in the same step")
    after.queue[slot].deadline += 1  # undo the decrement, as the mutant would
    counters = AuditCounters()
    validate_refill_timing(outcome, after, state.cfg, counters)
    assert any("phase-1" in v for v in counters.violations)


def test_mutant_decremented_phase3_is_flagged():
    state = stepped_state(8)
    cfg = state.cfg
    outcome = None
    while not state.done:
        out, state = step(state, cfg.unicast_action)
        if out.phase3_refills:
            outcome = out
            break
    if outcome is None:
        pytest.skip("no expiration happened")
    slot, created = outcome.phase3_refills[0]
    state.queue[slot].deadline = created - 1  # as if decremented on arrival
    counters = AuditCounters()
    validate_refill_timing(outcome, state, cfg, counters)
    assert any("phase-3" in v for v in counters.violations)


def test_mask_parity_flags_stale_merge_set():
    state = stepped_state(9)
    counters = AuditCounters()
    validate_mask_parity(state, counters)
    assert counters.total_violations == 0
    state.merge_set = state.merge_set + [(0, 1)] \
        if (0, 1) not in state.merge_set else state.merge_set[:-1]
    validate_mask_parity(state, counters)
    assert counters.total_violations == 1


def test_ledger_validator_flags_overlap():
    state = stepped_state(10, n_steps=6)
    counters = AuditCounters()
    validate_ledgers(state, counters)
    assert counters.total_violations == 0
    state.missed_ids.add(next(iter(state.completed_ids)))
    validate_ledgers(state, counters)
    assert counters.total_violations > 0


def test_metric_identity_validator_flags_drift():
    counters = AuditCounters()
    good = {"rho_uniq": 0.25, "delta": 0.75, "sigma": 1.0,
            "sum_u": 60, "sum_e": 35}
    validate_metric_identities(good, SMALL_CFG, counters)
    assert counters.total_violations == 0
    bad = dict(good, rho_uniq=0.3)
    validate_metric_identities(bad, SMALL_CFG, counters)
    assert counters.total_violations == 1


def test_brute_force_oracle_shape():
    state = stepped_state(11, n_steps=3)
    pairs = brute_force_merge_set(state.queue, state.caches)
    assert pairs == sorted(pairs)
    assert all(i < j for i, j in pairs)
