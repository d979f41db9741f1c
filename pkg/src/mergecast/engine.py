"""One-step environment transition.

A step runs three phases:

* Phase 1, transmission: a coded action XORs a feasible pair into one
  broadcast (the kept slot takes the aggregate, the freed slot is refilled
  immediately); any other action unicasts the earliest-deadline record and
  refills its slot. Phase-1 refills land BEFORE the decrement, so a fresh
  draw of deadline 1 expires this very step.
* Phase 2, decrement: every deadline in the queue drops by one.
* Phase 3, expiration: records at deadline <= 0 leave the queue and their
  slots are refilled AFTER the decrement, keeping the queue at full depth.

With a positive erasure probability, a coded broadcast is lost with that
probability: the step is consumed, no aggregate forms, no slot is refilled,
and phases 2-3 proceed normally. Unicasts are never erased. With
erasure_prob == 0 no erasure coin is ever flipped, so the zero-probability
path is draw-for-draw identical to a config without erasure.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import SystemConfig
from .core import CacheAssignment, QueueRecord, file_ids, gen_request, place_caches
from .errors import EpisodeFinishedError, InfeasibleMergeError
from .rng import RngStream, make_rng

# Reward weights: served/expired packet mass at parity, intersection bonus,
# union penalty, and potential shaping with its own discount.
W_SERVED = 1.0
W_EXPIRED = 1.0
W_INTER = 0.75
W_UNION = 0.15
W_PHI = 0.20
GAMMA_PHI = 0.995


@dataclass
class RewardComponents:
    base: float
    quality: float
    shape: float

    @property
    def total(self) -> float:
        return self.base + self.quality + self.shape


@dataclass
class CodedMerge:
    pair: tuple[int, int]
    keep_bit: int
    merged_record: QueueRecord


@dataclass
class Unicast:
    slot: int
    record: QueueRecord


@dataclass
class ErasedMerge:
    pair: tuple[int, int]


Executed = CodedMerge | Unicast | ErasedMerge


@dataclass
class StepOutcome:
    """Everything observable about one transition."""

    step: int
    action: int
    executed: Executed
    u: int                       # packet-set XOR degree served this slot
    e: int                       # expired packet mass
    expired_records: list[QueueRecord]
    reward: RewardComponents
    newly_completed: frozenset[int]
    newly_missed: frozenset[int]
    mask_next: list[bool]
    n_pairs: int                 # |merge set| at decision time
    queue_sizes: tuple[int, ...]  # |f_r| per slot at decision time
    served_dests: tuple[int, ...]
    phase1_refills: list[tuple[int, int]]  # (slot, deadline at creation)
    phase3_refills: list[tuple[int, int]]

    @property
    def kind(self) -> str:
        if isinstance(self.executed, CodedMerge):
            return "coded"
        if isinstance(self.executed, ErasedMerge):
            return "erased"
        return "unicast"


class SimState:
    """Full simulator state for one episode. Single-writer; use
    :func:`clone_env` to branch."""

    __slots__ = ("cfg", "queue", "caches", "step_count", "rng", "merge_set",
                 "next_request_id", "next_insertion_order", "files_served",
                 "completed_ids", "missed_ids", "seed")

    def __init__(self, cfg: SystemConfig, queue: list[QueueRecord],
                 caches: CacheAssignment, rng: RngStream, seed: int,
                 next_request_id: int):
        self.cfg = cfg
        self.queue = queue
        self.caches = caches
        self.step_count = 0
        self.rng = rng
        self.seed = seed
        self.next_request_id = next_request_id
        self.next_insertion_order = next_request_id
        self.files_served: set[int] = set()
        self.completed_ids: set[int] = set()
        self.missed_ids: set[int] = set()
        self.merge_set: list[tuple[int, int]] = enumerate_merges_of(queue)

    @property
    def done(self) -> bool:
        return self.step_count >= self.cfg.horizon


def make_episode(cfg: SystemConfig, seed: int) -> SimState:
    """Fresh episode: placement for caches 0..K-1, then queue slots 0..Q-1."""
    cfg.validate()
    rng = make_rng(seed)
    caches = place_caches(cfg, rng)
    queue = [gen_request(cfg, caches, rng, next_id=i, insertion_order=i)
             for i in range(cfg.queue_depth)]
    return SimState(cfg, queue, caches, rng, seed, next_request_id=cfg.queue_depth)


def enumerate_merges_of(queue: list[QueueRecord]) -> list[tuple[int, int]]:
    """All feasible pairs (i, j), i < j, in lexicographic slot order.

    Feasibility of a pair demands that each destination caches the other
    record's whole packet set; because side_info is maintained exactly,
    that reduces to mutual side-info membership.
    """
    out = []
    q = queue
    n = len(q)
    for i in range(n - 1):
        ri = q[i]
        si = ri.side_info
        for j in range(i + 1, n):
            rj = q[j]
            if rj.dest in si and ri.dest in rj.side_info:
                out.append((i, j))
    return out


def enumerate_merges(state: SimState) -> list[tuple[int, int]]:
    return enumerate_merges_of(state.queue)


def pair_degrees(queue_len: int, merge_set: list[tuple[int, int]]) -> list[int]:
    """Feasible-partner count per slot under the current merge set."""
    deg = [0] * queue_len
    for i, j in merge_set:
        deg[i] += 1
        deg[j] += 1
    return deg


def action_mask(state: SimState) -> list[bool]:
    return mask_for(len(state.merge_set), state.cfg.max_pairs)


def mask_for(n_pairs: int, max_pairs: int) -> list[bool]:
    """Bit a is valid iff a//2 indexes an existing pair; unicast always valid."""
    mask = [False] * (2 * max_pairs + 1)
    for a in range(2 * n_pairs):
        mask[a] = True
    mask[2 * max_pairs] = True
    return mask


def decode_action(action: int, max_pairs: int) -> tuple[int, int]:
    """(pair index, keep bit); pair index == max_pairs means unicast."""
    if not 0 <= action <= 2 * max_pairs:
        raise ValueError(f"action {action} outside 0..{2 * max_pairs}")
    return action // 2, action % 2


def is_feasible(r_i: QueueRecord, r_j: QueueRecord) -> bool:
    return r_j.dest in r_i.side_info and r_i.dest in r_j.side_info


def merge_records(r_i: QueueRecord, r_j: QueueRecord, keep_bit: int,
                  rng: RngStream) -> QueueRecord:
    """Merged aggregate of a feasible pair.

    Union the packet sets, take the tighter deadline, intersect the side
    information, and draw the representative destination uniformly from the
    two endpoints, independent of the keep side. The keep bit only decides
    which slot the caller stores this record in.
    """
    if not is_feasible(r_i, r_j):
        raise InfeasibleMergeError(
            f"pair not mutually decodable: dests ({r_i.dest}, {r_j.dest}), "
            f"side info ({sorted(r_i.side_info)}, {sorted(r_j.side_info)})")
    dest = r_i.dest if rng.integers(0, 2) == 0 else r_j.dest
    return QueueRecord(
        dest=dest,
        packet_set=r_i.packet_set | r_j.packet_set,
        deadline=min(r_i.deadline, r_j.deadline),
        side_info=r_i.side_info & r_j.side_info,
        annotations=r_i.annotations | r_j.annotations,
        insertion_order=min(r_i.insertion_order, r_j.insertion_order),
    )


def potential(state: SimState) -> float:
    """Fraction of all queue pairs currently feasible, in [0, 1]."""
    return len(state.merge_set) / state.cfg.max_pairs


def shaping_reward(phi_before: float, phi_after: float) -> float:
    return W_PHI * (GAMMA_PHI * phi_after - phi_before)


def _fresh_request(state: SimState) -> QueueRecord:
    rec = gen_request(state.cfg, state.caches, state.rng,
                      next_id=state.next_request_id,
                      insertion_order=state.next_insertion_order)
    state.next_request_id += 1
    state.next_insertion_order += 1
    return rec


def edf_slot(queue: list[QueueRecord]) -> int:
    """Earliest-deadline slot, ties to the smallest slot index."""
    return min(range(len(queue)), key=lambda s: (queue[s].deadline, s))


def step(state: SimState, action: int) -> tuple[StepOutcome, SimState]:
    """Advance one transition in place; returns the outcome and the state.

    A coded action whose pair index exceeds the current merge set falls
    through to the unicast branch (masks forbid it, so well-behaved
    policies never exercise the fall-through).
    """
    cfg = state.cfg
    if state.done:
        raise EpisodeFinishedError(f"episode ended at step {cfg.horizon}")

    merge_set = state.merge_set
    n_pairs = len(merge_set)
    queue_sizes = tuple(r.size() for r in state.queue)
    phi_before = n_pairs / cfg.max_pairs
    pair_idx, keep_bit = decode_action(action, cfg.max_pairs)

    phase1_refills: list[tuple[int, int]] = []
    tx_annotations: frozenset[int] = frozenset()
    quality = 0.0

    # Phase 1: transmission. Refills here happen before the decrement.
    if action != cfg.unicast_action and pair_idx < n_pairs:
        i, j = merge_set[pair_idx]
        erased = cfg.erasure_prob > 0.0 and state.rng.random() < cfg.erasure_prob
        if erased:
            executed: Executed = ErasedMerge(pair=(i, j))
            u = 0
            served_dests: tuple[int, ...] = ()
        else:
            r_i, r_j = state.queue[i], state.queue[j]
            served_dests = (r_i.dest, r_j.dest)
            merged = merge_records(r_i, r_j, keep_bit, state.rng)
            kept, freed = (i, j) if keep_bit == 0 else (j, i)
            state.queue[kept] = merged
            refill = _fresh_request(state)
            state.queue[freed] = refill
            phase1_refills.append((freed, refill.deadline))
            executed = CodedMerge(pair=(i, j), keep_bit=keep_bit, merged_record=merged)
            u = merged.size()
            tx_annotations = merged.annotations
            state.files_served.update(file_ids(merged.packet_set, cfg))
            quality = W_INTER * len(merged.side_info) - W_UNION * max(0, u - 2)
    else:
        slot = edf_slot(state.queue)
        served = state.queue[slot]
        served_dests = (served.dest,)
        refill = _fresh_request(state)
        state.queue[slot] = refill
        phase1_refills.append((slot, refill.deadline))
        executed = Unicast(slot=slot, record=served)
        u = 1
        tx_annotations = served.annotations
        state.files_served.update(file_ids(served.packet_set, cfg))

    # Phase 2: decrement every deadline, phase-1 refills included.
    for rec in state.queue:
        rec.deadline -= 1

    # Phase 3: expire at deadline <= 0, then refill those slots.
    expired_records: list[QueueRecord] = []
    phase3_refills: list[tuple[int, int]] = []
    exp_annotations: set[int] = set()
    e = 0
    for slot, rec in enumerate(state.queue):
        if rec.deadline <= 0:
            expired_records.append(rec)
            e += rec.size()
            exp_annotations.update(rec.annotations)
            refill = _fresh_request(state)
            state.queue[slot] = refill
            phase3_refills.append((slot, refill.deadline))

    # Request-ledger update: completions first, then misses, each id once.
    newly_completed = tx_annotations - state.completed_ids - state.missed_ids
    state.completed_ids.update(newly_completed)
    newly_missed = frozenset(exp_annotations) - state.completed_ids - state.missed_ids
    state.missed_ids.update(newly_missed)

    state.merge_set = enumerate_merges_of(state.queue)
    phi_after = len(state.merge_set) / cfg.max_pairs

    reward = RewardComponents(
        base=W_SERVED * u - W_EXPIRED * e,
        quality=quality,
        shape=shaping_reward(phi_before, phi_after),
    )
    outcome = StepOutcome(
        step=state.step_count,
        action=action,
        executed=executed,
        u=u,
        e=e,
        expired_records=expired_records,
        reward=reward,
        newly_completed=newly_completed,
        newly_missed=newly_missed,
        mask_next=mask_for(len(state.merge_set), cfg.max_pairs),
        n_pairs=n_pairs,
        queue_sizes=queue_sizes,
        served_dests=served_dests,
        phase1_refills=phase1_refills,
        phase3_refills=phase3_refills,
    )
    state.step_count += 1
    return outcome, state


def clone_env(state: SimState) -> SimState:
    """Independent copy: queue records, ledgers, and the RNG state are
    duplicated, so identical action sequences replay identical traces."""
    dup = SimState.__new__(SimState)
    dup.cfg = state.cfg
    dup.queue = [r.copy() for r in state.queue]
    dup.caches = state.caches  # immutable, safe to share
    dup.step_count = state.step_count
    dup.rng = state.rng.clone()
    dup.seed = state.seed
    dup.next_request_id = state.next_request_id
    dup.next_insertion_order = state.next_insertion_order
    dup.files_served = set(state.files_served)
    dup.completed_ids = set(state.completed_ids)
    dup.missed_ids = set(state.missed_ids)
    dup.merge_set = list(state.merge_set)
    return dup


@dataclass
class OneGapResult:
    ok: bool
    gap_packet: int | None
    missing: tuple[int, ...]   # packets the representative lacks
    record: QueueRecord


def check_one_gap(record: QueueRecord, caches: CacheAssignment) -> OneGapResult:
    """Verify the aggregate invariant: the representative destination caches
    every packet in the record except exactly one (its own original demand).

    Holds for every record the engine produces, fresh or chained; a failure
    returns the offending packets as a witness.
    """
    cache = caches.contents[record.dest]
    missing = tuple(sorted(p for p in record.packet_set if p not in cache))
    if len(missing) == 1:
        return OneGapResult(True, missing[0], missing, record)
    return OneGapResult(False, None, missing, record)


def run_episode(state: SimState, policy, on_step=None) -> list[StepOutcome]:
    """Drive a policy to the horizon; optional per-step callback."""
    outcomes = []
    while not state.done:
        action = policy(state)
        outcome, state = step(state, action)
        outcomes.append(outcome)
        if on_step is not None:
            on_step(outcome, state)
    return outcomes
