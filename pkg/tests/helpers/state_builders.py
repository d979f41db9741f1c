"""Shared state construction helpers for the test suite."""

from __future__ import annotations

import pytest

from mergecast.config import SystemConfig
from mergecast.core import CacheAssignment, QueueRecord
from mergecast.engine import SimState, make_episode, step
from mergecast.rng import make_rng, mix64

SMALL_CFG = SystemConfig(n_files=30, subfiles_per_file=4, n_caches=4,
                         queue_depth=6, max_deadline=12, horizon=25,
                         cache_fraction=0.35)


def stepped_state(seed: int, n_steps: int = 0, cfg: SystemConfig | None = None,
                  merge_bias: float = 0.75) -> SimState:
    """Episode advanced by random mask-valid actions (its own driver rng)."""
    cfg = cfg or SMALL_CFG
    state = make_episode(cfg, seed)
    driver = make_rng(mix64(seed, 0x57E9))
    for _ in range(min(n_steps, cfg.horizon)):
        n = len(state.merge_set)
        if n > 0 and driver.random() < merge_bias:
            action = driver.integers(0, 2 * n)
        else:
            action = cfg.unicast_action
        _, state = step(state, action)
    return state


def manual_state(records: list[QueueRecord], caches: CacheAssignment,
                 cfg: SystemConfig, seed: int = 0) -> SimState:
    """State with a hand-built queue (records must match queue_depth)."""
    assert len(records) == cfg.queue_depth
    state = SimState(cfg, records, caches, make_rng(seed), seed,
                     next_request_id=max(
                         (max(r.annotations) for r in records), default=-1) + 1)
    return state


def record(dest: int, packets, deadline: int, side, rid: int,
           order: int | None = None) -> QueueRecord:
    return QueueRecord(dest=dest, packet_set=frozenset(packets),
                       deadline=deadline, side_info=frozenset(side),
                       annotations=frozenset((rid,)),
                       insertion_order=order if order is not None else rid)


class StubRng:
    """Scripted stand-in for RngStream where tests pin specific draws."""

    def __init__(self, ints=(), floats=()):
        self._ints = list(ints)
        self._floats = list(floats)
        self.draw_counter = 0

    def integers(self, low, high):
        self.draw_counter += 1
        v = self._ints.pop(0)
        assert low <= v < high
        return v

    def random(self, size=None):
        self.draw_counter += 1
        return self._floats.pop(0)


@pytest.fixture
def small_cfg():
    return SMALL_CFG
