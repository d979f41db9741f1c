"""Bounded feature tensors for external policy consumption.

Two tracks share the layout; track B appends popularity-mass features for
skewed demand. Every entry lies in [0, 1]. Pair rows follow the merge-set
enumeration order and are zero-padded past the feasible count, so row
``a // 2`` of the pair tensor always describes the pair a coded action
``a`` would merge.

The aggregate-size features clip at SIZE_CLIP packets. That clip exists
only here; the transition itself never caps packet-set growth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .core import pop_mass
from .engine import SimState, action_mask, pair_degrees

SIZE_CLIP = 6


def request_width(cfg: SystemConfig, track: str) -> int:
    base = 2 * cfg.n_caches + 3
    return base + 1 if track == "B" else base


def pair_width(track: str) -> int:
    return 11 if track == "B" else 8


@dataclass
class Observation:
    request_features: np.ndarray  # (Q, d_req)
    pair_features: np.ndarray     # (max_pairs, d_pair), zero-padded
    mask: np.ndarray              # (2 * max_pairs + 1,) bool

    def flat(self) -> np.ndarray:
        """Row-major concatenation of both matrices (bridge/dataset layout)."""
        return np.concatenate([self.request_features.ravel(),
                               self.pair_features.ravel()])


def _mass_cap(cfg: SystemConfig) -> float:
    # Mass of a size-SIZE_CLIP aggregate made entirely of the top file.
    return SIZE_CLIP * float(cfg.file_probs()[0])


def encode(state: SimState, track: str = "A") -> Observation:
    """Feature tensors for the current state.

    Per request: one-hot destination, side-info flags, deadline / D,
    clipped packet-set size, merge degree / (Q - 1); track B adds clipped
    popularity mass. Per pair: intersection / K, the two endpoint degrees,
    min deadline / D, the two clipped sizes, the two normalized slot
    indices; track B adds three clipped popularity masses.
    """
    if track not in ("A", "B"):
        raise ValueError(f"track must be 'A' or 'B', got {track!r}")
    cfg = state.cfg
    k, q, d = cfg.n_caches, cfg.queue_depth, cfg.max_deadline
    merge_set = state.merge_set
    deg = pair_degrees(q, merge_set)
    cap = _mass_cap(cfg) if track == "B" else 0.0

    req = np.zeros((q, request_width(cfg, track)), dtype=np.float64)
    for s, rec in enumerate(state.queue):
        req[s, rec.dest] = 1.0
        for c in rec.side_info:
            req[s, k + c] = 1.0
        req[s, 2 * k] = rec.deadline / d
        req[s, 2 * k + 1] = min(rec.size(), SIZE_CLIP) / SIZE_CLIP
        req[s, 2 * k + 2] = deg[s] / (q - 1)
        if track == "B":
            req[s, 2 * k + 3] = min(pop_mass(rec.packet_set, cfg), cap) / cap

    pair = np.zeros((cfg.max_pairs, pair_width(track)), dtype=np.float64)
    for row, (i, j) in enumerate(merge_set):
        ri, rj = state.queue[i], state.queue[j]
        pair[row, 0] = len(ri.side_info & rj.side_info) / k
        pair[row, 1] = deg[i] / (q - 1)
        pair[row, 2] = deg[j] / (q - 1)
        pair[row, 3] = min(ri.deadline, rj.deadline) / d
        pair[row, 4] = min(ri.size(), SIZE_CLIP) / SIZE_CLIP
        pair[row, 5] = min(rj.size(), SIZE_CLIP) / SIZE_CLIP
        pair[row, 6] = i / (q - 1)
        pair[row, 7] = j / (q - 1)
        if track == "B":
            pair[row, 8] = min(pop_mass(ri.packet_set, cfg), cap) / cap
            pair[row, 9] = min(pop_mass(rj.packet_set, cfg), cap) / cap
            union_mass = pop_mass(ri.packet_set | rj.packet_set, cfg)
            pair[row, 10] = min(union_mass, cap) / cap

    mask = np.array(action_mask(state), dtype=bool)
    return Observation(req, pair, mask)


def clip_rate(queue_sizes_histogram: dict[int, int]) -> float:
    """Fraction of observed records at or past the size clip."""
    total = sum(queue_sizes_histogram.values())
    if total == 0:
        return 0.0
    clipped = sum(c for size, c in queue_sizes_histogram.items() if size >= SIZE_CLIP)
    return clipped / total
