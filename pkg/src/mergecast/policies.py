"""Baseline schedulers.

All baselines are deterministic functions of the state: given the same
queue and merge set they return the same action, and the returned action is
always mask-valid. External (e.g. learned) policies plug in through
:func:`register_external`.
"""

from __future__ import annotations

from .core import QueueRecord, pop_mass
from .engine import SimState, pair_degrees
from .errors import ConfigError


class Policy:
    """Named decision function ``SimState -> action``."""

    def __init__(self, name: str, fn):
        self.name = name
        self._fn = fn

    def __call__(self, state: SimState) -> int:
        return self._fn(state)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Policy({self.name})"


def _coded_action(state: SimState, pair_idx: int, keep_bit: int) -> int:
    return 2 * pair_idx + keep_bit


def ed_unicast(state: SimState) -> int:
    """Always defer to the earliest-deadline unicast."""
    return state.cfg.unicast_action


def gcm(state: SimState) -> int:
    """Greedy: first feasible pair, keep the left endpoint."""
    if state.merge_set:
        return _coded_action(state, 0, 0)
    return state.cfg.unicast_action


def best_pair_index(state: SimState, key_fn) -> int:
    """Index of the pair maximizing key_fn; ties resolve to the earliest
    enumeration position (the scan keeps strictly greater keys only)."""
    best, best_key = 0, None
    for idx, (i, j) in enumerate(state.merge_set):
        key = key_fn(state.queue[i], state.queue[j], i, j)
        if best_key is None or key > best_key:
            best, best_key = idx, key
    return best


def _degree_keep_bit(deg_i: int, deg_j: int) -> int:
    # Keep the higher-degree endpoint; ties keep the left one.
    return 1 if deg_j > deg_i else 0


def sacm_family(state: SimState, variant: str) -> int:
    """Intersection-maximizing family. Variants differ in the sort key and
    the keep-side rule:

    * ``sacm``: max intersection, always keep the left endpoint.
    * ``sacm+``: max intersection, keep the higher-degree endpoint.
    * ``sacm++``: key (intersection, -min deadline), degree-aware keep.
    * ``sacm++pop``: key (intersection, popularity mass of the union,
      -min deadline), keep side by degree + twice the endpoint mass.
    """
    if not state.merge_set:
        return state.cfg.unicast_action
    cfg = state.cfg
    deg = pair_degrees(cfg.queue_depth, state.merge_set)

    if variant == "sacm":
        idx = best_pair_index(state, lambda ri, rj, i, j: len(ri.side_info & rj.side_info))
        return _coded_action(state, idx, 0)
    if variant == "sacm+":
        idx = best_pair_index(state, lambda ri, rj, i, j: len(ri.side_info & rj.side_info))
        i, j = state.merge_set[idx]
        return _coded_action(state, idx, _degree_keep_bit(deg[i], deg[j]))
    if variant == "sacm++":
        idx = best_pair_index(
            state,
            lambda ri, rj, i, j: (len(ri.side_info & rj.side_info),
                                  -min(ri.deadline, rj.deadline)))
        i, j = state.merge_set[idx]
        return _coded_action(state, idx, _degree_keep_bit(deg[i], deg[j]))
    if variant == "sacm++pop":
        idx = best_pair_index(
            state,
            lambda ri, rj, i, j: (len(ri.side_info & rj.side_info),
                                  pop_mass(ri.packet_set | rj.packet_set, cfg),
                                  -min(ri.deadline, rj.deadline)))
        i, j = state.merge_set[idx]
        ri, rj = state.queue[i], state.queue[j]
        keep = 0 if deg[i] + 2 * pop_mass(ri.packet_set, cfg) >= \
            deg[j] + 2 * pop_mass(rj.packet_set, cfg) else 1
        return _coded_action(state, idx, keep)
    raise ValueError(f"unknown variant {variant!r}")


def misfit(r_i: QueueRecord, r_j: QueueRecord) -> int:
    """Side-info providers of each record that the other's decode does not
    cover; 0 means a perfect mutual fit."""
    left = r_i.side_info - r_j.side_info - {r_j.dest}
    right = r_j.side_info - r_i.side_info - {r_i.dest}
    return len(left) + len(right)


def tau_fit(state: SimState, tau: int) -> int:
    """Threshold rule: take the earliest-deadline record as anchor, scan the
    rest in (deadline, slot) order, and merge with the first feasible
    candidate whose misfit is at most tau; otherwise unicast.

    Keep side is degree-aware: the higher-degree endpoint stays, and a tie
    keeps the scanned candidate.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if not state.merge_set:
        return state.cfg.unicast_action
    order = sorted(range(len(state.queue)),
                   key=lambda s: (state.queue[s].deadline, s))
    anchor = order[0]
    pair_index = {pair: idx for idx, pair in enumerate(state.merge_set)}
    deg = pair_degrees(state.cfg.queue_depth, state.merge_set)
    r_a = state.queue[anchor]
    for cand in order[1:]:
        pair = (anchor, cand) if anchor < cand else (cand, anchor)
        idx = pair_index.get(pair)
        if idx is None:
            continue
        r_c = state.queue[cand]
        if misfit(r_a, r_c) <= tau:
            keep_slot = anchor if deg[anchor] > deg[cand] else cand
            keep_bit = 0 if keep_slot == pair[0] else 1
            return _coded_action(state, idx, keep_bit)
    return state.cfg.unicast_action


_EXTERNAL: dict[str, Policy] = {}


def register_external(name: str, fn) -> Policy:
    """Expose a caller-supplied decision function under ``external:<name>``."""
    policy = Policy(f"external:{name}", fn)
    _EXTERNAL[name] = policy
    return policy


def get_policy(name: str) -> Policy:
    """Resolve a registry name.

    Known names: ed-unicast, gcm, sacm, sacm+, sacm++, sacm++pop,
    taufit:<n>, perfect-fit (alias taufit:0), first-fit (alias taufit:3),
    external:<name> for registered callables.
    """
    n = name.strip().lower()
    if n == "ed-unicast":
        return Policy(name, ed_unicast)
    if n == "gcm":
        return Policy(name, gcm)
    if n in ("sacm", "sacm+", "sacm++", "sacm++pop"):
        return Policy(name, lambda s, v=n: sacm_family(s, v))
    if n.startswith("taufit:"):
        tau = int(n.split(":", 1)[1])
        return Policy(name, lambda s, t=tau: tau_fit(s, t))
    if n == "perfect-fit":
        return Policy(name, lambda s: tau_fit(s, 0))
    if n == "first-fit":
        return Policy(name, lambda s: tau_fit(s, 3))
    if n.startswith("external:"):
        key = n.split(":", 1)[1]
        if key not in _EXTERNAL:
            raise ConfigError(f"no external policy registered under {key!r}")
        return _EXTERNAL[key]
    raise ConfigError(f"unknown policy {name!r}")


BASELINE_NAMES = ["ed-unicast", "gcm", "sacm", "sacm+", "sacm++",
                  "taufit:0", "taufit:1", "taufit:2", "taufit:3"]
