"""Rollout-improved lookahead teacher.

For each decision the teacher keeps the best-ranked feasible pairs, expands
both keep sides plus the always-included unicast fallback, and scores every
candidate by cloned-environment Monte-Carlo rollouts of a continuation
policy under common random numbers: for a fixed rollout index, every
candidate's clone is reseeded with the same derived value before the
candidate action executes, so candidate-vs-candidate comparisons are paired
draw-for-draw.

An optional value callback bootstraps the rollout tail (the self-improving
labeler variant); without it the score is the plain truncated discounted
return of the shaped reward.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .engine import SimState, clone_env, make_episode, pair_degrees, step
from .observation import encode
from .policies import Policy, get_policy
from .rng import make_rng, mix64


@dataclass
class PlannerConfig:
    top_k_pairs: int = 16
    lookahead_depth: int = 4
    mc_seeds: int = 4
    discount: float = 0.995
    continuation_policy: Policy = field(default_factory=lambda: get_policy("sacm++"))
    value_fn: object | None = None  # callable SimState -> float
    track: str = "A"

    def validate(self) -> "PlannerConfig":
        if self.top_k_pairs < 1:
            raise ValueError("top_k_pairs must be at least 1")
        if self.lookahead_depth < 0:
            raise ValueError("lookahead_depth must be nonnegative")
        if self.mc_seeds < 1:
            raise ValueError("mc_seeds must be at least 1")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must lie in (0, 1]")
        return self


# Defaults used when labeling with a critic bootstrap instead of plain
# rollouts: shallower pre-filter, deeper lookahead, fewer seeds.
def bootstrap_config(value_fn, **kwargs) -> PlannerConfig:
    base = dict(top_k_pairs=12, lookahead_depth=5, mc_seeds=3, value_fn=value_fn)
    base.update(kwargs)
    return PlannerConfig(**base).validate()


def rank_pairs(state: SimState, top_k: int | None = None) -> list[tuple[int, int]]:
    """Feasible pairs sorted by the raw merge score, best first.

    Key: intersection size, then urgency (smaller min deadline first), then
    combined degree, then earliest enumeration position on full ties.
    Truncated to top_k when given.
    """
    deg = pair_degrees(state.cfg.queue_depth, state.merge_set)

    def key(item):
        idx, (i, j) = item
        ri, rj = state.queue[i], state.queue[j]
        return (len(ri.side_info & rj.side_info),
                -min(ri.deadline, rj.deadline),
                deg[i] + deg[j],
                -idx)

    ranked = sorted(enumerate(state.merge_set), key=key, reverse=True)
    pairs = [pair for _, pair in ranked]
    return pairs if top_k is None else pairs[:top_k]


def build_candidates(state: SimState, cfg: PlannerConfig) -> list[int]:
    """Candidate actions: both keep sides of each retained pair in
    (i, j, keep) lexicographic order, unicast last, mask-feasible only."""
    retained = set(rank_pairs(state, cfg.top_k_pairs))
    pair_index = {pair: idx for idx, pair in enumerate(state.merge_set)}
    actions = []
    for pair in state.merge_set:      # enumeration order is lexicographic
        if pair in retained:
            idx = pair_index[pair]
            actions.append(2 * idx)
            actions.append(2 * idx + 1)
    actions.append(state.cfg.unicast_action)
    return actions


def rollout_seed(state: SimState, mc_index: int) -> int:
    """Derived reseed value for one Monte-Carlo rollout: a fixed function of
    the episode seed, the step index, and the rollout index, so all
    candidates at one decision share streams per rollout index."""
    return mix64(state.seed, state.step_count, mc_index)


def score_candidate(state: SimState, action: int, cfg: PlannerConfig) -> float:
    """Mean discounted shaped return of the action over the rollout seeds.

    Each rollout clones the state, reseeds the clone, plays the action, and
    follows the continuation policy for the lookahead depth (truncating at
    the horizon). The value callback, when present, adds a bootstrap term
    only when the rollout ran its full depth.
    """
    total = 0.0
    for m in range(cfg.mc_seeds):
        clone = clone_env(state)
        clone.rng = make_rng(rollout_seed(state, m))
        outcome, clone = step(clone, action)
        ret = outcome.reward.total
        gamma = 1.0
        steps_done = 0
        for _ in range(cfg.lookahead_depth):
            if clone.done:
                break
            gamma *= cfg.discount
            cont_action = cfg.continuation_policy(clone)
            outcome, clone = step(clone, cont_action)
            ret += gamma * outcome.reward.total
            steps_done += 1
        if cfg.value_fn is not None and steps_done == cfg.lookahead_depth:
            ret += (cfg.discount ** cfg.lookahead_depth) * cfg.value_fn(clone)
        total += ret
    return total / cfg.mc_seeds


def teacher_label(state: SimState, cfg: PlannerConfig) -> int:
    """Argmax candidate under the rollout score; ties keep the earlier
    candidate in enumeration order."""
    best_action, best_score = None, None
    for action in build_candidates(state, cfg):
        score = score_candidate(state, action, cfg)
        if best_score is None or score > best_score:
            best_action, best_score = action, score
    return best_action


def emit_bc_dataset(n_samples: int, cfg: PlannerConfig, master_seed: int,
                    path: str, system_cfg=None, expert_mix: float = 0.0,
                    rollin_policy: Policy | None = None) -> int:
    """Roll the teacher over fresh episodes and write labeled states.

    One JSON object per line: ``obs`` (row-major flat observation), ``mask``
    (0/1 ints), ``label`` (action). The roll-in action is the teacher's own
    label, optionally mixed with an expert policy at the given rate (the
    mixing coin and episode seeds come from streams derived from
    master_seed, never from the episode's own stream).
    """
    from .config import SystemConfig

    cfg.validate()
    sys_cfg = system_cfg if system_cfg is not None else SystemConfig()
    mix_rng = make_rng(mix64(master_seed, 0x6D6978))  # "mix"
    written = 0
    episode_index = 0
    with open(path, "w", encoding="utf-8") as fh:
        while written < n_samples:
            state = make_episode(sys_cfg, mix64(master_seed, episode_index))
            episode_index += 1
            while not state.done and written < n_samples:
                label = teacher_label(state, cfg)
                obs = encode(state, cfg.track)
                record = {
                    "obs": [float(v) for v in obs.flat()],
                    "mask": [int(b) for b in obs.mask],
                    "label": int(label),
                }
                fh.write(json.dumps(record) + "\n")
                written += 1
                action = label
                if expert_mix > 0.0 and mix_rng.random() < expert_mix:
                    action = cfg.continuation_policy(state)
                elif rollin_policy is not None:
                    action = rollin_policy(state)
                _, state = step(state, action)
    return written
