"""Episodic RL environment over the mergecast engine.

Implements the de-facto episodic-environment protocol of the 5-tuple step
era: ``reset(seed) -> (observation, info)``, ``step(action) ->
(observation, reward, terminated, truncated, info)``, plus the
``action_masks()`` query used by maskable policy-gradient stacks. The class
is API-compatible with Gymnasium >= 0.29 environments without importing
the library; wrap it in ``gymnasium.Env`` subclass shims if a registry
entry is needed.

Observations are a dict of two contiguous row-major float64 matrices:

* ``requests``: one row per queue slot (width 2K+3, track A, or 2K+4,
  track B),
* ``pairs``: one row per feasible merge pair in enumeration order,
  zero-padded to the pair capacity (width 8 or 11).

Episodes never terminate early; ``truncated`` flips to True exactly at the
horizon, and the closing ``info`` carries the full episode metric map.
"""

from __future__ import annotations

import numpy as np

from mergecast.config import SystemConfig, load_config
from mergecast.engine import action_mask, make_episode, step
from mergecast.metrics import EpisodeMetrics, accumulate, finalize
from mergecast.observation import encode, pair_width, request_width

__all__ = ["BridgeEnv"]
__version__ = "0.1.0"


class BridgeEnv:
    """One engine state behind the reset/step/mask protocol.

    Single-threaded like the engine itself; run independent instances for
    parallel data collection. Construction is cheap and the instance holds
    no state besides the current episode, so tearing one down and building
    another between episodes changes nothing.
    """

    def __init__(self, config: SystemConfig | str | None = None,
                 track: str = "A"):
        if isinstance(config, SystemConfig):
            self.config = config.validate()
        else:
            self.config = load_config(config)
        if track not in ("A", "B"):
            raise ValueError(f"track must be 'A' or 'B', got {track!r}")
        self.track = track
        self._state = None
        self._metrics = None

    # -- protocol ------------------------------------------------------------

    def reset(self, seed: int):
        """Fresh placement and full queue from the episode seed."""
        if not isinstance(seed, (int, np.integer)):
            raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
        self._state = make_episode(self.config, int(seed))
        self._metrics = EpisodeMetrics(self.config)
        return self._observe(), {"seed": int(seed)}

    def step(self, action: int):
        if self._state is None:
            raise RuntimeError("reset() must be called before step()")
        if self._state.done:
            raise RuntimeError("episode over; call reset() to start another")
        outcome, self._state = step(self._state, int(action))
        accumulate(self._metrics, outcome)
        truncated = self._state.done
        info = {
            "step_outcome": outcome,
            "kind": outcome.kind,
            "u": outcome.u,
            "e": outcome.e,
            "n_expired": len(outcome.expired_records),
            "n_pairs": outcome.n_pairs,
            "reward_base": outcome.reward.base,
            "reward_quality": outcome.reward.quality,
            "reward_shape": outcome.reward.shape,
            "newly_completed": len(outcome.newly_completed),
            "newly_missed": len(outcome.newly_missed),
        }
        if truncated:
            info["episode_metrics"] = finalize(self._metrics)
        return (self._observe(), outcome.reward.total, False, truncated, info)

    def action_masks(self) -> np.ndarray:
        if self._state is None:
            raise RuntimeError("reset() must be called before action_masks()")
        return np.array(action_mask(self._state), dtype=bool)

    # -- introspection ---------------------------------------------------------

    @property
    def observation_shapes(self) -> dict:
        cfg = self.config
        return {
            "requests": (cfg.queue_depth, request_width(cfg, self.track)),
            "pairs": (cfg.max_pairs, pair_width(self.track)),
        }

    @property
    def n_actions(self) -> int:
        return self.config.action_count

    def _observe(self) -> dict:
        obs = encode(self._state, self.track)
        return {
            "requests": np.ascontiguousarray(obs.request_features),
            "pairs": np.ascontiguousarray(obs.pair_features),
        }
