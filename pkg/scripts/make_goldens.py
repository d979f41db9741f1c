"""Regenerate the golden files under tests/data.

Run only when an intentional behavior change invalidates them; review the
diff before committing.
"""

import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from mergecast.config import SystemConfig
from mergecast.engine import make_episode, run_episode
from mergecast.metrics import EpisodeMetrics, accumulate, finalize
from mergecast.observation import encode
from mergecast.policies import get_policy
from mergecast.rng import episode_seed, make_rng
from mergecast.trace import write_trace

DATA = os.path.join(os.path.dirname(__file__), "..", "tests", "data")


def golden_rng():
    r = make_rng(0)
    out = {
        "integers": [r.integers(0, 1_000_000) for _ in range(50)],
        "floats": [r.random() for _ in range(25)],
        "permutation": r.permutation(25).tolist(),
    }
    with open(os.path.join(DATA, "golden_rng.json"), "w") as fh:
        json.dump(out, fh, indent=1)


def golden_observation():
    cfg = SystemConfig()
    state = make_episode(cfg, episode_seed(50, 0))
    rows = {}
    for track in ("A", "B"):
        obs = encode(state, track)
        rows[track] = {
            "request_features": obs.request_features.tolist(),
            "pair_features": obs.pair_features.tolist(),
            "mask": [int(b) for b in obs.mask],
            "flat_prefix": obs.flat()[:40].tolist(),
        }
    with open(os.path.join(DATA, "golden_obs.json"), "w") as fh:
        json.dump(rows, fh, indent=1)


def golden_trace():
    cfg = SystemConfig()
    seed = episode_seed(50, 0)
    state = make_episode(cfg, seed)
    acc = EpisodeMetrics(cfg)
    outcomes = run_episode(state, get_policy("ed-unicast"),
                           on_step=lambda o, s: accumulate(acc, o))
    write_trace(os.path.join(DATA, "golden_trace_ed_unicast.txt"),
                cfg, seed, outcomes, finalize(acc))


if __name__ == "__main__":
    os.makedirs(DATA, exist_ok=True)
    golden_rng()
    golden_observation()
    golden_trace()
    print(f"wrote goldens to {DATA}")
