"""Deterministic simulator and evaluation suite for deadline-constrained
XOR merge multicast scheduling."""

from .config import (MandelbrotZipf, REGIMES, SystemConfig, Uniform, Zipf,
                     load_config, parse_config_text, regime_config)
from .core import CacheAssignment, QueueRecord, gen_request, place_caches, pop_mass
from .engine import (CodedMerge, ErasedMerge, SimState, StepOutcome, Unicast,
                     action_mask, check_one_gap, clone_env, enumerate_merges,
                     make_episode, merge_records, potential, run_episode,
                     shaping_reward, step)
from .metrics import EpisodeMetrics, accumulate, finalize
from .observation import Observation, encode
from .planner import (PlannerConfig, build_candidates, emit_bc_dataset,
                      rank_pairs, score_candidate, teacher_label)
from .policies import Policy, get_policy, misfit, register_external
from .rng import RngStream, episode_seed, make_rng

__version__ = "0.1.0"
