import os

from mergecast.config import SystemConfig
from mergecast.engine import make_episode, run_episode
from mergecast.metrics import EpisodeMetrics, accumulate, finalize
from mergecast.policies import get_policy
from mergecast.rng import episode_seed
from mergecast.trace import parse_trace, step_line, write_trace

DATA = os.path.join(os.path.dirname(__file__), "data")


def _traced_episode(tmp_path, policy="sacm++", verbose=False, seed=None):
    cfg = SystemConfig()
    seed = seed if seed is not None else episode_seed(50, 1)
    state = make_episode(cfg, seed)
    acc = EpisodeMetrics(cfg)
    outs = run_episode(state, get_policy(policy),
                       on_step=lambda o, s: accumulate(acc, o))
    path = str(tmp_path / "trace.txt")
    write_trace(path, cfg, seed, outs, finalize(acc), verbose=verbose)
    return cfg, outs, path


def test_roundtrip(tmp_path):
    cfg, outs, path = _traced_episode(tmp_path)
    parsed = parse_trace(path)
    assert len(parsed["steps"]) == cfg.horizon
    for o, s in zip(outs, parsed["steps"]):
        assert s["step"] == o.step
        assert s["action"] == o.action
        assert s["kind"] == o.kind
        assert s["u"] == o.u and s["e"] == o.e
        assert s["total"] == o.reward.total  # repr round-trips exactly
        assert s["n_pairs"] == o.n_pairs
    ep = parsed["episode"]
    assert ep["sigma"] * cfg.horizon == ep["sum_u"] - ep["sum_e"]
    assert isinstance(ep["served_by_cache"], list)


def test_verbose_appends_id_lists(tmp_path):
    cfg, outs, path = _traced_episode(tmp_path, verbose=True)
    with open(path) as fh:
        s_lines = [l for l in fh if l.startswith("S ")]
    assert all(len(l.split(" ")) == 18 for l in s_lines)


def test_field_order_is_stable():
    cfg = SystemConfig()
    state = make_episode(cfg, episode_seed(50, 2))
    outs = run_episode(state, get_policy("ed-unicast"))
    line = step_line(outs[0])
    parts = line.split(" ")
    assert parts[0] == "S" and parts[3] == "unicast"
    assert len(parts) == 16


def test_golden_trace_locked():
    """Full-episode determinism lock: placement, queue draws, transition
    order, and reward text all frozen."""
    cfg = SystemConfig()
    seed = episode_seed(50, 0)
    state = make_episode(cfg, seed)
    acc = EpisodeMetrics(cfg)
    outs = run_episode(state, get_policy("ed-unicast"),
                       on_step=lambda o, s: accumulate(acc, o))
    from mergecast.trace import episode_line, header_lines, step_line as sl
    lines = header_lines(cfg, seed)
    lines += [sl(o) for o in outs]
    lines.append(episode_line(finalize(acc)))
    with open(os.path.join(DATA, "golden_trace_ed_unicast.txt")) as fh:
        golden = fh.read().splitlines()
    assert lines == golden
