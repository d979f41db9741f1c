import json
import os

from mergecast.cli import main
from mergecast.rng import episode_seed


def run_cli(*argv):
    return main(list(argv))


def test_run_writes_trace_and_exits_zero(tmp_path, capsys):
    out = str(tmp_path / "t.txt")
    seed = episode_seed(50, 0)
    code = run_cli("run", "--policy", "ed-unicast", "--seed", str(seed),
                   "--out", out)
    assert code == 0
    with open(out) as fh:
        s_lines = [l for l in fh if l.startswith("S ")]
    assert len(s_lines) == 50
    assert all(" unicast " in l for l in s_lines)
    assert "rho" in capsys.readouterr().out


def test_alias_policies_produce_identical_trace_files(tmp_path):
    seed = str(episode_seed(50, 4))
    pairs = [("taufit:0", "perfect-fit"), ("taufit:3", "first-fit")]
    for a, b in pairs:
        pa, pb = str(tmp_path / "a.txt"), str(tmp_path / "b.txt")
        assert run_cli("run", "--policy", a, "--seed", seed, "--out", pa) == 0
        assert run_cli("run", "--policy", b, "--seed", seed, "--out", pb) == 0
        assert open(pa).read() == open(pb).read()


def test_malformed_config_exits_two(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n_fils = 10\n")
    code = run_cli("run", "--config", str(cfg), "--policy", "ed-unicast",
                   "--seed", "1")
    assert code == 2
    assert "n_fils" in capsys.readouterr().err


def test_unknown_policy_exits_two(capsys):
    assert run_cli("run", "--policy", "bogus", "--seed", "1") == 2


def test_config_file_applies(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("n_files = 20\nsubfiles_per_file = 4\nqueue_depth = 5\n"
                   "horizon = 10\nn_caches = 4\ncache_fraction = 0.4\n")
    out = str(tmp_path / "t.txt")
    code = run_cli("run", "--config", str(cfg), "--policy", "gcm",
                   "--seed", "7", "--out", out)
    assert code == 0
    with open(out) as fh:
        content = fh.read()
    assert "n_files=20" in content
    assert len([l for l in content.splitlines() if l.startswith("S ")]) == 10


def test_config_env_var(tmp_path, monkeypatch):
    cfg = tmp_path / "env.cfg"
    cfg.write_text("horizon = 5\n")
    monkeypatch.setenv("MERGECAST_CONFIG", str(cfg))
    out = str(tmp_path / "t.txt")
    assert run_cli("run", "--policy", "ed-unicast", "--seed", "3",
                   "--out", out) == 0
    with open(out) as fh:
        assert len([l for l in fh if l.startswith("S ")]) == 5


def test_regime_flag(tmp_path):
    out = str(tmp_path / "t.txt")
    assert run_cli("run", "--regime", "delay10", "--policy", "ed-unicast",
                   "--seed", "2", "--out", out) == 0
    assert "max_deadline=10" in open(out).read()


def test_eval_report_sweep_cycle(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("n_files = 20\nsubfiles_per_file = 4\nqueue_depth = 5\n"
                   "horizon = 12\nn_caches = 4\ncache_fraction = 0.4\n")
    results = str(tmp_path / "r.jsonl")
    code = run_cli("eval", "--config", str(cfg), "--policies",
                   "ed-unicast,sacm++", "--seeds", "0:2", "--episodes", "3",
                   "--out", results)
    assert code == 0
    assert os.path.exists(results)
    assert run_cli("report", "--results", results) == 0
    table = capsys.readouterr().out
    assert "sacm++" in table
    assert run_cli("report", "--results", results, "--flat") == 0
    flat = capsys.readouterr().out
    assert flat.splitlines()[0].startswith("regime\tpolicy")
    assert run_cli("sweep-lambda", "--results", results,
                   "--lambdas", "0.5,1,2") == 0
    sweep = capsys.readouterr().out
    assert "sigma(1)" in sweep


def test_report_fairness_flag(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("n_files = 20\nsubfiles_per_file = 4\nqueue_depth = 5\n"
                   "horizon = 12\nn_caches = 4\ncache_fraction = 0.4\n")
    results = str(tmp_path / "r.jsonl")
    run_cli("eval", "--config", str(cfg), "--policies", "gcm", "--seeds",
            "0:2", "--episodes", "3", "--out", results)
    capsys.readouterr()
    assert run_cli("report", "--results", results, "--fairness") == 0
    assert "fairness gcm" in capsys.readouterr().out


def test_teach_writes_dataset(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("n_files = 20\nsubfiles_per_file = 4\nqueue_depth = 5\n"
                   "horizon = 12\nn_caches = 4\ncache_fraction = 0.4\n")
    out = str(tmp_path / "ds.jsonl")
    code = run_cli("teach", "--config", str(cfg), "--n", "15", "--seed", "1",
                   "--out", out, "--top-k", "3", "--depth", "1",
                   "--mc-seeds", "1")
    assert code == 0
    with open(out) as fh:
        lines = fh.readlines()
    assert len(lines) == 15
    rec = json.loads(lines[0])
    assert set(rec) == {"obs", "mask", "label"}


def test_audit_verb_clean(capsys):
    assert run_cli("audit", "--episodes", "8", "--seed", "2") == 0
    assert "violations: 0" in capsys.readouterr().out


def test_sweep_tau_picks_threshold(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("n_files = 16\nsubfiles_per_file = 3\nqueue_depth = 5\n"
                   "horizon = 12\nn_caches = 4\ncache_fraction = 0.45\n")
    code = run_cli("sweep-tau", "--config", str(cfg), "--metric", "rho",
                   "--taus", "0,2", "--validation-seeds", "0:2",
                   "--holdout-seeds", "50:52", "--episodes", "4")
    assert code == 0
    out = capsys.readouterr().out
    assert "tau* =" in out and "holdout rho" in out
