import json
import subprocess
import sys

import pytest

from subshift_lab.cli import ConfigError, main, run, validate

SMALL = {
    "complexity": {"source": {"kind": "sturmian", "cf": "0;1,2x30"}, "n_max": 100},
    "sturmian": {"n_max": 100, "prefix_length": 500},
    "union": {"d": 3, "n_max": 50},
    "iet": {"random_k": 3, "n_max": 60, "code_length": 200, "measure_length": 20000, "measure_m": 2,
            "measure_tol": "1/100"},
    "tower": {"prefix_length": 100000, "profile_n_max": 2000, "syndetic": False, "peak_threshold": "2"},
    "ekm": {"instances": 5},
    "measures": {"probe": False, "window": 5000, "ratio_n_max": 2000},
}


def read_all(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_unknown_keys_and_types_are_rejected():
    with pytest.raises(ConfigError, match=r"config\.bogus: unknown key"):
        validate("sturmian", {"bogus": 1})
    with pytest.raises(ConfigError, match=r"config\.source\.colour: unknown key"):
        validate("complexity", {"source": {"colour": "red"}})
    with pytest.raises(ConfigError, match=r"config\.n_max: expected int"):
        validate("sturmian", {"n_max": "500"})
    with pytest.raises(ConfigError, match=r"config\.n_max: expected int"):
        validate("sturmian", {"n_max": True})
    with pytest.raises(ConfigError):
        validate("nope", {})
    assert validate("union", None)["d"] == 2


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_max": 10, "extra": 1}))
    assert main(["union", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "config.extra" in capsys.readouterr().err
    cfg.write_text("{not json")
    assert main(["union", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_missing_source_fields(tmp_path):
    with pytest.raises(ConfigError, match="config.source.path"):
        run("complexity", {"source": {"kind": "file"}}, tmp_path)
    with pytest.raises(ConfigError, match="config.source.kind"):
        run("complexity", {"source": {"kind": "weird"}}, tmp_path)


def test_bad_iet_spec_reported_with_path(tmp_path):
    with pytest.raises(ConfigError, match="config.spec"):
        run("iet", {"spec": {"lengths": ["1/2"], "perm": [2]}}, tmp_path)


@pytest.mark.parametrize("sub", sorted(SMALL))
def test_small_runs_pass_and_record_seed(sub, tmp_path):
    assert run(sub, SMALL[sub], tmp_path, seed=7)
    verdict = json.loads((tmp_path / "verdict.json").read_text())
    assert verdict["seed"] == 7 and verdict["passed"] and verdict["subcommand"] == sub
    assert all(c["passed"] for c in verdict["checks"])


def test_failing_check_gives_exit_one(tmp_path):
    cfg = tmp_path / "c.json"
    # a shallow CF cannot certify the requested prefix, which is reported as a failed check
    cfg.write_text(json.dumps({"cf": "0;1x20", "n_max": 100000, "prefix_length": 10}))
    assert main(["sturmian", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    verdict = json.loads((tmp_path / "o" / "verdict.json").read_text())
    assert verdict["passed"] is False


def test_rational_iet_from_config(tmp_path):
    spec = {"k": 2, "lengths": ["1/4", "3/4"], "perm": [2, 1]}
    assert run("iet", {"spec": spec, "n_max": 30, "measure_length": 1000, "measure_m": 1,
                       "measure_tol": "1/100"}, tmp_path)
    idoc = json.loads((tmp_path / "idoc.json").read_text())
    assert idoc["ok"] is False and idoc["witness"]


def test_file_source(tmp_path):
    data = tmp_path / "w.bin"
    data.write_bytes(bytes([0, 1, 1]) * 100)
    assert run("complexity", {"source": {"kind": "file", "path": str(data)}, "n_max": 50}, tmp_path / "o")
    lines = (tmp_path / "o" / "profile.csv").read_text().splitlines()
    assert lines[1:4] == ["1,2,2", "2,3,1.5", "3,3,1"]


@pytest.mark.parametrize("sub", ["iet", "ekm"])
def test_seeded_reruns_identical_and_seeds_matter(sub, tmp_path):
    run(sub, SMALL[sub], tmp_path / "a", seed=3)
    run(sub, SMALL[sub], tmp_path / "b", seed=3)
    run(sub, SMALL[sub], tmp_path / "c", seed=4)
    a, b, c = (read_all(tmp_path / x) for x in "abc")
    assert a == b
    assert a != c


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "subshift_lab", "union", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "union: PASS" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "subshift_lab", "union", "--seed", "-1", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
