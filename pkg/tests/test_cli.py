import json

import pytest

from wittenflow.cli import CRITERIA, PRESETS, ExperimentConfig, list_presets, load_config, preset, run, validate
from wittenflow.cli.main import main
from wittenflow.errors import ConfigError


def small_flow(**changes):
    c = preset("stationary")
    c.update(name="small-flow", output="small-flow",
             initial={"kind": "exp_fourier", "field": {"terms": [{"k": [1], "cos": 0.5}]}},
             grid={"nodes": [32], "periods_over_pi": [2]},
             solver={"t0": 0.1, "T": 0.2, "dt_out": 1e-2},
             checks=["dH", "d2H", "dWm"])
    c.update(changes)
    return c


def unstable():
    # a kernel far narrower than the grid spacing
    return {"name": "unstable", "grid": {"nodes": [64], "periods_over_pi": [20]},
            "initial": {"kind": "heat_kernel", "center": [31.4]},
            "solver": {"t0": 0.01, "T": 0.02, "dt_out": 1e-3},
            "parameters": {"m": 1}, "checks": ["gaussian_W"]}


# -- presets and validation ---------------------------------------------------------

def test_at_least_ten_presets_listed():
    text = list_presets()
    assert len(PRESETS) >= 10
    for name in PRESETS:
        assert name in text


def test_each_criterion_has_exactly_one_preset():
    assert sorted(CRITERIA) == list(range(1, 10))
    assert len(set(CRITERIA.values())) == 9
    assert all(name in PRESETS for name in CRITERIA.values())


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_validate_cleanly(name):
    assert validate(ExperimentConfig.from_dict(preset(name))) == []


def test_negative_K_flagged():
    c = preset("k-variants")
    c["parameters"]["K"] = -0.1
    diags = validate(ExperimentConfig.from_dict(c))
    assert any("parameters.K" in d for d in diags)


def test_m_equal_n_with_w_formula_is_invalid():
    c = preset("w-entropy")
    c["parameters"]["m"] = 1
    v = run(c, write=False)
    assert v.exit_code == 2
    assert any("needs m > n" in d for d in v.diagnostics)


@pytest.mark.parametrize("change, fragment", [
    ({"solver": {"t0": 0.0, "T": 0.5, "dt_out": 1e-2}}, "solver.t0"),
    ({"tolerances": {"dH": -1.0}}, "tolerances.dH"),
    ({"checks": ["no_such_check"]}, "unknown check"),
    ({"grid": {"nodes": [31]}}, "even"),
    ({"solver": {"t0": 0.1, "T": 0.2, "dt_out": 0.03}}, "divide"),
])
def test_validation_messages(change, fragment):
    diags = validate(ExperimentConfig.from_dict(small_flow(**change)))
    assert any(fragment in d for d in diags), diags


def test_unknown_keys_and_missing_grid():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"name": "x", "grid": {"nodes": [16]}, "colour": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"name": "x"})
    with pytest.raises(ConfigError):
        load_config("definitely-not-a-preset")


# -- running ----------------------------------------------------------------------

def test_stationary_preset_passes():
    v = run(preset("stationary"), write=False)
    assert v.exit_code == 0
    assert all(c.measured <= 1e-10 for c in v.checks)


def test_exit_codes():
    assert run(small_flow(), write=False).exit_code == 0
    failing = small_flow(checks=["dH_abs"])
    assert run(failing, write=False).exit_code == 1
    v = run(unstable(), write=False)
    assert v.exit_code == 3
    assert "StabilityError" in v.diagnostics[0]


def test_reruns_are_byte_identical(tmp_path):
    a = run(small_flow(), tmp_path / "a")
    b = run(small_flow(), tmp_path / "b")
    for f in ("report.json", "entropy.csv"):
        assert (a.output_dir / f).read_bytes() == (b.output_dir / f).read_bytes()


def test_report_schema(tmp_path):
    v = run(small_flow(), tmp_path)
    report = json.loads((v.output_dir / "report.json").read_text())
    assert report["status"] == "pass" and report["exit_code"] == 0
    assert [c["name"] for c in report["checks"]] == ["dH", "d2H", "dWm"]
    for c in report["checks"]:
        assert set(c) >= {"name", "measured", "tolerance", "passed", "detail"}
    assert report["config"]["name"] == "small-flow"
    header = (v.output_dir / "entropy.csv").read_text().splitlines()[0]
    assert header.startswith("t,")


def test_error_run_still_writes_report(tmp_path):
    v = run(unstable(), tmp_path)
    report = json.loads((v.output_dir / "report.json").read_text())
    assert report["status"] == "error" and report["exit_code"] == 3


# -- command line -------------------------------------------------------------------

def test_main_run_uses_output_root_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("WITTENFLOW_OUTPUT_ROOT", str(tmp_path))
    assert main(["run", "stationary"]) == 0
    assert (tmp_path / "stationary" / "report.json").exists()
    assert "stationary: PASS" in capsys.readouterr().out


def test_main_validate(tmp_path, capsys):
    path = tmp_path / "bad.json"
    c = preset("w-entropy")
    c["parameters"]["m"] = 1
    path.write_text(json.dumps(c))
    assert main(["validate", str(path)]) == 2
    assert "needs m > n" in capsys.readouterr().out
    assert main(["validate", "log-sobolev"]) == 0
    path.write_text("{not json")
    assert main(["validate", str(path)]) == 2


def test_main_presets(tmp_path, capsys):
    assert main(["presets"]) == 0
    assert "gaussian-baseline" in capsys.readouterr().out
    assert main(["presets", "--write", str(tmp_path)]) == 0
    written = sorted(p.stem for p in tmp_path.glob("*.json"))
    assert written == sorted(PRESETS)
    assert json.loads((tmp_path / "stationary.json").read_text()) == preset("stationary")


@pytest.mark.parametrize("jobs", [1, 2])
def test_main_batch(tmp_path, capsys, jobs):
    cfg = tmp_path / "cfg"
    cfg.mkdir()
    (cfg / "a.json").write_text(json.dumps(small_flow()))
    (cfg / "b.json").write_text(json.dumps(small_flow(name="b", output="b", checks=["dH_abs"])))
    code = main(["batch", str(cfg), "--jobs", str(jobs), "--output-root", str(tmp_path / "out")])
    assert code == 1
    out = capsys.readouterr().out
    assert "small-flow: PASS" in out and "b: FAIL" in out
    assert (tmp_path / "out" / "b" / "report.json").exists()


def test_batch_on_empty_directory(tmp_path):
    assert main(["batch", str(tmp_path)]) == 2
