import json

import numpy as np
import pytest

from xray_sharp.errors import InvalidArgument
from xray_sharp.harness import EXPERIMENTS, ExperimentConfig, ExperimentError, fit_decay, run, stream_rng
from xray_sharp.harness.cli import main
from xray_sharp.harness.run import COLUMNS, Prediction, plot_dat, series_csv, slope_verdict


# ---- fitting -------------------------------------------------------------------


@pytest.mark.parametrize("slope, intercept", [(-0.5, 0.0), (1.25, 3.0), (-2.0, -1.5)])
def test_fit_exact_power_law(slope, intercept):
    pts = [(x, 2.0 ** (intercept + slope * x)) for x in range(4, 9)]
    fit = fit_decay(pts)
    assert fit.slope == pytest.approx(slope, abs=1e-12)
    assert fit.intercept == pytest.approx(intercept, abs=1e-10)
    assert fit.r2 == 1.0


def test_fit_noisy_fixture():
    rng = np.random.default_rng(17)
    xs = np.arange(4, 12)
    ys = 2.0 ** (-0.5 * xs) * np.exp(rng.normal(0, 0.02, xs.size))
    fit = fit_decay(list(zip(xs, ys)))
    assert abs(fit.slope + 0.5) <= 0.02
    assert 0.98 <= fit.r2 < 1.0


def test_fit_constant_series():
    fit = fit_decay([(1, 3.0), (2, 3.0), (3, 3.0)])
    assert fit.slope == pytest.approx(0.0, abs=1e-14) and fit.r2 == 1.0


@pytest.mark.parametrize("pts", [[(1, 1.0), (2, 2.0)], [(1, 1.0), (2, -2.0), (3, 1.0)], [(1, 2, 3)] * 3])
def test_fit_rejects_bad_points(pts):
    with pytest.raises(InvalidArgument):
        fit_decay(pts)


@pytest.mark.parametrize(
    "fit, pred, verdict",
    [
        ({"slope": -0.5, "r2": 0.99}, Prediction(-0.5, 0.1, "x"), "pass"),
        ({"slope": -0.5, "r2": 0.97}, Prediction(-0.5, 0.1, "x"), "fail"),
        ({"slope": -0.7, "r2": 0.99}, Prediction(-0.5, 0.1, "x"), "fail"),
        ({"slope": 0.1, "r2": 0.99}, Prediction(0.33, 0.1, "x", "upper_bound"), "pass"),
        ({"slope": 0.5, "r2": 0.99}, Prediction(0.33, 0.1, "x", "upper_bound"), "fail"),
    ],
)
def test_slope_verdict(fit, pred, verdict):
    assert slope_verdict(fit, pred) == verdict


# ---- config --------------------------------------------------------------------


def test_config_defaults_and_round_trip():
    cfg = ExperimentConfig.from_dict({"schema_version": 1, "experiment": "schedule"})
    assert cfg.curve == {"name": "moment", "d": 2} and cfg.seed == 0
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again == cfg


@pytest.mark.parametrize(
    "raw, where",
    [
        ({"schema_version": 1, "experiment": "schedule", "bogus": 1}, "<root>"),
        ({"schema_version": 2, "experiment": "schedule"}, "schema_version"),
        ({"schema_version": 1, "experiment": "nope"}, "experiment"),
        ({"schema_version": 1, "experiment": "schedule", "sweep": {"kk": [1]}}, "sweep"),
        ({"schema_version": 1, "experiment": "schedule", "grid": {"n_x": 1}}, "grid/n_x"),
        ({"schema_version": 1, "experiment": "witness", "sweep": {"lambda": [4]}}, "sweep/lambda/0"),
        ({"schema_version": 1, "experiment": "schedule", "seed": -1}, "seed"),
    ],
)
def test_config_rejections(raw, where):
    with pytest.raises(InvalidArgument, match=f"config error at {where}"):
        ExperimentConfig.from_dict(raw)


def test_config_finite_type_needs_exponents():
    with pytest.raises(InvalidArgument):
        ExperimentConfig.from_dict({"schema_version": 1, "experiment": "witness", "curve": {"name": "finite_type"}})


def test_stream_rng_independent_and_reproducible():
    a = stream_rng(3, 0).uniform(size=5)
    np.testing.assert_array_equal(a, stream_rng(3, 0).uniform(size=5))
    assert not np.array_equal(a, stream_rng(3, 1).uniform(size=5))
    assert not np.array_equal(a, stream_rng(4, 0).uniform(size=5))


def test_every_experiment_has_columns():
    assert set(COLUMNS) == set(EXPERIMENTS)


# ---- runs and persistence ----------------------------------------------------------


RECURSION = {"schema_version": 1, "experiment": "recursion_check", "sweep": {"N": [2, 3], "n_samples": 2000}, "seed": 9}


def test_run_writes_outputs(tmp_path):
    rep = run(ExperimentConfig.from_dict(RECURSION), out=tmp_path)
    assert rep.passed
    d = rep.details["output_dir"]
    payload = json.loads(open(f"{d}/report.json").read())
    assert payload["config"]["seed"] == 9
    assert payload["prediction"]["source"]
    assert payload["environment"]["backend"] in ("numba", "numpy")
    assert open(f"{d}/series.csv").readline().strip() == "N,max_roundtrip_error,max_gN1"
    assert open(f"{d}/plot.dat").readline().startswith("# N ")


def test_series_csv_byte_identical(tmp_path):
    cfg = ExperimentConfig.from_dict(RECURSION)
    a = run(cfg, out=tmp_path)
    b = run(cfg, out=tmp_path)
    assert a.details["output_dir"] != b.details["output_dir"]
    ca = open(f"{a.details['output_dir']}/series.csv", "rb").read()
    cb = open(f"{b.details['output_dir']}/series.csv", "rb").read()
    assert ca == cb


def test_series_formatting():
    text = series_csv("schedule", [(30, 1, 4), (36, 1, 5)])
    assert text == "k,holds,J\n30,1,4\n36,1,5\n"
    assert plot_dat("l2_decay", [(4, 0.1)]) == "# k opnorm\n4 0.1\n"


@pytest.mark.parametrize(
    "raw",
    [
        {"schema_version": 1, "experiment": "schedule"},
        {"schema_version": 1, "experiment": "cover_check", "sweep": {"n_samples": 500}},
        {"schema_version": 1, "experiment": "witness", "curve": {"name": "finite_type", "exponents": [1, 2, 4]}, "sweep": {"family": "finite_type", "p": [2]}},
    ],
)
def test_prediction_source_is_descriptive(raw):
    rep = run(ExperimentConfig.from_dict(raw), write=False)
    assert isinstance(rep.prediction.source, str) and len(rep.prediction.source) > 10
    assert rep.passed


def test_module_error_is_wrapped():
    cfg = ExperimentConfig.from_dict(
        {"schema_version": 1, "experiment": "l2_decay", "grid": {"n_x": 16}, "sweep": {"k": [20, 21, 22]}}
    )
    with pytest.raises(ExperimentError, match="AnnulusOutOfRange"):
        run(cfg, write=False)


# ---- CLI ----------------------------------------------------------------------------


def _write(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return str(p)


def test_cli_run_pass(tmp_path, capsys):
    code = main(["run", _write(tmp_path, RECURSION), "--out", str(tmp_path / "o"), "--threads", "1"])
    assert code == 0
    assert "recursion_check: pass" in capsys.readouterr().out


def test_cli_run_fail(tmp_path, capsys):
    raw = {
        "schema_version": 1,
        "experiment": "witness",
        "curve": {"name": "finite_type", "exponents": [1, 2, 4]},
        "sweep": {"family": "finite_type", "p": [2], "tolerance": 0.0},
    }
    assert main(["run", _write(tmp_path, raw), "--out", str(tmp_path / "o"), "--quiet"]) == 1
    assert capsys.readouterr().out == ""


def test_cli_run_experiment_error(tmp_path):
    raw = {"schema_version": 1, "experiment": "l2_decay", "grid": {"n_x": 16}, "sweep": {"k": [20, 21, 22]}}
    assert main(["run", _write(tmp_path, raw), "--out", str(tmp_path / "o")]) == 1


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    assert main(["run", _write(tmp_path, {"schema_version": 1, "experiment": "x"})]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad)]) == 2
    assert main(["bogus"]) == 2
    assert main([]) == 2
    capsys.readouterr()


def test_cli_seed_override(tmp_path):
    path = _write(tmp_path, RECURSION)
    assert main(["run", path, "--seed", "4", "--out", str(tmp_path / "o"), "--quiet"]) == 0
    runs = list((tmp_path / "o" / "recursion_check").iterdir())
    assert json.loads((runs[0] / "report.json").read_text())["config"]["seed"] == 4


def test_cli_table(capsys):
    assert main(["table", "--d", "3", "--p", "2", "--L", "3"]) == 0
    out = capsys.readouterr().out
    assert f"alpha       = {1 / 6!r}" in out
    assert main(["table", "--d", "1", "--p", "2"]) == 2


def test_cli_list_experiments(capsys):
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert [line.split()[0] for line in out] == list(EXPERIMENTS)


def test_cli_check_curve(capsys):
    assert main(["check-curve", "moment", "--d", "3"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["d"] == 3 and info["nondegenerate"] and info["max_type"] == 3
