import hashlib
import json

import numpy as np
import pytest

from shadowlink import cli, presets
from shadowlink.estimate import FitResult, censor, synthetic_samples
from shadowlink.fadesim import ShadowSpec
from shadowlink.ingest import write_samples_csv
from shadowlink.models import pathloss
from shadowlink.synthetic import ConvoyDrive, synthetic_log

LOS_REF = "A:XC70-S60M:LOS"
OLOS_REF = "A:XC70-S60M:OLOS"


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_samples(path, d, gain, cens, condition, t=None, traveled=None):
    with open(path, "w", newline="") as fh:
        write_samples_csv(synthetic_samples(d, gain, cens, condition, traveled=traveled, t=t), fh)
    return path


@pytest.fixture
def fixture_log(tmp_path):
    model, geom = presets.published_model(OLOS_REF)
    cfg = presets.link_config("XC70-S60M")
    text = synthetic_log(model, ShadowSpec(5.52, "single_exp", d_c=50.0), cfg,
                         ConvoyDrive(duration=200, d_min=30, d_max=600, period=200), geom, "OLOS", seed=2)
    log = tmp_path / "log.csv"
    log.write_text(text)
    conf = tmp_path / "link.json"
    conf.write_text(json.dumps({"tx_power_dbm": 23, "cable_loss_db": {"XC70": 3.5, "S60M": 1.0}}))
    return log, conf


def test_ingest_valid_log(tmp_path, fixture_log, capsys):
    log, conf = fixture_log
    code, out, _ = run(["ingest", log, "--config", conf, "--out", tmp_path / "o"], capsys)
    assert code == cli.EXIT_OK
    lines = (tmp_path / "o" / "samples_XC70_S60M.csv").read_text().splitlines()
    assert len(lines) == 1 + 500 and "500 bins" in out
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    for entry in manifest["outputs"]:
        data = (tmp_path / "o" / entry["path"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == entry["sha256"]
    assert set(manifest) == {"command", "config_digest", "seed", "tool_version", "outputs"}


def test_ingest_missing_column(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("t_s,tx_id,rx_id,rssi_dbm\n0,a,b,-70\n")
    code, _, err = run(["ingest", bad, "--out", tmp_path / "o"], capsys)
    assert code == cli.EXIT_PARSE
    assert "line 1" in err and "missing columns" in err
    assert not (tmp_path / "o").exists()


def test_ingest_unreadable_path_and_bad_config(tmp_path, fixture_log, capsys):
    code, _, _ = run(["ingest", tmp_path / "nope.csv", "--out", tmp_path / "o"], capsys)
    assert code == cli.EXIT_CONFIG
    log, _ = fixture_log
    conf = tmp_path / "broken.json"
    conf.write_text("{not json")
    assert run(["ingest", log, "--config", conf, "--out", tmp_path / "o"], capsys)[0] == cli.EXIT_CONFIG
    conf.write_text(json.dumps({"tx_power_dbm": -200}))
    assert run(["ingest", log, "--config", conf, "--out", tmp_path / "o"], capsys)[0] == cli.EXIT_CONFIG


def test_usage_errors(capsys):
    assert run([], capsys)[0] == cli.EXIT_USAGE
    assert run(["estimate", "x.csv"], capsys)[0] == cli.EXIT_USAGE  # --condition missing
    assert run(["simulate", "--preset", "fig12"], capsys)[0] == cli.EXIT_USAGE


def test_estimate_recovers_los_fixture(tmp_path, capsys):
    model, geom = presets.published_model(LOS_REF)
    rng = np.random.default_rng(4)
    d = rng.uniform(8, 488, 3000)
    gain = -pathloss(d, model, geom) + rng.normal(0, model.sigma, len(d))
    path = write_samples(tmp_path / "s.csv", d, gain, np.zeros(len(d), bool), "LOS")
    code, out, _ = run(["estimate", path, "--condition", "los", "--out", tmp_path / "o",
                        "--h-tx", 1.60, "--h-rx", 1.45, "--format", "json"], capsys)
    assert code == cli.EXIT_OK
    res = json.loads(out)
    p = res["params"]
    assert p["g_los_db"] == pytest.approx(-0.8, abs=0.3)
    assert p["sigma_db"] == pytest.approx(3.12, abs=0.15)
    assert res["geometry"]["h_tx_m"] == 1.6
    assert json.loads((tmp_path / "o" / "fit.json").read_text()) == res
    assert (tmp_path / "o" / "residuals.csv").exists()


def test_estimate_flags_narrow_distance_span(tmp_path, capsys):
    rng = np.random.default_rng(5)
    model, _ = presets.published_model(OLOS_REF)
    d = rng.uniform(200, 900, 1500)
    g, c = censor(-pathloss(d, model) + rng.normal(0, model.sigma, len(d)), -112.5)
    path = write_samples(tmp_path / "s.csv", d, g, c, "OLOS")
    code, out, err = run(["estimate", path, "--condition", "olos", "--censor-bound", -112.5,
                          "--out", tmp_path / "o"], capsys)
    assert code == cli.EXIT_OK
    assert "quality: fail" in out and "quality" in err
    assert json.loads((tmp_path / "o" / "fit.json").read_text())["quality"] == "fail"


def test_estimate_ols_warns_about_censoring(tmp_path, capsys):
    d = np.geomspace(20, 1000, 50)
    g, c = censor(-(60 + 27 * np.log10(d / 10)), -100.0)
    path = write_samples(tmp_path / "s.csv", d, g, c, "OLOS")
    code, _, err = run(["estimate", path, "--condition", "olos", "--method", "ols", "--out", tmp_path / "o"], capsys)
    assert code == cli.EXIT_OK
    assert f"OLS ignores {int(c.sum())} censored samples" in err
    assert run(["estimate", path, "--condition", "los", "--method", "ols", "--out", tmp_path / "o2"],
               capsys)[0] == cli.EXIT_USAGE


def test_estimate_nonconvergence_exit_code(tmp_path, capsys, monkeypatch):
    d = np.geomspace(20, 1000, 50)
    path = write_samples(tmp_path / "s.csv", d, -(60 + 27 * np.log10(d / 10)), np.zeros(50, bool), "OLOS")
    real = cli.fit_single_slope_ml

    def stalled(*a, **k):
        fit = real(*a, **k)
        return FitResult(fit.params, fit.loglik, fit.m, fit.m_c, False, fit.quality, fit.method)

    monkeypatch.setattr(cli, "fit_single_slope_ml", stalled)
    code, _, err = run(["estimate", path, "--condition", "olos", "--out", tmp_path / "o"], capsys)
    assert code == cli.EXIT_NONCONVERGED
    assert json.loads((tmp_path / "o" / "fit.json").read_text())["converged"] is False


def test_failed_estimate_writes_nothing(tmp_path, capsys):
    path = write_samples(tmp_path / "s.csv", [10.0, 20.0], [-60.0, -70.0], [False, False], "LOS")
    code, _, _ = run(["estimate", path, "--condition", "olos", "--out", tmp_path / "o"], capsys)
    assert code == cli.EXIT_PARSE
    assert not (tmp_path / "o").exists()


def test_correlate_linear_fixture_prints_decorrelation(tmp_path, capsys):
    centers = np.arange(5.0, 120.0, 10.0)
    series = tmp_path / "cross.csv"
    series.write_text("lag_m,rho,n\n" + "".join(f"{c},{0.5211 - 0.0017 * c},100\n" for c in centers))
    code, out, _ = run(["correlate", series, "--mode", "cross", "--out", tmp_path / "o"], capsys)
    assert code == cli.EXIT_OK
    assert "de-correlation distance = 90.1" in out


def _residual_file(path, x, step=10.0, d=None, t=None):
    n = len(x)
    t = np.arange(n) * 0.4 if t is None else t
    d = np.full(n, 100.0) if d is None else d
    rows = "".join(f"{ti},{i * step},{di},{xi},LOS\n" for i, (ti, di, xi) in enumerate(zip(t, d, x)))
    path.write_text("t_s,traveled_m,d_m,residual_db,condition\n" + rows)
    return path


def test_correlate_white_noise_not_identifiable(tmp_path, capsys):
    x = np.random.default_rng(0).normal(size=3000)
    path = _residual_file(tmp_path / "r.csv", x)
    code, out, _ = run(["correlate", path, "--out", tmp_path / "o", "--format", "json"], capsys)
    assert code == cli.EXIT_OK
    assert json.loads(out)["fits"]["single_exp"]["identifiable"] is False


def test_correlate_identical_series_cross(tmp_path, capsys):
    x = np.random.default_rng(1).normal(size=2000)
    sep = np.random.default_rng(2).uniform(0, 100, 2000)
    a = _residual_file(tmp_path / "a.csv", x, d=np.full(2000, 150.0))
    b = _residual_file(tmp_path / "b.csv", x, d=150.0 - sep)
    code, _, _ = run(["correlate", a, b, "--mode", "cross", "--out", tmp_path / "o"], capsys)
    assert code == cli.EXIT_OK
    rho = [float(l.split(",")[1]) for l in (tmp_path / "o" / "crosscorr.csv").read_text().splitlines()[1:]]
    assert len(rho) == 10 and all(r == pytest.approx(1.0) for r in rho)


def test_correlate_zero_variance_exit(tmp_path, capsys):
    path = _residual_file(tmp_path / "r.csv", np.zeros(50))
    code, _, err = run(["correlate", path, "--out", tmp_path / "o"], capsys)
    assert code == cli.EXIT_CORRELATION and "undefined" in err
    assert not (tmp_path / "o").exists()


def test_correlate_from_samples_and_model(tmp_path, capsys):
    rng = np.random.default_rng(3)
    model, _ = presets.published_model(OLOS_REF)
    n = 2000
    d = rng.uniform(50, 500, n)
    gain = -pathloss(d, model) + rng.normal(0, 5.52, n)
    samples = write_samples(tmp_path / "s.csv", d, gain, np.zeros(n, bool), "OLOS",
                            t=np.arange(n) * 0.4, traveled=np.arange(n) * 10.0)
    (tmp_path / "m.json").write_text(json.dumps(model.to_dict()))
    assert run(["correlate", samples, "--out", tmp_path / "o"], capsys)[0] == cli.EXIT_USAGE
    code, out, _ = run(["correlate", samples, "--model", tmp_path / "m.json", "--out", tmp_path / "o"], capsys)
    assert code == cli.EXIT_OK and "single-exp d_c" in out


def test_pipeline_end_to_end(tmp_path, fixture_log, capsys):
    log, conf = fixture_log
    assert run(["ingest", log, "--config", conf, "--out", tmp_path / "i"], capsys)[0] == 0
    s = tmp_path / "i" / "samples_XC70_S60M.csv"
    assert run(["estimate", s, "--condition", "olos", "--out", tmp_path / "e"], capsys)[0] == 0
    code, out, _ = run(["correlate", tmp_path / "e" / "residuals.csv", "--out", tmp_path / "c"], capsys)
    assert code == 0 and "d_c" in out


def _snapshot(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


SMALL = ["--duration", 20_000]


def test_simulate_fig10_files_and_determinism(tmp_path, capsys):
    for name in ("a", "b"):
        assert run(["simulate", "--preset", "fig10", "--seed", 3, "--out", tmp_path / name] + SMALL, capsys)[0] == 0
    a, b = _snapshot(tmp_path / "a"), _snapshot(tmp_path / "b")
    assert a == b
    cdfs = sorted(n for n in a if n.startswith("cdf_"))
    assert cdfs == [f"cdf_{m}_{v}.csv" for m in ("joint", "los", "olos") for v in ("autocorr", "delta")]
    assert json.loads(a["manifest.json"])["seed"] == 3


def test_simulate_seed_changes_output_and_env_fallback(tmp_path, capsys, monkeypatch):
    run(["simulate", "--preset", "fig10", "--seed", 3, "--out", tmp_path / "a"] + SMALL, capsys)
    run(["simulate", "--preset", "fig10", "--seed", 4, "--out", tmp_path / "b"] + SMALL, capsys)
    assert _snapshot(tmp_path / "a")["cdf_olos_delta.csv"] != _snapshot(tmp_path / "b")["cdf_olos_delta.csv"]
    monkeypatch.setenv(cli.SEED_ENV, "3")
    run(["simulate", "--preset", "fig10", "--out", tmp_path / "c"] + SMALL, capsys)
    assert _snapshot(tmp_path / "c")["cdf_olos_delta.csv"] == _snapshot(tmp_path / "a")["cdf_olos_delta.csv"]
    monkeypatch.setenv(cli.SEED_ENV, "three")
    assert run(["simulate", "--preset", "fig10", "--out", tmp_path / "d"] + SMALL, capsys)[0] == cli.EXIT_CONFIG


def test_simulate_fig11_rho_one_equals_single_link(tmp_path, capsys):
    assert run(["simulate", "--preset", "fig11", "--seed", 1, "--out", tmp_path] + SMALL, capsys)[0] == 0
    for cond in ("los", "olos"):
        assert (tmp_path / f"cdf_{cond}_rho1.csv").read_bytes() == (tmp_path / f"cdf_{cond}_single.csv").read_bytes()
        assert (tmp_path / f"cdf_{cond}_rho0.5.csv").exists()


def test_simulate_scenario_file(tmp_path, capsys):
    scen = {
        "scenario": {"duration_s": 400, "seed": 9},
        "model": OLOS_REF,
        "multilink": {"rho": 0.5},
    }
    path = tmp_path / "scen.json"
    path.write_text(json.dumps(scen))
    code, out, _ = run(["simulate", path, "--out", tmp_path / "o"], capsys)
    assert code == 0 and "dips" in out
    names = set(_snapshot(tmp_path / "o"))
    assert {"trace_a.csv", "trace_b.csv", "cdf_simultaneous.csv", "cdf_single.csv", "manifest.json"} <= names
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["seed"] == 9


def test_simulate_config_errors(tmp_path, capsys):
    path = tmp_path / "scen.json"
    path.write_text(json.dumps({"scenario": {"speed_mps": -1}, "model": OLOS_REF}))
    assert run(["simulate", path, "--out", tmp_path / "o"], capsys)[0] == cli.EXIT_CONFIG
    path.write_text(json.dumps({"model": "Z:nothing:LOS"}))
    assert run(["simulate", path, "--out", tmp_path / "o"], capsys)[0] == cli.EXIT_CONFIG
    assert run(["simulate", path, "--preset", "fig10", "--out", tmp_path / "o"], capsys)[0] == cli.EXIT_USAGE
    assert not (tmp_path / "o").exists()


def test_simulate_table_preset(tmp_path, capsys):
    code, out, _ = run(["simulate", "--preset", "table3", "--seed", 0, "--out", tmp_path], capsys)
    assert code == 0
    rows = json.loads((tmp_path / "table3.json").read_text())
    assert len(rows) == len(out.splitlines()) > 0
    for r in rows:
        assert r["fit"]["d_c_m"] == pytest.approx(r["published_d_c_m"], rel=0.2)


def test_numbers_have_six_significant_digits():
    assert cli.fmt(1 / 3) == 0.333333
    assert cli.dumps({"x": np.float64(123456789.0), "b": np.bool_(True)}) == '{\n  "b": true,\n  "x": 123457000.0\n}\n'
