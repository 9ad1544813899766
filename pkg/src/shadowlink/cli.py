"""Command-line front end: ingest -> estimate -> correlate -> simulate.

Exit codes
----------
0  success
1  usage error (bad or missing flags)
2  input parse error (log or sample CSV schema, line diagnostics on stderr)
3  configuration error or unreadable input path
4  estimator did not converge (results are still written and flagged)
5  correlation undefined (e.g. zero-variance residuals)

Every command writes its outputs plus ``manifest.json`` into ``--out``.
Files are staged in memory and renamed into place only after the whole
command succeeded, so a failing run leaves no partial files behind.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, presets
from .correlate import (
    CorrelationError,
    CrossCorrSeries,
    ResidualSeries,
    autocorrelation,
    cross_correlation_aligned,
    decorrelation_distance,
    fit_double_exp,
    fit_linear_cross,
    fit_single_exp,
    read_lag_csv,
    residuals,
    write_lag_csv,
)
from .estimate import (
    EstimationError,
    fit_single_slope_ml,
    fit_single_slope_ols,
    fit_two_ray_ml,
    format_table_row,
)
from .fadesim import (
    Scenario,
    ShadowSpec,
    dip_durations,
    gain_trace,
    gen_multilink,
    simultaneous_dip_durations,
    write_cdf_csv,
    write_trace_csv,
)
from .ingest import (
    LinkConfig,
    LogParseError,
    bin_samples,
    parse_log,
    read_samples_csv,
    split_links,
    write_samples_csv,
)
from .models import LinkGeometry, model_from_dict, model_to_dict

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_CONFIG = 3
EXIT_NONCONVERGED = 4
EXIT_CORRELATION = 5

SEED_ENV = "SHADOWLINK_SEED"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(EXIT_USAGE, f"{self.prog}: error: {message}")


# ---------------------------------------------------------------- output staging


def fmt(x) -> float | None:
    """Round to 6 significant digits for stable text output."""
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.6g}")


def _round_tree(obj):
    if obj is None or isinstance(obj, (bool, str, int)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _round_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_tree(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_round_tree(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


@dataclass
class RunManifest:
    command: str
    config_digest: str
    seed: int | None
    tool_version: str
    outputs: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "outputs": self.outputs,
        }


class Outputs:
    """Collects output files and commits them atomically."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files: dict[str, bytes] = {}

    def text(self, name: str, content: str) -> None:
        self.files[name] = content.encode("utf-8")

    def csv(self, name: str, writer, *args) -> None:
        buf = io.StringIO(newline="")
        writer(*args, buf)
        self.text(name, buf.getvalue())

    def commit(self, manifest: RunManifest) -> None:
        manifest.outputs = [
            {"path": name, "sha256": hashlib.sha256(data).hexdigest()} for name, data in sorted(self.files.items())
        ]
        self.text("manifest.json", dumps(manifest.to_dict()))
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CliError(EXIT_CONFIG, f"cannot create output directory {self.out_dir}: {exc}") from exc
        staged = []
        try:
            for name, data in self.files.items():
                fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=self.out_dir)
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                staged.append((tmp, self.out_dir / name))
            for tmp, final in staged:
                os.replace(tmp, final)
        except OSError as exc:
            for tmp, _ in staged:
                if os.path.exists(tmp):
                    os.unlink(tmp)
            raise CliError(EXIT_CONFIG, f"cannot write outputs to {self.out_dir}: {exc}") from exc


class Digest:
    """sha256 over every input: file bytes plus the canonical option set."""

    def __init__(self):
        self._h = hashlib.sha256()

    def add_file(self, label: str, data: bytes) -> None:
        self._h.update(f"file:{label}:{len(data)}\n".encode())
        self._h.update(data)

    def add_options(self, options: dict) -> None:
        self._h.update(json.dumps(options, sort_keys=True, default=str).encode())

    def hexdigest(self) -> str:
        return self._h.hexdigest()


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(EXIT_CONFIG, f"cannot read {path}: {exc.strerror or exc}") from exc


def _decode(data: bytes, path: str) -> str:
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise CliError(EXIT_PARSE, f"{path}: not UTF-8 text ({exc})") from exc


def _read_json(path: str | None, digest: Digest) -> dict:
    if path is None:
        return {}
    data = _read_bytes(path)
    digest.add_file(os.path.basename(path), data)
    try:
        obj = json.loads(data.decode("utf-8-sig"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_CONFIG, f"{path}: invalid JSON config ({exc})") from exc
    if not isinstance(obj, dict):
        raise CliError(EXIT_CONFIG, f"{path}: config must be a JSON object")
    return obj


def _resolve_seed(flag: int | None, fallback: int | None = None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise CliError(EXIT_CONFIG, f"{SEED_ENV} must be an integer, got {env!r}") from None
    return 0 if fallback is None else int(fallback)


def _command_line(args: argparse.Namespace, skip=("func", "out")) -> str:
    # paths are reduced to base names so the manifest does not depend on the working directory
    parts = [args.command]
    for key, val in sorted(vars(args).items()):
        if key in skip or key == "command" or val is None or val is False:
            continue
        if isinstance(val, list):
            val = " ".join(os.path.basename(str(v)) for v in val)
        elif key in ("log", "samples", "scenario", "config", "model"):
            val = os.path.basename(str(val))
        parts.append(f"--{key.replace('_', '-')}" if val is True else f"--{key.replace('_', '-')}={val}")
    return " ".join(parts)


def _options(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "out", "log", "samples", "scenario", "config", "inputs", "model")}


# ---------------------------------------------------------------- ingest


def cmd_ingest(args) -> int:
    digest = Digest()
    cfg_data = _read_json(args.config, digest)
    raw = _read_bytes(args.log)
    digest.add_file(os.path.basename(args.log), raw)
    digest.add_options(_options(args))
    bin_s = float(cfg_data.get("bin_s", args.bin_s))
    average = cfg_data.get("average", args.average)
    if not bin_s > 0 or average not in ("db", "linear"):
        raise CliError(EXIT_CONFIG, "config: bin_s must be > 0 and average one of db, linear")

    records = parse_log(_decode(raw, args.log))
    out = Outputs(Path(args.out))
    summary = []
    for (tx, rx), recs in sorted(split_links(records).items()):
        try:
            cfg = LinkConfig.from_dict(cfg_data, tx, rx)
        except (ValueError, TypeError, KeyError, AttributeError) as exc:
            raise CliError(EXIT_CONFIG, f"config: {exc}") from exc
        samples = bin_samples(recs, cfg, bin_s=bin_s, average=average)
        name = f"samples_{tx}_{rx}.csv"
        out.csv(name, write_samples_csv, samples)
        n_cens = sum(s.censored for s in samples)
        summary.append({"tx": tx, "rx": rx, "file": name, "bins": len(samples), "censored": n_cens})
        print(f"{tx} -> {rx}: {len(samples)} bins ({n_cens} censored) -> {name}")
    out.text("ingest_summary.json", dumps({"links": summary, "bin_s": bin_s, "average": average}))
    out.commit(RunManifest(_command_line(args), digest.hexdigest(), None, __version__))
    return EXIT_OK


# ---------------------------------------------------------------- estimate


def _geometry(args, cfg: dict) -> LinkGeometry:
    data = dict(cfg.get("geometry", {}))
    for key, attr in (("h_tx_m", "h_tx"), ("h_rx_m", "h_rx"), ("frequency_hz", "frequency"), ("polarization", "polarization")):
        val = getattr(args, attr, None)
        if val is not None:
            data[key] = val
            if key == "frequency_hz":
                data.pop("wavelength_m", None)
    if getattr(args, "eps_r", None) is not None:
        data["eps_r"] = list(args.eps_r)
    try:
        return LinkGeometry.from_dict(data)
    except (ValueError, TypeError, KeyError) as exc:
        raise CliError(EXIT_CONFIG, f"geometry: {exc}") from exc


def _load_samples(path: str, digest: Digest):
    raw = _read_bytes(path)
    digest.add_file(os.path.basename(path), raw)
    return read_samples_csv(io.StringIO(_decode(raw, path)))


def cmd_estimate(args) -> int:
    digest = Digest()
    cfg = _read_json(args.config, digest)
    samples = _load_samples(args.samples, digest)
    digest.add_options(_options(args))
    condition = args.condition.upper()
    model = args.model or ("two_ray" if condition == "LOS" else "single_slope")
    if model == "two_ray" and args.method == "ols":
        raise CliError(EXIT_USAGE, "--method ols is only available for the single-slope model")
    geom = _geometry(args, cfg)
    bound = args.censor_bound if args.censor_bound is not None else cfg.get("censor_bound_db")

    selected = [s for s in samples if s.condition == condition]
    if not selected:
        raise CliError(EXIT_PARSE, f"{args.samples}: no {condition} samples")
    n_cens = sum(s.censored for s in selected)
    try:
        if args.method == "ols":
            if n_cens:
                print(f"warning: OLS ignores {n_cens} censored samples; estimates are biased toward low pathloss",
                      file=sys.stderr)
            fit = fit_single_slope_ols(selected)
        elif model == "two_ray":
            fit = fit_two_ray_ml(selected, geom, bound)
        else:
            fit = fit_single_slope_ml(selected, bound)
    except EstimationError as exc:
        raise CliError(EXIT_PARSE, f"estimation impossible: {exc}") from exc

    result = {"condition": condition, "model": model, "geometry": geom.to_dict() if model == "two_ray" else None,
              **fit.to_dict()}
    out = Outputs(Path(args.out))
    out.text("fit.json", dumps(result))
    out.text("model.json", dumps(model_to_dict(fit.params)))
    try:
        res = residuals(selected, fit.params, geom)
        out.csv("residuals.csv", _write_residuals, res)
    except CorrelationError:
        pass
    out.commit(RunManifest(_command_line(args), digest.hexdigest(), None, __version__))

    if args.format == "json":
        sys.stdout.write(dumps(result))
    else:
        print(format_table_row(f"{condition}/{args.method}", fit))
    if not fit.quality.passed:
        print("warning: data-quality rules not met (quality: fail)", file=sys.stderr)
    if not fit.converged:
        print("error: optimizer did not converge; results written and flagged", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


RESIDUAL_COLUMNS = ("t_s", "traveled_m", "d_m", "residual_db", "condition")


def _write_residuals(series: ResidualSeries, stream) -> None:
    import csv

    w = csv.writer(stream, lineterminator="\n")
    w.writerow(RESIDUAL_COLUMNS)
    t = series.t if series.t is not None else np.zeros(len(series))
    d = series.d if series.d is not None else np.full(len(series), np.nan)
    for ti, tr, di, r in zip(t, series.traveled, d, series.residual):
        w.writerow([f"{ti:.6g}", f"{tr:.6g}", f"{di:.6g}", f"{r:.6g}", series.condition])


def _read_residuals(text: str, path: str) -> ResidualSeries:
    import csv

    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"traveled_m", "residual_db"} <= set(reader.fieldnames):
        raise LogParseError([(1, f"{path}: residual CSV needs columns {', '.join(RESIDUAL_COLUMNS)}")])
    cols: dict[str, list] = {k: [] for k in RESIDUAL_COLUMNS}
    errors = []
    for lineno, row in enumerate(reader, start=2):
        try:
            cols["traveled_m"].append(float(row["traveled_m"]))
            cols["residual_db"].append(float(row["residual_db"]))
            cols["t_s"].append(float(row.get("t_s") or "nan"))
            cols["d_m"].append(float(row.get("d_m") or "nan"))
            cols["condition"].append((row.get("condition") or "").strip().upper())
        except (TypeError, ValueError) as exc:
            errors.append((lineno, str(exc)))
    if errors:
        raise LogParseError(errors)
    conds = set(cols["condition"])
    t = np.array(cols["t_s"])
    try:
        return ResidualSeries(
            traveled=np.array(cols["traveled_m"]),
            residual=np.array(cols["residual_db"]),
            condition=conds.pop() if len(conds) == 1 else "MIXED",
            t=None if np.isnan(t).all() else t,
            d=np.array(cols["d_m"]),
        )
    except ValueError as exc:
        raise LogParseError([(0, f"{path}: {exc}")]) from exc


# ---------------------------------------------------------------- correlate


def _load_series(path: str, args, cfg: dict, digest: Digest) -> ResidualSeries:
    """Residual CSV as exported by ``estimate``, or binned samples plus ``--model``."""
    raw = _read_bytes(path)
    digest.add_file(os.path.basename(path), raw)
    text = _decode(raw, path)
    header = text.split("\n", 1)[0]
    if "residual_db" in header:
        return _read_residuals(text, path)
    if "gain_db" in header:
        if args.model is None:
            raise CliError(EXIT_USAGE, f"{path} holds binned samples; pass --model MODEL.json to form residuals")
        model_data = _read_json(args.model, digest)
        try:
            model = model_from_dict(model_data)
        except (ValueError, TypeError, KeyError) as exc:
            raise CliError(EXIT_CONFIG, f"{args.model}: {exc}") from exc
        samples = read_samples_csv(io.StringIO(text))
        if args.condition:
            samples = [s for s in samples if s.condition == args.condition.upper()]
        return residuals(samples, model, _geometry(args, cfg))
    raise LogParseError([(1, f"{path}: expected a residual CSV or a binned-sample CSV")])


def cmd_correlate(args) -> int:
    digest = Digest()
    cfg = _read_json(args.config, digest)
    out = Outputs(Path(args.out))
    report: dict = {"mode": args.mode}

    if args.mode == "auto":
        if len(args.inputs) != 1:
            raise CliError(EXIT_USAGE, "auto mode takes exactly one input")
        series = _load_series(args.inputs[0], args, cfg, digest)
        digest.add_options(_options(args))
        step = args.delta_d
        if step is None:
            steps = np.diff(series.traveled)
            steps = steps[steps > 0]
            if len(steps) == 0:
                raise CliError(EXIT_CORRELATION, "travel distance does not advance; lag bin undefined")
            step = float(np.median(steps))
        ac = autocorrelation(series, step, max_lag=args.max_lag)
        out.csv("autocorr.csv", write_lag_csv, ac.lag, ac.rho, ac.n_pairs)
        report.update({"delta_d_bin_m": step, "sigma_hat_db": ac.sigma_hat, "n_samples": len(series)})
        fits = {}
        for name, fitter, rng in (("single_exp", fit_single_exp, args.single_range),
                                  ("double_exp", fit_double_exp, args.double_range)):
            try:
                fits[name] = fitter(ac, max_lag=rng).to_dict()
            except CorrelationError as exc:
                fits[name] = {"error": str(exc)}
        report["fits"] = fits
        single = fits["single_exp"]
        if "d_c_m" in single:
            flag = "" if single.get("identifiable") else "  (non-identifiable)"
            line = f"single-exp d_c = {single['d_c_m']:.6g} m{flag}"
        else:
            line = f"single-exp fit failed: {single['error']}"
    else:
        lag_series = _cross_series(args, cfg, digest)
        digest.add_options(_options(args))
        out.csv("crosscorr.csv", write_lag_csv, lag_series.delta_d_rx, lag_series.rho, lag_series.n)
        model = fit_linear_cross(lag_series, fit_range=tuple(args.fit_range))
        report["linear_model"] = model.to_dict()
        try:
            dist = decorrelation_distance(model)
            report["decorrelation_distance_m"] = dist
            line = f"de-correlation distance = {dist:.6g} m"
        except CorrelationError as exc:
            report["decorrelation_distance_m"] = None
            line = f"de-correlation distance undefined: {exc}"

    out.text("correlation.json", dumps(report))
    out.commit(RunManifest(_command_line(args), digest.hexdigest(), None, __version__))
    if args.format == "json":
        sys.stdout.write(dumps(report))
    else:
        print(line)
    return EXIT_OK


def _cross_series(args, cfg, digest) -> CrossCorrSeries:
    if len(args.inputs) == 1:
        # precomputed series (lag_m, rho, n) from an earlier run or another tool
        raw = _read_bytes(args.inputs[0])
        digest.add_file(os.path.basename(args.inputs[0]), raw)
        try:
            lag, rho, n = read_lag_csv(io.StringIO(_decode(raw, args.inputs[0])))
        except (ValueError, KeyError) as exc:
            raise LogParseError([(1, f"{args.inputs[0]}: {exc}")]) from exc
        return CrossCorrSeries(lag, rho, n, args.bin_m, 0, None)
    if len(args.inputs) != 2:
        raise CliError(EXIT_USAGE, "cross mode takes two residual inputs or one series CSV")
    a = _load_series(args.inputs[0], args, cfg, digest)
    b = _load_series(args.inputs[1], args, cfg, digest)
    return cross_correlation_aligned(a, b, bin_m=args.bin_m, min_n=args.min_n)


# ---------------------------------------------------------------- simulate


def _scenario_from_config(cfg: dict, seed: int):
    try:
        scen_data = dict(cfg.get("scenario", {}))
        scen_data["seed"] = seed
        scenario = Scenario.from_dict(scen_data)
        geom = None
        model_ref = cfg.get("model")
        if isinstance(model_ref, str):
            model, geom = presets.published_model(model_ref)
        elif isinstance(model_ref, dict):
            model = model_from_dict(model_ref)
        else:
            raise ValueError("scenario needs a 'model' object or published reference like 'A:XC70-S60M:OLOS'")
        if "geometry" in cfg:
            geom = LinkGeometry.from_dict(cfg["geometry"])
        shadow_ref = cfg.get("shadow", model_ref if isinstance(model_ref, str) else None)
        if isinstance(shadow_ref, str):
            spec = presets.published_shadow(shadow_ref)
        elif isinstance(shadow_ref, dict):
            spec = ShadowSpec.from_dict(shadow_ref, sigma=model.sigma)
        else:
            spec = ShadowSpec(model.sigma, "delta")
        rho = cfg.get("multilink", {}).get("rho") if "multilink" in cfg else None
        rho = None if rho is None else float(rho)
        if rho is not None and not 0.0 <= rho <= 1.0:
            raise ValueError("multilink.rho must lie in [0, 1]")
    except (ValueError, TypeError, KeyError, AttributeError) as exc:
        raise CliError(EXIT_CONFIG, f"scenario config: {exc}") from exc
    return scenario, model, geom, spec, rho, str(cfg.get("model_id", "model"))


def cmd_simulate(args) -> int:
    digest = Digest()
    out = Outputs(Path(args.out))
    if args.preset and args.scenario:
        raise CliError(EXIT_USAGE, "give either a scenario file or --preset, not both")
    if not args.preset and not args.scenario:
        raise CliError(EXIT_USAGE, "simulate needs a scenario file or --preset")

    if args.preset:
        cfg = _read_json(args.config, digest)
        seed = _resolve_seed(args.seed, cfg.get("seed"))
        digest.add_options({**_options(args), "seed": seed})
        lines = _run_preset(args, cfg, seed, out)
    else:
        cfg = _read_json(args.scenario, digest)
        seed = _resolve_seed(args.seed, cfg.get("scenario", {}).get("seed"))
        digest.add_options({**_options(args), "seed": seed})
        lines = _run_scenario(cfg, seed, out)
    out.commit(RunManifest(_command_line(args), digest.hexdigest(), seed, __version__))
    for line in lines:
        print(line)
    return EXIT_OK


def _run_scenario(cfg: dict, seed: int, out: Outputs) -> list[str]:
    scenario, model, geom, spec, rho, model_id = _scenario_from_config(cfg, seed)
    if rho is None:
        shadow = spec.generate(scenario.step_m, scenario.n, scenario.seed)
        trace = gain_trace(scenario, model, shadow, geom, model_id)
        stats = dip_durations(trace, scenario.threshold)
        out.csv("trace.csv", write_trace_csv, trace)
        out.csv("cdf.csv", write_cdf_csv, stats)
        summary = {"model_id": model_id, "n_dips": len(stats.durations),
                   "p_longer_2s": stats.survival(2.0), "scenario": scenario.to_dict(), "shadow": spec.to_dict()}
    else:
        sa, sb = gen_multilink(rho, spec, scenario.step_m, scenario.n, scenario.seed)
        ta = gain_trace(scenario, model, sa, geom, f"{model_id}_a")
        tb = gain_trace(scenario, model, sb, geom, f"{model_id}_b")
        stats = simultaneous_dip_durations(ta, tb, scenario.threshold)
        out.csv("trace_a.csv", write_trace_csv, ta)
        out.csv("trace_b.csv", write_trace_csv, tb)
        out.csv("cdf_simultaneous.csv", write_cdf_csv, stats)
        out.csv("cdf_single.csv", write_cdf_csv, dip_durations(ta, scenario.threshold))
        summary = {"model_id": model_id, "rho": rho, "n_dips": len(stats.durations),
                   "p_longer_2s": stats.survival(2.0), "scenario": scenario.to_dict(), "shadow": spec.to_dict()}
    out.text("summary.json", dumps(summary))
    return [f"{summary['n_dips']} dips; P(duration > 2 s) = {summary['p_longer_2s']:.6g}"]


PRESET_DEFAULT_DURATION_S = 400_000.0


def _run_preset(args, cfg: dict, seed: int, out: Outputs) -> list[str]:
    if args.preset in ("fig10", "fig11"):
        try:
            scen_data = {"duration_s": PRESET_DEFAULT_DURATION_S, **cfg.get("scenario", {}), "seed": seed}
            if args.duration is not None:
                scen_data["duration_s"] = args.duration
            scenario = Scenario.from_dict(scen_data)
        except (ValueError, TypeError, KeyError) as exc:
            raise CliError(EXIT_CONFIG, f"scenario config: {exc}") from exc
        runner = presets.fig10 if args.preset == "fig10" else presets.fig11
        stats, summary = runner(scenario)
        for key, st in stats.items():
            out.csv(f"cdf_{key}.csv", write_cdf_csv, st)
        out.text("summary.json", dumps({"scenario": scenario.to_dict(), "curves": summary}))
        return [f"{key}: {v['n_dips']} dips, P(> 2 s) = {v['p_longer_2s']:.6g}" for key, v in summary.items()]

    rows = {"table2": presets.table2, "table3": presets.table3, "table4": presets.table4}[args.preset](seed)
    out.text(f"{args.preset}.json", dumps(rows))
    lines = _table_lines(args.preset, rows)
    out.text(f"{args.preset}.txt", "\n".join(lines) + "\n")
    return lines


def _table_lines(preset: str, rows: list[dict]) -> list[str]:
    lines = []
    if preset == "table2":
        for r in rows:
            pub, fit = r["published"], r["fit"]["params"]
            keys = [k for k in pub if k not in ("model", "d0_m")]
            body = "  ".join(f"{k}={fmt(pub[k])}->{fmt(fit[k])}" for k in keys)
            lines.append(f"{r['condition']:<5}{r['method']:<4} m_c={r['fit']['m_c']}  {body}")
    elif preset == "table3":
        for r in rows:
            lines.append(f"{r['link']:<14}{r['condition']:<5} d_c {fmt(r['published_d_c_m'])} -> {fmt(r['fit']['d_c_m'])} m")
    else:
        for r in rows:
            p, f = r["published"], r["fit"]
            body = "  ".join(f"{k} {fmt(p[k])} -> {fmt(f[k])}" for k in ("r", "d_c1_m", "d_c2_m"))
            lines.append(f"{r['link']:<14}{r['condition']:<5} {body}")
    return lines


# ---------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="stdout format: table/CSV-style text or JSON")

    geom = _Parser(add_help=False)
    geom.add_argument("--h-tx", type=float, help="TX antenna height [m]")
    geom.add_argument("--h-rx", type=float, help="RX antenna height [m]")
    geom.add_argument("--frequency", type=float, help="carrier frequency [Hz]")
    geom.add_argument("--eps-r", type=float, nargs=2, metavar=("RE", "IM"), help="ground relative permittivity")
    geom.add_argument("--polarization", choices=("vertical", "horizontal"))

    p = _Parser(prog="shadowlink", description="V2V multilink shadowing toolkit")
    p.add_argument("--version", action="version", version=f"shadowlink {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("ingest", parents=[common], help="parse a packet log into binned channel-gain samples")
    s.add_argument("log")
    s.add_argument("--bin-s", type=float, default=0.4, help="time bin [s]")
    s.add_argument("--average", choices=("db", "linear"), default="db")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("estimate", parents=[common, geom], help="fit pathloss parameters to binned samples")
    s.add_argument("samples")
    s.add_argument("--condition", choices=("los", "olos"), required=True, type=str.lower)
    s.add_argument("--method", choices=("ols", "ml"), default="ml")
    s.add_argument("--model", choices=("two_ray", "single_slope"))
    s.add_argument("--censor-bound", type=float, help="censoring bound on channel gain [dB]")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("correlate", parents=[common, geom], help="auto- or cross-correlation of fading residuals")
    s.add_argument("inputs", nargs="+")
    s.add_argument("--mode", choices=("auto", "cross"), default="auto")
    s.add_argument("--model", help="pathloss model JSON (needed when inputs are binned samples)")
    s.add_argument("--condition", choices=("los", "olos"), type=str.lower)
    s.add_argument("--delta-d", type=float, help="auto mode lag bin [m] (default: median travel step)")
    s.add_argument("--max-lag", type=float, default=1000.0)
    s.add_argument("--single-range", type=float, default=100.0, help="single-exp fit range [m]")
    s.add_argument("--double-range", type=float, default=500.0, help="double-exp fit range [m]")
    s.add_argument("--bin-m", type=float, default=10.0, help="cross mode separation bin [m]")
    s.add_argument("--min-n", type=int, default=10)
    s.add_argument("--fit-range", type=float, nargs=2, default=(25.0, 115.0), metavar=("LO", "HI"))
    s.set_defaults(func=cmd_correlate)

    s = sub.add_parser("simulate", parents=[common], help="generate shadowing traces and dip-duration CDFs")
    s.add_argument("scenario", nargs="?")
    s.add_argument("--preset", choices=("fig10", "fig11", "table2", "table3", "table4"))
    s.add_argument("--seed", type=int, help=f"random seed (fallback: ${SEED_ENV})")
    s.add_argument("--duration", type=float, help="simulated time for figure presets [s]")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except CliError as exc:
        print(exc, file=sys.stderr)
        return exc.code
    except LogParseError as exc:
        for line, msg in exc.errors:
            print(f"line {line}: {msg}", file=sys.stderr)
        return EXIT_PARSE
    except CorrelationError as exc:
        print(f"correlation undefined: {exc}", file=sys.stderr)
        return EXIT_CORRELATION


if __name__ == "__main__":
    sys.exit(main())
