"""Reproduction presets for the published figures and tables.

The raw packet logs are not available, so the table presets are synthetic
round trips: data are simulated from the published parameters and pushed
through the same estimators used on measurements.
"""
from __future__ import annotations

import math

import numpy as np

from . import published as pub
from .correlate import ResidualSeries, autocorrelation, fit_double_exp, fit_single_exp
from .estimate import censor, fit_single_slope_ml, fit_single_slope_ols, fit_two_ray_ml, synthetic_samples
from .fadesim import (
    DipStats,
    Scenario,
    ShadowSpec,
    child_seed,
    dip_durations,
    gain_trace,
    gen_multilink,
    gen_shadow_double_exp,
    gen_shadow_single_exp,
    simultaneous_dip_durations,
    split_half_ks,
)
from .ingest import LinkConfig, censor_threshold_gain
from .models import LinkGeometry, PathlossParams, SingleSlopeParams, pathloss

FIG_LINK = ("A", "XC70-S60M")
# single-slope stand-in for the earlier joint LOS+OLOS model; its parameters are not published here
JOINT_STANDIN = SingleSlopeParams(pl_d0=59.53, alpha=2.73, sigma=5.52)


def link_geometry(link: str) -> LinkGeometry:
    tx, rx = link.split("-")
    return LinkGeometry(h_tx=pub.CARS[tx][0], h_rx=pub.CARS[rx][0])


def link_config(link: str) -> LinkConfig:
    tx, rx = link.split("-")
    return LinkConfig(
        tx_power=pub.TX_POWER_DBM,
        tx_cable_loss=pub.CARS[tx][1],
        rx_cable_loss=pub.CARS[rx][1],
        censor_rssi=pub.CENSOR_RSSI_DBM,
    )


def published_model(ref: str) -> tuple[PathlossParams, LinkGeometry]:
    """Resolve ``"A:XC70-S60M:LOS"`` to the published pathloss parameters and link geometry."""
    scenario, link, cond = _split_ref(ref)
    los, olos = pub.PATHLOSS_TABLE[(scenario, link)]
    row = los if cond == "LOS" else olos
    if row is None:
        raise KeyError(f"no {cond} pathloss parameters for {scenario}:{link}")
    return row.params, link_geometry(link)


def published_shadow(ref: str) -> ShadowSpec:
    """Double-exponential shadowing for ``"A:XC70-S60M:OLOS"`` with sigma from the pathloss table."""
    scenario, link, cond = _split_ref(ref)
    params, _ = published_model(ref)
    pair = pub.DECORRELATION_DOUBLE[(scenario, link)]
    vals = pair[0] if cond == "LOS" else pair[1]
    if vals is None:
        raise KeyError(f"no {cond} autocorrelation parameters for {scenario}:{link}")
    r, d1, d2 = vals
    return ShadowSpec(params.sigma, "double_exp", r=r, d_c1=d1, d_c2=d2)


def _split_ref(ref: str):
    try:
        scenario, link, cond = ref.split(":")
    except ValueError:
        raise KeyError(f"model reference must look like 'A:XC70-S60M:LOS', got {ref!r}") from None
    cond = cond.upper()
    if cond not in ("LOS", "OLOS"):
        raise KeyError(f"condition must be LOS or OLOS in {ref!r}")
    return scenario.upper(), link, cond


def fig10_models() -> dict[str, tuple[PathlossParams, LinkGeometry, ShadowSpec]]:
    scen, link = FIG_LINK
    los, geom = published_model(f"{scen}:{link}:LOS")
    olos, _ = published_model(f"{scen}:{link}:OLOS")
    return {
        "los": (los, geom, published_shadow(f"{scen}:{link}:LOS")),
        "olos": (olos, geom, published_shadow(f"{scen}:{link}:OLOS")),
        "joint": (
            JOINT_STANDIN,
            geom,
            ShadowSpec(JOINT_STANDIN.sigma, "single_exp", d_c=pub.JOINT_MODEL_DECORRELATION_M),
        ),
    }


def fig10(scenario: Scenario) -> tuple[dict[str, DipStats], dict]:
    """Single-link dip-duration CDFs: LOS, OLOS and joint model, each with and without autocorrelation."""
    stats: dict[str, DipStats] = {}
    summary: dict = {}
    for i, (name, (model, geom, spec)) in enumerate(fig10_models().items()):
        for j, (variant, sp) in enumerate((("autocorr", spec), ("delta", spec.without_correlation()))):
            shadow = sp.generate(scenario.step_m, scenario.n, child_seed(scenario.seed, 2 * i + j))
            trace = gain_trace(scenario, model, shadow, geom, model_id=f"{name}_{variant}")
            key = f"{name}_{variant}"
            stats[key] = dip_durations(trace, scenario.threshold)
            summary[key] = _dip_summary(stats[key], trace, scenario.threshold)
    return stats, summary


FIG11_RHOS = (0.0, 0.5, 1.0)


def fig11(scenario: Scenario) -> tuple[dict[str, DipStats], dict]:
    """Simultaneous dip durations for two co-located receivers, LOS and OLOS pairs.

    The same seed is used for every rho within a condition, so the curves
    differ only through the cross-correlation.
    """
    stats: dict[str, DipStats] = {}
    summary: dict = {}
    models = fig10_models()
    for i, cond in enumerate(("los", "olos")):
        model, geom, spec = models[cond]
        seed = child_seed(scenario.seed, i)
        for rho in FIG11_RHOS:
            sa, sb = gen_multilink(rho, spec, scenario.step_m, scenario.n, seed)
            ta = gain_trace(scenario, model, sa, geom, model_id=f"{cond}_a")
            tb = gain_trace(scenario, model, sb, geom, model_id=f"{cond}_b")
            key = f"{cond}_rho{rho:g}"
            stats[key] = simultaneous_dip_durations(ta, tb, scenario.threshold)
            summary[key] = _dip_summary(stats[key], None, scenario.threshold)
            if rho == 1.0:
                stats[f"{cond}_single"] = dip_durations(ta, scenario.threshold)
                summary[f"{cond}_single"] = _dip_summary(stats[f"{cond}_single"], ta, scenario.threshold)
    return stats, summary


def _dip_summary(stats: DipStats, trace, threshold) -> dict:
    out = {
        "n_dips": int(len(stats.durations)),
        "p_longer_0.6s": stats.survival(0.6),
        "p_longer_2s": stats.survival(2.0),
        "max_duration_s": float(stats.durations.max()) if len(stats.durations) else 0.0,
    }
    if trace is not None and len(stats.durations):
        try:
            out["split_half_ks"] = split_half_ks(trace, threshold)
        except ValueError:
            out["split_half_ks"] = None
    return out


def table2(seed: int) -> list[dict]:
    """Synthetic round trip of the pathloss fits for the reference link.

    LOS: two-ray model, distances uniform over the published span, censored
    at the link's RSSI floor, ML fit.  OLOS: single-slope model, distances
    log-uniform over the published span, ML and OLS fits.
    """
    scen, link = FIG_LINK
    los_row, olos_row = pub.PATHLOSS_TABLE[(scen, link)]
    geom = link_geometry(link)
    bound = censor_threshold_gain(link_config(link))
    rng = np.random.default_rng(child_seed(seed, 0))
    rows = []

    d = rng.uniform(los_row.d_min, los_row.d_max, los_row.m)
    true = los_row.params
    gain = -pathloss(d, true, geom) + rng.normal(0.0, true.sigma, len(d))
    g, c = censor(gain, bound)
    fit = fit_two_ray_ml(synthetic_samples(d, g, c, "LOS"), geom, bound)
    rows.append({"condition": "LOS", "method": "ml", "published": true.to_dict(), "fit": fit.to_dict()})

    d = np.exp(rng.uniform(math.log(olos_row.d_min), math.log(olos_row.d_max), olos_row.m))
    true = olos_row.params
    gain = -pathloss(d, true) + rng.normal(0.0, true.sigma, len(d))
    g, c = censor(gain, bound)
    samples = synthetic_samples(d, g, c, "OLOS")
    for method, fitted in (("ml", fit_single_slope_ml(samples, bound)), ("ols", fit_single_slope_ols(samples))):
        rows.append({"condition": "OLOS", "method": method, "published": true.to_dict(), "fit": fitted.to_dict()})
    return rows


ROUND_TRIP_N = 50_000
ROUND_TRIP_STEP_M = pub.CONVOY_SPEED_MPS * pub.BIN_SECONDS


def table3(seed: int) -> list[dict]:
    """Round trip of the single-exponential de-correlation distances (scenario A links)."""
    rows = []
    for i, ((scen, link), (d_los, d_olos)) in enumerate(sorted(pub.DECORRELATION_SINGLE.items())):
        if scen != "A":
            continue
        for j, (cond, d_c) in enumerate((("LOS", d_los), ("OLOS", d_olos))):
            if d_c is None:
                continue
            x = gen_shadow_single_exp(1.0, d_c, ROUND_TRIP_STEP_M, ROUND_TRIP_N, child_seed(seed, 2 * i + j))
            ac = autocorrelation(_series(x), ROUND_TRIP_STEP_M, max_lag=500.0)
            fit = fit_single_exp(ac)
            rows.append({"link": f"{scen}:{link}", "condition": cond, "published_d_c_m": d_c, "fit": fit.to_dict()})
    return rows


def table4(seed: int) -> list[dict]:
    """Round trip of the double-exponential parameters (scenario A links)."""
    rows = []
    for i, ((scen, link), pair) in enumerate(sorted(pub.DECORRELATION_DOUBLE.items())):
        if scen != "A":
            continue
        for j, (cond, vals) in enumerate((("LOS", pair[0]), ("OLOS", pair[1]))):
            if vals is None:
                continue
            r, d1, d2 = vals
            x = gen_shadow_double_exp(1.0, r, d1, d2, ROUND_TRIP_STEP_M, ROUND_TRIP_N, child_seed(seed, 2 * i + j))
            ac = autocorrelation(_series(x), ROUND_TRIP_STEP_M, max_lag=500.0)
            fit = fit_double_exp(ac)
            rows.append({
                "link": f"{scen}:{link}",
                "condition": cond,
                "published": {"r": r, "d_c1_m": d1, "d_c2_m": d2},
                "fit": fit.to_dict(),
            })
    return rows


def _series(x: np.ndarray) -> ResidualSeries:
    return ResidualSeries(np.arange(len(x)) * ROUND_TRIP_STEP_M, x)
