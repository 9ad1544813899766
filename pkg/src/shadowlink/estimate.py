"""Pathloss parameter estimation from binned channel-gain samples.

Censored samples (all packets in the bin lost or below the RSSI floor) enter
the likelihood through the Gaussian CDF at the censoring bound, i.e. a
left-censored (Tobit) regression in the dB domain.  Without censored samples
the ML fit reduces to Gaussian regression.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import log_ndtr

from .ingest import BinnedSample, QualityReport, quality_check
from .models import (
    LinkGeometry,
    PathlossParams,
    SingleSlopeParams,
    TwoRayParams,
    free_space_pathloss,
    reflection_coefficient,
    wrap_degrees,
)

log = logging.getLogger(__name__)

_HALF_LOG_2PI = 0.5 * np.log(2 * np.pi)
NM_OPTIONS = {"xatol": 1e-6, "fatol": 1e-6, "maxfev": 10_000, "adaptive": False}
PHASE_STARTS_DEG = (0.0, 90.0, 180.0, 270.0)
RATIO_STARTS_DB = (-15.0, -5.0, 0.0)


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class FitResult:
    params: PathlossParams
    loglik: float | None
    m: int
    m_c: int
    converged: bool
    quality: QualityReport
    method: str

    def to_dict(self) -> dict:
        q = self.quality
        return {
            "method": self.method,
            "params": self.params.to_dict(),
            "loglik": self.loglik,
            "m": self.m,
            "m_c": self.m_c,
            "d_min": q.d_min,
            "d_max": q.d_max,
            "converged": self.converged,
            "quality": "pass" if q.passed else "fail",
            "quality_detail": {
                "ratio_ok": q.ratio_ok,
                "count_ok": q.count_ok,
                "max_gap": q.max_gap,
            },
        }


def _arrays(samples: Sequence[BinnedSample]):
    d = np.array([s.d for s in samples], dtype=float)
    gain = np.array([s.gain for s in samples], dtype=float)
    cens = np.array([s.censored for s in samples], dtype=bool)
    return d, gain, cens


def _bound_array(gain, cens, censor_bound):
    # censored samples carry their bound as the stored gain
    if censor_bound is None:
        return gain
    return np.full_like(gain, float(censor_bound))


def _tobit(gain, cens, mean_gain, sigma, bound) -> float:
    z_obs = (gain[~cens] - mean_gain[~cens]) / sigma
    ll_obs = -0.5 * z_obs**2 - np.log(sigma) - _HALF_LOG_2PI
    ll_cens = log_ndtr((bound[cens] - mean_gain[cens]) / sigma)
    return float(ll_obs.sum() + ll_cens.sum())


def censored_loglik(
    samples: Sequence[BinnedSample],
    mean_fn: Callable,
    sigma: float,
    censor_bound: float | None = None,
) -> float:
    """Log-likelihood of samples under gain ~ N(-mean_fn(d), sigma^2), left-censored.

    ``mean_fn`` maps distance to pathloss in dB.  ``censor_bound`` defaults to
    the gain stored on each censored sample.
    """
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    d, gain, cens = _arrays(samples)
    if len(d) == 0:
        return 0.0
    mean_gain = -np.asarray(mean_fn(d), dtype=float)
    return _tobit(gain, cens, mean_gain, sigma, _bound_array(gain, cens, censor_bound))


def _quality(samples) -> QualityReport:
    return quality_check(samples)


def fit_single_slope_ols(samples: Sequence[BinnedSample], d0: float = 10.0) -> FitResult:
    """Least-squares single-slope fit on uncensored samples only."""
    d, gain, cens = _arrays(samples)
    d, gain = d[~cens], gain[~cens]
    if len(d) < 2:
        raise EstimationError("OLS needs at least 2 uncensored samples")
    x = 10 * np.log10(d / d0)
    if np.ptp(x) == 0:
        raise EstimationError("degenerate design: all distances equal")
    y = -gain
    xm, ym = x.mean(), y.mean()
    alpha = float(np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2))
    pl_d0 = float(ym - alpha * xm)
    n = len(x)
    if n > 2:
        resid = y - (pl_d0 + alpha * x)
        sigma = float(np.sqrt(np.sum(resid**2) / (n - 2)))
    else:
        warnings.warn("two samples define the line exactly; sigma reported as 0", stacklevel=2)
        sigma = 0.0
    return FitResult(
        params=SingleSlopeParams(pl_d0, alpha, sigma, d0),
        loglik=None,
        m=len(samples),
        m_c=int(cens.sum()),
        converged=True,
        quality=_quality(samples),
        method="ols",
    )


def _nelder_mead(objective, x0, steps):
    x0 = np.asarray(x0, dtype=float)
    simplex = np.vstack([x0] + [x0 + np.eye(len(x0))[i] * steps[i] for i in range(len(x0))])
    res = minimize(objective, x0, method="Nelder-Mead", options={**NM_OPTIONS, "initial_simplex": simplex})
    # one restart from the optimum guards against simplex collapse
    simplex = np.vstack([res.x] + [res.x + np.eye(len(x0))[i] * steps[i] * 0.1 for i in range(len(x0))])
    res2 = minimize(objective, res.x, method="Nelder-Mead", options={**NM_OPTIONS, "initial_simplex": simplex})
    if res2.fun <= res.fun:
        res2.nfev += res.nfev
        return res2
    return res


def fit_single_slope_ml(
    samples: Sequence[BinnedSample],
    censor_bound: float | None = None,
    d0: float = 10.0,
) -> FitResult:
    """Censored maximum-likelihood single-slope fit over (PL(d0), alpha, sigma)."""
    d, gain, cens = _arrays(samples)
    if (~cens).sum() < 1:
        raise EstimationError("ML fit needs at least one uncensored sample")
    if censor_bound is not None and not np.isfinite(censor_bound):
        raise EstimationError("censor bound must be finite")
    bound = _bound_array(gain, cens, censor_bound)
    x = 10 * np.log10(d / d0)
    xc = x.mean()

    try:
        start = fit_single_slope_ols(samples, d0).params
        a0 = start.pl_d0 + start.alpha * xc
        alpha0, sigma0 = start.alpha, max(start.sigma, 0.5)
    except EstimationError:
        a0, alpha0, sigma0 = float(np.mean(-gain[~cens])), 2.0, 5.0

    # intercept is parameterized at the mean regressor to decorrelate it from the slope
    def objective(theta):
        a, alpha, log_s = theta
        mean_gain = -(a + alpha * (x - xc))
        return -_tobit(gain, cens, mean_gain, np.exp(log_s), bound)

    res = _nelder_mead(objective, [a0, alpha0, np.log(sigma0)], steps=[1.0, 0.2, 0.1])
    a, alpha, log_s = res.x
    params = SingleSlopeParams(float(a - alpha * xc), float(alpha), float(np.exp(log_s)), d0)
    if not res.success:
        log.warning("single-slope ML did not converge: %s", res.message)
    return FitResult(params, float(-res.fun), len(samples), int(cens.sum()), bool(res.success), _quality(samples), "ml")


def fit_two_ray_ml(
    samples: Sequence[BinnedSample],
    geom: LinkGeometry,
    censor_bound: float | None = None,
) -> FitResult:
    """Censored ML fit of the two-ray model over (g_LOS, g_gr/g_LOS, delta_phi, sigma).

    The objective is multi-modal in the phase offset, so the simplex search
    starts from every combination of four phases and three gain ratios and
    keeps the best final likelihood.
    """
    if geom.h_tx + geom.h_rx <= 0:
        raise EstimationError("antenna heights must sum to a positive value")
    d, gain, cens = _arrays(samples)
    if (~cens).sum() < 1:
        raise EstimationError("ML fit needs at least one uncensored sample")
    if np.any(d <= 0):
        raise EstimationError("two-ray fit needs horizontal distances > 0")
    bound = _bound_array(gain, cens, censor_bound)

    fspl = free_space_pathloss(np.hypot(d, geom.h_tx - geom.h_rx), geom.wavelength)
    g_start = float(np.median(gain[~cens] + fspl[~cens]))
    s_start = float(max(np.std(gain[~cens] + fspl[~cens]), 0.5))

    # geometry-only terms are fixed during the search
    k = geom.wavenumber
    d_los = np.hypot(d, geom.h_tx - geom.h_rx)
    d_gr = np.hypot(d, geom.h_tx + geom.h_rx)
    los_term = np.exp(-1j * k * d_los) / d_los
    gr_term = reflection_coefficient(d, geom) * np.exp(-1j * k * d_gr) / d_gr
    pl_const = 20 * np.log10(4 * np.pi / geom.wavelength)

    def objective(theta):
        g, ratio, phi, log_s = theta
        field_sum = los_term + 10.0 ** (ratio / 20.0) * np.exp(1j * phi) * gr_term
        pl = pl_const - g - 20 * np.log10(np.abs(field_sum))
        return -_tobit(gain, cens, -pl, np.exp(log_s), bound)

    best = None
    for phi_deg in PHASE_STARTS_DEG:
        for ratio in RATIO_STARTS_DB:
            res = _nelder_mead(
                objective,
                [g_start, ratio, np.deg2rad(phi_deg), np.log(s_start)],
                steps=[1.0, 3.0, 0.5, 0.1],
            )
            if best is None or res.fun < best.fun:
                best = res
    g, ratio, phi, log_s = best.x
    params = TwoRayParams(float(g), float(ratio), wrap_degrees(np.rad2deg(phi)), float(np.exp(log_s)))
    if not best.success:
        log.warning("two-ray ML did not converge: %s", best.message)
    return FitResult(params, float(-best.fun), len(samples), int(cens.sum()), bool(best.success), _quality(samples), "ml")


def format_table_row(label: str, fit: FitResult) -> str:
    """One Table-II style row: counts, distance span, parameters, quality flag."""
    q = fit.quality
    p = fit.params
    head = f"{label:<12} {fit.m:>6} {fit.m_c:>6} {q.d_min:>7.0f} {q.d_max:>7.0f}"
    if isinstance(p, TwoRayParams):
        body = f"{p.g_los_db:>7.2f} {p.gain_ratio_db:>7.2f} {p.delta_phi:>7.2f} {p.sigma:>6.2f}"
    else:
        body = f"{p.pl_d0:>7.2f} {p.alpha:>6.2f} {p.sigma:>6.2f}"
    return f"{head} {body}  quality: {'pass' if q.passed else 'fail'}"


def synthetic_samples(d, gain, censored, condition: str = "LOS", traveled=None, t=None) -> list[BinnedSample]:
    """Wrap arrays as BinnedSample records (handy for simulated data)."""
    d = np.asarray(d, dtype=float)
    traveled = np.zeros_like(d) if traveled is None else np.asarray(traveled, dtype=float)
    t = np.zeros_like(d) if t is None else np.asarray(t, dtype=float)
    return [
        BinnedSample(float(di), float(tr), float(g), bool(c), condition, 1, float(ti))
        for di, tr, g, c, ti in zip(d, traveled, gain, censored, t)
    ]


def censor(gain, bound: float):
    """Apply left-censoring: values below ``bound`` are replaced by it and flagged."""
    gain = np.asarray(gain, dtype=float)
    cens = gain < bound
    return np.where(cens, bound, gain), cens
