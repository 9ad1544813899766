"""Autocorrelation and multilink cross-correlation of large-scale fading.

Residuals are measured gain minus the deterministic model gain.  The
autocorrelation is estimated on the travel-distance axis, which is
irregularly sampled, by pooling residual products into lag bins of width
``delta_d_bin``.  Cross-correlation between two links sharing a transmitter
is pooled into RX-RX separation subgroups.
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .ingest import BinnedSample
from .models import LinkGeometry, PathlossParams, deterministic_channel_gain

log = logging.getLogger(__name__)

INV_E = math.exp(-1.0)


class CorrelationError(ValueError):
    """Correlation is undefined for the given data (e.g. zero variance)."""


@dataclass(frozen=True)
class ResidualSeries:
    traveled: np.ndarray
    residual: np.ndarray
    condition: str = "LOS"
    t: np.ndarray | None = None
    d: np.ndarray | None = None

    def __post_init__(self):
        traveled = np.asarray(self.traveled, dtype=float)
        residual = np.asarray(self.residual, dtype=float)
        if traveled.shape != residual.shape or traveled.ndim != 1:
            raise ValueError("traveled and residual must be 1-D and of equal length")
        if len(traveled) > 1 and np.any(np.diff(traveled) < 0):
            raise ValueError("traveled distance must be non-decreasing")
        object.__setattr__(self, "traveled", traveled)
        object.__setattr__(self, "residual", residual)
        for name in ("t", "d"):
            val = getattr(self, name)
            if val is not None:
                val = np.asarray(val, dtype=float)
                if val.shape != traveled.shape:
                    raise ValueError(f"{name} must match traveled in length")
                object.__setattr__(self, name, val)

    def __len__(self):
        return len(self.traveled)

    @property
    def mean(self) -> float:
        return float(self.residual.mean()) if len(self) else float("nan")


@dataclass(frozen=True)
class AutocorrSeries:
    lag: np.ndarray
    rho: np.ndarray
    n_pairs: np.ndarray
    delta_d_bin: float
    sigma_hat: float
    n_near_zero_pairs: int = 0  # j > i pairs with separation <= delta_d_bin / 2, not used

    @property
    def out_of_range(self) -> np.ndarray:
        return np.abs(self.rho) > 1.0


@dataclass(frozen=True)
class AutocorrFit:
    kind: str
    fit_range: float
    rmse: float
    d_c: float | None = None
    r: float | None = None
    d_c1: float | None = None
    d_c2: float | None = None
    converged: bool = True
    identifiable: bool = True
    notes: tuple[str, ...] = ()

    def __call__(self, lag):
        lag = np.abs(np.asarray(lag, dtype=float))
        if self.kind == "single_exp":
            return np.exp(-lag / self.d_c)
        return self.r * np.exp(-lag / self.d_c1) + (1 - self.r) * np.exp(-lag / self.d_c2)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "fit_range_m": self.fit_range, "rmse": self.rmse}
        if self.kind == "single_exp":
            out["d_c_m"] = self.d_c
        else:
            out.update({"r": self.r, "d_c1_m": self.d_c1, "d_c2_m": self.d_c2})
        out.update({"converged": self.converged, "identifiable": self.identifiable, "notes": list(self.notes)})
        return out


@dataclass(frozen=True)
class CrossCorrSeries:
    delta_d_rx: np.ndarray  # bin centres [m]
    rho: np.ndarray
    n: np.ndarray
    bin_m: float = 10.0
    omitted: tuple[tuple[float, int], ...] = ()  # (bin centre, n) for bins under the size floor
    far_link: str = "a"


@dataclass(frozen=True)
class LinearCrossModel:
    """rho(dd) = intercept + slope * dd, clipped at zero beyond the zero crossing."""

    intercept: float
    slope: float
    validity_limit: float = 120.0
    notes: tuple[str, ...] = field(default=())

    @property
    def cutoff(self) -> float:
        if self.slope < 0:
            return self.intercept / -self.slope
        return math.inf

    def __call__(self, delta_d_rx):
        dd = np.asarray(delta_d_rx, dtype=float)
        if np.any((dd > self.validity_limit) & (dd < self.cutoff)):
            warnings.warn(
                f"linear cross-correlation model evaluated beyond its {self.validity_limit:g} m validity limit",
                stacklevel=2,
            )
        val = self.intercept + self.slope * dd
        val = np.where(dd >= self.cutoff, 0.0, val)
        val = np.clip(val, 0.0, max(self.intercept, 0.0))
        return float(val) if np.ndim(dd) == 0 else val

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "slope_per_m": self.slope,
            "cutoff_m": None if math.isinf(self.cutoff) else self.cutoff,
            "validity_limit_m": self.validity_limit,
            "notes": list(self.notes),
        }


def residuals(
    samples: Sequence[BinnedSample],
    model: PathlossParams,
    geom: LinkGeometry | None = None,
) -> ResidualSeries:
    """Measured gain minus model gain for the uncensored samples."""
    kept = sorted((s for s in samples if not s.censored), key=lambda s: s.traveled)
    if not kept:
        raise CorrelationError("no uncensored samples")
    d = np.array([s.d for s in kept])
    gain = np.array([s.gain for s in kept])
    conditions = {s.condition for s in kept}
    return ResidualSeries(
        traveled=np.array([s.traveled for s in kept]),
        residual=gain - deterministic_channel_gain(d, model, geom),
        condition=conditions.pop() if len(conditions) == 1 else "MIXED",
        t=np.array([s.t for s in kept]),
        d=d,
    )


def bin_size(samples: Sequence[BinnedSample]) -> float:
    """Lag-bin width: mean link speed times the time bin, i.e. mean travel per bin.

    Pass the full binned stream (censored bins included) so gaps do not
    inflate the estimate.
    """
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    tr = [s.traveled for s in samples]
    return (tr[-1] - tr[0]) / (len(samples) - 1)


def autocorrelation(series: ResidualSeries, delta_d_bin: float, max_lag: float | None = 1000.0) -> AutocorrSeries:
    """Binned sample autocorrelation of residuals over travel distance.

    Pairs (i, j > i) whose separation lies in ((k - 1/2) dd, (k + 1/2) dd]
    contribute to bin k; the bin sum is normalized by (N_k - 1) times the
    residual variance about the model mean.  Bins with fewer than two pairs
    are dropped.  The zero-lag bin is 1 by definition, with ``n_pairs`` set
    to the number of samples.
    """
    if delta_d_bin <= 0:
        raise ValueError("delta_d_bin must be > 0")
    n = len(series)
    if n < 2:
        raise ValueError("need at least two residual samples")
    x = series.residual
    tr = series.traveled
    var = float(np.dot(x, x) / (n - 1))
    if var == 0.0:
        raise CorrelationError("zero-variance residuals: correlation undefined")

    k_max = None if max_lag is None else int(math.floor(max_lag / delta_d_bin + 0.5))
    sep_limit = math.inf if k_max is None else (k_max + 0.5) * delta_d_bin
    size = (k_max + 1) if k_max is not None else int(math.ceil((tr[-1] - tr[0]) / delta_d_bin + 0.5)) + 1
    sums = np.zeros(size)
    counts = np.zeros(size, dtype=np.int64)
    near_zero = 0
    for off in range(1, n):
        sep = tr[off:] - tr[:-off]
        if sep.min() > sep_limit:
            break
        k = np.ceil(sep / delta_d_bin - 0.5).astype(np.int64)
        keep = k < size
        if not keep.all():
            k = k[keep]
            prod = (x[off:] * x[:-off])[keep]
        else:
            prod = x[off:] * x[:-off]
        zero = k <= 0
        near_zero += int(zero.sum())
        k, prod = k[~zero], prod[~zero]
        sums += np.bincount(k, weights=prod, minlength=size)
        counts += np.bincount(k, minlength=size)

    if near_zero:
        log.info("%d pairs with separation <= delta_d_bin/2 left out of the lag bins", near_zero)
    valid = counts >= 2
    valid[0] = False
    lag_idx = np.nonzero(valid)[0]
    rho = sums[lag_idx] / ((counts[lag_idx] - 1) * var)
    if np.any(np.abs(rho) > 1):
        log.info("%d lag bins fall outside [-1, 1]; reported unclipped", int(np.sum(np.abs(rho) > 1)))
    return AutocorrSeries(
        lag=np.concatenate([[0.0], lag_idx * delta_d_bin]),
        rho=np.concatenate([[1.0], rho]),
        n_pairs=np.concatenate([[n], counts[lag_idx]]).astype(np.int64),
        delta_d_bin=float(delta_d_bin),
        sigma_hat=math.sqrt(var),
        n_near_zero_pairs=near_zero,
    )


def _in_range(ac: AutocorrSeries, max_lag: float):
    sel = ac.lag <= max_lag + 1e-9
    return ac.lag[sel], ac.rho[sel]


def fit_single_exp(ac: AutocorrSeries, max_lag: float = 100.0) -> AutocorrFit:
    """Least-squares fit of exp(-lag / d_c) over lags in [0, max_lag].

    The fit is flagged non-identifiable when the fitted curve has dropped
    below 0.05 by the first non-zero lag (no resolvable decay) or stays
    above 0.95 across the whole range.
    """
    lag, rho = _in_range(ac, max_lag)
    if len(lag) < 3:
        raise CorrelationError(f"need >= 3 lag bins within {max_lag} m, got {len(lag)}")
    if np.all(rho[lag > 0] <= 0):
        raise CorrelationError("all non-zero-lag correlations are non-positive")

    def sse(log_dc):
        return float(np.sum((rho - np.exp(-lag / math.exp(log_dc))) ** 2))

    lo, hi = math.log(1e-3), math.log(1e6)
    grid = np.linspace(lo, hi, 200)
    i = int(np.argmin([sse(g) for g in grid]))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(sse, bounds=(a, b), method="bounded", options={"xatol": 1e-10})
    d_c = math.exp(res.x)
    notes = []
    first = lag[lag > 0].min()
    identifiable = True
    if math.exp(-first / d_c) < 0.05:
        identifiable = False
        notes.append("decay faster than the first lag bin; d_c not identifiable")
    if math.exp(-lag.max() / d_c) > 0.95:
        identifiable = False
        notes.append("correlation does not decay over the fit range; d_c not identifiable")
    return AutocorrFit(
        kind="single_exp",
        fit_range=float(max_lag),
        rmse=math.sqrt(res.fun / len(lag)),
        d_c=d_c,
        converged=bool(res.success),
        identifiable=identifiable,
        notes=tuple(notes),
    )


def fit_double_exp(ac: AutocorrSeries, max_lag: float = 500.0) -> AutocorrFit:
    """Minimum-MSE fit of r e^(-lag/d_c1) + (1 - r) e^(-lag/d_c2) over [0, max_lag]."""
    lag, rho = _in_range(ac, max_lag)
    if len(lag) < 4:
        raise CorrelationError(f"need >= 4 lag bins within {max_lag} m, got {len(lag)}")

    def mse(theta):
        r, l1, l2 = theta
        model = r * np.exp(-lag / np.exp(l1)) + (1 - r) * np.exp(-lag / np.exp(l2))
        return float(np.mean((rho - model) ** 2))

    scale = max_lag / 500.0
    starts = [
        (r0, math.log(a * scale), math.log(b * scale))
        for r0 in (0.3, 0.7)
        for a, b in ((5.0, 100.0), (10.0, 300.0), (20.0, 500.0), (50.0, 1000.0))
    ]
    bounds = [(0.0, 1.0), (math.log(1e-2), math.log(1e6)), (math.log(1e-2), math.log(1e6))]
    best = None
    for x0 in starts:
        res = minimize(mse, x0, method="L-BFGS-B", bounds=bounds, options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 5000})
        if best is None or res.fun < best.fun:
            best = res
    # derivative-free polish from the best local solution
    polish = minimize(
        lambda th: mse((min(max(th[0], 0.0), 1.0), th[1], th[2])),
        best.x,
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-16, "maxfev": 20_000},
    )
    if polish.fun < best.fun:
        x = polish.x
        x[0] = min(max(x[0], 0.0), 1.0)
        fun, success = polish.fun, bool(polish.success)
    else:
        x, fun, success = best.x, best.fun, bool(best.success)

    r, d1, d2 = float(x[0]), math.exp(x[1]), math.exp(x[2])
    if d1 > d2:
        r, d1, d2 = 1.0 - r, d2, d1
    notes = []
    identifiable = True
    if r > 1 - 1e-3:
        identifiable = False
        notes.append("r ~ 1: reduces to a single exponential; d_c2 not identifiable")
    elif r < 1e-3:
        identifiable = False
        notes.append("r ~ 0: reduces to a single exponential; d_c1 not identifiable")
    if abs(d2 - d1) <= 1e-2 * d2:
        identifiable = False
        notes.append("d_c1 ~ d_c2: any weight r fits equally well")
    return AutocorrFit(
        kind="double_exp",
        fit_range=float(max_lag),
        rmse=math.sqrt(fun),
        r=r,
        d_c1=d1,
        d_c2=d2,
        converged=success,
        identifiable=identifiable,
        notes=tuple(notes),
    )


def align_series(a: ResidualSeries, b: ResidualSeries, tol: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs matching each sample of ``a`` to the nearest-in-time sample of ``b``."""
    if a.t is None or b.t is None:
        raise ValueError("alignment needs timestamps on both series")
    order = np.argsort(b.t, kind="stable")
    tb = b.t[order]
    pos = np.searchsorted(tb, a.t)
    left = np.clip(pos - 1, 0, len(tb) - 1)
    right = np.clip(pos, 0, len(tb) - 1)
    pick = np.where(np.abs(tb[left] - a.t) <= np.abs(tb[right] - a.t), left, right)
    ok = np.abs(tb[pick] - a.t) <= tol
    return np.nonzero(ok)[0], order[pick[ok]]


def cross_correlation(
    link_a,
    link_b,
    rx_separation,
    bin_m: float = 10.0,
    min_n: int = 10,
) -> CrossCorrSeries:
    """Per-subgroup sample cross-correlation of two time-aligned residual sequences.

    ``link_a``/``link_b`` are ResidualSeries or plain arrays of equal length;
    ``rx_separation`` is the RX-RX distance at each index.  Subgroups are
    [k * bin_m, (k + 1) * bin_m); those with fewer than ``min_n`` pairs are
    omitted and listed in ``omitted``.
    """
    x = np.asarray(getattr(link_a, "residual", link_a), dtype=float)
    y = np.asarray(getattr(link_b, "residual", link_b), dtype=float)
    sep = np.asarray(rx_separation, dtype=float)
    if not (x.shape == y.shape == sep.shape):
        raise ValueError("link residuals and separations must have equal length")
    if np.dot(x, x) == 0 or np.dot(y, y) == 0:
        raise CorrelationError("zero-variance residuals: correlation undefined")
    k = np.floor(np.abs(sep) / bin_m).astype(np.int64)
    centers, rhos, ns, omitted = [], [], [], []
    for kk in np.unique(k):
        m = k == kk
        n = int(m.sum())
        center = (kk + 0.5) * bin_m
        sxx, syy = float(np.dot(x[m], x[m])), float(np.dot(y[m], y[m]))
        if n < min_n or sxx == 0 or syy == 0:
            omitted.append((center, n))
            continue
        # (n-1) factors in the variance estimates cancel against the normalization
        rhos.append(float(np.dot(x[m], y[m])) / math.sqrt(sxx * syy))
        centers.append(center)
        ns.append(n)
    if omitted:
        log.info("omitted %d RX-separation subgroups with fewer than %d pairs", len(omitted), min_n)
    da = getattr(link_a, "d", None)
    db = getattr(link_b, "d", None)
    far = "a" if da is None or db is None or np.mean(da) >= np.mean(db) else "b"
    return CrossCorrSeries(
        delta_d_rx=np.array(centers),
        rho=np.array(rhos),
        n=np.array(ns, dtype=np.int64),
        bin_m=float(bin_m),
        omitted=tuple(omitted),
        far_link=far,
    )


def cross_correlation_aligned(a: ResidualSeries, b: ResidualSeries, bin_m: float = 10.0, tol: float = 0.2, min_n: int = 10) -> CrossCorrSeries:
    """Align two links by timestamp and correlate against |d_a - d_b|.

    The RX-RX separation is taken as the difference of the two TX-RX
    distances, which holds when both receivers are on the same side of the
    transmitter (convoy geometry).
    """
    if a.d is None or b.d is None:
        raise ValueError("series need TX-RX distances to derive the RX separation")
    ia, ib = align_series(a, b, tol)
    if len(ia) == 0:
        raise CorrelationError("no time-aligned samples between the two links")
    sep = np.abs(a.d[ia] - b.d[ib])
    xa = ResidualSeries(a.traveled[ia], a.residual[ia], a.condition, a.t[ia], a.d[ia])
    xb = ResidualSeries(a.traveled[ia], b.residual[ib], b.condition, a.t[ia], b.d[ib])
    return cross_correlation(xa, xb, sep, bin_m=bin_m, min_n=min_n)


def fit_linear_cross(series: CrossCorrSeries, fit_range: tuple[float, float] = (25.0, 115.0)) -> LinearCrossModel:
    """OLS line through binned rho against bin-centre RX separation."""
    lo, hi = fit_range
    sel = (series.delta_d_rx >= lo - 1e-9) & (series.delta_d_rx <= hi + 1e-9)
    dd, rho = series.delta_d_rx[sel], series.rho[sel]
    if len(dd) < 3:
        raise CorrelationError(f"need >= 3 subgroups in [{lo}, {hi}] m, got {len(dd)}")
    xm, ym = dd.mean(), rho.mean()
    slope = float(np.sum((dd - xm) * (rho - ym)) / np.sum((dd - xm) ** 2))
    intercept = float(ym - slope * xm)
    notes = ()
    if slope > 0:
        warnings.warn("cross-correlation increases with RX separation", stacklevel=2)
        notes = ("positive slope: monotone-decreasing expectation violated",)
    return LinearCrossModel(intercept, slope, notes=notes)


def decorrelation_distance(model) -> float:
    """Smallest separation at which the model correlation falls to 1/e."""
    if isinstance(model, AutocorrFit):
        if model.kind == "single_exp":
            return float(model.d_c)
        f = lambda x: model(x) - INV_E  # noqa: E731
        hi = max(model.d_c1, model.d_c2)
        while f(hi) > 0:
            hi *= 2
        return float(brentq(f, 0.0, hi, xtol=1e-12))
    if isinstance(model, LinearCrossModel):
        if model.slope >= 0:
            if model.intercept <= INV_E:
                raise CorrelationError("non-decreasing cross model: de-correlation distance undefined")
            raise CorrelationError("cross model never decays to 1/e")
        return max(0.0, (model.intercept - INV_E) / -model.slope)
    raise TypeError(f"unsupported model {type(model).__name__}")


def write_lag_csv(lag, rho, n, stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["lag_m", "rho", "n"])
    for a, b, c in zip(lag, rho, n):
        w.writerow([f"{a:.6g}", f"{b:.6g}", int(c)])


def read_lag_csv(stream: IO[str]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or not {"lag_m", "rho", "n"} <= set(reader.fieldnames):
        raise ValueError("series CSV needs columns lag_m,rho,n")
    rows = [(float(r["lag_m"]), float(r["rho"]), int(r["n"])) for r in reader]
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    return arr[:, 0], arr[:, 1], arr[:, 2].astype(np.int64)
