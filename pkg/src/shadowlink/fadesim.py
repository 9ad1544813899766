"""Correlated shadowing generation and fading-dip-duration statistics.

Shadowing is Gaussian in dB.  A single-exponential autocorrelation
exp(-dd / d_c) is realized exactly on a regular travel-distance grid by a
first-order autoregression started from its stationary distribution; the
double-exponential model is the sum of two independent such processes.

Random streams are derived from one integer seed with
``numpy.random.SeedSequence``: every sub-process gets a child sequence whose
spawn key extends the parent's by a fixed index, so results never depend on
call order or concurrency.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Sequence, Union

import numpy as np
from scipy.signal import lfilter

from .models import LinkGeometry, PathlossParams, deterministic_channel_gain

SeedLike = Union[int, np.random.SeedSequence]


def child_seed(seed: SeedLike, index: int) -> np.random.SeedSequence:
    """Deterministic child stream ``index`` of ``seed`` (does not mutate ``seed``)."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + (index,))
    return np.random.SeedSequence(int(seed), spawn_key=(index,))


def _rng(seed: SeedLike) -> np.random.Generator:
    return np.random.default_rng(seed)


def gen_shadow_single_exp(sigma: float, d_c: float, step_m: float, n: int, seed: SeedLike) -> np.ndarray:
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if d_c <= 0:
        raise ValueError("d_c must be > 0")
    a = math.exp(-step_m / d_c)
    z = _rng(seed).standard_normal(n)
    e = sigma * math.sqrt(1.0 - a * a) * z
    if n:
        e[0] = sigma * z[0]  # stationary start
    return lfilter([1.0], [1.0, -a], e)


def gen_shadow_delta(sigma: float, n: int, seed: SeedLike) -> np.ndarray:
    """Uncorrelated shadowing (delta autocorrelation)."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    return sigma * _rng(seed).standard_normal(n)


def gen_shadow_double_exp(
    sigma: float, r: float, d_c1: float, d_c2: float, step_m: float, n: int, seed: SeedLike
) -> np.ndarray:
    if not 0.0 <= r <= 1.0:
        raise ValueError("r must be in [0, 1]")
    s1 = gen_shadow_single_exp(sigma * math.sqrt(r), d_c1, step_m, n, child_seed(seed, 0))
    s2 = gen_shadow_single_exp(sigma * math.sqrt(1.0 - r), d_c2, step_m, n, child_seed(seed, 1))
    return s1 + s2


@dataclass(frozen=True)
class ShadowSpec:
    """Shadowing marginal (sigma) plus autocorrelation model."""

    sigma: float
    kind: str = "double_exp"  # single_exp | double_exp | delta
    d_c: float | None = None
    r: float | None = None
    d_c1: float | None = None
    d_c2: float | None = None

    def __post_init__(self):
        if self.kind == "single_exp" and self.d_c is None:
            raise ValueError("single_exp needs d_c")
        if self.kind == "double_exp" and None in (self.r, self.d_c1, self.d_c2):
            raise ValueError("double_exp needs r, d_c1, d_c2")
        if self.kind not in ("single_exp", "double_exp", "delta"):
            raise ValueError(f"unknown shadow kind {self.kind!r}")

    def generate(self, step_m: float, n: int, seed: SeedLike) -> np.ndarray:
        if self.kind == "single_exp":
            return gen_shadow_single_exp(self.sigma, self.d_c, step_m, n, seed)
        if self.kind == "double_exp":
            return gen_shadow_double_exp(self.sigma, self.r, self.d_c1, self.d_c2, step_m, n, seed)
        return gen_shadow_delta(self.sigma, n, seed)

    def acf(self, lag):
        lag = np.abs(np.asarray(lag, dtype=float))
        if self.kind == "single_exp":
            return np.exp(-lag / self.d_c)
        if self.kind == "double_exp":
            return self.r * np.exp(-lag / self.d_c1) + (1 - self.r) * np.exp(-lag / self.d_c2)
        return (lag == 0).astype(float)

    def without_correlation(self) -> "ShadowSpec":
        return ShadowSpec(self.sigma, "delta")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "sigma_db": self.sigma}
        if self.kind == "single_exp":
            out["d_c_m"] = self.d_c
        elif self.kind == "double_exp":
            out.update({"r": self.r, "d_c1_m": self.d_c1, "d_c2_m": self.d_c2})
        return out

    @classmethod
    def from_dict(cls, data: dict, sigma: float | None = None) -> "ShadowSpec":
        sig = float(data.get("sigma_db", sigma if sigma is not None else float("nan")))
        if math.isnan(sig):
            raise ValueError("shadow spec needs sigma_db (or a model sigma)")
        kind = data.get("kind", "double_exp")
        return cls(
            sigma=sig,
            kind=kind,
            d_c=_opt(data.get("d_c_m")),
            r=_opt(data.get("r")),
            d_c1=_opt(data.get("d_c1_m")),
            d_c2=_opt(data.get("d_c2_m")),
        )


def _opt(v):
    return None if v is None else float(v)


def gen_multilink(rho: float, spec: ShadowSpec, step_m: float, n: int, seed: SeedLike) -> tuple[np.ndarray, np.ndarray]:
    """Two shadowing sequences with zero-lag cross-correlation ``rho``.

    S_i = sqrt(rho) C + sqrt(1 - rho) I_i with C, I_1, I_2 independent
    draws of ``spec``; each S_i keeps the marginal variance and
    autocorrelation of ``spec``.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must be in [0, 1]")
    common = spec.generate(step_m, n, child_seed(seed, 0))
    own_a = spec.generate(step_m, n, child_seed(seed, 1))
    own_b = spec.generate(step_m, n, child_seed(seed, 2))
    wc, wi = math.sqrt(rho), math.sqrt(1.0 - rho)
    return wc * common + wi * own_a, wc * common + wi * own_b


@dataclass(frozen=True)
class Scenario:
    tx_rx_distance: float = 100.0
    speed: float = 25.0
    sample_step: float = 0.4
    duration: float = 400_000.0
    threshold: float = -90.0
    seed: int = 0

    def __post_init__(self):
        for name in ("tx_rx_distance", "speed", "sample_step", "duration"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.threshold < 0:
            raise ValueError("threshold must be < 0 dB")

    @property
    def step_m(self) -> float:
        return self.speed * self.sample_step

    @property
    def n(self) -> int:
        return int(round(self.duration / self.sample_step))

    def to_dict(self) -> dict:
        return {
            "tx_rx_distance_m": self.tx_rx_distance,
            "speed_mps": self.speed,
            "sample_step_s": self.sample_step,
            "duration_s": self.duration,
            "threshold_db": self.threshold,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        keys = {
            "tx_rx_distance_m": "tx_rx_distance",
            "speed_mps": "speed",
            "sample_step_s": "sample_step",
            "duration_s": "duration",
            "threshold_db": "threshold",
            "seed": "seed",
        }
        kw = {attr: data[k] for k, attr in keys.items() if k in data}
        if "seed" in kw:
            kw["seed"] = int(kw["seed"])
        return cls(**{k: (v if k == "seed" else float(v)) for k, v in kw.items()})


@dataclass(frozen=True)
class ShadowTrace:
    t: np.ndarray
    shadow: np.ndarray
    gain: np.ndarray
    model_id: str = ""

    @property
    def sample_step(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0


def gain_trace(
    scenario: Scenario,
    model: PathlossParams,
    shadow: np.ndarray,
    geom: LinkGeometry | None = None,
    model_id: str = "",
) -> ShadowTrace:
    """Channel gain at the scenario's fixed TX-RX distance plus a shadowing sequence."""
    shadow = np.asarray(shadow, dtype=float)
    if len(shadow) != scenario.n:
        raise ValueError(f"shadow has {len(shadow)} samples, scenario expects {scenario.n}")
    mean_gain = deterministic_channel_gain(scenario.tx_rx_distance, model, geom)
    t = np.arange(len(shadow)) * scenario.sample_step
    return ShadowTrace(t=t, shadow=shadow, gain=mean_gain + shadow, model_id=model_id)


@dataclass(frozen=True)
class DipStats:
    durations: np.ndarray  # seconds
    step: float

    @property
    def run_lengths(self) -> np.ndarray:
        return np.rint(self.durations / self.step).astype(np.int64) if self.step else np.zeros(0, np.int64)

    @property
    def cdf(self) -> tuple[np.ndarray, np.ndarray]:
        """(duration, P[D <= duration]) at each distinct duration."""
        if len(self.durations) == 0:
            return np.zeros(0), np.zeros(0)
        lengths, counts = np.unique(self.run_lengths, return_counts=True)
        return lengths * self.step, np.cumsum(counts) / counts.sum()

    def cdf_at(self, duration) -> np.ndarray:
        if len(self.durations) == 0:
            raise ValueError("no dips: CDF undefined")
        lengths = np.sort(self.run_lengths)
        k = np.floor(np.asarray(duration, dtype=float) / self.step + 1e-9)
        return np.searchsorted(lengths, k, side="right") / len(lengths)

    def survival(self, duration: float) -> float:
        """Fraction of dips strictly longer than ``duration`` seconds."""
        if len(self.durations) == 0:
            return 0.0
        return float(np.mean(self.durations > duration + 1e-9 * self.step))


def _run_lengths(below: np.ndarray) -> np.ndarray:
    """Lengths of maximal True runs, dropping runs that touch either end."""
    below = np.asarray(below, dtype=bool)
    if below.size == 0:
        return np.zeros(0, dtype=np.int64)
    edges = np.diff(below.astype(np.int8))
    starts = np.nonzero(edges == 1)[0] + 1
    ends = np.nonzero(edges == -1)[0] + 1
    # starts/ends of interior runs only: a run must begin after index 0 and end before the last sample
    if below[0]:
        ends = ends[1:]
    if below[-1]:
        starts = starts[:-1]
    return (ends - starts).astype(np.int64)


def _gain_of(trace) -> tuple[np.ndarray, float]:
    if isinstance(trace, ShadowTrace):
        return trace.gain, trace.sample_step
    return np.asarray(trace, dtype=float), None


def dip_durations(trace, threshold: float, step: float | None = None) -> DipStats:
    """Durations of maximal runs with gain < threshold.

    Runs cut by the start or end of the trace have unknown length and are
    left out.
    """
    gain, trace_step = _gain_of(trace)
    step = step if step is not None else trace_step
    if step is None or step <= 0:
        raise ValueError("sample step unknown; pass step=")
    return DipStats(_run_lengths(gain < threshold) * step, step)


def simultaneous_dip_durations(trace_a, trace_b, threshold: float, step: float | None = None) -> DipStats:
    ga, sa = _gain_of(trace_a)
    gb, _ = _gain_of(trace_b)
    if ga.shape != gb.shape:
        raise ValueError("traces must be aligned and of equal length")
    step = step if step is not None else sa
    if step is None or step <= 0:
        raise ValueError("sample step unknown; pass step=")
    return DipStats(_run_lengths((ga < threshold) & (gb < threshold)) * step, step)


def ks_distance(a: DipStats, b: DipStats) -> float:
    """Kolmogorov distance between two dip-duration CDFs."""
    if len(a.durations) == 0 or len(b.durations) == 0:
        raise ValueError("empty dip set")
    grid = np.union1d(a.durations, b.durations)
    return float(np.max(np.abs(a.cdf_at(grid) - b.cdf_at(grid))))


def geometric_cdf(p: float, k) -> np.ndarray:
    """P[L <= k] for run length L of i.i.d. below-threshold events with probability p."""
    k = np.asarray(k, dtype=float)
    return np.where(k >= 1, 1.0 - p ** np.floor(k), 0.0)


def ks_to_geometric(stats: DipStats, p: float) -> float:
    """Kolmogorov distance between the empirical run-length CDF and the geometric law."""
    lengths = np.sort(stats.run_lengths)
    if len(lengths) == 0:
        raise ValueError("empty dip set")
    # both CDFs are step functions on the integers; beyond the longest run the gap only shrinks
    k = np.arange(1, lengths[-1] + 1)
    emp = np.searchsorted(lengths, k, side="right") / len(lengths)
    return float(np.max(np.abs(emp - geometric_cdf(p, k))))


def split_half_ks(trace, threshold: float, step: float | None = None) -> float:
    """Kolmogorov distance between dip CDFs of the two halves of a trace (convergence check)."""
    gain, trace_step = _gain_of(trace)
    step = step if step is not None else trace_step
    h = len(gain) // 2
    return ks_distance(dip_durations(gain[:h], threshold, step), dip_durations(gain[h:], threshold, step))


def write_trace_csv(trace: ShadowTrace, stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    # sample index keeps rows distinct once t_s exceeds six significant digits
    w.writerow(["k", "t_s", "shadow_db", "gain_db"])
    for k, (t, s, g) in enumerate(zip(trace.t, trace.shadow, trace.gain)):
        w.writerow([k, f"{t:.6g}", f"{s:.6g}", f"{g:.6g}"])


def write_cdf_csv(stats: DipStats, stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["duration_s", "cdf"])
    x, F = stats.cdf
    for a, b in zip(x, F):
        w.writerow([f"{a:.6g}", f"{b:.6g}"])


def empirical_acf(x: np.ndarray, lags: Sequence[int]) -> np.ndarray:
    """Sample autocorrelation of a regularly sampled zero-mean sequence at integer lags."""
    x = np.asarray(x, dtype=float)
    var = np.dot(x, x) / len(x)
    return np.array([np.dot(x[: len(x) - k], x[k:]) / (len(x) - k) / var for k in lags])
