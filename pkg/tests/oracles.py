"""Independent reference implementations used as test oracles.

These are deliberately naive (scalar loops, cmath, scipy.stats) and share no
code with the package, so agreement is evidence of correctness rather than
of self-consistency.
"""
from __future__ import annotations

import cmath
import math

import numpy as np
from scipy import integrate, stats

C0 = 299_792_458.0
LAMBDA = C0 / 5.9e9


def friis_db(d_path: float, lam: float = LAMBDA) -> float:
    return 20 * math.log10(4 * math.pi * d_path / lam)


def gamma(theta_sin: float, theta_cos: float, eps: complex, pol: str) -> complex:
    root = cmath.sqrt(eps - theta_cos**2)
    num = eps * theta_sin if pol == "vertical" else theta_sin
    return (num - root) / (num + root)


def two_ray_db(d, g_los_db, ratio_db, phi_deg, h_tx=1.60, h_rx=1.45, lam=LAMBDA, eps=5 - 0.2j, pol="vertical"):
    """Scalar two-ray pathloss: direct ray plus weighted, phase-shifted ground ray."""
    k = 2 * math.pi / lam
    d_los = math.sqrt(d * d + (h_tx - h_rx) ** 2)
    d_gr = math.sqrt(d * d + (h_tx + h_rx) ** 2)
    g = gamma((h_tx + h_rx) / d_gr, d / d_gr, eps, pol)
    amp = 10 ** (ratio_db / 20)
    # reference the phase to the direct ray; d_gr - d_los = 4 h_tx h_rx / (d_gr + d_los)
    excess = 4 * h_tx * h_rx / (d_gr + d_los)
    e = 1 / d_los + amp * cmath.exp(1j * (math.radians(phi_deg) - k * excess)) * g / d_gr
    return 20 * math.log10(4 * math.pi / lam) - g_los_db - 20 * math.log10(abs(e))


def single_slope_db(d, pl0, alpha, d0=10.0):
    return pl0 + 10 * alpha * math.log10(d / d0)


def tobit_loglik(gain, censored, mean_gain, sigma, bound):
    total = 0.0
    for g, c, m, b in zip(gain, censored, mean_gain, bound):
        total += stats.norm.logcdf(b, loc=m, scale=sigma) if c else stats.norm.logpdf(g, loc=m, scale=sigma)
    return total


def autocorr_pairs(traveled, x, delta, max_lag):
    """Brute-force binned autocorrelation over all pairs j > i.

    Returns {k: (rho_k, N_k)} for k >= 1 with N_k >= 2.
    """
    n = len(x)
    var = sum(v * v for v in x) / (n - 1)
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    k_max = math.floor(max_lag / delta + 0.5)
    for i in range(n):
        for j in range(i + 1, n):
            sep = traveled[j] - traveled[i]
            k = math.ceil(sep / delta - 0.5)
            if k < 1 or k > k_max:
                continue
            sums[k] = sums.get(k, 0.0) + x[i] * x[j]
            counts[k] = counts.get(k, 0) + 1
    return {k: (sums[k] / ((counts[k] - 1) * var), counts[k]) for k in sums if counts[k] >= 2}


def cross_corr_zero_mean(x, y):
    """Sample covariance over the product of sample deviations about the model mean (zero)."""
    n = len(x)
    cov = sum(a * b for a, b in zip(x, y)) / (n - 1)
    sx = math.sqrt(sum(a * a for a in x) / (n - 1))
    sy = math.sqrt(sum(b * b for b in y) / (n - 1))
    return cov / (sx * sy)


def interior_runs(flags) -> list[int]:
    """Lengths of maximal True runs that neither start at index 0 nor end at the last index."""
    runs, start = [], None
    for i, f in enumerate(flags):
        if f and start is None:
            start = i
        if not f and start is not None:
            if start > 0:
                runs.append(i - start)
            start = None
    return runs


def geometric_tail(p: float, k: int) -> float:
    """P[L > k] for i.i.d. Bernoulli(p) runs conditioned on starting."""
    return p**k


def below_probability(margin_db: float, sigma: float) -> float:
    return float(stats.norm.cdf(-margin_db / sigma))


def expected_censored_fraction_loguniform(pl0, alpha, sigma, bound, d_lo, d_hi, d0=10.0):
    """E over log-uniform distance of P[gain < bound] with gain ~ N(-PL(d), sigma^2)."""
    def integrand(u):
        d = math.exp(u)
        return stats.norm.cdf((bound + single_slope_db(d, pl0, alpha, d0)) / sigma)

    val, _ = integrate.quad(integrand, math.log(d_lo), math.log(d_hi))
    return val / (math.log(d_hi) - math.log(d_lo))


def double_exp(lag, r, d1, d2):
    lag = np.asarray(lag, dtype=float)
    return r * np.exp(-lag / d1) + (1 - r) * np.exp(-lag / d2)


def linear_one_over_e(intercept, slope):
    return (intercept - math.exp(-1)) / -slope
