"""Published measurement constants and fitted parameters for the highway convoy campaign.

Rows flagged ``quality_ok=False`` failed the data-quality rules
(d_max/d_min >= 10, more than 1000 samples, no big distance gaps) and
should be treated as indicative only.
"""
from __future__ import annotations

from dataclasses import dataclass

from .correlate import LinearCrossModel
from .models import SingleSlopeParams, TwoRayParams

TX_POWER_DBM = 23.0
CENSOR_RSSI_DBM = -94.0
BIN_SECONDS = 0.4
CONVOY_SPEED_MPS = 25.0

# roof antenna height [m], cable loss [dB]
CARS = {
    "S60M": (1.45, 1.0),
    "S60F": (1.35, 1.0),
    "S60R": (1.35, 1.0),
    "V70": (1.55, 3.5),
    "XC70": (1.60, 3.5),
    "XC90": (1.78, 3.5),
}


@dataclass(frozen=True)
class LosRow:
    m: int
    m_c: int
    d_min: float
    d_max: float
    params: TwoRayParams
    quality_ok: bool


@dataclass(frozen=True)
class OlosRow:
    m: int
    m_c: int
    d_min: float
    d_max: float
    params: SingleSlopeParams
    quality_ok: bool


def _los(m, mc, dmin, dmax, g, ratio, dphi, sigma, ok=True):
    return LosRow(m, mc, dmin, dmax, TwoRayParams(g, ratio, dphi, sigma), ok)


def _olos(m, mc, dmin, dmax, pl0, alpha, sigma, ok=True):
    return OlosRow(m, mc, dmin, dmax, SingleSlopeParams(pl0, alpha, sigma), ok)


# keyed by (scenario, "TX-RX")
PATHLOSS_TABLE: dict[tuple[str, str], tuple[LosRow, OlosRow | None]] = {
    ("A", "XC70-S60M"): (
        _los(5759, 70, 8, 488, -0.8, -6.42, -34.53, 3.12),
        _olos(4126, 1858, 73, 1000, 59.53, 2.73, 5.52),
    ),
    ("A", "XC70-XC90"): (
        _los(2633, 143, 36, 721, -0.98, -4.60, -18.74, 3.02),
        _olos(6614, 1826, 32, 1000, 71.32, 1.90, 4.12),
    ),
    ("A", "XC70-V70"): (
        _los(775, 2, 83, 321, 0.65, 4.36, -9.65, 3.32, ok=False),
        _olos(8207, 1580, 74, 998, 65.19, 2.04, 5.20),
    ),
    ("A", "S60M-XC90"): (
        _los(12236, 56, 12, 294, 2.66, -3.33, 7.61, 3.17),
        _olos(856, 26, 42, 291, 70.72, 1.63, 4.89, ok=False),
    ),
    ("A", "S60M-V70"): (
        _los(3419, 7, 59, 372, 6.22, 2.30, -30.13, 3.59, ok=False),
        _olos(9720, 108, 54, 372, 68.63, 1.35, 4.82, ok=False),
    ),
    ("A", "XC90-V70"): (
        _los(12891, 90, 37, 116, 1.58, -8.02, -4.82, 1.71, ok=False),
        _olos(238, 1, 38, 99, 68.73, 1.73, 1.73, ok=False),
    ),
    ("B", "XC70-V70"): (
        _los(6972, 54, 11, 547, 6.42, -8.12, -11.72, 2.80),
        _olos(5284, 2455, 217, 943, 29.62, 4.18, 6.58, ok=False),
    ),
    ("B", "XC70-XC90"): (
        _los(1230, 61, 99, 578, 0.27, -3.86, -10.00, 3.51, ok=False),
        _olos(10400, 3348, 35, 998, 69.82, 2.02, 4.43),
    ),
    ("B", "XC70-S60M"): (
        _los(356, 24, 81, 464, -3.13, -5.80, 1.83, 3.05, ok=False),
        _olos(5891, 2185, 74, 922, 68.29, 2.30, 5.61),
    ),
    ("B", "V70-XC90"): (
        _los(12216, 58, 20, 165, 0.07, -6.97, -11.83, 2.57, ok=False),
        _olos(870, 21, 64, 166, 76.13, 1.44, 4.46, ok=False),
    ),
    ("B", "V70-S60M"): (
        _los(1690, 42, 37, 116, -4.83, -13.01, 344.39, 3.71, ok=False),
        _olos(5363, 161, 51, 214, 86.88, 0.54, 4.77, ok=False),
    ),
    ("B", "XC90-S60M"): (
        _los(7063, 48, 11, 54, -5.30, -9.40, -83.36, 2.28, ok=False),
        None,
    ),
    ("B", "XC70-S60F"): (
        _los(359, 9, 79, 463, 3.58, 3.13, 22.17, 3.22, ok=False),
        _olos(5913, 1855, 72, 923, 60.84, 2.67, 6.13),
    ),
    ("B", "XC70-S60R"): (
        _los(359, 12, 79, 460, -6.59, -4.02, 0.07, 2.34, ok=False),
        _olos(5913, 1998, 72, 920, 82.54, 1.62, 3.30),
    ),
    ("B", "V70-S60F"): (
        _los(1697, 13, 34, 114, -12.1, 65.82, 325.43, 4.76, ok=False),
        _olos(5376, 31, 50, 213, 80.96, 0.72, 4.40, ok=False),
    ),
    ("B", "V70-S60R"): (
        _los(1697, 15, 34, 114, -12.1, -20.19, 359.22, 2.84, ok=False),
        _olos(5376, 130, 50, 213, 87.15, 1.16, 3.19, ok=False),
    ),
    ("B", "XC90-S60F"): (
        _los(7084, 30, 10, 53, -1.74, -13.25, 23.64, 2.66, ok=False),
        None,
    ),
    ("B", "XC90-S60R"): (
        _los(7084, 29, 10, 53, -11.7, -13.55, 169.91, 2.80, ok=False),
        None,
    ),
}

# single-exponential de-correlation distance d_c [m]: (LOS, OLOS); None = not reported
DECORRELATION_SINGLE: dict[tuple[str, str], tuple[float | None, float | None]] = {
    ("A", "XC70-S60M"): (73.5, 177.6),
    ("A", "XC70-XC90"): (43.2, 96.3),
    ("A", "XC70-V70"): (38.7, 89.2),
    ("A", "S60M-XC90"): (68.6, 30.2),
    ("A", "S60M-V70"): (71.8, 83.1),
    ("A", "XC90-V70"): (60.0, None),
    ("B", "XC70-V70"): (78.0, 299.8),
    ("B", "XC70-XC90"): (43.7, 127.4),
    ("B", "XC70-S60M"): (None, 170.1),
    ("B", "V70-XC90"): (59.5, 38.4),
    ("B", "V70-S60M"): (76.7, 55.7),
    ("B", "XC90-S60M"): (102.2, None),
}

# double-exponential (r, d_c1, d_c2): (LOS, OLOS)
DECORRELATION_DOUBLE: dict[tuple[str, str], tuple[tuple | None, tuple | None]] = {
    ("A", "XC70-S60M"): ((0.61, 16.2, 387.0), (0.09, 4.6, 221.6)),
    ("A", "XC70-XC90"): ((0.92, 36.0, 1953.0), (0.48, 16.5, 511.3)),
    ("A", "XC70-V70"): ((0.63, 19.7, 70.4), (0.57, 30.1, 439.8)),
    ("A", "S60M-XC90"): ((0.57, 11.8, 315.1), (0.83, 28.7, 225.7)),
    ("A", "S60M-V70"): ((0.54, 14.5, 278.8), (0.58, 17.4, 453.7)),
    ("A", "XC90-V70"): ((0.61, 8.7, 202.1), None),
    ("B", "XC70-V70"): ((0.24, 5.1, 109.2), (0.11, 100.4, 326.4)),
    ("B", "XC70-XC90"): (None, (0.38, 9.1, 507.1)),
    ("B", "XC70-S60M"): (None, (0.14, 4.2, 248.7)),
    ("B", "V70-XC90"): ((0.53, 12.1, 130.6), (0.36, 43.2, 43.2)),
    ("B", "V70-S60M"): ((0.30, 4.5, 107.6), (0.70, 18.0, 210.6)),
    ("B", "XC90-S60M"): ((0.42, 13.8, 294.6), None),
}

# multilink cross-correlation vs RX separation
CROSS_JOINT_SINGLE_SLOPE = LinearCrossModel(intercept=0.5211, slope=-0.0017)
CROSS_PER_LINK = LinearCrossModel(intercept=0.4674, slope=-0.0040)
REPORTED_CROSS_DECORRELATION_M = {"joint_single_slope": 91.0, "per_link": 24.0}

# reference scenario for the dip-duration examples
JOINT_MODEL_DECORRELATION_M = 1500.0
DIP_THRESHOLD_DB = -90.0
SCENARIO_DISTANCE_M = 100.0
