"""Deterministic pathloss models for V2V links.

Two models are provided: the single-slope log-distance law (used for
obstructed-LOS links) and a modified two-ray ground-reflection model with
mean antenna-gain and phase terms (used for LOS links).  Both return the
deterministic pathloss only; the Gaussian shadowing term is realized in
:mod:`shadowlink.fadesim`.

All distance arguments accept scalars or numpy arrays.  Sign convention:
pathloss is positive dB, channel gain is ``-pathloss``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
CARRIER_HZ = 5.9e9
DEFAULT_WAVELENGTH = SPEED_OF_LIGHT / CARRIER_HZ
DEFAULT_EPS_R = complex(5.0, -0.2)


@dataclass(frozen=True)
class SingleSlopeParams:
    pl_d0: float
    alpha: float
    sigma: float
    d0: float = 10.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.d0 <= 0:
            raise ValueError(f"d0 must be > 0, got {self.d0}")

    def to_dict(self) -> dict:
        return {
            "model": "single_slope",
            "pl_d0_db": self.pl_d0,
            "alpha": self.alpha,
            "sigma_db": self.sigma,
            "d0_m": self.d0,
        }


@dataclass(frozen=True)
class TwoRayParams:
    """Two-ray parameters; ``delta_phi`` is in degrees, wrapped to [0, 360)."""

    g_los_db: float
    gain_ratio_db: float
    delta_phi: float
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        object.__setattr__(self, "delta_phi", wrap_degrees(self.delta_phi))

    @property
    def delta_phi_rad(self) -> float:
        return np.deg2rad(self.delta_phi)

    def to_dict(self) -> dict:
        return {
            "model": "two_ray",
            "g_los_db": self.g_los_db,
            "gain_ratio_db": self.gain_ratio_db,
            "delta_phi_deg": self.delta_phi,
            "sigma_db": self.sigma,
        }


@dataclass(frozen=True)
class LinkGeometry:
    h_tx: float = 1.60
    h_rx: float = 1.45
    wavelength: float = DEFAULT_WAVELENGTH
    eps_r: complex = DEFAULT_EPS_R
    polarization: str = "vertical"

    def __post_init__(self):
        if self.h_tx <= 0 or self.h_rx <= 0:
            raise ValueError(f"antenna heights must be > 0, got {self.h_tx}, {self.h_rx}")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be > 0")
        if complex(self.eps_r).real < 1:
            raise ValueError("Re(eps_r) must be >= 1")
        if self.polarization not in ("vertical", "horizontal"):
            raise ValueError(f"unknown polarization {self.polarization!r}")
        object.__setattr__(self, "eps_r", complex(self.eps_r))

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    def to_dict(self) -> dict:
        return {
            "h_tx_m": self.h_tx,
            "h_rx_m": self.h_rx,
            "wavelength_m": self.wavelength,
            "eps_r": [self.eps_r.real, self.eps_r.imag],
            "polarization": self.polarization,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LinkGeometry":
        kw = {}
        if "h_tx_m" in data:
            kw["h_tx"] = float(data["h_tx_m"])
        if "h_rx_m" in data:
            kw["h_rx"] = float(data["h_rx_m"])
        if "wavelength_m" in data:
            kw["wavelength"] = float(data["wavelength_m"])
        elif "frequency_hz" in data:
            kw["wavelength"] = SPEED_OF_LIGHT / float(data["frequency_hz"])
        if "eps_r" in data:
            re, im = data["eps_r"]
            kw["eps_r"] = complex(float(re), float(im))
        if "polarization" in data:
            kw["polarization"] = data["polarization"]
        return cls(**kw)


PathlossParams = Union[SingleSlopeParams, TwoRayParams]


def wrap_degrees(angle: float) -> float:
    wrapped = float(np.mod(angle, 360.0))
    # np.mod(-1e-17, 360) rounds to 360.0
    return 0.0 if wrapped >= 360.0 else wrapped


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def los_distance(d, geom: LinkGeometry):
    d = np.asarray(d, dtype=float)
    return _out(np.hypot(d, geom.h_tx - geom.h_rx), d)


def ground_distance(d, geom: LinkGeometry):
    d = np.asarray(d, dtype=float)
    return _out(np.hypot(d, geom.h_tx + geom.h_rx), d)


def reflection_coefficient(d, geom: LinkGeometry):
    """Ground reflection coefficient for the link's polarization.

    The grazing angle follows from the specular geometry:
    sin(theta) = (h_tx + h_rx) / d_gr and cos(theta) = d / d_gr.
    """
    d = np.asarray(d, dtype=float)
    d_gr = np.hypot(d, geom.h_tx + geom.h_rx)
    sin_t = (geom.h_tx + geom.h_rx) / d_gr
    cos_t = d / d_gr
    eps = geom.eps_r
    root = np.sqrt(eps - cos_t**2 + 0j)
    if geom.polarization == "vertical":
        gamma = (eps * sin_t - root) / (eps * sin_t + root)
    else:
        gamma = (sin_t - root) / (sin_t + root)
    return complex(gamma) if np.ndim(d) == 0 else gamma


def free_space_pathloss(d_path, wavelength: float = DEFAULT_WAVELENGTH):
    d_path = np.asarray(d_path, dtype=float)
    return _out(20 * np.log10(4 * np.pi * d_path / wavelength), d_path)


def two_ray_pathloss(d, params: TwoRayParams, geom: LinkGeometry, *, reflection: bool = True):
    """Deterministic two-ray pathloss in dB at horizontal separation ``d``.

    ``reflection=False`` zeroes the ground reflection coefficient, which
    reduces the model to free-space loss at the LOS path length minus the
    mean LOS antenna gain.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("two-ray pathloss needs horizontal distance d > 0")
    k = geom.wavenumber
    d_los = np.hypot(d, geom.h_tx - geom.h_rx)
    d_gr = np.hypot(d, geom.h_tx + geom.h_rx)
    # the common LOS phase drops out of |.|; only the path difference matters,
    # taken in a cancellation-free form since k * d is ~1e5 rad at range
    field_sum = np.complex128(1.0) / d_los
    if reflection:
        amp = 10.0 ** (params.gain_ratio_db / 20.0)
        gamma = reflection_coefficient(d, geom)
        path_diff = 4.0 * geom.h_tx * geom.h_rx / (d_gr + d_los)
        field_sum = field_sum + amp * np.exp(1j * (params.delta_phi_rad - k * path_diff)) * gamma / d_gr
    pl = (
        20 * np.log10(4 * np.pi / geom.wavelength)
        - params.g_los_db
        - 20 * np.log10(np.abs(field_sum))
    )
    return _out(pl, d)


def single_slope_pathloss(d, params: SingleSlopeParams):
    d = np.asarray(d, dtype=float)
    if np.any(d < params.d0):
        raise ValueError(f"single-slope model is defined for d >= d0 = {params.d0} m")
    return _out(params.pl_d0 + 10 * params.alpha * np.log10(d / params.d0), d)


def pathloss(d, model: PathlossParams, geom: LinkGeometry | None = None):
    if isinstance(model, TwoRayParams):
        return two_ray_pathloss(d, model, geom if geom is not None else LinkGeometry())
    if isinstance(model, SingleSlopeParams):
        return single_slope_pathloss(d, model)
    raise TypeError(f"unsupported model {type(model).__name__}")


def deterministic_channel_gain(d, model: PathlossParams, geom: LinkGeometry | None = None):
    return -pathloss(d, model, geom)


def model_from_dict(data: dict) -> PathlossParams:
    kind = data.get("model")
    if kind is None:
        kind = "two_ray" if "g_los_db" in data else "single_slope"
    if kind == "two_ray":
        return TwoRayParams(
            g_los_db=float(data["g_los_db"]),
            gain_ratio_db=float(data["gain_ratio_db"]),
            delta_phi=float(data["delta_phi_deg"]),
            sigma=float(data["sigma_db"]),
        )
    if kind == "single_slope":
        return SingleSlopeParams(
            pl_d0=float(data["pl_d0_db"]),
            alpha=float(data["alpha"]),
            sigma=float(data["sigma_db"]),
            d0=float(data.get("d0_m", 10.0)),
        )
    raise ValueError(f"unknown model kind {kind!r}")


def model_to_dict(model: PathlossParams) -> dict:
    return model.to_dict()
