"""Synthetic packet logs for demos and tests.

A TX car drives ahead of an RX car on a straight northbound highway.  Their
separation oscillates between ``d_min`` and ``d_max``; RSSI follows a given
pathloss model plus spatially correlated shadowing, and packets that fall
below the sensitivity floor are logged as ``LOST``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .fadesim import ShadowSpec, child_seed
from .ingest import EARTH_RADIUS_M, LOG_COLUMNS, LinkConfig
from .models import LinkGeometry, PathlossParams, pathloss


@dataclass(frozen=True)
class ConvoyDrive:
    duration: float = 600.0
    packet_rate: float = 10.0
    speed: float = 25.0
    d_min: float = 20.0
    d_max: float = 400.0
    period: float = 300.0
    lat0: float = 57.7
    lon0: float = 11.9


def synthetic_log(
    model: PathlossParams,
    shadow: ShadowSpec,
    cfg: LinkConfig,
    drive: ConvoyDrive = ConvoyDrive(),
    geom: LinkGeometry | None = None,
    condition: str = "LOS",
    tx_id: str = "XC70",
    rx_id: str = "S60M",
    seed: int = 0,
) -> str:
    """Render a packet log as CSV text with the standard log columns."""
    n = int(round(drive.duration * drive.packet_rate))
    t = np.arange(n) / drive.packet_rate
    phase = 2 * np.pi * t / drive.period
    d = drive.d_min + (drive.d_max - drive.d_min) * 0.5 * (1 - np.cos(phase))
    rx_north = drive.speed * t
    tx_north = rx_north + d

    step = drive.speed / drive.packet_rate
    s = shadow.generate(step, n, child_seed(seed, 0))
    rssi = cfg.tx_power - cfg.tx_cable_loss - cfg.rx_cable_loss - pathloss(d, model, geom) + s
    lost = rssi < cfg.censor_rssi

    deg = 180.0 / (math.pi * EARTH_RADIUS_M)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_COLUMNS)
    for i in range(n):
        r = "LOST" if lost[i] else f"{rssi[i]:.2f}"
        w.writerow([
            f"{t[i]:.3f}", tx_id, rx_id, r,
            f"{drive.lat0 + tx_north[i] * deg:.9f}", f"{drive.lon0:.9f}",
            f"{drive.lat0 + rx_north[i] * deg:.9f}", f"{drive.lon0:.9f}",
            f"{drive.speed:.2f}", f"{drive.speed:.2f}", condition,
        ])
    return buf.getvalue()
