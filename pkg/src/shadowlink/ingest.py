"""Packet-log ingestion: channel gain, censoring and 0.4 s binning.

A packet log is a CSV with one row per transmitted packet as seen by one
receiver.  Lost packets carry the literal ``LOST`` in the RSSI column and
may have empty position/speed fields; their TX-RX distance is filled in by
linear interpolation over time.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

LOG_COLUMNS = (
    "t_s", "tx_id", "rx_id", "rssi_dbm", "tx_lat", "tx_lon",
    "rx_lat", "rx_lon", "tx_speed_mps", "rx_speed_mps", "los",
)
OPTIONAL_LOG_COLUMNS = ("d_m",)
SAMPLE_COLUMNS = ("t_s", "d_m", "traveled_m", "gain_db", "censored", "condition", "n_packets")
CONDITIONS = ("LOS", "OLOS")
EARTH_RADIUS_M = 6_371_008.8


class LogParseError(ValueError):
    """Raised for malformed packet logs; ``errors`` holds (line, message) pairs."""

    def __init__(self, errors: list[tuple[int, str]]):
        self.errors = errors
        lines = "; ".join(f"line {n}: {msg}" for n, msg in errors[:20])
        more = f" (+{len(errors) - 20} more)" if len(errors) > 20 else ""
        super().__init__(lines + more)


@dataclass(frozen=True)
class PacketRecord:
    timestamp: float
    tx_id: str
    rx_id: str
    rssi: float | None  # None marks a lost packet
    tx_pos: tuple[float, float] | None
    rx_pos: tuple[float, float] | None
    tx_speed: float | None
    rx_speed: float | None
    los_label: str
    distance: float | None = None

    @property
    def lost(self) -> bool:
        return self.rssi is None


@dataclass(frozen=True)
class LinkConfig:
    tx_power: float = 23.0
    tx_cable_loss: float = 0.0
    rx_cable_loss: float = 0.0
    censor_rssi: float = -94.0

    def __post_init__(self):
        if not self.censor_rssi < self.tx_power:
            raise ValueError("censor_rssi must be below tx_power")

    @classmethod
    def from_dict(cls, data: dict, tx_id: str | None = None, rx_id: str | None = None) -> "LinkConfig":
        """Build from a config mapping.

        Cable losses come either from ``tx_cable_loss_db``/``rx_cable_loss_db``
        or from a per-station ``cable_loss_db`` table keyed by station id.
        """
        per_station = data.get("cable_loss_db", {})
        tx_loss = data.get("tx_cable_loss_db", per_station.get(tx_id, 0.0))
        rx_loss = data.get("rx_cable_loss_db", per_station.get(rx_id, 0.0))
        return cls(
            tx_power=float(data.get("tx_power_dbm", 23.0)),
            tx_cable_loss=float(tx_loss),
            rx_cable_loss=float(rx_loss),
            censor_rssi=float(data.get("censor_rssi_dbm", -94.0)),
        )


@dataclass(frozen=True)
class BinnedSample:
    d: float
    traveled: float
    gain: float
    censored: bool
    condition: str
    n_packets: int
    t: float = 0.0


@dataclass(frozen=True)
class QualityReport:
    m: int
    m_c: int
    d_min: float
    d_max: float
    ratio_ok: bool
    count_ok: bool
    max_gap: float  # largest gap in sorted distances, as a fraction of d_max - d_min

    @property
    def passed(self) -> bool:
        return self.ratio_ok and self.count_ok


def _parse_float(text: str, name: str, optional: bool = False) -> float | None:
    text = text.strip()
    if text == "" and optional:
        return None
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"column {name!r}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"column {name!r}: non-finite value {text!r}")
    return value


def parse_log(stream: IO[str] | IO[bytes] | str) -> list[PacketRecord]:
    """Parse a packet log.  All malformed lines are collected before raising."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    else:
        data = stream.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        stream = io.StringIO(data)
    reader = csv.reader(stream)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise LogParseError([(1, "empty log, header required")]) from None
    missing = [c for c in LOG_COLUMNS if c not in header]
    if missing:
        raise LogParseError([(1, f"missing columns: {', '.join(missing)}")])
    idx = {name: header.index(name) for name in header}
    has_distance = "d_m" in idx

    records: list[PacketRecord] = []
    errors: list[tuple[int, str]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            errors.append((lineno, f"expected {len(header)} columns, got {len(row)}"))
            continue
        try:
            rssi_text = row[idx["rssi_dbm"]].strip()
            lost = rssi_text.upper() == "LOST"
            rssi = None if lost else _parse_float(rssi_text, "rssi_dbm")
            # positions and speeds may be blank only for lost packets
            opt = lost
            tx_lat = _parse_float(row[idx["tx_lat"]], "tx_lat", opt)
            tx_lon = _parse_float(row[idx["tx_lon"]], "tx_lon", opt)
            rx_lat = _parse_float(row[idx["rx_lat"]], "rx_lat", opt)
            rx_lon = _parse_float(row[idx["rx_lon"]], "rx_lon", opt)
            tx_speed = _parse_float(row[idx["tx_speed_mps"]], "tx_speed_mps", opt)
            rx_speed = _parse_float(row[idx["rx_speed_mps"]], "rx_speed_mps", opt)
            for name, v in (("tx_speed_mps", tx_speed), ("rx_speed_mps", rx_speed)):
                if v is not None and v < 0:
                    raise ValueError(f"column {name!r}: negative speed {v}")
            label = row[idx["los"]].strip().upper()
            if label not in CONDITIONS:
                raise ValueError(f"column 'los': expected LOS or OLOS, got {label!r}")
            distance = None
            if has_distance:
                distance = _parse_float(row[idx["d_m"]], "d_m", optional=True)
            records.append(PacketRecord(
                timestamp=_parse_float(row[idx["t_s"]], "t_s"),
                tx_id=row[idx["tx_id"]].strip(),
                rx_id=row[idx["rx_id"]].strip(),
                rssi=rssi,
                tx_pos=None if tx_lat is None or tx_lon is None else (tx_lat, tx_lon),
                rx_pos=None if rx_lat is None or rx_lon is None else (rx_lat, rx_lon),
                tx_speed=tx_speed,
                rx_speed=rx_speed,
                los_label=label,
                distance=distance,
            ))
        except ValueError as exc:
            errors.append((lineno, str(exc)))
    if errors:
        raise LogParseError(errors)
    return records


def haversine(lat1, lon1, lat2, lon2):
    lat1, lon1, lat2, lon2 = map(np.radians, (lat1, lon1, lat2, lon2))
    a = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def is_censored(record: PacketRecord, cfg: LinkConfig) -> bool:
    return record.rssi is None or record.rssi < cfg.censor_rssi


def channel_gain(record: PacketRecord, cfg: LinkConfig) -> float:
    """RSSI - TX power + TX cable loss + RX cable loss, for a received packet."""
    if record.rssi is None:
        raise ValueError("lost packet has no channel gain; it is censored")
    return record.rssi - cfg.tx_power + cfg.tx_cable_loss + cfg.rx_cable_loss


def censor_threshold_gain(cfg: LinkConfig) -> float:
    return cfg.censor_rssi - cfg.tx_power + cfg.tx_cable_loss + cfg.rx_cable_loss


def split_links(records: Iterable[PacketRecord]) -> dict[tuple[str, str], list[PacketRecord]]:
    """Group records per directed (tx_id, rx_id) link, sorted by time."""
    links: dict[tuple[str, str], list[PacketRecord]] = {}
    for rec in records:
        links.setdefault((rec.tx_id, rec.rx_id), []).append(rec)
    for key in links:
        links[key].sort(key=lambda r: r.timestamp)
    return links


def _record_distances(records: Sequence[PacketRecord]) -> np.ndarray:
    t = np.array([r.timestamp for r in records])
    d = np.full(len(records), np.nan)
    for i, r in enumerate(records):
        if r.distance is not None:
            d[i] = r.distance
        elif r.tx_pos is not None and r.rx_pos is not None:
            d[i] = haversine(r.tx_pos[0], r.tx_pos[1], r.rx_pos[0], r.rx_pos[1])
    known = ~np.isnan(d)
    if not known.any():
        raise ValueError("no record in the link carries a position or distance")
    if not known.all():
        d[~known] = np.interp(t[~known], t[known], d[known])
    return d


def bin_samples(
    records: Sequence[PacketRecord],
    cfg: LinkConfig,
    bin_s: float = 0.4,
    average: str = "db",
) -> list[BinnedSample]:
    """Average one directed link's packets into fixed time bins.

    Bins sit on an absolute time grid (``floor(t / bin_s)``) so concurrent
    links share bin boundaries.  A bin is censored only when every packet in
    it is censored; otherwise its gain is the mean over uncensored packets,
    in dB (``average="db"``) or in linear power (``average="linear"``).
    Interior bins with no packets at all are emitted as censored, with
    distance and speed interpolated from the neighbours.
    """
    if average not in ("db", "linear"):
        raise ValueError(f"average must be 'db' or 'linear', got {average!r}")
    if not records:
        return []
    records = sorted(records, key=lambda r: r.timestamp)
    t = np.array([r.timestamp for r in records])
    dist = _record_distances(records)
    bound = censor_threshold_gain(cfg)
    bin_idx = np.floor(t / bin_s + 1e-9).astype(np.int64)
    first, last = int(bin_idx[0]), int(bin_idx[-1])

    groups: dict[int, list[int]] = {}
    for i, b in enumerate(bin_idx):
        groups.setdefault(int(b), []).append(i)

    rows = []
    for b in range(first, last + 1):
        members = groups.get(b, [])
        if not members:
            rows.append((b, np.nan, np.nan, bound, True, None, 0))
            continue
        gains = [channel_gain(records[i], cfg) for i in members if not is_censored(records[i], cfg)]
        speeds = [
            0.5 * (records[i].tx_speed + records[i].rx_speed)
            for i in members
            if records[i].tx_speed is not None and records[i].rx_speed is not None
        ]
        n_los = sum(records[i].los_label == "LOS" for i in members)
        condition = "LOS" if n_los > len(members) - n_los else "OLOS"
        if gains:
            g = np.asarray(gains)
            gain = float(g.mean()) if average == "db" else float(10 * np.log10(np.mean(10 ** (g / 10))))
            censored = False
        else:
            gain, censored = bound, True
        v = float(np.mean(speeds)) if speeds else np.nan
        rows.append((b, float(dist[members].mean()), v, gain, censored, condition, len(members)))

    bins = np.array([r[0] for r in rows], dtype=float)
    d_arr = np.array([r[1] for r in rows])
    v_arr = np.array([r[2] for r in rows])
    for arr in (d_arr, v_arr):
        ok = ~np.isnan(arr)
        if ok.any() and not ok.all():
            arr[~ok] = np.interp(bins[~ok], bins[ok], arr[ok])
        elif not ok.any():
            arr[:] = 0.0
    traveled = np.cumsum(v_arr * bin_s)

    out = []
    prev_condition = next(r[5] for r in rows if r[5] is not None)
    for k, (b, _, _, gain, censored, condition, n) in enumerate(rows):
        condition = condition or prev_condition
        prev_condition = condition
        out.append(BinnedSample(
            d=float(d_arr[k]),
            traveled=float(traveled[k]),
            gain=float(gain),
            censored=bool(censored),
            condition=condition,
            n_packets=int(n),
            t=b * bin_s,
        ))
    return out


def segment_by_condition(samples: Sequence[BinnedSample]) -> dict[str, list[BinnedSample]]:
    parts: dict[str, list[BinnedSample]] = {c: [] for c in CONDITIONS}
    for s in samples:
        parts[s.condition].append(s)
    return parts


def quality_check(samples: Sequence[BinnedSample], min_ratio: float = 10.0, min_count: int = 1000) -> QualityReport:
    if not samples:
        return QualityReport(0, 0, float("nan"), float("nan"), False, False, float("nan"))
    d = np.sort([s.d for s in samples])
    m = len(samples)
    m_c = sum(s.censored for s in samples)
    d_min, d_max = float(d[0]), float(d[-1])
    span = d_max - d_min
    max_gap = float(np.max(np.diff(d)) / span) if m > 1 and span > 0 else 0.0
    ratio_ok = d_min > 0 and d_max / d_min >= min_ratio
    return QualityReport(m, m_c, d_min, d_max, bool(ratio_ok), m > min_count, max_gap)


def write_samples_csv(samples: Sequence[BinnedSample], stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(SAMPLE_COLUMNS)
    for s in samples:
        w.writerow([
            f"{s.t:.6g}", f"{s.d:.6g}", f"{s.traveled:.6g}", f"{s.gain:.6g}",
            int(s.censored), s.condition, s.n_packets,
        ])


def read_samples_csv(stream: IO[str]) -> list[BinnedSample]:
    reader = csv.DictReader(stream)
    required = set(SAMPLE_COLUMNS) - {"t_s"}
    if reader.fieldnames is None or not required <= set(reader.fieldnames):
        raise LogParseError([(1, f"sample CSV needs columns {', '.join(SAMPLE_COLUMNS)}")])
    out, errors = [], []
    for lineno, row in enumerate(reader, start=2):
        try:
            out.append(BinnedSample(
                d=_parse_float(row["d_m"], "d_m"),
                traveled=_parse_float(row["traveled_m"], "traveled_m"),
                gain=_parse_float(row["gain_db"], "gain_db"),
                censored=row["censored"].strip().lower() in ("1", "true", "yes"),
                condition=row["condition"].strip().upper(),
                n_packets=int(row["n_packets"]),
                t=_parse_float(row.get("t_s") or "0", "t_s"),
            ))
        except (ValueError, TypeError, AttributeError) as exc:
            errors.append((lineno, str(exc)))
    if errors:
        raise LogParseError(errors)
    return out
