"""Vessel GPS logs: parsing, clock alignment, windowing and interpolation.

The CSV schema is ``timestamp,id,lon,lat,sog,cog,heading,phase`` (header
names matched case-insensitively, extra columns ignored). Only
``timestamp``, ``id``, ``lon`` and ``lat`` are required.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    EmptyInputError,
    EmptyWindowError,
    OutOfRangeError,
    ParseError,
    UnknownVesselError,
    ValidationError,
)

COLUMNS = ("timestamp", "id", "lon", "lat", "sog", "cog", "heading", "phase")
REQUIRED_COLUMNS = ("timestamp", "id", "lon", "lat")

# Absorbs float round-off in t_start + i / fps queries at the log edges.
TIME_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GeoFix:
    timestamp: float
    vessel_id: int
    lon: float
    lat: float
    sog: float | None = None
    cog: float | None = None
    heading: float | None = None
    phase_id: str | None = None

    def __post_init__(self):
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise ValidationError(f"latitude {self.lat} outside [-90, 90]")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise ValidationError(f"longitude {self.lon} outside [-180, 180]")
        if self.cog is not None and not (0.0 <= self.cog < 360.0):
            raise ValidationError(f"course over ground {self.cog} outside [0, 360)")
        if not math.isfinite(self.timestamp):
            raise ValidationError("timestamp must be finite")


class TelemetryLog:
    """Per-vessel GPS fixes, each group sorted by strictly increasing time.

    Instances are immutable; every transformation returns a new log.
    """

    def __init__(self, fixes: Iterable[GeoFix]):
        groups: dict[int, list[GeoFix]] = {}
        for fix in fixes:
            groups.setdefault(fix.vessel_id, []).append(fix)
        self._groups: dict[int, tuple[GeoFix, ...]] = {}
        for vid in sorted(groups):
            ordered = sorted(groups[vid], key=lambda f: f.timestamp)
            for a, b in zip(ordered, ordered[1:]):
                if a.timestamp == b.timestamp:
                    raise ValidationError(
                        f"duplicate timestamp {a.timestamp} for vessel {vid}"
                    )
            self._groups[vid] = tuple(ordered)
        self._times = {
            vid: np.array([f.timestamp for f in g]) for vid, g in self._groups.items()
        }

    @property
    def vessel_ids(self) -> list[int]:
        return list(self._groups)

    def fixes(self, vessel_id: int | None = None) -> tuple[GeoFix, ...]:
        """Fixes of one vessel, or of every vessel (grouped) when ``vessel_id`` is None."""
        if vessel_id is None:
            return tuple(f for g in self._groups.values() for f in g)
        try:
            return self._groups[vessel_id]
        except KeyError:
            raise UnknownVesselError(f"unknown vessel id {vessel_id}") from None

    def times(self, vessel_id: int) -> np.ndarray:
        self.fixes(vessel_id)
        return self._times[vessel_id]

    def span(self, vessel_id: int) -> tuple[float, float]:
        t = self.times(vessel_id)
        return float(t[0]), float(t[-1])

    def __len__(self):
        return sum(len(g) for g in self._groups.values())

    def __iter__(self):
        return iter(self.fixes())

    def __eq__(self, other):
        if not isinstance(other, TelemetryLog):
            return NotImplemented
        return self._groups == other._groups

    def __repr__(self):
        sizes = ", ".join(f"{vid}: {len(g)}" for vid, g in self._groups.items())
        return f"TelemetryLog({{{sizes}}})"


def _parse_timestamp(text: str) -> float:
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def _optional_float(text):
    if text is None or text.strip() == "":
        return None
    return float(text)


def parse_log(raw: bytes | str) -> TelemetryLog:
    """Parse CSV telemetry into a :class:`TelemetryLog`.

    Raises ``EmptyInputError`` for an empty stream, ``ParseError`` (with the
    1-based line number) for malformed rows and ``ValidationError`` for
    out-of-range coordinates or duplicated timestamps.
    """
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from None
    if not raw.strip():
        raise EmptyInputError("telemetry input is empty")

    reader = csv.reader(io.StringIO(raw))
    header = next(reader)
    index = {name.strip().lower(): i for i, name in enumerate(header)}
    missing = [c for c in REQUIRED_COLUMNS if c not in index]
    if missing:
        raise ParseError(f"header lacks required column(s): {', '.join(missing)}", line=1)

    def cell(row, name):
        i = index.get(name)
        if i is None or i >= len(row):
            return None
        return row[i]

    fixes = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            timestamp = _parse_timestamp(cell(row, "timestamp") or "")
        except ValueError:
            raise ParseError(f"unparseable timestamp {cell(row, 'timestamp')!r}", line=line_no) from None
        try:
            vessel_id = int(cell(row, "id"))
            lon = float(cell(row, "lon"))
            lat = float(cell(row, "lat"))
            sog = _optional_float(cell(row, "sog"))
            cog = _optional_float(cell(row, "cog"))
            heading = _optional_float(cell(row, "heading"))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"malformed row: {exc}", line=line_no) from None
        phase = cell(row, "phase")
        phase = phase.strip() or None if phase is not None else None
        try:
            fixes.append(GeoFix(timestamp, vessel_id, lon, lat, sog, cog, heading, phase))
        except ValidationError as exc:
            raise ValidationError(f"line {line_no}: {exc}") from None
    if not fixes:
        raise EmptyInputError("telemetry input has a header but no rows")
    return TelemetryLog(fixes)


def _fmt(value):
    return "" if value is None else repr(float(value))


def serialize_log(log: TelemetryLog) -> bytes:
    """Write ``log`` in the CSV schema read by :func:`parse_log` (lossless)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(COLUMNS)
    for f in log:
        writer.writerow([
            repr(float(f.timestamp)), f.vessel_id, repr(float(f.lon)), repr(float(f.lat)),
            _fmt(f.sog), _fmt(f.cog), _fmt(f.heading), f.phase_id or "",
        ])
    return out.getvalue().encode("utf-8")


def align(log: TelemetryLog, offset: float) -> TelemetryLog:
    """Shift the log onto the video clock, where ``t_log = t_video + offset``."""
    if offset == 0:
        return log
    return TelemetryLog(replace(f, timestamp=f.timestamp - offset) for f in log)


def window(log: TelemetryLog, t_start: float, t_end: float, vessel_ids=None) -> TelemetryLog:
    """Keep fixes in ``[t_start, t_end]`` plus one bracketing fix on each side.

    Every requested vessel (all vessels by default) must have a log span
    that overlaps the window; otherwise ``EmptyWindowError`` is raised.
    """
    if not t_start < t_end:
        raise ValueError(f"window start {t_start} must precede end {t_end}")
    requested = log.vessel_ids if vessel_ids is None else list(vessel_ids)
    kept = []
    for vid in requested:
        t = log.times(vid)
        if t[-1] < t_start or t[0] > t_end:
            raise EmptyWindowError(
                f"window [{t_start}, {t_end}] excludes every fix of vessel {vid}"
            )
        lo = max(int(np.searchsorted(t, t_start, side="left")) - 1, 0)
        hi = min(int(np.searchsorted(t, t_end, side="right")) + 1, len(t))
        kept.extend(log.fixes(vid)[lo:hi])
    return TelemetryLog(kept)


def _lerp_angle(a, b, w):
    """Interpolate degrees along the shortest arc, result in [0, 360)."""
    delta = (b - a + 180.0) % 360.0 - 180.0
    return (a + w * delta) % 360.0


def _lerp_optional(a, b, w, angular=False):
    if a is None or b is None:
        return None
    if angular:
        return _lerp_angle(a, b, w)
    return a + w * (b - a)


def _bracket(log: TelemetryLog, vessel_id: int, t: float):
    times = log.times(vessel_id)
    if t < times[0] - TIME_TOLERANCE or t > times[-1] + TIME_TOLERANCE:
        raise OutOfRangeError(
            f"t={t} outside the log span [{times[0]}, {times[-1]}] of vessel {vessel_id}"
        )
    i = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 1))
    if i == len(times) - 1 or times[i] == t:
        return i, i, 0.0
    w = (t - times[i]) / (times[i + 1] - times[i])
    return i, i + 1, float(min(max(w, 0.0), 1.0))


def interpolate(log: TelemetryLog, vessel_id: int, t: float) -> GeoFix:
    """Linearly interpolate a vessel's fix at time ``t``; COG and heading go the short way round."""
    i, j, w = _bracket(log, vessel_id, t)
    group = log.fixes(vessel_id)
    a, b = group[i], group[j]
    if i == j:
        return replace(a, timestamp=float(t)) if a.timestamp != t else a
    return GeoFix(
        timestamp=float(t),
        vessel_id=vessel_id,
        lon=a.lon + w * (b.lon - a.lon),
        lat=a.lat + w * (b.lat - a.lat),
        sog=_lerp_optional(a.sog, b.sog, w),
        cog=_lerp_optional(a.cog, b.cog, w, angular=True),
        heading=_lerp_optional(a.heading, b.heading, w, angular=True),
        phase_id=a.phase_id if w < 0.5 else b.phase_id,
    )


def interpolate_positions(log: TelemetryLog, vessel_id: int, times) -> np.ndarray:
    """Vectorised lon/lat interpolation; returns an ``(n, 2)`` array of (lon, lat)."""
    t = np.atleast_1d(np.asarray(times, dtype=np.float64))
    knots = log.times(vessel_id)
    bad = (t < knots[0] - TIME_TOLERANCE) | (t > knots[-1] + TIME_TOLERANCE)
    if np.any(bad):
        raise OutOfRangeError(
            f"t={t[bad][0]} outside the log span [{knots[0]}, {knots[-1]}] of vessel {vessel_id}"
        )
    group = log.fixes(vessel_id)
    ll = np.array([[f.lon, f.lat] for f in group])
    if len(knots) == 1:
        return np.repeat(ll, len(t), axis=0)
    # same arithmetic as interpolate() so both paths agree bit for bit
    i = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, len(knots) - 2)
    w = np.clip((t - knots[i]) / (knots[i + 1] - knots[i]), 0.0, 1.0)[:, None]
    a, b = ll[i], ll[i + 1]
    out = a + w * (b - a)
    at_end = t >= knots[-1]
    out[at_end] = ll[-1]
    return out


def from_records(records: Iterable[Mapping]) -> TelemetryLog:
    """Build a log from mappings with GeoFix field names."""
    return TelemetryLog(GeoFix(**r) for r in records)
