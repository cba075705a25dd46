"""Synthetic top-down water scenes with scripted vessels and a matching GPS log.

Frames are multi-octave value noise (optionally drifting) with oriented
Gaussian blobs for vessels. The telemetry is obtained by inverse-projecting
the scripted pixel positions at 1 Hz, so projecting the log back through
the same camera model reproduces the scripted paths exactly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import geoproject as gp
from . import telemetry as tl
from ._parallel import ordered_map
from .errors import ContractError, OutOfRangeError, ValidationError
from .geoproject import Anchor, CameraFrameModel, ClipTiming, LocalOrigin, PixelTrajectory
from .flowlab.image import to_luma
from .telemetry import GeoFix, TelemetryLog
from .validation import check_frame

GPS_INTERVAL_S = 1.0
KNOTS_PER_MPS = 3600.0 / 1852.0
WATER_TINT = np.array([0.45, 0.70, 0.90])
VESSEL_COLOURS = (np.array([0.2, 1.0, 0.3]), np.array([1.0, 0.95, 0.2]))
# Largest accepted eigenvalue ratio of the gradient structure tensor around a
# rendered vessel; an elongated blob on flat water sits near 3.
MAX_STRUCTURE_CONDITION = 50.0


@dataclass(frozen=True, eq=False)
class VesselScript:
    id: int
    waypoints: np.ndarray  # rows of (t, x, y)
    radius_px: float = 4.0
    intensity: float = 0.6

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=np.float64).reshape(-1, 3)
        if len(wp) == 0:
            raise ValidationError(f"vessel {self.id} has no waypoints")
        if np.any(np.diff(wp[:, 0]) <= 0):
            raise ValidationError(f"vessel {self.id} waypoint times must increase strictly")
        if not self.radius_px > 0:
            raise ValidationError("radius_px must be positive")
        object.__setattr__(self, "waypoints", wp)


@dataclass(frozen=True)
class Background:
    seed: int = 0
    octaves: int = 3
    drift: tuple[float, float] = (0.0, 0.0)
    cell_px: float = 24.0
    level: float = 0.45
    amplitude: float = 0.08


@dataclass(frozen=True)
class MotionScript:
    vessels: tuple[VesselScript, ...]
    background: Background = field(default_factory=Background)

    def vessel(self, vessel_id: int) -> VesselScript:
        for v in self.vessels:
            if v.id == vessel_id:
                return v
        raise ContractError(f"script has no vessel {vessel_id}")

    def validate(self, timing: ClipTiming) -> None:
        for v in self.vessels:
            xy = v.waypoints[:, 1:]
            if np.any(xy[:, 0] < 0) or np.any(xy[:, 0] >= timing.width) or \
                    np.any(xy[:, 1] < 0) or np.any(xy[:, 1] >= timing.height):
                raise ValidationError(f"vessel {v.id} has waypoints outside the frame")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "MotionScript":
        try:
            vessels = tuple(
                VesselScript(int(v["id"]), np.asarray(v["waypoints"], dtype=np.float64),
                             float(v.get("radius_px", 4.0)), float(v.get("intensity", 0.6)))
                for v in doc["vessels"]
            )
            bg = dict(doc.get("background", {}))
            if "drift" in bg:
                bg["drift"] = tuple(float(d) for d in bg["drift"])
            background = Background(**bg)
        except (KeyError, TypeError, ValueError) as exc:
            raise ContractError(f"malformed motion script: {exc}") from None
        return cls(vessels, background)

    @classmethod
    def loads(cls, raw) -> "MotionScript":
        return cls.from_dict(json.loads(raw))

    def to_dict(self) -> dict:
        b = self.background
        return {
            "vessels": [{"id": v.id, "waypoints": v.waypoints.tolist(), "radius_px": v.radius_px,
                         "intensity": v.intensity} for v in self.vessels],
            "background": {"seed": b.seed, "octaves": b.octaves, "drift": list(b.drift),
                           "cell_px": b.cell_px, "level": b.level, "amplitude": b.amplitude},
        }


def interpolate_script(script: MotionScript, vessel_id: int, t: float) -> tuple[float, float]:
    """Piecewise-linear scripted position of a vessel at time ``t``."""
    x, y = _positions(script.vessel(vessel_id), np.array([t], dtype=np.float64))[0]
    return float(x), float(y)


def _positions(v: VesselScript, times: np.ndarray) -> np.ndarray:
    wp = v.waypoints
    bad = (times < wp[0, 0] - tl.TIME_TOLERANCE) | (times > wp[-1, 0] + tl.TIME_TOLERANCE)
    if np.any(bad):
        raise OutOfRangeError(
            f"t={times[bad][0]} outside the waypoint span [{wp[0, 0]}, {wp[-1, 0]}] of vessel {v.id}"
        )
    if len(wp) == 1:
        return np.repeat(wp[:, 1:], len(times), axis=0)
    i = np.clip(np.searchsorted(wp[:, 0], times, side="right") - 1, 0, len(wp) - 2)
    w = np.clip((times - wp[i, 0]) / (wp[i + 1, 0] - wp[i, 0]), 0.0, 1.0)[:, None]
    return wp[i, 1:] + w * (wp[i + 1, 1:] - wp[i, 1:])


def _heading(v: VesselScript, t: float) -> np.ndarray | None:
    wp = v.waypoints
    if len(wp) < 2:
        return None
    i = int(np.clip(np.searchsorted(wp[:, 0], t, side="right") - 1, 0, len(wp) - 2))
    d = wp[i + 1, 1:] - wp[i, 1:]
    n = math.hypot(*d)
    return d / n if n > 0 else None


def _hash01(ix, iy, salt):
    """Deterministic lattice values in [0, 1) from integer coordinates."""
    with np.errstate(over="ignore"):
        h = (ix.astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)
             ^ iy.astype(np.uint64) * np.uint64(0xC2B2AE3D27D4EB4F)
             ^ np.uint64(salt) * np.uint64(0x165667B19E3779F9))
        h ^= h >> np.uint64(31)
        h *= np.uint64(0xBF58476D1CE4E5B9)
        h ^= h >> np.uint64(29)
        h *= np.uint64(0x94D049BB133111EB)
        h ^= h >> np.uint64(32)
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def value_noise(xs, ys, seed: int, octaves: int = 3, cell_px: float = 24.0) -> np.ndarray:
    """Multi-octave value noise in [-1, 1] on the grid ``ys x xs``.

    ``xs`` (columns) and ``ys`` (rows) are 1-D coordinate vectors; the
    result has shape ``(len(ys), len(xs))`` and depends only on the
    coordinates and ``seed``.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    ys = np.atleast_1d(np.asarray(ys, dtype=np.float64))
    total = np.zeros((len(ys), len(xs)))
    norm = 0.0
    for octave in range(octaves):
        cell = cell_px / 2 ** octave
        amp = 0.5 ** octave
        gx, gy = xs / cell, ys / cell
        x0, y0 = np.floor(gx), np.floor(gy)
        fx, fy = gx - x0, gy - y0
        sx = (fx * fx * (3 - 2 * fx))[None, :]
        sy = (fy * fy * (3 - 2 * fy))[:, None]
        # offset keeps lattice indices non-negative before the uint64 cast
        ix, iy = (x0 + 2 ** 20).astype(np.int64), (y0 + 2 ** 20).astype(np.int64)
        x_lo, y_lo = ix.min(), iy.min()
        lattice = _hash01(np.arange(x_lo, ix.max() + 2)[None, :],
                          np.arange(y_lo, iy.max() + 2)[:, None], seed * 1000003 + octave)
        jx, jy = ix - x_lo, iy - y_lo
        v00, v10 = lattice[np.ix_(jy, jx)], lattice[np.ix_(jy, jx + 1)]
        v01, v11 = lattice[np.ix_(jy + 1, jx)], lattice[np.ix_(jy + 1, jx + 1)]
        top = v00 + sx * (v10 - v00)
        bottom = v01 + sx * (v11 - v01)
        total += amp * (2.0 * (top + sy * (bottom - top)) - 1.0)
        norm += amp
    return total / norm


def render_frame(script: MotionScript, timing: ClipTiming, index: int) -> np.ndarray:
    """RGB frame ``index`` of the clip (time ``t_start + index / fps``)."""
    bg = script.background
    t = timing.t_start + index / timing.fps
    xs = np.arange(timing.width, dtype=np.float64)
    ys = np.arange(timing.height, dtype=np.float64)
    noise = value_noise(xs - bg.drift[0] * index, ys - bg.drift[1] * index, bg.seed, bg.octaves, bg.cell_px)
    water = np.clip(bg.level + bg.amplitude * noise, 0.0, 1.0)
    img = water[..., None] * WATER_TINT
    for k, v in enumerate(script.vessels):
        cx, cy = _positions(v, np.array([t]))[0]
        # the blob is negligible (< 1e-9) beyond 7 radii
        reach = 7.0 * v.radius_px
        x_lo, x_hi = max(int(cx - reach), 0), min(int(cx + reach) + 2, timing.width)
        y_lo, y_hi = max(int(cy - reach), 0), min(int(cy + reach) + 2, timing.height)
        dx = xs[None, x_lo:x_hi] - cx
        dy = ys[y_lo:y_hi, None] - cy
        along = _heading(v, t)
        if along is None:
            q = (dx * dx + dy * dy) / (2 * v.radius_px ** 2)
        else:
            u = dx * along[0] + dy * along[1]
            w = -dx * along[1] + dy * along[0]
            q = u * u / (2 * v.radius_px ** 2) + w * w / (2 * (0.6 * v.radius_px) ** 2)
        blob = v.intensity * np.exp(-q)
        img[y_lo:y_hi, x_lo:x_hi] += blob[..., None] * VESSEL_COLOURS[k % len(VESSEL_COLOURS)]
    return np.clip(img, 0.0, 1.0)


def structure_condition(frame, point, window: int = 21) -> float:
    """Eigenvalue ratio of the gradient structure tensor in a window around ``point``.

    Returns ``inf`` when the smaller eigenvalue vanishes (no trackable texture).
    """
    luma = to_luma(check_frame(frame))
    half = window // 2
    x, y = int(round(point[0])), int(round(point[1]))
    H, W = luma.shape
    patch = luma[max(y - half - 1, 0):min(y + half + 2, H), max(x - half - 1, 0):min(x + half + 2, W)]
    if min(patch.shape) < 3:
        return math.inf
    gy, gx = np.gradient(patch)
    gx, gy = gx[1:-1, 1:-1], gy[1:-1, 1:-1]
    tensor = np.array([[np.sum(gx * gx), np.sum(gx * gy)], [np.sum(gx * gy), np.sum(gy * gy)]])
    lo, hi = np.linalg.eigvalsh(tensor)
    return math.inf if lo <= 0 else float(hi / lo)


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    frames: list
    log: TelemetryLog
    gt_trajectories: dict[int, PixelTrajectory]
    model: CameraFrameModel


def _gps_times(v: VesselScript) -> np.ndarray:
    t0, t1 = v.waypoints[0, 0], v.waypoints[-1, 0]
    times = t0 + GPS_INTERVAL_S * np.arange(int(math.floor((t1 - t0) / GPS_INTERVAL_S + 1e-9)) + 1)
    if t1 - times[-1] > 1e-9:
        times = np.append(times, t1)
    return times


def _emit_log(script: MotionScript, model: CameraFrameModel, offset: float) -> TelemetryLog:
    fixes = []
    for v in script.vessels:
        times = _gps_times(v)
        lonlat = gp.unproject_points(_positions(v, times), model, v.id)
        metric = gp.lonlat_to_metric(lonlat, model.origin)
        step = np.diff(metric, axis=0)
        dt = np.diff(times)
        speed = np.hypot(step[:, 0], step[:, 1]) / dt if len(dt) else np.zeros(0)
        course = np.degrees(np.arctan2(step[:, 0], step[:, 1])) % 360.0 if len(dt) else np.zeros(0)
        for k, (t, (lon, lat)) in enumerate(zip(times, lonlat)):
            j = min(k, len(dt) - 1)
            sog = float(speed[j] * KNOTS_PER_MPS) if j >= 0 else 0.0
            cog = float(course[j]) % 360.0 if j >= 0 else 0.0
            fixes.append(GeoFix(float(t + offset), v.id, float(lon), float(lat), sog, cog, cog))
    return TelemetryLog(fixes)


def synthetic_model(script: MotionScript, timing: ClipTiming, theta_deg: float = 100.0,
                    scale: float = 28.3, center_lonlat=(25.0, 37.0)) -> CameraFrameModel:
    """Camera model that a real annotation of the synthetic scene would produce.

    Anchor centres are the scripted positions at ``t_start``; all vessels
    share one pixel-to-geography map with ``center_lonlat`` at the frame
    centre. The origin is rebuilt as the mean of the clip window of the
    emitted log, exactly as :func:`geoproject.build_model` computes it.
    """
    script.validate(timing)
    frame_centre = np.array([(timing.width - 1) / 2.0, (timing.height - 1) / 2.0])
    centre_fix = GeoFix(timing.t_start, -1, *map(float, center_lonlat))
    origin = LocalOrigin(centre_fix.lon, centre_fix.lat)
    for _ in range(2):
        # latitudes do not depend on the origin, so the second pass is exact
        shared = CameraFrameModel(origin, float(theta_deg), float(scale),
                                  {-1: Anchor(*frame_centre, centre_fix)}, timing)
        anchors = {}
        for v in script.vessels:
            c = _positions(v, np.array([timing.t_start]))[0]
            lon, lat = gp.unproject_points(c, shared, -1)
            anchors[v.id] = Anchor(float(c[0]), float(c[1]),
                                   GeoFix(timing.t_start, v.id, float(lon), float(lat)))
        model = CameraFrameModel(origin, float(theta_deg), float(scale), anchors, timing)
        log = _emit_log(script, model, 0.0)
        t_hi = timing.t_end if timing.n_frames > 1 else timing.t_start + 1.0 / timing.fps
        origin = gp.make_origin(tl.window(log, timing.t_start, t_hi))
    return CameraFrameModel(origin, model.theta_deg, model.scale, model.anchors, timing)


def generate_scene(script: MotionScript, timing: ClipTiming, model: CameraFrameModel,
                   offset: float = 0.0,
                   max_condition: float | None = MAX_STRUCTURE_CONDITION) -> SyntheticScene:
    """Render frames, emit a consistent 1 Hz GPS log and the exact pixel ground truth.

    Log timestamps are on the log clock, ``t_video + offset``. Unless
    ``max_condition`` is None, every vessel must be trackable in the first
    frame (see :func:`structure_condition`), else ``ContractError``.
    """
    missing = [v.id for v in script.vessels if v.id not in model.anchors]
    if missing:
        raise ContractError(f"script vessels {missing} have no anchor in the camera model")
    script.validate(timing)
    times = timing.times
    gt = {v.id: PixelTrajectory(v.id, _positions(v, times), times) for v in script.vessels}
    log = _emit_log(script, model, offset)
    frames = ordered_map(lambda i: render_frame(script, timing, i), range(timing.n_frames))
    if max_condition is not None:
        for vid, traj in gt.items():
            cond = structure_condition(frames[0], traj.points[0])
            if not cond <= max_condition:
                raise ContractError(
                    f"vessel {vid} is not trackable: structure tensor condition {cond:.3g} "
                    f"exceeds {max_condition}"
                )
    return SyntheticScene(frames, log, gt, model)


def linear_script(starts: Sequence, velocity_px_per_frame: Sequence, timing: ClipTiming,
                  ids=(99999, 100000), seed: int = 0, drift=(0.0, 0.0), pad_s: float = 1.0) -> MotionScript:
    """Constant-velocity script whose waypoints span the clip plus ``pad_s`` on each side."""
    t0 = math.floor(timing.t_start - pad_s)
    t1 = math.ceil(timing.t_end + pad_s)
    vessels = []
    for vid, start, vel in zip(ids, starts, velocity_px_per_frame):
        vel = np.asarray(vel, dtype=np.float64) * timing.fps
        s = np.asarray(start, dtype=np.float64)
        wp = [(t, *(s + vel * (t - timing.t_start))) for t in (t0, t1)]
        vessels.append(VesselScript(int(vid), np.array(wp)))
    return MotionScript(tuple(vessels), Background(seed=seed, drift=tuple(map(float, drift))))
