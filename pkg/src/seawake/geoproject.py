"""GPS-to-pixel projection for a near-stationary top-down camera.

Geography is mapped to pixels in three steps: an equirectangular
East/North offset from a mean origin, a rotation by the camera yaw, and a
pixels-per-metre scale applied around an annotated anchor centre (image y
grows downward, hence the sign flip on the second axis). Every step has an
exact algebraic inverse, exposed through :func:`inverse_project`.

All public angles are in degrees.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import telemetry as tl
from .errors import (
    ContractError,
    DegenerateAnnotationWarning,
    EmptyInputError,
    ScaleUndefinedError,
    UnknownVesselError,
    ValidationError,
)
from .telemetry import GeoFix, TelemetryLog
from .validation import check_points

METRES_PER_DEGREE_LAT = 111320.0
DEFAULT_SCALE_EPSILON = 0.01  # metres


@dataclass(frozen=True)
class LocalOrigin:
    lon_bar: float
    lat_bar: float

    def __post_init__(self):
        if not abs(self.lat_bar) < 90.0:
            raise ValidationError(f"origin latitude {self.lat_bar} must satisfy |lat| < 90")

    @property
    def m_lat(self) -> float:
        return METRES_PER_DEGREE_LAT

    @property
    def m_lon(self) -> float:
        return METRES_PER_DEGREE_LAT * math.cos(math.radians(self.lat_bar))


class EastNorth(NamedTuple):
    e: float
    n: float


class FrameVec(NamedTuple):
    f_x: float
    f_y: float


@dataclass(frozen=True)
class ClipTiming:
    t_start: float = 0.0
    fps: float = 7.0
    n_frames: int = 14
    width: int = 1024
    height: int = 576

    def __post_init__(self):
        if not self.fps > 0:
            raise ValidationError("fps must be positive")
        if self.n_frames < 1:
            raise ValidationError("n_frames must be at least 1")
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("frame width and height must be positive")

    @property
    def times(self) -> np.ndarray:
        return self.t_start + np.arange(self.n_frames) / self.fps

    @property
    def t_end(self) -> float:
        return self.t_start + (self.n_frames - 1) / self.fps

    def contains(self, x, y) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height


@dataclass(frozen=True)
class Anchor:
    """Annotated pixel centre of one vessel and its GPS fix at the anchor time."""

    cx: float
    cy: float
    fix: GeoFix


@dataclass(frozen=True)
class CameraFrameModel:
    origin: LocalOrigin
    theta_deg: float
    scale: float
    anchors: Mapping[int, Anchor]
    timing: ClipTiming

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValidationError(f"scale must be positive, got {self.scale}")
        for vid, a in self.anchors.items():
            if not self.timing.contains(a.cx, a.cy):
                raise ValidationError(
                    f"anchor of vessel {vid} at ({a.cx}, {a.cy}) lies outside the "
                    f"{self.timing.width}x{self.timing.height} frame"
                )

    def anchor(self, vessel_id: int) -> Anchor:
        try:
            return self.anchors[vessel_id]
        except KeyError:
            raise UnknownVesselError(f"no anchor for vessel {vessel_id}") from None


@dataclass(frozen=True, eq=False)
class PixelTrajectory:
    vessel_id: int
    points: np.ndarray
    timestamps: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        ts = np.asarray(self.timestamps, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ContractError(f"trajectory points must have shape (N, 2), got {pts.shape}")
        if ts.shape != (len(pts),):
            raise ContractError("points and timestamps must have identical length")
        if len(ts) > 1 and np.any(np.diff(ts) <= 0):
            raise ContractError("trajectory timestamps must be strictly increasing")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "timestamps", ts)

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, PixelTrajectory):
            return NotImplemented
        return (
            self.vessel_id == other.vessel_id
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.timestamps, other.timestamps)
        )

    def to_dict(self) -> dict:
        return {
            "id": int(self.vessel_id),
            "points": self.points.tolist(),
            "timestamps": self.timestamps.tolist(),
        }

    @classmethod
    def from_dict(cls, doc) -> "PixelTrajectory":
        return cls(int(doc["id"]), np.asarray(doc["points"], dtype=np.float64).reshape(-1, 2),
                   np.asarray(doc["timestamps"], dtype=np.float64))


def make_origin(log: TelemetryLog) -> LocalOrigin:
    """Origin at the arithmetic mean of every fix in ``log``."""
    fixes = log.fixes() if isinstance(log, TelemetryLog) else tuple(log)
    if not fixes:
        raise EmptyInputError("cannot build an origin from an empty log")
    return LocalOrigin(
        lon_bar=float(np.mean([f.lon for f in fixes])),
        lat_bar=float(np.mean([f.lat for f in fixes])),
    )


def to_local_metric(fix: GeoFix, origin: LocalOrigin) -> EastNorth:
    return EastNorth((fix.lon - origin.lon_bar) * origin.m_lon,
                     (fix.lat - origin.lat_bar) * origin.m_lat)


def lonlat_to_metric(lonlat, origin: LocalOrigin) -> np.ndarray:
    """Vectorised :func:`to_local_metric` over an ``(n, 2)`` array of (lon, lat)."""
    ll = np.asarray(lonlat, dtype=np.float64)
    return np.stack([(ll[..., 0] - origin.lon_bar) * origin.m_lon,
                     (ll[..., 1] - origin.lat_bar) * origin.m_lat], axis=-1)


def metric_to_lonlat(en, origin: LocalOrigin) -> np.ndarray:
    en = np.asarray(en, dtype=np.float64)
    return np.stack([origin.lon_bar + en[..., 0] / origin.m_lon,
                     origin.lat_bar + en[..., 1] / origin.m_lat], axis=-1)


def rotate(v, theta_deg: float) -> FrameVec:
    """Rotate an East/North vector into the camera frame (counter-clockwise by theta)."""
    e, n = v
    th = math.radians(theta_deg)
    c, s = math.cos(th), math.sin(th)
    return FrameVec(e * c - n * s, e * s + n * c)


def _rotate_array(v: np.ndarray, theta_deg: float) -> np.ndarray:
    th = math.radians(theta_deg)
    c, s = math.cos(th), math.sin(th)
    return np.stack([v[..., 0] * c - v[..., 1] * s, v[..., 0] * s + v[..., 1] * c], axis=-1)


def estimate_scale(fix_a: GeoFix, fix_b: GeoFix, px_a, px_b, origin: LocalOrigin,
                   epsilon: float = DEFAULT_SCALE_EPSILON) -> float:
    """Pixels per metre from two vessels seen at the same instant.

    Raises ``ScaleUndefinedError`` when the fixes are closer than
    ``epsilon`` metres. Coincident pixel centres yield 0 together with a
    ``DegenerateAnnotationWarning``.
    """
    ea, eb = to_local_metric(fix_a, origin), to_local_metric(fix_b, origin)
    d_m = math.hypot(ea.e - eb.e, ea.n - eb.n)
    if d_m < epsilon:
        raise ScaleUndefinedError(
            f"vessels are {d_m:.4g} m apart (< {epsilon} m); scale is undefined"
        )
    d_p = math.hypot(px_a[0] - px_b[0], px_a[1] - px_b[1])
    if d_p == 0:
        warnings.warn("annotated centres coincide; scale is 0", DegenerateAnnotationWarning,
                      stacklevel=2)
    return d_p / d_m


def project_points(lonlat, model: CameraFrameModel, vessel_id: int) -> np.ndarray:
    """Project (lon, lat) positions of one vessel to pixels relative to its anchor."""
    anchor = model.anchor(vessel_id)
    metric = lonlat_to_metric(lonlat, model.origin)
    ref = lonlat_to_metric([anchor.fix.lon, anchor.fix.lat], model.origin)
    df = _rotate_array(metric - ref, model.theta_deg)
    return np.stack([anchor.cx + df[..., 0] * model.scale,
                     anchor.cy - df[..., 1] * model.scale], axis=-1)


def unproject_points(pixels, model: CameraFrameModel, vessel_id: int) -> np.ndarray:
    """Exact inverse of :func:`project_points`; returns (lon, lat)."""
    anchor = model.anchor(vessel_id)
    p = np.asarray(pixels, dtype=np.float64)
    df = np.stack([(p[..., 0] - anchor.cx) / model.scale,
                   -(p[..., 1] - anchor.cy) / model.scale], axis=-1)
    ref = lonlat_to_metric([anchor.fix.lon, anchor.fix.lat], model.origin)
    return metric_to_lonlat(ref + _rotate_array(df, -model.theta_deg), model.origin)


def project_trajectory(log: TelemetryLog, vessel_id: int, model: CameraFrameModel) -> PixelTrajectory:
    """Pixel path of one vessel at the clip's frame times ``t_start + i / fps``."""
    times = model.timing.times
    lonlat = tl.interpolate_positions(log, vessel_id, times)
    return PixelTrajectory(vessel_id, project_points(lonlat, model, vessel_id), times)


def inverse_project(p, t: float, model: CameraFrameModel, vessel_id: int) -> GeoFix:
    lon, lat = unproject_points(np.asarray(p, dtype=np.float64), model, vessel_id)
    return GeoFix(timestamp=float(t), vessel_id=vessel_id, lon=float(lon), lat=float(lat))


def build_model(log: TelemetryLog, timing: ClipTiming, centres: Mapping[int, tuple],
                theta_deg: float = 100.0, scale=None,
                epsilon: float = DEFAULT_SCALE_EPSILON) -> CameraFrameModel:
    """Assemble a camera model from an aligned log and annotated centres.

    The origin is the mean over the clip window of ``log`` (fixes inside the
    clip plus one bracketing fix per side). Anchor fixes are the log
    interpolated at ``timing.t_start``. When ``scale`` is None it is
    estimated from the first two vessels in ``centres``.
    """
    if not centres:
        raise ContractError("at least one annotated vessel centre is required")
    ids = list(centres)
    t_hi = timing.t_end if timing.n_frames > 1 else timing.t_start + 1.0 / timing.fps
    clip = tl.window(log, timing.t_start, t_hi, vessel_ids=ids)
    origin = make_origin(clip)
    anchors = {
        vid: Anchor(float(centres[vid][0]), float(centres[vid][1]),
                    tl.interpolate(log, vid, timing.t_start))
        for vid in ids
    }
    if scale is None:
        if len(ids) < 2:
            raise ContractError("scale estimation needs two annotated vessels")
        a, b = anchors[ids[0]], anchors[ids[1]]
        scale = estimate_scale(a.fix, b.fix, (a.cx, a.cy), (b.cx, b.cy), origin, epsilon)
    return CameraFrameModel(origin, float(theta_deg), float(scale), anchors, timing)


def model_to_config(model: CameraFrameModel) -> dict:
    """The model's configuration document (anchor fixes and origin are rebuilt from the log)."""
    t = model.timing
    return {
        "theta_deg": model.theta_deg,
        "scale_px_per_m": model.scale,
        "t_start": t.t_start,
        "fps": t.fps,
        "n_frames": t.n_frames,
        "width": t.width,
        "height": t.height,
        "vessels": [{"id": int(vid), "cx": a.cx, "cy": a.cy} for vid, a in model.anchors.items()],
    }


def timing_from_config(doc: Mapping) -> ClipTiming:
    return ClipTiming(
        t_start=float(doc.get("t_start", 0.0)),
        fps=float(doc.get("fps", 7.0)),
        n_frames=int(doc.get("n_frames", 14)),
        width=int(doc.get("width", 1024)),
        height=int(doc.get("height", 576)),
    )


def model_from_config(doc: Mapping, log: TelemetryLog) -> CameraFrameModel:
    try:
        centres = {int(v["id"]): (float(v["cx"]), float(v["cy"])) for v in doc["vessels"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise ContractError(f"malformed vessels list in camera config: {exc}") from None
    return build_model(log, timing_from_config(doc), centres,
                       theta_deg=float(doc.get("theta_deg", 100.0)),
                       scale=doc.get("scale_px_per_m"))


class GeoPixelProjector(TransformerMixin, BaseEstimator):
    """Estimator wrapper around the GPS-to-pixel mapping.

    ``fit(log, centres)`` takes an aligned :class:`TelemetryLog` and the
    annotated pixel centres ``{vessel_id: (cx, cy)}`` of the reference
    frame; it estimates the origin, the anchors and (unless given) the
    scale. ``transform`` maps ``(n, 2)`` (lon, lat) arrays to pixels for
    one vessel and ``inverse_transform`` maps back.

    Parameters
    ----------
    theta_deg : float
        Camera yaw in degrees.
    scale_px_per_m : float or None
        Fixed scale; estimated from the two first vessels when None.
    t_start, fps, n_frames, width, height
        Clip timing and frame size.
    scale_epsilon : float
        Minimum inter-vessel metre distance for scale estimation.
    """

    def __init__(self, theta_deg=100.0, scale_px_per_m=None, t_start=0.0, fps=7.0,
                 n_frames=14, width=1024, height=576, scale_epsilon=DEFAULT_SCALE_EPSILON):
        self.theta_deg = theta_deg
        self.scale_px_per_m = scale_px_per_m
        self.t_start = t_start
        self.fps = fps
        self.n_frames = n_frames
        self.width = width
        self.height = height
        self.scale_epsilon = scale_epsilon

    def fit(self, X: TelemetryLog, y: Mapping[int, tuple]):
        if not isinstance(X, TelemetryLog):
            raise ContractError("X must be a TelemetryLog")
        timing = ClipTiming(self.t_start, self.fps, self.n_frames, self.width, self.height)
        self.model_ = build_model(X, timing, y, theta_deg=self.theta_deg,
                                  scale=self.scale_px_per_m, epsilon=self.scale_epsilon)
        self.origin_ = self.model_.origin
        self.scale_ = self.model_.scale
        self.vessel_ids_ = list(self.model_.anchors)
        self.log_ = X
        return self

    def _vessel(self, vessel_id):
        check_is_fitted(self, "model_")
        return self.vessel_ids_[0] if vessel_id is None else vessel_id

    def transform(self, X, vessel_id=None):
        vid = self._vessel(vessel_id)
        return project_points(check_points(X, "lonlat"), self.model_, vid)

    def inverse_transform(self, X, vessel_id=None):
        vid = self._vessel(vessel_id)
        return unproject_points(check_points(X, "pixels"), self.model_, vid)

    def trajectories(self, log: TelemetryLog | None = None) -> dict[int, PixelTrajectory]:
        """Pixel trajectories of every anchored vessel over the clip."""
        check_is_fitted(self, "model_")
        log = self.log_ if log is None else log
        return {vid: project_trajectory(log, vid, self.model_) for vid in self.vessel_ids_}
