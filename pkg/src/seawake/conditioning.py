"""Six-entry trajectory conditioning payload for image-to-video models.

A payload pairs a bounding box with an N-point pixel trajectory for each
of two vessels and four frame-corner anchors. Corner anchors keep a
constant trajectory, telling the model the camera does not move.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import jsonschema
import numpy as np

from .errors import (
    AnchoringError,
    AnnotationError,
    ContractError,
    GeometryError,
    OutOfFrameWarning,
    SchemaError,
)
from .geoproject import ClipTiming, PixelTrajectory
from .validation import check_frame

PAYLOAD_VERSION = 1
CORNER_ROLES = ("corner_tl", "corner_tr", "corner_bl", "corner_br")
ROLES = ("vessel",) + CORNER_ROLES
DEFAULT_CORNER_SIZE = 35.0
DEFAULT_CORNER_INSET = 30.0
DEFAULT_VESSEL_BOX = 40.0
ANCHOR_TOLERANCE = 1e-6

# Overlay colours: first vessel green, second yellow, corners red.
VESSEL_COLOURS = ((0.0, 1.0, 0.0), (1.0, 1.0, 0.0))
CORNER_COLOUR = (1.0, 0.0, 0.0)


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise AnnotationError(f"bounding box needs positive size, got {self.w}x{self.h}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def intersects(self, width, height) -> bool:
        return self.x < width and self.y < height and self.x + self.w > 0 and self.y + self.h > 0

    def as_list(self) -> list[float]:
        return [float(self.x), float(self.y), float(self.w), float(self.h)]


@dataclass(frozen=True, eq=False)
class PayloadEntry:
    role: str
    id: int | None
    bbox: BBox
    trajectory: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ContractError(f"unknown payload role {self.role!r}")
        traj = np.asarray(self.trajectory, dtype=np.float64)
        if traj.ndim != 2 or traj.shape[1] != 2 or len(traj) == 0:
            raise ContractError(f"trajectory must have shape (N, 2), got {traj.shape}")
        if self.role != "vessel" and not np.all(traj == traj[0]):
            raise ContractError(f"{self.role} trajectory must be constant")
        object.__setattr__(self, "trajectory", traj)

    def __eq__(self, other):
        if not isinstance(other, PayloadEntry):
            return NotImplemented
        return (self.role, self.id, self.bbox) == (other.role, other.id, other.bbox) and \
            np.array_equal(self.trajectory, other.trajectory)


@dataclass(frozen=True, eq=False)
class ConditioningPayload:
    """Structural equality is equality of the serialised document."""

    timing: ClipTiming
    entries: tuple[PayloadEntry, ...]
    reference_frame: str = ""

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        roles = [e.role for e in entries]
        if len(entries) != 6 or roles.count("vessel") != 2 or \
                sorted(r for r in roles if r != "vessel") != sorted(CORNER_ROLES):
            raise ContractError(
                f"payload needs exactly two vessel and four distinct corner entries, got {roles}"
            )
        for e in entries:
            if len(e.trajectory) != self.timing.n_frames:
                raise ContractError(
                    f"{e.role} trajectory has {len(e.trajectory)} points, expected {self.timing.n_frames}"
                )

    def __eq__(self, other):
        if not isinstance(other, ConditioningPayload):
            return NotImplemented
        return payload_to_dict(self) == payload_to_dict(other)

    @property
    def vessels(self) -> tuple[PayloadEntry, ...]:
        return tuple(e for e in self.entries if e.role == "vessel")


def vessel_box(center, size: float = DEFAULT_VESSEL_BOX, frame_size=None) -> BBox:
    """Square box of side ``size`` centred on an annotated vessel centre.

    ``frame_size`` is ``(width, height)``; when given the centre must lie
    inside the frame.
    """
    cx, cy = float(center[0]), float(center[1])
    if not size > 0:
        raise AnnotationError(f"vessel box size must be positive, got {size}")
    if frame_size is not None:
        w, h = frame_size
        if not (0 <= cx < w and 0 <= cy < h):
            raise AnnotationError(f"vessel centre ({cx}, {cy}) lies outside the {w}x{h} frame")
    return BBox(cx - size / 2.0, cy - size / 2.0, float(size), float(size))


def corner_anchors(timing: ClipTiming, box_size: float = DEFAULT_CORNER_SIZE,
                   inset: float = DEFAULT_CORNER_INSET) -> list[PayloadEntry]:
    """Four constant-trajectory boxes whose outer corners sit ``inset`` px from the frame edges."""
    W, H = timing.width, timing.height
    if not (W > 2 * inset + box_size and H > 2 * inset + box_size):
        raise GeometryError(
            f"{W}x{H} frame cannot hold {box_size} px corner boxes with {inset} px inset"
        )
    far_x, far_y = W - inset - box_size, H - inset - box_size
    origins = {
        "corner_tl": (inset, inset),
        "corner_tr": (far_x, inset),
        "corner_bl": (inset, far_y),
        "corner_br": (far_x, far_y),
    }
    entries = []
    for role in CORNER_ROLES:
        box = BBox(float(origins[role][0]), float(origins[role][1]), float(box_size), float(box_size))
        traj = np.tile(np.array(box.center), (timing.n_frames, 1))
        entries.append(PayloadEntry(role, None, box, traj))
    return entries


def build_payload(timing: ClipTiming, vessel_entries: Sequence[tuple[BBox, PixelTrajectory]],
                  corner_size: float = DEFAULT_CORNER_SIZE, inset: float = DEFAULT_CORNER_INSET,
                  reference: str = "") -> ConditioningPayload:
    """Assemble the payload in the order [vessel 1, vessel 2, TL, TR, BL, BR]."""
    if len(vessel_entries) != 2:
        raise ContractError(f"expected two vessel entries, got {len(vessel_entries)}")
    entries = []
    for box, traj in vessel_entries:
        pts = traj.points
        if len(pts) != timing.n_frames:
            raise ContractError(
                f"vessel {traj.vessel_id} trajectory has {len(pts)} points, expected {timing.n_frames}"
            )
        gap = float(np.hypot(*(pts[0] - np.array(box.center))))
        if gap > ANCHOR_TOLERANCE:
            raise AnchoringError(
                f"vessel {traj.vessel_id} trajectory starts {gap:.3g} px from its box centre"
            )
        outside = (pts[:, 0] < 0) | (pts[:, 0] >= timing.width) | (pts[:, 1] < 0) | (pts[:, 1] >= timing.height)
        if np.any(outside):
            warnings.warn(f"vessel {traj.vessel_id} trajectory leaves the frame at "
                          f"{int(outside.sum())} point(s)", OutOfFrameWarning, stacklevel=2)
        entries.append(PayloadEntry("vessel", int(traj.vessel_id), box, pts))
    entries.extend(corner_anchors(timing, corner_size, inset))
    return ConditioningPayload(timing, tuple(entries), str(reference))


PAYLOAD_SCHEMA = {
    "type": "object",
    "required": ["version", "reference_frame", "width", "height", "fps", "n_frames", "entries"],
    "properties": {
        "version": {"const": PAYLOAD_VERSION},
        "reference_frame": {"type": "string"},
        "width": {"type": "integer", "minimum": 1},
        "height": {"type": "integer", "minimum": 1},
        "fps": {"type": "number", "exclusiveMinimum": 0},
        "n_frames": {"type": "integer", "minimum": 1},
        "entries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["role", "id", "bbox", "trajectory"],
                "properties": {
                    "role": {"enum": list(ROLES)},
                    "id": {"type": ["integer", "null"]},
                    "bbox": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
                    "trajectory": {
                        "type": "array",
                        "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                    },
                },
            },
        },
    },
}


def payload_to_dict(p: ConditioningPayload) -> dict:
    return {
        "version": PAYLOAD_VERSION,
        "reference_frame": p.reference_frame,
        "width": int(p.timing.width),
        "height": int(p.timing.height),
        "fps": float(p.timing.fps),
        "n_frames": int(p.timing.n_frames),
        "entries": [
            {"role": e.role, "id": e.id, "bbox": e.bbox.as_list(), "trajectory": e.trajectory.tolist()}
            for e in p.entries
        ],
    }


def serialize_payload(p: ConditioningPayload) -> bytes:
    """UTF-8 JSON with fixed key order; floats keep full precision."""
    return (json.dumps(payload_to_dict(p), indent=2) + "\n").encode("utf-8")


def _path(error) -> str:
    parts = ""
    for key in error.absolute_path:
        parts += f"[{key}]" if isinstance(key, int) else (f".{key}" if parts else str(key))
    return parts


def parse_payload(raw: bytes | str | dict) -> ConditioningPayload:
    """Parse and validate a payload document; errors name the offending path."""
    if isinstance(raw, (bytes, str)):
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"payload is not valid JSON: {exc}") from None
    else:
        doc = raw
    try:
        jsonschema.validate(doc, PAYLOAD_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = _path(exc)
        if exc.validator == "required":
            missing = [k for k in exc.validator_value if k not in exc.instance]
            path = ".".join(filter(None, [path, missing[0]])) if missing else path
        raise SchemaError(exc.message, path=path) from None
    timing = ClipTiming(0.0, float(doc["fps"]), int(doc["n_frames"]),
                        int(doc["width"]), int(doc["height"]))
    entries = []
    for i, e in enumerate(doc["entries"]):
        try:
            entries.append(PayloadEntry(e["role"], e["id"], BBox(*e["bbox"]), e["trajectory"]))
        except (ContractError, AnnotationError) as exc:
            raise SchemaError(str(exc), path=f"entries[{i}]") from None
    try:
        return ConditioningPayload(timing, tuple(entries), doc["reference_frame"])
    except ContractError as exc:
        raise SchemaError(str(exc), path="entries") from None


def _segment_pixels(p0, p1):
    """Integer pixels covered by the segment p0-p1 (sampled at <= 0.5 px steps)."""
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    n = max(int(np.ceil(np.hypot(*(p1 - p0)) * 2)), 1)
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    return np.rint(p0 + t * (p1 - p0)).astype(int)


def _arrowhead(tail, tip, length=8.0, spread_deg=25.0):
    d = np.asarray(tip, float) - np.asarray(tail, float)
    norm = np.hypot(*d)
    if norm == 0:
        return []
    d /= norm
    out = []
    for sign in (1, -1):
        a = np.radians(sign * spread_deg)
        r = np.array([d[0] * np.cos(a) - d[1] * np.sin(a), d[0] * np.sin(a) + d[1] * np.cos(a)])
        out.append((tip, np.asarray(tip, float) - length * r))
    return out


def render_overlay(frame, p: ConditioningPayload) -> np.ndarray:
    """Copy of ``frame`` with every box outlined and each trajectory drawn as an arrow."""
    img = check_frame(frame)
    H, W = img.shape[:2]
    if (W, H) != (p.timing.width, p.timing.height):
        raise ContractError(f"frame is {W}x{H} but payload expects {p.timing.width}x{p.timing.height}")
    out = img.copy()
    vessel_idx = 0
    for e in p.entries:
        if e.role == "vessel":
            colour = VESSEL_COLOURS[vessel_idx % len(VESSEL_COLOURS)]
            vessel_idx += 1
        else:
            colour = CORNER_COLOUR
        if out.ndim == 2:
            colour = 0.299 * colour[0] + 0.587 * colour[1] + 0.114 * colour[2]
        b = e.bbox
        corners = [(b.x, b.y), (b.x + b.w, b.y), (b.x + b.w, b.y + b.h), (b.x, b.y + b.h)]
        segments = [(corners[i], corners[(i + 1) % 4]) for i in range(4)]
        traj = e.trajectory
        segments += [(traj[i], traj[i + 1]) for i in range(len(traj) - 1)
                     if np.any(traj[i] != traj[i + 1])]
        moving = np.flatnonzero(np.any(traj != traj[-1], axis=1))
        if len(moving):
            segments += _arrowhead(traj[moving[-1]], traj[-1])
        for a, c in segments:
            px = _segment_pixels(a, c)
            keep = (px[:, 0] >= 0) & (px[:, 0] < W) & (px[:, 1] >= 0) & (px[:, 1] < H)
            px = px[keep]
            out[px[:, 1], px[:, 0]] = colour
    return out
