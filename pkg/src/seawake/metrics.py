"""Evaluation of generated frame sequences.

Temporal smoothness is the mean dense-flow magnitude between consecutive
frames. Trajectory error tracks vessel centres with pyramidal LK and
compares them to GPS-projected positions; frames where tracking diverged
are excluded and reported through the validity fraction.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._parallel import ordered_map
from .errors import ContractError
from .flowlab import FlowParams, TrackParams, farneback_flow, lk_track, to_luma
from .geoproject import PixelTrajectory
from .validation import check_frame, check_frames, check_same_shape


def temporal_smoothness(frames: Sequence, params: FlowParams | None = None) -> float:
    """Mean per-pixel flow magnitude averaged over all consecutive frame pairs (px/frame)."""
    frames = check_frames(frames)
    if len(frames) < 2:
        raise ContractError(f"temporal smoothness needs at least 2 frames, got {len(frames)}")
    luma = [to_luma(f) for f in frames]

    def pair_mean(k):
        flow = farneback_flow(luma[k], luma[k + 1], params)
        return float(np.hypot(flow[..., 0], flow[..., 1]).mean())

    per_pair = ordered_map(pair_mean, range(len(luma) - 1))
    return float(np.mean(per_pair))


def _as_points(ref):
    return ref.points if isinstance(ref, PixelTrajectory) else np.asarray(ref, dtype=np.float64)


def trajectory_error(tracked: Mapping, reference: Mapping):
    """Per-vessel and overall mean pixel error plus the tracking validity fraction.

    ``tracked`` maps vessel id to ``(points, valid)``; ``reference`` maps
    vessel id to a :class:`PixelTrajectory` (or an ``(N, 2)`` array).
    A vessel with no valid frame gets ``nan``.
    """
    if set(tracked) != set(reference):
        raise ContractError(
            f"tracked vessels {sorted(tracked)} differ from reference vessels {sorted(reference)}"
        )
    per_vessel = {}
    n_valid = n_total = 0
    for vid in reference:
        pts, valid = tracked[vid]
        pts = np.asarray(pts, dtype=np.float64)
        valid = np.asarray(valid, dtype=bool)
        ref = _as_points(reference[vid])
        if pts.shape != ref.shape or valid.shape != (len(ref),):
            raise ContractError(
                f"vessel {vid}: tracked shape {pts.shape} does not match reference {ref.shape}"
            )
        dist = np.hypot(*(pts - ref).T)
        per_vessel[vid] = float(dist[valid].mean()) if valid.any() else math.nan
        n_valid += int(valid.sum())
        n_total += len(valid)
    overall = float(np.mean(list(per_vessel.values()))) if per_vessel else math.nan
    return per_vessel, overall, (n_valid / n_total if n_total else 0.0)


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB on [0, 1] intensities; ``inf`` for identical frames."""
    x = check_frame(a, name="a")
    y = check_frame(b, name="b")
    check_same_shape(x, y, names=("a", "b"))
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _num(value):
    if value is None:
        return None
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


@dataclass
class EvaluationReport:
    method_name: str
    temporal_smoothness: float
    trajectory_error_per_vessel: dict[int, float]
    trajectory_error_mean: float
    frames_evaluated: int
    tracking_validity: float
    psnr_mean: float | None = None
    # needs pretrained models; never populated here
    lpips: float | None = field(default=None)
    brisque: float | None = field(default=None)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["trajectory_error_per_vessel"] = {
            str(k): _num(v) for k, v in self.trajectory_error_per_vessel.items()
        }
        return {k: (_num(v) if not isinstance(v, dict) else v) for k, v in d.items()}

    def to_json(self) -> bytes:
        return (json.dumps(self.to_dict(), indent=2) + "\n").encode("utf-8")

    @classmethod
    def from_dict(cls, doc) -> "EvaluationReport":
        def num(v):
            if v is None:
                return math.nan
            return math.inf if v == "inf" else float(v)

        return cls(
            method_name=doc["method_name"],
            temporal_smoothness=num(doc["temporal_smoothness"]),
            trajectory_error_per_vessel={int(k): num(v) for k, v in doc["trajectory_error_per_vessel"].items()},
            trajectory_error_mean=num(doc["trajectory_error_mean"]),
            frames_evaluated=int(doc["frames_evaluated"]),
            tracking_validity=float(doc["tracking_validity"]),
            psnr_mean=None if doc.get("psnr_mean") is None else num(doc["psnr_mean"]),
            lpips=doc.get("lpips"),
            brisque=doc.get("brisque"),
        )


def _cell(value, fmt="{:.2f}"):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    return fmt.format(value)


def format_table(reports: Sequence[EvaluationReport]) -> str:
    """Fixed-width text table: method, smoothness, per-vessel and mean trajectory error, validity."""
    vessel_ids = sorted({vid for r in reports for vid in r.trajectory_error_per_vessel})
    header = ["Method", "Temp. smooth"] + [f"Traj err {vid}" for vid in vessel_ids] + \
        ["Traj err mean", "Validity"]
    rows = [
        [r.method_name, _cell(r.temporal_smoothness)]
        + [_cell(r.trajectory_error_per_vessel.get(vid)) for vid in vessel_ids]
        + [_cell(r.trajectory_error_mean), _cell(r.tracking_validity)]
        for r in reports
    ]
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    line = "+".join("-" * (w + 2) for w in widths)
    fmt_row = lambda cells: " | ".join(  # noqa: E731
        str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(cells, widths))
    )
    return "\n".join([fmt_row(header), line] + [fmt_row(r) for r in rows]) + "\n"


def evaluate_method(generated: Sequence, gt_reference: Mapping[int, PixelTrajectory], seeds=None,
                    flow_params: FlowParams | None = None, track_params: TrackParams | None = None,
                    method_name: str = "method", gt_frames: Sequence | None = None) -> EvaluationReport:
    """Track vessels through ``generated`` and score them against GPS-projected trajectories.

    Frame ``k`` of ``generated`` is matched with point ``k`` of every
    reference trajectory. ``seeds`` defaults to each trajectory's first
    point. When ``gt_frames`` is given the mean PSNR is reported too.
    """
    frames = check_frames(generated, min_frames=1)
    ids = list(gt_reference)
    if not ids:
        raise ContractError("no reference trajectories")
    for vid in ids:
        if len(_as_points(gt_reference[vid])) != len(frames):
            raise ContractError(
                f"vessel {vid} reference has {len(_as_points(gt_reference[vid]))} points "
                f"but {len(frames)} frames were generated"
            )
    if seeds is None:
        seeds = {vid: _as_points(gt_reference[vid])[0] for vid in ids}
    if set(seeds) != set(ids):
        raise ContractError("seeds must cover exactly the reference vessels")

    if len(frames) >= 2:
        tracks, valid = lk_track(frames, [seeds[vid] for vid in ids], track_params)
        smooth = temporal_smoothness(frames, flow_params)
    else:
        tracks = np.array([[seeds[vid]] for vid in ids], dtype=np.float64)
        valid = np.ones((len(ids), 1), dtype=bool)
        smooth = 0.0
    tracked = {vid: (tracks[i], valid[i]) for i, vid in enumerate(ids)}
    per_vessel, overall, validity = trajectory_error(tracked, gt_reference)

    psnr_mean = None
    if gt_frames is not None:
        gt = check_frames(gt_frames)
        if len(gt) != len(frames):
            raise ContractError("gt_frames and generated frames differ in count")
        psnr_mean = float(np.mean([psnr(a, b) for a, b in zip(frames, gt)]))
    return EvaluationReport(method_name, smooth, per_vessel, overall, len(frames), validity, psnr_mean)
