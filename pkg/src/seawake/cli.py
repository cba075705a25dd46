"""Command-line pipeline: synth -> project -> condition -> baseline / evaluate.

Every command reads an optional JSON config (``--config``); command-line
flags override config values. Relative paths in a config resolve against
the config file's directory.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
import traceback
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import conditioning as cond
from . import frameio
from . import geoproject as gp
from . import metrics
from . import synthscene as synth
from . import telemetry as tl
from .errors import ContractError, SeawakeError
from .flowlab import FlowParams, TrackParams, extrapolate_sequence

TRAJECTORIES_FILE = "trajectories.json"
PAYLOAD_FILE = "payload.json"
OVERLAY_FILE = "overlay.png"


@dataclass
class PipelineConfig:
    telemetry: str | None = None
    frames_dir: str | None = None
    out_dir: str = "."
    reference_frame: str | None = None
    offset_s: float = 21.0
    theta_deg: float = 100.0
    scale_px_per_m: float | None = None
    t_start: float = 0.0
    fps: float = 7.0
    n_frames: int = 14
    width: int = 1024
    height: int = 576
    vessels: list = field(default_factory=list)
    vessel_box_px: float = cond.DEFAULT_VESSEL_BOX
    corner_size_px: float = cond.DEFAULT_CORNER_SIZE
    corner_inset_px: float = cond.DEFAULT_CORNER_INSET
    flow: dict = field(default_factory=dict)
    track: dict = field(default_factory=dict)
    seed: int | None = None

    _PATH_KEYS = ("telemetry", "frames_dir", "out_dir", "reference_frame")

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ContractError(f"unknown config key(s): {', '.join(unknown)}")
        for key in cls._PATH_KEYS:
            if doc.get(key) is not None and not Path(doc[key]).is_absolute():
                doc[key] = str(path.parent / doc[key])
        cfg = cls(**doc)
        if not np.isfinite(cfg.offset_s):
            raise ContractError("offset_s must be finite")
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def timing(self) -> gp.ClipTiming:
        return gp.ClipTiming(self.t_start, self.fps, self.n_frames, self.width, self.height)

    @property
    def centres(self) -> dict:
        return {int(v["id"]): (float(v["cx"]), float(v["cy"])) for v in self.vessels}

    @property
    def flow_params(self) -> FlowParams:
        return FlowParams(**self.flow)

    @property
    def track_params(self) -> TrackParams:
        return TrackParams(**self.track)


def _parse_vessel(text: str) -> dict:
    m = re.fullmatch(r"\s*(-?\d+)\s*:\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected id:cx,cy, got {text!r}")
    return {"id": int(m.group(1)), "cx": float(m.group(2)), "cy": float(m.group(3))}


def _resolve(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {
        "out_dir": getattr(args, "out", None),
        "seed": getattr(args, "seed", None),
        "telemetry": getattr(args, "telemetry", None),
        "frames_dir": getattr(args, "frames", None),
        "offset_s": getattr(args, "offset", None),
        "theta_deg": getattr(args, "theta", None),
        "scale_px_per_m": getattr(args, "scale", None),
        "reference_frame": getattr(args, "reference", None),
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "vessel", None):
        cfg.vessels = list(args.vessel)
    return cfg


def _out(cfg) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _load_log(cfg) -> tl.TelemetryLog:
    if not cfg.telemetry:
        raise ContractError("no telemetry CSV given (--telemetry or config 'telemetry')")
    raw = Path(cfg.telemetry).read_bytes()
    return tl.align(tl.parse_log(raw), cfg.offset_s)


def _fit_projector(cfg, log):
    t = cfg.timing
    projector = gp.GeoPixelProjector(cfg.theta_deg, cfg.scale_px_per_m, t.t_start, t.fps,
                                     t.n_frames, t.width, t.height)
    return projector.fit(log, cfg.centres)


def trajectories_document(model: gp.CameraFrameModel, trajectories) -> dict:
    return {
        "scale_px_per_m": model.scale,
        "theta_deg": model.theta_deg,
        "origin": {"lon": model.origin.lon_bar, "lat": model.origin.lat_bar},
        "timing": {"t_start": model.timing.t_start, "fps": model.timing.fps,
                   "n_frames": model.timing.n_frames, "width": model.timing.width,
                   "height": model.timing.height},
        "vessels": [trajectories[vid].to_dict() for vid in trajectories],
    }


def _read_trajectories(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return {int(v["id"]): gp.PixelTrajectory.from_dict(v) for v in doc["vessels"]}


def cmd_project(cfg: PipelineConfig) -> dict:
    """Project every annotated vessel's GPS track into pixels; writes trajectories.json."""
    projector = _fit_projector(cfg, _load_log(cfg))
    trajectories = projector.trajectories()
    doc = trajectories_document(projector.model_, trajectories)
    _write_json(_out(cfg) / TRAJECTORIES_FILE, doc)
    print(f"scale_px_per_m = {projector.scale_:.6f}")
    return doc


def _trajectories_for(cfg, path=None) -> dict:
    path = Path(path) if path else Path(cfg.out_dir) / TRAJECTORIES_FILE
    if path.exists():
        return _read_trajectories(path)
    return {int(v["id"]): gp.PixelTrajectory.from_dict(v) for v in cmd_project(cfg)["vessels"]}


def _reference_path(cfg) -> Path | None:
    if cfg.reference_frame:
        return Path(cfg.reference_frame)
    if cfg.frames_dir:
        return Path(cfg.frames_dir) / frameio.FRAME_PATTERN.format(1)
    return None


def cmd_condition(cfg: PipelineConfig, trajectories_path=None, overlay=False) -> cond.ConditioningPayload:
    """Build the six-entry payload (payload.json) and optionally overlay.png."""
    timing = cfg.timing
    trajectories = _trajectories_for(cfg, trajectories_path)
    centres = cfg.centres or {vid: tuple(t.points[0]) for vid, t in trajectories.items()}
    if len(centres) != 2:
        raise ContractError(f"the payload needs exactly two vessels, got {len(centres)}")
    entries = []
    for vid, centre in centres.items():
        if vid not in trajectories:
            raise ContractError(f"no trajectory for vessel {vid}")
        box = cond.vessel_box(centre, cfg.vessel_box_px, frame_size=(timing.width, timing.height))
        entries.append((box, trajectories[vid]))
    ref = _reference_path(cfg)
    payload = cond.build_payload(timing, entries, cfg.corner_size_px, cfg.corner_inset_px,
                                 reference=ref.name if ref else "")
    out = _out(cfg)
    (out / PAYLOAD_FILE).write_bytes(cond.serialize_payload(payload))
    if overlay:
        if ref is None:
            raise ContractError("--overlay needs a reference frame (--reference or frames_dir)")
        frameio.write_frame(out / OVERLAY_FILE, cond.render_overlay(frameio.read_frame(ref), payload))
    return payload


def cmd_baseline(cfg: PipelineConfig, first=None, last=None, n=None) -> list:
    """Extrapolate ``n`` frames between the bounding frames; writes frame_0002.png onward."""
    n = cfg.n_frames if n is None else int(n)
    if n < 1:
        raise ContractError(f"number of missing frames must be >= 1, got {n}")
    if first is None or last is None:
        if not cfg.frames_dir:
            raise ContractError("bounding frames not given (--first/--last or frames_dir)")
        first = first or Path(cfg.frames_dir) / frameio.FRAME_PATTERN.format(1)
        last = last or Path(cfg.frames_dir) / frameio.FRAME_PATTERN.format(n + 2)
    frames = extrapolate_sequence(frameio.read_frame(first), frameio.read_frame(last), n,
                                  cfg.flow_params)
    return frameio.write_sequence(_out(cfg), frames, start=2)


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "method"


def cmd_evaluate(cfg: PipelineConfig, generated_dir, method_name="method", trajectories_path=None,
                 gt_dir=None) -> metrics.EvaluationReport:
    """Score a generated frame directory; writes report_<method>.json and .txt."""
    frames = frameio.read_sequence(generated_dir)
    trajectories = _trajectories_for(cfg, trajectories_path)
    gt_frames = frameio.read_sequence(gt_dir) if gt_dir else None
    report = metrics.evaluate_method(frames, trajectories, flow_params=cfg.flow_params,
                                     track_params=cfg.track_params, method_name=method_name,
                                     gt_frames=gt_frames)
    out = _out(cfg)
    slug = _slug(method_name)
    (out / f"report_{slug}.json").write_bytes(report.to_json())
    table = metrics.format_table([report])
    (out / f"report_{slug}.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    return report


def cmd_synth(cfg: PipelineConfig, script_path) -> synth.SyntheticScene:
    """Render a scripted scene: frames/, telemetry.csv, gt_trajectories.json and config.json."""
    script = synth.MotionScript.loads(Path(script_path).read_text(encoding="utf-8"))
    if cfg.seed is not None:
        bg = asdict(script.background) | {"seed": int(cfg.seed)}
        script = synth.MotionScript(script.vessels, synth.Background(**bg))
    timing = cfg.timing
    model = synth.synthetic_model(script, timing, cfg.theta_deg,
                                  cfg.scale_px_per_m if cfg.scale_px_per_m else 28.3)
    scene = synth.generate_scene(script, timing, model, offset=cfg.offset_s)
    out = _out(cfg)
    frameio.write_sequence(out / "frames", scene.frames)
    (out / "telemetry.csv").write_bytes(tl.serialize_log(scene.log))
    _write_json(out / "gt_trajectories.json", trajectories_document(model, scene.gt_trajectories))
    pipeline = PipelineConfig(
        telemetry="telemetry.csv", frames_dir="frames", out_dir=".",
        offset_s=cfg.offset_s, theta_deg=cfg.theta_deg, scale_px_per_m=None,
        t_start=timing.t_start, fps=timing.fps, n_frames=timing.n_frames,
        width=timing.width, height=timing.height,
        vessels=[{"id": vid, "cx": a.cx, "cy": a.cy} for vid, a in model.anchors.items()],
        vessel_box_px=cfg.vessel_box_px, corner_size_px=cfg.corner_size_px,
        corner_inset_px=cfg.corner_inset_px, flow=cfg.flow, track=cfg.track,
        seed=script.background.seed,
    )
    _write_json(out / "config.json", pipeline.to_dict())
    return scene


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON pipeline config")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="noise seed override")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")

    geo = argparse.ArgumentParser(add_help=False)
    geo.add_argument("--telemetry", help="telemetry CSV path")
    geo.add_argument("--vessel", action="append", type=_parse_vessel, metavar="ID:CX,CY",
                     help="annotated vessel centre (repeatable, in payload order)")
    geo.add_argument("--theta", type=float, help="camera yaw in degrees (default 100)")
    geo.add_argument("--offset", type=float, help="clock offset t_log - t_video in s (default 21)")
    geo.add_argument("--scale", type=float, help="fixed px/m scale instead of estimating it")

    parser = argparse.ArgumentParser(prog="seawake", parents=[common],
                                     description="GPS-conditioned maritime video reconstruction tools")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("project", parents=[common, geo], help="project GPS tracks into pixels")

    p = sub.add_parser("condition", parents=[common, geo], help="build the conditioning payload")
    p.add_argument("--trajectories", help="trajectories.json (default: <out>/trajectories.json)")
    p.add_argument("--reference", help="reference frame image")
    p.add_argument("--frames", help="frame directory")
    p.add_argument("--overlay", action="store_true", help="also write overlay.png")

    p = sub.add_parser("baseline", parents=[common], help="optical-flow extrapolation baseline")
    p.add_argument("--first", help="first bounding frame")
    p.add_argument("--last", help="last bounding frame")
    p.add_argument("--frames", help="frame directory holding the bounding frames")
    p.add_argument("-n", "--n-missing", type=int, dest="n_missing", help="frames to synthesise")

    p = sub.add_parser("evaluate", parents=[common], help="score a generated frame sequence")
    p.add_argument("--generated", required=True, help="directory of frame_NNNN.png files")
    p.add_argument("--method", default="method", help="method name for the report")
    p.add_argument("--trajectories", help="trajectories.json (default: <out>/trajectories.json)")
    p.add_argument("--gt-frames", help="ground-truth frame directory (adds PSNR)")

    p = sub.add_parser("synth", parents=[common], help="render a synthetic oracle scene")
    p.add_argument("--script", required=True, help="motion script JSON")
    return parser


def _origin_module(exc: BaseException) -> str:
    tb = exc.__traceback__
    name = __name__
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("seawake"):
            name = mod
        tb = tb.tb_next
    return name


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if args.command == "project":
                cmd_project(cfg)
            elif args.command == "condition":
                cmd_condition(cfg, args.trajectories, args.overlay)
            elif args.command == "baseline":
                cmd_baseline(cfg, args.first, args.last, args.n_missing)
            elif args.command == "evaluate":
                cmd_evaluate(cfg, args.generated, args.method, args.trajectories, args.gt_frames)
            elif args.command == "synth":
                cmd_synth(cfg, args.script)
    except (SeawakeError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error [{_origin_module(exc)}]: {exc}", file=sys.stderr)
        if "SEAWAKE_DEBUG" in os.environ:
            traceback.print_exc()
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
