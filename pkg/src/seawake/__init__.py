"""GPS-telemetry to pixel-trajectory conditioning, classical baselines and metrics
for reconstructing top-down maritime drone video."""
from .conditioning import (
    BBox,
    ConditioningPayload,
    PayloadEntry,
    build_payload,
    corner_anchors,
    parse_payload,
    render_overlay,
    serialize_payload,
    vessel_box,
)
from .geoproject import (
    CameraFrameModel,
    ClipTiming,
    GeoPixelProjector,
    LocalOrigin,
    PixelTrajectory,
    estimate_scale,
    inverse_project,
    make_origin,
    project_trajectory,
    rotate,
    to_local_metric,
)
from .metrics import EvaluationReport, evaluate_method, psnr, temporal_smoothness, trajectory_error
from .telemetry import GeoFix, TelemetryLog, align, interpolate, parse_log, serialize_log, window

__version__ = "0.1.0"
