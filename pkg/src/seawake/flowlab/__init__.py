"""Classical motion estimation: dense flow, sparse tracking and warping."""
from .farneback import FarnebackFlow, farneback_flow
from .image import bilinear_sample, to_luma
from .lk import LucasKanadeTracker, lk_track
from .params import FlowParams, TrackParams
from .polyexp import PolyCoefficients, polynomial_expansion
from .warp import FlowExtrapolator, extrapolate_sequence, warp

__all__ = [
    "FarnebackFlow", "FlowExtrapolator", "FlowParams", "LucasKanadeTracker", "PolyCoefficients",
    "TrackParams", "bilinear_sample", "extrapolate_sequence", "farneback_flow", "lk_track",
    "polynomial_expansion", "to_luma", "warp",
]
