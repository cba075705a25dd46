"""Backward warping and the flow-extrapolation frame synthesiser."""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..errors import ContractError
from ..validation import check_flow, check_frame, check_same_shape
from .farneback import farneback_flow
from .image import bilinear_sample
from .params import FlowParams


def warp(frame, flow, factor: float = 1.0) -> np.ndarray:
    """Backward warp: ``out(p) = frame(p - factor * flow(p))``, bilinear, edge-replicated."""
    img = check_frame(frame)
    if factor == 0:
        return img.copy()
    F = check_flow(flow, img.shape)
    H, W = img.shape[:2]
    gx, gy = np.meshgrid(np.arange(W, dtype=np.float64), np.arange(H, dtype=np.float64))
    out = bilinear_sample(img, gx - factor * F[..., 0], gy - factor * F[..., 1])
    return np.clip(out, 0.0, 1.0)


def extrapolate_sequence(first, last, n_missing: int, params: FlowParams | None = None) -> list:
    """Synthesise ``n_missing`` in-between frames by warping ``first`` along the first->last flow.

    Frame ``i`` (1-based) is ``warp(first, F, i / (n_missing + 1))``.
    """
    return FlowExtrapolator(**_as_kwargs(params)).fit(first, last).predict(n_missing)


def _as_kwargs(params):
    p = params or FlowParams()
    return dict(pyramid_levels=p.pyramid_levels, pyramid_scale=p.pyramid_scale, window=p.window,
                poly_n=p.poly_n, poly_sigma=p.poly_sigma, iterations=p.iterations)


class FlowExtrapolator(BaseEstimator):
    """Optical-flow baseline: fit on the two bounding frames, predict the gap.

    Only the bounding frames are used; no trajectory information enters.
    """

    def __init__(self, pyramid_levels=3, pyramid_scale=0.5, window=15, poly_n=5,
                 poly_sigma=1.1, iterations=3):
        self.pyramid_levels = pyramid_levels
        self.pyramid_scale = pyramid_scale
        self.window = window
        self.poly_n = poly_n
        self.poly_sigma = poly_sigma
        self.iterations = iterations

    def fit(self, X, y):
        first = check_frame(X, name="first")
        last = check_frame(y, name="last")
        check_same_shape(first, last, names=("first", "last"))
        self.first_ = first
        self.flow_ = farneback_flow(first, last, FlowParams(**self.get_params()))
        return self

    def predict(self, n_missing: int) -> list:
        check_is_fitted(self, "flow_")
        if int(n_missing) < 1:
            raise ContractError(f"n_missing must be >= 1, got {n_missing}")
        n = int(n_missing)
        return [warp(self.first_, self.flow_, i / (n + 1)) for i in range(1, n + 1)]
