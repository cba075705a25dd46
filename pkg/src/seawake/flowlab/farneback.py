"""Two-frame dense optical flow by polynomial expansion (Farneback).

Both frames are expanded into local quadratics. Where the second frame is
the first displaced by ``d``, the linear coefficients differ by ``-2 A d``,
so ``d`` is recovered from the coefficient difference. The per-pixel
normal equations are averaged over a Gaussian window, solved coarse to
fine on a pyramid, and refined a few times per level with the current
estimate as the warm start.
"""
import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator

from ..validation import check_frame, check_same_shape
from .image import resize, scaled_level, to_luma
from .params import FlowParams
from .polyexp import polynomial_raw

# Intensities are rescaled to 0..255 so the determinant regulariser has a
# fixed meaning relative to typical 8-bit contrast.
_INTENSITY_SCALE = 255.0
_DET_EPS = 1e-3
_MIN_LEVEL_SIZE = 8


def _expand(img, params):
    r = polynomial_raw(img, params.poly_n, params.poly_sigma)
    # channel-first planes: b_x, b_y, A_xx, A_yy, A_xy
    planes = np.empty((5,) + img.shape)
    for k, src in enumerate((1, 2, 3, 4)):
        planes[k] = r[..., src]
    planes[4] = r[..., 5] * 0.5
    return planes


def _sample_planes(R, xs, ys):
    """Bilinear, edge-clamped sampling of every plane of ``R`` at shared coordinates."""
    _, H, W = R.shape
    x = np.clip(xs, 0.0, W - 1.0)
    y = np.clip(ys, 0.0, H - 1.0)
    x0 = np.minimum(x.astype(np.intp), max(W - 2, 0))
    y0 = np.minimum(y.astype(np.intp), max(H - 2, 0))
    fx, fy = x - x0, y - y0
    # weights in this form are exact at integer coordinates, edges included
    w00, w01 = (1.0 - fx) * (1.0 - fy), fx * (1.0 - fy)
    w10, w11 = (1.0 - fx) * fy, fx * fy
    i00 = y0 * W + x0
    dx, dy = (1 if W > 1 else 0), (W if H > 1 else 0)
    out = np.empty_like(R)
    for k, plane in enumerate(R.reshape(len(R), -1)):
        acc = plane.take(i00) * w00
        acc += plane.take(i00 + dx) * w01
        acc += plane.take(i00 + dy) * w10
        acc += plane.take(i00 + dy + dx) * w11
        out[k] = acc
    return out


def _update_matrices(R0, R1, flow, grid):
    gx, gy = grid
    fx, fy = flow
    R1w = _sample_planes(R1, gx + fx, gy + fy)
    a00 = (R0[2] + R1w[2]) * 0.5
    a11 = (R0[3] + R1w[3]) * 0.5
    a01 = (R0[4] + R1w[4]) * 0.5
    db0 = -0.5 * (R1w[0] - R0[0]) + a00 * fx + a01 * fy
    db1 = -0.5 * (R1w[1] - R0[1]) + a01 * fx + a11 * fy
    M = R1w  # reuse the buffer
    M[0] = a00 * a00 + a01 * a01
    M[1] = a01 * (a00 + a11)
    M[2] = a01 * a01 + a11 * a11
    M[3] = a00 * db0 + a01 * db1
    M[4] = a01 * db0 + a11 * db1
    return M


def _window_average(M, window):
    half = window // 2
    sigma = 0.15 * window
    out = np.empty_like(M)
    for k in range(len(M)):
        ndimage.gaussian_filter(M[k], sigma, mode="nearest", truncate=half / sigma, output=out[k])
    return out


def _solve(M):
    g00, g01, g11, h0, h1 = M
    idet = 1.0 / (g00 * g11 - g01 * g01 + _DET_EPS)
    flow = np.empty((2,) + g00.shape)
    flow[0] = (g11 * h0 - g01 * h1) * idet
    flow[1] = (g00 * h1 - g01 * h0) * idet
    return flow


def _levels(shape, params):
    levels = []
    for k in range(params.pyramid_levels):
        scale = params.pyramid_scale ** k
        if k and min(shape) * scale < _MIN_LEVEL_SIZE:
            break
        levels.append(scale)
    return levels


def farneback_flow(prev, next, params: FlowParams | None = None) -> np.ndarray:
    """Dense flow ``(H, W, 2)`` of (dx, dy) such that ``prev(p) ~ next(p + flow(p))``."""
    params = params or FlowParams()
    a = to_luma(check_frame(prev, name="prev"))
    b = to_luma(check_frame(next, name="next"))
    check_same_shape(a, b)
    a = a * _INTENSITY_SCALE
    b = b * _INTENSITY_SCALE

    flow = None
    for scale in reversed(_levels(a.shape, params)):
        la, lb = scaled_level(a, scale), scaled_level(b, scale)
        h, w = la.shape
        if flow is None:
            flow = np.zeros((2, h, w))
        else:
            ph, pw = flow.shape[1:]
            flow = np.stack([resize(flow[0], (h, w)) * (w / pw), resize(flow[1], (h, w)) * (h / ph)])
        R0, R1 = _expand(la, params), _expand(lb, params)
        grid = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
        for _ in range(params.iterations):
            M = _update_matrices(R0, R1, flow, grid)
            flow = _solve(_window_average(M, params.window))
    return np.moveaxis(flow, 0, -1).copy()


class FarnebackFlow(BaseEstimator):
    """Estimator form of :func:`farneback_flow`; ``fit(prev, next)`` stores ``flow_``."""

    def __init__(self, pyramid_levels=3, pyramid_scale=0.5, window=15, poly_n=5,
                 poly_sigma=1.1, iterations=3):
        self.pyramid_levels = pyramid_levels
        self.pyramid_scale = pyramid_scale
        self.window = window
        self.poly_n = poly_n
        self.poly_sigma = poly_sigma
        self.iterations = iterations

    def flow_params(self) -> FlowParams:
        return FlowParams(**self.get_params())

    def fit(self, X, y):
        self.flow_ = farneback_flow(X, y, self.flow_params())
        return self
