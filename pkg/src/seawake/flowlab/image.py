"""Raster helpers: luma conversion, bilinear sampling and pyramids."""
import numpy as np
from scipy import ndimage

from ..validation import check_frame

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def to_luma(frame) -> np.ndarray:
    """Rec.601 luma of an RGB frame; luma frames pass through unchanged."""
    img = check_frame(frame)
    if img.ndim == 2:
        return img
    return np.clip(img @ LUMA_WEIGHTS, 0.0, 1.0)


def bilinear_sample(img: np.ndarray, xs, ys) -> np.ndarray:
    """Sample ``img`` at real coordinates (x = column, y = row).

    Coordinates outside the raster are clamped to it, which replicates
    edge values. Works for ``(H, W)`` and ``(H, W, C)`` arrays.
    """
    H, W = img.shape[:2]
    x = np.clip(np.asarray(xs, dtype=np.float64), 0.0, W - 1.0)
    y = np.clip(np.asarray(ys, dtype=np.float64), 0.0, H - 1.0)
    if W == 1 or H == 1:
        return _sample_degenerate(img, x, y)
    x0 = np.minimum(x.astype(np.intp), W - 2)
    y0 = np.minimum(y.astype(np.intp), H - 2)
    fx = x - x0
    fy = y - y0
    flat = img.reshape(H * W, -1)
    i00 = y0 * W + x0
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
        take = lambda idx: np.take(flat, idx, axis=0)  # noqa: E731
    else:
        flat = flat.ravel()
        take = lambda idx: np.take(flat, idx)  # noqa: E731
    # weights in this form are exact at integer coordinates, edges included
    acc = take(i00) * ((1.0 - fx) * (1.0 - fy))
    acc += take(i00 + 1) * (fx * (1.0 - fy))
    acc += take(i00 + W) * ((1.0 - fx) * fy)
    acc += take(i00 + W + 1) * (fx * fy)
    return acc


def _sample_degenerate(img, x, y):
    # single row or column: interpolate along the one non-trivial axis
    H, W = img.shape[:2]
    line = img.reshape(H * W, -1)
    pos = x if H == 1 else y
    if len(line) == 1:
        out = np.broadcast_to(line[0], pos.shape + line.shape[1:]).copy()
    else:
        p0 = np.minimum(pos.astype(np.intp), len(line) - 2)
        f = (pos - p0)[..., None]
        out = line[p0] * (1.0 - f) + line[p0 + 1] * f
    return out[..., 0] if img.ndim == 2 else out


def resize(img: np.ndarray, shape) -> np.ndarray:
    """Bilinear resize to ``shape`` = (rows, cols) with pixel-centre alignment."""
    H, W = img.shape[:2]
    h, w = shape
    ys = (np.arange(h) + 0.5) * (H / h) - 0.5
    xs = (np.arange(w) + 0.5) * (W / w) - 0.5
    gx, gy = np.meshgrid(xs, ys)
    return bilinear_sample(img, gx, gy)


def scaled_level(img: np.ndarray, scale: float, min_size: int = 1) -> np.ndarray:
    """Anti-aliased copy of ``img`` shrunk by ``scale`` (1 returns ``img``)."""
    if scale == 1.0:
        return img
    sigma = (1.0 / scale - 1.0) * 0.5
    smooth = ndimage.gaussian_filter(img, sigma, mode="nearest")
    H, W = img.shape
    shape = (max(int(round(H * scale)), min_size), max(int(round(W * scale)), min_size))
    return resize(smooth, shape)


_PYRDOWN = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def pyr_down(img: np.ndarray) -> np.ndarray:
    """Binomial blur then drop every other row and column (x_coarse = x_fine / 2)."""
    smooth = ndimage.correlate1d(img, _PYRDOWN, axis=0, mode="nearest")
    smooth = ndimage.correlate1d(smooth, _PYRDOWN, axis=1, mode="nearest")
    return smooth[::2, ::2]


def gaussian_pyramid(img: np.ndarray, levels: int) -> list[np.ndarray]:
    pyr = [img]
    for _ in range(levels - 1):
        if min(pyr[-1].shape) < 2:
            break
        pyr.append(pyr_down(pyr[-1]))
    return pyr
