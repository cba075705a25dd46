"""Pyramidal iterative Lucas-Kanade point tracking across a frame sequence.

Points are tracked frame to frame; each step runs coarse to fine over a
Gaussian pyramid, solving the 2x2 structure-tensor system by Gauss-Newton
iterations with bilinear sampling. A point is flagged invalid once it
leaves the frame or its structure tensor is near-singular at full
resolution; invalid points stay flagged and frozen at their last position.
"""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..errors import ContractError
from ..validation import check_frames, check_points
from .image import bilinear_sample, gaussian_pyramid, to_luma
from .params import TrackParams


def _gradients(img):
    gy, gx = np.gradient(img)
    return gx, gy


def _prepare(frame, levels):
    pyr = gaussian_pyramid(to_luma(frame), levels)
    return [(lvl, *_gradients(lvl)) for lvl in pyr]


def _track_step(prev_pyr, next_pyr, pts, params, offsets):
    """Track ``pts`` from one frame to the next; returns (new points, ok mask)."""
    n = len(pts)
    n_levels = min(len(prev_pyr), len(next_pyr))
    guess = np.zeros((n, 2))
    ok = np.ones(n, dtype=bool)
    npix = offsets.shape[0]
    for level in reversed(range(n_levels)):
        img, gx, gy = prev_pyr[level]
        nxt = next_pyr[level][0]
        scale = 2.0 ** -level
        p = pts * scale
        wx = p[:, 0:1] + offsets[None, :, 0]
        wy = p[:, 1:2] + offsets[None, :, 1]
        I = bilinear_sample(img, wx, wy)
        Ix = bilinear_sample(gx, wx, wy)
        Iy = bilinear_sample(gy, wx, wy)
        g00 = (Ix * Ix).sum(1)
        g01 = (Ix * Iy).sum(1)
        g11 = (Iy * Iy).sum(1)
        det = g00 * g11 - g01 * g01
        tr = g00 + g11
        min_eig = (tr - np.sqrt(np.maximum(tr * tr - 4 * det, 0.0))) / (2.0 * npix)
        solvable = (min_eig >= params.min_eigen) & (det > 0)
        if level == 0:
            ok &= solvable
        safe_det = np.where(solvable, det, 1.0)
        v = np.zeros((n, 2))
        active = solvable.copy()
        for _ in range(params.max_iterations):
            if not active.any():
                break
            J = bilinear_sample(nxt, wx + (guess[:, 0:1] + v[:, 0:1]),
                                wy + (guess[:, 1:2] + v[:, 1:2]))
            diff = I - J
            b0 = (diff * Ix).sum(1)
            b1 = (diff * Iy).sum(1)
            eta = np.stack([(g11 * b0 - g01 * b1) / safe_det,
                            (g00 * b1 - g01 * b0) / safe_det], axis=1)
            eta[~active] = 0.0
            v += eta
            active &= np.hypot(eta[:, 0], eta[:, 1]) >= params.epsilon
        guess = guess + v
        if level:
            guess *= 2.0
    new = pts + guess
    return new, ok


def lk_track(frames, seeds, params: TrackParams | None = None):
    """Track ``seeds`` through ``frames``.

    Returns ``(tracks, valid)``: ``tracks`` has shape (n_seeds, n_frames, 2)
    and starts at the seeds; ``valid`` has shape (n_seeds, n_frames).
    """
    return LucasKanadeTracker(**_as_kwargs(params)).fit(frames).transform(seeds)


def _as_kwargs(params):
    p = params or TrackParams()
    return dict(window=p.window, pyramid_levels=p.pyramid_levels,
                max_iterations=p.max_iterations, epsilon=p.epsilon, min_eigen=p.min_eigen)


class LucasKanadeTracker(BaseEstimator):
    """Sparse tracker: ``fit(frames)`` builds pyramids, ``transform(seeds)`` tracks points."""

    def __init__(self, window=21, pyramid_levels=3, max_iterations=30, epsilon=0.01, min_eigen=1e-6):
        self.window = window
        self.pyramid_levels = pyramid_levels
        self.max_iterations = max_iterations
        self.epsilon = epsilon
        self.min_eigen = min_eigen

    def fit(self, X, y=None):
        self.params_ = TrackParams(**self.get_params())
        frames = check_frames(X, min_frames=2)
        self.shape_ = frames[0].shape[:2]
        self.pyramids_ = [_prepare(f, self.params_.pyramid_levels) for f in frames]
        return self

    def transform(self, X):
        check_is_fitted(self, "pyramids_")
        seeds = check_points(X, "seeds")
        if len(seeds) == 0:
            raise ContractError("seed set is empty")
        H, W = self.shape_
        inside = (seeds[:, 0] >= 0) & (seeds[:, 0] <= W - 1) & (seeds[:, 1] >= 0) & (seeds[:, 1] <= H - 1)
        if not inside.all():
            raise ContractError("every seed must lie inside the first frame")
        half = self.params_.window // 2
        r = np.arange(-half, half + 1, dtype=np.float64)
        ox, oy = np.meshgrid(r, r)
        offsets = np.column_stack([ox.ravel(), oy.ravel()])

        n_frames = len(self.pyramids_)
        tracks = np.empty((len(seeds), n_frames, 2))
        valid = np.ones((len(seeds), n_frames), dtype=bool)
        tracks[:, 0] = seeds
        for k in range(1, n_frames):
            cur = tracks[:, k - 1]
            alive = valid[:, k - 1]
            new, ok = _track_step(self.pyramids_[k - 1], self.pyramids_[k], cur, self.params_, offsets)
            finite = np.all(np.isfinite(new), axis=1)
            within = finite & (new[:, 0] >= 0) & (new[:, 0] <= W - 1) & (new[:, 1] >= 0) & (new[:, 1] <= H - 1)
            keep = alive & ok & within
            tracks[:, k] = np.where(keep[:, None], new, cur)
            valid[:, k] = keep
        return tracks, valid
