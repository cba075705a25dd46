"""Per-pixel quadratic fit of a Gaussian-weighted neighbourhood.

Each pixel's neighbourhood is approximated by ``f(x) ~ x^T A x + b^T x + c``
in local coordinates (x = column offset, y = row offset). The weighted
least-squares normal matrix is the same for every pixel, so the fit is six
separable correlations followed by one constant 6x6 solve.
"""
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from ..errors import ContractError

# Monomials as (power of x, power of y): 1, x, y, x^2, y^2, xy
_MONOMIALS = ((0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1))


class PolyCoefficients(NamedTuple):
    """``A`` is (H, W, 2, 2) symmetric, ``b`` (H, W, 2), ``c`` (H, W)."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray


def _applicability(poly_n, poly_sigma):
    half = poly_n // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-x ** 2 / (2.0 * poly_sigma ** 2))
    return x, g / g.sum()


def _solve_matrix(poly_n, poly_sigma):
    x, g = _applicability(poly_n, poly_sigma)
    X, Y = np.meshgrid(x, x)
    W = np.outer(g, g)
    B = np.stack([X ** px * Y ** py for px, py in _MONOMIALS], axis=-1).reshape(-1, 6)
    G = B.T @ (W.reshape(-1, 1) * B)
    return np.linalg.inv(G)


def polynomial_raw(img: np.ndarray, poly_n: int = 5, poly_sigma: float = 1.1) -> np.ndarray:
    """Fit coefficients as an (H, W, 6) array ordered like the monomials 1, x, y, x^2, y^2, xy."""
    if poly_n < 3 or poly_n % 2 == 0:
        raise ContractError("poly_n must be odd and >= 3")
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ContractError(f"polynomial expansion needs a single-channel image, got {img.shape}")
    x, g = _applicability(poly_n, poly_sigma)
    kernels = [g, g * x, g * x * x]
    # rows first (y powers), then columns (x powers); border is edge replication
    by_row = [ndimage.correlate1d(img, k, axis=0, mode="nearest") for k in kernels]
    moments = np.stack(
        [ndimage.correlate1d(by_row[py], kernels[px], axis=1, mode="nearest") for px, py in _MONOMIALS],
        axis=-1,
    )
    return moments @ _solve_matrix(poly_n, poly_sigma).T


def polynomial_expansion(frame, poly_n: int = 5, poly_sigma: float = 1.1) -> PolyCoefficients:
    """Quadratic coefficient field ``(A, b, c)`` of a single-channel frame."""
    r = polynomial_raw(frame, poly_n, poly_sigma)
    A = np.empty(r.shape[:2] + (2, 2))
    A[..., 0, 0] = r[..., 3]
    A[..., 1, 1] = r[..., 4]
    A[..., 0, 1] = A[..., 1, 0] = r[..., 5] / 2.0
    return PolyCoefficients(A, r[..., 1:3].copy(), r[..., 0].copy())
