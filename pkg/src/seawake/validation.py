"""Input validation helpers for frames, point sets and frame sequences.

Frames are plain numpy arrays: ``(height, width)`` for luma or
``(height, width, 3)`` for RGB, float samples in ``[0, 1]``.
"""
import numpy as np

from .errors import ContractError


def check_frame(frame, channels=None, name="frame"):
    """Validate a frame and return it as a float64 array (no copy when possible)."""
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim == 2:
        n_ch = 1
    elif arr.ndim == 3 and arr.shape[2] in (1, 3):
        n_ch = arr.shape[2]
        if n_ch == 1:
            arr = arr[:, :, 0]
    else:
        raise ContractError(f"{name} must have shape (H, W) or (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ContractError(f"{name} is empty")
    if channels is not None and n_ch != channels:
        raise ContractError(f"{name} must have {channels} channel(s), got {n_ch}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite samples")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ContractError(f"{name} samples must lie in [0, 1]")
    return arr


def check_same_shape(a, b, names=("prev", "next")):
    if a.shape != b.shape:
        raise ContractError(
            f"{names[0]} and {names[1]} differ in shape: {a.shape} vs {b.shape}"
        )


def check_frames(frames, min_frames=1, channels=None):
    """Validate a sequence of equally-shaped frames; returns a list of arrays."""
    frames = [check_frame(f, channels=channels, name=f"frames[{i}]") for i, f in enumerate(frames)]
    if len(frames) < min_frames:
        raise ContractError(f"need at least {min_frames} frame(s), got {len(frames)}")
    for i, f in enumerate(frames[1:], start=1):
        check_same_shape(frames[0], f, names=("frames[0]", f"frames[{i}]"))
    return frames


def check_points(points, name="points"):
    """Return ``points`` as a finite ``(n, 2)`` float array."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ContractError(f"{name} must have shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite values")
    return arr


def check_flow(flow, shape):
    arr = np.asarray(flow, dtype=np.float64)
    if arr.shape != (shape[0], shape[1], 2):
        raise ContractError(f"flow must have shape {(shape[0], shape[1], 2)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError("flow contains non-finite vectors")
    return arr
