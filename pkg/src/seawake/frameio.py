"""8-bit PNG frame sequences named ``frame_%04d.png`` (1-indexed)."""
import re
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ContractError
from .validation import check_frame

FRAME_PATTERN = "frame_{:04d}.png"
_FRAME_RE = re.compile(r"^frame_(\d+)\.png$")


def read_frame(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.float64) / 255.0
    return arr


def write_frame(path, frame) -> None:
    img = check_frame(frame)
    data = np.rint(img * 255.0).astype(np.uint8)
    # lossless either way; level 1 is several times faster than the default
    Image.fromarray(data).save(path, format="PNG", compress_level=1)


def frame_paths(directory) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ContractError(f"frame directory {directory} does not exist")
    found = []
    for p in directory.iterdir():
        m = _FRAME_RE.match(p.name)
        if m:
            found.append((int(m.group(1)), p))
    return [p for _, p in sorted(found)]


def read_sequence(directory) -> list[np.ndarray]:
    paths = frame_paths(directory)
    if not paths:
        raise ContractError(f"no frame_NNNN.png files in {directory}")
    return [read_frame(p) for p in paths]


def write_sequence(directory, frames, start: int = 1) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames, start=start):
        path = directory / FRAME_PATTERN.format(i)
        write_frame(path, frame)
        paths.append(path)
    return paths
