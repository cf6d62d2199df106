"""PNG image I/O.

Intensities map linearly to [0, 1] on load (by the source bit depth) and
round to nearest on save.  Pillow writes no timestamps, so saving the same
array twice produces byte-identical files, which the reproducibility
checks rely on.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidParameterError


def load_image(path: str | Path) -> np.ndarray:
    """Read a PNG into an (H, W, C) float64 array in [0, 1]."""
    with Image.open(path) as im:
        if im.mode in ("I;16", "I"):
            arr = np.asarray(im, dtype=np.float64) / 65535.0
        elif im.mode == "L":
            arr = np.asarray(im, dtype=np.float64) / 255.0
        else:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    return arr


def save_image(path: str | Path, image: np.ndarray, bit_depth: int = 8) -> None:
    """Write an (H, W, C) [0, 1] array as an 8- or 16-bit PNG.

    16-bit output is grayscale only (no portable 48-bit RGB mode).
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise InvalidParameterError(f"expected (H, W, 1|3) array, got shape {arr.shape}")
    if bit_depth == 8:
        quantized = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
        im = (
            Image.fromarray(quantized[:, :, 0], mode="L")
            if arr.shape[2] == 1
            else Image.fromarray(quantized, mode="RGB")
        )
    elif bit_depth == 16:
        if arr.shape[2] != 1:
            raise InvalidParameterError("16-bit PNG output supports grayscale only")
        quantized = np.rint(np.clip(arr, 0.0, 1.0) * 65535.0).astype(np.uint16)
        im = Image.fromarray(quantized[:, :, 0])  # uint16 maps to 16-bit grayscale
    else:
        raise InvalidParameterError(f"bit depth must be 8 or 16, got {bit_depth}")
    im.save(Path(path), format="PNG")


def image_size(path: str | Path) -> tuple[int, int, int]:
    """(width, height, channels) from the PNG header without decoding pixels."""
    with Image.open(path) as im:
        width, height = im.size
        channels = 1 if im.mode in ("L", "I;16", "I") else 3
    return width, height, channels
