"""Box algebra and mask rasterization.

Boxes are center-form ``(cx, cy, w, h)`` in continuous pixel units.  A pixel
``(ix, iy)`` belongs to a box iff its center ``(ix + 0.5, iy + 0.5)`` lies in
the half-open rectangle ``[cx - w/2, cx + w/2) x [cy - h/2, cy + h/2)``.  The
pixel-center convention makes rasterization unambiguous at box edges and
independent of image resolution.

Masks use the row-major image layout ``values[iy, ix]`` (height first), the
standard array convention; ``width``/``height`` accessors keep the continuous
coordinate order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import EmptyMaskError, EmptyRegionError, InvalidParameterError

#: Default width/height scale factors; the full cross product gives nine
#: variant boxes per annotation.
DEFAULT_RATIOS: tuple[float, ...] = (1.0, 1.5, 2.0)


@dataclass(frozen=True)
class BoundingBox:
    """Center-form box annotation: center (cx, cy), width w, height h."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("cx", "cy", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidParameterError(f"box {name} must be finite, got {v!r}")
        if self.w <= 0 or self.h <= 0:
            raise InvalidParameterError(
                f"box width/height must be > 0, got w={self.w}, h={self.h}"
            )

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.cx, self.cy, self.w, self.h)


@dataclass(frozen=True)
class AspectRatioSet:
    """Ordered set of positive scale factors applied to box width and height."""

    ratios: tuple[float, ...] = DEFAULT_RATIOS

    def __post_init__(self) -> None:
        ratios = tuple(float(r) for r in self.ratios)
        object.__setattr__(self, "ratios", ratios)
        if not ratios:
            raise InvalidParameterError("ratio set must not be empty")
        for r in ratios:
            if not math.isfinite(r) or r <= 0:
                raise InvalidParameterError(f"ratio factors must be finite and > 0, got {r!r}")
        if len(set(ratios)) != len(ratios):
            raise InvalidParameterError(f"duplicate ratio factors: {ratios}")

    def __len__(self) -> int:
        return len(self.ratios)

    def pairs(self) -> Iterator[tuple[float, float]]:
        """All (rw, rh) combinations, row-major over (rw, rh)."""
        return product(self.ratios, self.ratios)


@dataclass(frozen=True)
class PixelRegion:
    """Integer pixel rectangle: x0/y0 inclusive, x1/y1 exclusive."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self) -> None:
        if not (0 <= self.x0 <= self.x1 and 0 <= self.y0 <= self.y1):
            raise InvalidParameterError(f"degenerate pixel region {self!r}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    def pixels(self) -> Iterator[tuple[int, int]]:
        """All (ix, iy) pairs in the region, row-major."""
        for iy in range(self.y0, self.y1):
            for ix in range(self.x0, self.x1):
                yield ix, iy


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Image-sized {0,1} array; value 1 marks pixels to keep."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.values, dtype=np.uint8)
        if arr.ndim != 2:
            raise InvalidParameterError(f"mask must be 2-D (height, width), got shape {arr.shape}")
        if arr.size == 0:
            raise InvalidParameterError("mask must have positive dimensions")
        if not np.isin(arr, (0, 1)).all():
            raise InvalidParameterError("mask values must be 0 or 1")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def popcount(self) -> int:
        """Number of selected (value 1) pixels."""
        return int(self.values.sum())

    @property
    def is_all_ones(self) -> bool:
        return self.popcount == self.values.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    @classmethod
    def all_ones(cls, width: int, height: int) -> "BinaryMask":
        """The keep-everything mask."""
        return cls(np.ones((height, width), dtype=np.uint8))


def expand_box(box: BoundingBox, rw: float, rh: float) -> BoundingBox:
    """Scale a box's width by rw and height by rh around its fixed center."""
    if not (math.isfinite(rw) and rw > 0) or not (math.isfinite(rh) and rh > 0):
        raise InvalidParameterError(f"scale factors must be finite and > 0, got rw={rw!r}, rh={rh!r}")
    return BoundingBox(box.cx, box.cy, box.w * rw, box.h * rh)


def variant_boxes(box: BoundingBox, ratios: AspectRatioSet | Sequence[float] = DEFAULT_RATIOS) -> list[BoundingBox]:
    """All |ratios|^2 expanded variants of a box, row-major over (rw, rh)."""
    if not isinstance(ratios, AspectRatioSet):
        ratios = AspectRatioSet(tuple(ratios))
    return [expand_box(box, rw, rh) for rw, rh in ratios.pairs()]


def clip_to_image(box: BoundingBox, width: int, height: int) -> PixelRegion:
    """Tight pixel region of a box inside a width x height image.

    Raises EmptyRegionError when no pixel center falls inside the box; the
    caller decides whether that means skip or fail.
    """
    if width <= 0 or height <= 0:
        raise InvalidParameterError(f"image dimensions must be > 0, got {width}x{height}")
    # Pixel center ix + 0.5 lies in [lo, hi) iff ceil(lo - 0.5) <= ix < ceil(hi - 0.5).
    x0 = max(0, math.ceil(box.cx - box.w / 2 - 0.5))
    x1 = min(width, math.ceil(box.cx + box.w / 2 - 0.5))
    y0 = max(0, math.ceil(box.cy - box.h / 2 - 0.5))
    y1 = min(height, math.ceil(box.cy + box.h / 2 - 0.5))
    if x0 >= x1 or y0 >= y1:
        raise EmptyRegionError(
            f"box {box.as_tuple()} covers no pixel of a {width}x{height} image"
        )
    return PixelRegion(x0, y0, x1, y1)


def rasterize_mask(boxes: Iterable[BoundingBox], width: int, height: int) -> BinaryMask:
    """Union mask of all boxes, clipped to the image.

    Boxes that individually clip to nothing are skipped; if every box does,
    the result would zero the whole image downstream, so that raises
    EmptyMaskError instead.
    """
    if width <= 0 or height <= 0:
        raise InvalidParameterError(f"image dimensions must be > 0, got {width}x{height}")
    boxes = list(boxes)
    if not boxes:
        raise EmptyMaskError("at least one box is required to rasterize a mask")
    values = np.zeros((height, width), dtype=np.uint8)
    covered = False
    for box in boxes:
        try:
            region = clip_to_image(box, width, height)
        except EmptyRegionError:
            continue
        values[region.y0 : region.y1, region.x0 : region.x1] = 1
        covered = True
    if not covered:
        raise EmptyMaskError(
            f"all {len(boxes)} boxes clip to empty regions of a {width}x{height} image"
        )
    return BinaryMask(values)
