"""The four augmentation kernels operating on image arrays plus box masks.

Images are ``(H, W, C)`` float64 arrays with intensities in [0, 1].  Every
kernel preserves dimensions and the [0, 1] range, and is a pure function of
its inputs: given the same arrays and the same seed the output is
bit-identical, so per-sample work can run under any parallelism degree.

The region-keep kernel zeroes everything outside the union of the annotated
boxes and leaves the label untouched; the three masked baselines (mixup,
cutout, cutmix) restrict the classic operations to respect the annotation
mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    EmptyMaskError,
    InvalidParameterError,
    PlacementError,
    ShapeMismatchError,
)
from .geometry import AspectRatioSet, BinaryMask, BoundingBox, expand_box, rasterize_mask

METHOD_CUT_AND_REMAIN = "cut-and-remain"
METHOD_SUP_MIXUP = "sup-mixup"
METHOD_SUP_CUTOUT = "sup-cutout"
METHOD_SUP_CUTMIX = "sup-cutmix"

#: Methods accepted by the batch composer and the CLI.
AUGMENT_METHODS = (
    METHOD_CUT_AND_REMAIN,
    METHOD_SUP_MIXUP,
    METHOD_SUP_CUTOUT,
    METHOD_SUP_CUTMIX,
)

#: Rejection-sampling budget for the masked cutout placement.
CUTOUT_MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class Label:
    """Classification target.

    kind is one of:
      - "index": single-class index (stored in ``index``)
      - "multilabel": binary vector over ``num_classes``
      - "soft": probability vector over ``num_classes``
    Vector kinds store their values as a tuple so labels stay immutable and
    comparable.
    """

    kind: str
    num_classes: int
    index: int | None = None
    values: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.num_classes < 1:
            raise InvalidParameterError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.kind == "index":
            if self.index is None or not (0 <= self.index < self.num_classes):
                raise InvalidParameterError(
                    f"class index {self.index!r} out of range for {self.num_classes} classes"
                )
            if self.values:
                raise InvalidParameterError("index labels carry no value vector")
        elif self.kind in ("multilabel", "soft"):
            values = tuple(float(v) for v in self.values)
            object.__setattr__(self, "values", values)
            if len(values) != self.num_classes:
                raise InvalidParameterError(
                    f"label vector length {len(values)} != num_classes {self.num_classes}"
                )
            if self.kind == "multilabel" and any(v not in (0.0, 1.0) for v in values):
                raise InvalidParameterError("multilabel values must be 0 or 1")
            if self.kind == "soft" and any(not (0.0 <= v <= 1.0) or not math.isfinite(v) for v in values):
                raise InvalidParameterError("soft label values must lie in [0, 1]")
        else:
            raise InvalidParameterError(f"unknown label kind {self.kind!r}")

    @classmethod
    def from_index(cls, index: int, num_classes: int) -> "Label":
        return cls("index", num_classes, index=index)

    @classmethod
    def multilabel(cls, values: Sequence[float]) -> "Label":
        return cls("multilabel", len(tuple(values)), values=tuple(values))

    @classmethod
    def soft(cls, values: Sequence[float]) -> "Label":
        return cls("soft", len(tuple(values)), values=tuple(values))

    def as_soft(self) -> tuple[float, ...]:
        """Value vector of the label; index labels become one-hot."""
        if self.kind == "index":
            return tuple(1.0 if i == self.index else 0.0 for i in range(self.num_classes))
        return self.values


def mix_labels(a: Label, b: Label, lam: float) -> Label:
    """Convex label combination lam * a + (1 - lam) * b as a soft vector."""
    if a.num_classes != b.num_classes:
        raise ShapeMismatchError(
            f"labels span different class spaces: {a.num_classes} vs {b.num_classes}"
        )
    va, vb = a.as_soft(), b.as_soft()
    return Label.soft(tuple(lam * x + (1.0 - lam) * y for x, y in zip(va, vb)))


@dataclass(frozen=True)
class MixParams:
    """Mixing coefficient for the masked mixup kernel.

    When ``lam`` is None it is drawn from Beta(alpha, alpha); the default
    alpha of 1.0 makes that draw uniform on [0, 1].
    """

    lam: float | None = None
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.lam is not None and not (0.0 <= self.lam <= 1.0):
            raise InvalidParameterError(f"lambda must lie in [0, 1], got {self.lam}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise InvalidParameterError(f"alpha must be > 0, got {self.alpha}")

    def resolve_lam(self, rng: np.random.Generator | None) -> float:
        if self.lam is not None:
            return self.lam
        if rng is None:
            raise InvalidParameterError("lambda not supplied and no generator given to draw it")
        return float(rng.beta(self.alpha, self.alpha))


@dataclass(frozen=True)
class Provenance:
    """How an augmented sample was produced, enough to regenerate it."""

    method: str
    ratio: tuple[float, float] | None
    sources: tuple[str, ...]
    seed: int | None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "ratio": list(self.ratio) if self.ratio is not None else None,
            "sources": list(self.sources),
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class AugmentedSample:
    """Augmented image, its label, and the recipe that produced it."""

    image: np.ndarray
    label: Label
    provenance: Provenance


def check_image(image: np.ndarray, name: str = "image") -> np.ndarray:
    """Validate and normalize an image array to contiguous (H, W, C) float64."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3 or any(d < 1 for d in arr.shape):
        raise ShapeMismatchError(f"{name} must be (H, W, C) with positive dims, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidParameterError(f"{name} contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise InvalidParameterError(f"{name} intensities must lie in [0, 1]")
    return np.ascontiguousarray(arr)


def _check_mask_fits(mask: BinaryMask, image: np.ndarray, name: str) -> None:
    h, w = image.shape[0], image.shape[1]
    if (mask.height, mask.width) != (h, w):
        raise ShapeMismatchError(
            f"{name} is {mask.width}x{mask.height} but image is {w}x{h}"
        )


def apply_mask(image: np.ndarray, mask: BinaryMask) -> np.ndarray:
    """Element-wise product: source pixels inside the mask, zero outside."""
    return image * mask.values[:, :, np.newaxis]


def cut_and_remain_pair(
    image: np.ndarray,
    label: Label,
    boxes: Sequence[BoundingBox],
    rw: float,
    rh: float,
    source_id: str = "",
) -> AugmentedSample:
    """One region-keep sample for a single (rw, rh) ratio pair.

    The mask is the union over all annotations of the expanded boxes; pixels
    inside keep their exact source value, everything else becomes 0, and the
    label passes through unchanged.
    """
    img = check_image(image)
    if not boxes:
        raise EmptyMaskError("at least one annotation box is required")
    expanded = [expand_box(box, rw, rh) for box in boxes]
    mask = rasterize_mask(expanded, width=img.shape[1], height=img.shape[0])
    return AugmentedSample(
        image=apply_mask(img, mask),
        label=label,
        provenance=Provenance(METHOD_CUT_AND_REMAIN, (rw, rh), (source_id,), None),
    )


def cut_and_remain(
    image: np.ndarray,
    label: Label,
    boxes: Sequence[BoundingBox],
    ratios: AspectRatioSet | Sequence[float] = AspectRatioSet(),
    source_id: str = "",
) -> list[AugmentedSample]:
    """Region-keep augmentation over the full ratio cross product.

    Returns one sample per (rw, rh) pair in row-major order; the default
    three-factor set yields nine samples per annotated image.
    """
    if not isinstance(ratios, AspectRatioSet):
        ratios = AspectRatioSet(tuple(ratios))
    return [
        cut_and_remain_pair(image, label, boxes, rw, rh, source_id=source_id)
        for rw, rh in ratios.pairs()
    ]


def sup_mixup(
    image_a: np.ndarray,
    label_a: Label,
    mask_a: BinaryMask,
    image_b: np.ndarray,
    label_b: Label,
    mask_b: BinaryMask,
    params: MixParams = MixParams(),
    rng: np.random.Generator | None = None,
    source_ids: tuple[str, str] = ("", ""),
) -> AugmentedSample:
    """Masked mixup: lam * (M_A * x_A) + (1 - lam) * (M_B * x_B).

    Each operand is masked by its own annotation mask before blending; the
    label is the matching convex combination as a soft vector.
    """
    a = check_image(image_a, "image_a")
    b = check_image(image_b, "image_b")
    if a.shape != b.shape:
        raise ShapeMismatchError(f"image shapes differ: {a.shape} vs {b.shape}")
    _check_mask_fits(mask_a, a, "mask_a")
    _check_mask_fits(mask_b, b, "mask_b")
    lam = params.resolve_lam(rng)
    blended = lam * apply_mask(a, mask_a) + (1.0 - lam) * apply_mask(b, mask_b)
    return AugmentedSample(
        image=blended,
        label=mix_labels(label_a, label_b, lam),
        provenance=Provenance(METHOD_SUP_MIXUP, None, source_ids, None),
    )


def sup_cutout(
    image: np.ndarray,
    label: Label,
    mask: BinaryMask,
    side: int | None = None,
    rng: np.random.Generator | int = 0,
    max_attempts: int = CUTOUT_MAX_ATTEMPTS,
) -> AugmentedSample:
    """Zero a random square placed entirely outside the annotation mask.

    The square is chosen by rejection sampling, uniform among placements
    whose pixels all satisfy mask == 0, so annotated pixels are never
    touched.  ``rng`` may be a seed (recorded in the provenance) or a
    generator.  ``side`` defaults to floor(min(W, H) / 4).
    """
    img = check_image(image)
    _check_mask_fits(mask, img, "mask")
    h, w = img.shape[0], img.shape[1]
    if side is None:
        side = min(w, h) // 4
    if side < 1:
        raise InvalidParameterError(f"cutout side must be >= 1, got {side}")
    if mask.popcount == 0:
        raise EmptyMaskError("cutout requires a non-empty annotation mask")
    if mask.is_all_ones:
        raise PlacementError("annotation mask covers the whole image; no free region to remove")
    if side > w or side > h:
        raise PlacementError(f"cutout side {side} does not fit in a {w}x{h} image")

    seed = rng if isinstance(rng, (int, np.integer)) else None
    gen = np.random.default_rng(rng) if seed is not None else rng
    for _ in range(max_attempts):
        x0 = int(gen.integers(0, w - side + 1))
        y0 = int(gen.integers(0, h - side + 1))
        if not mask.values[y0 : y0 + side, x0 : x0 + side].any():
            out = img.copy()
            out[y0 : y0 + side, x0 : x0 + side, :] = 0.0
            return AugmentedSample(
                image=out,
                label=label,
                provenance=Provenance(METHOD_SUP_CUTOUT, None, ("",), seed),
            )
    raise PlacementError(
        f"no {side}x{side} placement outside the mask found in {max_attempts} attempts"
    )


def sup_cutmix(
    image_a: np.ndarray,
    label_a: Label,
    mask_a: BinaryMask,
    image_b: np.ndarray,
    label_b: Label,
    source_ids: tuple[str, str] = ("", ""),
) -> AugmentedSample:
    """Masked cutmix: x_A inside the mask, x_B outside, label y_A.

    An empty mask would hand the whole image to x_B while keeping y_A, so it
    is rejected.
    """
    a = check_image(image_a, "image_a")
    b = check_image(image_b, "image_b")
    if a.shape != b.shape:
        raise ShapeMismatchError(f"image shapes differ: {a.shape} vs {b.shape}")
    _check_mask_fits(mask_a, a, "mask_a")
    if label_a.num_classes != label_b.num_classes:
        raise ShapeMismatchError(
            f"labels span different class spaces: {label_a.num_classes} vs {label_b.num_classes}"
        )
    if mask_a.popcount == 0:
        raise EmptyMaskError("cutmix with an empty mask would discard the labelled content")
    selected = np.where(mask_a.values[:, :, np.newaxis] == 1, a, b)
    return AugmentedSample(
        image=selected,
        label=label_a,
        provenance=Provenance(METHOD_SUP_CUTMIX, None, source_ids, None),
    )
