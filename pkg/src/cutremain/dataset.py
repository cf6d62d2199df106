"""Annotation ingestion, vertical half-splitting, and small-object filtering.

Two input formats are supported: instance-style JSON (images / annotations /
categories, corner-form boxes) and a flat CSV with one annotation per row.
Both normalize into a :class:`DatasetManifest` whose canonical form is a JSON
document with center-form boxes, an explicit class list, and a provenance
header, so parse -> serialize -> parse round-trips exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import pngio
from .augment import Label
from .errors import InvalidParameterError, ManifestError, ParseError
from .geometry import BoundingBox

MANIFEST_SCHEMA = "dataset-manifest/1"

#: Default small-object threshold: keep images whose annotated boxes occupy,
#: on average, under 2% of the image area.
SMALL_OBJECT_THRESHOLD = 0.02

CSV_COLUMNS = ("path", "label", "cx", "cy", "w", "h")


@dataclass(frozen=True)
class AnnotatedSample:
    """One image with its label and annotation boxes.

    ``box_categories`` aligns with ``boxes`` and holds class-list indices
    (empty when per-box classes are unknown, e.g. single-class CSV data
    where every box shares the sample label).  ``crop`` is a column range
    into the source image, set by vertical splitting; loaders apply it.
    """

    sample_id: str
    image_path: str
    width: int | None
    height: int | None
    channels: int | None
    label: Label
    boxes: tuple[BoundingBox, ...]
    box_categories: tuple[int, ...] = ()
    crop: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.box_categories and len(self.box_categories) != len(self.boxes):
            raise ManifestError(
                f"sample {self.sample_id}: {len(self.box_categories)} box categories "
                f"for {len(self.boxes)} boxes"
            )

    def to_dict(self) -> dict:
        label: dict = {"kind": self.label.kind, "num_classes": self.label.num_classes}
        if self.label.kind == "index":
            label["index"] = self.label.index
        else:
            label["values"] = list(self.label.values)
        return {
            "id": self.sample_id,
            "path": self.image_path,
            "width": self.width,
            "height": self.height,
            "channels": self.channels,
            "label": label,
            "boxes": [list(b.as_tuple()) for b in self.boxes],
            "box_categories": list(self.box_categories),
            "crop": list(self.crop) if self.crop else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotatedSample":
        lab = d["label"]
        if lab["kind"] == "index":
            label = Label.from_index(lab["index"], lab["num_classes"])
        else:
            label = Label(lab["kind"], lab["num_classes"], values=tuple(lab["values"]))
        return cls(
            sample_id=d["id"],
            image_path=d["path"],
            width=d["width"],
            height=d["height"],
            channels=d["channels"],
            label=label,
            boxes=tuple(BoundingBox(*b) for b in d["boxes"]),
            box_categories=tuple(d.get("box_categories") or ()),
            crop=tuple(d["crop"]) if d.get("crop") else None,
        )


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered, immutable collection of annotated samples."""

    samples: tuple[AnnotatedSample, ...]
    class_names: tuple[str, ...]
    split: str = "train"
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = [s.sample_id for s in self.samples]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ManifestError(f"duplicate sample ids: {dupes[:5]}")
        for s in self.samples:
            if s.label.num_classes != len(self.class_names):
                raise ManifestError(
                    f"sample {s.sample_id}: label spans {s.label.num_classes} classes, "
                    f"manifest lists {len(self.class_names)}"
                )

    def __len__(self) -> int:
        return len(self.samples)

    def sample(self, sample_id: str) -> AnnotatedSample:
        for s in self.samples:
            if s.sample_id == sample_id:
                return s
        raise ManifestError(f"unknown sample id {sample_id!r}")

    def to_dict(self) -> dict:
        return {
            "schema": MANIFEST_SCHEMA,
            "split": self.split,
            "class_names": list(self.class_names),
            "provenance": self.provenance,
            "samples": [s.to_dict() for s in self.samples],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        if d.get("schema") != MANIFEST_SCHEMA:
            raise ParseError(f"unexpected manifest schema {d.get('schema')!r}")
        return cls(
            samples=tuple(AnnotatedSample.from_dict(s) for s in d["samples"]),
            class_names=tuple(d["class_names"]),
            split=d.get("split", "train"),
            provenance=d.get("provenance", {}),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, indent=1),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError(f"malformed manifest JSON at byte {e.pos}: {e.msg}") from e
        return cls.from_dict(doc)


def load_sample_image(sample: AnnotatedSample, root: str | Path = ".") -> np.ndarray:
    """Read a sample's pixels, applying its crop column range if set."""
    path = Path(root) / sample.image_path
    arr = pngio.load_image(path)
    if sample.crop is not None:
        x0, x1 = sample.crop
        arr = arr[:, x0:x1, :]
    return arr


def parse_coco(doc: dict | str) -> DatasetManifest:
    """Convert an instance-annotation JSON document to a manifest.

    Corner-form boxes [x_min, y_min, w, h] become center-form, and each
    image's multi-label vector is the union of its annotation categories.
    Images without annotations are kept but counted in the provenance.
    """
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            raise ParseError(f"malformed JSON at byte {e.pos}: {e.msg}") from e
    for key in ("images", "annotations", "categories"):
        if key not in doc:
            raise ParseError(f"document lacks required key {key!r}")

    categories = sorted(doc["categories"], key=lambda c: c["id"])
    class_names = tuple(str(c["name"]) for c in categories)
    cat_to_col = {c["id"]: i for i, c in enumerate(categories)}
    if len(cat_to_col) != len(categories):
        raise ParseError("duplicate category ids")

    images: dict = {}
    for i, im in enumerate(doc["images"]):
        try:
            images[im["id"]] = {
                "path": str(im["file_name"]),
                "width": int(im["width"]),
                "height": int(im["height"]),
                "boxes": [],
                "cats": [],
            }
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"images[{i}]: {e}") from e

    for i, ann in enumerate(doc["annotations"]):
        try:
            image_id = ann["image_id"]
            x, y, w, h = (float(v) for v in ann["bbox"])
            cat_id = ann["category_id"]
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"annotations[{i}]: {e}") from e
        if image_id not in images:
            raise ParseError(f"annotations[{i}]: dangling image id {image_id!r}")
        if cat_id not in cat_to_col:
            raise ParseError(f"annotations[{i}]: dangling category id {cat_id!r}")
        if w <= 0 or h <= 0:
            raise ParseError(f"annotations[{i}]: non-positive box dims w={w}, h={h}")
        entry = images[image_id]
        entry["boxes"].append(BoundingBox(x + w / 2, y + h / 2, w, h))
        entry["cats"].append(cat_to_col[cat_id])

    samples = []
    unannotated = []
    for image_id in sorted(images, key=str):
        entry = images[image_id]
        bits = [0.0] * len(class_names)
        for col in entry["cats"]:
            bits[col] = 1.0
        if not entry["boxes"]:
            unannotated.append(str(image_id))
        samples.append(
            AnnotatedSample(
                sample_id=str(image_id),
                image_path=entry["path"],
                width=entry["width"],
                height=entry["height"],
                channels=3,
                label=Label.multilabel(bits),
                boxes=tuple(entry["boxes"]),
                box_categories=tuple(entry["cats"]),
            )
        )
    return DatasetManifest(
        samples=tuple(samples),
        class_names=class_names,
        provenance={"source": "coco", "images_without_annotations": unannotated},
    )


def parse_csv(
    rows: Iterable[str],
    size_lookup: Callable[[str], tuple[int, int, int] | None] | None = None,
) -> DatasetManifest:
    """Parse annotation CSV lines into a single-class-label manifest.

    Header must contain path,label,cx,cy,w,h; optional width,height,channels
    columns record image dimensions.  Rows sharing a path merge their boxes
    and must agree on the label.  ``size_lookup`` resolves missing dimensions
    (e.g. by reading PNG headers); unresolvable sizes stay None.
    """
    reader = csv.DictReader(rows)
    header = reader.fieldnames or []
    missing = [c for c in CSV_COLUMNS if c not in header]
    if missing:
        raise ParseError(f"CSV header lacks required columns: {missing}")

    order: list[str] = []
    merged: dict[str, dict] = {}
    for i, row in enumerate(reader, start=2):  # 1-based, after the header line
        path = (row.get("path") or "").strip()
        label_name = (row.get("label") or "").strip()
        if not path or not label_name:
            raise ParseError(f"row {i}: empty path or label")
        try:
            cx, cy = float(row["cx"]), float(row["cy"])
            w, h = float(row["w"]), float(row["h"])
        except (TypeError, ValueError) as e:
            raise ParseError(f"row {i}: unparseable box numerics ({e})") from e
        if w <= 0 or h <= 0:
            raise ParseError(f"row {i}: box width/height must be > 0, got w={w}, h={h}")

        size: tuple[int | None, int | None, int | None] = (None, None, None)
        if "width" in header and "height" in header and row.get("width") and row.get("height"):
            try:
                size = (
                    int(row["width"]),
                    int(row["height"]),
                    int(row["channels"]) if row.get("channels") else 1,
                )
            except ValueError as e:
                raise ParseError(f"row {i}: unparseable image size ({e})") from e

        if path not in merged:
            order.append(path)
            merged[path] = {"label": label_name, "boxes": [], "size": size, "row": i}
        elif merged[path]["label"] != label_name:
            raise ParseError(
                f"row {i}: path {path!r} already has label {merged[path]['label']!r}, "
                f"got {label_name!r}"
            )
        merged[path]["boxes"].append(BoundingBox(cx, cy, w, h))
        if merged[path]["size"] == (None, None, None):
            merged[path]["size"] = size

    class_names = tuple(sorted({m["label"] for m in merged.values()}))
    name_to_index = {n: i for i, n in enumerate(class_names)}

    samples = []
    for path in order:
        entry = merged[path]
        width, height, channels = entry["size"]
        if width is None and size_lookup is not None:
            resolved = size_lookup(path)
            if resolved is not None:
                width, height, channels = resolved
        samples.append(
            AnnotatedSample(
                sample_id=path,
                image_path=path,
                width=width,
                height=height,
                channels=channels,
                label=Label.from_index(name_to_index[entry["label"]], len(class_names)),
                boxes=tuple(entry["boxes"]),
            )
        )
    return DatasetManifest(
        samples=tuple(samples),
        class_names=class_names,
        provenance={"source": "csv"},
    )


def png_size_lookup(root: str | Path = ".") -> Callable[[str], tuple[int, int, int] | None]:
    """Size resolver that reads PNG headers relative to ``root``."""

    def lookup(path: str) -> tuple[int, int, int] | None:
        full = Path(root) / path
        if not full.is_file():
            return None
        try:
            return pngio.image_size(full)
        except OSError:
            return None

    return lookup


def split_vertical(
    sample: AnnotatedSample,
    background_label: Label | None = None,
) -> tuple[AnnotatedSample, AnnotatedSample]:
    """Cut a sample vertically in half, doubling the sample count.

    The left half covers columns [0, W//2), the right half [W//2, W).  Each
    box goes to the half containing its center, re-expressed in that half's
    frame and clipped to it, so re-rasterizing in the half reproduces the
    pixels the original box covered there.  A half without boxes receives
    ``background_label`` when given, otherwise it keeps the sample label.
    """
    if sample.width is None:
        raise InvalidParameterError(f"sample {sample.sample_id} has no recorded width")
    width = sample.width
    if width < 2:
        raise InvalidParameterError(f"cannot split an image of width {width}")
    mid = width // 2

    halves: dict[str, list] = {"left": [], "right": []}
    half_cats: dict[str, list] = {"left": [], "right": []}
    for box, cat in zip(
        sample.boxes, sample.box_categories or (None,) * len(sample.boxes)
    ):
        side = "left" if box.cx < mid else "right"
        x_off, x_end = (0, mid) if side == "left" else (mid, width)
        lo = max(box.cx - box.w / 2, float(x_off))
        hi = min(box.cx + box.w / 2, float(x_end))
        # The half containing the center always overlaps the box, so hi > lo.
        new_box = BoundingBox((lo + hi) / 2 - x_off, box.cy, hi - lo, box.h)
        halves[side].append(new_box)
        if cat is not None:
            half_cats[side].append(cat)

    def build(side: str, x0: int, x1: int) -> AnnotatedSample:
        boxes = tuple(halves[side])
        label = sample.label
        if not boxes and background_label is not None:
            label = background_label
        return replace(
            sample,
            sample_id=f"{sample.sample_id}#{side}",
            width=x1 - x0,
            label=label,
            boxes=boxes,
            box_categories=tuple(half_cats[side]) if sample.box_categories else (),
            crop=(x0, x1),
        )

    return build("left", 0, mid), build("right", mid, width)


def split_vertical_manifest(
    manifest: DatasetManifest,
    background_label: Label | None = None,
) -> DatasetManifest:
    """Apply :func:`split_vertical` to every sample of a manifest."""
    samples: list[AnnotatedSample] = []
    for s in manifest.samples:
        left, right = split_vertical(s, background_label=background_label)
        samples.extend((left, right))
    provenance = dict(manifest.provenance)
    provenance["split_vertical"] = True
    return replace(manifest, samples=tuple(samples), provenance=provenance)


@dataclass(frozen=True)
class SubsetReport:
    """What the small-object filter kept, dropped, and could not judge."""

    kept: int
    dropped: int
    skipped_no_annotations: tuple[str, ...]
    threshold: float
    categories: tuple[str, ...] | None

    def to_dict(self) -> dict:
        return {
            "kept": self.kept,
            "dropped": self.dropped,
            "skipped_no_annotations": list(self.skipped_no_annotations),
            "threshold": self.threshold,
            "categories": list(self.categories) if self.categories else None,
        }


def mean_relative_area(sample: AnnotatedSample, boxes: Sequence[BoundingBox]) -> float:
    """Arithmetic mean over instances of box area / image area."""
    if sample.width is None or sample.height is None:
        raise ManifestError(f"sample {sample.sample_id} has no recorded image size")
    image_area = sample.width * sample.height
    return float(np.mean([b.area / image_area for b in boxes]))


def build_small_subset(
    manifest: DatasetManifest,
    threshold: float = SMALL_OBJECT_THRESHOLD,
    categories: Sequence[str] | None = None,
) -> tuple[DatasetManifest, SubsetReport]:
    """Retain images whose instances are small on average.

    Keeps exactly the images where the mean over annotation instances of
    (box area / image area) is below ``threshold``.  When ``categories`` is
    given, only instances of those classes count and survive; class lists
    are re-indexed to the classes supported by at least one kept image.
    """
    if not (0.0 < threshold < 1.0) or not math.isfinite(threshold):
        raise InvalidParameterError(f"threshold must lie in (0, 1), got {threshold}")
    wanted_cols: set[int] | None = None
    if categories is not None:
        unknown = [c for c in categories if c not in manifest.class_names]
        if unknown:
            raise InvalidParameterError(f"unknown categories: {unknown}")
        wanted_cols = {manifest.class_names.index(c) for c in categories}

    kept: list[AnnotatedSample] = []
    dropped = 0
    skipped: list[str] = []
    for sample in manifest.samples:
        # Single-class samples without per-box classes implicitly tag every
        # box with the sample label.
        if sample.box_categories:
            effective = sample.box_categories
        elif sample.label.kind == "index":
            effective = (sample.label.index,) * len(sample.boxes)
        else:
            effective = ()
        if wanted_cols is not None and effective:
            pairs = [(b, c) for b, c in zip(sample.boxes, effective) if c in wanted_cols]
            boxes = [b for b, _ in pairs]
            cats = [c for _, c in pairs] if sample.box_categories else []
        else:
            boxes = list(sample.boxes)
            cats = list(sample.box_categories)
        if not boxes:
            skipped.append(sample.sample_id)
            continue
        if mean_relative_area(sample, boxes) < threshold:
            kept.append(replace(sample, boxes=tuple(boxes), box_categories=tuple(cats)))
        else:
            dropped += 1

    # Re-index labels to classes supported by at least one kept image.
    support: set[int] = set()
    for s in kept:
        if s.box_categories:
            support.update(s.box_categories)
        else:
            vec = s.label.as_soft()
            support.update(i for i, v in enumerate(vec) if v > 0)
    if wanted_cols is not None:
        support &= wanted_cols
    new_cols = sorted(support)
    col_map = {old: new for new, old in enumerate(new_cols)}
    new_names = tuple(manifest.class_names[c] for c in new_cols)

    reindexed: list[AnnotatedSample] = []
    for s in kept:
        old_vec = s.label.as_soft()
        if s.label.kind == "index":
            label: Label = Label.from_index(col_map[s.label.index], len(new_names))
        else:
            label = Label(
                s.label.kind,
                len(new_names),
                values=tuple(old_vec[c] for c in new_cols),
            )
        reindexed.append(
            replace(
                s,
                label=label,
                box_categories=tuple(col_map[c] for c in s.box_categories),
            )
        )

    provenance = dict(manifest.provenance)
    provenance["small_subset"] = {
        "threshold": threshold,
        "categories": list(categories) if categories is not None else None,
    }
    result = DatasetManifest(
        samples=tuple(reindexed),
        class_names=new_names,
        split=manifest.split,
        provenance=provenance,
    )
    report = SubsetReport(
        kept=len(reindexed),
        dropped=dropped,
        skipped_no_annotations=tuple(skipped),
        threshold=threshold,
        categories=tuple(categories) if categories is not None else None,
    )
    return result, report


def images_from_mapping(
    manifest: DatasetManifest,
    images: Mapping[str, np.ndarray] | Callable[[AnnotatedSample], np.ndarray] | None,
    root: str | Path = ".",
) -> Callable[[AnnotatedSample], np.ndarray]:
    """Normalize the ways callers can hand pixels to a loader function."""
    if images is None:
        return lambda s: load_sample_image(s, root=root)
    if callable(images):
        return images
    mapping = images

    def load(sample: AnnotatedSample) -> np.ndarray:
        if sample.sample_id not in mapping:
            raise ManifestError(f"no image provided for sample {sample.sample_id!r}")
        return mapping[sample.sample_id]

    return load
