"""Region-supervised augmentation engine.

Keep the annotated box region of an image and zero everything else, so a
classifier trained on the originals plus the masked copies is steered
toward the labelled region.  The package bundles the box/mask geometry,
the masked kernels (region-keep plus mixup/cutout/cutmix restricted by the
annotation mask), dataset ingestion and small-object filtering, seeded
batch manifests, an evaluation-metric suite, and a synthetic directional
probe, all behind one deterministic CLI.
"""

from ._version import __version__
from .augment import (
    AugmentedSample,
    Label,
    MixParams,
    Provenance,
    cut_and_remain,
    cut_and_remain_pair,
    sup_cutmix,
    sup_cutout,
    sup_mixup,
)
from .batch import BatchEntry, BatchManifest, compose, materialize
from .dataset import (
    AnnotatedSample,
    DatasetManifest,
    build_small_subset,
    parse_coco,
    parse_csv,
    split_vertical,
)
from .geometry import (
    DEFAULT_RATIOS,
    AspectRatioSet,
    BinaryMask,
    BoundingBox,
    PixelRegion,
    clip_to_image,
    expand_box,
    rasterize_mask,
    variant_boxes,
)
from .metrics import (
    PredictionSet,
    auc_roc,
    cosine_distance,
    euclidean_distance,
    f1,
    macro_f1,
    multilabel_suite,
    pairwise_feature_report,
)
from .probe import LinearProbe, ProbeParams, SyntheticTask, generate_task, run_experiment

__all__ = [
    "__version__",
    "AnnotatedSample",
    "AspectRatioSet",
    "AugmentedSample",
    "BatchEntry",
    "BatchManifest",
    "BinaryMask",
    "BoundingBox",
    "DatasetManifest",
    "DEFAULT_RATIOS",
    "Label",
    "LinearProbe",
    "MixParams",
    "PixelRegion",
    "PredictionSet",
    "ProbeParams",
    "Provenance",
    "SyntheticTask",
    "auc_roc",
    "build_small_subset",
    "clip_to_image",
    "compose",
    "cosine_distance",
    "cut_and_remain",
    "cut_and_remain_pair",
    "euclidean_distance",
    "expand_box",
    "f1",
    "generate_task",
    "macro_f1",
    "materialize",
    "multilabel_suite",
    "pairwise_feature_report",
    "parse_coco",
    "parse_csv",
    "rasterize_mask",
    "run_experiment",
    "split_vertical",
    "sup_cutmix",
    "sup_cutout",
    "sup_mixup",
    "variant_boxes",
]
