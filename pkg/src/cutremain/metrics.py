"""Classification metrics and feature-vector similarity measures.

Everything here is hand-rolled on numpy so the test suite can check each
metric against an independent brute-force oracle (pair enumeration for the
ranking statistic, rank-walk for average precision, count pooling for the
overall F1) without the two routes sharing code.

Conventions: ranking AUC scores ties as 1/2 (the rank-statistic form), and
per-class average precision is the un-interpolated precision-at-each-hit
sum.  Thresholded metrics count a prediction as positive when
score >= threshold.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError, ParseError, ShapeMismatchError, UndefinedMetricError

DEFAULT_THRESHOLD = 0.5


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1  # average of ranks i+1 .. j+1
        i = j + 1
    return ranks


def auc_roc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Probability that a random positive outranks a random negative.

    Rank-statistic form: (concordant pairs + tied pairs / 2) / (P * N).
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ShapeMismatchError(f"scores {s.shape} and labels {y.shape} must be equal 1-D vectors")
    if not np.isfinite(s).all():
        raise InvalidParameterError("scores must be finite")
    pos = int((y == 1).sum())
    neg = int((y == 0).sum())
    if pos + neg != len(y):
        raise InvalidParameterError("labels must be 0 or 1")
    if pos == 0 or neg == 0:
        raise UndefinedMetricError("ranking AUC needs at least one positive and one negative")
    ranks = _average_ranks(s)
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - pos * (pos + 1) / 2) / (pos * neg)


def f1(predictions: Sequence[int], labels: Sequence[int]) -> float:
    """Binary F1 = 2TP / (2TP + FP + FN); 0 when precision + recall is 0."""
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.shape != y.shape or p.ndim != 1:
        raise ShapeMismatchError(f"predictions {p.shape} and labels {y.shape} must be equal 1-D vectors")
    tp = int(((p == 1) & (y == 1)).sum())
    fp = int(((p == 1) & (y == 0)).sum())
    fn = int(((p == 0) & (y == 1)).sum())
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def per_class_f1(pred_indices: Sequence[int], label_indices: Sequence[int], num_classes: int) -> list[float]:
    """One-vs-rest F1 for each class of a single-label problem."""
    p = np.asarray(pred_indices)
    y = np.asarray(label_indices)
    return [f1((p == k).astype(int), (y == k).astype(int)) for k in range(num_classes)]


def macro_f1(pred_indices: Sequence[int], label_indices: Sequence[int], num_classes: int) -> float:
    """Average of the per-class F1 scores."""
    return float(np.mean(per_class_f1(pred_indices, label_indices, num_classes)))


def average_precision(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Un-interpolated AP: mean precision at each positive hit, by descending score.

    Ties are broken by input order (stable sort), the same rule the rank-walk
    oracle uses.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ShapeMismatchError("scores and labels must be equal 1-D vectors")
    n_pos = int((y == 1).sum())
    if n_pos == 0:
        raise UndefinedMetricError("average precision needs at least one positive")
    order = np.argsort(-s, kind="stable")
    hits = np.cumsum(y[order] == 1)
    ranks = np.arange(1, len(s) + 1)
    precision_at_hit = (hits / ranks)[y[order] == 1]
    return float(precision_at_hit.sum() / n_pos)


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """Per-sample per-class scores with binary ground truth.

    ``labels`` may be an (N, K) binary matrix or an N-vector of class
    indices for single-label data, which is one-hot expanded.
    """

    scores: np.ndarray
    labels: np.ndarray
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=np.float64)
        labels = np.asarray(self.labels)
        if scores.ndim != 2:
            raise ShapeMismatchError(f"scores must be (N, K), got shape {scores.shape}")
        if labels.ndim == 1:
            if labels.shape[0] != scores.shape[0]:
                raise ShapeMismatchError("label vector length must match score rows")
            onehot = np.zeros_like(scores, dtype=np.int64)
            onehot[np.arange(len(labels)), labels.astype(int)] = 1
            labels = onehot
        if labels.shape != scores.shape:
            raise ShapeMismatchError(f"labels {labels.shape} must match scores {scores.shape}")
        if not np.isfinite(scores).all():
            raise InvalidParameterError("scores must be finite")
        labels = labels.astype(np.int64)
        if not np.isin(labels, (0, 1)).all():
            raise InvalidParameterError("labels must be binary")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)

    @property
    def num_classes(self) -> int:
        return self.scores.shape[1]


@dataclass(frozen=True)
class MultilabelReport:
    """mAP plus the class-averaged and count-pooled F1 at the threshold."""

    map: float
    cf1: float
    of1: float
    per_class_ap: tuple[float | None, ...]
    excluded_classes: tuple[int, ...]
    threshold: float

    def to_dict(self) -> dict:
        return {
            "mAP": self.map,
            "CF1": self.cf1,
            "OF1": self.of1,
            "per_class_ap": list(self.per_class_ap),
            "excluded_classes": list(self.excluded_classes),
            "threshold": self.threshold,
        }


def _f1_from_pr(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


def multilabel_suite(preds: PredictionSet) -> MultilabelReport:
    """The standard multi-label triple: mAP, CF1, OF1.

    Classes without any positive label have no defined AP; they are
    excluded from the mean and reported.
    """
    if preds.num_classes < 2:
        raise InvalidParameterError("the multi-label suite needs K >= 2 classes")
    if preds.scores.shape[0] == 0:
        raise InvalidParameterError("empty prediction set")

    aps: list[float | None] = []
    excluded: list[int] = []
    for k in range(preds.num_classes):
        try:
            aps.append(average_precision(preds.scores[:, k], preds.labels[:, k]))
        except UndefinedMetricError:
            aps.append(None)
            excluded.append(k)
    defined = [a for a in aps if a is not None]
    if not defined:
        raise UndefinedMetricError("no class has a positive label; mAP undefined")
    mean_ap = float(np.mean(defined))

    decided = (preds.scores >= preds.threshold).astype(np.int64)
    tp = ((decided == 1) & (preds.labels == 1)).sum(axis=0).astype(np.float64)
    fp = ((decided == 1) & (preds.labels == 0)).sum(axis=0).astype(np.float64)
    fn = ((decided == 0) & (preds.labels == 1)).sum(axis=0).astype(np.float64)

    with np.errstate(invalid="ignore", divide="ignore"):
        prec_k = np.where(tp + fp > 0, tp / (tp + fp), 0.0)
        rec_k = np.where(tp + fn > 0, tp / (tp + fn), 0.0)
    cf1 = _f1_from_pr(float(prec_k.mean()), float(rec_k.mean()))

    tp_all, fp_all, fn_all = float(tp.sum()), float(fp.sum()), float(fn.sum())
    op = tp_all / (tp_all + fp_all) if tp_all + fp_all else 0.0
    orec = tp_all / (tp_all + fn_all) if tp_all + fn_all else 0.0
    of1 = _f1_from_pr(op, orec)

    return MultilabelReport(
        map=mean_ap,
        cf1=cf1,
        of1=of1,
        per_class_ap=tuple(aps),
        excluded_classes=tuple(excluded),
        threshold=preds.threshold,
    )


def euclidean_distance(u: Sequence[float], v: Sequence[float]) -> float:
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeMismatchError(f"vectors must share one dimension, got {a.shape} and {b.shape}")
    return float(np.sqrt(((a - b) ** 2).sum()))


def cosine_distance(u: Sequence[float], v: Sequence[float]) -> float:
    """1 - cos(u, v); 0 for parallel vectors, 1 orthogonal, 2 opposite."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeMismatchError(f"vectors must share one dimension, got {a.shape} and {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise UndefinedMetricError("cosine distance is undefined for zero-norm vectors")
    return 1.0 - float(a @ b) / (na * nb)


@dataclass(frozen=True)
class FeatureSimilarityReport:
    """Mean and population std of per-pair distances between matched vectors."""

    euclidean_mean: float
    euclidean_std: float
    cosine_mean: float
    cosine_std: float
    pairs: int

    def to_dict(self) -> dict:
        return {
            "euclidean": {"mean": self.euclidean_mean, "std": self.euclidean_std},
            "cosine": {"mean": self.cosine_mean, "std": self.cosine_std},
            "pairs": self.pairs,
        }


def pairwise_feature_report(
    originals: Sequence[Sequence[float]],
    augmented: Sequence[Sequence[float]],
) -> FeatureSimilarityReport:
    """Distances between sample-matched original/augmented feature vectors."""
    originals = list(originals)
    augmented = list(augmented)
    if len(originals) != len(augmented):
        raise ShapeMismatchError(
            f"{len(originals)} original vectors vs {len(augmented)} augmented ones"
        )
    if not originals:
        raise InvalidParameterError("at least one vector pair is required")
    euclid = [euclidean_distance(u, v) for u, v in zip(originals, augmented)]
    cosine = [cosine_distance(u, v) for u, v in zip(originals, augmented)]
    return FeatureSimilarityReport(
        euclidean_mean=float(np.mean(euclid)),
        euclidean_std=float(np.std(euclid)),
        cosine_mean=float(np.mean(cosine)),
        cosine_std=float(np.std(cosine)),
        pairs=len(euclid),
    )


def read_matrix_csv(path: str | Path) -> tuple[list[str], list[str], np.ndarray]:
    """Read an id-plus-columns CSV: header ``id,<col>,...``, one row per sample.

    Returns (row ids, column names, float matrix).
    """
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty CSV") from None
        if len(header) < 2:
            raise ParseError(f"{path}: need an id column plus at least one value column")
        ids: list[str] = []
        rows: list[list[float]] = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: row {i} has {len(row)} fields, header has {len(header)}")
            ids.append(row[0])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as e:
                raise ParseError(f"{path}: row {i}: {e}") from e
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return ids, header[1:], np.asarray(rows, dtype=np.float64)


def file_digest(path: str | Path) -> str:
    """Hex sha256 of a file, used to stamp reports with their input identity."""
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
