"""Desk-scale directional experiment.

A synthetic subtle-target task stands in for the clinical datasets: each
image holds bright square distractors everywhere, and positives add one
dimmer square near the image center (with positional jitter).  Every sample
carries a box at the (would-be) target location, mirroring annotation of
relevant regions on normal images too.  A pixel-space logistic regression
is then trained with and without region-keep augmentation; masked copies
concentrate the gradient on the annotated region, which is the effect under
test.

Evaluation reads pixels and labels only, never annotations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .augment import AugmentedSample, Label
from .batch import compose, materialize
from .dataset import AnnotatedSample, DatasetManifest
from .errors import InvalidParameterError, ShapeMismatchError
from .geometry import AspectRatioSet, BoundingBox
from .metrics import auc_roc

DEFAULT_GAMMA_GRID = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class SyntheticTask:
    """Parameters of the subtle-target image distribution."""

    width: int = 32
    height: int = 32
    channels: int = 1
    distractor_count: tuple[int, int] = (6, 10)
    distractor_intensity: float = 0.8
    distractor_size: int = 4
    target_size: int = 4
    target_delta: float = 0.55
    class_balance: float = 0.5
    jitter: int = 6

    def __post_init__(self) -> None:
        if self.channels != 1:
            raise InvalidParameterError("the probe task is grayscale (channels=1)")
        if not (0.0 <= self.target_delta <= 1.0):
            raise InvalidParameterError(f"target delta must lie in [0, 1], got {self.target_delta}")
        if not (0.0 < self.class_balance < 1.0):
            raise InvalidParameterError(f"class balance must lie in (0, 1), got {self.class_balance}")
        lo, hi = self.distractor_count
        if not (0 <= lo <= hi):
            raise InvalidParameterError(f"bad distractor count range {self.distractor_count}")
        if self.distractor_size > min(self.width, self.height):
            raise InvalidParameterError("distractor square does not fit in the image")
        if self.target_size < 1 or self.jitter < 0:
            raise InvalidParameterError("target size must be >= 1 and jitter >= 0")
        # The jittered target square must stay inside the image.
        half = self.target_size / 2
        for center, extent in ((self.width / 2, self.width), (self.height / 2, self.height)):
            if center - self.jitter - half < 0 or center + self.jitter + half > extent:
                raise InvalidParameterError(
                    "target cannot fit inside the image for every jitter offset"
                )


def generate_task(
    task: SyntheticTask, n: int, seed: int
) -> tuple[DatasetManifest, dict[str, np.ndarray]]:
    """Draw a dataset of n images plus annotations, deterministic in the seed.

    Positives paint the target additively (clipped to [0, 1]) so that a zero
    delta makes the two classes distributionally identical.  Negatives draw
    the same random variates and annotate the location the target would have
    occupied.
    """
    if n < 1:
        raise InvalidParameterError("need at least one sample")
    rng = np.random.default_rng(seed)
    n_pos = round(n * task.class_balance)
    is_positive = np.zeros(n, dtype=bool)
    is_positive[:n_pos] = True
    rng.shuffle(is_positive)

    lo, hi = task.distractor_count
    ds, ts = task.distractor_size, task.target_size
    samples: list[AnnotatedSample] = []
    images: dict[str, np.ndarray] = {}
    for i in range(n):
        img = np.zeros((task.height, task.width, 1), dtype=np.float64)
        for _ in range(int(rng.integers(lo, hi + 1))):
            dx = int(rng.integers(0, task.width - ds + 1))
            dy = int(rng.integers(0, task.height - ds + 1))
            img[dy : dy + ds, dx : dx + ds, 0] = task.distractor_intensity
        jx = int(rng.integers(-task.jitter, task.jitter + 1))
        jy = int(rng.integers(-task.jitter, task.jitter + 1))
        x0 = task.width // 2 + jx - ts // 2
        y0 = task.height // 2 + jy - ts // 2
        if is_positive[i]:
            region = img[y0 : y0 + ts, x0 : x0 + ts, 0]
            img[y0 : y0 + ts, x0 : x0 + ts, 0] = np.clip(region + task.target_delta, 0.0, 1.0)

        sample_id = f"s{i:05d}"
        images[sample_id] = img
        samples.append(
            AnnotatedSample(
                sample_id=sample_id,
                image_path=f"{sample_id}.png",
                width=task.width,
                height=task.height,
                channels=1,
                label=Label.from_index(int(is_positive[i]), 2),
                boxes=(BoundingBox(x0 + ts / 2, y0 + ts / 2, float(ts), float(ts)),),
            )
        )
    manifest = DatasetManifest(
        samples=tuple(samples),
        class_names=("negative", "positive"),
        provenance={"source": "synthetic-probe", "seed": seed},
    )
    return manifest, images


@dataclass(frozen=True)
class ProbeParams:
    learning_rate: float = 0.05
    epochs: int = 40
    l2: float = 1e-4
    batch_size: int = 32
    seed: int = 0


@dataclass(frozen=True, eq=False)
class LinearProbe:
    """Logistic regression over flattened pixels."""

    weights: np.ndarray
    bias: float

    def scores(self, x: np.ndarray) -> np.ndarray:
        """sigmoid(x @ w + b) for a (n, D) matrix of flattened images."""
        return _sigmoid(x @ self.weights + self.bias)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def loss_and_gradient(
    weights: np.ndarray,
    bias: float,
    x: np.ndarray,
    y: np.ndarray,
    l2: float = 0.0,
) -> tuple[float, np.ndarray, float]:
    """Mean binary cross-entropy plus L2 penalty, with its exact gradient.

    The loss uses the stable form softplus(z) - z*y; targets may be soft.
    Returns (loss, d/dweights, d/dbias).
    """
    z = x @ weights + bias
    loss = float(np.mean(np.logaddexp(0.0, z) - z * y)) + 0.5 * l2 * float(weights @ weights)
    residual = _sigmoid(z) - y
    grad_w = x.T @ residual / len(y) + l2 * weights
    grad_b = float(residual.mean())
    return loss, grad_w, grad_b


def _target_value(label: Label) -> float:
    """Positive-class probability of a binary label (soft labels allowed)."""
    if label.num_classes != 2:
        raise InvalidParameterError(f"the probe is binary; got {label.num_classes} classes")
    return label.as_soft()[1]


def samples_to_arrays(stream: Iterable[AugmentedSample]) -> tuple[np.ndarray, np.ndarray]:
    """Flatten a sample stream into (n, D) pixels and (n,) soft targets."""
    rows: list[np.ndarray] = []
    targets: list[float] = []
    dim: int | None = None
    for sample in stream:
        flat = np.asarray(sample.image, dtype=np.float64).ravel()
        if dim is None:
            dim = flat.size
        elif flat.size != dim:
            raise ShapeMismatchError(
                f"image dimension drifted mid-stream: {flat.size} != {dim}"
            )
        rows.append(flat)
        targets.append(_target_value(sample.label))
    if not rows:
        raise InvalidParameterError("empty training stream")
    return np.vstack(rows), np.asarray(targets, dtype=np.float64)


def train_probe(stream: Iterable[AugmentedSample], params: ProbeParams = ProbeParams()) -> LinearProbe:
    """Fit the probe by seeded mini-batch SGD on binary cross-entropy."""
    x, y = samples_to_arrays(stream)
    rng = np.random.default_rng(params.seed)
    weights = np.zeros(x.shape[1], dtype=np.float64)
    bias = 0.0
    n = len(y)
    for _ in range(params.epochs):
        order = rng.permutation(n)
        for start in range(0, n, params.batch_size):
            idx = order[start : start + params.batch_size]
            _, grad_w, grad_b = loss_and_gradient(weights, bias, x[idx], y[idx], params.l2)
            weights = weights - params.learning_rate * grad_w
            bias = bias - params.learning_rate * grad_b
    return LinearProbe(weights=weights, bias=bias)


def evaluate_probe(
    probe: LinearProbe,
    manifest: DatasetManifest,
    images: dict[str, np.ndarray],
) -> float:
    """Test AUC of the probe; reads pixels and labels only, never boxes."""
    x = np.vstack([images[s.sample_id].ravel() for s in manifest.samples])
    y = np.asarray([_target_value(s.label) for s in manifest.samples])
    return auc_roc(probe.scores(x), (y >= 0.5).astype(int))


@dataclass(frozen=True)
class ProbeReport:
    """Per-seed, per-gamma test AUCs of the directional experiment."""

    gammas: tuple[float, ...]
    seeds: tuple[int, ...]
    auc: tuple[tuple[float, ...], ...]  # [seed][gamma]
    task: SyntheticTask
    n_train: int
    n_test: int
    params: ProbeParams = field(default_factory=ProbeParams)

    @property
    def mean_auc(self) -> tuple[float, ...]:
        return tuple(float(np.mean([row[g] for row in self.auc])) for g in range(len(self.gammas)))

    @property
    def baseline_mean(self) -> float:
        return self.mean_auc[self.gammas.index(0.0)] if 0.0 in self.gammas else self.mean_auc[0]

    @property
    def top_mean(self) -> float:
        return self.mean_auc[self.gammas.index(1.0)] if 1.0 in self.gammas else self.mean_auc[-1]

    @property
    def mean_difference(self) -> float:
        """Paired mean of AUC(largest gamma) - AUC(smallest gamma)."""
        lo = self.gammas.index(min(self.gammas))
        hi = self.gammas.index(max(self.gammas))
        return float(np.mean([row[hi] - row[lo] for row in self.auc]))

    def to_dict(self) -> dict:
        return {
            "gammas": list(self.gammas),
            "seeds": list(self.seeds),
            "auc": [list(row) for row in self.auc],
            "mean_auc": list(self.mean_auc),
            "baseline_mean": self.baseline_mean,
            "top_mean": self.top_mean,
            "mean_difference": self.mean_difference,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "task": {
                "width": self.task.width,
                "height": self.task.height,
                "distractor_count": list(self.task.distractor_count),
                "distractor_intensity": self.task.distractor_intensity,
                "distractor_size": self.task.distractor_size,
                "target_size": self.task.target_size,
                "target_delta": self.task.target_delta,
                "class_balance": self.task.class_balance,
                "jitter": self.task.jitter,
            },
            "train_params": {
                "learning_rate": self.params.learning_rate,
                "epochs": self.params.epochs,
                "l2": self.params.l2,
                "batch_size": self.params.batch_size,
            },
        }


def run_experiment(
    task: SyntheticTask = SyntheticTask(),
    n_train: int = 500,
    n_test: int = 500,
    gammas: Sequence[float] = (0.0, 1.0),
    seeds: Sequence[int] | int = 5,
    params: ProbeParams = ProbeParams(),
    ratios: AspectRatioSet | None = None,
) -> ProbeReport:
    """Train the probe at each gamma over several seeds and record test AUCs.

    Each seed draws fresh train/test datasets; within a seed, the gamma
    cells share the same data and the same nested augmentation selection,
    so the sweep isolates gamma.
    """
    if isinstance(seeds, int):
        seeds = tuple(range(seeds))
    else:
        seeds = tuple(seeds)
    gammas = tuple(float(g) for g in gammas)
    ratios = ratios or AspectRatioSet()

    rows: list[tuple[float, ...]] = []
    for seed in seeds:
        train_manifest, train_images = generate_task(task, n_train, seed=1000 + 7919 * seed)
        test_manifest, test_images = generate_task(task, n_test, seed=2000 + 7919 * seed)
        row: list[float] = []
        for gamma in gammas:
            bm = compose(
                train_manifest,
                method="cut-and-remain",
                gamma=gamma,
                ratios=ratios,
                seed=3000 + seed,
            )
            stream = materialize(bm, train_manifest, train_images)
            probe = train_probe(
                stream,
                ProbeParams(
                    learning_rate=params.learning_rate,
                    epochs=params.epochs,
                    l2=params.l2,
                    batch_size=params.batch_size,
                    seed=4000 + seed,
                ),
            )
            row.append(evaluate_probe(probe, test_manifest, test_images))
        rows.append(tuple(row))
    return ProbeReport(
        gammas=gammas,
        seeds=seeds,
        auc=tuple(rows),
        task=task,
        n_train=n_train,
        n_test=n_test,
        params=params,
    )


