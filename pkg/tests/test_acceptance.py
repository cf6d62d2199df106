"""Acceptance gate: one test per criterion, at the stated size and tolerance.

Run ``pytest tests/test_acceptance.py -v -s`` for one line per criterion
plus the measured margins.  Zero-tolerance checks use exact array equality;
metric oracles allow 1e-9 absolute.
"""

import hashlib
import time
from pathlib import Path

import numpy as np
import pytest

from cutremain import cli, pngio
from cutremain.augment import (
    Label,
    MixParams,
    cut_and_remain,
    cut_and_remain_pair,
    sup_cutmix,
    sup_cutout,
    sup_mixup,
)
from cutremain.batch import compose
from cutremain.dataset import DatasetManifest, build_small_subset, parse_coco
from cutremain.errors import PlacementError
from cutremain.geometry import AspectRatioSet, BoundingBox, rasterize_mask
from cutremain.metrics import PredictionSet, auc_roc, average_precision, multilabel_suite
from cutremain.probe import ProbeParams, SyntheticTask, loss_and_gradient, run_experiment

from oracles import (
    ap_rank_walk,
    auc_pairwise,
    brute_force_mask,
    finite_difference_gradient,
    of1_pooled,
)

BINARY = Label.from_index(1, 2)


def report(name: str, detail: str = "") -> None:
    print(f"[PASS] {name}" + (f" -- {detail}" if detail else ""))


def random_image(rng, w, h, c=1):
    return rng.integers(0, 256, size=(h, w, c)).astype(np.float64) / 255.0


def random_box_inside(rng, w, h):
    return BoundingBox(
        float(rng.uniform(0.5, w - 0.5)),
        float(rng.uniform(0.5, h - 0.5)),
        float(rng.uniform(1.0, w)),
        float(rng.uniform(1.0, h)),
    )


def test_c01_region_keep_exactness():
    """1,000 random fixtures: output == mask x input exactly, labels and dims kept."""
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    for _ in range(1000):
        w, h = int(rng.integers(2, 65)), int(rng.integers(2, 65))
        c = int(rng.choice((1, 3)))
        image = random_image(rng, w, h, c)
        boxes = [random_box_inside(rng, w, h) for _ in range(int(rng.integers(1, 3)))]
        rw = float(rng.choice((1.0, 1.5, 2.0)))
        rh = float(rng.choice((1.0, 1.5, 2.0)))
        sample = cut_and_remain_pair(image, BINARY, boxes, rw, rh)
        mask = rasterize_mask(
            [BoundingBox(b.cx, b.cy, b.w * rw, b.h * rh) for b in boxes], w, h
        ).values
        expected = np.where(mask[:, :, None] == 1, image, 0.0)
        assert np.array_equal(sample.image, expected)  # zero tolerance
        inside = np.broadcast_to(mask[:, :, None] == 1, sample.image.shape)
        assert np.array_equal(sample.image[inside], image[inside])
        assert not sample.image[~inside].any()
        assert sample.label == BINARY
        assert sample.image.shape == image.shape
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    report("C01 region-keep exactness", f"1000 fixtures in {elapsed:.2f}s (< 10s)")


def test_c02_nine_variant_contract():
    """Default ratios yield exactly nine samples; the (1,1) variant matches the raw mask."""
    rng = np.random.default_rng(202)
    for _ in range(100):
        w, h = int(rng.integers(4, 65)), int(rng.integers(4, 65))
        image = random_image(rng, w, h)
        boxes = [random_box_inside(rng, w, h) for _ in range(int(rng.integers(1, 3)))]
        samples = cut_and_remain(image, BINARY, boxes)  # default {1.0, 1.5, 2.0}
        assert len(samples) == 9
        identity = next(s for s in samples if s.provenance.ratio == (1.0, 1.0))
        raw_mask = rasterize_mask(boxes, w, h).values
        assert np.array_equal(identity.image, image * raw_mask[:, :, None])
    report("C02 nine-variant contract", "100 samples x 9 variants; identity pair == raw-annotation mask")


def test_c03_table_kernel_oracles():
    """Masked cutmix/mixup/cutout against their formulas, 1,000 fixtures each, exact."""
    rng = np.random.default_rng(303)

    for _ in range(1000):  # cutmix: per-pixel selection formula
        w, h = int(rng.integers(2, 65)), int(rng.integers(2, 65))
        xa, xb = random_image(rng, w, h), random_image(rng, w, h)
        mask = rasterize_mask([random_box_inside(rng, w, h)], w, h)
        out = sup_cutmix(xa, BINARY, mask, xb, BINARY)
        m = mask.values[:, :, None].astype(np.float64)
        assert np.array_equal(out.image, m * xa + (1.0 - m) * xb)
        assert out.label == BINARY

    lam_grid = (0.0, 0.25, 0.5, 0.75, 1.0)
    for i in range(1000):  # mixup: exact linearity in the mixing coefficient
        w, h = int(rng.integers(2, 49)), int(rng.integers(2, 49))
        xa, xb = random_image(rng, w, h), random_image(rng, w, h)
        ma = rasterize_mask([random_box_inside(rng, w, h)], w, h)
        mb = rasterize_mask([random_box_inside(rng, w, h)], w, h)
        lam = lam_grid[i % len(lam_grid)]
        out = sup_mixup(xa, Label.from_index(0, 2), ma, xb, Label.from_index(1, 2), mb,
                        params=MixParams(lam=lam))
        masked_a = xa * ma.values[:, :, None]
        masked_b = xb * mb.values[:, :, None]
        assert np.array_equal(out.image, lam * masked_a + (1.0 - lam) * masked_b)
        if lam == 1.0:
            assert np.array_equal(out.image, masked_a)
            assert out.label.values == (1.0, 0.0)
        if lam == 0.0:
            assert np.array_equal(out.image, masked_b)
            assert out.label.values == (0.0, 1.0)

    placed = 0
    for i in range(1000):  # cutout: annotated pixels are never touched
        w, h = int(rng.integers(8, 65)), int(rng.integers(8, 65))
        image = random_image(rng, w, h)
        mask = rasterize_mask([random_box_inside(rng, w // 2, h // 2)], w, h)
        try:
            out = sup_cutout(image, BINARY, mask, rng=i)
        except PlacementError:
            continue
        placed += 1
        inside = mask.values[:, :, None] == 1
        assert np.array_equal(out.image[inside], image[inside])
        changed = out.image != image
        assert not (changed & inside).any()
        assert out.label == BINARY
    assert placed >= 950  # the fixtures are built to be feasible
    report("C03 masked-kernel oracles", f"3 x 1000 fixtures, {placed} cutout placements, exact")


def test_c04_geometry_oracle():
    """Rasterization equals exhaustive pixel-center membership, 1,000 random boxes."""
    rng = np.random.default_rng(404)
    checked = 0
    for _ in range(1000):
        w, h = int(rng.integers(1, 65)), int(rng.integers(1, 65))
        boxes = [
            BoundingBox(
                float(rng.uniform(-4, w + 4)),
                float(rng.uniform(-4, h + 4)),
                float(rng.uniform(0.3, w + 2)),
                float(rng.uniform(0.3, h + 2)),
            )
            for _ in range(int(rng.integers(1, 3)))
        ]
        expected = brute_force_mask(boxes, w, h)
        if expected.sum() == 0:
            # Out-of-image fixtures exercise the matching error path.
            with pytest.raises(Exception):
                rasterize_mask(boxes, w, h)
            continue
        assert np.array_equal(rasterize_mask(boxes, w, h).values, expected)
        checked += 1
    assert checked >= 800  # the comparison must not be vacuous
    report("C04 geometry oracle", f"{checked}/1000 non-empty masks equal brute force exactly")


def test_c05_metrics_oracles():
    """AUC/AP/OF1 against enumeration oracles on 500 random instances, 1e-9 abs."""
    rng = np.random.default_rng(505)

    # Worked constants are confirmed by the oracles before being asserted.
    assert auc_pairwise([0.9, 0.6, 0.4, 0.2], [1, 0, 1, 0]) == 0.75
    assert auc_roc([0.9, 0.6, 0.4, 0.2], [1, 0, 1, 0]) == 0.75
    assert ap_rank_walk([0.9, 0.8, 0.7], [1, 0, 1]) == pytest.approx(5 / 6, abs=1e-15)
    assert average_precision([0.9, 0.8, 0.7], [1, 0, 1]) == pytest.approx(5 / 6, abs=1e-9)

    for _ in range(500):
        n = int(rng.integers(2, 201))
        k = int(rng.integers(2, 11))
        scores = np.round(rng.random((n, k)), 2)  # coarse grid forces ties
        labels = rng.integers(0, 2, size=(n, k))
        col = scores[:, 0]
        lab = labels[:, 0]
        if 0 < lab.sum() < n:
            assert auc_roc(col, lab) == pytest.approx(auc_pairwise(col, lab), abs=1e-9)
        if lab.sum() > 0:
            assert average_precision(col, lab) == pytest.approx(
                ap_rank_walk(list(col), list(lab)), abs=1e-9
            )
        if labels.sum() > 0:
            suite = multilabel_suite(PredictionSet(scores, labels))
            assert suite.of1 == pytest.approx(of1_pooled(scores, labels, 0.5), abs=1e-9)
    report("C05 metrics oracles", "500 instances (N<=200, K<=10) within 1e-9; constants 0.75 and 5/6 confirmed")


def synthetic_manifest(n: int) -> DatasetManifest:
    from cutremain.dataset import AnnotatedSample

    samples = tuple(
        AnnotatedSample(
            sample_id=f"s{i:03d}",
            image_path=f"s{i:03d}.png",
            width=16,
            height=16,
            channels=1,
            label=Label.from_index(i % 2, 2),
            boxes=(BoundingBox(8, 8, 4, 4),),
        )
        for i in range(n)
    )
    return DatasetManifest(samples=samples, class_names=("neg", "pos"))


def test_c06_batch_counting_and_nesting():
    """Entry counts equal N + floor(gamma N) * k^2 and selections nest across gamma."""
    manifest = synthetic_manifest(n=40)
    gamma_grid = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    for ratios in (AspectRatioSet((1.0,)), AspectRatioSet((1.0, 2.0)), AspectRatioSet()):
        previous: set[str] = set()
        for gamma in gamma_grid:
            bm = compose(manifest, "cut-and-remain", gamma=gamma, ratios=ratios, seed=606)
            expected = 40 + int(gamma * 40 + 1e-9) * len(ratios) ** 2
            assert len(bm) == expected
            sources = bm.augmented_sources
            assert previous <= sources  # nested seeded sampling
            previous = sources
        assert previous == {s.sample_id for s in manifest.samples}
    report("C06 batch counting and gamma nesting", "3 ratio sets x 6 gammas, counts exact, nested")


def test_c07_cli_determinism(tmp_path):
    """augment and compose reruns with identical seeds are byte-identical."""
    rng = np.random.default_rng(707)
    lines = ["path,label,cx,cy,w,h"]
    for i in range(4):
        name = f"img{i}.png"
        pngio.save_image(tmp_path / name, rng.integers(0, 256, size=(16, 16, 1)) / 255.0)
        lines.append(f"{name},lesion,8,8,5,5")
    csv_path = tmp_path / "ann.csv"
    csv_path.write_text("\n".join(lines) + "\n")
    manifest_path = tmp_path / "manifest.json"
    assert cli.main(["ingest", str(csv_path), "--out", str(manifest_path)]) == 0

    def digest(root: Path) -> str:
        h = hashlib.sha256()
        for path in sorted(root.rglob("*")):
            if path.is_file():
                h.update(str(path.relative_to(root)).encode())
                h.update(path.read_bytes())
        return h.hexdigest()

    compose_out = tmp_path / "batch.jsonl"
    compose_args = ["compose", "--manifest", str(manifest_path), "--gamma", "0.5",
                    "--seed", "17", "--out", str(compose_out)]
    assert cli.main(compose_args) == 0
    first = compose_out.read_bytes()
    assert cli.main(compose_args) == 0
    assert compose_out.read_bytes() == first

    augment_out = tmp_path / "aug"
    augment_args = ["augment", "--manifest", str(manifest_path), "--method", "sup-cutout",
                    "--gamma", "1.0", "--seed", "17", "--out", str(augment_out)]
    assert cli.main(augment_args) == 0
    first_digest = digest(augment_out)
    assert cli.main(augment_args) == 0
    assert digest(augment_out) == first_digest
    report("C07 CLI determinism", "compose and augment reruns byte-identical")


def test_c08_directional_probe():
    """Masked training beats the baseline by > 0.02 mean AUC; gamma curve near-monotone."""
    # Null precondition: with a zero-contrast target the gap is centered at 0.
    null = run_experiment(
        task=SyntheticTask(target_delta=0.0),
        n_train=150, n_test=150, gammas=(0.0, 1.0), seeds=5,
        params=ProbeParams(epochs=10),
    )
    assert all(0.4 <= m <= 0.6 for m in null.mean_auc)
    assert abs(null.mean_difference) < 0.05

    start = time.perf_counter()
    result = run_experiment(
        task=SyntheticTask(),
        n_train=500, n_test=500,
        gammas=(0.0, 0.2, 0.4, 0.6, 0.8, 1.0),
        seeds=5,
        params=ProbeParams(),
    )
    elapsed = time.perf_counter() - start
    gap = result.top_mean - result.baseline_mean
    assert gap > 0.02
    means = result.mean_auc
    for lo, hi in zip(means, means[1:]):
        assert hi >= lo - 0.01  # non-decreasing within the stated slack
    assert elapsed < 120.0
    report(
        "C08 directional probe",
        f"gap {gap:+.4f} (> 0.02), means {[round(m, 4) for m in means]}, {elapsed:.1f}s (< 120s)",
    )


def test_c09_subset_filter():
    """Small-object filter keeps exactly the brute-force under-threshold set."""
    rng = np.random.default_rng(909)
    images, annotations = [], []
    ann_id = 0
    for i in range(60):
        w, h = int(rng.integers(50, 200)), int(rng.integers(50, 200))
        images.append({"id": i, "file_name": f"{i}.png", "width": w, "height": h})
        for _ in range(int(rng.integers(0, 4))):
            bw, bh = int(rng.integers(1, w // 2)), int(rng.integers(1, h // 2))
            annotations.append(
                {"image_id": i, "category_id": int(rng.integers(1, 4)),
                 "bbox": [1.0, 1.0, float(bw), float(bh)]}
            )
            ann_id += 1
    doc = {
        "images": images,
        "annotations": annotations,
        "categories": [{"id": 1, "name": "a"}, {"id": 2, "name": "b"}, {"id": 3, "name": "c"}],
    }
    manifest = parse_coco(doc)
    result, rep = build_small_subset(manifest, threshold=0.02)

    expected = set()
    for image in images:
        areas = [
            ann["bbox"][2] * ann["bbox"][3] / (image["width"] * image["height"])
            for ann in annotations
            if ann["image_id"] == image["id"]
        ]
        if areas and sum(areas) / len(areas) < 0.02:
            expected.add(str(image["id"]))
    assert {s.sample_id for s in result.samples} == expected
    assert rep.kept == len(expected)
    report("C09 subset filter", f"kept {rep.kept}, dropped {rep.dropped}, skipped {len(rep.skipped_no_annotations)}; equals brute force")


def test_c10_gradient_check():
    """Analytic gradient vs central differences, rel error < 1e-5 at 10 points."""
    rng = np.random.default_rng(1010)
    x = rng.random((20, 12))
    y = rng.integers(0, 2, size=20).astype(np.float64)
    worst = 0.0
    for _ in range(10):
        weights = rng.normal(scale=0.7, size=12)
        bias = float(rng.normal())
        _, grad_w, grad_b = loss_and_gradient(weights, bias, x, y, l2=1e-3)

        def loss_fn(w, b):
            return loss_and_gradient(w, b, x, y, l2=1e-3)[0]

        fd_w, fd_b = finite_difference_gradient(loss_fn, weights, bias)
        rel = np.linalg.norm(grad_w - fd_w) / max(np.linalg.norm(fd_w), 1e-12)
        rel_b = abs(grad_b - fd_b) / max(abs(fd_b), 1e-12)
        worst = max(worst, rel, rel_b)
        assert rel < 1e-5 and rel_b < 1e-5
    report("C10 gradient check", f"worst relative error {worst:.2e} (< 1e-5) at 10 points")
