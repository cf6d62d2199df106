"""Command-line entry point.

Subcommands: ingest, subset, augment, compose, eval, similarity, probe,
kernel, parity.  Every run is reproducible: seeds default to a fixed
constant, outputs carry a config echo instead of timestamps, and rerunning
a subcommand with identical inputs and seed produces byte-identical files.

Report-producing paths (eval, similarity, probe) write a JSON report, a
delimited CSV companion, and rendered PNG figures side by side in the
output directory.

The ``kernel`` subcommand is the machine interface used by the buffer
bindings: JSON-lines requests on stdin (or --in), one JSON response per
line on stdout, errors reported in-band as {"ok": false, "error": ...}.
``parity`` freezes a corpus of kernel requests with their expected
responses so a binding layer can prove bit-exact parity.
"""

from __future__ import annotations

import argparse
import base64
import csv
import json
import re
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import batch as batch_mod
from . import dataset as dataset_mod
from . import metrics as metrics_mod
from . import pngio, probe
from ._version import __version__
from .augment import (
    AUGMENT_METHODS,
    Label,
    MixParams,
    cut_and_remain,
    sup_cutmix,
    sup_cutout,
    sup_mixup,
)
from .errors import CutremainError, InvalidParameterError, ParseError
from .geometry import AspectRatioSet, BinaryMask, BoundingBox, rasterize_mask

DEFAULT_SEED = 1729


def _json_line(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)


def _flatten(payload: dict, prefix: str = "") -> dict:
    flat: dict = {}
    for key in sorted(payload):
        value = payload[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat |= _flatten(value, prefix=f"{name}.")
        elif isinstance(value, (list, tuple)):
            flat[name] = ";".join(str(v) for v in value)
        else:
            flat[name] = value
    return flat


def _emit_summary(args: argparse.Namespace, payload: dict) -> None:
    """One summary line (or csv header+row) on stdout."""
    if getattr(args, "out_format", "json") == "csv":
        flat = _flatten(payload)
        writer = csv.writer(sys.stdout)
        writer.writerow(flat.keys())
        writer.writerow(flat.values())
    else:
        print(_json_line(payload))


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=1) + "\n",
        encoding="utf-8",
    )


def _config_echo(args: argparse.Namespace) -> dict:
    skip = {"func"}
    echo = {k: v for k, v in vars(args).items() if k not in skip}
    echo["tool_version"] = __version__
    return echo


def _parse_ratio_list(text: str) -> AspectRatioSet:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as e:
        raise InvalidParameterError(f"bad ratio list {text!r}: {e}") from e
    return AspectRatioSet(values)


def _parse_float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as e:
        raise InvalidParameterError(f"bad numeric list {text!r}: {e}") from e


_SLUG_RE = re.compile(r"[^A-Za-z0-9._-]+")


def _slug(text: str) -> str:
    return _SLUG_RE.sub("-", text) or "sample"


# ---------------------------------------------------------------------------
# ingest / subset


def cmd_ingest(args: argparse.Namespace) -> int:
    path = Path(args.input)
    fmt = args.input_format
    if fmt == "auto":
        fmt = "csv" if path.suffix.lower() == ".csv" else "coco"
    text = path.read_text(encoding="utf-8")
    if fmt == "coco":
        manifest = dataset_mod.parse_coco(text)
    else:
        manifest = dataset_mod.parse_csv(
            text.splitlines(), size_lookup=dataset_mod.png_size_lookup(path.parent)
        )
    if args.split_vertical:
        background = None
        if args.background_label is not None:
            if args.background_label not in manifest.class_names:
                raise InvalidParameterError(
                    f"background label {args.background_label!r} not in class list"
                )
            background = Label.from_index(
                manifest.class_names.index(args.background_label), len(manifest.class_names)
            )
        manifest = dataset_mod.split_vertical_manifest(manifest, background_label=background)

    provenance = dict(manifest.provenance)
    provenance["config"] = _config_echo(args)
    manifest = dataset_mod.DatasetManifest(
        samples=manifest.samples,
        class_names=manifest.class_names,
        split=manifest.split,
        provenance=provenance,
    )
    manifest.save(args.out)
    _emit_summary(
        args,
        {
            "images": len(manifest),
            "boxes": sum(len(s.boxes) for s in manifest.samples),
            "classes": len(manifest.class_names),
            "out": str(args.out),
        },
    )
    return 0


def cmd_subset(args: argparse.Namespace) -> int:
    manifest = dataset_mod.DatasetManifest.load(args.manifest)
    categories = args.categories.split(",") if args.categories else None
    filtered, report = dataset_mod.build_small_subset(
        manifest, threshold=args.threshold, categories=categories
    )
    provenance = dict(filtered.provenance)
    provenance["config"] = _config_echo(args)
    filtered = dataset_mod.DatasetManifest(
        samples=filtered.samples,
        class_names=filtered.class_names,
        split=filtered.split,
        provenance=provenance,
    )
    filtered.save(args.out)
    _emit_summary(args, report.to_dict() | {"out": str(args.out)})
    return 0


# ---------------------------------------------------------------------------
# compose / augment


def cmd_compose(args: argparse.Namespace) -> int:
    manifest = dataset_mod.DatasetManifest.load(args.manifest)
    bm = batch_mod.compose(
        manifest,
        method=args.method,
        gamma=args.gamma,
        ratios=_parse_ratio_list(args.ratios),
        seed=args.seed,
        alpha=args.alpha,
    )
    bm.save(args.out)
    _emit_summary(
        args,
        {
            "entries": len(bm),
            "augmented_sources": len(bm.augmented_sources),
            "gamma": bm.gamma,
            "method": bm.method,
            "out": str(args.out),
        },
    )
    return 0


def _augment_file_name(index: int, entry: batch_mod.BatchEntry) -> str:
    parts = [f"{index:06d}", _slug(entry.source), entry.kind]
    if entry.rw is not None:
        parts.append(f"rw{entry.rw:g}_rh{entry.rh:g}")
    if entry.partner is not None:
        parts.append(f"with_{_slug(entry.partner)}")
    if entry.lam is not None:
        parts.append(f"lam{entry.lam:.6f}")
    if entry.seed is not None:
        parts.append(f"seed{entry.seed}")
    return "__".join(parts) + ".png"


def cmd_augment(args: argparse.Namespace) -> int:
    manifest = dataset_mod.DatasetManifest.load(args.manifest)
    root = Path(args.images_root) if args.images_root else Path(args.manifest).parent
    bm = batch_mod.compose(
        manifest,
        method=args.method,
        gamma=args.gamma,
        ratios=_parse_ratio_list(args.ratios),
        seed=args.seed,
        alpha=args.alpha,
    )
    out_dir = Path(args.out)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)

    records = []
    stream = batch_mod.materialize(bm, manifest, root=root, jobs=args.jobs)
    written = 0
    for index, (entry, sample) in enumerate(zip(bm.entries, stream)):
        if entry.kind == batch_mod.ENTRY_ORIGINAL:
            continue  # originals already exist on disk
        name = _augment_file_name(index, entry)
        pngio.save_image(images_dir / name, sample.image, bit_depth=args.bit_depth)
        label = sample.label
        records.append(
            {
                "file": name,
                "entry_index": index,
                "entry": entry.to_dict(),
                "provenance": sample.provenance.to_dict(),
                "label": {
                    "kind": label.kind,
                    "num_classes": label.num_classes,
                    "index": label.index,
                    "values": list(label.values),
                },
            }
        )
        written += 1

    with (out_dir / "records.jsonl").open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(_json_line(record) + "\n")
    bm.save(out_dir / "batch.jsonl")
    _write_json(out_dir / "run_config.json", _config_echo(args))
    _emit_summary(args, {"augmented": written, "out": str(out_dir)})
    return 0


# ---------------------------------------------------------------------------
# eval / similarity / probe reports


def cmd_eval(args: argparse.Namespace) -> int:
    score_ids, class_names, scores = metrics_mod.read_matrix_csv(args.scores)
    label_ids, label_cols, labels = metrics_mod.read_matrix_csv(args.labels)
    if score_ids != label_ids:
        raise InvalidParameterError("score and label rows disagree (ids or order differ)")
    if class_names != label_cols:
        raise InvalidParameterError("score and label column headers differ")
    preds = metrics_mod.PredictionSet(scores, labels, threshold=args.threshold)

    per_class: dict[str, dict] = {}
    auc_excluded: list[str] = []
    decided = (scores >= args.threshold).astype(int)
    for k, name in enumerate(class_names):
        entry: dict = {"positives": int(labels[:, k].sum())}
        try:
            entry["auc"] = metrics_mod.auc_roc(scores[:, k], labels[:, k])
        except CutremainError:
            entry["auc"] = None
            auc_excluded.append(name)
        entry["f1"] = metrics_mod.f1(decided[:, k], labels[:, k].astype(int))
        per_class[name] = entry

    aggregates: dict = {
        "macro_f1": float(np.mean([c["f1"] for c in per_class.values()])),
    }
    defined_auc = [c["auc"] for c in per_class.values() if c["auc"] is not None]
    aggregates["macro_auc"] = float(np.mean(defined_auc)) if defined_auc else None

    ap_excluded: list[str] = []
    if preds.num_classes >= 2:
        suite = metrics_mod.multilabel_suite(preds)
        aggregates |= {"mAP": suite.map, "CF1": suite.cf1, "OF1": suite.of1}
        for k, name in enumerate(class_names):
            per_class[name]["ap"] = suite.per_class_ap[k]
        ap_excluded = [class_names[k] for k in suite.excluded_classes]

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = {
        "aggregates": aggregates,
        "per_class": per_class,
        "excluded": {"ap": ap_excluded, "auc": auc_excluded},
        "threshold": args.threshold,
        "inputs": {
            "scores": {"path": str(args.scores), "sha256": metrics_mod.file_digest(args.scores)},
            "labels": {"path": str(args.labels), "sha256": metrics_mod.file_digest(args.labels)},
        },
        "config": _config_echo(args),
    }
    _write_json(out_dir / "report.json", report)

    with (out_dir / "metrics.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        keys = sorted({k for c in per_class.values() for k in c})
        writer.writerow(["class", *keys])
        for name in class_names:
            writer.writerow([name, *[per_class[name].get(k) for k in keys]])

    if not args.no_figures and preds.num_classes >= 2:
        from . import plots  # deferred: matplotlib is heavy and report-only

        plots.save_class_bars(
            class_names,
            [per_class[n].get("ap") for n in class_names],
            "average precision",
            out_dir / "per_class_ap.png",
        )
    _emit_summary(args, {"aggregates": aggregates, "out": str(out_dir)})
    return 0


def cmd_similarity(args: argparse.Namespace) -> int:
    orig_ids, _, originals = metrics_mod.read_matrix_csv(args.originals)
    aug_ids, _, augmented = metrics_mod.read_matrix_csv(args.augmented)
    if orig_ids != aug_ids:
        raise InvalidParameterError("original and augmented rows disagree (ids or order differ)")
    report = metrics_mod.pairwise_feature_report(originals, augmented)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = report.to_dict() | {
        "inputs": {
            "originals": {"path": str(args.originals), "sha256": metrics_mod.file_digest(args.originals)},
            "augmented": {"path": str(args.augmented), "sha256": metrics_mod.file_digest(args.augmented)},
        },
        "config": _config_echo(args),
    }
    _write_json(out_dir / "report.json", payload)

    with (out_dir / "similarity.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "euclidean", "cosine"])
        for sid, u, v in zip(orig_ids, originals, augmented):
            writer.writerow(
                [sid, metrics_mod.euclidean_distance(u, v), metrics_mod.cosine_distance(u, v)]
            )

    if not args.no_figures:
        from . import plots

        plots.save_similarity_bars(
            {
                "euclidean": (report.euclidean_mean, report.euclidean_std),
                "cosine": (report.cosine_mean, report.cosine_std),
            },
            out_dir / "similarity.png",
        )
    _emit_summary(
        args,
        {
            "euclidean_mean": report.euclidean_mean,
            "cosine_mean": report.cosine_mean,
            "out": str(out_dir),
        },
    )
    return 0


def cmd_probe(args: argparse.Namespace) -> int:
    task = probe.SyntheticTask(target_delta=args.delta, jitter=args.jitter)
    report = probe.run_experiment(
        task=task,
        n_train=args.train,
        n_test=args.test,
        gammas=_parse_float_list(args.gammas),
        seeds=args.seeds,
        params=probe.ProbeParams(epochs=args.epochs),
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = report.to_dict() | {"config": _config_echo(args)}
    _write_json(out_dir / "report.json", payload)

    with (out_dir / "probe.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", *[f"gamma_{g:g}" for g in report.gammas]])
        for seed, row in zip(report.seeds, report.auc):
            writer.writerow([seed, *row])

    if not args.no_figures:
        from . import plots

        plots.save_gamma_curve(
            report.gammas, report.mean_auc, report.auc, out_dir / "auc_vs_gamma.png"
        )
    _emit_summary(
        args,
        {
            "baseline_mean": report.baseline_mean,
            "top_mean": report.top_mean,
            "mean_difference": report.mean_difference,
            "out": str(out_dir),
        },
    )
    return 0


# ---------------------------------------------------------------------------
# kernel endpoint (machine interface for the buffer bindings)


def _encode_array(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr).tobytes()).decode("ascii")


def _image_to_wire(arr: np.ndarray) -> dict:
    return {
        "width": arr.shape[1],
        "height": arr.shape[0],
        "channels": arr.shape[2],
        "dtype": "float64",
        "data": _encode_array(arr.astype("<f8")),
    }


def _image_from_wire(doc: dict, name: str) -> np.ndarray:
    try:
        w, h, c = int(doc["width"]), int(doc["height"]), int(doc["channels"])
        raw = base64.b64decode(doc["data"], validate=True)
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"{name}: bad image payload ({e})") from e
    expected = w * h * c * 8
    if len(raw) != expected:
        raise ParseError(f"{name}: payload holds {len(raw)} bytes, expected {expected}")
    return np.frombuffer(raw, dtype="<f8").reshape(h, w, c).astype(np.float64)


def _mask_to_wire(mask: BinaryMask) -> dict:
    return {"width": mask.width, "height": mask.height, "data": _encode_array(mask.values)}


def _mask_from_wire(doc: dict, name: str) -> BinaryMask:
    try:
        w, h = int(doc["width"]), int(doc["height"])
        raw = base64.b64decode(doc["data"], validate=True)
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"{name}: bad mask payload ({e})") from e
    if len(raw) != w * h:
        raise ParseError(f"{name}: payload holds {len(raw)} bytes, expected {w * h}")
    return BinaryMask(np.frombuffer(raw, dtype=np.uint8).reshape(h, w))


def _label_to_wire(label: Label) -> dict:
    doc: dict = {"kind": label.kind, "num_classes": label.num_classes}
    if label.kind == "index":
        doc["index"] = label.index
    else:
        doc["values"] = list(label.values)
    return doc


def _label_from_wire(doc: dict, name: str) -> Label:
    try:
        kind = doc["kind"]
        if kind == "index":
            return Label.from_index(int(doc["index"]), int(doc["num_classes"]))
        return Label(kind, int(doc["num_classes"]), values=tuple(doc["values"]))
    except (KeyError, TypeError) as e:
        raise ParseError(f"{name}: bad label payload ({e})") from e


def _boxes_from_wire(doc: list, name: str) -> list[BoundingBox]:
    try:
        return [BoundingBox(*[float(v) for v in quad]) for quad in doc]
    except (TypeError, ValueError) as e:
        raise ParseError(f"{name}: bad box list ({e})") from e


def _sample_to_wire(sample) -> dict:
    return {
        "image": _image_to_wire(sample.image),
        "label": _label_to_wire(sample.label),
        "provenance": sample.provenance.to_dict(),
    }


def dispatch_kernel_request(request: dict) -> dict:
    """Run one kernel request; errors come back in-band, never as exceptions."""
    try:
        op = request.get("op")
        if op == "rasterize_mask":
            mask = rasterize_mask(
                _boxes_from_wire(request.get("boxes", []), "boxes"),
                width=int(request["width"]),
                height=int(request["height"]),
            )
            return {"ok": True, "mask": _mask_to_wire(mask)}
        if op == "cut_and_remain":
            samples = cut_and_remain(
                _image_from_wire(request["image"], "image"),
                _label_from_wire(request["label"], "label"),
                _boxes_from_wire(request.get("boxes", []), "boxes"),
                ratios=AspectRatioSet(tuple(request.get("ratios") or (1.0, 1.5, 2.0))),
                source_id=str(request.get("source_id", "")),
            )
            return {"ok": True, "samples": [_sample_to_wire(s) for s in samples]}
        if op == "sup_mixup":
            seed = request.get("seed")
            rng = np.random.default_rng(seed) if seed is not None else None
            sample = sup_mixup(
                _image_from_wire(request["image_a"], "image_a"),
                _label_from_wire(request["label_a"], "label_a"),
                _mask_from_wire(request["mask_a"], "mask_a"),
                _image_from_wire(request["image_b"], "image_b"),
                _label_from_wire(request["label_b"], "label_b"),
                _mask_from_wire(request["mask_b"], "mask_b"),
                params=MixParams(lam=request.get("lam"), alpha=request.get("alpha", 1.0)),
                rng=rng,
            )
            return {"ok": True, "sample": _sample_to_wire(sample)}
        if op == "sup_cutout":
            seed = request.get("seed")
            sample = sup_cutout(
                _image_from_wire(request["image"], "image"),
                _label_from_wire(request["label"], "label"),
                _mask_from_wire(request["mask"], "mask"),
                side=request.get("side"),
                rng=int(seed) if seed is not None else 0,
            )
            return {"ok": True, "sample": _sample_to_wire(sample)}
        if op == "sup_cutmix":
            sample = sup_cutmix(
                _image_from_wire(request["image_a"], "image_a"),
                _label_from_wire(request["label_a"], "label_a"),
                _mask_from_wire(request["mask_a"], "mask_a"),
                _image_from_wire(request["image_b"], "image_b"),
                _label_from_wire(request["label_b"], "label_b"),
            )
            return {"ok": True, "sample": _sample_to_wire(sample)}
        raise ParseError(f"unknown op {op!r}")
    except (CutremainError, KeyError, TypeError, ValueError) as e:
        kind = type(e).__name__ if isinstance(e, CutremainError) else "ParseError"
        return {"ok": False, "error": {"kind": kind, "message": str(e)}}


def cmd_kernel(args: argparse.Namespace) -> int:
    source = Path(args.infile).open("r", encoding="utf-8") if args.infile else sys.stdin
    try:
        for line in source:
            line = line.strip()
            if not line:
                continue
            try:
                request = json.loads(line)
            except json.JSONDecodeError as e:
                response = {
                    "ok": False,
                    "error": {"kind": "ParseError", "message": f"bad JSON at byte {e.pos}: {e.msg}"},
                }
            else:
                response = dispatch_kernel_request(request)
            sys.stdout.write(_json_line(response) + "\n")
        sys.stdout.flush()
    finally:
        if args.infile:
            source.close()
    return 0


# ---------------------------------------------------------------------------
# parity corpus


def _random_image_wire(rng: np.random.Generator, w: int, h: int, c: int) -> dict:
    # Quantized intensities so 8-bit round trips stay exact if ever rendered.
    arr = rng.integers(0, 256, size=(h, w, c)).astype(np.float64) / 255.0
    return _image_to_wire(arr)


def _random_mask_wire(rng: np.random.Generator, w: int, h: int) -> dict:
    x0 = int(rng.integers(0, w - 1))
    y0 = int(rng.integers(0, h - 1))
    x1 = int(rng.integers(x0 + 1, w + 1))
    y1 = int(rng.integers(y0 + 1, h + 1))
    values = np.zeros((h, w), dtype=np.uint8)
    values[y0:y1, x0:x1] = 1
    if values.all():  # keep some free space for cutout placements
        values[0, 0] = 0
    return _mask_to_wire(BinaryMask(values))


def _random_box(rng: np.random.Generator, w: int, h: int) -> list[float]:
    return [
        float(rng.uniform(0, w)),
        float(rng.uniform(0, h)),
        float(rng.uniform(1, w)),
        float(rng.uniform(1, h)),
    ]


def build_parity_corpus(seed: int, per_kernel: int) -> list[dict]:
    """Kernel requests plus their expected responses, spanning every error path."""
    rng = np.random.default_rng(seed)
    fixtures: list[dict] = []

    def add(name: str, request: dict) -> None:
        fixtures.append({"name": name, "request": request, "expected": dispatch_kernel_request(request)})

    label_a = {"kind": "index", "index": 0, "num_classes": 3}
    label_b = {"kind": "index", "index": 2, "num_classes": 3}

    for i in range(per_kernel):
        w = int(rng.integers(4, 33))
        h = int(rng.integers(4, 33))
        c = int(rng.choice((1, 3)))
        boxes = [_random_box(rng, w, h) for _ in range(int(rng.integers(1, 4)))]
        add(f"rasterize_{i:03d}", {"op": "rasterize_mask", "width": w, "height": h, "boxes": boxes})
        add(
            f"cut_and_remain_{i:03d}",
            {
                "op": "cut_and_remain",
                "image": _random_image_wire(rng, w, h, c),
                "label": label_a,
                "boxes": boxes,
                "ratios": [1.0, 1.5, 2.0] if i % 2 == 0 else [1.0],
                "source_id": f"fx{i}",
            },
        )
        add(
            f"sup_mixup_{i:03d}",
            {
                "op": "sup_mixup",
                "image_a": _random_image_wire(rng, w, h, c),
                "label_a": label_a,
                "mask_a": _random_mask_wire(rng, w, h),
                "image_b": _random_image_wire(rng, w, h, c),
                "label_b": label_b,
                "mask_b": _random_mask_wire(rng, w, h),
                "lam": float(rng.uniform()) if i % 3 else None,
                "alpha": 1.0,
                "seed": int(rng.integers(0, 2**31)),
            },
        )
        add(
            f"sup_cutout_{i:03d}",
            {
                "op": "sup_cutout",
                "image": _random_image_wire(rng, w, h, c),
                "label": label_a,
                "mask": _random_mask_wire(rng, w, h),
                "side": None if i % 2 else max(1, min(w, h) // 4),
                "seed": int(rng.integers(0, 2**31)),
            },
        )
        add(
            f"sup_cutmix_{i:03d}",
            {
                "op": "sup_cutmix",
                "image_a": _random_image_wire(rng, w, h, c),
                "label_a": label_a,
                "mask_a": _random_mask_wire(rng, w, h),
                "image_b": _random_image_wire(rng, w, h, c),
                "label_b": label_b,
            },
        )

    # Error paths, one fixture per error kind and kernel.
    img8 = _random_image_wire(rng, 8, 8, 1)
    img6 = _random_image_wire(rng, 6, 6, 1)
    mask8 = _random_mask_wire(rng, 8, 8)
    empty_mask = _mask_to_wire(BinaryMask(np.zeros((8, 8), dtype=np.uint8)))
    ones_mask = _mask_to_wire(BinaryMask(np.ones((8, 8), dtype=np.uint8)))
    add("err_rasterize_outside", {"op": "rasterize_mask", "width": 8, "height": 8, "boxes": [[100, 100, 2, 2]]})
    add("err_rasterize_no_boxes", {"op": "rasterize_mask", "width": 8, "height": 8, "boxes": []})
    add("err_rasterize_bad_box", {"op": "rasterize_mask", "width": 8, "height": 8, "boxes": [[4, 4, 0, 2]]})
    add(
        "err_cut_and_remain_outside",
        {"op": "cut_and_remain", "image": img8, "label": label_a, "boxes": [[50, 50, 2, 2]], "ratios": [1.0]},
    )
    add(
        "err_cut_and_remain_bad_ratio",
        {"op": "cut_and_remain", "image": img8, "label": label_a, "boxes": [[4, 4, 2, 2]], "ratios": [1.0, 0.0]},
    )
    add(
        "err_mixup_shape",
        {
            "op": "sup_mixup",
            "image_a": img8,
            "label_a": label_a,
            "mask_a": mask8,
            "image_b": img6,
            "label_b": label_b,
            "mask_b": mask8,
            "lam": 0.5,
        },
    )
    add(
        "err_mixup_no_lam_no_seed",
        {
            "op": "sup_mixup",
            "image_a": img8,
            "label_a": label_a,
            "mask_a": mask8,
            "image_b": img8,
            "label_b": label_b,
            "mask_b": mask8,
            "lam": None,
        },
    )
    add(
        "err_cutout_all_ones",
        {"op": "sup_cutout", "image": img8, "label": label_a, "mask": ones_mask, "side": 2, "seed": 1},
    )
    add(
        "err_cutout_empty_mask",
        {"op": "sup_cutout", "image": img8, "label": label_a, "mask": empty_mask, "side": 2, "seed": 1},
    )
    add(
        "err_cutout_side_too_big",
        {"op": "sup_cutout", "image": img8, "label": label_a, "mask": mask8, "side": 99, "seed": 1},
    )
    add(
        "err_cutmix_empty_mask",
        {"op": "sup_cutmix", "image_a": img8, "label_a": label_a, "mask_a": empty_mask, "image_b": img8, "label_b": label_b},
    )
    add(
        "err_cutmix_shape",
        {"op": "sup_cutmix", "image_a": img8, "label_a": label_a, "mask_a": mask8, "image_b": img6, "label_b": label_b},
    )
    add("err_unknown_op", {"op": "no_such_kernel"})
    return fixtures


def cmd_parity(args: argparse.Namespace) -> int:
    fixtures = build_parity_corpus(seed=args.seed, per_kernel=args.per_kernel)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for fixture in fixtures:
            fh.write(_json_line(fixture) + "\n")
    print(_json_line({"fixtures": len(fixtures), "out": str(out)}))
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_format_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", dest="out_format", choices=("json", "csv"), default="json",
                   help="stdout summary format (reports on disk are unaffected)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cutremain",
        description="Deterministic region-supervised augmentation engine.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse annotations into a canonical manifest")
    p.add_argument("input", help="instance JSON or annotation CSV")
    p.add_argument("--input-format", choices=("auto", "coco", "csv"), default="auto",
                   help="input format (auto: by file extension)")
    p.add_argument("--split-vertical", action="store_true",
                   help="cut every image in half vertically, doubling the sample count")
    p.add_argument("--background-label", default=None,
                   help="label name for halves left without boxes (default: keep the sample label)")
    p.add_argument("--out", required=True, help="manifest JSON to write")
    _add_format_flag(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("subset", help="keep images whose annotated objects are small on average")
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p.add_argument("--threshold", type=float, default=dataset_mod.SMALL_OBJECT_THRESHOLD,
                   help="mean relative-area cutoff (default %(default)s)")
    p.add_argument("--categories", default=None, help="comma-separated class names to restrict to")
    p.add_argument("--out", required=True, help="filtered manifest JSON to write")
    _add_format_flag(p)
    p.set_defaults(func=cmd_subset)

    p = sub.add_parser("compose", help="write a seeded batch manifest (recipe only)")
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p.add_argument("--method", choices=AUGMENT_METHODS, default="cut-and-remain",
                   help="augmentation kernel to schedule")
    p.add_argument("--gamma", type=float, default=1.0, help="fraction of samples to augment")
    p.add_argument("--ratios", default="1.0,1.5,2.0", help="comma-separated scale factors")
    p.add_argument("--alpha", type=float, default=1.0, help="Beta shape for mixup lambda draws")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (fixed default keeps unseeded runs replayable)")
    p.add_argument("--out", required=True, help="batch manifest JSONL to write")
    _add_format_flag(p)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("augment", help="materialize augmented samples as PNGs plus sidecar records")
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p.add_argument("--images-root", default=None, help="directory image paths are relative to")
    p.add_argument("--method", choices=AUGMENT_METHODS, default="cut-and-remain",
                   help="augmentation kernel to apply")
    p.add_argument("--gamma", type=float, default=1.0, help="fraction of samples to augment")
    p.add_argument("--ratios", default="1.0,1.5,2.0", help="comma-separated scale factors")
    p.add_argument("--alpha", type=float, default=1.0, help="Beta shape for mixup lambda draws")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (output independent of this)")
    p.add_argument("--bit-depth", type=int, choices=(8, 16), default=8,
                   help="PNG bit depth (16 is grayscale only)")
    p.add_argument("--out", required=True, help="output directory")
    _add_format_flag(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("eval", help="score predictions: ranking AUC, F1, mAP/CF1/OF1")
    p.add_argument("--scores", required=True, help="CSV: id column then per-class scores")
    p.add_argument("--labels", required=True, help="CSV: id column then per-class binary labels")
    p.add_argument("--threshold", type=float, default=metrics_mod.DEFAULT_THRESHOLD,
                   help="decision cut for the F1-type metrics")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figure rendering")
    p.add_argument("--out", required=True, help="output directory")
    _add_format_flag(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("similarity", help="feature-vector distances between matched sample pairs")
    p.add_argument("--originals", required=True, help="CSV of original-sample feature vectors")
    p.add_argument("--augmented", required=True, help="CSV of augmented-sample feature vectors")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figure rendering")
    p.add_argument("--out", required=True, help="output directory")
    _add_format_flag(p)
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("probe", help="synthetic directional experiment: masked training vs baseline")
    p.add_argument("--seeds", type=int, default=5, help="number of experiment repetitions")
    p.add_argument("--train", type=int, default=500, help="training set size per seed")
    p.add_argument("--test", type=int, default=500, help="held-out test set size per seed")
    p.add_argument("--gammas", default="0.0,1.0", help="comma-separated augmentation ratios")
    p.add_argument("--delta", type=float, default=probe.SyntheticTask.target_delta,
                   help="target intensity above background")
    p.add_argument("--jitter", type=int, default=probe.SyntheticTask.jitter,
                   help="max target offset from the image center")
    p.add_argument("--epochs", type=int, default=probe.ProbeParams.epochs,
                   help="training epochs per cell")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figure rendering")
    p.add_argument("--out", required=True, help="output directory")
    _add_format_flag(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("kernel", help="JSON-lines kernel endpoint for buffer bindings")
    p.add_argument("--in", dest="infile", default=None, help="request file (default: stdin)")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("parity", help="freeze a kernel parity corpus with expected responses")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="corpus seed")
    p.add_argument("--per-kernel", type=int, default=50,
                   help="random fixtures per kernel (error paths are always included)")
    p.add_argument("--out", required=True, help="corpus JSONL to write")
    p.set_defaults(func=cmd_parity)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CutremainError, OSError) as e:
        sys.stderr.write(_json_line({"error": type(e).__name__, "message": str(e)}) + "\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
