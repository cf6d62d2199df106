"""Reproducible batch-manifest composition and materialization.

A batch manifest is the unit of reproducibility: an ordered recipe listing
every original sample once plus augmentation instructions for a seeded
fraction gamma of the dataset.  All randomness (which samples are selected,
pairing partners, mixing coefficients, cutout seeds, final order) is fixed
at composition time and recorded per entry, so materializing the manifest
twice, at any parallelism degree, yields bit-identical streams.

Selection is nested across gamma: with a shared master seed, the samples
selected at a smaller gamma are a prefix of those selected at a larger one,
which keeps gamma sweeps comparisons of gamma alone.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Mapping

import numpy as np

from ._version import __version__ as _tool_version
from .augment import (
    AUGMENT_METHODS,
    METHOD_CUT_AND_REMAIN,
    METHOD_SUP_CUTMIX,
    METHOD_SUP_CUTOUT,
    METHOD_SUP_MIXUP,
    AugmentedSample,
    MixParams,
    Provenance,
    check_image,
    cut_and_remain_pair,
    sup_cutmix,
    sup_cutout,
    sup_mixup,
)
from .dataset import AnnotatedSample, DatasetManifest, images_from_mapping
from .errors import CutremainError, InvalidParameterError, ManifestError, ParseError
from .geometry import AspectRatioSet, rasterize_mask

BATCH_SCHEMA = "batch-manifest/1"

ENTRY_ORIGINAL = "original"


@dataclass(frozen=True)
class BatchEntry:
    """One line of the recipe: an original or one augmentation instruction."""

    kind: str
    source: str
    rw: float | None = None
    rh: float | None = None
    partner: str | None = None
    lam: float | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind, "source": self.source}
        for key in ("rw", "rh", "partner", "lam", "seed"):
            value = getattr(self, key)
            if value is not None:
                d[key] = value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BatchEntry":
        return cls(
            kind=d["kind"],
            source=d["source"],
            rw=d.get("rw"),
            rh=d.get("rh"),
            partner=d.get("partner"),
            lam=d.get("lam"),
            seed=d.get("seed"),
        )


@dataclass(frozen=True)
class BatchManifest:
    entries: tuple[BatchEntry, ...]
    master_seed: int
    method: str
    gamma: float
    ratios: tuple[float, ...]
    batch_size: int | None = None
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def augmented_sources(self) -> set[str]:
        """Ids of samples that contribute at least one augmented entry."""
        return {e.source for e in self.entries if e.kind != ENTRY_ORIGINAL}

    def save(self, path: str | Path) -> None:
        """Serialize as JSON-lines: a header line, then one entry per line."""
        header = {
            "schema": BATCH_SCHEMA,
            "tool_version": _tool_version,
            "seed": self.master_seed,
            "method": self.method,
            "gamma": self.gamma,
            "ratios": list(self.ratios),
            "batch_size": self.batch_size,
            "entries": len(self.entries),
        }
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n")
            for entry in self.entries:
                fh.write(json.dumps(entry.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "BatchManifest":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines:
            raise ParseError("empty batch manifest")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as e:
            raise ParseError(f"malformed batch header at byte {e.pos}: {e.msg}") from e
        if header.get("schema") != BATCH_SCHEMA:
            raise ParseError(f"unexpected batch schema {header.get('schema')!r}")
        entries = []
        for i, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                entries.append(BatchEntry.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as e:
                raise ParseError(f"line {i}: bad batch entry ({e})") from e
        if len(entries) != header.get("entries"):
            raise ParseError(
                f"header announces {header.get('entries')} entries, found {len(entries)}"
            )
        return cls(
            entries=tuple(entries),
            master_seed=header["seed"],
            method=header["method"],
            gamma=header["gamma"],
            ratios=tuple(header["ratios"]),
            batch_size=header.get("batch_size"),
        )


def _entry_seed(master_seed: int, index: int) -> int:
    """Deterministic per-entry seed derived from (master seed, entry index)."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


def _floor_fraction(gamma: float, n: int) -> int:
    """floor(gamma*n), tolerating float products a hair under an integer."""
    return int(gamma * n + 1e-9)


def compose(
    manifest: DatasetManifest,
    method: str,
    gamma: float,
    ratios: AspectRatioSet | None = None,
    seed: int = 0,
    alpha: float = 1.0,
    batch_size: int | None = None,
) -> BatchManifest:
    """Build the seeded recipe of originals plus augmentation instructions.

    Every sample appears once as an original.  floor(gamma * N) annotated
    samples additionally contribute augmented entries: one per (rw, rh)
    ratio pair for the region-keep method, one entry for each baseline.
    Pairing partners and mixing coefficients are drawn here and recorded,
    and the final entry order is a seeded permutation.
    """
    if not (0.0 <= gamma <= 1.0):
        raise InvalidParameterError(f"gamma must lie in [0, 1], got {gamma}")
    if method not in AUGMENT_METHODS:
        raise InvalidParameterError(f"unknown method {method!r}; expected one of {AUGMENT_METHODS}")
    ratios = ratios or AspectRatioSet()
    samples = manifest.samples
    if method in (METHOD_SUP_MIXUP, METHOD_SUP_CUTMIX) and len(samples) < 2:
        raise InvalidParameterError(f"{method} needs at least 2 samples to pair, got {len(samples)}")

    # Only annotated samples can be augmented; with a fully annotated
    # manifest the pool is the whole dataset.
    pool = [s.sample_id for s in samples if s.boxes]
    ids = [s.sample_id for s in samples]

    ss = np.random.SeedSequence(seed)
    sel_ss, partner_ss, lam_ss, shuffle_ss = ss.spawn(4)

    # Selection depends on the master seed only, so smaller-gamma selections
    # are prefixes of larger-gamma ones.
    perm = np.random.default_rng(sel_ss).permutation(len(pool))
    count = _floor_fraction(gamma, len(pool))
    chosen = [pool[i] for i in perm[:count]]

    partner_rng = np.random.default_rng(partner_ss)
    lam_rng = np.random.default_rng(lam_ss)

    entries: list[BatchEntry] = [BatchEntry(ENTRY_ORIGINAL, sid) for sid in ids]
    for aug_index, sid in enumerate(chosen):
        if method == METHOD_CUT_AND_REMAIN:
            for rw, rh in ratios.pairs():
                entries.append(BatchEntry(method, sid, rw=rw, rh=rh))
        elif method == METHOD_SUP_MIXUP:
            partner = _draw_partner(partner_rng, ids, sid)
            lam = float(lam_rng.beta(alpha, alpha))
            entries.append(BatchEntry(method, sid, partner=partner, lam=lam))
        elif method == METHOD_SUP_CUTOUT:
            entries.append(BatchEntry(method, sid, seed=_entry_seed(seed, aug_index)))
        else:  # sup-cutmix
            partner = _draw_partner(partner_rng, ids, sid)
            entries.append(BatchEntry(method, sid, partner=partner))

    order = np.random.default_rng(shuffle_ss).permutation(len(entries))
    return BatchManifest(
        entries=tuple(entries[i] for i in order),
        master_seed=seed,
        method=method,
        gamma=gamma,
        ratios=ratios.ratios,
        batch_size=batch_size,
    )


def _draw_partner(rng: np.random.Generator, ids: list[str], sid: str) -> str:
    """Uniform partner among the other samples."""
    others = [i for i in ids if i != sid]
    return others[int(rng.integers(0, len(others)))]


def _raw_mask(sample: AnnotatedSample, image: np.ndarray):
    if not sample.boxes:
        raise ManifestError(f"sample {sample.sample_id} has no annotation boxes")
    return rasterize_mask(sample.boxes, width=image.shape[1], height=image.shape[0])


def _materialize_entry(
    entry: BatchEntry,
    manifest: DatasetManifest,
    load: Callable[[AnnotatedSample], np.ndarray],
) -> AugmentedSample:
    sample = manifest.sample(entry.source)
    image = check_image(load(sample), name=f"image of {sample.sample_id}")
    if entry.kind == ENTRY_ORIGINAL:
        return AugmentedSample(
            image=image,
            label=sample.label,
            provenance=Provenance(ENTRY_ORIGINAL, None, (sample.sample_id,), None),
        )
    if entry.kind == METHOD_CUT_AND_REMAIN:
        return cut_and_remain_pair(
            image, sample.label, sample.boxes, entry.rw, entry.rh, source_id=sample.sample_id
        )
    if entry.kind == METHOD_SUP_CUTOUT:
        out = sup_cutout(image, sample.label, _raw_mask(sample, image), rng=entry.seed)
        return AugmentedSample(
            image=out.image,
            label=out.label,
            provenance=Provenance(METHOD_SUP_CUTOUT, None, (sample.sample_id,), entry.seed),
        )

    partner = manifest.sample(entry.partner)
    partner_image = check_image(load(partner), name=f"image of {partner.sample_id}")
    if entry.kind == METHOD_SUP_MIXUP:
        return sup_mixup(
            image,
            sample.label,
            _raw_mask(sample, image),
            partner_image,
            partner.label,
            _raw_mask(partner, partner_image),
            params=MixParams(lam=entry.lam),
            source_ids=(sample.sample_id, partner.sample_id),
        )
    if entry.kind == METHOD_SUP_CUTMIX:
        return sup_cutmix(
            image,
            sample.label,
            _raw_mask(sample, image),
            partner_image,
            partner.label,
            source_ids=(sample.sample_id, partner.sample_id),
        )
    raise ManifestError(f"unknown entry kind {entry.kind!r}")


def materialize(
    batch: BatchManifest,
    manifest: DatasetManifest,
    images: Mapping[str, np.ndarray] | Callable[[AnnotatedSample], np.ndarray] | None = None,
    root: str | Path = ".",
    jobs: int = 1,
) -> Iterator[AugmentedSample]:
    """Execute the recipe, yielding samples in manifest order.

    ``images`` maps sample ids to arrays, or is a loader callable; when
    None, pixels are read from each sample's image path under ``root``.
    Entries may be computed in parallel (``jobs`` > 1) but the stream order
    and content are independent of the job count.
    """
    load = images_from_mapping(manifest, images, root=root)

    def run(indexed: tuple[int, BatchEntry]) -> AugmentedSample:
        i, entry = indexed
        try:
            return _materialize_entry(entry, manifest, load)
        except (CutremainError, OSError) as e:
            raise type(e)(
                f"batch entry {i} ({entry.kind} of {entry.source!r}): {e}"
            ) from e

    work = list(enumerate(batch.entries))
    if jobs <= 1:
        for item in work:
            yield run(item)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            yield from pool.map(run, work)


def expected_entry_count(n: int, gamma: float, method: str, ratio_count: int) -> int:
    """N originals plus floor(gamma*N) augmented contributions."""
    per_sample = ratio_count**2 if method == METHOD_CUT_AND_REMAIN else 1
    return n + _floor_fraction(gamma, n) * per_sample
