"""Batch label-construction pipeline over a manifest of image pairs.

Each manifest line names an (original, tampered[, guide-mask]) triple plus
optional key=value metadata.  Pairs are processed independently: rectify,
difference, threshold, filter chain; the per-pair difference map and
binary label land as PNGs and the metadata as one JSON line.  Finished
pairs are detected by their output files, so a killed run resumes where
it stopped and reruns leave existing outputs untouched.
"""

from __future__ import annotations

import dataclasses
import hashlib
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .concentration import concentration_scores
from .config import PipelineConfig
from .curation import run_filter_chain
from .labeling import LabelArtifacts, size_bucket, threshold_label
from .labeling import diff_map as compute_diff_map
from .raster import (
    BinaryLabel,
    FloatMap,
    load_float_map,
    load_image,
    save_float_map,
    save_mask,
)
from .records import EditDescriptor, Manipulation, SamplePaths, SampleRecord
from .rectify import rectify_pair

logger = logging.getLogger(__name__)

DIFF_DIR = "diff"
LABEL_DIR = "labels"
RECORDS_FILE = "records.jsonl"


class ManifestError(ValueError):
    """The pairs manifest cannot be parsed."""


@dataclasses.dataclass(frozen=True)
class PairSpec:
    id: str
    original: str
    tampered: str
    guide_mask: str | None = None
    manipulation: Manipulation | None = None
    orig_class: str = "unknown"
    repl_class: str | None = None
    vlm_fidelity: int | None = None
    generator: str = "unknown"


def parse_manifest(path) -> list[PairSpec]:
    """TSV manifest: original, tampered, [guide-mask], [key=value ...]."""
    pairs = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 2:
            raise ManifestError(f"line {lineno}: need at least two path columns")
        original, tampered = cols[0].strip(), cols[1].strip()
        guide = None
        extras: dict[str, str] = {}
        for col in cols[2:]:
            col = col.strip()
            if not col:
                continue
            if "=" in col:
                key, _, val = col.partition("=")
                extras[key.strip()] = val.strip()
            elif guide is None:
                guide = col
            else:
                raise ManifestError(f"line {lineno}: more than one guide-mask column")
        manipulation = None
        if "manipulation" in extras:
            try:
                manipulation = Manipulation(extras["manipulation"])
            except ValueError as exc:
                raise ManifestError(f"line {lineno}: {exc}") from exc
        vlm = None
        if "vlm" in extras:
            try:
                vlm = int(extras["vlm"])
            except ValueError as exc:
                raise ManifestError(f"line {lineno}: vlm must be an integer") from exc
        pairs.append(
            PairSpec(
                id=extras.get("id", f"{lineno - 1:06d}-{Path(tampered).stem}"),
                original=original,
                tampered=tampered,
                guide_mask=guide,
                manipulation=manipulation,
                orig_class=extras.get("class", "unknown"),
                repl_class=extras.get("repl"),
                vlm_fidelity=vlm,
                generator=extras.get("generator", "unknown"),
            )
        )
    seen: set[str] = set()
    for p in pairs:
        if p.id in seen:
            raise ManifestError(f"duplicate pair id {p.id!r}")
        seen.add(p.id)
    return pairs


def pair_seed(base_seed: int, pair_id: str) -> int:
    digest = hashlib.sha256(f"{base_seed}:{pair_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little") % (2**32)


def _atomic_save(save_fn, obj, path: Path):
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    os.close(fd)
    try:
        save_fn(obj, tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def quantize_16bit(diff: FloatMap) -> FloatMap:
    """Snap to the 16-bit PNG grid so in-memory and reloaded maps agree."""
    return FloatMap(np.rint(np.clip(diff.values, 0.0, 1.0) * 65535.0) / 65535.0)


def _load_guide(path: str) -> BinaryLabel:
    raster = load_image(path)
    return BinaryLabel(raster.data.max(axis=2) > 0.5)


def process_pair(
    pair: PairSpec, cfg: PipelineConfig, out_dir: Path, force: bool = False
) -> SampleRecord:
    """Produce the diff/label PNGs and the filtered record for one pair."""
    diff_path = out_dir / DIFF_DIR / f"{pair.id}.png"
    label_path = out_dir / LABEL_DIR / f"{pair.id}.png"
    done = diff_path.exists() and label_path.exists() and not force

    if done:
        diff = load_float_map(diff_path)
    else:
        orig = load_image(pair.original)
        gen = load_image(pair.tampered)
        rect_cfg = dataclasses.replace(
            cfg.rectify, seed=pair_seed(cfg.rectify.seed, pair.id)
        )
        result = rectify_pair(orig, gen, rect_cfg)
        diff = quantize_16bit(compute_diff_map(orig, result.aligned, cfg.diff_reduce))
        _atomic_save(save_float_map, diff, diff_path)

    label = threshold_label(diff, cfg.tau)
    if not done:
        _atomic_save(save_mask, label, label_path)

    artifacts = LabelArtifacts(
        diff=diff, label=label, tau=cfg.tau, tampered_size=label.count()
    )
    guide = _load_guide(pair.guide_mask) if pair.guide_mask else None
    scores = concentration_scores(label) if artifacts.tampered_size else None

    manipulation = pair.manipulation
    if manipulation is None:
        manipulation = (
            Manipulation.INTRA_CLASS_REPLACEMENT
            if pair.guide_mask
            else Manipulation.OBJECT_ADDITION
        )
    edit = EditDescriptor(
        manipulation=manipulation,
        orig_class=pair.orig_class,
        repl_class=pair.repl_class,
    )
    record = SampleRecord(
        id=pair.id,
        paths=SamplePaths(
            original=pair.original,
            tampered=pair.tampered,
            diff_map=str(diff_path),
            pixel_label=str(label_path),
        ),
        manipulation=manipulation,
        edit_sequence=(edit,),
        semantic_labels=(pair.orig_class,),
        tau=cfg.tau,
        tampered_size=artifacts.tampered_size,
        size_bucket=size_bucket(artifacts.tampered_size),
        vlm_fidelity=pair.vlm_fidelity,
        human_realism=None,
        generator=pair.generator,
        verdicts=(),
        description="",
        retained=False,
    )
    return run_filter_chain(
        record,
        artifacts,
        guide_mask=guide,
        scores=scores,
        magnitude_lo=cfg.filters.magnitude_lo,
        magnitude_hi=cfg.filters.magnitude_hi,
        min_overlap=cfg.filters.min_overlap,
        vlm_min=cfg.filters.vlm_min,
        human_min=cfg.filters.human_min,
    )


def _worker(args) -> tuple[str, SampleRecord | None, str | None]:
    pair, cfg, out_dir, force = args
    try:
        return pair.id, process_pair(pair, cfg, Path(out_dir), force), None
    except Exception as exc:  # noqa: BLE001 - per-pair isolation is the contract
        return pair.id, None, f"{type(exc).__name__}: {exc}"


@dataclasses.dataclass
class LabelRunSummary:
    records: list[SampleRecord]
    errors: dict[str, str]


def run_label_pipeline(
    pairs: list[PairSpec], cfg: PipelineConfig, out_dir, force: bool = False
) -> LabelRunSummary:
    """Run all pairs, in parallel when cfg.workers > 1; errors are isolated."""
    out_dir = Path(out_dir)
    (out_dir / DIFF_DIR).mkdir(parents=True, exist_ok=True)
    (out_dir / LABEL_DIR).mkdir(parents=True, exist_ok=True)

    jobs = [(p, cfg, str(out_dir), force) for p in pairs]
    results: list[tuple[str, SampleRecord | None, str | None]] = []
    if cfg.workers == 1:
        results = [_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_worker, jobs))

    records, errors = [], {}
    for pair_id, record, error in results:
        if error is not None:
            logger.error("pair %s failed: %s", pair_id, error)
            errors[pair_id] = error
        else:
            records.append(record)
    records.sort(key=lambda r: r.id)
    return LabelRunSummary(records=records, errors=errors)


def write_records_if_changed(records, path) -> bool:
    """Write records.jsonl only when the content differs; returns True if written."""
    from .records import record_to_json

    path = Path(path)
    payload = "".join(record_to_json(r) + "\n" for r in records).encode("utf-8")
    if path.exists() and path.read_bytes() == payload:
        return False
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    with os.fdopen(fd, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)
    return True
