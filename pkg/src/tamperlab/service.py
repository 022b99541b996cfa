"""HTTP backend for the human fidelity review.

Serves pending samples with image/overlay endpoints, accepts 1-5 realism
scores, persists them durably, and re-runs the retention rule after each
score.  Storage is the records file plus an append-only score log that is
compacted back into the records file at startup; a score acknowledged
with 200 has already been fsynced, so it survives a crash or restart.
"""

from __future__ import annotations

import dataclasses
import io
import json
import logging
import os
import tempfile
import threading
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from pydantic import BaseModel, Field
from PIL import Image

from .concentration import concentration_scores
from .curation import run_filter_chain
from .labeling import LabelArtifacts, threshold_label
from .raster import load_float_map, load_image
from .records import SampleRecord, read_records, write_records

logger = logging.getLogger(__name__)

OVERLAY_COLOR = (1.0, 0.2, 0.2)
OVERLAY_ALPHA = 0.5

IMAGE_KINDS = ("original", "tampered", "overlay")


class ScoreSubmission(BaseModel):
    id: str
    score: int = Field(ge=1, le=5)
    reviewer: str
    timestamp: float | None = None


class ReviewStore:
    """records.jsonl + append-only score log with per-store write locking."""

    def __init__(self, records_path, scores_log=None):
        self.records_path = Path(records_path)
        self.scores_log = (
            Path(scores_log)
            if scores_log
            else self.records_path.parent / "scores.log.jsonl"
        )
        self._lock = threading.Lock()
        records = read_records(self.records_path)
        self._records: dict[str, SampleRecord] = {r.id: r for r in records}
        self._order = sorted(self._records)
        self._compact()

    def _replay_log(self) -> int:
        if not self.scores_log.exists():
            return 0
        applied = 0
        with self.scores_log.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                rec = self._records.get(entry["id"])
                if rec is None:
                    continue
                self._records[entry["id"]] = self._apply_score(
                    rec, int(entry["score"])
                )
                applied += 1
        return applied

    def _compact(self):
        applied = self._replay_log()
        if applied:
            self._rewrite_records()
            self.scores_log.write_text("", encoding="utf-8")
            logger.info("compacted %d logged score(s) into %s", applied, self.records_path)

    def _rewrite_records(self):
        fd, tmp = tempfile.mkstemp(dir=self.records_path.parent, suffix=".tmp")
        os.close(fd)
        write_records([self._records[i] for i in self._order], tmp)
        os.replace(tmp, self.records_path)

    def _apply_score(self, rec: SampleRecord, score: int) -> SampleRecord:
        rec = dataclasses.replace(rec, human_realism=score, retained=False)
        try:
            diff = load_float_map(rec.paths.diff_map)
        except (FileNotFoundError, ValueError):
            # No artifacts on disk: recompute retention from stored verdicts.
            verdicts = tuple(
                dataclasses.replace(
                    v, passed=score >= 4, measured=float(score), bounds=">= 4"
                )
                if v.name == "fidelity_human"
                else v
                for v in rec.verdicts
            )
            return dataclasses.replace(
                rec, verdicts=verdicts, retained=all(v.passed for v in verdicts)
            )
        label = threshold_label(diff, rec.tau)
        artifacts = LabelArtifacts(
            diff=diff, label=label, tau=rec.tau, tampered_size=label.count()
        )
        overlap_value = next(
            (v.measured for v in rec.verdicts if v.name == "overlap"), None
        )
        scores = concentration_scores(label) if artifacts.tampered_size else None
        return run_filter_chain(
            rec, artifacts, scores=scores, overlap_value=overlap_value
        )

    def get(self, sample_id: str) -> SampleRecord | None:
        return self._records.get(sample_id)

    def pending(self, limit: int) -> list[SampleRecord]:
        out = []
        for sample_id in self._order:
            rec = self._records[sample_id]
            if rec.human_realism is None:
                out.append(rec)
                if len(out) >= limit:
                    break
        return out

    def submit(self, submission: ScoreSubmission) -> SampleRecord:
        with self._lock:
            rec = self._records.get(submission.id)
            if rec is None:
                raise KeyError(submission.id)
            entry = {
                "id": submission.id,
                "score": submission.score,
                "reviewer": submission.reviewer,
                "timestamp": submission.timestamp
                if submission.timestamp is not None
                else time.time(),
            }
            with self.scores_log.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            updated = self._apply_score(rec, submission.score)
            self._records[submission.id] = updated
            return updated

    def stats(self) -> dict:
        records = [self._records[i] for i in self._order]
        scored = [r for r in records if r.human_realism is not None]
        by_type: dict[str, dict[str, int]] = {}
        for rec in records:
            slot = by_type.setdefault(
                rec.manipulation.value, {"scored": 0, "retained": 0}
            )
            if rec.human_realism is not None:
                slot["scored"] += 1
                if rec.retained:
                    slot["retained"] += 1
        pass_rate = {
            t: (s["retained"] / s["scored"] if s["scored"] else None)
            for t, s in by_type.items()
        }
        return {
            "pending": len(records) - len(scored),
            "scored": len(scored),
            "retained": sum(r.retained for r in records),
            "pass_rate_by_type": pass_rate,
        }


def _review_item(rec: SampleRecord) -> dict:
    return {
        "id": rec.id,
        "urls": {
            kind: f"/api/sample/{rec.id}/image/{kind}" for kind in IMAGE_KINDS
        },
        "manipulation": rec.manipulation.value,
        "description": rec.description,
        "current_score": rec.human_realism,
        "reviewer": None,
    }


def _encode_png(data: np.ndarray) -> bytes:
    arr = np.rint(np.clip(data, 0.0, 1.0) * 255.0).astype(np.uint8)
    if arr.shape[2] == 1:
        img = Image.fromarray(arr[:, :, 0], mode="L")
    else:
        img = Image.fromarray(arr, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _overlay_bytes(rec: SampleRecord) -> bytes:
    tampered = load_image(rec.paths.tampered)
    label = load_image(rec.paths.pixel_label)
    mask = label.data.max(axis=2) > 0.5
    out = tampered.data.copy()
    if out.shape[2] == 1:
        out = np.repeat(out, 3, axis=2)
    color = np.array(OVERLAY_COLOR)
    out[mask] = (1 - OVERLAY_ALPHA) * out[mask] + OVERLAY_ALPHA * color
    return _encode_png(out)


def create_app(records_path, scores_log=None) -> FastAPI:
    store = ReviewStore(records_path, scores_log=scores_log)
    app = FastAPI(title="tamperlab review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/queue")
    def queue(limit: int = 50):
        return [_review_item(r) for r in store.pending(limit)]

    @app.post("/api/sample/{sample_id}/score")
    def score(sample_id: str, submission: ScoreSubmission):
        if submission.id != sample_id:
            raise HTTPException(status_code=422, detail="body id does not match path")
        try:
            updated = store.submit(submission)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown sample id")
        return {
            "id": updated.id,
            "human_realism": updated.human_realism,
            "retained": updated.retained,
        }

    @app.get("/api/sample/{sample_id}/image/{kind}")
    def image(sample_id: str, kind: str):
        rec = store.get(sample_id)
        if rec is None or kind not in IMAGE_KINDS:
            raise HTTPException(status_code=404, detail="unknown sample or kind")
        if kind == "overlay":
            return Response(content=_overlay_bytes(rec), media_type="image/png")
        path = Path(rec.paths.original if kind == "original" else rec.paths.tampered)
        if not path.exists():
            raise HTTPException(status_code=404, detail="image file missing")
        media = "image/jpeg" if path.suffix.lower() in (".jpg", ".jpeg") else "image/png"
        return Response(content=path.read_bytes(), media_type=media)

    @app.get("/api/stats")
    def stats():
        return store.stats()

    return app
