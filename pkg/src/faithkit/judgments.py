"""Judgment records, the append-only judgment log, and score aggregation.

The durable store is a raw JSONL log with a derived in-memory index.
Judgments are immutable once acknowledged; corrections are new records
carrying a ``supersedes`` field, never in-place edits.
"""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import Corpus, Summary

FINE = "FINE"
COARSE = "COARSE"


class DuplicateJudgmentError(ValueError):
    """A judgment for this (summary, unit, slot) key already exists."""


class RaggedMatrixError(ValueError):
    """Some summaries do not have scores for every annotator slot."""


@dataclass(frozen=True)
class ScaleSpec:
    """Inclusive rating bounds for a coarse judgment scale."""

    min: float
    max: float

    def __post_init__(self) -> None:
        if not self.max > self.min:
            raise ValueError(f"scale max must exceed min, got ({self.min}, {self.max})")

    def validate(self, rating: float) -> None:
        if not (self.min <= rating <= self.max):
            raise ValueError(f"rating {rating} outside scale [{self.min}, {self.max}]")

    def to_100(self, rating: float) -> float:
        self.validate(rating)
        return 100.0 * (rating - self.min) / (self.max - self.min)


LIKERT_0_5 = ScaleSpec(0, 5)
DIRECT_1_100 = ScaleSpec(1, 100)


@dataclass(frozen=True)
class FineJudgment:
    """One binary supported/unsupported call on a single summary unit."""

    summary_id: str
    unit_index: int
    annotator_slot: int
    label: int
    elapsed_ms: int = 0
    hint_mode: str = "NONE"
    submitted_at: str = ""

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"fine label must be 0 or 1, got {self.label}")
        if self.elapsed_ms < 0:
            raise ValueError("elapsed_ms must be nonnegative")

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.summary_id, self.unit_index, self.annotator_slot)


@dataclass(frozen=True)
class CoarseJudgment:
    """One whole-summary rating on a declared scale, with an optional comment."""

    summary_id: str
    annotator_slot: int
    rating: float
    scale: ScaleSpec
    comment: str | None = None
    submitted_at: str = ""

    def __post_init__(self) -> None:
        self.scale.validate(self.rating)

    @property
    def key(self) -> tuple[str, int]:
        return (self.summary_id, self.annotator_slot)


def judgment_to_record(j: FineJudgment | CoarseJudgment) -> dict:
    if isinstance(j, FineJudgment):
        return {
            "kind": "fine",
            "summary_id": j.summary_id,
            "unit_index": j.unit_index,
            "annotator_slot": j.annotator_slot,
            "label": j.label,
            "elapsed_ms": j.elapsed_ms,
            "hint_mode": j.hint_mode,
            "submitted_at": j.submitted_at,
        }
    return {
        "kind": "coarse",
        "summary_id": j.summary_id,
        "annotator_slot": j.annotator_slot,
        "rating": j.rating,
        "scale": [j.scale.min, j.scale.max],
        "comment": j.comment,
        "submitted_at": j.submitted_at,
    }


def judgment_from_record(rec: dict) -> FineJudgment | CoarseJudgment:
    if rec["kind"] == "fine":
        return FineJudgment(
            summary_id=rec["summary_id"],
            unit_index=int(rec["unit_index"]),
            annotator_slot=int(rec["annotator_slot"]),
            label=int(rec["label"]),
            elapsed_ms=int(rec.get("elapsed_ms", 0)),
            hint_mode=rec.get("hint_mode", "NONE"),
            submitted_at=rec.get("submitted_at", ""),
        )
    if rec["kind"] == "coarse":
        return CoarseJudgment(
            summary_id=rec["summary_id"],
            annotator_slot=int(rec["annotator_slot"]),
            rating=float(rec["rating"]),
            scale=ScaleSpec(float(rec["scale"][0]), float(rec["scale"][1])),
            comment=rec.get("comment"),
            submitted_at=rec.get("submitted_at", ""),
        )
    raise ValueError(f"unknown judgment kind {rec.get('kind')!r}")


def read_judgments_jsonl(path: str | Path) -> list["FineJudgment | CoarseJudgment"]:
    """Read judgment records (a raw log or an export) from a JSONL file."""
    out: list[FineJudgment | CoarseJudgment] = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                out.append(judgment_from_record(json.loads(line)))
    return out


class JudgmentLog:
    """Append-only JSONL judgment store with at-most-once semantics per key.

    Appends are serialized through a single lock and fsynced before the
    record id is returned, so an acknowledged judgment survives a crash.
    A torn final line (crash mid-write) is ignored on reload.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: list[dict] = []
        self._keys: dict[tuple, int] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as f:
            raw = f.read()
        for line in raw.split("\n"):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                continue  # torn tail from a crash mid-append
            self._index(rec)

    def _index(self, rec: dict) -> None:
        self._records.append(rec)
        j = judgment_from_record(rec)
        self._keys[j.key] = rec["record_id"]

    def append(self, j: FineJudgment | CoarseJudgment, supersedes: int | None = None) -> int:
        """Append a judgment and return its record id; duplicates are rejected."""
        with self._lock:
            if j.key in self._keys and supersedes != self._keys[j.key]:
                raise DuplicateJudgmentError(
                    f"judgment already recorded for {j.key}; corrections must supersede record "
                    f"{self._keys[j.key]}"
                )
            rec = judgment_to_record(j)
            rec["record_id"] = len(self._records)
            if supersedes is not None:
                rec["supersedes"] = supersedes
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps(rec, ensure_ascii=False) + "\n")
                f.flush()
                os.fsync(f.fileno())
            self._index(rec)
            return rec["record_id"]

    def __len__(self) -> int:
        return len(self._records)

    def records(self) -> list[dict]:
        with self._lock:
            return list(self._records)

    def judgments(self) -> list[FineJudgment | CoarseJudgment]:
        """Effective view: latest record per key, superseded records resolved."""
        with self._lock:
            by_key = {}
            for rec in self._records:
                j = judgment_from_record(rec)
                by_key[j.key] = j
            return list(by_key.values())

    def fine_judgments(self) -> list[FineJudgment]:
        return [j for j in self.judgments() if isinstance(j, FineJudgment)]

    def coarse_judgments(self) -> list[CoarseJudgment]:
        return [j for j in self.judgments() if isinstance(j, CoarseJudgment)]


@dataclass(frozen=True, eq=False)
class AnnotationMatrix:
    """N summaries x M annotator slots of scores on the 0-100 scale."""

    summary_ids: tuple[str, ...]
    values: np.ndarray
    provenance: str  # FINE or COARSE
    fraction: float = 1.0

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 2 or v.shape[0] != len(self.summary_ids):
            raise ValueError(f"values must be N x M with N = {len(self.summary_ids)}, got {v.shape}")
        if np.isnan(v).any():
            raise ValueError("annotation matrix has missing cells")
        if v.min() < 0 or v.max() > 100:
            raise ValueError("annotation scores must lie in [0, 100]")

    @property
    def n_summaries(self) -> int:
        return self.values.shape[0]

    @property
    def n_slots(self) -> int:
        return self.values.shape[1]

    def row_means(self) -> np.ndarray:
        return self.values.mean(axis=1)


def summary_score_fine(labels: Sequence[int]) -> float:
    """Summary score = 100 x mean of the binary unit labels judged by one slot."""
    if len(labels) == 0:
        raise ValueError("cannot score a summary with no unit judgments")
    bad = [x for x in labels if x not in (0, 1)]
    if bad:
        raise ValueError(f"fine labels must be binary, got {bad[:3]}")
    return 100.0 * sum(labels) / len(labels)


def summary_score_coarse(judgment: CoarseJudgment) -> float:
    """Linear map of the rating onto [0, 100]."""
    return judgment.scale.to_100(judgment.rating)


def build_matrix(
    corpus: Corpus,
    judgments: Iterable[FineJudgment | CoarseJudgment],
    mode: str,
    where: Callable[[Summary], bool] | None = None,
    fraction: float = 1.0,
) -> AnnotationMatrix:
    """Aggregate judgments into an N x M matrix of normalized summary scores.

    Rows are ordered by summary_id. Every selected summary must have a score
    for the same set of annotator slots {0..M-1}; anything ragged is an error
    that names the offending summaries.
    """
    if mode not in (FINE, COARSE):
        raise ValueError(f"mode must be FINE or COARSE, got {mode!r}")

    cells: dict[str, dict[int, float]] = {}
    if mode == FINE:
        labels: dict[tuple[str, int], list[int]] = {}
        for j in judgments:
            if not isinstance(j, FineJudgment):
                continue
            labels.setdefault((j.summary_id, j.annotator_slot), []).append(j.label)
        for (summary_id, slot), ls in labels.items():
            cells.setdefault(summary_id, {})[slot] = summary_score_fine(ls)
    else:
        for j in judgments:
            if not isinstance(j, CoarseJudgment):
                continue
            slots = cells.setdefault(j.summary_id, {})
            if j.annotator_slot in slots:
                raise DuplicateJudgmentError(
                    f"multiple coarse ratings for {(j.summary_id, j.annotator_slot)}"
                )
            slots[j.annotator_slot] = summary_score_coarse(j)

    unknown = sorted(set(cells) - set(corpus.summaries))
    if unknown:
        raise RaggedMatrixError(f"judged summaries missing from corpus: {', '.join(unknown)}")

    selected = sorted(
        sid for sid in cells if where is None or where(corpus.summaries[sid])
    )
    if not selected:
        raise ValueError("empty matrix: no summaries match the filter")

    all_slots = sorted({slot for sid in selected for slot in cells[sid]})
    expected = set(range(len(all_slots)))
    if set(all_slots) != expected:
        raise RaggedMatrixError(f"annotator slots must be 0..M-1, got {all_slots}")
    ragged = [sid for sid in selected if set(cells[sid]) != expected]
    if ragged:
        raise RaggedMatrixError(
            f"summaries without all {len(expected)} slots: {', '.join(ragged[:10])}"
        )

    values = np.array([[cells[sid][m] for m in range(len(expected))] for sid in selected])
    return AnnotationMatrix(
        summary_ids=tuple(selected),
        values=values,
        provenance=mode,
        fraction=fraction,
    )


def system_score(matrix: AnnotationMatrix, grouping: dict[str, str]) -> dict[str, float]:
    """Per-system mean over its summaries of the per-summary mean over slots."""
    missing = [sid for sid in matrix.summary_ids if sid not in grouping]
    if missing:
        raise ValueError(f"grouping does not cover rows: {', '.join(missing[:10])}")
    sums: dict[str, list[float]] = {}
    for sid, row_mean in zip(matrix.summary_ids, matrix.row_means()):
        sums.setdefault(grouping[sid], []).append(float(row_mean))
    return {system: float(np.mean(vals)) for system, vals in sorted(sums.items())}


def export_matrix_csv(matrix: AnnotationMatrix, path: str | Path) -> None:
    header = "summary_id," + ",".join(f"slot_{m}" for m in range(matrix.n_slots))
    with open(path, "w", encoding="utf-8") as f:
        f.write(header + "\n")
        for sid, row in zip(matrix.summary_ids, matrix.values):
            f.write(sid + "," + ",".join(repr(float(x)) for x in row) + "\n")
