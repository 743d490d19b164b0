"""Construct per-annotator annotation assignments for fine and coarse protocols.

Fine assignments can cover a random fraction of a summary's units. Each
annotator slot draws its subset from an independent, reproducible random
stream keyed by (seed, summary_id, slot), so two slots never share a sample
by construction and reruns are exact.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .judgments import ScaleSpec
from .segment import FineUnit
from .corpus import Summary

HINT_MODES = ("NONE", "ALGORITHMIC", "GOLD")


@dataclass(frozen=True)
class Assignment:
    """The unit subset (fine) or whole summary (coarse) one slot must judge."""

    summary_id: str
    annotator_slot: int
    mode: str  # FINE or COARSE
    unit_indices: tuple[int, ...]
    hint_mode: str = "NONE"
    seed: int = 0
    fraction: float = 1.0
    scale: ScaleSpec | None = None

    def __post_init__(self) -> None:
        if self.mode == "FINE":
            if not self.unit_indices:
                raise ValueError("fine assignments need at least one unit index")
            idx = self.unit_indices
            if list(idx) != sorted(set(idx)):
                raise ValueError("unit_indices must be sorted and duplicate-free")
        elif self.mode == "COARSE":
            if self.unit_indices:
                raise ValueError("coarse assignments carry no unit indices")
        else:
            raise ValueError(f"mode must be FINE or COARSE, got {self.mode!r}")
        if self.hint_mode not in HINT_MODES:
            raise ValueError(f"hint_mode must be one of {HINT_MODES}")
        if not (0 < self.fraction <= 1):
            raise ValueError(f"fraction must be in (0, 1], got {self.fraction}")

    def to_record(self) -> dict:
        rec = {
            "summary_id": self.summary_id,
            "annotator_slot": self.annotator_slot,
            "mode": self.mode,
            "unit_indices": list(self.unit_indices),
            "hint_mode": self.hint_mode,
            "seed": self.seed,
            "fraction": self.fraction,
        }
        if self.scale is not None:
            rec["scale"] = [self.scale.min, self.scale.max]
        return rec

    @staticmethod
    def from_record(rec: dict) -> "Assignment":
        scale = rec.get("scale")
        return Assignment(
            summary_id=rec["summary_id"],
            annotator_slot=int(rec["annotator_slot"]),
            mode=rec["mode"],
            unit_indices=tuple(int(i) for i in rec.get("unit_indices", [])),
            hint_mode=rec.get("hint_mode", "NONE"),
            seed=int(rec.get("seed", 0)),
            fraction=float(rec.get("fraction", 1.0)),
            scale=ScaleSpec(float(scale[0]), float(scale[1])) if scale else None,
        )


def subset_size(fraction: float, n_units: int) -> int:
    """max(1, round(fraction * n_units)), rounding half up.

    Decimal arithmetic on the fraction's shortest repr keeps e.g. 0.7 * 5
    at exactly 3.5 instead of a float hair below it.
    """
    if not (0 < fraction <= 1):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    exact = Decimal(repr(fraction)) * n_units
    return max(1, int(exact.to_integral_value(rounding=ROUND_HALF_UP)))


def _slot_rng(seed: int, summary_id: str, slot: int) -> np.random.Generator:
    # Stable across processes: Python's hash() is salted, so key the stream
    # off a blake2b digest instead.
    digest = hashlib.blake2b(
        f"{summary_id}\x1f{slot}".encode("utf-8"), digest_size=16
    ).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    entropy = [seed & 0xFFFFFFFFFFFFFFFF, slot, *words]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def unit_permutation(n_units: int, seed: int, summary_id: str, slot: int) -> np.ndarray:
    """The slot's full random unit order; subsets are prefixes of this."""
    return _slot_rng(seed, summary_id, slot).permutation(n_units)


def sample_unit_indices(
    n_units: int, fraction: float, seed: int, summary_id: str, slot: int
) -> tuple[int, ...]:
    """Uniform without-replacement subset, nested across fractions for one stream."""
    size = subset_size(fraction, n_units)
    perm = unit_permutation(n_units, seed, summary_id, slot)
    return tuple(sorted(int(i) for i in perm[:size]))


def make_fine_assignments(
    summary: Summary,
    units: Sequence[FineUnit],
    annotators: int,
    fraction: float,
    seed: int,
    hint_mode: str = "NONE",
) -> list[Assignment]:
    """One fine assignment per annotator slot, each with its own random subset."""
    if annotators < 1:
        raise ValueError("annotators must be >= 1")
    if not units:
        raise ValueError(f"summary {summary.summary_id!r} has no units to assign")
    n = len(units)
    return [
        Assignment(
            summary_id=summary.summary_id,
            annotator_slot=slot,
            mode="FINE",
            unit_indices=sample_unit_indices(n, fraction, seed, summary.summary_id, slot),
            hint_mode=hint_mode,
            seed=seed,
            fraction=fraction,
        )
        for slot in range(annotators)
    ]


def make_coarse_assignments(
    summary: Summary,
    annotators: int,
    scale: ScaleSpec,
    seed: int,
    hint_mode: str = "NONE",
) -> list[Assignment]:
    """One whole-summary rating task per annotator slot."""
    if annotators < 1:
        raise ValueError("annotators must be >= 1")
    return [
        Assignment(
            summary_id=summary.summary_id,
            annotator_slot=slot,
            mode="COARSE",
            unit_indices=(),
            hint_mode=hint_mode,
            seed=seed,
            scale=scale,
        )
        for slot in range(annotators)
    ]


def write_assignments(assignments: Iterable[Assignment], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for a in assignments:
            f.write(json.dumps(a.to_record(), ensure_ascii=False) + "\n")


def read_assignments(path: str | Path) -> list[Assignment]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                out.append(Assignment.from_record(json.loads(line)))
    return out
