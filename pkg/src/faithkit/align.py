"""Rank source sentences against summary units and select highlight hints.

The built-in scorers are lexical (BM25, unigram F1) and dependency-free;
model-based aligners enter through precomputed score files only.
"""
from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, SourceDocument
from .segment import FineUnit
from .tokens import tokenize

UnitKey = tuple[str, int]  # (summary_id, unit_index)


@dataclass(frozen=True)
class AlignmentCandidate:
    summary_id: str
    unit_index: int
    sentence_index: int
    score: float


@dataclass(frozen=True)
class HintSet:
    """At most five source sentences highlighted for one unit, best first."""

    summary_id: str
    unit_index: int
    highlights: tuple[int, ...]
    scorer_name: str
    threshold: float

    def __post_init__(self) -> None:
        if len(self.highlights) > 5:
            raise ValueError("a hint set shows at most five highlights")


@dataclass(frozen=True)
class GoldAlignment:
    """Manually marked supporting sentences per unit."""

    units: dict[UnitKey, frozenset[int]]

    def __post_init__(self) -> None:
        empty = [k for k, v in self.units.items() if not v]
        if empty:
            raise ValueError(f"gold alignment empty for units: {empty[:5]}")

    @staticmethod
    def read_jsonl(path: str | Path) -> "GoldAlignment":
        units: dict[UnitKey, frozenset[int]] = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                rec = json.loads(line)
                key = (rec["summary_id"], int(rec["unit_index"]))
                units[key] = frozenset(int(i) for i in rec["sentence_indices"])
        return GoldAlignment(units=units)


BM25_K1 = 1.2
BM25_B = 0.75


def bm25_rank(
    unit: FineUnit,
    doc: SourceDocument,
    k1: float = BM25_K1,
    b: float = BM25_B,
) -> list[AlignmentCandidate]:
    """Okapi BM25 of the unit's tokens against each source sentence.

    Each sentence is one BM25 document and the document's sentences form the
    collection. Uses the non-negative idf variant ln(1 + (N - df + 0.5) /
    (df + 0.5)). Ties (including all-zero scores) keep sentence order.
    """
    if not doc.sentences:
        raise ValueError(f"document {doc.doc_id!r} has no sentences")
    sent_tokens = [tokenize(s.text, drop_stopwords=True) for s in doc.sentences]
    n_sents = len(sent_tokens)
    avgdl = sum(len(t) for t in sent_tokens) / n_sents
    df: Counter[str] = Counter()
    for toks in sent_tokens:
        df.update(set(toks))

    query = set(tokenize(unit.text, drop_stopwords=True))
    scored = []
    for idx, toks in enumerate(sent_tokens):
        tf = Counter(toks)
        norm = k1 * (1 - b + b * (len(toks) / avgdl if avgdl > 0 else 0.0))
        score = 0.0
        for term in query:
            if tf[term] == 0:
                continue
            idf = math.log(1 + (n_sents - df[term] + 0.5) / (df[term] + 0.5))
            score += idf * tf[term] * (k1 + 1) / (tf[term] + norm)
        scored.append(
            AlignmentCandidate(
                summary_id=unit.summary_id,
                unit_index=unit.unit_index,
                sentence_index=idx,
                score=score,
            )
        )
    return sorted(scored, key=lambda c: (-c.score, c.sentence_index))


def rouge1_rank(unit: FineUnit, doc: SourceDocument) -> list[AlignmentCandidate]:
    """Unigram-overlap F1 of the unit against each sentence, stopwords removed."""
    if not doc.sentences:
        raise ValueError(f"document {doc.doc_id!r} has no sentences")
    unit_counts = Counter(tokenize(unit.text, drop_stopwords=True))
    unit_len = sum(unit_counts.values())
    scored = []
    for idx, sentence in enumerate(doc.sentences):
        sent_counts = Counter(tokenize(sentence.text, drop_stopwords=True))
        sent_len = sum(sent_counts.values())
        overlap = sum(min(c, sent_counts[t]) for t, c in unit_counts.items())
        if overlap == 0 or unit_len == 0 or sent_len == 0:
            f1 = 0.0
        else:
            precision = overlap / unit_len
            recall = overlap / sent_len
            f1 = 2 * precision * recall / (precision + recall)
        scored.append(
            AlignmentCandidate(
                summary_id=unit.summary_id,
                unit_index=unit.unit_index,
                sentence_index=idx,
                score=f1,
            )
        )
    return sorted(scored, key=lambda c: (-c.score, c.sentence_index))


def ingest_external_scores(
    path: str | Path, corpus: Corpus | None = None
) -> dict[UnitKey, list[AlignmentCandidate]]:
    """Load precomputed aligner scores from a CSV of
    summary_id,unit_index,sentence_index,score rows (header required)."""
    by_unit: dict[UnitKey, list[AlignmentCandidate]] = {}
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        required = {"summary_id", "unit_index", "sentence_index", "score"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: header must contain {sorted(required)}")
        for rowno, row in enumerate(reader, start=2):
            summary_id = row["summary_id"]
            try:
                unit_index = int(row["unit_index"])
                sentence_index = int(row["sentence_index"])
                score = float(row["score"])
            except ValueError:
                raise ValueError(f"{path}:{rowno}: non-numeric field in {row!r}") from None
            if corpus is not None:
                if summary_id not in corpus.summaries:
                    raise ValueError(f"{path}:{rowno}: unknown summary_id {summary_id!r}")
                doc = corpus.document_for(summary_id)
                if not (0 <= sentence_index < len(doc.sentences)):
                    raise ValueError(
                        f"{path}:{rowno}: sentence_index {sentence_index} out of range "
                        f"for document {doc.doc_id!r}"
                    )
            by_unit.setdefault((summary_id, unit_index), []).append(
                AlignmentCandidate(summary_id, unit_index, sentence_index, score)
            )
    return {
        key: sorted(cands, key=lambda c: (-c.score, c.sentence_index))
        for key, cands in by_unit.items()
    }


def select_hints(
    candidates: Sequence[AlignmentCandidate],
    threshold: float,
    max_hints: int = 5,
    scorer_name: str = "",
) -> HintSet:
    """Keep candidates scoring at or above the threshold, best five first."""
    if not candidates:
        raise ValueError("no candidates supplied")
    keys = {(c.summary_id, c.unit_index) for c in candidates}
    if len(keys) != 1:
        raise ValueError(f"candidates span multiple units: {sorted(keys)}")
    kept = sorted(
        (c for c in candidates if c.score >= threshold),
        key=lambda c: (-c.score, c.sentence_index),
    )[:max_hints]
    summary_id, unit_index = next(iter(keys))
    return HintSet(
        summary_id=summary_id,
        unit_index=unit_index,
        highlights=tuple(c.sentence_index for c in kept),
        scorer_name=scorer_name,
        threshold=threshold,
    )


def default_threshold(scorer_name: str) -> float:
    # 0.3 is meaningful on SuperPAL's score scale; lexical scorers keep everything.
    return 0.3 if scorer_name.lower() == "superpal" else 0.0


def recall_at_k(
    ranked: Mapping[UnitKey, Sequence[AlignmentCandidate]],
    gold: GoldAlignment,
    k: int,
) -> float:
    """Fraction of gold units whose top-k predictions include a gold sentence."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not gold.units:
        raise ValueError("gold alignment is empty")
    hits = 0
    for key, gold_sentences in gold.units.items():
        if key not in ranked:
            raise ValueError(f"unit {key} missing from predictions")
        top = {c.sentence_index for c in ranked[key][:k]}
        hits += bool(top & gold_sentences)
    return hits / len(gold.units)
