"""Ingest, validate, and persist source documents, summaries, and external metric scores.

Interchange is one JSON record per line. Text is normalized to Unicode NFC
with "\\n" newlines on ingest; sentence spans are computed after
normalization so they are stable across platforms.
"""
from __future__ import annotations

import csv
import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .segment import SegmentConfig, DEFAULT_CONFIG, split_sentences

Span = tuple[int, int]


class CorpusError(ValueError):
    """Malformed or referentially inconsistent corpus input."""


def normalize_text(text: str) -> str:
    return unicodedata.normalize("NFC", text.replace("\r\n", "\n").replace("\r", "\n"))


@dataclass(frozen=True)
class SourceSentence:
    index: int
    text: str
    span: Span


@dataclass(frozen=True)
class SourceDocument:
    doc_id: str
    text: str
    sentences: tuple[SourceSentence, ...]


@dataclass(frozen=True)
class Summary:
    summary_id: str
    doc_id: str
    system_id: str
    text: str


@dataclass(frozen=True)
class MetricScoreTable:
    metric_name: str
    scores: dict[str, float]


@dataclass(frozen=True)
class Corpus:
    """Immutable document/summary collection, safe to share across readers."""

    documents: dict[str, SourceDocument]
    summaries: dict[str, Summary]

    def systems(self) -> dict[str, list[Summary]]:
        """Summaries grouped by system_id, each group ordered by summary_id."""
        groups: dict[str, list[Summary]] = {}
        for sid in sorted(self.summaries):
            s = self.summaries[sid]
            groups.setdefault(s.system_id, []).append(s)
        return groups

    def system_of(self) -> dict[str, str]:
        return {sid: s.system_id for sid, s in self.summaries.items()}

    def document_for(self, summary_id: str) -> SourceDocument:
        return self.documents[self.summaries[summary_id].doc_id]


def _validate_sentences(doc_id: str, text: str, sentences: list[SourceSentence]) -> None:
    prev_end = 0
    for s in sentences:
        lo, hi = s.span
        if not (0 <= lo < hi <= len(text)):
            raise CorpusError(f"document {doc_id!r}: sentence {s.index} span {s.span} out of bounds")
        if lo < prev_end:
            raise CorpusError(f"document {doc_id!r}: sentence {s.index} overlaps the previous sentence")
        if text[lo:hi] != s.text:
            raise CorpusError(f"document {doc_id!r}: sentence {s.index} text does not match its span")
        prev_end = hi


def _sentences_from_field(doc_id: str, text: str, raw: list) -> list[SourceSentence]:
    sentences: list[SourceSentence] = []
    cursor = 0
    for i, item in enumerate(raw):
        if isinstance(item, str):
            stext = normalize_text(item)
            lo = text.find(stext, cursor)
            if lo < 0:
                raise CorpusError(f"document {doc_id!r}: pre-segmented sentence {i} not found in text")
            sentences.append(SourceSentence(index=i, text=stext, span=(lo, lo + len(stext))))
            cursor = lo + len(stext)
        elif isinstance(item, dict):
            lo, hi = int(item["span"][0]), int(item["span"][1])
            sentences.append(SourceSentence(index=i, text=item["text"], span=(lo, hi)))
        else:
            raise CorpusError(f"document {doc_id!r}: sentence {i} must be a string or object")
    _validate_sentences(doc_id, text, sentences)
    return sentences


def _read_jsonl(path: str | Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({e.msg})") from e
            if not isinstance(rec, dict):
                raise CorpusError(f"{path}:{lineno}: record must be a JSON object")
            yield lineno, rec


def _require(rec: dict, key: str, path, lineno: int) -> str:
    if key not in rec:
        raise CorpusError(f"{path}:{lineno}: missing field {key!r}")
    return rec[key]


def ingest_corpus(
    doc_path: str | Path,
    summary_path: str | Path,
    segment_config: SegmentConfig = DEFAULT_CONFIG,
) -> Corpus:
    """Load documents and summaries from JSONL files into a validated Corpus.

    Documents without a ``sentences`` field are sentence-split automatically;
    pre-segmented input overrides the splitter so released data can be
    replicated exactly as segmented.
    """
    documents: dict[str, SourceDocument] = {}
    for lineno, rec in _read_jsonl(doc_path):
        doc_id = str(_require(rec, "doc_id", doc_path, lineno))
        if doc_id in documents:
            raise CorpusError(f"{doc_path}:{lineno}: duplicate doc_id {doc_id!r}")
        text = normalize_text(_require(rec, "text", doc_path, lineno))
        if rec.get("sentences"):
            sentences = _sentences_from_field(doc_id, text, rec["sentences"])
        else:
            sentences = [
                SourceSentence(index=i, text=stext, span=span)
                for i, (stext, span) in enumerate(split_sentences(text, segment_config))
            ]
        documents[doc_id] = SourceDocument(doc_id=doc_id, text=text, sentences=tuple(sentences))

    summaries: dict[str, Summary] = {}
    for lineno, rec in _read_jsonl(summary_path):
        summary_id = str(_require(rec, "summary_id", summary_path, lineno))
        if summary_id in summaries:
            raise CorpusError(f"{summary_path}:{lineno}: duplicate summary_id {summary_id!r}")
        doc_id = str(_require(rec, "doc_id", summary_path, lineno))
        if doc_id not in documents:
            raise CorpusError(f"{summary_path}:{lineno}: summary {summary_id!r} references unknown doc_id {doc_id!r}")
        summaries[summary_id] = Summary(
            summary_id=summary_id,
            doc_id=doc_id,
            system_id=str(_require(rec, "system_id", summary_path, lineno)),
            text=normalize_text(_require(rec, "text", summary_path, lineno)),
        )

    return Corpus(documents=documents, summaries=summaries)


def _dump(rec: dict) -> str:
    return json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n"


def export_corpus(corpus: Corpus, doc_path: str | Path, summary_path: str | Path) -> None:
    """Write the corpus back out in canonical form (sorted ids, fixed key order).

    Ingesting a canonical export and exporting again is byte-identical.
    """
    with open(doc_path, "w", encoding="utf-8") as f:
        for doc_id in sorted(corpus.documents):
            doc = corpus.documents[doc_id]
            f.write(
                _dump(
                    {
                        "doc_id": doc.doc_id,
                        "text": doc.text,
                        "sentences": [
                            {"text": s.text, "span": list(s.span)} for s in doc.sentences
                        ],
                    }
                )
            )
    with open(summary_path, "w", encoding="utf-8") as f:
        for summary_id in sorted(corpus.summaries):
            s = corpus.summaries[summary_id]
            f.write(
                _dump(
                    {
                        "summary_id": s.summary_id,
                        "doc_id": s.doc_id,
                        "system_id": s.system_id,
                        "text": s.text,
                    }
                )
            )


def ingest_metric_scores(path: str | Path, corpus: Corpus | None = None) -> MetricScoreTable:
    """Load a `summary_id,<metric>` CSV; validates coverage against a corpus if given."""
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusError(f"{path}: empty metric file") from None
        if len(header) != 2 or header[0] != "summary_id":
            raise CorpusError(f"{path}: header must be 'summary_id,<metric_name>', got {header!r}")
        metric_name = header[1]
        scores: dict[str, float] = {}
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise CorpusError(f"{path}:{rowno}: expected 2 columns, got {len(row)}")
            summary_id, raw = row[0], row[1]
            if corpus is not None and summary_id not in corpus.summaries:
                raise CorpusError(f"{path}:{rowno}: unknown summary_id {summary_id!r}")
            if summary_id in scores:
                raise CorpusError(f"{path}:{rowno}: duplicate score for {summary_id!r}")
            try:
                scores[summary_id] = float(raw)
            except ValueError:
                raise CorpusError(f"{path}:{rowno}: non-numeric score {raw!r} for {summary_id!r}") from None

    if corpus is not None:
        missing = sorted(set(corpus.summaries) - set(scores))
        if missing:
            shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
            raise CorpusError(f"{path}: metric {metric_name!r} missing {len(missing)} summaries: {shown}")
    return MetricScoreTable(metric_name=metric_name, scores=scores)
