"""Split summaries into sentences and then into clause-level units for fine-grained judgment.

All rules are pure string patterns (no learned models) so that identical input
always yields identical units, bit for bit.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

Span = tuple[int, int]

# Tokens that may precede a period without terminating the sentence.
# Stored lowercase, without the trailing period.
DEFAULT_ABBREVIATIONS = frozenset(
    """
    dr mr mrs ms prof rev gen col sgt st jr sr
    e.g i.e etc vs cf al ca approx
    fig figs eq eqs sec no vol pp dept univ est
    """.split()
)

# Coordinating conjunctions and subordinators that open a new unit when they
# follow a comma, semicolon, or dash.
DEFAULT_CONJUNCTIONS = frozenset(
    "and but or nor so yet while whereas because although which who where when".split()
)


@dataclass(frozen=True)
class SegmentConfig:
    conjunctions: frozenset[str] = DEFAULT_CONJUNCTIONS
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS
    # Fragments with fewer word tokens merge into the neighboring unit:
    # 1-3 word fragments rarely carry an independently checkable fact.
    min_unit_tokens: int = 4

    @staticmethod
    def from_file(path: str | Path) -> "SegmentConfig":
        """Load overrides from a JSON file with any of the three field names."""
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        cfg = SegmentConfig()
        if "conjunctions" in raw:
            cfg = replace(cfg, conjunctions=frozenset(w.lower() for w in raw["conjunctions"]))
        if "abbreviations" in raw:
            cfg = replace(cfg, abbreviations=frozenset(w.lower().rstrip(".") for w in raw["abbreviations"]))
        if "min_unit_tokens" in raw:
            cfg = replace(cfg, min_unit_tokens=int(raw["min_unit_tokens"]))
        return cfg


DEFAULT_CONFIG = SegmentConfig()


@dataclass(frozen=True)
class FineUnit:
    """One clause-level span of a summary, the atomic object of a binary judgment."""

    summary_id: str
    unit_index: int
    text: str
    span: Span

    def to_record(self) -> dict:
        return {
            "summary_id": self.summary_id,
            "unit_index": self.unit_index,
            "text": self.text,
            "span": list(self.span),
        }

    @staticmethod
    def from_record(rec: dict) -> "FineUnit":
        return FineUnit(
            summary_id=rec["summary_id"],
            unit_index=int(rec["unit_index"]),
            text=rec["text"],
            span=(int(rec["span"][0]), int(rec["span"][1])),
        )


_TERMINATOR_RE = re.compile(r"[.!?]+[\"'”’)\]]*")
_WORD_BEFORE_RE = re.compile(r"([A-Za-z][\w.’']*)$")
_WORD_TOKEN_RE = re.compile(r"\w+")
_PARAGRAPH_RE = re.compile(r"\n{2,}")


def _is_abbreviation(prefix: str, abbreviations: frozenset[str]) -> bool:
    m = _WORD_BEFORE_RE.search(prefix)
    if not m:
        return False
    word = m.group(1).lower().rstrip(".")
    return word in abbreviations


def split_sentences(text: str, config: SegmentConfig = DEFAULT_CONFIG) -> list[tuple[str, Span]]:
    """Split text into (sentence, span) pairs whose spans tile the input.

    A sentence ends at a run of ``.!?`` (plus closing quotes/brackets)
    followed by whitespace, unless the preceding token is a known
    abbreviation. Paragraph breaks (2+ newlines) always end a sentence.
    Each span absorbs the whitespace up to the next sentence, so spans are
    contiguous and cover the full text. Whitespace-only input yields [].
    """
    if not text.strip():
        return []

    breaks: set[int] = set()
    for m in _TERMINATOR_RE.finditer(text):
        end = m.end()
        if end < len(text) and not text[end].isspace():
            continue
        if _is_abbreviation(text[: m.start()], config.abbreviations):
            continue
        breaks.add(end)
    for m in _PARAGRAPH_RE.finditer(text):
        breaks.add(m.start())

    sentences: list[tuple[str, Span]] = []
    start = 0
    for b in sorted(breaks):
        # Extend through trailing whitespace so spans stay contiguous.
        end = b
        while end < len(text) and text[end].isspace():
            end += 1
        if end >= len(text):
            break
        if text[start:end].strip():
            sentences.append((text[start:end], (start, end)))
            start = end
    if start < len(text):
        sentences.append((text[start:], (start, len(text))))
    return sentences


def _word_count(s: str) -> int:
    return len(_WORD_TOKEN_RE.findall(s))


_DELIM_RE = re.compile(r"(?:[,;]|—|–|--|(?<=\s)-(?=\s))")
_NEXT_WORD_RE = re.compile(r"\s+([A-Za-z]+)")


def _split_points(sentence: str, config: SegmentConfig) -> list[int]:
    points: set[int] = set()
    for m in _DELIM_RE.finditer(sentence):
        after = _NEXT_WORD_RE.match(sentence, m.end())
        if after is not None and after.group(1).lower() in config.conjunctions:
            # Split before the conjunction; the delimiter stays with the left unit.
            points.add(after.start(1))
        elif sentence[m.start()] == ";":
            # A bare semicolon separates independent clauses on its own.
            points.add(m.end())
    return sorted(p for p in points if 0 < p < len(sentence))


def segment_units(
    sentence: str,
    span: Span,
    summary_id: str = "",
    first_index: int = 0,
    config: SegmentConfig = DEFAULT_CONFIG,
) -> list[FineUnit]:
    """Split one sentence into clause units; always yields at least one unit.

    Split points are (a) a comma/semicolon/dash followed by a configured
    conjunction or subordinator, and (b) bare semicolons. Fragments with
    fewer than ``min_unit_tokens`` word tokens merge into the preceding
    unit (a short leading fragment merges into the following one).
    """
    if not sentence.strip():
        return []
    base = span[0]
    bounds = [0, *_split_points(sentence, config), len(sentence)]
    fragments: list[Span] = []
    for lo, hi in zip(bounds, bounds[1:]):
        chunk = sentence[lo:hi]
        lstrip = len(chunk) - len(chunk.lstrip())
        rstrip = len(chunk) - len(chunk.rstrip())
        if lo + lstrip < hi - rstrip:
            fragments.append((lo + lstrip, hi - rstrip))

    merged: list[Span] = []
    carry: Span | None = None
    for frag in fragments:
        if carry is not None:
            frag = (carry[0], frag[1])
            carry = None
        if _word_count(sentence[frag[0] : frag[1]]) >= config.min_unit_tokens:
            merged.append(frag)
        elif merged:
            merged[-1] = (merged[-1][0], frag[1])
        else:
            carry = frag
    if carry is not None:
        if merged:
            merged[-1] = (merged[-1][0], carry[1])
        else:
            merged.append(carry)

    return [
        FineUnit(
            summary_id=summary_id,
            unit_index=first_index + i,
            text=sentence[lo:hi],
            span=(base + lo, base + hi),
        )
        for i, (lo, hi) in enumerate(merged)
    ]


def segment_summary(summary_id: str, text: str, config: SegmentConfig = DEFAULT_CONFIG) -> list[FineUnit]:
    """Segment a whole summary into consecutively indexed fine units."""
    units: list[FineUnit] = []
    for sentence, span in split_sentences(text, config):
        units.extend(segment_units(sentence, span, summary_id, first_index=len(units), config=config))
    return units
