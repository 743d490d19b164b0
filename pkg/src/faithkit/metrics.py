"""Reference-based lexical metrics computed natively: ROUGE-n, ROUGE-L,
and bigram extractiveness. Neural metrics arrive as precomputed score files."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .tokens import ngrams, tokenize


@dataclass(frozen=True)
class RougeScore:
    variant: str  # "1", "2", or "L"
    precision: float
    recall: float
    f1: float


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def rouge_n(candidate: str, reference: str, n: int) -> RougeScore:
    """N-gram overlap precision/recall/F1 with clipped counts, n in {1, 2}."""
    if n not in (1, 2):
        raise ValueError(f"n must be 1 or 2, got {n}")
    cand = Counter(ngrams(tokenize(candidate), n))
    ref = Counter(ngrams(tokenize(reference), n))
    overlap = sum(min(c, ref[g]) for g, c in cand.items())
    cand_total = sum(cand.values())
    ref_total = sum(ref.values())
    precision = overlap / cand_total if cand_total else 0.0
    recall = overlap / ref_total if ref_total else 0.0
    return RougeScore(variant=str(n), precision=precision, recall=recall, f1=_f1(precision, recall))


def _lcs_length(a: list[str], b: list[str]) -> int:
    # Two-row DP; token counts here are summary-sized, so O(len^2) is fine.
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """Longest-common-subsequence precision/recall/F1 at the token level."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    lcs = _lcs_length(cand, ref)
    precision = lcs / len(cand) if cand else 0.0
    recall = lcs / len(ref) if ref else 0.0
    return RougeScore(variant="L", precision=precision, recall=recall, f1=_f1(precision, recall))


def extractiveness(summary: str, source: str, n: int = 2) -> float:
    """Fraction of summary n-gram occurrences copied verbatim from the source."""
    summary_grams = ngrams(tokenize(summary), n)
    if not summary_grams:
        return 0.0
    source_grams = set(ngrams(tokenize(source), n))
    present = sum(1 for g in summary_grams if g in source_grams)
    return present / len(summary_grams)
