"""Shared tokenizer used by the alignment rankers and the lexical metrics."""
from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# Fixed list so alignment scores are reproducible across runs and platforms.
STOPWORDS = frozenset(
    """
    a about above after again all am an and any are as at be because been
    before being below between both but by could did do does doing down
    during each few for from further had has have having he her here hers
    him his how i if in into is it its itself just me more most my no nor
    not of off on once only or other our ours out over own s same she so
    some such t than that the their theirs them then there these they this
    those through to too under until up very was we were what when where
    which while who whom why will with you your yours
    """.split()
)


def tokenize(text: str, *, drop_stopwords: bool = False, stem: bool = False) -> list[str]:
    """Lowercase and split on non-alphanumerics; optional stopword drop and plural folding."""
    tokens = _TOKEN_RE.findall(text.lower())
    if drop_stopwords:
        tokens = [t for t in tokens if t not in STOPWORDS]
    if stem:
        tokens = [_fold_plural(t) for t in tokens]
    return tokens


def _fold_plural(token: str) -> str:
    # Light S-stemmer; full stemming is intentionally out (non-reproducible across libs).
    if len(token) > 4 and token.endswith("ies"):
        return token[:-3] + "y"
    if len(token) > 3 and token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    return token


def ngrams(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    if n < 1 or len(tokens) < n:
        return []
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]
