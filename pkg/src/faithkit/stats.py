"""Analysis engine: bootstrap confidence intervals, agreement, correlations,
partial-annotation simulation, perturbation reports, and learning curves.

Every Monte-Carlo operation takes an explicit seed and records it in its
output so results can be rerun exactly. Bootstrap iterations each derive
their randomness from (seed, iteration), which makes results independent of
execution order.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .assign import subset_size, unit_permutation
from .corpus import MetricScoreTable
from .judgments import AnnotationMatrix, FineJudgment


class UndefinedStatisticError(ValueError):
    """The requested statistic has no defined value on this input."""


class StatisticFailure(RuntimeError):
    """The user statistic raised during a bootstrap resample."""


def _as_array(X: AnnotationMatrix | np.ndarray) -> np.ndarray:
    if isinstance(X, AnnotationMatrix):
        return X.values
    a = np.asarray(X, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected an N x M matrix, got shape {a.shape}")
    return a


# ---------------------------------------------------------------------------
# Bootstrap confidence intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BootstrapCI:
    lower: float
    upper: float
    alpha: float
    iterations: int
    statistic_name: str
    seed: int

    def __post_init__(self) -> None:
        if not (0 < self.alpha < 1):
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.lower > self.upper:
            raise ValueError("lower bound exceeds upper bound")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def _iteration_rng(seed: int, iteration: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence((seed & 0xFFFFFFFFFFFFFFFF, iteration))
    )


def bootstrap_samples(
    X: AnnotationMatrix | np.ndarray,
    statistic: Callable[[np.ndarray], float],
    k: int,
    seed: int,
) -> np.ndarray:
    """The k resampled statistic values underlying a bootstrap CI.

    For each iteration and each summary row independently, annotator columns
    are drawn with replacement (M draws from {0..M-1}) and the statistic is
    evaluated on the resampled matrix.
    """
    values = _as_array(X)
    n, m = values.shape
    rows = np.arange(n)[:, None]
    samples = np.empty(k, dtype=float)
    for i in range(k):
        draws = _iteration_rng(seed, i).integers(0, m, size=(n, m))
        resampled = values[rows, draws]
        try:
            samples[i] = statistic(resampled)
        except Exception as e:  # noqa: BLE001 - context for which resample failed
            raise StatisticFailure(f"statistic failed on bootstrap iteration {i}: {e}") from e
    return samples


def bootstrap_ci(
    X: AnnotationMatrix | np.ndarray,
    statistic: Callable[[np.ndarray], float],
    k: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
    statistic_name: str = "statistic",
) -> BootstrapCI:
    """Percentile bootstrap CI of a matrix statistic under annotator resampling.

    Percentiles use linear interpolation between closest ranks. Deterministic
    given the seed.
    """
    if k < 100:
        raise ValueError(f"k must be >= 100 for a stable percentile estimate, got {k}")
    samples = bootstrap_samples(X, statistic, k, seed)
    lower, upper = np.percentile(samples, [100 * alpha / 2, 100 * (1 - alpha / 2)])
    return BootstrapCI(
        lower=float(lower),
        upper=float(upper),
        alpha=alpha,
        iterations=k,
        statistic_name=statistic_name,
        seed=seed,
    )


def grand_mean(values: np.ndarray) -> float:
    """Mean over summaries of per-summary mean over annotator slots."""
    return float(values.mean(axis=1).mean())


def mean_system_ci(
    X: AnnotationMatrix | np.ndarray,
    k: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
) -> BootstrapCI:
    """CI of mean system performance (matrix restricted to one system's rows)."""
    return bootstrap_ci(X, grand_mean, k=k, alpha=alpha, seed=seed, statistic_name="mean_score")


def pearson_r(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size != b.size or a.size < 2:
        raise ValueError("vectors must have equal length >= 2")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise UndefinedStatisticError("correlation undefined for a zero-variance vector")
    return float(np.corrcoef(a, b)[0, 1])


def kendall_tau(a: Sequence[float], b: Sequence[float]) -> float:
    """Tie-corrected Kendall tau-b in [-1, 1].

    Pair counts are exact integers, so tau of a vector with itself is
    exactly 1.0 even in the presence of ties.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size != b.size or a.size < 2:
        raise ValueError("vectors must have equal length >= 2")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise UndefinedStatisticError("tau undefined when a vector is entirely tied")
    upper = np.triu_indices(a.size, k=1)
    sign_a = np.sign(a[:, None] - a[None, :])[upper].astype(np.int64)
    sign_b = np.sign(b[:, None] - b[None, :])[upper].astype(np.int64)
    concordant_minus_discordant = int((sign_a * sign_b).sum())
    n0 = a.size * (a.size - 1) // 2
    untied_a = n0 - int((sign_a == 0).sum())
    untied_b = n0 - int((sign_b == 0).sum())
    return concordant_minus_discordant / math.sqrt(untied_a * untied_b)


def _metric_vector(
    metric: MetricScoreTable | Sequence[float], X: AnnotationMatrix | np.ndarray
) -> np.ndarray:
    if isinstance(metric, MetricScoreTable):
        if not isinstance(X, AnnotationMatrix):
            raise ValueError("a MetricScoreTable requires an AnnotationMatrix with summary ids")
        missing = [sid for sid in X.summary_ids if sid not in metric.scores]
        if missing:
            raise ValueError(
                f"metric {metric.metric_name!r} does not cover rows: {', '.join(missing[:10])}"
            )
        return np.array([metric.scores[sid] for sid in X.summary_ids], dtype=float)
    vec = np.asarray(metric, dtype=float)
    if vec.shape[0] != _as_array(X).shape[0]:
        raise ValueError("metric vector length does not match matrix rows")
    return vec


def metric_correlation_ci(
    X: AnnotationMatrix | np.ndarray,
    metric: MetricScoreTable | Sequence[float],
    method: str = "pearson",
    k: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
) -> BootstrapCI:
    """CI of the correlation between human row means and an automatic metric."""
    vec = _metric_vector(metric, X)
    if np.ptp(vec) == 0:
        raise UndefinedStatisticError("correlation undefined: metric vector has zero variance")
    corr = {"pearson": pearson_r, "kendall": kendall_tau}.get(method.lower())
    if corr is None:
        raise ValueError(f"method must be 'pearson' or 'kendall', got {method!r}")

    def statistic(values: np.ndarray) -> float:
        return corr(values.mean(axis=1), vec)

    name = f"{method.lower()}_vs_" + (
        metric.metric_name if isinstance(metric, MetricScoreTable) else "metric"
    )
    return bootstrap_ci(X, statistic, k=k, alpha=alpha, seed=seed, statistic_name=name)


# ---------------------------------------------------------------------------
# Inter-annotator variance and agreement
# ---------------------------------------------------------------------------

def interannotator_stddev(X: AnnotationMatrix | np.ndarray, denominator: str = "sample") -> float:
    """Mean over summaries of the per-summary std-dev of annotator scores."""
    values = _as_array(X)
    if values.shape[1] < 2:
        raise ValueError("need at least 2 annotator slots for a standard deviation")
    ddof = {"sample": 1, "population": 0}.get(denominator)
    if ddof is None:
        raise ValueError(f"denominator must be 'sample' or 'population', got {denominator!r}")
    return float(values.std(axis=1, ddof=ddof).mean())


@dataclass(frozen=True)
class AgreementReport:
    fleiss_kappa: float | None  # None when chance agreement is total (P_e = 1)
    randolph_kappa: float
    all_agree_fraction: float
    n_items: int
    n_raters: int


def _counts_table(labels: Sequence[Sequence]) -> np.ndarray:
    """Item x category count table from per-item rater label lists."""
    if not labels:
        raise ValueError("no items")
    n_raters = len(labels[0])
    if n_raters < 2:
        raise ValueError("need at least 2 raters per item")
    if any(len(row) != n_raters for row in labels):
        raise ValueError("ragged table: every item must have the same rater count")
    categories = sorted({lab for row in labels for lab in row}, key=repr)
    cat_index = {c: i for i, c in enumerate(categories)}
    table = np.zeros((len(labels), max(len(categories), 2)), dtype=float)
    for i, row in enumerate(labels):
        for lab in row:
            table[i, cat_index[lab]] += 1
    return table


def _mean_pairwise_agreement(table: np.ndarray) -> float:
    n = table.sum(axis=1)[0]
    per_item = ((table**2).sum(axis=1) - n) / (n * (n - 1))
    return float(per_item.mean())


def fleiss_kappa(labels: Sequence[Sequence]) -> float | None:
    """Fleiss' kappa over an item x rater label table; None when P_e = 1."""
    table = _counts_table(labels)
    p_bar = _mean_pairwise_agreement(table)
    p_j = table.sum(axis=0) / table.sum()
    p_e = float((p_j**2).sum())
    if math.isclose(p_e, 1.0):
        return None
    return (p_bar - p_e) / (1 - p_e)


def randolph_kappa(labels: Sequence[Sequence]) -> float:
    """Free-marginal kappa: chance agreement fixed at 1/q for q categories."""
    table = _counts_table(labels)
    q = table.shape[1]
    p_bar = _mean_pairwise_agreement(table)
    return (p_bar - 1 / q) / (1 - 1 / q)


def all_agree_fraction(labels: Sequence[Sequence]) -> float:
    table = _counts_table(labels)
    n = table.sum(axis=1)[0]
    return float((table.max(axis=1) == n).mean())


def agreement_report(labels: Sequence[Sequence]) -> AgreementReport:
    table = _counts_table(labels)
    return AgreementReport(
        fleiss_kappa=fleiss_kappa(labels),
        randolph_kappa=randolph_kappa(labels),
        all_agree_fraction=all_agree_fraction(labels),
        n_items=table.shape[0],
        n_raters=int(table.sum(axis=1)[0]),
    )


# ---------------------------------------------------------------------------
# Partial annotation simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PartialCurvePoint:
    fraction: float
    n_subsets: int
    tau_p2_5: float
    tau_median: float
    tau_p97_5: float
    stddev_mean: float
    stddev_p2_5: float
    stddev_p97_5: float
    seed: int


def _full_label_arrays(
    judgments: Iterable[FineJudgment], annotators: int
) -> dict[str, np.ndarray]:
    """summary_id -> (M x n_units) label array; input must be full coverage."""
    per_summary: dict[str, dict[tuple[int, int], int]] = defaultdict(dict)
    for j in judgments:
        per_summary[j.summary_id][(j.annotator_slot, j.unit_index)] = j.label
    if not per_summary:
        raise ValueError("no fine judgments supplied")
    arrays: dict[str, np.ndarray] = {}
    for summary_id, cells in per_summary.items():
        n_units = max(u for _, u in cells) + 1
        expected = annotators * n_units
        if len(cells) != expected:
            raise ValueError(
                f"summary {summary_id!r} is not fully annotated: "
                f"{len(cells)} of {expected} (slot, unit) labels present"
            )
        arr = np.zeros((annotators, n_units), dtype=float)
        for (slot, unit), label in cells.items():
            if slot >= annotators:
                raise ValueError(f"slot {slot} out of range for M={annotators}")
            arr[slot, unit] = label
        arrays[summary_id] = arr
    return arrays


def partial_annotation_curve(
    judgments: Iterable[FineJudgment],
    fractions: Sequence[float],
    n_subsets: int,
    annotators: int,
    seed: int = 0,
) -> list[PartialCurvePoint]:
    """Simulate partial annotation against the full-annotation scores.

    For every fraction f and every seeded subset draw, each annotator slot
    keeps its own random unit subset (the same per-draw stream across
    fractions, so subsets are nested as f grows). Reports the 2.5/50/97.5
    percentiles of the Kendall tau between partial and full summary scores,
    and the spread of the inter-annotator std-dev.
    """
    if n_subsets < 100:
        raise ValueError(f"n_subsets must be >= 100, got {n_subsets}")
    for f in fractions:
        if not (0 < f <= 1):
            raise ValueError(f"fractions must lie in (0, 1], got {f}")

    labels = _full_label_arrays(judgments, annotators)
    summary_ids = sorted(labels)
    n_units = {sid: labels[sid].shape[1] for sid in summary_ids}
    sizes = {sid: [subset_size(f, n_units[sid]) for f in fractions] for sid in summary_ids}

    full_matrix = np.array([100.0 * labels[sid].mean(axis=1) for sid in summary_ids])
    full_scores = full_matrix.mean(axis=1)

    n, m = len(summary_ids), annotators
    taus = np.empty((len(fractions), n_subsets))
    stddevs = np.empty((len(fractions), n_subsets))
    for d in range(n_subsets):
        draw_seed = (seed << 20) + d
        partial = np.empty((len(fractions), n, m))
        for i, sid in enumerate(summary_ids):
            arr = labels[sid]
            for slot in range(m):
                perm = unit_permutation(n_units[sid], draw_seed, sid, slot)
                # Prefix sums give every fraction's score from one permutation.
                # Labels are binary, so sums are exact integers and the
                # expression matches summary_score_fine bit for bit (f = 1.0
                # therefore reproduces the full scores exactly).
                prefix = np.cumsum(arr[slot, perm])
                for fi, size in enumerate(sizes[sid]):
                    partial[fi, i, slot] = 100.0 * (prefix[size - 1] / size)
        for fi in range(len(fractions)):
            taus[fi, d] = kendall_tau(partial[fi].mean(axis=1), full_scores)
            stddevs[fi, d] = interannotator_stddev(partial[fi])

    points = []
    for fi, f in enumerate(fractions):
        t_lo, t_med, t_hi = np.percentile(taus[fi], [2.5, 50, 97.5])
        s_lo, s_hi = np.percentile(stddevs[fi], [2.5, 97.5])
        points.append(
            PartialCurvePoint(
                fraction=float(f),
                n_subsets=n_subsets,
                tau_p2_5=float(t_lo),
                tau_median=float(t_med),
                tau_p97_5=float(t_hi),
                stddev_mean=float(stddevs[fi].mean()),
                stddev_p2_5=float(s_lo),
                stddev_p97_5=float(s_hi),
                seed=seed,
            )
        )
    return points


# ---------------------------------------------------------------------------
# Perturbation detection report and learning curves
# ---------------------------------------------------------------------------

CLEAN = "clean"
PERTURBED = "perturbed"

# Per-unit gaps above this are treated as annotator breaks, not judging time.
DEFAULT_TIME_CAP_S = 600.0


@dataclass(frozen=True)
class PerturbationReport:
    accuracy_2way: float
    fleiss_kappa: float | None
    median_time_all: float  # seconds
    median_time_first5: float  # seconds
    n_judgments: int


def _median_seconds(times_ms: Sequence[int], cap_s: float) -> float:
    kept = [t / 1000.0 for t in times_ms if 0 < t / 1000.0 <= cap_s]
    if not kept:
        return float("nan")
    return float(np.median(kept))


def perturbation_report(
    judgments: Iterable[FineJudgment],
    gold: Mapping[tuple[str, int], str],
    time_cap_s: float = DEFAULT_TIME_CAP_S,
) -> PerturbationReport:
    """Accuracy, agreement, and median times for error-detection judgments.

    ``gold`` maps (summary_id, unit_index) to "clean" or "perturbed"; a
    judgment is correct when supported (1) matches clean. Kappa is computed
    over units that received the maximal rater count. Median times use all
    judged units and each slot's first five units per summary, excluding
    per-unit gaps above the cap.
    """
    judgments = list(judgments)
    if not judgments:
        raise ValueError("no judgments supplied")

    correct = 0
    for j in judgments:
        key = (j.summary_id, j.unit_index)
        if key not in gold:
            raise ValueError(f"unit {key} has no gold perturbation label")
        if gold[key] not in (CLEAN, PERTURBED):
            raise ValueError(f"gold label for {key} must be 'clean' or 'perturbed'")
        correct += int(j.label == (1 if gold[key] == CLEAN else 0))

    by_unit: dict[tuple[str, int], list[int]] = defaultdict(list)
    for j in judgments:
        by_unit[(j.summary_id, j.unit_index)].append(j.label)
    max_raters = max(len(v) for v in by_unit.values())
    kappa = None
    if max_raters >= 2:
        table = [v for v in by_unit.values() if len(v) == max_raters]
        kappa = fleiss_kappa(table)

    all_times = [j.elapsed_ms for j in judgments]
    first5: list[int] = []
    by_slot_summary: dict[tuple[str, int], list[FineJudgment]] = defaultdict(list)
    for j in judgments:
        by_slot_summary[(j.summary_id, j.annotator_slot)].append(j)
    for js in by_slot_summary.values():
        js = sorted(js, key=lambda j: j.unit_index)
        first5.extend(j.elapsed_ms for j in js[:5])

    return PerturbationReport(
        accuracy_2way=correct / len(judgments),
        fleiss_kappa=kappa,
        median_time_all=_median_seconds(all_times, time_cap_s),
        median_time_first5=_median_seconds(first5, time_cap_s),
        n_judgments=len(judgments),
    )


@dataclass(frozen=True)
class LearningCurveRow:
    hint_mode: str
    decile: int  # 0..9, position of the unit within its summary
    mean_elapsed_ms: float
    n_judgments: int


def learning_curve(
    judgments: Iterable[FineJudgment],
    n_units_by_summary: Mapping[str, int],
) -> list[LearningCurveRow]:
    """Mean judging time by within-summary progress decile, split by hint mode."""
    acc: dict[tuple[str, int], list[int]] = defaultdict(list)
    for j in judgments:
        total = n_units_by_summary.get(j.summary_id)
        if not total:
            raise ValueError(f"unknown unit count for summary {j.summary_id!r}")
        decile = min(9, 10 * j.unit_index // total)
        acc[(j.hint_mode, decile)].append(j.elapsed_ms)
    return [
        LearningCurveRow(
            hint_mode=mode,
            decile=decile,
            mean_elapsed_ms=float(np.mean(times)),
            n_judgments=len(times),
        )
        for (mode, decile), times in sorted(acc.items())
    ]
