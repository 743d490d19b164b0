"""Toolkit for unit-level human faithfulness evaluation of long-form summaries."""

from .corpus import (
    Corpus,
    CorpusError,
    MetricScoreTable,
    SourceDocument,
    SourceSentence,
    Summary,
    export_corpus,
    ingest_corpus,
    ingest_metric_scores,
)
from .segment import FineUnit, SegmentConfig, segment_summary, segment_units, split_sentences
from .assign import (
    Assignment,
    make_coarse_assignments,
    make_fine_assignments,
    sample_unit_indices,
    subset_size,
)
from .judgments import (
    AnnotationMatrix,
    CoarseJudgment,
    DuplicateJudgmentError,
    FineJudgment,
    JudgmentLog,
    RaggedMatrixError,
    ScaleSpec,
    build_matrix,
    summary_score_coarse,
    summary_score_fine,
    system_score,
)
from .stats import (
    AgreementReport,
    BootstrapCI,
    agreement_report,
    bootstrap_ci,
    fleiss_kappa,
    interannotator_stddev,
    kendall_tau,
    learning_curve,
    mean_system_ci,
    metric_correlation_ci,
    partial_annotation_curve,
    pearson_r,
    perturbation_report,
    randolph_kappa,
)
from .align import (
    AlignmentCandidate,
    GoldAlignment,
    HintSet,
    bm25_rank,
    ingest_external_scores,
    recall_at_k,
    rouge1_rank,
    select_hints,
)
from .metrics import RougeScore, extractiveness, rouge_l, rouge_n

__version__ = "0.1.0"
