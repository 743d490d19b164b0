"""Command line interface: segmentation, assignment, analysis, alignment,
lexical metrics, and the annotation service.

Analysis subcommands write a CSV table to --out and print a JSON summary to
stdout, so results are both figure-ready and scriptable.
"""
from __future__ import annotations

import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import click

from . import align as alignmod
from . import metrics as metricsmod
from . import stats
from .assign import (
    Assignment,
    make_coarse_assignments,
    make_fine_assignments,
    read_assignments,
    write_assignments,
)
from .corpus import Corpus, export_corpus, ingest_corpus, ingest_metric_scores
from .judgments import (
    FINE,
    COARSE,
    FineJudgment,
    ScaleSpec,
    build_matrix,
    export_matrix_csv,
    read_judgments_jsonl,
    system_score,
)
from .segment import DEFAULT_CONFIG, FineUnit, SegmentConfig, segment_summary


def _load_corpus(docs: str, summaries: str) -> Corpus:
    return ingest_corpus(docs, summaries)


def _read_units(path: str) -> list[FineUnit]:
    units = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                units.append(FineUnit.from_record(json.loads(line)))
    return units


def _units_by_summary(units: list[FineUnit]) -> dict[str, list[FineUnit]]:
    grouped: dict[str, list[FineUnit]] = {}
    for u in units:
        grouped.setdefault(u.summary_id, []).append(u)
    return {sid: sorted(us, key=lambda u: u.unit_index) for sid, us in grouped.items()}


def _write_csv(path: str | None, header: list[str], rows: list[list]) -> None:
    out = open(path, "w", encoding="utf-8", newline="") if path else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if path:
            out.close()


def _emit(summary: dict) -> None:
    click.echo(json.dumps(summary, ensure_ascii=False, indent=2))


def _parse_scale(text: str) -> ScaleSpec:
    lo, hi = text.split(":")
    return ScaleSpec(float(lo), float(hi))


@click.group()
def main() -> None:
    """Human faithfulness evaluation toolkit for long-form summarization."""


@main.command()
@click.option("--summaries", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON overriding conjunctions / abbreviations / min_unit_tokens.")
@click.option("--out", type=click.Path(), default=None, help="Output JSONL (default stdout).")
def segment(summaries: str, config_path: str | None, out: str | None) -> None:
    """Split summaries into clause-level units, one JSONL record per unit."""
    cfg = SegmentConfig.from_file(config_path) if config_path else DEFAULT_CONFIG
    sink = open(out, "w", encoding="utf-8") if out else sys.stdout
    try:
        with open(summaries, encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                rec = json.loads(line)
                for unit in segment_summary(rec["summary_id"], rec["text"], cfg):
                    sink.write(json.dumps(unit.to_record(), ensure_ascii=False) + "\n")
    finally:
        if out:
            sink.close()


@main.command()
@click.option("--summaries", required=True, type=click.Path(exists=True))
@click.option("--units", "units_path", type=click.Path(exists=True), default=None,
              help="Units JSONL from `segment` (required for FINE).")
@click.option("--mode", type=click.Choice(["FINE", "COARSE"]), default="FINE")
@click.option("--fraction", type=float, default=1.0, show_default=True)
@click.option("--annotators", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--hint-mode", type=click.Choice(["NONE", "ALGORITHMIC", "GOLD"]), default="NONE")
@click.option("--scale", default="0:5", show_default=True, help="COARSE rating scale as min:max.")
@click.option("--out", type=click.Path(), default=None)
def assign(summaries: str, units_path: str | None, mode: str, fraction: float,
           annotators: int, seed: int, hint_mode: str, scale: str, out: str | None) -> None:
    """Construct per-annotator assignments as JSONL."""
    assignments: list[Assignment] = []
    with open(summaries, encoding="utf-8") as f:
        summary_recs = [json.loads(line) for line in f if line.strip()]
    if mode == "FINE":
        if units_path is None:
            raise click.UsageError("--units is required for FINE assignments")
        grouped = _units_by_summary(_read_units(units_path))
        for rec in summary_recs:
            from .corpus import Summary

            summary = Summary(rec["summary_id"], rec["doc_id"], rec.get("system_id", ""), rec["text"])
            units = grouped.get(summary.summary_id)
            if not units:
                raise click.ClickException(f"no units for summary {summary.summary_id!r}")
            assignments.extend(
                make_fine_assignments(summary, units, annotators, fraction, seed, hint_mode)
            )
    else:
        spec = _parse_scale(scale)
        for rec in summary_recs:
            from .corpus import Summary

            summary = Summary(rec["summary_id"], rec["doc_id"], rec.get("system_id", ""), rec["text"])
            assignments.extend(make_coarse_assignments(summary, annotators, spec, seed, hint_mode))
    if out:
        write_assignments(assignments, out)
    else:
        for a in assignments:
            click.echo(json.dumps(a.to_record(), ensure_ascii=False))


@main.group()
def analyze() -> None:
    """Statistical analysis over collected judgments."""


_common = [
    click.option("--docs", required=True, type=click.Path(exists=True)),
    click.option("--summaries", required=True, type=click.Path(exists=True)),
    click.option("--judgments", "judgments_path", required=True, type=click.Path(exists=True)),
]


def _with(options):
    def wrap(f):
        for opt in reversed(options):
            f = opt(f)
        return f
    return wrap


@analyze.command()
@_with(_common)
@click.option("--mode", type=click.Choice(["FINE", "COARSE"]), default="FINE")
@click.option("--stddev-denominator", type=click.Choice(["sample", "population"]), default="sample")
@click.option("--out", type=click.Path(), default=None)
def stddev(docs, summaries, judgments_path, mode, stddev_denominator, out) -> None:
    """Average per-summary standard deviation across annotators (100-point scale)."""
    corpus = _load_corpus(docs, summaries)
    matrix = build_matrix(corpus, read_judgments_jsonl(judgments_path), mode)
    value = stats.interannotator_stddev(matrix, denominator=stddev_denominator)
    _write_csv(out, ["provenance", "n_summaries", "n_slots", "stddev"],
               [[mode, matrix.n_summaries, matrix.n_slots, f"{value:.6f}"]])
    _emit({"stddev": value, "denominator": stddev_denominator,
           "n_summaries": matrix.n_summaries, "n_slots": matrix.n_slots})


@analyze.command()
@click.option("--judgments", "judgments_path", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
def kappa(judgments_path, out) -> None:
    """Unit-level agreement: Fleiss kappa, Randolph kappa, all-agree fraction."""
    fine = [j for j in read_judgments_jsonl(judgments_path) if isinstance(j, FineJudgment)]
    if not fine:
        raise click.ClickException("no fine judgments in input")
    by_unit: dict[tuple[str, int], list[int]] = {}
    for j in fine:
        by_unit.setdefault((j.summary_id, j.unit_index), []).append(j.label)
    n_raters = max(len(v) for v in by_unit.values())
    table = [v for v in by_unit.values() if len(v) == n_raters]
    report = stats.agreement_report(table)
    _write_csv(out, ["fleiss_kappa", "randolph_kappa", "all_agree_fraction", "n_items", "n_raters"],
               [[report.fleiss_kappa, report.randolph_kappa,
                 f"{report.all_agree_fraction:.6f}", report.n_items, report.n_raters]])
    _emit({"fleiss_kappa": report.fleiss_kappa, "randolph_kappa": report.randolph_kappa,
           "all_agree_fraction": report.all_agree_fraction,
           "n_items": report.n_items, "n_raters": report.n_raters})


@analyze.command("bootstrap-mean")
@_with(_common)
@click.option("--mode", type=click.Choice(["FINE", "COARSE"]), default="FINE")
@click.option("--k", type=int, default=1000, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def bootstrap_mean(docs, summaries, judgments_path, mode, k, alpha, seed, out) -> None:
    """Per-system mean scores with bootstrap CIs across annotators."""
    corpus = _load_corpus(docs, summaries)
    matrix = build_matrix(corpus, read_judgments_jsonl(judgments_path), mode)
    grouping = corpus.system_of()
    means = system_score(matrix, grouping)
    rows = []
    results = {}
    for system, mean in means.items():
        row_idx = [i for i, sid in enumerate(matrix.summary_ids) if grouping[sid] == system]
        ci = stats.mean_system_ci(matrix.values[row_idx], k=k, alpha=alpha, seed=seed)
        rows.append([system, f"{mean:.6f}", f"{ci.lower:.6f}", f"{ci.upper:.6f}", k, alpha, seed])
        results[system] = {"mean": mean, "lower": ci.lower, "upper": ci.upper}
    _write_csv(out, ["system", "mean", "ci_lower", "ci_upper", "k", "alpha", "seed"], rows)
    _emit({"systems": results, "k": k, "alpha": alpha, "seed": seed})


@analyze.command("bootstrap-corr")
@_with(_common)
@click.option("--metric", "metric_path", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["FINE", "COARSE"]), default="FINE")
@click.option("--method", type=click.Choice(["pearson", "kendall"]), default="pearson")
@click.option("--k", type=int, default=1000, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def bootstrap_corr(docs, summaries, judgments_path, metric_path, mode, method, k, alpha, seed, out) -> None:
    """Bootstrap CI of metric vs human-score correlation."""
    corpus = _load_corpus(docs, summaries)
    matrix = build_matrix(corpus, read_judgments_jsonl(judgments_path), mode)
    table = ingest_metric_scores(metric_path, corpus)
    ci = stats.metric_correlation_ci(matrix, table, method=method, k=k, alpha=alpha, seed=seed)
    point = (stats.pearson_r if method == "pearson" else stats.kendall_tau)(
        matrix.row_means(), [table.scores[sid] for sid in matrix.summary_ids]
    )
    _write_csv(out, ["metric", "method", "correlation", "ci_lower", "ci_upper", "k", "alpha", "seed"],
               [[table.metric_name, method, f"{point:.6f}", f"{ci.lower:.6f}",
                 f"{ci.upper:.6f}", k, alpha, seed]])
    _emit({"metric": table.metric_name, "method": method, "correlation": point,
           "lower": ci.lower, "upper": ci.upper, "k": k, "alpha": alpha, "seed": seed})


@analyze.command("partial-curve")
@click.option("--judgments", "judgments_path", required=True, type=click.Path(exists=True))
@click.option("--fractions", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0", show_default=True)
@click.option("--subsets", type=int, default=1000, show_default=True)
@click.option("--annotators", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def partial_curve(judgments_path, fractions, subsets, annotators, seed, out) -> None:
    """Partial-annotation accuracy/variance curve against full annotation."""
    fine = [j for j in read_judgments_jsonl(judgments_path) if isinstance(j, FineJudgment)]
    fr = [float(x) for x in fractions.split(",")]
    points = stats.partial_annotation_curve(fine, fr, subsets, annotators, seed)
    _write_csv(
        out,
        ["fraction", "tau_p2_5", "tau_median", "tau_p97_5",
         "stddev_mean", "stddev_p2_5", "stddev_p97_5", "n_subsets", "seed"],
        [[p.fraction, f"{p.tau_p2_5:.6f}", f"{p.tau_median:.6f}", f"{p.tau_p97_5:.6f}",
          f"{p.stddev_mean:.6f}", f"{p.stddev_p2_5:.6f}", f"{p.stddev_p97_5:.6f}",
          p.n_subsets, p.seed] for p in points],
    )
    _emit({"points": [asdict(p) for p in points]})


@analyze.command()
@click.option("--judgments", "judgments_path", required=True, type=click.Path(exists=True))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True),
              help="JSONL of {summary_id, unit_index, gold: clean|perturbed}.")
@click.option("--time-cap", type=float, default=600.0, show_default=True,
              help="Seconds; longer per-unit gaps count as breaks, not judging time.")
@click.option("--out", type=click.Path(), default=None)
def perturbation(judgments_path, gold_path, time_cap, out) -> None:
    """Error-detection accuracy/agreement/time, reported per hint mode."""
    fine = [j for j in read_judgments_jsonl(judgments_path) if isinstance(j, FineJudgment)]
    gold: dict[tuple[str, int], str] = {}
    with open(gold_path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                rec = json.loads(line)
                gold[(rec["summary_id"], int(rec["unit_index"]))] = rec["gold"]
    rows = []
    result = {}
    modes = sorted({j.hint_mode for j in fine})
    for hint_mode in modes:
        subset = [j for j in fine if j.hint_mode == hint_mode]
        rep = stats.perturbation_report(subset, gold, time_cap_s=time_cap)
        rows.append([hint_mode, f"{rep.accuracy_2way:.6f}", rep.fleiss_kappa,
                     f"{rep.median_time_all:.3f}", f"{rep.median_time_first5:.3f}", rep.n_judgments])
        result[hint_mode] = asdict(rep)
    _write_csv(out, ["hint_mode", "accuracy_2way", "fleiss_kappa",
                     "median_time_all_s", "median_time_first5_s", "n_judgments"], rows)
    _emit(result)


@analyze.command("learning-curve")
@click.option("--judgments", "judgments_path", required=True, type=click.Path(exists=True))
@click.option("--units", "units_path", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
def learning_curve_cmd(judgments_path, units_path, out) -> None:
    """Mean judging time by within-summary progress decile and hint mode."""
    fine = [j for j in read_judgments_jsonl(judgments_path) if isinstance(j, FineJudgment)]
    counts = {sid: len(us) for sid, us in _units_by_summary(_read_units(units_path)).items()}
    rows = stats.learning_curve(fine, counts)
    _write_csv(out, ["hint_mode", "decile", "mean_elapsed_ms", "n_judgments"],
               [[r.hint_mode, r.decile, f"{r.mean_elapsed_ms:.3f}", r.n_judgments] for r in rows])
    _emit({"rows": [asdict(r) for r in rows]})


@main.group(name="align")
def align_group() -> None:
    """Summary-unit to source-sentence alignment."""


@align_group.command()
@click.option("--docs", required=True, type=click.Path(exists=True))
@click.option("--summaries", required=True, type=click.Path(exists=True))
@click.option("--units", "units_path", required=True, type=click.Path(exists=True))
@click.option("--scorer", type=click.Choice(["bm25", "rouge1", "external"]), default="bm25")
@click.option("--scores", "scores_path", type=click.Path(exists=True), default=None,
              help="Precomputed scores CSV (required with --scorer external).")
@click.option("--out", type=click.Path(), default=None)
def rank(docs, summaries, units_path, scorer, scores_path, out) -> None:
    """Rank source sentences for every unit; emits a candidates CSV."""
    corpus = _load_corpus(docs, summaries)
    units = _read_units(units_path)
    rows = []
    if scorer == "external":
        if scores_path is None:
            raise click.UsageError("--scores is required with --scorer external")
        ranked = alignmod.ingest_external_scores(scores_path, corpus)
        for key in sorted(ranked):
            for r, c in enumerate(ranked[key], start=1):
                rows.append([c.summary_id, c.unit_index, c.sentence_index, f"{c.score:.6f}", r])
    else:
        fn = alignmod.bm25_rank if scorer == "bm25" else alignmod.rouge1_rank
        for unit in units:
            doc = corpus.document_for(unit.summary_id)
            for r, c in enumerate(fn(unit, doc), start=1):
                rows.append([c.summary_id, c.unit_index, c.sentence_index, f"{c.score:.6f}", r])
    _write_csv(out, ["summary_id", "unit_index", "sentence_index", "score", "rank"], rows)


@align_group.command("eval")
@click.option("--docs", required=True, type=click.Path(exists=True))
@click.option("--summaries", required=True, type=click.Path(exists=True))
@click.option("--units", "units_path", required=True, type=click.Path(exists=True))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--scorer", type=click.Choice(["bm25", "rouge1", "external"]), default="bm25")
@click.option("--scores", "scores_path", type=click.Path(exists=True), default=None)
@click.option("--k", "k_list", default="3,5,10", show_default=True)
@click.option("--out", type=click.Path(), default=None)
def eval_cmd(docs, summaries, units_path, gold_path, scorer, scores_path, k_list, out) -> None:
    """Recall@k of an aligner against gold supporting sentences."""
    corpus = _load_corpus(docs, summaries)
    units = _read_units(units_path)
    gold = alignmod.GoldAlignment.read_jsonl(gold_path)
    if scorer == "external":
        if scores_path is None:
            raise click.UsageError("--scores is required with --scorer external")
        ranked = alignmod.ingest_external_scores(scores_path, corpus)
    else:
        fn = alignmod.bm25_rank if scorer == "bm25" else alignmod.rouge1_rank
        ranked = {
            (u.summary_id, u.unit_index): fn(u, corpus.document_for(u.summary_id))
            for u in units
        }
    ks = [int(x) for x in k_list.split(",")]
    recalls = {k: alignmod.recall_at_k(ranked, gold, k) for k in ks}
    _write_csv(out, ["algorithm", *[f"r_at_{k}" for k in ks]],
               [[scorer, *[f"{recalls[k]:.6f}" for k in ks]]])
    _emit({"algorithm": scorer, **{f"r@{k}": v for k, v in recalls.items()}})


@main.group(name="metrics")
def metrics_group() -> None:
    """Reference-based lexical metrics."""


@metrics_group.command()
@click.option("--summaries", required=True, type=click.Path(exists=True),
              help="Candidate summaries JSONL.")
@click.option("--references", required=True, type=click.Path(exists=True),
              help="JSONL of {summary_id, text} reference summaries.")
@click.option("--out", type=click.Path(), default=None)
def rouge(summaries, references, out) -> None:
    """ROUGE-1/2/L precision, recall, and F1 per summary."""
    refs = {}
    with open(references, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                rec = json.loads(line)
                refs[rec["summary_id"]] = rec["text"]
    rows = []
    with open(summaries, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            sid = rec["summary_id"]
            if sid not in refs:
                raise click.ClickException(f"no reference for summary {sid!r}")
            r1 = metricsmod.rouge_n(rec["text"], refs[sid], 1)
            r2 = metricsmod.rouge_n(rec["text"], refs[sid], 2)
            rl = metricsmod.rouge_l(rec["text"], refs[sid])
            rows.append([sid] + [f"{x:.6f}" for x in
                                 (r1.precision, r1.recall, r1.f1,
                                  r2.precision, r2.recall, r2.f1,
                                  rl.precision, rl.recall, rl.f1)])
    _write_csv(out, ["summary_id", "r1_p", "r1_r", "r1_f1",
                     "r2_p", "r2_r", "r2_f1", "rl_p", "rl_r", "rl_f1"], rows)


@metrics_group.command()
@click.option("--docs", required=True, type=click.Path(exists=True))
@click.option("--summaries", required=True, type=click.Path(exists=True))
@click.option("--n", type=int, default=2, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def extractiveness(docs, summaries, n, out) -> None:
    """Fraction of summary n-grams copied verbatim from the source document."""
    corpus = _load_corpus(docs, summaries)
    rows = []
    for sid in sorted(corpus.summaries):
        summary = corpus.summaries[sid]
        doc = corpus.documents[summary.doc_id]
        rows.append([sid, f"{metricsmod.extractiveness(summary.text, doc.text, n):.6f}"])
    _write_csv(out, ["summary_id", "extractiveness"], rows)


@main.command("matrix")
@_with(_common)
@click.option("--mode", type=click.Choice(["FINE", "COARSE"]), default="FINE")
@click.option("--out", required=True, type=click.Path())
def matrix_cmd(docs, summaries, judgments_path, mode, out) -> None:
    """Export the N x M annotation matrix as CSV."""
    corpus = _load_corpus(docs, summaries)
    matrix = build_matrix(corpus, read_judgments_jsonl(judgments_path), mode)
    export_matrix_csv(matrix, out)


@main.command("export-corpus")
@click.option("--docs", required=True, type=click.Path(exists=True))
@click.option("--summaries", required=True, type=click.Path(exists=True))
@click.option("--out-docs", required=True, type=click.Path())
@click.option("--out-summaries", required=True, type=click.Path())
def export_corpus_cmd(docs, summaries, out_docs, out_summaries) -> None:
    """Validate and re-emit a corpus in canonical JSONL form."""
    export_corpus(_load_corpus(docs, summaries), out_docs, out_summaries)


@main.command("project-build")
@click.option("--project-id", required=True)
@click.option("--mode", type=click.Choice(["FINE", "COARSE"]), required=True)
@click.option("--docs", required=True, type=click.Path(exists=True))
@click.option("--summaries", required=True, type=click.Path(exists=True))
@click.option("--units", "units_path", type=click.Path(exists=True), default=None)
@click.option("--assignments", "assignments_path", required=True, type=click.Path(exists=True))
@click.option("--hints", "hints_path", type=click.Path(exists=True), default=None,
              help="JSONL of {summary_id, unit_index, highlights}.")
@click.option("--instructions", type=click.Path(exists=True), default=None,
              help="Plain-text instructions shown to annotators.")
@click.option("--scale", default=None, help="COARSE scale as min:max.")
@click.option("--out", type=click.Path(), default=None)
def project_build(project_id, mode, docs, summaries, units_path, assignments_path,
                  hints_path, instructions, scale, out) -> None:
    """Assemble a POST /projects payload from corpus, unit, and assignment files."""
    corpus = _load_corpus(docs, summaries)
    payload: dict = {
        "project_id": project_id,
        "mode": mode,
        "documents": [
            {
                "doc_id": d.doc_id,
                "text": d.text,
                "sentences": [{"text": s.text, "span": list(s.span)} for s in d.sentences],
            }
            for d in corpus.documents.values()
        ],
        "summaries": [
            {"summary_id": s.summary_id, "doc_id": s.doc_id,
             "system_id": s.system_id, "text": s.text}
            for s in corpus.summaries.values()
        ],
        "assignments": [a.to_record() for a in read_assignments(assignments_path)],
    }
    if units_path:
        payload["units"] = [u.to_record() for u in _read_units(units_path)]
    if hints_path:
        with open(hints_path, encoding="utf-8") as f:
            payload["hints"] = [json.loads(line) for line in f if line.strip()]
    if instructions:
        payload["instructions"] = Path(instructions).read_text(encoding="utf-8")
    if scale:
        spec = _parse_scale(scale)
        payload["scale"] = {"min": spec.min, "max": spec.max}
    text = json.dumps(payload, ensure_ascii=False)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text)


@main.command()
@click.option("--port", type=int, default=8000, show_default=True, envvar="FAITHKIT_PORT")
@click.option("--host", default="127.0.0.1", show_default=True, envvar="FAITHKIT_HOST")
@click.option("--data-dir", required=True, type=click.Path(), envvar="FAITHKIT_DATA_DIR")
@click.option("--ui-dir", type=click.Path(exists=True), default=None, envvar="FAITHKIT_UI_DIR")
def serve(port: int, host: str, data_dir: str, ui_dir: str | None) -> None:
    """Run the annotation service."""
    import uvicorn

    from .service import create_app

    Path(data_dir).mkdir(parents=True, exist_ok=True)
    uvicorn.run(create_app(data_dir, ui_dir), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
