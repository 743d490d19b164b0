import json

import pytest

from faithkit.corpus import (
    CorpusError,
    export_corpus,
    ingest_corpus,
    ingest_metric_scores,
)

from conftest import SUMMARY_RECORDS, write_jsonl


class TestIngestCorpus:
    def test_system_grouping(self, corpus):
        groups = corpus.systems()
        assert set(groups) == {"bart", "bigbird", "human"}
        assert all(len(g) == 2 for g in groups.values())
        assert len(corpus.documents) == 2

    def test_dangling_doc_reference(self, tmp_path, corpus_files):
        docs, _ = corpus_files
        bad = write_jsonl(
            tmp_path / "bad.jsonl",
            [{"summary_id": "sx", "doc_id": "d9", "system_id": "bart", "text": "x y z."}],
        )
        with pytest.raises(CorpusError, match="d9"):
            ingest_corpus(docs, bad)

    def test_empty_summary_file(self, tmp_path, corpus_files):
        docs, _ = corpus_files
        empty = tmp_path / "empty.jsonl"
        empty.write_text("", encoding="utf-8")
        corpus = ingest_corpus(docs, empty)
        assert corpus.summaries == {}

    def test_duplicate_ids_rejected(self, tmp_path):
        docs = write_jsonl(
            tmp_path / "docs.jsonl",
            [{"doc_id": "d1", "text": "One. Two."}, {"doc_id": "d1", "text": "Three."}],
        )
        empty = write_jsonl(tmp_path / "none.jsonl", [])
        with pytest.raises(CorpusError, match=r"docs\.jsonl:2.*duplicate"):
            ingest_corpus(docs, empty)

    def test_parse_failure_reports_line(self, tmp_path):
        docs = tmp_path / "docs.jsonl"
        docs.write_text('{"doc_id": "d1", "text": "Ok."}\n{broken\n', encoding="utf-8")
        empty = write_jsonl(tmp_path / "none.jsonl", [])
        with pytest.raises(CorpusError, match=r"docs\.jsonl:2"):
            ingest_corpus(docs, empty)

    def test_missing_field_reports_line(self, tmp_path):
        docs = write_jsonl(tmp_path / "docs.jsonl", [{"doc_id": "d1"}])
        empty = write_jsonl(tmp_path / "none.jsonl", [])
        with pytest.raises(CorpusError, match=r"docs\.jsonl:1.*'text'"):
            ingest_corpus(docs, empty)

    def test_referential_integrity(self, corpus):
        for s in corpus.summaries.values():
            assert s.doc_id in corpus.documents

    def test_text_normalization(self, tmp_path):
        docs = write_jsonl(
            tmp_path / "docs.jsonl",
            [{"doc_id": "d1", "text": "Café closed.\r\nIt reopened."}],
        )
        empty = write_jsonl(tmp_path / "none.jsonl", [])
        doc = ingest_corpus(docs, empty).documents["d1"]
        assert "\r" not in doc.text
        assert "café" in doc.text.lower()
        for s in doc.sentences:
            assert doc.text[s.span[0] : s.span[1]] == s.text

    def test_presegmented_strings_override_splitter(self, tmp_path):
        docs = write_jsonl(
            tmp_path / "docs.jsonl",
            [{"doc_id": "d1", "text": "Alpha beta. Gamma delta.",
              "sentences": ["Alpha beta. Gamma delta."]}],
        )
        empty = write_jsonl(tmp_path / "none.jsonl", [])
        doc = ingest_corpus(docs, empty).documents["d1"]
        assert len(doc.sentences) == 1
        assert doc.sentences[0].span == (0, 24)

    def test_presegmented_span_objects(self, tmp_path):
        docs = write_jsonl(
            tmp_path / "docs.jsonl",
            [{"doc_id": "d1", "text": "Alpha beta. Gamma delta.",
              "sentences": [{"text": "Alpha beta.", "span": [0, 11]},
                            {"text": "Gamma delta.", "span": [12, 24]}]}],
        )
        empty = write_jsonl(tmp_path / "none.jsonl", [])
        doc = ingest_corpus(docs, empty).documents["d1"]
        assert [s.text for s in doc.sentences] == ["Alpha beta.", "Gamma delta."]

    def test_presegmented_mismatch_rejected(self, tmp_path):
        docs = write_jsonl(
            tmp_path / "docs.jsonl",
            [{"doc_id": "d1", "text": "Alpha beta.",
              "sentences": [{"text": "Alpha beta?", "span": [0, 11]}]}],
        )
        empty = write_jsonl(tmp_path / "none.jsonl", [])
        with pytest.raises(CorpusError, match="does not match"):
            ingest_corpus(docs, empty)

    def test_overlapping_presegmented_spans_rejected(self, tmp_path):
        docs = write_jsonl(
            tmp_path / "docs.jsonl",
            [{"doc_id": "d1", "text": "Alpha beta. Gamma.",
              "sentences": [{"text": "Alpha beta.", "span": [0, 11]},
                            {"text": "beta. Gamma.", "span": [6, 18]}]}],
        )
        empty = write_jsonl(tmp_path / "none.jsonl", [])
        with pytest.raises(CorpusError, match="overlap"):
            ingest_corpus(docs, empty)


class TestRoundTrip:
    def test_export_then_ingest_is_byte_identical(self, corpus, tmp_path):
        d1, s1 = tmp_path / "d1.jsonl", tmp_path / "s1.jsonl"
        export_corpus(corpus, d1, s1)
        again = ingest_corpus(d1, s1)
        d2, s2 = tmp_path / "d2.jsonl", tmp_path / "s2.jsonl"
        export_corpus(again, d2, s2)
        assert d1.read_bytes() == d2.read_bytes()
        assert s1.read_bytes() == s2.read_bytes()


class TestMetricScores:
    def _write(self, tmp_path, rows, header="summary_id,bartscore"):
        path = tmp_path / "metric.csv"
        path.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
        return path

    def test_full_table(self, corpus, tmp_path):
        rows = [f"{rec['summary_id']},{i / 10}" for i, rec in enumerate(SUMMARY_RECORDS)]
        table = ingest_metric_scores(self._write(tmp_path, rows), corpus)
        assert table.metric_name == "bartscore"
        assert len(table.scores) == 6

    def test_non_numeric_score(self, corpus, tmp_path):
        path = self._write(tmp_path, ["s1,abc"])
        with pytest.raises(CorpusError, match=r":2.*non-numeric.*'abc'"):
            ingest_metric_scores(path, corpus)

    def test_missing_summary_listed(self, corpus, tmp_path):
        rows = [f"{rec['summary_id']},0.5" for rec in SUMMARY_RECORDS[:-1]]
        with pytest.raises(CorpusError, match="missing 1 summaries: s6"):
            ingest_metric_scores(self._write(tmp_path, rows), corpus)

    def test_unknown_summary(self, corpus, tmp_path):
        rows = [f"{rec['summary_id']},0.5" for rec in SUMMARY_RECORDS] + ["zz,0.1"]
        with pytest.raises(CorpusError, match="unknown summary_id 'zz'"):
            ingest_metric_scores(self._write(tmp_path, rows), corpus)

    def test_bad_header(self, corpus, tmp_path):
        path = self._write(tmp_path, ["s1,0.5"], header="id,score,extra")
        with pytest.raises(CorpusError, match="header"):
            ingest_metric_scores(path, corpus)

    def test_without_corpus_no_coverage_check(self, tmp_path):
        table = ingest_metric_scores(self._write(tmp_path, ["s1,0.5"]))
        assert table.scores == {"s1": 0.5}

    def test_120_rows(self, tmp_path):
        rows = [f"s{i},{i}" for i in range(120)]
        table = ingest_metric_scores(self._write(tmp_path, rows))
        assert len(table.scores) == 120
