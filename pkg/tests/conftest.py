import json

import pytest

from faithkit.corpus import ingest_corpus


DOC_RECORDS = [
    {
        "doc_id": "d1",
        "text": "The crew landed on the red planet yesterday. A zeppelin carried the mysterious cargo. The crew slept through the landing.",
    },
    {
        "doc_id": "d2",
        "text": "Dr. Chen studied the reactor core. The coolant pressure fell sharply overnight. Engineers replaced the damaged valve, and the reactor restarted.",
    },
]

SUMMARY_RECORDS = [
    {"summary_id": "s1", "doc_id": "d1", "system_id": "bart", "text": "The crew landed on the red planet, and a zeppelin carried cargo."},
    {"summary_id": "s2", "doc_id": "d2", "system_id": "bart", "text": "The coolant pressure fell overnight, but engineers replaced the valve."},
    {"summary_id": "s3", "doc_id": "d1", "system_id": "bigbird", "text": "The crew slept through the landing of the zeppelin."},
    {"summary_id": "s4", "doc_id": "d2", "system_id": "bigbird", "text": "Dr. Chen studied the reactor core before the restart happened."},
    {"summary_id": "s5", "doc_id": "d1", "system_id": "human", "text": "A zeppelin brought cargo while the crew rested after landing."},
    {"summary_id": "s6", "doc_id": "d2", "system_id": "human", "text": "After the pressure fell, the valve was replaced and the reactor restarted."},
]


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return path


@pytest.fixture
def corpus_files(tmp_path):
    docs = write_jsonl(tmp_path / "docs.jsonl", DOC_RECORDS)
    summaries = write_jsonl(tmp_path / "summaries.jsonl", SUMMARY_RECORDS)
    return docs, summaries


@pytest.fixture
def corpus(corpus_files):
    return ingest_corpus(*corpus_files)
