import pytest

from faithkit.segment import (
    DEFAULT_CONFIG,
    SegmentConfig,
    segment_summary,
    segment_units,
    split_sentences,
)


class TestSplitSentences:
    def test_three_plain_sentences(self):
        assert len(split_sentences("A. B? C!")) == 3

    def test_empty_and_whitespace(self):
        assert split_sentences("") == []
        assert split_sentences("   \n ") == []

    def test_abbreviation_does_not_terminate(self):
        # Applying the exception list by hand: "Dr." is protected, "Smith." ends.
        sentences = [s for s, _ in split_sentences("He met Dr. Smith. She left.")]
        assert len(sentences) == 2
        assert sentences[0].startswith("He met Dr. Smith.")

    @pytest.mark.parametrize(
        "text,expected",
        [
            ("See Fig. 3 for details. The trend holds.", 2),
            ("We use flour, e.g. rye flour. It rises.", 2),
            ("The value, i.e. the mean, rose. It fell later.", 2),
        ],
    )
    def test_exception_list(self, text, expected):
        assert len(split_sentences(text)) == expected

    def test_spans_tile_the_text(self):
        text = "First one here. Second one there! Third? Yes, the third.\n\nNew paragraph without terminator"
        sentences = split_sentences(text)
        assert sentences[0][1][0] == 0
        assert sentences[-1][1][1] == len(text)
        for (_, a), (_, b) in zip(sentences, sentences[1:]):
            assert a[1] == b[0]
        for s, (lo, hi) in sentences:
            assert text[lo:hi] == s

    def test_paragraph_break_without_terminator(self):
        assert len(split_sentences("no terminator here\n\nsecond paragraph")) == 2

    def test_question_exclamation_runs(self):
        assert len(split_sentences("Really?! He stayed... Then he left.")) == 3


class TestSegmentUnits:
    def test_comma_conjunction_split(self):
        # Hand application of the split rules from the sentence.
        units = segment_summary("s", "He ran to the store, and she stayed home.")
        assert [u.text for u in units] == ["He ran to the store,", "and she stayed home."]

    def test_no_split_points(self):
        units = segment_summary("s", "It rained.")
        assert [u.text for u in units] == ["It rained."]

    def test_semicolon_and_conjunction_sentence(self):
        # With the default 4-token minimum the two leading 2-token clauses merge;
        # a 2-token minimum keeps all three clauses separate.
        text = "X happened; Y happened, but Z did not."
        assert [u.text for u in segment_summary("s", text)] == [
            "X happened; Y happened,",
            "but Z did not.",
        ]
        loose = SegmentConfig(min_unit_tokens=2)
        assert [u.text for u in segment_summary("s", text, loose)] == [
            "X happened;",
            "Y happened,",
            "but Z did not.",
        ]

    def test_noun_phrase_coordination_not_shattered(self):
        # "cats and dogs" has no comma before "and", so it must stay together.
        units = segment_summary("s", "The shelter housed cats and dogs during the long winter.")
        assert len(units) == 1

    def test_subordinator_split(self):
        units = segment_summary(
            "s", "The engineers replaced the valve quickly, because the pressure kept falling fast."
        )
        assert len(units) == 2
        assert units[1].text.startswith("because")

    def test_short_fragment_merges_left(self):
        units = segment_summary("s", "The reactor restarted without further incidents, and held.")
        assert [u.text for u in units] == [
            "The reactor restarted without further incidents, and held."
        ]

    def test_at_least_one_unit_per_sentence(self):
        for text in ["Tiny.", "No, sir.", "Stop; go."]:
            assert len(segment_summary("s", text)) >= 1

    def test_determinism(self):
        text = "The crew landed, and the ship burned; nobody was hurt, but the cargo was lost."
        assert segment_summary("s", text) == segment_summary("s", text)

    def test_unit_text_matches_span(self):
        text = "The crew landed, and the ship burned; nobody was hurt, but the cargo was lost."
        for u in segment_summary("s", text):
            assert u.text == text[u.span[0] : u.span[1]]
            assert u.text.strip() == u.text != ""

    def test_spans_ordered_and_disjoint(self):
        text = "The crew landed, and the ship burned; nobody was hurt, but the cargo was lost."
        units = segment_summary("s", text)
        for a, b in zip(units, units[1:]):
            assert a.span[1] <= b.span[0]
        assert [u.unit_index for u in units] == list(range(len(units)))

    def test_coverage_outside_spans_is_whitespace(self):
        text = (
            "The expedition reached the summit at dawn, but the storm returned quickly. "
            "They descended at once; the camp was gone, and the radio was silent."
        )
        units = segment_summary("s", text)
        covered = set()
        for u in units:
            covered.update(range(u.span[0], u.span[1]))
        for i, ch in enumerate(text):
            if i not in covered:
                assert ch.isspace(), f"stranded non-whitespace char {ch!r} at {i}"

    def test_unit_count_band_on_long_summary(self):
        # A 227-word summary in the style of the evaluated datasets.
        clause = "the crew explored the ruined station, and the sensors recorded faint signals. "
        text = (clause * 19).strip()
        n_words = len(text.split())
        assert 200 <= n_words <= 260
        units = segment_summary("s", text)
        assert 5 <= len(units) <= 60

    def test_segment_units_requires_sentence(self):
        assert segment_units("", (0, 0)) == []

    def test_config_file_round_trip(self, tmp_path):
        cfg_path = tmp_path / "seg.json"
        cfg_path.write_text('{"min_unit_tokens": 2, "conjunctions": ["and"]}', encoding="utf-8")
        cfg = SegmentConfig.from_file(cfg_path)
        assert cfg.min_unit_tokens == 2
        assert cfg.conjunctions == frozenset({"and"})
        assert cfg.abbreviations == DEFAULT_CONFIG.abbreviations
