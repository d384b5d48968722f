import json
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from textchart.corpus import (
    DatasetError,
    EntitySpan,
    Sample,
    Tag,
    dump_dataset,
    parse_dataset,
    spans_from_tags,
    split_dataset,
    tags_from_spans,
    tokenize,
)
from textchart.synth import generate_synthetic_corpus

from conftest import JAMAL, JAMAL_X, JAMAL_Y


def record(**overrides) -> str:
    base = {"id": "a", "tokens": ["25", "people", "voted", "for", "Sims"], "tags": ["Y", "O", "O", "O", "X"],
            "mapping": [[0, 0]], "chart_types": ["bar"]}
    base.update(overrides)
    return json.dumps(base)


class TestTokenize:
    def test_empty(self):
        assert tokenize("") == []

    def test_survey_fragment(self):
        assert tokenize("25 people voted for World of Warcraft ,") == [
            "25", "people", "voted", "for", "World", "of", "Warcraft", ","]

    def test_percent_detached(self):
        assert tokenize("45%") == ["45", "%"]

    def test_leading_and_trailing(self):
        assert tokenize('("cats"),') == ["(", '"', "cats", '"', ")", ","]

    def test_inner_punctuation_kept(self):
        assert tokenize("1,200 e.g.") == ["1,200", "e.g", "."]

    @given(st.text(alphabet=st.sampled_from(list("ab1 ,.:;%'\"()\t\n")), max_size=40))
    def test_idempotent(self, text):
        once = tokenize(text)
        assert tokenize(" ".join(once)) == once
        assert all(tok and not any(c.isspace() for c in tok) for tok in once)


class TestSpans:
    def test_run_grouping(self):
        spans = spans_from_tags(["World", "Cup", "is", "45"], ["X", "X", "O", "Y"])
        assert spans == [EntitySpan(Tag.X, 0, 1, "World Cup"), EntitySpan(Tag.Y, 3, 3, "45")]

    def test_all_none(self):
        assert spans_from_tags(["a", "b"], ["O", "O"]) == []

    def test_jamal(self, jamal_sample):
        assert [s.surface for s in jamal_sample.x_spans] == JAMAL_X
        assert [s.surface for s in jamal_sample.y_spans] == JAMAL_Y

    @given(st.lists(st.sampled_from(["X", "Y", "O"]), max_size=30))
    def test_round_trip(self, tags):
        tokens = [f"t{i}" for i in range(len(tags))]
        spans = spans_from_tags(tokens, tags)
        assert [t.value for t in tags_from_spans(len(tags), spans)] == tags
        assert [s.start for s in spans] == sorted(s.start for s in spans)
        for a, b in zip(spans, spans[1:]):
            assert a.end < b.start
            if a.end + 1 == b.start:
                assert a.kind is not b.kind  # runs are maximal


class TestParse:
    def test_one_record(self):
        (s,) = parse_dataset(record().encode())
        assert s.id == "a" and s.mapping == ((0, 0),)
        assert s.x_spans[0].surface == "Sims"

    def test_length_mismatch(self):
        with pytest.raises(DatasetError, match="length mismatch"):
            parse_dataset(record(tags=["Y", "O"]))

    def test_dangling_ordinal(self):
        text = record(tokens=["a", "b", "c", "d", "e"], tags=["X", "O", "X", "Y", "O"], mapping=[[3, 0]])
        with pytest.raises(DatasetError, match="dangling x ordinal 3") as exc:
            parse_dataset("\n" + text)
        assert exc.value.line == 2

    def test_malformed_json_reports_line(self):
        with pytest.raises(DatasetError) as exc:
            parse_dataset(record() + "\n{not json\n")
        assert exc.value.line == 2

    @pytest.mark.parametrize("overrides,msg", [
        ({"chart_types": ["pie"]}, "bar"),
        ({"chart_types": ["bar", "radar"]}, "unknown chart types"),
        ({"mapping": [[0, 0], [0, 0]]}, "duplicate"),
        ({"tags": ["Y", "O", "O", "O", "Z"]}, "tags"),
        ({"tokens": ["25", "two words", "voted", "for", "Sims"]}, "whitespace"),
    ])
    def test_invariant_violations(self, overrides, msg):
        with pytest.raises(DatasetError, match=msg):
            parse_dataset(record(**overrides))

    def test_duplicate_ids(self):
        with pytest.raises(DatasetError, match="duplicate id"):
            parse_dataset(record() + "\n" + record())

    def test_blank_lines_skipped(self):
        assert len(parse_dataset("\n" + record() + "\n\n")) == 1


class TestSplit:
    def test_paper_sizes(self):
        samples = [Sample(f"s{i}", ["a"], ["O"]) for i in range(717)]
        split = split_dataset(samples, (464 / 717, 116 / 717, 137 / 717), seed=0)
        assert (len(split.train), len(split.validation), len(split.test)) == (464, 116, 137)

    def test_deterministic(self):
        samples = [Sample(f"s{i}", ["a"], ["O"]) for i in range(10)]
        a = split_dataset(samples, (0.8, 0.1, 0.1), seed=5)
        b = split_dataset(samples, (0.8, 0.1, 0.1), seed=5)
        assert a == b

    def test_bad_ratios(self):
        samples = [Sample(f"s{i}", ["a"], ["O"]) for i in range(10)]
        with pytest.raises(ValueError):
            split_dataset(samples, (0.7, 0.1, 0.1), seed=0)

    def test_too_few(self):
        with pytest.raises(ValueError):
            split_dataset([Sample("a", ["a"], ["O"])] * 2, (0.8, 0.1, 0.1), seed=0)

    @given(st.integers(3, 60), st.integers(0, 10**6), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_partition(self, n, seed, a, b):
        r1 = a
        r2 = (1 - a) * b
        ratios = (r1, r2, 1.0 - r1 - r2)
        samples = [Sample(f"s{i}", ["a"], ["O"]) for i in range(n)]
        split = split_dataset(samples, ratios, seed)
        ids = [s.id for part in (split.train, split.validation, split.test) for s in part]
        assert Counter(ids) == Counter(s.id for s in samples)


def test_dump_parse_round_trip(small_corpus):
    assert parse_dataset(dump_dataset(small_corpus)) == small_corpus


def test_jamal_text_tokens():
    toks = tokenize(JAMAL)
    assert toks[:3] == ["Mr", ".", "Jamal"]
    assert "3rd" in toks and "Celsius" in toks


def test_synthetic_samples_pass_parse():
    samples = generate_synthetic_corpus(50, seed=2)
    assert parse_dataset(dump_dataset(samples).encode()) == samples
