import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from textchart import pipeline
from textchart.corpus import EntitySpan, Sample, Tag, tokenize
from textchart.mapper import DistanceHistogram, MapperModel, train_mapper
from textchart.pipeline import (
    ChartSpec,
    PipelineModels,
    PipelineTrace,
    StageErrorReport,
    Unchartable,
    assemble_spec,
    count_stage_errors,
    cumulative_error_frequency,
    evaluate_pipeline,
    gold_spec,
    map_entities,
    run_pipeline,
    sequential_mapping,
    trace_tokens,
)
from textchart.chart_type import ChartTypeResult
from textchart.mapper import MappingResult


def span(kind, start, surface=None):
    return EntitySpan(kind, start, start, surface or f"t{start}")


def rule_tags(model, tokens):
    """Digits are y, capitalized words are x."""
    return [Tag.Y if t.isdigit() else Tag.X if t[:1].isupper() else Tag.NONE for t in tokens]


@pytest.fixture
def rule_models(monkeypatch, small_corpus):
    monkeypatch.setattr(pipeline, "tag_tokens", rule_tags)
    return PipelineModels(None, train_mapper(small_corpus, "baseline"), None, None)


class TestBypass:
    def test_sequential_mapping(self):
        assert sequential_mapping(3, 3).pairs == [(0, 0), (1, 1), (2, 2)]
        with pytest.raises(ValueError):
            sequential_mapping(2, 3)

    def test_independent_of_mapper(self, small_corpus):
        rng = np.random.default_rng(0)
        mappers = [None, train_mapper(small_corpus, "baseline"), train_mapper(small_corpus, "forest", tree_count=3)]
        for _ in range(5):
            width = 41
            mappers.append(MapperModel("baseline", DistanceHistogram(-20, rng.random(width), rng.random(width))))
        for n in range(1, 7):
            starts = rng.choice(50, size=2 * n, replace=False)
            xs = sorted((span(Tag.X, int(s)) for s in starts[:n]), key=lambda s: s.start)
            ys = sorted((span(Tag.Y, int(s)) for s in starts[n:]), key=lambda s: s.start)
            for mapper in mappers:
                result, bypass = map_entities(xs, ys, mapper)
                assert bypass and result.pairs == [(i, i) for i in range(n)]

    def test_mapper_used_when_counts_differ(self, small_corpus):
        xs, ys = [span(Tag.X, 0), span(Tag.X, 4)], [span(Tag.Y, 2)]
        result, bypass = map_entities(xs, ys, train_mapper(small_corpus, "baseline"))
        assert not bypass and result.pairs == [(0, 0), (1, 0)]
        with pytest.raises(ValueError):
            map_entities(xs, ys, None)


class TestAssemble:
    def test_unmapped_y_dropped_and_order_kept(self):
        xs = [span(Tag.X, 5, "b"), span(Tag.X, 1, "a")]
        ys = [span(Tag.Y, 2, "10"), span(Tag.Y, 6, "20"), span(Tag.Y, 9, "30")]
        spec = assemble_spec(xs, ys, [(0, 1), (1, 1)], {"bar"})
        assert spec.x_labels == ("a", "b") and spec.y_values == ("20", "20")

    def test_gold_spec(self, jamal_sample):
        spec = gold_spec(jamal_sample)
        assert spec.x_labels[0] == "3rd day" and spec.y_values[-1] == "45"
        assert spec.chart_types == {"bar", "line"}


class TestChartSpec:
    def test_round_trip(self):
        spec = ChartSpec(["a", "b"], ["1", "2"], {"line", "bar"})
        assert ChartSpec.from_dict(spec.to_dict()) == spec
        assert spec.to_dict()["chart_types"] == ["bar", "line"]

    @pytest.mark.parametrize("args", [
        (["a"], ["1", "2"], {"bar"}),
        (["a"], ["1"], {"pie"}),
        (["a"], ["1"], {"bar", "scatter"}),
    ])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            ChartSpec(*args)

    def test_missing_field(self):
        with pytest.raises(ValueError, match="x_labels"):
            ChartSpec.from_dict({"y_values": [], "chart_types": ["bar"]})


class TestRunPipeline:
    def test_chartable(self, rule_models):
        out = run_pipeline("Sims got 50 votes and Ops got 46 .", rule_models)
        assert out == ChartSpec(["Sims", "Ops"], ["50", "46"], {"bar"})

    @pytest.mark.parametrize("text,reason", [
        ("", "empty text"),
        ("nothing to see here", "no x or y entities detected"),
        ("only 50 and 60 here", "no x entities detected"),
        ("Sims and Ops", "no y entities detected"),
    ])
    def test_unchartable(self, rule_models, text, reason):
        out = run_pipeline(text, rule_models)
        assert isinstance(out, Unchartable) and out.reason == reason
        assert not out.trace.chartable

    def test_trace_records_bypass(self, rule_models):
        trace = trace_tokens(tokenize("Sims 50 Ops 46 Wow"), rule_models)
        assert not trace.bypass and trace.mapping is not None
        assert len(trace.spec.x_labels) == 3
        assert trace_tokens(tokenize("Sims 50 Ops 46"), rule_models).bypass


def _trace(xs, ys, types=("bar",), pairs=None):
    chart = ChartTypeResult(frozenset(types), 0.0, 0.0)
    return PipelineTrace([], [], xs, ys, None, False, chart, None, pairs)


class TestStageErrors:
    @pytest.fixture
    def gold(self):
        return Sample("g", ["A", "1", "B", "2", "C", "3"], ["X", "Y", "X", "Y", "X", "Y"],
                      [(0, 0), (1, 1), (2, 2)], ["bar", "pie"])

    def test_perfect(self, gold):
        trace = _trace(gold.x_spans, gold.y_spans, ("bar", "pie"), [(0, 0), (1, 1), (2, 2)])
        assert count_stage_errors(trace, gold).counts() == {"stage1": 0, "stage2": 0, "stage3": 0}

    def test_counts(self, gold):
        # one missed y, one spurious x; one wrong pair; pie missed and line added
        xs = gold.x_spans + [EntitySpan(Tag.X, 7, 7, "D")]
        ys = gold.y_spans[:2]
        trace = _trace(xs, ys, ("bar", "line"), [(0, 0), (1, 1), (2, 1)])
        report = count_stage_errors(trace, gold)
        assert (report.stage1_errors, report.stage2_errors, report.stage3_errors) == (2, 1, 2)

    def test_isolated_pairs_computed_when_missing(self, gold):
        trace = _trace(gold.x_spans, gold.y_spans, ("bar", "pie"), None)
        assert count_stage_errors(trace, gold, mapper=None).stage2_errors == 0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            StageErrorReport("s", -1, 0, 0)


class TestCumulative:
    def test_example(self):
        reports = [StageErrorReport("a", 0, 1, 0), StageErrorReport("b", 2, 0, 0), StageErrorReport("c", 0, 0, 0)]
        cum = cumulative_error_frequency(reports)
        assert cum["stage1"] == {0: 2, 1: 2, 2: 3}
        assert cum["stage2"] == {0: 2, 1: 3}
        assert cum["stage3"] == {0: 3}

    def test_empty(self):
        with pytest.raises(ValueError):
            cumulative_error_frequency([])

    @given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=30))
    def test_brute_force(self, rows):
        reports = [StageErrorReport(str(i), *r) for i, r in enumerate(rows)]
        cum = cumulative_error_frequency(reports)
        for j, stage in enumerate(pipeline.STAGES):
            top = max(r[j] for r in rows)
            assert sorted(cum[stage]) == list(range(top + 1))
            for k, v in cum[stage].items():
                assert v == sum(1 for r in rows if r[j] <= k)
            assert cum[stage][top] == len(rows)


class TestWithTrainedModels:
    def test_save_load_same_predictions(self, quick_models, bundled):
        models, directory = quick_models
        loaded = PipelineModels.load(directory)
        for sample in bundled[0][450:460]:
            text = " ".join(sample.tokens)
            assert run_pipeline(text, loaded) == run_pipeline(text, models)

    def test_individual_pair_round_trip(self, quick_models, tmp_path):
        models, _ = quick_models
        pair = PipelineModels((models.tagger, models.tagger), models.mapper, None, models.line)
        pair.save(tmp_path)
        back = PipelineModels.load(tmp_path)
        assert isinstance(back.tagger, tuple) and back.pie is None

    def test_load_errors(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            PipelineModels.load(tmp_path / "absent")
        with pytest.raises(FileNotFoundError):
            PipelineModels.load(tmp_path)

    def test_evaluate(self, quick_models, bundled):
        models, _ = quick_models
        samples = bundled[0][450:470]
        single = evaluate_pipeline(models, samples)
        pooled = evaluate_pipeline(models, samples, workers=2)
        assert single.as_dict() == pooled.as_dict()
        d = single.as_dict()
        assert d["samples"] == 20 and 0.0 <= d["exact_match"] <= 1.0
        assert all(d["cumulative"][s][str(max(map(int, d["cumulative"][s])))] == 20 for s in pipeline.STAGES)
        with pytest.raises(ValueError):
            evaluate_pipeline(models, [])

    def test_jamal_with_gold_tags(self, quick_models, jamal_sample, monkeypatch):
        models, _ = quick_models
        monkeypatch.setattr(pipeline, "tag_tokens", lambda model, tokens: list(jamal_sample.tags))
        trace = trace_tokens(jamal_sample.tokens, models)
        assert trace.bypass
        assert list(trace.spec.x_labels) == [s.surface for s in jamal_sample.x_spans]
        assert list(trace.spec.y_values) == [s.surface for s in jamal_sample.y_spans]
        assert isinstance(trace.mapping, MappingResult)
