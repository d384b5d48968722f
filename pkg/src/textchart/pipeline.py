"""End-to-end text-to-chart pipeline and stage-wise error accounting.

Stages run in order: tag tokens into x/y entity spans, map every x entity to
a y entity (pairing them 1-to-1 in order of appearance when the counts match),
then predict chart types. A text with no x or no y entity yields an
:class:`Unchartable` outcome that carries whatever was computed.
"""
from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

from .chart_type import (
    ChartTypeModel,
    ChartTypeResult,
    load_chart_classifier,
    predict_chart_types,
    save_chart_classifier,
)
from .corpus import CHART_TYPES, EntitySpan, Sample, Tag, spans_from_tags, tokenize
from .mapper import MapperModel, MappingResult, load_mapper, save_mapper
from .tagger import TaggerModel, load_tagger, save_tagger, tag_tokens

log = logging.getLogger(__name__)

STAGES = ("stage1", "stage2", "stage3")


@dataclass(frozen=True)
class ChartSpec:
    x_labels: tuple[str, ...]
    y_values: tuple[str, ...]
    chart_types: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "x_labels", tuple(self.x_labels))
        object.__setattr__(self, "y_values", tuple(self.y_values))
        object.__setattr__(self, "chart_types", frozenset(self.chart_types))
        if len(self.x_labels) != len(self.y_values):
            raise ValueError("x_labels and y_values differ in length")
        if "bar" not in self.chart_types:
            raise ValueError("chart_types must include 'bar'")
        unknown = self.chart_types - set(CHART_TYPES)
        if unknown:
            raise ValueError(f"unknown chart types {sorted(unknown)}")

    def to_dict(self) -> dict:
        return {
            "x_labels": list(self.x_labels),
            "y_values": list(self.y_values),
            "chart_types": [t for t in CHART_TYPES if t in self.chart_types],
        }

    @classmethod
    def from_dict(cls, record: dict) -> "ChartSpec":
        try:
            return cls(record["x_labels"], record["y_values"], record["chart_types"])
        except KeyError as exc:
            raise ValueError(f"chart spec lacks field {exc.args[0]!r}") from None


@dataclass
class PipelineModels:
    """Trained models for all three stages.

    ``tagger`` is a combined-mode model or an ``(x_model, y_model)`` pair.
    """

    tagger: TaggerModel | tuple[TaggerModel, TaggerModel]
    mapper: MapperModel
    pie: ChartTypeModel | None
    line: ChartTypeModel | None
    threshold: float = 0.5

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        if isinstance(self.tagger, TaggerModel):
            save_tagger(self.tagger, d / "tagger.tcm")
        else:
            save_tagger(self.tagger[0], d / "tagger_x.tcm")
            save_tagger(self.tagger[1], d / "tagger_y.tcm")
        save_mapper(self.mapper, d / "mapper.tcm")
        if self.pie is not None:
            save_chart_classifier(self.pie, d / "pie.tcm")
        if self.line is not None:
            save_chart_classifier(self.line, d / "line.tcm")

    @classmethod
    def load(cls, directory, threshold: float = 0.5) -> "PipelineModels":
        d = Path(directory)
        if not d.is_dir():
            raise FileNotFoundError(f"model directory {d} does not exist")
        if (d / "tagger.tcm").exists():
            tagger = load_tagger(d / "tagger.tcm")
        elif (d / "tagger_x.tcm").exists() and (d / "tagger_y.tcm").exists():
            tagger = (load_tagger(d / "tagger_x.tcm"), load_tagger(d / "tagger_y.tcm"))
        else:
            raise FileNotFoundError(f"{d} holds neither tagger.tcm nor tagger_x.tcm + tagger_y.tcm")
        if not (d / "mapper.tcm").exists():
            raise FileNotFoundError(f"{d} holds no mapper.tcm")
        pie = load_chart_classifier(d / "pie.tcm") if (d / "pie.tcm").exists() else None
        line = load_chart_classifier(d / "line.tcm") if (d / "line.tcm").exists() else None
        return cls(tagger, load_mapper(d / "mapper.tcm"), pie, line, threshold)


@dataclass
class PipelineTrace:
    """Every intermediate result of one run."""

    tokens: list[str]
    tags: list[Tag]
    x_spans: list[EntitySpan]
    y_spans: list[EntitySpan]
    mapping: MappingResult | None
    bypass: bool
    chart: ChartTypeResult | None
    spec: ChartSpec | None
    isolated_pairs: list[tuple[int, int]] | None = None

    @property
    def chartable(self) -> bool:
        return self.spec is not None


@dataclass
class Unchartable:
    """Outcome for texts lacking x or y entities."""

    reason: str
    trace: PipelineTrace


PipelineOutcome = Union[ChartSpec, Unchartable]


@dataclass
class StageErrorReport:
    sample_id: str
    stage1_errors: int
    stage2_errors: int
    stage3_errors: int

    def __post_init__(self):
        if min(self.stage1_errors, self.stage2_errors, self.stage3_errors) < 0:
            raise ValueError("error counts must be non-negative")

    def counts(self) -> dict[str, int]:
        return {"stage1": self.stage1_errors, "stage2": self.stage2_errors, "stage3": self.stage3_errors}


def sequential_mapping(x_count: int, y_count: int) -> MappingResult:
    if x_count != y_count:
        raise ValueError("sequential mapping needs equal entity counts")
    return MappingResult([(i, i) for i in range(x_count)], [1.0] * x_count)


def map_entities(x_spans: Sequence[EntitySpan], y_spans: Sequence[EntitySpan],
                 mapper: MapperModel | None) -> tuple[MappingResult, bool]:
    """Map x entities to y entities; returns (mapping, bypass_used).

    Pair ordinals refer to the spans sorted by position.
    """
    if len(x_spans) == len(y_spans):
        return sequential_mapping(len(x_spans), len(y_spans)), True
    if mapper is None:
        raise ValueError("entity counts differ and no mapper model was given")
    return mapper.map(x_spans, y_spans), False


def assemble_spec(x_spans: Sequence[EntitySpan], y_spans: Sequence[EntitySpan],
                  pairs: Sequence[tuple[int, int]], chart_types) -> ChartSpec:
    """Chart spec with x labels in text order and each label's mapped y value.

    x entities without a pair are left out, as are y entities no x maps to.
    """
    xs = sorted(x_spans, key=lambda s: s.start)
    ys = sorted(y_spans, key=lambda s: s.start)
    target = dict(pairs)
    labels, values = [], []
    for i, x in enumerate(xs):
        if i in target:
            labels.append(x.surface)
            values.append(ys[target[i]].surface)
    return ChartSpec(labels, values, chart_types)


def trace_tokens(tokens: Sequence[str], models: PipelineModels, gold: Sample | None = None) -> PipelineTrace:
    """Run every stage on pre-tokenized input.

    With ``gold`` given, stage 2 is additionally run on the gold spans so its
    errors can be counted in isolation from stage 1.
    """
    tokens = list(tokens)
    tags = tag_tokens(models.tagger, tokens)
    spans = spans_from_tags(tokens, tags)
    xs = [s for s in spans if s.kind is Tag.X]
    ys = [s for s in spans if s.kind is Tag.Y]
    chart = predict_chart_types(models.pie, models.line, tokens, threshold=models.threshold) if tokens else None
    mapping, bypass, spec = None, False, None
    if xs and ys:
        mapping, bypass = map_entities(xs, ys, models.mapper)
        spec = assemble_spec(xs, ys, mapping.pairs, chart.types)
    isolated = None
    if gold is not None:
        isolated = isolated_pairs(gold, models.mapper)
    return PipelineTrace(tokens, tags, xs, ys, mapping, bypass, chart, spec, isolated)


def isolated_pairs(gold: Sample, mapper: MapperModel | None) -> list[tuple[int, int]]:
    """Stage-2 prediction from the gold entity spans."""
    if not gold.x_spans or not gold.y_spans:
        return []
    return map_entities(gold.x_spans, gold.y_spans, mapper)[0].pairs


def run_pipeline_trace(text: str, models: PipelineModels) -> PipelineTrace:
    return trace_tokens(tokenize(text), models)


def run_pipeline(text: str, models: PipelineModels) -> PipelineOutcome:
    """Text to :class:`ChartSpec`, or :class:`Unchartable` when an entity kind is missing."""
    trace = run_pipeline_trace(text, models)
    if trace.spec is not None:
        return trace.spec
    if not trace.tokens:
        reason = "empty text"
    elif not trace.x_spans and not trace.y_spans:
        reason = "no x or y entities detected"
    elif not trace.x_spans:
        reason = "no x entities detected"
    else:
        reason = "no y entities detected"
    return Unchartable(reason, trace)


def count_stage_errors(trace: PipelineTrace, gold: Sample, mapper: MapperModel | None = None) -> StageErrorReport:
    """Per-stage error counts of one prediction against its gold sample.

    Stage 1 pools x and y spans; stage 2 counts gold pairs that the mapper
    misses when fed the gold spans; stage 3 compares chart-type sets.
    """
    key = lambda s: (s.kind.value, s.start, s.end)  # noqa: E731
    predicted = {key(s) for s in trace.x_spans + trace.y_spans}
    expected = {key(s) for s in gold.spans}
    stage1 = len(predicted ^ expected)

    pairs = trace.isolated_pairs
    if pairs is None:
        pairs = isolated_pairs(gold, mapper)
    stage2 = len(set(gold.mapping) - set(pairs))

    types = trace.chart.types if trace.chart is not None else frozenset({"bar"})
    stage3 = len(set(types) ^ set(gold.chart_types))
    return StageErrorReport(gold.id, stage1, stage2, stage3)


def cumulative_error_frequency(reports: Sequence[StageErrorReport]) -> dict[str, dict[int, int]]:
    """For each stage, k -> number of samples with at most k errors, for k = 0 .. max."""
    if not reports:
        raise ValueError("no reports")
    out = {}
    for stage in STAGES:
        hist = Counter(r.counts()[stage] for r in reports)
        running, table = 0, {}
        for k in range(max(hist) + 1):
            running += hist.get(k, 0)
            table[k] = running
        out[stage] = table
    return out


@dataclass
class PipelineEvaluation:
    reports: list[StageErrorReport]
    cumulative: dict[str, dict[int, int]]
    exact_match: float
    unchartable: int
    totals: dict[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "samples": len(self.reports),
            "exact_match": self.exact_match,
            "unchartable": self.unchartable,
            "totals": self.totals,
            "cumulative": {s: {str(k): v for k, v in t.items()} for s, t in self.cumulative.items()},
            "reports": [
                {"sample_id": r.sample_id, **{f"{s}_errors": c for s, c in r.counts().items()}}
                for r in self.reports
            ],
        }


def gold_spec(sample: Sample) -> ChartSpec:
    return assemble_spec(sample.x_spans, sample.y_spans, sample.mapping, sample.chart_types)


def evaluate_pipeline(models: PipelineModels, samples: Sequence[Sample], workers: int = 1) -> PipelineEvaluation:
    """Run every sample through the pipeline and tally stage errors.

    Samples are independent and models are only read, so ``workers > 1``
    spreads them over a thread pool; results keep the input order.
    """
    if not samples:
        raise ValueError("no samples to evaluate")

    def one(sample: Sample):
        trace = trace_tokens(sample.tokens, models, gold=sample)
        return trace, count_stage_errors(trace, sample)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, samples))
    else:
        results = [one(s) for s in samples]
    reports = [r for _, r in results]
    exact = sum(t.spec is not None and t.spec == gold_spec(s) for (t, _), s in zip(results, samples))
    totals = {stage: sum(r.counts()[stage] for r in reports) for stage in STAGES}
    return PipelineEvaluation(
        reports,
        cumulative_error_frequency(reports),
        exact / len(samples),
        sum(not t.chartable for t, _ in results),
        totals,
    )
