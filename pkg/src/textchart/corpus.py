"""Dataset records, tokenization and span handling.

A dataset file holds one JSON record per line::

    {"id": "s1", "tokens": ["25", "people", ...], "tags": ["Y", "O", ...],
     "mapping": [[0, 0], ...], "chart_types": ["bar"]}

``mapping`` pairs are (x-span ordinal, y-span ordinal), where ordinals count
spans of one kind in order of appearance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

CHART_TYPES = ("bar", "pie", "line")
PUNCTUATION = frozenset(",.:;%'\"()")


class Tag(str, Enum):
    X = "X"
    Y = "Y"
    NONE = "O"


class DatasetError(ValueError):
    """A dataset record violates the format or the sample invariants."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class EntitySpan:
    kind: Tag
    start: int
    end: int  # inclusive
    surface: str

    def positions(self) -> range:
        return range(self.start, self.end + 1)


@dataclass(frozen=True)
class Sample:
    id: str
    tokens: tuple[str, ...]
    tags: tuple[Tag, ...]
    mapping: tuple[tuple[int, int], ...] = ()
    chart_types: frozenset[str] = frozenset({"bar"})
    _spans: list[EntitySpan] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(Tag(t) for t in self.tags))
        object.__setattr__(self, "mapping", tuple((int(a), int(b)) for a, b in self.mapping))
        object.__setattr__(self, "chart_types", frozenset(self.chart_types))
        object.__setattr__(self, "_spans", spans_from_tags(self.tokens, self.tags))

    @property
    def spans(self) -> list[EntitySpan]:
        return list(self._spans)

    @property
    def x_spans(self) -> list[EntitySpan]:
        return [s for s in self._spans if s.kind is Tag.X]

    @property
    def y_spans(self) -> list[EntitySpan]:
        return [s for s in self._spans if s.kind is Tag.Y]

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def validate(self) -> None:
        """Raise :class:`DatasetError` if any sample invariant is broken."""
        if not self.id:
            raise DatasetError("empty id")
        if len(self.tags) != len(self.tokens):
            raise DatasetError(
                f"length mismatch: {len(self.tokens)} tokens but {len(self.tags)} tags"
            )
        for i, tok in enumerate(self.tokens):
            if not tok or any(c.isspace() for c in tok):
                raise DatasetError(f"token {i} is empty or contains whitespace: {tok!r}")
        unknown = self.chart_types - set(CHART_TYPES)
        if unknown:
            raise DatasetError(f"unknown chart types {sorted(unknown)}")
        if "bar" not in self.chart_types:
            raise DatasetError("chart_types must include 'bar'")
        n_x, n_y = len(self.x_spans), len(self.y_spans)
        if len(set(self.mapping)) != len(self.mapping):
            raise DatasetError("duplicate mapping pair")
        for xi, yi in self.mapping:
            if not 0 <= xi < n_x:
                raise DatasetError(f"dangling x ordinal {xi} (sample has {n_x} x spans)")
            if not 0 <= yi < n_y:
                raise DatasetError(f"dangling y ordinal {yi} (sample has {n_y} y spans)")

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "tokens": list(self.tokens),
            "tags": [t.value for t in self.tags],
            "mapping": [list(p) for p in self.mapping],
            "chart_types": [c for c in CHART_TYPES if c in self.chart_types],
        }


@dataclass
class DatasetSplit:
    train: list[Sample]
    validation: list[Sample]
    test: list[Sample]


def tokenize(text: str) -> list[str]:
    """Split on whitespace and detach leading/trailing punctuation marks."""
    tokens: list[str] = []
    for chunk in text.split():
        lead: list[str] = []
        while chunk and chunk[0] in PUNCTUATION:
            lead.append(chunk[0])
            chunk = chunk[1:]
        trail: list[str] = []
        while chunk and chunk[-1] in PUNCTUATION:
            trail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(lead)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(trail))
    return tokens


def spans_from_tags(tokens: Sequence[str], tags: Sequence[Tag | str]) -> list[EntitySpan]:
    """Group maximal runs of identical non-NONE tags into spans, ordered by start."""
    spans: list[EntitySpan] = []
    n = min(len(tokens), len(tags))
    i = 0
    while i < n:
        tag = Tag(tags[i])
        if tag is Tag.NONE:
            i += 1
            continue
        j = i
        while j + 1 < n and Tag(tags[j + 1]) is tag:
            j += 1
        spans.append(EntitySpan(tag, i, j, " ".join(tokens[i : j + 1])))
        i = j + 1
    return spans


def tags_from_spans(length: int, spans: Iterable[EntitySpan]) -> list[Tag]:
    tags = [Tag.NONE] * length
    for span in spans:
        for p in span.positions():
            tags[p] = span.kind
    return tags


def _record_to_sample(record, line: int) -> Sample:
    if not isinstance(record, dict):
        raise DatasetError("record is not an object", line)
    missing = {"id", "tokens", "tags"} - record.keys()
    if missing:
        raise DatasetError(f"missing fields {sorted(missing)}", line)
    tokens, tags = record["tokens"], record["tags"]
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise DatasetError("tokens must be an array of strings", line)
    if not isinstance(tags, list) or any(t not in ("X", "Y", "O") for t in tags):
        raise DatasetError('tags must be an array of "X"|"Y"|"O"', line)
    if len(tags) != len(tokens):
        raise DatasetError(
            f"length mismatch: {len(tokens)} tokens but {len(tags)} tags", line
        )
    mapping = record.get("mapping", [])
    if not isinstance(mapping, list) or not all(
        isinstance(p, list) and len(p) == 2 and all(type(v) is int for v in p) for p in mapping
    ):
        raise DatasetError("mapping must be an array of [int, int] pairs", line)
    chart_types = record.get("chart_types", ["bar"])
    if not isinstance(chart_types, list) or not all(isinstance(c, str) for c in chart_types):
        raise DatasetError("chart_types must be an array of strings", line)
    sample = Sample(
        id=str(record["id"]),
        tokens=tokens,
        tags=tags,
        mapping=[tuple(p) for p in mapping],
        chart_types=chart_types,
    )
    try:
        sample.validate()
    except DatasetError as exc:
        raise DatasetError(str(exc), line) from None
    return sample


def parse_dataset(data: bytes | str) -> list[Sample]:
    """Parse line-delimited JSON records into validated samples.

    Blank lines are skipped. Errors carry the 1-based line number.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DatasetError(f"not UTF-8: {exc}") from None
    samples: list[Sample] = []
    seen: set[str] = set()
    for lineno, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"malformed record: {exc.msg}", lineno) from None
        sample = _record_to_sample(record, lineno)
        if sample.id in seen:
            raise DatasetError(f"duplicate id {sample.id!r}", lineno)
        seen.add(sample.id)
        samples.append(sample)
    return samples


def dump_dataset(samples: Iterable[Sample]) -> str:
    return "".join(json.dumps(s.to_record(), ensure_ascii=False) + "\n" for s in samples)


def load_dataset(path) -> list[Sample]:
    with open(path, "rb") as fh:
        return parse_dataset(fh.read())


def save_dataset(samples: Iterable[Sample], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_dataset(samples))


def split_dataset(
    samples: Sequence[Sample], ratios: Sequence[float], seed: int
) -> DatasetSplit:
    """Shuffle deterministically under ``seed`` and cut into train/validation/test."""
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ValueError("ratios must be three non-negative fractions")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)!r}")
    n = len(samples)
    if n < 3:
        raise ValueError(f"need at least 3 samples to split, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(ratios[0] * n))
    n_val = min(int(round(ratios[1] * n)), n - n_train)
    shuffled = [samples[i] for i in order]
    return DatasetSplit(
        train=shuffled[:n_train],
        validation=shuffled[n_train : n_train + n_val],
        test=shuffled[n_train + n_val :],
    )
