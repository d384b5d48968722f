"""Mapping each x entity to its y entity.

Two scorers rank the candidate y entities of an x entity and the highest
score wins:

* the baseline turns learned distance likelihoods into
  ``P+(d) / (P+(d) + P-(d))`` for the signed token distance ``d``;
* the forest scores 15 pairwise distances among the x entity, the y entity
  and their immediate neighbours of the same kind.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from . import modelio
from .corpus import EntitySpan, Sample
from .forest import ForestModel, forest_from_tensors, forest_tensors, train_forest
from .metrics import binary_report

FEATURE_PAIRS = tuple(combinations(range(6), 2))
N_FEATURES = len(FEATURE_PAIRS)  # 15


def entity_distance(a: EntitySpan, b: EntitySpan) -> int:
    """Signed token distance from ``a`` to ``b``, measured between span starts."""
    return b.start - a.start


@dataclass
class DistanceHistogram:
    """Positive/negative likelihoods over the integer distances
    ``min_distance .. min_distance + len(positive) - 1``."""

    min_distance: int
    positive: np.ndarray
    negative: np.ndarray

    @property
    def max_distance(self) -> int:
        return self.min_distance + len(self.positive) - 1

    def likelihoods(self, d: int) -> tuple[float, float]:
        """(P+, P-) at ``d``; distances beyond the support take the nearest end."""
        j = min(max(d, self.min_distance), self.max_distance) - self.min_distance
        return float(self.positive[j]), float(self.negative[j])

    def score(self, d: int) -> float:
        p, n = self.likelihoods(d)
        return p / (p + n) if p + n > 0 else 0.0

    def as_dict(self, which: str) -> dict[int, float]:
        arr = self.positive if which == "positive" else self.negative
        return {self.min_distance + j: float(v) for j, v in enumerate(arr)}


@dataclass
class MappingResult:
    pairs: list[tuple[int, int]]
    scores: list[float]

    def as_dict(self) -> dict[int, int]:
        return dict(self.pairs)


def _sorted(spans: Sequence[EntitySpan]) -> list[EntitySpan]:
    return sorted(spans, key=lambda s: (s.start, s.end))


def candidate_pairs(sample: Sample):
    """Every (x ordinal, y ordinal, label) of a sample; label 1 for gold pairs."""
    gold = set(sample.mapping)
    for i in range(len(sample.x_spans)):
        for k in range(len(sample.y_spans)):
            yield i, k, int((i, k) in gold)


def _fill_nearest(counts: np.ndarray, observed: np.ndarray) -> np.ndarray:
    """Fill unobserved slots with the nearest observed value; equidistant
    neighbours on both sides contribute their mean."""
    out = counts.astype(np.float64).copy()
    seen = np.nonzero(observed)[0]
    for j in np.nonzero(~observed)[0]:
        pos = np.searchsorted(seen, j)
        left = seen[pos - 1] if pos > 0 else None
        right = seen[pos] if pos < len(seen) else None
        if left is None:
            out[j] = counts[right]
        elif right is None:
            out[j] = counts[left]
        elif j - left < right - j:
            out[j] = counts[left]
        elif right - j < j - left:
            out[j] = counts[right]
        else:
            out[j] = (counts[left] + counts[right]) / 2.0
    return out


def learn_distance_distributions(samples: Sequence[Sample]) -> DistanceHistogram:
    """Histogram gold-mapped and non-mapped x-to-y distances over a shared
    support, fill gaps by nearest-neighbour smoothing, then normalize."""
    pos_d, neg_d = [], []
    for s in samples:
        xs, ys = s.x_spans, s.y_spans
        for i, k, label in candidate_pairs(s):
            (pos_d if label else neg_d).append(entity_distance(xs[i], ys[k]))
    if not pos_d or not neg_d:
        raise ValueError("need at least one mapped and one unmapped x-y pair")
    lo = min(min(pos_d), min(neg_d))
    hi = max(max(pos_d), max(neg_d))
    width = hi - lo + 1
    maps = []
    for ds in (pos_d, neg_d):
        counts = np.bincount(np.asarray(ds) - lo, minlength=width).astype(np.float64)
        filled = _fill_nearest(counts, counts > 0)
        maps.append(filled / filled.sum())
    return DistanceHistogram(lo, maps[0], maps[1])


def _argmax(scores: Sequence[float], distances: Sequence[int]) -> int:
    """Highest score; ties go to the smaller |distance|, then the smaller index."""
    return min(range(len(scores)), key=lambda k: (-scores[k], abs(distances[k]), k))


def baseline_map(x_spans: Sequence[EntitySpan], y_spans: Sequence[EntitySpan],
                 hist: DistanceHistogram) -> MappingResult:
    if not y_spans:
        raise ValueError("no y entities to map to")
    xs, ys = _sorted(x_spans), _sorted(y_spans)
    pairs, scores = [], []
    for i, x in enumerate(xs):
        d = [entity_distance(x, y) for y in ys]
        s = [hist.score(v) for v in d]
        k = _argmax(s, d)
        pairs.append((i, k))
        scores.append(s[k])
    return MappingResult(pairs, scores)


def extract_features(x_spans: Sequence[EntitySpan], y_spans: Sequence[EntitySpan],
                     i: int, k: int) -> np.ndarray:
    """Pairwise distances among (x[i-1], x[i], x[i+1], y[k-1], y[k], y[k+1]).

    A neighbour past either end of its list is replaced by the centre entity
    of its kind. Same-kind distances are absolute, cross-kind ones signed.
    """
    xs, ys = _sorted(x_spans), _sorted(y_spans)
    if not (0 <= i < len(xs) and 0 <= k < len(ys)):
        raise IndexError(f"pair ({i}, {k}) out of range for {len(xs)} x and {len(ys)} y spans")

    def around(spans, c):
        return [spans[j] if 0 <= j < len(spans) else spans[c] for j in (c - 1, c, c + 1)]

    group = around(xs, i) + around(ys, k)
    values = np.empty(N_FEATURES)
    for n, (a, b) in enumerate(FEATURE_PAIRS):
        d = entity_distance(group[a], group[b])
        values[n] = abs(d) if (a < 3) == (b < 3) else d
    return values


def pair_dataset(samples: Sequence[Sample]) -> tuple[np.ndarray, np.ndarray]:
    """Feature rows and 0/1 labels for every candidate pair of every sample."""
    rows, labels = [], []
    for s in samples:
        xs, ys = s.x_spans, s.y_spans
        for i, k, label in candidate_pairs(s):
            rows.append(extract_features(xs, ys, i, k))
            labels.append(label)
    return np.array(rows).reshape(-1, N_FEATURES), np.array(labels, dtype=int)


def forest_map(x_spans: Sequence[EntitySpan], y_spans: Sequence[EntitySpan],
               model: ForestModel) -> MappingResult:
    if not y_spans:
        raise ValueError("no y entities to map to")
    xs, ys = _sorted(x_spans), _sorted(y_spans)
    pairs, scores = [], []
    for i, x in enumerate(xs):
        feats = np.stack([extract_features(xs, ys, i, k) for k in range(len(ys))])
        s = model.score(feats).tolist()
        d = [entity_distance(x, y) for y in ys]
        k = _argmax(s, d)
        pairs.append((i, k))
        scores.append(float(s[k]))
    return MappingResult(pairs, scores)


@dataclass
class MapperModel:
    """Either scorer behind one interface."""

    kind: str
    histogram: DistanceHistogram | None = None
    forest: ForestModel | None = None
    info: dict = field(default_factory=dict)

    def map(self, x_spans, y_spans) -> MappingResult:
        if self.kind == "baseline":
            return baseline_map(x_spans, y_spans, self.histogram)
        return forest_map(x_spans, y_spans, self.forest)

    def pair_scores(self, x_spans, y_spans) -> np.ndarray:
        """Score matrix of shape (|x|, |y|)."""
        xs, ys = _sorted(x_spans), _sorted(y_spans)
        if self.kind == "baseline":
            return np.array([[self.histogram.score(entity_distance(x, y)) for y in ys] for x in xs])
        feats = [extract_features(xs, ys, i, k) for i in range(len(xs)) for k in range(len(ys))]
        return self.forest.score(np.array(feats)).reshape(len(xs), len(ys))


def train_mapper(samples: Sequence[Sample], kind: str = "forest", tree_count: int = 33,
                 seed: int = 0) -> MapperModel:
    if kind == "baseline":
        return MapperModel("baseline", histogram=learn_distance_distributions(samples))
    if kind != "forest":
        raise ValueError(f"unknown mapper kind {kind!r}")
    X, y = pair_dataset(samples)
    return MapperModel("forest", forest=train_forest(X, y, tree_count=tree_count, seed=seed))


def evaluate_mapper(model: MapperModel, samples: Sequence[Sample]) -> dict:
    """Pair-level report: each x predicts its argmax pair positive; auROC
    ranks raw pair scores."""
    labels, preds, scores = [], [], []
    for s in samples:
        xs, ys = s.x_spans, s.y_spans
        if not xs or not ys:
            continue
        matrix = model.pair_scores(xs, ys)
        chosen = set(model.map(xs, ys).pairs)
        for i, k, label in candidate_pairs(s):
            labels.append(label)
            preds.append(int((i, k) in chosen))
            scores.append(matrix[i, k])
    return binary_report(labels, preds, scores)


def save_mapper(model: MapperModel, path) -> None:
    if model.kind == "baseline":
        h = model.histogram
        tensors = {"positive": h.positive, "negative": h.negative}
        config = {"model": "baseline", "min_distance": h.min_distance}
    else:
        f = model.forest
        tensors = forest_tensors(f)
        config = {"model": "forest", "tree_count": f.tree_count, "seed": f.seed,
                  "n_features": f.n_features}
    modelio.save(path, "mapper", config, tensors, model.info)


def load_mapper(path) -> MapperModel:
    kind, config, meta, tensors = modelio.load(path)
    if kind != "mapper":
        raise modelio.ModelFormatError(f"expected a mapper model, found {kind!r}")
    if config["model"] == "baseline":
        hist = DistanceHistogram(int(config["min_distance"]), tensors["positive"], tensors["negative"])
        return MapperModel("baseline", histogram=hist, info=meta)
    forest = forest_from_tensors(tensors, config["tree_count"], config["seed"], config["n_features"])
    return MapperModel("forest", forest=forest, info=meta)
