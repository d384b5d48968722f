"""Chart-type prediction: bar always, plus one binary classifier each for
pie and line over the embedded text."""
from __future__ import annotations

import copy
import logging
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import modelio
from .corpus import Sample
from .embeddings import EmbeddingTable
from .metrics import ConfusionMatrix, mcc
from .nn import (
    RMSprop,
    clip_by_global_norm,
    dense_tanh_backward,
    dense_tanh_forward,
    init_dense,
    init_lstm,
    lstm_layer_backward,
    lstm_layer_forward,
    minibatches,
    pad_batch,
    sigmoid,
)

log = logging.getLogger(__name__)

TARGETS = ("pie", "line")


@dataclass
class ChartTypeConfig:
    target: str = "line"
    lstm_sizes: tuple[int, int] = (32, 32)
    dense_size: int = 64
    batch_size: int = 16
    learning_rate: float = 2e-3
    class_weights: tuple[float, float] = (0.2, 1.0)
    epochs: int = 20
    seed: int = 0
    clip_norm: float = 5.0

    def __post_init__(self):
        self.lstm_sizes = tuple(int(v) for v in self.lstm_sizes)
        self.class_weights = tuple(float(v) for v in self.class_weights)
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")
        if len(self.lstm_sizes) != 2 or min(self.lstm_sizes) < 1 or self.dense_size < 1:
            raise ValueError("layer sizes must be >= 1")
        if len(self.class_weights) != 2 or min(self.class_weights) <= 0:
            raise ValueError("class weights must be two positive numbers")
        if self.batch_size < 1 or self.epochs < 0 or self.learning_rate <= 0:
            raise ValueError("invalid training settings")

    @classmethod
    def preset(cls, name: str, target: str, **overrides) -> "ChartTypeConfig":
        if name == "desk":
            return cls(target=target, **overrides)
        if name == "paper":
            base = dict(lstm_sizes=(128, 128), dense_size=512,
                        batch_size=128 if target == "pie" else 256,
                        learning_rate=4e-4 if target == "pie" else 1e-3)
            base.update(overrides)
            return cls(target=target, **base)
        raise ValueError(f"unknown preset {name!r}")


@dataclass
class ChartTypeModel:
    config: ChartTypeConfig
    embedding_dim: int
    params: dict[str, np.ndarray]
    embeddings: EmbeddingTable | None = None
    history: list[dict] = field(default_factory=list)


@dataclass
class ChartTypeResult:
    types: frozenset[str]
    pie_score: float
    line_score: float


def init_chart_classifier(config: ChartTypeConfig, embedding_dimension: int) -> ChartTypeModel:
    rng = np.random.default_rng(config.seed)
    h1, h2 = config.lstm_sizes
    params: dict[str, np.ndarray] = {}
    init_lstm(rng, params, "l1", embedding_dimension, h1)
    init_lstm(rng, params, "l2", h1, h2)
    init_dense(rng, params, "dn", h2, config.dense_size)
    init_dense(rng, params, "out", config.dense_size, 1)
    return ChartTypeModel(config, embedding_dimension, params)


def _forward_batch(params, X: np.ndarray, lengths: np.ndarray):
    H1, c1 = lstm_layer_forward(params, "l1", X)
    H2, c2 = lstm_layer_forward(params, "l2", H1)
    last = H2[lengths - 1, np.arange(len(lengths))]
    D, c3 = dense_tanh_forward(params, "dn", last)
    logits = (D @ params["out.W"] + params["out.b"])[:, 0]
    return logits, (lengths, H2.shape, c1, c2, c3, D)


def _backward_batch(params, cache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    lengths, h2_shape, c1, c2, c3, D = cache
    grads: dict[str, np.ndarray] = {}
    grads["out.W"] = D.T @ dlogits[:, None]
    grads["out.b"] = np.array([dlogits.sum()])
    dD = dlogits[:, None] @ params["out.W"].T
    dlast = dense_tanh_backward(grads, params, "dn", dD, c3)
    dH2 = np.zeros(h2_shape)
    dH2[lengths - 1, np.arange(len(lengths))] = dlast
    dH1 = lstm_layer_backward(grads, "l2", dH2, c2)
    lstm_layer_backward(grads, "l1", dH1, c1)
    return grads


def loss_and_grads(model: ChartTypeModel, seqs: list[np.ndarray], labels: np.ndarray):
    """Class-weighted binary cross-entropy, averaged over the batch."""
    X, lengths = pad_batch(seqs)
    logits, cache = _forward_batch(model.params, X, lengths)
    y = np.asarray(labels, dtype=np.float64)
    w_neg, w_pos = model.config.class_weights
    w = np.where(y > 0, w_pos, w_neg)
    # log(1 + e^z) - y z, computed stably
    bce = np.logaddexp(0.0, logits) - y * logits
    value = float(np.mean(w * bce))
    dlogits = w * (sigmoid(logits) - y) / len(y)
    return value, _backward_batch(model.params, cache, dlogits)


def scores(model: ChartTypeModel, seqs: list[np.ndarray], batch_size: int = 32) -> np.ndarray:
    out = []
    for start in range(0, len(seqs), batch_size):
        chunk = seqs[start : start + batch_size]
        for s in chunk:
            if s.ndim != 2 or s.shape[0] == 0 or s.shape[1] != model.embedding_dim:
                raise ValueError("expected a non-empty (tokens x embedding_dim) matrix")
        X, lengths = pad_batch(chunk)
        logits, _ = _forward_batch(model.params, X, lengths)
        out.append(sigmoid(logits))
    return np.concatenate(out) if out else np.zeros(0)


def score_text(model: ChartTypeModel, tokens: Sequence[str],
               embeddings: EmbeddingTable | None = None) -> float:
    table = embeddings or model.embeddings
    if not tokens:
        return 0.0
    return float(scores(model, [table.embed_sequence(tokens)])[0])


def labels_for(samples: Sequence[Sample], target: str) -> np.ndarray:
    return np.array([int(target in s.chart_types) for s in samples])


def train_chart_classifier(
    config: ChartTypeConfig,
    samples: Sequence[Sample],
    embeddings: EmbeddingTable,
    validation_samples: Sequence[Sample] | None = None,
    threshold: float = 0.5,
) -> ChartTypeModel:
    """Train one binary classifier; returns the best-validation-MCC checkpoint."""
    labels = labels_for(samples, config.target)
    if labels.min() == labels.max():
        raise ValueError(f"training data for {config.target!r} holds a single class")
    model = init_chart_classifier(config, embeddings.dimension)
    model.embeddings = embeddings
    seqs = [embeddings.embed_sequence(s.tokens) for s in samples]
    val = list(validation_samples) if validation_samples else list(samples)
    val_seqs = [embeddings.embed_sequence(s.tokens) for s in val]
    val_labels = labels_for(val, config.target)
    opt = RMSprop(config.learning_rate)
    rng = np.random.default_rng([config.seed, 1])
    best_score, best_params = -2.0, copy.deepcopy(model.params)
    for epoch in range(1, config.epochs + 1):
        total = 0.0
        for idx in minibatches(len(seqs), config.batch_size, rng):
            value, grads = loss_and_grads(model, [seqs[i] for i in idx], labels[idx])
            clip_by_global_norm(grads, config.clip_norm)
            opt.step(model.params, grads)
            total += value * len(idx)
        preds = (scores(model, val_seqs) >= threshold).astype(int)
        score = mcc(ConfusionMatrix.from_labels(val_labels, preds))
        model.history.append({"epoch": epoch, "loss": total / len(seqs), "val_mcc": score})
        log.info("%s epoch %d loss %.4f val MCC %.4f", config.target, epoch, total / len(seqs), score)
        if score > best_score:
            best_score, best_params = score, copy.deepcopy(model.params)
    if config.epochs:
        model.params = best_params
    return model


def predict_chart_types(
    pie_model: ChartTypeModel | None,
    line_model: ChartTypeModel | None,
    tokens: Sequence[str],
    embeddings: EmbeddingTable | None = None,
    threshold: float = 0.5,
) -> ChartTypeResult:
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    pie = score_text(pie_model, tokens, embeddings) if pie_model is not None else 0.0
    line = score_text(line_model, tokens, embeddings) if line_model is not None else 0.0
    types = {"bar"}
    if pie >= threshold:
        types.add("pie")
    if line >= threshold:
        types.add("line")
    return ChartTypeResult(frozenset(types), pie, line)


def save_chart_classifier(model: ChartTypeModel, path) -> None:
    tensors = {f"param.{k}": v for k, v in model.params.items()}
    meta = {"history": model.history}
    if model.embeddings is not None:
        meta["embeddings"] = modelio.pack_embeddings(model.embeddings, tensors)
    config = asdict(model.config)
    config["embedding_dim"] = model.embedding_dim
    modelio.save(path, "charttype", config, tensors, meta)


def load_chart_classifier(path) -> ChartTypeModel:
    kind, config, meta, tensors = modelio.load(path)
    if kind != "charttype":
        raise modelio.ModelFormatError(f"expected a chart-type model, found {kind!r}")
    dim = config.pop("embedding_dim")
    params = {k[len("param."):]: v for k, v in tensors.items() if k.startswith("param.")}
    emb = modelio.unpack_embeddings(meta["embeddings"], tensors) if "embeddings" in meta else None
    return ChartTypeModel(ChartTypeConfig(**config), dim, params, emb, meta.get("history", []))
