"""Axis-entity tagger: two stacked bidirectional LSTM layers, a per-token
dense layer, a second dense layer and a softmax over entity classes.

``combined`` mode predicts {NONE, X, Y} per token; ``individual_x`` and
``individual_y`` predict {NONE, ENTITY} for one axis each.
"""
from __future__ import annotations

import copy
import logging
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import modelio
from .corpus import EntitySpan, Sample, Tag, spans_from_tags
from .embeddings import EmbeddingTable
from .metrics import ConfusionMatrix, harmonic_mean, precision_recall_f1
from .nn import (
    RMSprop,
    bilstm_backward,
    bilstm_forward,
    clip_by_global_norm,
    dense_tanh_backward,
    dense_tanh_forward,
    init_dense,
    init_lstm,
    length_mask,
    minibatches,
    pad_batch,
    softmax,
)

log = logging.getLogger(__name__)

MODES = ("individual_x", "individual_y", "combined")


@dataclass
class TaggerConfig:
    mode: str = "combined"
    hidden_sizes: tuple[int, int] = (64, 32)
    dense_sizes: tuple[int, int] = (32, 64)
    epochs: int = 30
    batch_size: int = 8
    learning_rate: float = 3e-3
    seed: int = 0
    clip_norm: float = 5.0

    def __post_init__(self):
        self.hidden_sizes = tuple(int(v) for v in self.hidden_sizes)
        self.dense_sizes = tuple(int(v) for v in self.dense_sizes)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if len(self.hidden_sizes) != 2 or len(self.dense_sizes) != 2:
            raise ValueError("hidden_sizes and dense_sizes take two integers each")
        if min(self.hidden_sizes + self.dense_sizes) < 1:
            raise ValueError("layer sizes must be >= 1")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")

    @classmethod
    def preset(cls, name: str, **overrides) -> "TaggerConfig":
        if name == "desk":
            return cls(**overrides)
        if name == "paper":
            base = dict(hidden_sizes=(512, 128), dense_sizes=(64, 1024), epochs=8,
                        batch_size=8, learning_rate=1e-3)
            base.update(overrides)
            return cls(**base)
        raise ValueError(f"unknown preset {name!r}")

    @property
    def class_count(self) -> int:
        return 3 if self.mode == "combined" else 2


@dataclass
class TaggerModel:
    config: TaggerConfig
    embedding_dim: int
    params: dict[str, np.ndarray]
    embeddings: EmbeddingTable | None = None
    history: list[dict] = field(default_factory=list)

    @property
    def class_count(self) -> int:
        return self.config.class_count

    @property
    def entity_tags(self) -> tuple[Tag, ...]:
        """Tag emitted for each output class index."""
        if self.config.mode == "combined":
            return (Tag.NONE, Tag.X, Tag.Y)
        return (Tag.NONE, Tag.X if self.config.mode == "individual_x" else Tag.Y)


@dataclass
class TagPrediction:
    probabilities: np.ndarray
    tags: list[Tag]


def init_tagger(config: TaggerConfig, embedding_dimension: int) -> TaggerModel:
    rng = np.random.default_rng(config.seed)
    h1, h2 = config.hidden_sizes
    d1, d2 = config.dense_sizes
    params: dict[str, np.ndarray] = {}
    init_lstm(rng, params, "l1f", embedding_dimension, h1)
    init_lstm(rng, params, "l1b", embedding_dimension, h1)
    init_lstm(rng, params, "l2f", 2 * h1, h2)
    init_lstm(rng, params, "l2b", 2 * h1, h2)
    init_dense(rng, params, "td", 2 * h2, d1)
    init_dense(rng, params, "dn", d1, d2)
    init_dense(rng, params, "out", d2, config.class_count)
    return TaggerModel(config, embedding_dimension, params)


def _forward_batch(params, X: np.ndarray, lengths: np.ndarray):
    H1, c1 = bilstm_forward(params, "l1", X, lengths)
    H2, c2 = bilstm_forward(params, "l2", H1, lengths)
    D1, c3 = dense_tanh_forward(params, "td", H2)
    D2, c4 = dense_tanh_forward(params, "dn", D1)
    probs = softmax(D2 @ params["out.W"] + params["out.b"])
    return probs, (lengths, c1, c2, c3, c4, D2)


def _backward_batch(params, cache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    lengths, c1, c2, c3, c4, D2 = cache
    grads: dict[str, np.ndarray] = {}
    flat = dlogits.reshape(-1, dlogits.shape[-1])
    grads["out.W"] = D2.reshape(-1, D2.shape[-1]).T @ flat
    grads["out.b"] = flat.sum(axis=0)
    dD2 = dlogits @ params["out.W"].T
    dD1 = dense_tanh_backward(grads, params, "dn", dD2, c4)
    dH2 = dense_tanh_backward(grads, params, "td", dD1, c3)
    dH1 = bilstm_backward(grads, "l2", dH2, c2)
    bilstm_backward(grads, "l1", dH1, c1)
    return grads


def gold_classes(model: TaggerModel, tags: Sequence[Tag]) -> np.ndarray:
    lookup = {t: i for i, t in enumerate(model.entity_tags)}
    return np.array([lookup.get(Tag(t), 0) for t in tags], dtype=int)


def loss_and_grads(model: TaggerModel, seqs: list[np.ndarray], golds: list[np.ndarray]):
    """Mean per-token cross-entropy over a batch and its parameter gradients."""
    X, lengths = pad_batch(seqs)
    T, B = X.shape[:2]
    probs, cache = _forward_batch(model.params, X, lengths)
    mask = length_mask(lengths, T)
    onehot = np.zeros_like(probs)
    for b, g in enumerate(golds):
        onehot[np.arange(len(g)), b, g] = 1.0
    n_tokens = mask.sum()
    picked = (probs * onehot).sum(axis=-1)
    value = -float((np.log(np.where(mask > 0, picked, 1.0)) * mask).sum() / n_tokens)
    dlogits = (probs - onehot) * mask[..., None] / n_tokens
    return value, _backward_batch(model.params, cache, dlogits)


def _check_input(model: TaggerModel, embedded: np.ndarray) -> None:
    if embedded.ndim != 2 or embedded.shape[0] == 0:
        raise ValueError("expected a non-empty (tokens x dimension) matrix")
    if embedded.shape[1] != model.embedding_dim:
        raise ValueError(
            f"dimension mismatch: model expects {model.embedding_dim}, got {embedded.shape[1]}"
        )


def predict_batch(model: TaggerModel, seqs: list[np.ndarray]) -> list[TagPrediction]:
    for s in seqs:
        _check_input(model, s)
    X, lengths = pad_batch(seqs)
    probs, _ = _forward_batch(model.params, X, lengths)
    out = []
    for b, n in enumerate(lengths):
        p = probs[:n, b]
        out.append(TagPrediction(p, [model.entity_tags[k] for k in p.argmax(axis=1)]))
    return out


def forward(model: TaggerModel, embedded: np.ndarray) -> TagPrediction:
    return predict_batch(model, [np.asarray(embedded, dtype=np.float64)])[0]


def loss(prediction: TagPrediction, gold: Sequence[int]) -> float:
    """Mean negative log-likelihood of the gold class indices."""
    gold = np.asarray(gold, dtype=int)
    p = prediction.probabilities
    if len(gold) != len(p):
        raise ValueError("prediction and gold lengths differ")
    picked = p[np.arange(len(gold)), gold]
    return float(max(0.0, -np.mean(np.log(np.maximum(picked, 1e-300)))))


def tag_scores(model: TaggerModel, samples: Sequence[Sample], embeddings: EmbeddingTable,
               batch_size: int = 32) -> dict:
    """Token-level precision/recall/F1 per entity class and their harmonic mean."""
    seqs = [embeddings.embed_sequence(s.tokens) for s in samples]
    preds: list[TagPrediction] = []
    for start in range(0, len(seqs), batch_size):
        preds.extend(predict_batch(model, seqs[start : start + batch_size]))
    return score_tags([s.tags for s in samples], [p.tags for p in preds], model.config.mode)


def score_tags(gold: Sequence[Sequence[Tag]], pred: Sequence[Sequence[Tag]], mode: str) -> dict:
    g = np.array([Tag(t).value for seq in gold for t in seq])
    p = np.array([Tag(t).value for seq in pred for t in seq])
    if mode == "combined":
        classes = {"X": "X", "Y": "Y"}
    elif mode == "individual_x":
        g = np.where(g == "X", "X", "O")
        classes = {"X": "X", "O": "O"}
    else:
        g = np.where(g == "Y", "Y", "O")
        classes = {"Y": "Y", "O": "O"}
    report: dict = {}
    f1s = []
    for name, value in classes.items():
        cm = ConfusionMatrix.from_labels(g == value, p == value)
        prec, rec, f1 = precision_recall_f1(cm)
        report[name] = {"precision": prec, "recall": rec, "f1": f1}
        f1s.append(f1)
    report["harmonic_f1"] = harmonic_mean(*f1s)
    return report


def train(
    config: TaggerConfig,
    train_samples: Sequence[Sample],
    validation_samples: Sequence[Sample] | None,
    embeddings: EmbeddingTable,
) -> TaggerModel:
    """Minibatch RMSprop training; returns the best-validation checkpoint."""
    if not train_samples:
        raise ValueError("empty training set")
    model = init_tagger(config, embeddings.dimension)
    model.embeddings = embeddings
    seqs = [embeddings.embed_sequence(s.tokens) for s in train_samples]
    golds = [gold_classes(model, s.tags) for s in train_samples]
    val = list(validation_samples) if validation_samples else list(train_samples)
    opt = RMSprop(config.learning_rate)
    rng = np.random.default_rng([config.seed, 1])
    best_score, best_params = -1.0, copy.deepcopy(model.params)
    for epoch in range(1, config.epochs + 1):
        total, count = 0.0, 0
        for idx in minibatches(len(seqs), config.batch_size, rng):
            value, grads = loss_and_grads(model, [seqs[i] for i in idx], [golds[i] for i in idx])
            clip_by_global_norm(grads, config.clip_norm)
            opt.step(model.params, grads)
            n = sum(len(golds[i]) for i in idx)
            total += value * n
            count += n
        score = tag_scores(model, val, embeddings)["harmonic_f1"]
        model.history.append({"epoch": epoch, "loss": total / count, "val_harmonic_f1": score})
        log.info("tagger epoch %d loss %.4f val harmonic F1 %.4f", epoch, total / count, score)
        if score > best_score:
            best_score, best_params = score, copy.deepcopy(model.params)
    if config.epochs:
        model.params = best_params
    return model


def predict_entities(model: TaggerModel, tokens: Sequence[str],
                     embeddings: EmbeddingTable | None = None) -> tuple[list[EntitySpan], list[EntitySpan]]:
    """Tag ``tokens`` and group the tags into (x_spans, y_spans)."""
    if not tokens:
        return [], []
    table = embeddings or model.embeddings
    pred = forward(model, table.embed_sequence(tokens))
    spans = spans_from_tags(tokens, pred.tags)
    return [s for s in spans if s.kind is Tag.X], [s for s in spans if s.kind is Tag.Y]


def compose_individual(x_pred: TagPrediction, y_pred: TagPrediction) -> list[Tag]:
    """Merge per-axis predictions; a token claimed by both goes to the
    model with the larger entity probability (X on exact ties)."""
    tags = []
    for i in range(len(x_pred.tags)):
        x_on = x_pred.tags[i] is Tag.X
        y_on = y_pred.tags[i] is Tag.Y
        if x_on and y_on:
            x_on = x_pred.probabilities[i, 1] >= y_pred.probabilities[i, 1]
            y_on = not x_on
        tags.append(Tag.X if x_on else Tag.Y if y_on else Tag.NONE)
    return tags


def tag_tokens(taggers, tokens: Sequence[str], embeddings: EmbeddingTable | None = None) -> list[Tag]:
    """Tags from a combined model or an ``(x_model, y_model)`` pair."""
    if not tokens:
        return []
    if isinstance(taggers, TaggerModel):
        table = embeddings or taggers.embeddings
        return forward(taggers, table.embed_sequence(tokens)).tags
    x_model, y_model = taggers
    xt = embeddings or x_model.embeddings
    yt = embeddings or y_model.embeddings
    return compose_individual(
        forward(x_model, xt.embed_sequence(tokens)), forward(y_model, yt.embed_sequence(tokens))
    )


def save_tagger(model: TaggerModel, path) -> None:
    tensors = {f"param.{k}": v for k, v in model.params.items()}
    meta = {"history": model.history}
    if model.embeddings is not None:
        meta["embeddings"] = modelio.pack_embeddings(model.embeddings, tensors)
    config = asdict(model.config)
    config["embedding_dim"] = model.embedding_dim
    modelio.save(path, "tagger", config, tensors, meta)


def load_tagger(path) -> TaggerModel:
    kind, config, meta, tensors = modelio.load(path)
    if kind != "tagger":
        raise modelio.ModelFormatError(f"expected a tagger model, found {kind!r}")
    dim = config.pop("embedding_dim")
    params = {k[len("param."):]: v for k, v in tensors.items() if k.startswith("param.")}
    emb = modelio.unpack_embeddings(meta["embeddings"], tensors) if "embeddings" in meta else None
    return TaggerModel(TaggerConfig(**config), dim, params, emb, meta.get("history", []))
