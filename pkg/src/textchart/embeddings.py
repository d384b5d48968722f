"""Pretrained word vectors with a hashed character n-gram fallback."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_BUCKETS = 2000
BUCKET_SEED = 1729
MIN_N, MAX_N = 3, 6

_FNV_OFFSET = 0x811C9DC5
_FNV_PRIME = 0x01000193


class EmbeddingError(ValueError):
    pass


def fnv1a_32(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFF
    return h


def char_ngrams(token: str, min_n: int = MIN_N, max_n: int = MAX_N) -> list[str]:
    """All character n-grams of ``<token>`` with ``min_n <= n <= max_n``."""
    word = f"<{token}>"
    return [
        word[i : i + n]
        for n in range(min_n, max_n + 1)
        for i in range(len(word) - n + 1)
    ]


def _bucket_matrix(bucket_count: int, dimension: int, seed: int) -> np.ndarray:
    bound = 0.5 / dimension
    rng = np.random.default_rng(seed)
    return rng.uniform(-bound, bound, size=(bucket_count, dimension))


@dataclass
class EmbeddingTable:
    dimension: int
    vocab: dict[str, int]
    vectors: np.ndarray  # (len(vocab), dimension)
    bucket_count: int = DEFAULT_BUCKETS
    bucket_seed: int = BUCKET_SEED
    buckets: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.dimension <= 0:
            raise EmbeddingError("dimension must be positive")
        if self.bucket_count <= 0:
            raise EmbeddingError("bucket_count must be positive")
        self.vectors = np.asarray(self.vectors, dtype=np.float64).reshape(-1, self.dimension)
        if self.buckets is None:
            self.buckets = _bucket_matrix(self.bucket_count, self.dimension, self.bucket_seed)

    @classmethod
    def from_dict(cls, table: dict[str, Sequence[float]], **kwargs) -> "EmbeddingTable":
        words = list(table)
        if not words:
            raise EmbeddingError("empty vocabulary")
        matrix = np.array([table[w] for w in words], dtype=np.float64)
        return cls(matrix.shape[1], {w: i for i, w in enumerate(words)}, matrix, **kwargs)

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def bucket_ids(self, token: str) -> list[int]:
        return [fnv1a_32(g.encode("utf-8")) % self.bucket_count for g in char_ngrams(token)]

    def embed_token(self, token: str) -> np.ndarray:
        row = self.vocab.get(token)
        if row is not None:
            return self.vectors[row].copy()
        ids = self.bucket_ids(token)
        return self.buckets[ids].mean(axis=0)

    def embed_sequence(self, tokens: Sequence[str]) -> np.ndarray:
        if not tokens:
            return np.zeros((0, self.dimension))
        return np.stack([self.embed_token(t) for t in tokens])


def load_vectors(data: bytes | str, bucket_count: int = DEFAULT_BUCKETS) -> EmbeddingTable:
    """Parse the text vector format: optional ``count dim`` header, then
    ``token v1 ... vdim`` lines."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = [ln for ln in data.splitlines() if ln.strip()]
    if not lines:
        raise EmbeddingError("empty vector file")
    dim = None
    first = lines[0].split()
    if len(first) == 2 and all(p.isdigit() for p in first):
        dim = int(first[1])
        lines = lines[1:]
    vocab: dict[str, int] = {}
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines, start=2 if dim is not None else 1):
        parts = line.rstrip().split(" ")
        token, comps = parts[0], parts[1:]
        if dim is None:
            dim = len(comps)
        if len(comps) != dim:
            raise EmbeddingError(
                f"line {lineno}: expected {dim} components, got {len(comps)}"
            )
        try:
            vec = [float(c) for c in comps]
        except ValueError:
            raise EmbeddingError(f"line {lineno}: non-numeric component") from None
        if token in vocab:
            rows[vocab[token]] = vec
        else:
            vocab[token] = len(rows)
            rows.append(vec)
    if not dim:
        raise EmbeddingError("vector dimension is zero")
    return EmbeddingTable(dim, vocab, np.array(rows).reshape(-1, dim), bucket_count=bucket_count)


def load_vectors_file(path, bucket_count: int = DEFAULT_BUCKETS) -> EmbeddingTable:
    with open(path, "rb") as fh:
        return load_vectors(fh.read(), bucket_count=bucket_count)
