import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from textchart.embeddings import EmbeddingError, EmbeddingTable, char_ngrams, fnv1a_32, load_vectors

SMALL = "2 3\na 1 0 0\nb 0 1 0\n"


def fnv_reference(text: str) -> int:
    h = 2166136261
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 16777619) % 2**32
    return h


def test_fnv_known_vectors():
    assert fnv1a_32(b"") == 0x811C9DC5
    assert fnv1a_32(b"a") == 0xE40C292C
    assert fnv1a_32(b"foobar") == 0xBF9CF968


def test_load_small():
    table = load_vectors(SMALL.encode())
    assert table.dimension == 3
    assert set(table.vocab) == {"a", "b"}
    assert np.array_equal(table.embed_token("a"), [1.0, 0.0, 0.0])


def test_no_header():
    table = load_vectors("a 1 2\nb 3 4\n")
    assert table.dimension == 2 and len(table.vocab) == 2


@pytest.mark.parametrize("text", ["2 3\na 1 0 0\nb 0 1\n", "a 1 0\nb 1 0 0\n"])
def test_inconsistent_length(text):
    with pytest.raises(EmbeddingError, match="expected"):
        load_vectors(text)


def test_non_numeric():
    with pytest.raises(EmbeddingError, match="non-numeric"):
        load_vectors("a 1 x 0\n")


def test_empty():
    with pytest.raises(EmbeddingError):
        load_vectors(b"")


def test_load_twice_identical():
    a, b = load_vectors(SMALL), load_vectors(SMALL)
    assert np.array_equal(a.vectors, b.vectors)
    assert np.array_equal(a.buckets, b.buckets)


def test_bucket_range():
    table = load_vectors(SMALL)
    assert table.buckets.shape == (2000, 3)
    assert np.all(np.abs(table.buckets) <= 0.5 / 3)


def test_oov_brute_force():
    table = load_vectors(SMALL)
    word = "<xyzq>"
    grams = [word[i:i + n] for n in range(3, 7) for i in range(len(word) - n + 1)]
    assert len(grams) == 4 + 3 + 2 + 1
    rows = [table.buckets[fnv_reference(g) % table.bucket_count] for g in grams]
    assert np.allclose(table.embed_token("xyzq"), np.mean(rows, axis=0), rtol=0, atol=1e-15)
    assert np.array_equal(table.embed_token("xyzq"), table.embed_token("xyzq"))


def test_char_ngrams_short_token():
    assert char_ngrams("a") == ["<a>"]


def test_embed_sequence():
    table = load_vectors(SMALL)
    assert table.embed_sequence([]).shape == (0, 3)
    rows = table.embed_sequence(["a", "a"])
    assert np.array_equal(rows[0], rows[1])


@given(st.lists(st.text(min_size=1, max_size=12), max_size=8))
def test_shapes(tokens):
    table = load_vectors(SMALL)
    out = table.embed_sequence(tokens)
    assert out.shape == (len(tokens), 3)
    for t in tokens:
        assert table.embed_token(t).shape == (3,)


@given(st.permutations(["a", "b", "c", "d"]), st.text(min_size=1, max_size=10))
def test_oov_independent_of_vocab_order(order, token):
    vecs = {"a": [1, 0], "b": [0, 1], "c": [1, 1], "d": [2, 2]}
    base = EmbeddingTable.from_dict(vecs)
    shuffled = EmbeddingTable.from_dict({k: vecs[k] for k in order})
    assert np.array_equal(base.embed_token(token), shuffled.embed_token(token))
