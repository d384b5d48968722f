"""Versioned model container.

Layout::

    b"TXCM" | u16 version | u32 header length | JSON header | tensor data

The header names every tensor with its shape and byte offset into the data
section; tensor data is little-endian float64, C order.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .embeddings import EmbeddingTable

MAGIC = b"TXCM"
VERSION = 1
_PREFIX = struct.Struct("<4sHI")


class ModelFormatError(ValueError):
    pass


def dumps(kind: str, config: dict, tensors: dict[str, np.ndarray], meta: dict | None = None) -> bytes:
    entries = []
    chunks = []
    offset = 0
    for name, arr in tensors.items():
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        entries.append({"name": name, "shape": list(np.shape(arr)), "offset": offset})
        chunks.append(data)
        offset += len(data)
    header = json.dumps(
        {"kind": kind, "config": config, "meta": meta or {}, "tensors": entries},
        sort_keys=True,
    ).encode("utf-8")
    return _PREFIX.pack(MAGIC, VERSION, len(header)) + header + b"".join(chunks)


def loads(blob: bytes) -> tuple[str, dict, dict, dict[str, np.ndarray]]:
    if len(blob) < _PREFIX.size:
        raise ModelFormatError("truncated model file")
    magic, version, hlen = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise ModelFormatError("not a textchart model file")
    if version != VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    start = _PREFIX.size
    try:
        header = json.loads(blob[start : start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"corrupt header: {exc}") from None
    data = memoryview(blob)[start + hlen :]
    tensors = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        off = entry["offset"]
        if off + 8 * count > len(data):
            raise ModelFormatError(f"tensor {entry['name']} runs past end of file")
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=off)
        tensors[entry["name"]] = arr.astype(np.float64).reshape(shape)
    return header["kind"], header["config"], header["meta"], tensors


def save(path, kind: str, config: dict, tensors: dict[str, np.ndarray], meta: dict | None = None) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(kind, config, tensors, meta))


def load(path) -> tuple[str, dict, dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        return loads(fh.read())


def pack_embeddings(table: EmbeddingTable, tensors: dict[str, np.ndarray]) -> dict:
    tensors["embeddings.vectors"] = table.vectors
    words = sorted(table.vocab, key=table.vocab.__getitem__)
    return {
        "dimension": table.dimension,
        "vocab": words,
        "bucket_count": table.bucket_count,
        "bucket_seed": table.bucket_seed,
    }


def unpack_embeddings(meta: dict, tensors: dict[str, np.ndarray]) -> EmbeddingTable:
    words = meta["vocab"]
    return EmbeddingTable(
        dimension=meta["dimension"],
        vocab={w: i for i, w in enumerate(words)},
        vectors=tensors["embeddings.vectors"],
        bucket_count=meta["bucket_count"],
        bucket_seed=meta["bucket_seed"],
    )
