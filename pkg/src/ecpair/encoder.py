"""Clause representation providers and relative-position embeddings.

Two providers produce the (N, dim) clause matrix X: a trainable token-lookup
(mean of token embeddings per clause, the stand-in for a contextual encoder)
and a precomputed store read from the binary embedding format below.

Binary embedding format: magic ``A2NE``, little-endian u32 {version=1, dim,
num_docs}, then per document {u32 doc_id, u32 n_clauses, n_clauses*dim
little-endian float32 values}. Values are widened to float64 on load.
"""

from __future__ import annotations

import struct

import numpy as np

from . import autodiff as ad
from .data import UNK_ID, Document

MAGIC = b"A2NE"
FORMAT_VERSION = 1


class EmbeddingError(ValueError):
    """Provider cannot cover the requested document."""


class TrainableLookupProvider:
    """Mean of token embeddings per clause; participates in gradients."""

    mode = "trainable-lookup"

    def __init__(self, vocab: dict[str, int], dim: int, params: ad.ParameterStore,
                 rng: np.random.Generator):
        if dim <= 0:
            raise ValueError(f"embedding dim must be positive, got {dim}")
        self.vocab = vocab
        self.dim = dim
        scale = 1.0 / np.sqrt(dim)
        self.table = params.create(
            "encoder/embedding/table",
            rng.uniform(-scale, scale, size=(len(vocab), dim)),
        )

    def encode(self, doc: Document) -> ad.Tensor:
        rows = []
        table = self.table.tensor()
        for clause in doc.clauses:
            idx = np.array([self.vocab.get(t, UNK_ID) for t in clause.tokens], dtype=np.intp)
            summed = ad.sum_axis(ad.gather_rows(table, idx), axis=0)
            rows.append(ad.scale(summed, 1.0 / len(idx)))
        return ad.stack_rows(rows)


class PrecomputedProvider:
    """Stored clause matrices returned verbatim; no gradient flows."""

    mode = "precomputed"

    def __init__(self, dim: int, store: dict[int, np.ndarray]):
        self.dim = dim
        self.store = store

    @classmethod
    def from_file(cls, path) -> "PrecomputedProvider":
        dim, store = read_embeddings(path)
        return cls(dim, store)

    def encode(self, doc: Document) -> ad.Tensor:
        mat = self.store.get(doc.doc_id)
        if mat is None:
            raise EmbeddingError(f"doc_id {doc.doc_id} not present in precomputed store")
        if mat.shape != (len(doc.clauses), self.dim):
            raise EmbeddingError(
                f"doc_id {doc.doc_id}: stored shape {mat.shape} does not match "
                f"(N={len(doc.clauses)}, dim={self.dim})"
            )
        return ad.Tensor(mat)


class RelativePositionTable:
    """Trainable embeddings for clause offsets j - i clamped to [-K, K]."""

    def __init__(self, max_offset: int, dim_pos: int, params: ad.ParameterStore,
                 rng: np.random.Generator):
        if max_offset < 1 or dim_pos < 1:
            raise ValueError("max_offset and dim_pos must be positive")
        self.max_offset = max_offset
        self.dim_pos = dim_pos
        scale = 1.0 / np.sqrt(dim_pos)
        self.table = params.create(
            "encoder/position/table",
            rng.uniform(-scale, scale, size=(2 * max_offset + 1, dim_pos)),
        )

    def index(self, i: int, j: int) -> int:
        k = self.max_offset
        return int(np.clip(j - i, -k, k)) + k

    def row(self, i: int, j: int) -> ad.Tensor:
        return ad.reshape(ad.gather_rows(self.table.tensor(), [self.index(i, j)]), (self.dim_pos,))

    def grid(self, n: int) -> ad.Tensor:
        """(n, n, dim_pos) lookup for every ordered clause pair."""
        offsets = np.arange(n)[None, :] - np.arange(n)[:, None]
        idx = np.clip(offsets, -self.max_offset, self.max_offset) + self.max_offset
        return ad.gather_rows(self.table.tensor(), idx)


def write_embeddings(path, dim: int, docs: list[tuple[int, np.ndarray]]):
    """Write per-document clause matrices in the binary embedding format."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", FORMAT_VERSION, dim, len(docs)))
        for doc_id, mat in docs:
            mat = np.asarray(mat, dtype=np.float32)
            if mat.ndim != 2 or mat.shape[1] != dim:
                raise EmbeddingError(f"doc_id {doc_id}: matrix shape {mat.shape} != (*, {dim})")
            fh.write(struct.pack("<II", doc_id, mat.shape[0]))
            fh.write(mat.astype("<f4").tobytes(order="C"))


def read_embeddings(path) -> tuple[int, dict[int, np.ndarray]]:
    """Load the binary embedding format, widening values to float64."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise EmbeddingError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        version, dim, num_docs = struct.unpack("<III", fh.read(12))
        if version != FORMAT_VERSION:
            raise EmbeddingError(f"{path}: unsupported version {version}")
        store: dict[int, np.ndarray] = {}
        for _ in range(num_docs):
            doc_id, n_clauses = struct.unpack("<II", fh.read(8))
            raw = fh.read(4 * n_clauses * dim)
            if len(raw) != 4 * n_clauses * dim:
                raise EmbeddingError(f"{path}: truncated payload for doc_id {doc_id}")
            mat = np.frombuffer(raw, dtype="<f4").reshape(n_clauses, dim)
            store[doc_id] = mat.astype(np.float64)
    return dim, store
