"""Binary clause-embedding format shared with the extraction engine.

Layout: magic ``A2NE``, little-endian u32 {version=1, dim, num_docs}, then
per document {u32 doc_id, u32 n_clauses, n_clauses*dim little-endian float32
values}.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"A2NE"
FORMAT_VERSION = 1


class FormatError(ValueError):
    pass


def write_embeddings(path, dim: int, docs: list[tuple[int, np.ndarray]]):
    for doc_id, mat in docs:
        if mat.ndim != 2 or mat.shape[1] != dim:
            raise FormatError(f"doc_id {doc_id}: matrix shape {mat.shape} != (*, {dim})")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", FORMAT_VERSION, dim, len(docs)))
        for doc_id, mat in docs:
            fh.write(struct.pack("<II", doc_id, mat.shape[0]))
            fh.write(np.asarray(mat, dtype="<f4").tobytes(order="C"))


def read_embeddings(path) -> tuple[int, dict[int, np.ndarray]]:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise FormatError(f"{path}: bad magic")
        version, dim, num_docs = struct.unpack("<III", fh.read(12))
        if version != FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        store = {}
        for _ in range(num_docs):
            doc_id, n_clauses = struct.unpack("<II", fh.read(8))
            raw = fh.read(4 * n_clauses * dim)
            if len(raw) != 4 * n_clauses * dim:
                raise FormatError(f"{path}: truncated payload for doc_id {doc_id}")
            store[doc_id] = np.frombuffer(raw, dtype="<f4").reshape(n_clauses, dim)
    return dim, store
