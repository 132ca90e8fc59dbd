"""Run a pretrained contextual encoder over a corpus and export clause rows.

Each clause is wrapped as [CLS] tokens... [SEP]; a document's wrapped clauses
are concatenated and encoded in one pass, and the hidden state at each
clause's [CLS] position becomes that clause's embedding row. Documents longer
than the encoder limit are split at clause boundaries into maximal windows
that are encoded independently.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass

import numpy as np
import torch

from .binfmt import write_embeddings
from .corpus import Document, read_corpus

logger = logging.getLogger(__name__)


class ExportError(RuntimeError):
    pass


@dataclass
class ExportManifest:
    encoder: str
    dim: int
    corpus: str
    max_len: int
    clause_counts: dict[int, int]
    sha256: str

    def to_dict(self) -> dict:
        return {
            "encoder": self.encoder,
            "dim": self.dim,
            "corpus": self.corpus,
            "max_len": self.max_len,
            "num_docs": len(self.clause_counts),
            "clause_counts": {str(k): v for k, v in sorted(self.clause_counts.items())},
            "sha256": self.sha256,
        }


def load_encoder(encoder_id: str):
    """Load tokenizer and eval-mode model from a hub id or local directory."""
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(encoder_id)
        model = AutoModel.from_pretrained(encoder_id)
    except Exception as exc:
        raise ExportError(f"cannot load encoder {encoder_id!r}: {exc}") from exc
    model.eval()
    return tokenizer, model


def _clause_ids(tokenizer, clause: list[str], max_len: int) -> list[int]:
    """[CLS] + clause token ids + [SEP], truncated to fit one window."""
    ids = tokenizer(" ".join(clause), add_special_tokens=False)["input_ids"]
    budget = max_len - 2
    if len(ids) > budget:
        logger.warning("clause with %d subtokens truncated to %d", len(ids), budget)
        ids = ids[:budget]
    return [tokenizer.cls_token_id] + ids + [tokenizer.sep_token_id]


def _windows(chunks: list[list[int]], max_len: int, doc_id: int):
    """Greedy maximal windows of whole clauses within the length limit."""
    window: list[list[int]] = []
    length = 0
    n_windows = 0
    for chunk in chunks:
        if window and length + len(chunk) > max_len:
            yield window
            n_windows += 1
            window, length = [], 0
        window.append(chunk)
        length += len(chunk)
    if window:
        yield window
        n_windows += 1
    if n_windows > 1:
        logger.warning("doc %d exceeds max_len; split into %d windows", doc_id, n_windows)


@torch.no_grad()
def encode_document(tokenizer, model, doc: Document, max_len: int) -> np.ndarray:
    chunks = [_clause_ids(tokenizer, clause, max_len) for clause in doc.clauses]
    rows = []
    for window in _windows(chunks, max_len, doc.doc_id):
        cls_positions = np.cumsum([0] + [len(c) for c in window[:-1]])
        ids = torch.tensor([sum(window, [])], dtype=torch.long)
        hidden = model(input_ids=ids, attention_mask=torch.ones_like(ids)).last_hidden_state
        rows.append(hidden[0, cls_positions].numpy().astype(np.float32))
    out = np.concatenate(rows, axis=0)
    if out.shape[0] != len(doc.clauses):
        raise ExportError(
            f"doc {doc.doc_id}: produced {out.shape[0]} rows for {len(doc.clauses)} clauses")
    return out


def export_embeddings(corpus_path, encoder_id: str, out_path,
                      max_len: int = 512) -> ExportManifest:
    """Export all clause embeddings and write the manifest beside the binary."""
    documents = read_corpus(corpus_path)
    tokenizer, model = load_encoder(encoder_id)
    dim = int(model.config.hidden_size)
    encoded = []
    for doc in documents:
        mat = encode_document(tokenizer, model, doc, max_len)
        if mat.shape != (len(doc.clauses), dim):
            raise ExportError(f"doc {doc.doc_id}: shape {mat.shape} fails validation")
        encoded.append((doc.doc_id, mat))
    write_embeddings(out_path, dim, encoded)

    digest = hashlib.sha256()
    with open(out_path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    manifest = ExportManifest(
        encoder=encoder_id, dim=dim, corpus=str(corpus_path), max_len=max_len,
        clause_counts={doc.doc_id: len(doc.clauses) for doc in documents},
        sha256=digest.hexdigest(),
    )
    manifest_path = str(out_path) + ".manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2)
    return manifest
