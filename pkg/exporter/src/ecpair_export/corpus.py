"""Minimal reader for the engine's JSONL corpus format.

Schema (UTF-8, one object per line): ``{"doc_id": int, "clauses":
[[token, ...], ...], ...}``. Label fields are ignored here; the exporter only
needs document ids and clause token lists.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


class CorpusError(ValueError):
    pass


@dataclass
class Document:
    doc_id: int
    clauses: list[list[str]]


def read_corpus(path) -> list[Document]:
    documents = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            try:
                doc_id = int(rec["doc_id"])
                clauses = [[str(t) for t in toks] for toks in rec["clauses"]]
            except (KeyError, TypeError) as exc:
                raise CorpusError(f"{path}:{lineno}: bad record: {exc}") from exc
            if doc_id in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate doc_id {doc_id}")
            if not clauses or any(not toks for toks in clauses):
                raise CorpusError(f"{path}:{lineno}: empty document or clause")
            seen.add(doc_id)
            documents.append(Document(doc_id, clauses))
    return documents
