"""Corpus data model, JSONL ingestion, synthetic corpora, and k-fold splits.

File schema (UTF-8 JSONL, one document per line, all indices 0-based):
``{"doc_id": int, "clauses": [[token, ...], ...], "emotions": [int, ...],
"causes": [int, ...], "pairs": [[int, int], ...]}``
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

PAD_ID = 0
UNK_ID = 1

# Reserved trigger sub-vocabularies used by the synthetic generator. Trigger k
# of one family pairs only with trigger k of the other, so planted labels stay
# recoverable by token scanning even in multi-pair documents.
NUM_TRIGGERS = 4
EMOTION_TRIGGERS = tuple(f"emo{k}" for k in range(NUM_TRIGGERS))
CAUSE_TRIGGERS = tuple(f"cau{k}" for k in range(NUM_TRIGGERS))


class CorpusError(ValueError):
    """Malformed or inconsistent corpus content."""


class ConfigError(ValueError):
    """Invalid synthetic-generation configuration."""


@dataclass(frozen=True)
class Clause:
    tokens: tuple[str, ...]
    index: int

    def __post_init__(self):
        if not self.tokens:
            raise CorpusError(f"clause {self.index} has no tokens")


@dataclass
class Document:
    doc_id: int
    clauses: list[Clause]
    emotion_labels: set[int]
    cause_labels: set[int]
    pair_labels: set[tuple[int, int]]

    def __len__(self) -> int:
        return len(self.clauses)

    def validate(self):
        n = len(self.clauses)
        if n < 1:
            raise CorpusError(f"doc {self.doc_id}: empty document")
        for name, idxs in (("emotions", self.emotion_labels), ("causes", self.cause_labels)):
            for i in idxs:
                if not 0 <= i < n:
                    raise CorpusError(f"doc {self.doc_id}: {name} index {i} out of range (N={n})")
        for i, j in self.pair_labels:
            if not (0 <= i < n and 0 <= j < n):
                raise CorpusError(f"doc {self.doc_id}: pair ({i},{j}) out of range (N={n})")
            if i not in self.emotion_labels:
                raise CorpusError(f"doc {self.doc_id}: pair emotion index {i} missing from emotions")
            if j not in self.cause_labels:
                raise CorpusError(f"doc {self.doc_id}: pair cause index {j} missing from causes")


@dataclass
class Corpus:
    documents: list[Document]
    vocabulary: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        ids = [d.doc_id for d in self.documents]
        if len(set(ids)) != len(ids):
            raise CorpusError("duplicate doc_ids in corpus")
        if not self.vocabulary:
            self.vocabulary = build_vocab(self.documents)

    def __len__(self) -> int:
        return len(self.documents)


def build_vocab(documents) -> dict[str, int]:
    """Token-to-id map with reserved ids 0 = padding and 1 = unknown."""
    vocab = {"<pad>": PAD_ID, "<unk>": UNK_ID}
    for doc in documents:
        for clause in doc.clauses:
            for tok in clause.tokens:
                if tok not in vocab:
                    vocab[tok] = len(vocab)
    return vocab


def document_from_record(rec: dict) -> Document:
    clauses = [Clause(tuple(toks), i) for i, toks in enumerate(rec["clauses"])]
    doc = Document(
        doc_id=int(rec["doc_id"]),
        clauses=clauses,
        emotion_labels={int(i) for i in rec.get("emotions", [])},
        cause_labels={int(i) for i in rec.get("causes", [])},
        pair_labels={(int(i), int(j)) for i, j in rec.get("pairs", [])},
    )
    doc.validate()
    return doc


def document_to_record(doc: Document) -> dict:
    return {
        "doc_id": doc.doc_id,
        "clauses": [list(c.tokens) for c in doc.clauses],
        "emotions": sorted(doc.emotion_labels),
        "causes": sorted(doc.cause_labels),
        "pairs": [list(p) for p in sorted(doc.pair_labels)],
    }


def parse_corpus(path) -> Corpus:
    documents = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            try:
                documents.append(document_from_record(rec))
            except (KeyError, TypeError) as exc:
                raise CorpusError(f"{path}:{lineno}: bad document record: {exc}") from exc
    return Corpus(documents)


def write_corpus(corpus: Corpus, path):
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            fh.write(json.dumps(document_to_record(doc)) + "\n")


@dataclass
class SynthConfig:
    num_docs: int = 100
    clauses_per_doc: tuple[int, int] = (4, 8)
    tokens_per_clause: tuple[int, int] = (3, 6)
    vocab_size: int = 120
    pair_distance: tuple[int, int] = (1, 3)
    pairs_per_doc: tuple[int, int] = (1, 1)

    def validate(self):
        for name in ("clauses_per_doc", "tokens_per_clause", "pair_distance", "pairs_per_doc"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name}: empty range ({lo}, {hi})")
        if self.num_docs < 1:
            raise ConfigError("num_docs must be positive")
        if self.vocab_size < 16:
            raise ConfigError(f"vocab_size must be >= 16, got {self.vocab_size}")
        if self.clauses_per_doc[1] < self.pair_distance[1]:
            raise ConfigError(
                f"clauses_per_doc max {self.clauses_per_doc[1]} < "
                f"pair_distance max {self.pair_distance[1]}"
            )
        if self.clauses_per_doc[0] <= self.pair_distance[0]:
            raise ConfigError(
                f"clauses_per_doc min {self.clauses_per_doc[0]} cannot host "
                f"pair_distance min {self.pair_distance[0]}"
            )
        if self.pairs_per_doc[1] > NUM_TRIGGERS:
            raise ConfigError(f"pairs_per_doc max cannot exceed {NUM_TRIGGERS}")
        if self.pairs_per_doc[0] < 0:
            raise ConfigError("pairs_per_doc min must be >= 0")


def filler_tokens(vocab_size: int) -> list[str]:
    n = vocab_size - 2 - 2 * NUM_TRIGGERS
    return [f"tok{k}" for k in range(n)]


def _rand_in(rng: np.random.Generator, lo: int, hi: int) -> int:
    return int(rng.integers(lo, hi + 1))


def generate_synthetic(cfg: SynthConfig, seed: int) -> Corpus:
    """Plant emotion/cause trigger tokens and derive labels from the planting.

    Pure function of (cfg, seed): the same inputs always produce the same
    corpus. Each planted pair places ``emo{k}`` in the emotion clause and the
    matching ``cau{k}`` in the cause clause, at an offset |i - j| drawn from
    ``pair_distance``; all other tokens come from the filler vocabulary.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    fillers = filler_tokens(cfg.vocab_size)
    documents = []
    for doc_id in range(cfg.num_docs):
        n_clauses = _rand_in(rng, *cfg.clauses_per_doc)
        tokens = [
            [fillers[int(t)] for t in rng.integers(0, len(fillers), size=_rand_in(rng, *cfg.tokens_per_clause))]
            for _ in range(n_clauses)
        ]
        n_pairs = min(_rand_in(rng, *cfg.pairs_per_doc), n_clauses // 2)
        trigger_ids = rng.choice(NUM_TRIGGERS, size=n_pairs, replace=False)
        emotions: set[int] = set()
        causes: set[int] = set()
        pairs: set[tuple[int, int]] = set()
        used: set[int] = set()
        for t in trigger_ids:
            placed = False
            for _ in range(64):
                d_hi = min(cfg.pair_distance[1], n_clauses - 1)
                dist = _rand_in(rng, cfg.pair_distance[0], d_hi)
                i = _rand_in(rng, 0, n_clauses - 1)
                j = i + dist if rng.random() < 0.5 else i - dist
                if not 0 <= j < n_clauses or i in used or j in used:
                    continue
                if i == j and len(tokens[i]) < 2:
                    continue
                placed = True
                break
            if not placed:
                continue
            used.update((i, j))
            if i == j:
                pos = rng.choice(len(tokens[i]), size=2, replace=False)
                tokens[i][int(pos[0])] = EMOTION_TRIGGERS[int(t)]
                tokens[i][int(pos[1])] = CAUSE_TRIGGERS[int(t)]
            else:
                tokens[i][int(rng.integers(len(tokens[i])))] = EMOTION_TRIGGERS[int(t)]
                tokens[j][int(rng.integers(len(tokens[j])))] = CAUSE_TRIGGERS[int(t)]
            emotions.add(i)
            causes.add(j)
            pairs.add((i, j))
        doc = Document(
            doc_id=doc_id,
            clauses=[Clause(tuple(toks), i) for i, toks in enumerate(tokens)],
            emotion_labels=emotions,
            cause_labels=causes,
            pair_labels=pairs,
        )
        doc.validate()
        documents.append(doc)
    return Corpus(documents)


def trigger_scan(doc: Document) -> tuple[set[int], set[int], set[tuple[int, int]]]:
    """Rule-based oracle: recover planted labels by scanning for trigger tokens."""
    emo_at = {}
    cau_at = {}
    for clause in doc.clauses:
        for tok in clause.tokens:
            if tok in EMOTION_TRIGGERS:
                emo_at[EMOTION_TRIGGERS.index(tok)] = clause.index
            elif tok in CAUSE_TRIGGERS:
                cau_at[CAUSE_TRIGGERS.index(tok)] = clause.index
    pairs = {(emo_at[k], cau_at[k]) for k in emo_at if k in cau_at}
    return set(emo_at.values()), set(cau_at.values()), pairs


def split_folds(corpus: Corpus, k: int, seed: int) -> list[tuple[list[Document], list[Document]]]:
    """Deterministic seeded k-fold partition; fold sizes differ by at most 1."""
    n = len(corpus.documents)
    if k < 2:
        raise ValueError(f"fold count must be >= 2, got {k}")
    if k > n:
        raise ValueError(f"fold count {k} exceeds corpus size {n}")
    order = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(order, k)
    splits = []
    for f in folds:
        test_idx = set(int(i) for i in f)
        test = [corpus.documents[i] for i in sorted(test_idx)]
        train = [d for i, d in enumerate(corpus.documents) if i not in test_idx]
        splits.append((train, test))
    return splits
