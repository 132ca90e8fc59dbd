import json
from collections import Counter

import numpy as np
import pytest

from ecpair import data


def write_lines(tmp_path, lines, name="corpus.jsonl"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_parse_minimal_document(tmp_path):
    line = json.dumps({"doc_id": 0, "clauses": [["a"], ["b"]],
                       "emotions": [1], "causes": [0], "pairs": [[1, 0]]})
    corpus = data.parse_corpus(write_lines(tmp_path, [line]))
    assert len(corpus) == 1
    doc = corpus.documents[0]
    assert len(doc) == 2
    assert doc.pair_labels == {(1, 0)}
    assert corpus.vocabulary["<pad>"] == 0 and corpus.vocabulary["<unk>"] == 1
    assert {"a", "b"} <= set(corpus.vocabulary)


def test_parse_rejects_out_of_range_pair(tmp_path):
    line = json.dumps({"doc_id": 3, "clauses": [["a"], ["b"]],
                       "emotions": [1], "causes": [0], "pairs": [[1, 5]]})
    with pytest.raises(data.CorpusError, match="doc 3"):
        data.parse_corpus(write_lines(tmp_path, [line]))


def test_parse_rejects_pair_index_missing_from_clause_sets(tmp_path):
    line = json.dumps({"doc_id": 0, "clauses": [["a"], ["b"]],
                       "emotions": [], "causes": [0], "pairs": [[1, 0]]})
    with pytest.raises(data.CorpusError, match="missing from emotions"):
        data.parse_corpus(write_lines(tmp_path, [line]))


def test_parse_reports_malformed_line_number(tmp_path):
    good = json.dumps({"doc_id": 0, "clauses": [["a"]], "emotions": [],
                       "causes": [], "pairs": []})
    with pytest.raises(data.CorpusError, match=":2:"):
        data.parse_corpus(write_lines(tmp_path, [good, "{not json"]))


def test_parse_seven_clause_pair_structure(tmp_path):
    # emotion clause 7, cause clause 6 in 1-based prose = (6, 5) 0-based
    clauses = [[f"w{i}"] for i in range(7)]
    line = json.dumps({"doc_id": 0, "clauses": clauses,
                       "emotions": [6], "causes": [5], "pairs": [[6, 5]]})
    doc = data.parse_corpus(write_lines(tmp_path, [line])).documents[0]
    assert doc.pair_labels == {(6, 5)}


def test_duplicate_doc_ids_rejected(tmp_path):
    line = json.dumps({"doc_id": 1, "clauses": [["a"]], "emotions": [],
                       "causes": [], "pairs": []})
    with pytest.raises(data.CorpusError, match="duplicate"):
        data.parse_corpus(write_lines(tmp_path, [line, line]))


def test_corpus_round_trip(tmp_path):
    corpus = data.generate_synthetic(data.SynthConfig(num_docs=20), seed=5)
    path = tmp_path / "out.jsonl"
    data.write_corpus(corpus, path)
    reloaded = data.parse_corpus(path)
    assert len(reloaded) == len(corpus)
    for a, b in zip(corpus.documents, reloaded.documents):
        assert a.doc_id == b.doc_id
        assert [c.tokens for c in a.clauses] == [c.tokens for c in b.clauses]
        assert a.emotion_labels == b.emotion_labels
        assert a.cause_labels == b.cause_labels
        assert a.pair_labels == b.pair_labels
    assert reloaded.vocabulary == corpus.vocabulary


def test_synth_forced_config():
    cfg = data.SynthConfig(num_docs=1, clauses_per_doc=(6, 6),
                           pairs_per_doc=(1, 1), pair_distance=(1, 1))
    corpus = data.generate_synthetic(cfg, seed=7)
    assert len(corpus) == 1
    doc = corpus.documents[0]
    assert len(doc) == 6
    assert len(doc.pair_labels) == 1
    ((i, j),) = doc.pair_labels
    assert abs(i - j) == 1


def test_synth_determinism():
    cfg = data.SynthConfig(num_docs=30)
    a = data.generate_synthetic(cfg, seed=7)
    b = data.generate_synthetic(cfg, seed=7)
    assert [data.document_to_record(d) for d in a.documents] == \
           [data.document_to_record(d) for d in b.documents]
    c = data.generate_synthetic(cfg, seed=8)
    assert [data.document_to_record(d) for d in a.documents] != \
           [data.document_to_record(d) for d in c.documents]


def test_synth_base_rates():
    corpus = data.generate_synthetic(data.SynthConfig(num_docs=500), seed=1)
    mean_emotions = np.mean([len(d.emotion_labels) for d in corpus.documents])
    assert 0.95 <= mean_emotions <= 1.0  # default config plants one pair per doc


@pytest.mark.parametrize("pairs,distance", [((1, 1), (1, 3)), ((0, 2), (1, 4)), ((1, 2), (0, 2))])
def test_trigger_scan_recovers_planted_labels(pairs, distance):
    cfg = data.SynthConfig(num_docs=120, clauses_per_doc=(5, 9),
                           pairs_per_doc=pairs, pair_distance=distance)
    corpus = data.generate_synthetic(cfg, seed=13)
    for doc in corpus.documents:
        emotions, causes, recovered = data.trigger_scan(doc)
        assert emotions == doc.emotion_labels
        assert causes == doc.cause_labels
        assert recovered == doc.pair_labels


def test_synth_config_errors():
    with pytest.raises(data.ConfigError, match="pair_distance max"):
        data.generate_synthetic(
            data.SynthConfig(clauses_per_doc=(2, 3), pair_distance=(1, 4)), seed=0)
    with pytest.raises(data.ConfigError, match="vocab_size"):
        data.generate_synthetic(data.SynthConfig(vocab_size=8), seed=0)
    with pytest.raises(data.ConfigError, match="empty range"):
        data.generate_synthetic(data.SynthConfig(clauses_per_doc=(8, 4)), seed=0)


def test_split_folds_ten_by_ten():
    corpus = data.generate_synthetic(data.SynthConfig(num_docs=10), seed=2)
    splits = data.split_folds(corpus, k=10, seed=0)
    assert len(splits) == 10
    assert all(len(train) == 9 and len(test) == 1 for train, test in splits)


def test_split_folds_partition_property():
    corpus = data.generate_synthetic(data.SynthConfig(num_docs=37), seed=2)
    splits = data.split_folds(corpus, k=5, seed=3)
    seen = []
    for train, test in splits:
        test_ids = {d.doc_id for d in test}
        train_ids = {d.doc_id for d in train}
        assert not test_ids & train_ids
        assert test_ids | train_ids == {d.doc_id for d in corpus.documents}
        seen.extend(test_ids)
    assert sorted(seen) == [d.doc_id for d in corpus.documents]


def test_split_folds_sizes_105_docs():
    corpus = data.generate_synthetic(data.SynthConfig(num_docs=105), seed=2)
    sizes = Counter(len(test) for _, test in data.split_folds(corpus, k=10, seed=0))
    assert sizes == Counter({11: 5, 10: 5})


def test_split_folds_deterministic_and_validated():
    corpus = data.generate_synthetic(data.SynthConfig(num_docs=12), seed=2)
    a = data.split_folds(corpus, k=3, seed=4)
    b = data.split_folds(corpus, k=3, seed=4)
    assert [[d.doc_id for d in t] for _, t in a] == [[d.doc_id for d in t] for _, t in b]
    with pytest.raises(ValueError, match="exceeds corpus size"):
        data.split_folds(corpus, k=13, seed=0)
    with pytest.raises(ValueError, match=">= 2"):
        data.split_folds(corpus, k=1, seed=0)


def test_empty_clause_rejected():
    with pytest.raises(data.CorpusError, match="no tokens"):
        data.Clause((), 0)
