import json
import logging

import numpy as np
import pytest
import torch

from ecpair_export import binfmt, corpus, export
from ecpair_export.cli import run_cli


def test_read_corpus(corpus_path):
    docs = corpus.read_corpus(corpus_path)
    assert [d.doc_id for d in docs] == [0, 4]
    assert docs[0].clauses[1] == ["emo0", "tok3"]


def test_read_corpus_errors(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"doc_id": 0, "clauses": [["a"]]}\n{oops\n')
    with pytest.raises(corpus.CorpusError, match=":2:"):
        corpus.read_corpus(bad)
    dup = tmp_path / "dup.jsonl"
    dup.write_text('{"doc_id": 1, "clauses": [["a"]]}\n{"doc_id": 1, "clauses": [["b"]]}\n')
    with pytest.raises(corpus.CorpusError, match="duplicate"):
        corpus.read_corpus(dup)


def test_export_payload_shape(tiny_encoder_dir, corpus_path, tmp_path):
    out = tmp_path / "emb.bin"
    manifest = export.export_embeddings(corpus_path, tiny_encoder_dir, out)
    assert manifest.dim == 32
    assert manifest.clause_counts == {0: 3, 4: 2}
    dim, store = binfmt.read_embeddings(out)
    assert dim == 32
    assert store[0].shape == (3, 32) and store[4].shape == (2, 32)
    # header + per-doc (id, count) + payload floats
    expected_size = 16 + 2 * 8 + 4 * 32 * (3 + 2)
    assert out.stat().st_size == expected_size


def test_export_checksum_stable(tiny_encoder_dir, corpus_path, tmp_path):
    m1 = export.export_embeddings(corpus_path, tiny_encoder_dir, tmp_path / "a.bin")
    m2 = export.export_embeddings(corpus_path, tiny_encoder_dir, tmp_path / "b.bin")
    assert m1.sha256 == m2.sha256
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


def test_manifest_written_beside_binary(tiny_encoder_dir, corpus_path, tmp_path):
    out = tmp_path / "emb.bin"
    manifest = export.export_embeddings(corpus_path, tiny_encoder_dir, out)
    blob = json.loads((tmp_path / "emb.bin.manifest.json").read_text())
    assert blob["sha256"] == manifest.sha256
    assert blob["dim"] == 32
    assert blob["clause_counts"] == {"0": 3, "4": 2}
    assert blob["encoder"] == tiny_encoder_dir


def test_cls_rows_match_direct_encoding(tiny_encoder_dir, tmp_path):
    path = tmp_path / "one.jsonl"
    path.write_text(json.dumps({"doc_id": 9, "clauses": [["tok1", "tok2"]]}) + "\n")
    out = tmp_path / "emb.bin"
    export.export_embeddings(path, tiny_encoder_dir, out)
    _, store = binfmt.read_embeddings(out)

    tokenizer, model = export.load_encoder(tiny_encoder_dir)
    ids = tokenizer("tok1 tok2", add_special_tokens=False)["input_ids"]
    full = [tokenizer.cls_token_id] + ids + [tokenizer.sep_token_id]
    with torch.no_grad():
        hidden = model(input_ids=torch.tensor([full])).last_hidden_state
    np.testing.assert_allclose(store[9][0], hidden[0, 0].numpy().astype(np.float32))


def test_long_document_splits_into_windows(tiny_encoder_dir, tmp_path, caplog):
    clauses = [[f"tok{i}", f"tok{i + 1}", f"tok{i + 2}"] for i in range(0, 40, 4)]
    path = tmp_path / "long.jsonl"
    path.write_text(json.dumps({"doc_id": 2, "clauses": clauses}) + "\n")
    out = tmp_path / "emb.bin"
    with caplog.at_level(logging.WARNING):
        manifest = export.export_embeddings(path, tiny_encoder_dir, out, max_len=16)
    assert manifest.clause_counts == {2: len(clauses)}
    _, store = binfmt.read_embeddings(out)
    assert store[2].shape == (len(clauses), 32)
    assert any("split into" in rec.message for rec in caplog.records)


def test_windowing_changes_context_only_across_windows(tiny_encoder_dir, tmp_path):
    clauses = [["tok1", "tok2"], ["tok3", "tok4"]]
    path = tmp_path / "two.jsonl"
    path.write_text(json.dumps({"doc_id": 0, "clauses": clauses}) + "\n")
    joint = tmp_path / "joint.bin"
    split = tmp_path / "split.bin"
    export.export_embeddings(path, tiny_encoder_dir, joint, max_len=64)
    export.export_embeddings(path, tiny_encoder_dir, split, max_len=6)
    _, joint_store = binfmt.read_embeddings(joint)
    _, split_store = binfmt.read_embeddings(split)
    # independent windows cannot see each other, so rows differ from the
    # single-pass encoding
    assert not np.allclose(joint_store[0][1], split_store[0][1])


def test_missing_encoder_fails(corpus_path, tmp_path, capsys):
    code = run_cli(["export", "--corpus", str(corpus_path),
                    "--encoder", str(tmp_path / "nope"),
                    "--out", str(tmp_path / "emb.bin")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_cli_export(tiny_encoder_dir, corpus_path, tmp_path, capsys):
    out = tmp_path / "emb.bin"
    code = run_cli(["export", "--corpus", str(corpus_path),
                    "--encoder", tiny_encoder_dir, "--out", str(out)])
    assert code == 0
    assert "sha256" in capsys.readouterr().out
    assert out.exists() and (tmp_path / "emb.bin.manifest.json").exists()
