import json

import pytest
import torch
from tokenizers import Tokenizer
from tokenizers.models import WordPiece
from tokenizers.pre_tokenizers import Whitespace
from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"]
CORPUS_TOKENS = ([f"tok{i}" for i in range(110)]
                 + [f"emo{i}" for i in range(4)] + [f"cau{i}" for i in range(4)])


@pytest.fixture(scope="session")
def tiny_encoder_dir(tmp_path_factory):
    """Word-level tokenizer + seeded two-layer encoder saved as a local model."""
    out = tmp_path_factory.mktemp("tiny-encoder")
    vocab = {w: i for i, w in enumerate(SPECIALS + CORPUS_TOKENS)}
    tk = Tokenizer(WordPiece(vocab, unk_token="[UNK]"))
    tk.pre_tokenizer = Whitespace()
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=tk, unk_token="[UNK]", pad_token="[PAD]",
        cls_token="[CLS]", sep_token="[SEP]")
    tokenizer.save_pretrained(out)

    config = BertConfig(vocab_size=len(vocab), hidden_size=32, num_hidden_layers=2,
                        num_attention_heads=2, intermediate_size=64,
                        max_position_embeddings=256)
    torch.manual_seed(1234)
    BertModel(config).save_pretrained(out)
    return str(out)


@pytest.fixture
def corpus_path(tmp_path):
    records = [
        {"doc_id": 0, "clauses": [["tok1", "tok2"], ["emo0", "tok3"], ["cau0"]],
         "emotions": [1], "causes": [2], "pairs": [[1, 2]]},
        {"doc_id": 4, "clauses": [["tok5", "tok6", "tok7"], ["tok8"]],
         "emotions": [], "causes": [], "pairs": []},
    ]
    path = tmp_path / "corpus.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path
