"""Command-line entry point: synth, train, eval, gradcheck, and folds.

Every flag has a config-file equivalent (``key=value`` lines, ``#`` comments);
precedence is built-in defaults < config file < flags. Train runs echo the
effective configuration into the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .data import (ConfigError, CorpusError, SynthConfig, build_vocab, generate_synthetic,
                   parse_corpus, split_folds, write_corpus)
from .encoder import EmbeddingError, PrecomputedProvider
from .train import (TrainConfig, TrainingDiverged, build_model, evaluate_model, fit,
                    load_checkpoint, save_checkpoint, total_loss)

DEFAULTS = {
    "seed": 0,
    "hidden": 300,
    "embed_dim": 64,
    "dim_pos": 50,
    "max_offset": 10,
    "mask_dim": 64,
    "lambda1": 0.4,
    "lambda2": 0.4,
    "lr": 1e-3,
    "batch": 4,
    "epochs": 30,
    "dropout": 0.1,
    "threshold": 0.5,
    "weight_decay": 0.01,
    "encoding": "pfn",
    "ita": "both",
    "aux": "on",
    "literal_loss": False,
    "share_gate_params": False,
    "detach_side": "none",
    "folds": 10,
    "num_docs": 100,
    "clauses": "4:8",
    "tokens": "3:6",
    "vocab_size": 120,
    "distance": "1:3",
    "pairs": "1:1",
    "dim": 16,
    "n_clauses": 5,
    "tol": 1e-4,
    "eps": 1e-5,
    "macro": False,
}

_BOOL_KEYS = ("literal_loss", "share_gate_params", "macro")
_INT_KEYS = ("seed", "hidden", "embed_dim", "dim_pos", "max_offset", "mask_dim",
             "batch", "epochs", "folds", "num_docs", "vocab_size", "dim", "n_clauses")
_FLOAT_KEYS = ("lambda1", "lambda2", "lr", "dropout", "threshold", "weight_decay",
               "tol", "eps")


def parse_range(text) -> tuple[int, int]:
    if isinstance(text, tuple):
        return text
    parts = str(text).split(":")
    if len(parts) == 1:
        v = int(parts[0])
        return v, v
    if len(parts) == 2:
        return int(parts[0]), int(parts[1])
    raise ValueError(f"bad range {text!r}, expected 'lo:hi'")


def read_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


def _coerce(key: str, value):
    if value is None:
        return None
    if key in _BOOL_KEYS:
        if isinstance(value, bool):
            return value
        return str(value).lower() in ("1", "true", "yes", "on")
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    return value


def merge_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        for key, val in read_config_file(args.config).items():
            if key not in cfg and key not in ("corpus", "embeddings", "checkpoint",
                                              "out", "dev_corpus"):
                raise ValueError(f"unknown config key {key!r}")
            cfg[key] = _coerce(key, val)
    for key, val in vars(args).items():
        if key in ("command", "config"):
            continue
        if val is not None:
            cfg[key] = _coerce(key, val)
    return cfg


def train_config_from(cfg: dict) -> TrainConfig:
    return TrainConfig(
        lambda1=cfg["lambda1"], lambda2=cfg["lambda2"], learning_rate=cfg["lr"],
        batch_size=cfg["batch"], epochs=cfg["epochs"], dropout_rate=cfg["dropout"],
        seed=cfg["seed"], weight_decay=cfg["weight_decay"], threshold=cfg["threshold"],
        encoding=cfg["encoding"], ita=cfg["ita"], aux=cfg["aux"] not in ("off", False),
        literal_loss=cfg["literal_loss"], share_gate_params=cfg["share_gate_params"],
        detach_side=cfg["detach_side"],
    )


def synth_config_from(cfg: dict) -> SynthConfig:
    return SynthConfig(
        num_docs=cfg["num_docs"],
        clauses_per_doc=parse_range(cfg["clauses"]),
        tokens_per_clause=parse_range(cfg["tokens"]),
        vocab_size=cfg["vocab_size"],
        pair_distance=parse_range(cfg["distance"]),
        pairs_per_doc=parse_range(cfg["pairs"]),
    )


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecpair",
                                     description="Emotion-cause pair extraction engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic JSONL corpus")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--num-docs", dest="num_docs", type=int)
    p.add_argument("--clauses", help="clauses per document, lo:hi")
    p.add_argument("--tokens", help="tokens per clause, lo:hi")
    p.add_argument("--vocab-size", dest="vocab_size", type=int)
    p.add_argument("--distance", help="pair offset |i-j|, lo:hi")
    p.add_argument("--pairs", help="pairs per document, lo:hi")

    p = sub.add_parser("train", help="train on a JSONL corpus")
    _add_common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dev-corpus", dest="dev_corpus")
    p.add_argument("--embeddings", help="precomputed clause embeddings file")
    p.add_argument("--hidden", type=int)
    p.add_argument("--embed-dim", dest="embed_dim", type=int)
    p.add_argument("--dim-pos", dest="dim_pos", type=int)
    p.add_argument("--max-offset", dest="max_offset", type=int)
    p.add_argument("--mask-dim", dest="mask_dim", type=int)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--encoding", choices=["pfn", "shared", "parallel"])
    p.add_argument("--ita", choices=["both", "p2e", "e2p", "off"])
    p.add_argument("--aux", choices=["on", "off"])
    p.add_argument("--literal-loss", dest="literal_loss", action="store_const", const=True)
    p.add_argument("--share-gate-params", dest="share_gate_params",
                   action="store_const", const=True)
    p.add_argument("--detach-side", dest="detach_side", choices=["none", "pseudo", "pair"])

    p = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--threshold", type=float)
    p.add_argument("--macro", action="store_const", const=True)
    p.add_argument("--out", help="also write metrics JSON here")

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    _add_common(p)
    p.add_argument("--dim", type=int, help="embedding width")
    p.add_argument("--hidden", type=int)
    p.add_argument("--n-clauses", dest="n_clauses", type=int)
    p.add_argument("--encoding", choices=["pfn", "shared", "parallel", "all"])
    p.add_argument("--ita", choices=["both", "p2e", "e2p", "off"])
    p.add_argument("--tol", type=float)
    p.add_argument("--eps", type=float)

    p = sub.add_parser("folds", help="emit a k-fold split manifest")
    _add_common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--folds", type=int)
    p.add_argument("--out")
    return parser


def cmd_synth(cfg: dict) -> int:
    corpus = generate_synthetic(synth_config_from(cfg), seed=cfg["seed"])
    write_corpus(corpus, cfg["out"])
    print(f"wrote {len(corpus)} documents to {cfg['out']}")
    return 0


def cmd_train(cfg: dict) -> int:
    corpus = parse_corpus(cfg["corpus"])
    dev_docs = parse_corpus(cfg["dev_corpus"]).documents if cfg.get("dev_corpus") else None
    train_cfg = train_config_from(cfg)
    provider = vocab = None
    if cfg.get("embeddings"):
        provider = PrecomputedProvider.from_file(cfg["embeddings"])
    else:
        vocab = build_vocab(corpus.documents)
    model = build_model(train_cfg, hidden=cfg["hidden"], embed_dim=cfg["embed_dim"],
                        dim_pos=cfg["dim_pos"], max_offset=cfg["max_offset"],
                        mask_dim=cfg["mask_dim"], vocab=vocab, provider=provider)
    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    echo = {k: v for k, v in sorted(cfg.items())}
    (out_dir / "config.json").write_text(json.dumps(echo, indent=2))

    result = fit(model, corpus.documents, train_cfg, dev_docs=dev_docs)
    with open(out_dir / "log.jsonl", "w", encoding="utf-8") as fh:
        for entry in result.log:
            fh.write(json.dumps(entry) + "\n")
    save_checkpoint(out_dir / "checkpoint.npz", model, train_cfg)
    last = result.log[-1]
    print(f"trained {train_cfg.epochs} epochs; final loss {last['loss_total']:.4f}; "
          f"checkpoint at {out_dir / 'checkpoint.npz'}")
    if dev_docs:
        print(f"best dev ECPE F1 {result.best_f1:.4f} at epoch {result.best_epoch}")
    return 0


def cmd_eval(cfg: dict) -> int:
    provider = None
    if cfg.get("embeddings"):
        provider = PrecomputedProvider.from_file(cfg["embeddings"])
    model, _ = load_checkpoint(cfg["checkpoint"], provider=provider)
    corpus = parse_corpus(cfg["corpus"])
    report = evaluate_model(model, corpus.documents, cfg["threshold"], macro=cfg["macro"])
    print(report.to_json())
    print(report.format_table(), file=sys.stderr)
    if cfg.get("out"):
        Path(cfg["out"]).write_text(report.to_json())
    return 0


def gradcheck_model_and_doc(cfg: dict, encoding: str):
    synth = SynthConfig(num_docs=1, clauses_per_doc=(cfg["n_clauses"], cfg["n_clauses"]),
                        tokens_per_clause=(2, 4), vocab_size=16,
                        pair_distance=(1, 2), pairs_per_doc=(1, 1))
    corpus = generate_synthetic(synth, seed=cfg["seed"])
    doc = corpus.documents[0]
    train_cfg = train_config_from(cfg)
    train_cfg.dropout_rate = 0.0
    train_cfg.encoding = encoding
    model = build_model(train_cfg, hidden=cfg["hidden"], embed_dim=cfg["dim"],
                        dim_pos=8, max_offset=4, mask_dim=8,
                        vocab=build_vocab(corpus.documents))
    return model, doc, train_cfg


def run_gradcheck(cfg: dict, encoding: str) -> ad.CheckReport:
    model, doc, train_cfg = gradcheck_model_and_doc(cfg, encoding)

    def loss_fn():
        return total_loss(model.forward(doc, training=False), train_cfg)

    return ad.grad_check(loss_fn, list(model.params), eps=cfg["eps"], tol=cfg["tol"])


def cmd_gradcheck(cfg: dict) -> int:
    encodings = ["pfn", "shared", "parallel"] if cfg["encoding"] == "all" else [cfg["encoding"]]
    ok = True
    for encoding in encodings:
        report = run_gradcheck(cfg, encoding)
        print(f"[{encoding}] {report.summary()}")
        ok = ok and report.passed
    return 0 if ok else 1


def cmd_folds(cfg: dict) -> int:
    corpus = parse_corpus(cfg["corpus"])
    splits = split_folds(corpus, cfg["folds"], cfg["seed"])
    manifest = {
        "k": cfg["folds"],
        "seed": cfg["seed"],
        "folds": [
            {"fold": i, "test_doc_ids": [d.doc_id for d in test]}
            for i, (_, test) in enumerate(splits)
        ],
    }
    text = json.dumps(manifest, indent=2)
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text)
        print(f"wrote fold manifest to {cfg['out']}")
    else:
        print(text)
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "folds": cmd_folds,
}


def run_cli(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = merge_config(args)
        return _COMMANDS[args.command](cfg)
    except (CorpusError, ConfigError, EmbeddingError, TrainingDiverged,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
