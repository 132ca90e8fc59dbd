"""Command-line entry: ``ecpair-export export --corpus --encoder --out [--max-len]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .corpus import CorpusError
from .export import ExportError, export_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecpair-export",
                                     description="Clause embedding exporter")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="encode a corpus and write binary embeddings")
    p.add_argument("--corpus", required=True, help="JSONL corpus path")
    p.add_argument("--encoder", required=True, help="hub id or local model directory")
    p.add_argument("--out", required=True, help="binary embeddings output path")
    p.add_argument("--max-len", dest="max_len", type=int, default=512,
                   help="encoder window limit in subtokens")
    return parser


def run_cli(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        manifest = export_embeddings(args.corpus, args.encoder, args.out, args.max_len)
    except (CorpusError, ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(manifest.clause_counts)} documents (dim {manifest.dim}) "
          f"to {args.out}; sha256 {manifest.sha256[:16]}...")
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
