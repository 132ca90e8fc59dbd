"""Offline clause-embedding exporter for the pair extraction engine."""

from .binfmt import read_embeddings, write_embeddings
from .corpus import Document, read_corpus
from .export import ExportManifest, encode_document, export_embeddings, load_encoder

__version__ = "0.1.0"

__all__ = [
    "Document",
    "ExportManifest",
    "encode_document",
    "export_embeddings",
    "load_encoder",
    "read_corpus",
    "read_embeddings",
    "write_embeddings",
]
