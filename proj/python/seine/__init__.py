"""Segment-level inverted index with precomputed query-document interactions.

The heavy lifting lives in the compiled extension module; this package
re-exports its public surface.
"""

from seine._seine import (
    Document,
    EmbeddingProvider,
    FunctionParams,
    SegmentIndex,
    SegmentedDocument,
    SeineConfigError,
    SeineIoError,
    Vocabulary,
    build_index,
    build_vocabulary,
    evaluate_run,
    load_contextual,
    load_corpus,
    load_embeddings,
    pseudo_embeddings,
    segment_document,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "Document",
    "EmbeddingProvider",
    "FunctionParams",
    "SegmentIndex",
    "SegmentedDocument",
    "SeineConfigError",
    "SeineIoError",
    "Vocabulary",
    "build_index",
    "build_vocabulary",
    "evaluate_run",
    "load_contextual",
    "load_corpus",
    "load_embeddings",
    "pseudo_embeddings",
    "segment_document",
    "tokenize",
]
