"""Mixed text/table retrieval: BM25 and dense search, dataset building and evaluation."""

from ._core import (
    Bm25Index,
    DataError,
    EmbeddingMatrix,
    FormatError,
    RetrievalHit,
    gestalt_ratio,
    hash_embed,
    jaccard,
    linearize_passage,
    linearize_table,
    read_embeddings,
    recall_at_k,
    run_cli,
    token_set_overlap,
    tokenize,
    write_embeddings,
)

__all__ = [
    "Bm25Index",
    "DataError",
    "EmbeddingMatrix",
    "FormatError",
    "RetrievalHit",
    "gestalt_ratio",
    "hash_embed",
    "jaccard",
    "linearize_passage",
    "linearize_table",
    "read_embeddings",
    "recall_at_k",
    "run_cli",
    "token_set_overlap",
    "tokenize",
    "write_embeddings",
]
