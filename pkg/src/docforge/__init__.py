"""docforge: local retrieval-augmented QA over multilingual technical documentation.

The pipeline has two stages. Pre-processing chunks each document, optionally
translates German chunks to English, embeds every chunk through a local model
server, and persists an exact-search vector index. At runtime a question is
embedded as typed, the top-k chunks are retrieved by cosine similarity, and a
prompt built from one of the shipped templates is sent to the generation
model; answers carry the five most relevant source files with scores and
snippets. An evaluation kit scores retrieval (recall@k, MRR@k) and judged
generation quality over QA sets, and a benchmark runner sweeps configuration
grids into CSV/text/figure reports.
"""

from .chunker import Chunk, ChunkingStrategy, chunk_document
from .corpus import Corpus, DocumentRecord, document_text, load_corpus, write_corpus
from .engine import (
    AnswerBundle,
    PipelineConfig,
    PromptVariant,
    SourceRef,
    answer_query,
    assemble_prompt,
    build_index,
)
from .errors import DocforgeError
from .gateway import ModelEndpointConfig, embed_texts, estimate_tokens, generate
from .vector_index import IndexEntry, ScoredChunk, VectorIndex

__version__ = "0.1.0"

__all__ = [
    "AnswerBundle",
    "Chunk",
    "ChunkingStrategy",
    "Corpus",
    "DocforgeError",
    "DocumentRecord",
    "IndexEntry",
    "ModelEndpointConfig",
    "PipelineConfig",
    "PromptVariant",
    "ScoredChunk",
    "SourceRef",
    "VectorIndex",
    "answer_query",
    "assemble_prompt",
    "build_index",
    "chunk_document",
    "document_text",
    "embed_texts",
    "estimate_tokens",
    "generate",
    "load_corpus",
    "write_corpus",
    "__version__",
]
