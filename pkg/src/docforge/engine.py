"""Pipeline orchestration: index building and retrieval-grounded answering.

Index building chunks every document, optionally translates German chunks to
English before embedding, and stores (chunk id, doc id, vector) entries.
Query answering embeds the question as typed (questions are never translated),
retrieves the top-k chunks, fills one of the prompt templates, enforces the
context-token budget, and collects the five most relevant source files from a
wider retrieval pool.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Sequence

from . import gateway
from .chunker import Chunk, ChunkingStrategy, chunk_document
from .corpus import Corpus
from .errors import DocforgeError
from .gateway import ModelEndpointConfig, estimate_tokens
from .prompts import ANSWER_PLAIN, ANSWER_SCORED, load_template
from .vector_index import IndexEntry, IndexMetadata, ScoredChunk, VectorIndex

log = logging.getLogger(__name__)

CONTEXT_DELIMITER = "\n---\n"
SCORE_DECIMALS = 3
SNIPPET_CHARS = 280
SOURCE_LIMIT = 5
SOURCE_POOL = 20
BUDGET_FRACTION = 0.9
DEFAULT_SAFE_NUM_CTX = 6000
EMBED_BATCH = 32


class PromptVariant(Enum):
    NO_TRANSLATION = "k-N"
    TRANSLATION = "k-T"
    TRANSLATION_WITH_SCORES = "k-S"

    @classmethod
    def parse(cls, name: str) -> "PromptVariant":
        for variant in cls:
            if variant.value == name:
                return variant
        raise ValueError(f"unknown prompt variant: {name!r}")


class EmptyContext(DocforgeError):
    pass


class EmptyIndex(DocforgeError):
    pass


class StaleIndex(DocforgeError):
    """The index references chunks the current corpus/strategy does not produce."""


class IndexBuildError(DocforgeError):
    def __init__(self, chunk_id: str, message: str):
        super().__init__(f"chunk {chunk_id!r}: {message}")
        self.chunk_id = chunk_id


@dataclass(frozen=True)
class PipelineConfig:
    strategy: ChunkingStrategy
    translate_german: bool = False
    k: int = 5
    prompt_variant: PromptVariant = PromptVariant.NO_TRANSLATION
    endpoints: ModelEndpointConfig = field(default_factory=ModelEndpointConfig)
    safe_num_ctx: int = DEFAULT_SAFE_NUM_CTX

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.prompt_variant is PromptVariant.TRANSLATION_WITH_SCORES and not self.translate_german:
            raise ValueError("the scored prompt variant requires translate_german=True")


@dataclass(frozen=True)
class ContextChunk:
    """One retrieved chunk as fed to the prompt assembler."""

    text: str
    translated_text: str | None = None
    score: float = 0.0


@dataclass(frozen=True)
class SourceRef:
    doc_id: str
    title: str
    best_score: float
    snippet: str
    chunk_id: str
    char_start: int
    char_end: int
    page_hint: int


@dataclass(frozen=True)
class AnswerBundle:
    question: str
    answer: str
    sources: tuple[SourceRef, ...]
    retrieved: tuple[ScoredChunk, ...]
    prompt_tokens_estimate: int
    truncation_flag: bool


def corpus_hash(corpus: Corpus) -> str:
    """Stable content digest over the corpus, for index provenance."""
    h = hashlib.sha256()
    for doc in sorted(corpus.documents, key=lambda d: d.doc_id):
        record = [
            doc.doc_id,
            doc.title,
            doc.language,
            doc.page_count,
            [[b.kind, b.content, b.page] for b in doc.blocks],
        ]
        h.update(json.dumps(record, ensure_ascii=False).encode("utf-8"))
    return h.hexdigest()


def _default_created_at() -> str:
    # An index must be bit-reproducible from identical inputs, so wall-clock
    # time never enters. SOURCE_DATE_EPOCH (reproducible-builds convention)
    # provides a meaningful timestamp when the caller wants one.
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return datetime.fromtimestamp(epoch, tz=timezone.utc).isoformat()


def corpus_chunks(corpus: Corpus, strategy: ChunkingStrategy) -> list[Chunk]:
    chunks: list[Chunk] = []
    for doc in corpus.documents:
        chunks.extend(chunk_document(doc, strategy))
    return chunks


def build_chunk_map(corpus: Corpus, strategy: ChunkingStrategy) -> dict[str, Chunk]:
    return {c.chunk_id: c for c in corpus_chunks(corpus, strategy)}


def build_index(
    corpus: Corpus, cfg: PipelineConfig, created_at: str | None = None
) -> VectorIndex:
    """Chunk, optionally translate, embed, and store the whole corpus."""
    if not corpus.documents:
        raise ValueError("corpus is empty")
    chunks = corpus_chunks(corpus, cfg.strategy)
    if cfg.translate_german:
        for i, chunk in enumerate(chunks):
            if chunk.language == "de":
                try:
                    translated = gateway.translate_to_english(chunk.text, cfg.endpoints)
                except gateway.GatewayError as exc:
                    raise IndexBuildError(chunk.chunk_id, str(exc)) from exc
                chunks[i] = replace(chunk, translated_text=translated)

    texts = [c.translated_text if c.translated_text is not None else c.text for c in chunks]
    vectors = []
    for start in range(0, len(texts), EMBED_BATCH):
        batch = texts[start : start + EMBED_BATCH]
        try:
            vectors.extend(gateway.embed_texts(batch, cfg.endpoints))
        except gateway.GatewayError as exc:
            raise IndexBuildError(chunks[start].chunk_id, str(exc)) from exc

    index = VectorIndex(
        metadata=IndexMetadata(
            strategy=cfg.strategy.label,
            embed_model=cfg.endpoints.embed_model,
            translated=cfg.translate_german,
            created_at=created_at if created_at is not None else _default_created_at(),
            corpus_hash=corpus_hash(corpus),
        )
    )
    index.add_entries(
        [IndexEntry(c.chunk_id, c.doc_id, v) for c, v in zip(chunks, vectors)]
    )
    log.info("built index: %d entries, strategy=%s, translated=%s",
             len(index), cfg.strategy.label, cfg.translate_german)
    return index


def assemble_prompt(
    question: str, chunks: Sequence[ContextChunk], variant: PromptVariant
) -> str:
    """Fill the shipped template for the given variant.

    The plain template is used for both untranslated and translated context;
    the scored template prefixes each chunk with its similarity at three
    decimals. Chunks must already be in score-descending order.
    """
    if not chunks:
        raise EmptyContext("cannot assemble a prompt from zero chunks")

    def chunk_text(c: ContextChunk) -> str:
        if variant is PromptVariant.NO_TRANSLATION:
            return c.text
        return c.translated_text if c.translated_text is not None else c.text

    if variant is PromptVariant.TRANSLATION_WITH_SCORES:
        template = load_template(ANSWER_SCORED)
        context = CONTEXT_DELIMITER.join(
            f"[score={c.score:.{SCORE_DECIMALS}f}] {chunk_text(c)}" for c in chunks
        )
        return template.replace("<QUESTION>", question).replace("<CONTEXT WITH SCORE>", context)

    template = load_template(ANSWER_PLAIN)
    context = CONTEXT_DELIMITER.join(chunk_text(c) for c in chunks)
    return template.replace("<QUESTION>", question).replace("<CONTEXT>", context)


def answer_query(
    question: str,
    index: VectorIndex,
    corpus: Corpus,
    cfg: PipelineConfig,
    chunk_map: dict[str, Chunk] | None = None,
) -> AnswerBundle:
    """Retrieve, prompt, and generate one answer with cited sources.

    The question is embedded exactly as typed. If the estimated prompt tokens
    exceed 90% of the configured context window, the call escalates to the
    safe window and flags the bundle instead of risking silent truncation.
    """
    if not question:
        raise ValueError("question must be non-empty")
    if len(index) == 0:
        raise EmptyIndex("the index has no entries")
    if chunk_map is None:
        chunk_map = build_chunk_map(corpus, cfg.strategy)

    query_vec = gateway.embed_texts([question], cfg.endpoints)[0]
    pool = index.search(query_vec, max(SOURCE_POOL, cfg.k))
    top = pool[: cfg.k]

    context_chunks = []
    for scored in top:
        chunk = _lookup(chunk_map, scored.chunk_id, cfg)
        translated = chunk.translated_text
        if (
            cfg.prompt_variant is not PromptVariant.NO_TRANSLATION
            and chunk.language == "de"
            and translated is None
        ):
            translated = gateway.translate_to_english(chunk.text, cfg.endpoints)
        context_chunks.append(
            ContextChunk(text=chunk.text, translated_text=translated, score=scored.score)
        )

    prompt = assemble_prompt(question, context_chunks, cfg.prompt_variant)
    estimate = estimate_tokens(prompt)
    truncation_flag = estimate > BUDGET_FRACTION * cfg.endpoints.num_ctx
    if truncation_flag:
        log.warning(
            "prompt estimate %d tokens exceeds %.0f%% of num_ctx=%d; raising window to %d",
            estimate, BUDGET_FRACTION * 100, cfg.endpoints.num_ctx, cfg.safe_num_ctx,
        )
    answer = gateway.generate(
        prompt,
        cfg.endpoints,
        model=cfg.endpoints.generate_model,
        num_ctx_override=cfg.safe_num_ctx if truncation_flag else None,
    )

    return AnswerBundle(
        question=question,
        answer=answer,
        sources=_collect_sources(pool, chunk_map, corpus, cfg),
        retrieved=tuple(top),
        prompt_tokens_estimate=estimate,
        truncation_flag=truncation_flag,
    )


def _lookup(chunk_map: dict[str, Chunk], chunk_id: str, cfg: PipelineConfig) -> Chunk:
    chunk = chunk_map.get(chunk_id)
    if chunk is None:
        raise StaleIndex(
            f"chunk {chunk_id!r} not produced by strategy {cfg.strategy.label!r}; "
            "the index was built from a different corpus or strategy"
        )
    return chunk


def _collect_sources(
    pool: Sequence[ScoredChunk],
    chunk_map: dict[str, Chunk],
    corpus: Corpus,
    cfg: PipelineConfig,
) -> tuple[SourceRef, ...]:
    titles = {d.doc_id: d.title for d in corpus.documents}
    refs = []
    seen: set[str] = set()
    for scored in pool:
        if scored.doc_id in seen:
            continue
        seen.add(scored.doc_id)
        chunk = _lookup(chunk_map, scored.chunk_id, cfg)
        refs.append(
            SourceRef(
                doc_id=scored.doc_id,
                title=titles.get(scored.doc_id, scored.doc_id),
                best_score=scored.score,
                snippet=chunk.text[:SNIPPET_CHARS],
                chunk_id=scored.chunk_id,
                char_start=chunk.char_start,
                char_end=chunk.char_end,
                page_hint=chunk.page_hint,
            )
        )
        if len(refs) == SOURCE_LIMIT:
            break
    return tuple(refs)
