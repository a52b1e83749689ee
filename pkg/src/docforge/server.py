"""HTTP service exposing query answering and document context to the chat UI.

All handlers are read-only over an index and corpus loaded at startup; error
bodies are uniform ``{"error": ..., "detail": ...}`` JSON.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, replace

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .chunker import Chunk
from .config import AppConfig, index_base_path, parse_serve_addr
from .corpus import Corpus, document_text, load_corpus
from .engine import PipelineConfig, PromptVariant, answer_query, build_chunk_map
from .errors import DocforgeError
from .gateway import GatewayError
from .vector_index import VectorIndex, index_file_paths

log = logging.getLogger(__name__)


class QueryRequest(BaseModel):
    question: str
    k: int | None = None
    variant: str | None = None


def _error(status: int, error: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": error, "detail": detail})


def create_app(corpus: Corpus, index: VectorIndex, cfg: PipelineConfig) -> FastAPI:
    app = FastAPI(title="docforge", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    chunk_map: dict[str, Chunk] = build_chunk_map(corpus, cfg.strategy)
    documents = {d.doc_id: d for d in corpus.documents}

    @app.middleware("http")
    async def timing(request: Request, call_next):
        start = time.perf_counter()
        response = await call_next(request)
        log.info(
            "%s %s -> %d in %.1f ms",
            request.method,
            request.url.path,
            response.status_code,
            (time.perf_counter() - start) * 1000,
        )
        return response

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return _error(400, "invalid_request", str(exc))

    @app.exception_handler(DocforgeError)
    async def on_docforge_error(request: Request, exc: DocforgeError):
        status = 502 if isinstance(exc, GatewayError) else 500
        return _error(status, type(exc).__name__, str(exc))

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "index": {
                "strategy": index.metadata.strategy,
                "translated": index.metadata.translated,
                "embed_model": index.metadata.embed_model,
                "entries": len(index),
                "dims": index.dims,
            },
        }

    @app.post("/api/query")
    def query(req: QueryRequest):
        if not req.question.strip():
            return _error(400, "invalid_request", "question must be non-empty")
        request_cfg = cfg
        if req.k is not None:
            if req.k < 1:
                return _error(400, "invalid_request", "k must be >= 1")
            request_cfg = replace(request_cfg, k=req.k)
        if req.variant is not None:
            try:
                variant = PromptVariant.parse(req.variant)
            except ValueError as exc:
                return _error(400, "invalid_request", str(exc))
            if variant is not PromptVariant.NO_TRANSLATION and not index.metadata.translated:
                return _error(
                    400,
                    "invalid_request",
                    f"variant {variant.value} requires an index built with translation",
                )
            request_cfg = replace(request_cfg, prompt_variant=variant)
        bundle = answer_query(req.question, index, corpus, request_cfg, chunk_map=chunk_map)
        return asdict(bundle)

    @app.get("/api/documents/{doc_id}/context")
    def document_context(doc_id: str, chunk_id: str | None = None):
        doc = documents.get(doc_id)
        if doc is None:
            return _error(404, "not_found", f"unknown document: {doc_id}")
        highlight = None
        if chunk_id is not None:
            chunk = chunk_map.get(chunk_id)
            if chunk is None or chunk.doc_id != doc_id:
                return _error(404, "not_found", f"unknown chunk for {doc_id}: {chunk_id}")
            highlight = {"char_start": chunk.char_start, "char_end": chunk.char_end}
        return {
            "doc_id": doc_id,
            "title": doc.title,
            "text": document_text(doc),
            "highlight": highlight,
        }

    return app


def load_service_state(cfg: AppConfig) -> tuple[Corpus, VectorIndex, PipelineConfig]:
    """Load the corpus and the configured index; align pipeline with the index."""
    corpus = load_corpus(cfg.corpus_dir)
    manifest, _ = index_file_paths(index_base_path(cfg))
    if not manifest.exists():
        raise DocforgeError(f"index not found: {manifest} (run `docforge index` first)")
    index = VectorIndex.load(manifest)
    pipeline = cfg.pipeline
    if index.metadata.translated != pipeline.translate_german:
        log.warning("aligning translate_german with loaded index (%s)", index.metadata.translated)
        pipeline = replace(pipeline, translate_german=index.metadata.translated)
    if (
        pipeline.prompt_variant is not PromptVariant.NO_TRANSLATION
        and not index.metadata.translated
    ):
        raise DocforgeError(
            f"prompt variant {pipeline.prompt_variant.value} requires a translated index"
        )
    return corpus, index, pipeline


def serve(cfg: AppConfig) -> None:
    """Run the HTTP service until terminated."""
    import uvicorn

    corpus, index, pipeline = load_service_state(cfg)
    app = create_app(corpus, index, pipeline)
    host, port = parse_serve_addr(cfg.serve_addr)
    log.info("serving on %s:%d (index: %s, %d entries)", host, port,
             index.metadata.strategy, len(index))
    uvicorn.run(app, host=host, port=port, log_level="info")
