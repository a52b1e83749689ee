"""HTTP client for the local model server: embeddings, completions, translation.

Speaks a small JSON protocol (POST /api/embed, POST /api/generate) compatible
with common local model-serving tools. Embedding vectors are unit-normalized
here, in one place, so the index can use a plain dot product as cosine
similarity. Calls are stateless; per-call metadata (retry count) is kept in
thread-local storage and readable via :func:`last_call`.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from urllib.parse import urlparse

import numpy as np
import requests

from .errors import DimensionMismatch, DocforgeError

DEFAULT_NUM_CTX = 2048
MIN_NUM_CTX = 512

# chars-per-token heuristic used by the context-budget check
TOKEN_CHARS = 4

TRANSLATION_PROMPT = (
    "Translate the following text to English. "
    "Output only the translation, nothing else.\n\nTEXT: "
)


class GatewayError(DocforgeError):
    pass


class ServerUnreachable(GatewayError):
    pass


class ServerError(GatewayError):
    def __init__(self, status: int, body: str):
        super().__init__(f"model server returned {status}: {body[:200]}")
        self.status = status
        self.body = body


class ProtocolError(GatewayError):
    """The server answered 200 but the body violates the protocol."""


class EmptyCompletion(GatewayError):
    pass


@dataclass(frozen=True)
class ModelEndpointConfig:
    base_url: str = "http://127.0.0.1:11434"
    embed_model: str = "bge-m3"
    generate_model: str = "gemma3:27b-it-fp16"
    translate_model: str = "gemma2:27b-instruct-q4_K_M"
    judge_model: str = "gemma3:27b-it-fp16"
    num_ctx: int = DEFAULT_NUM_CTX
    request_timeout: float = 120.0
    max_retries: int = 2
    max_inflight: int = 4

    def __post_init__(self):
        parsed = urlparse(self.base_url)
        if not parsed.scheme or not parsed.netloc:
            raise ValueError(f"base_url must be an absolute URL: {self.base_url!r}")
        if self.num_ctx < MIN_NUM_CTX:
            raise ValueError(f"num_ctx must be >= {MIN_NUM_CTX}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class CallMeta:
    endpoint: str
    model: str
    retries: int


_local = threading.local()

_inflight: dict[str, threading.BoundedSemaphore] = {}
_inflight_guard = threading.Lock()


def last_call() -> CallMeta | None:
    """Metadata of the most recent gateway call made by this thread."""
    return getattr(_local, "meta", None)


def _limiter(cfg: ModelEndpointConfig) -> threading.BoundedSemaphore:
    with _inflight_guard:
        sem = _inflight.get(cfg.base_url)
        if sem is None:
            sem = threading.BoundedSemaphore(cfg.max_inflight)
            _inflight[cfg.base_url] = sem
        return sem


def _post(cfg: ModelEndpointConfig, path: str, payload: dict) -> dict:
    sem = _limiter(cfg)
    url = cfg.base_url.rstrip("/") + path
    last_exc: Exception | None = None
    for attempt in range(cfg.max_retries + 1):
        with sem:
            try:
                resp = requests.post(url, json=payload, timeout=cfg.request_timeout)
            except requests.RequestException as exc:
                last_exc = exc
                continue
        if resp.status_code != 200:
            raise ServerError(resp.status_code, resp.text)
        _local.meta = CallMeta(endpoint=path, model=str(payload.get("model", "")), retries=attempt)
        try:
            return resp.json()
        except ValueError as exc:
            raise ProtocolError(f"{url}: response is not JSON") from exc
    raise ServerUnreachable(f"{url}: {last_exc}")


def normalize(values) -> np.ndarray:
    """Project raw embedding values onto the unit sphere as float32."""
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1 or vec.size == 0:
        raise ProtocolError("embedding must be a non-empty flat vector")
    if not np.all(np.isfinite(vec)):
        raise ProtocolError("embedding contains non-finite values")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ProtocolError("embedding has zero norm")
    return (vec / norm).astype(np.float32)


def embed_texts(texts: list[str], cfg: ModelEndpointConfig) -> list[np.ndarray]:
    """Embed a batch of texts; one unit-norm float32 vector per input, in order."""
    if not texts:
        raise ValueError("texts must be non-empty")
    if any(not t for t in texts):
        raise ValueError("every text must be non-empty")
    data = _post(cfg, "/api/embed", {"model": cfg.embed_model, "input": list(texts)})
    raw = data.get("embeddings")
    if not isinstance(raw, list) or len(raw) != len(texts):
        raise ProtocolError("embeddings missing or count does not match inputs")
    vectors = [normalize(v) for v in raw]
    dims = vectors[0].shape[0]
    if any(v.shape[0] != dims for v in vectors):
        raise DimensionMismatch("embedding vectors in one batch differ in length")
    return vectors


def generate(
    prompt: str,
    cfg: ModelEndpointConfig,
    model: str | None = None,
    num_ctx_override: int | None = None,
) -> str:
    """Request a completion; returns the server's text with trailing whitespace trimmed."""
    if not prompt:
        raise ValueError("prompt must be non-empty")
    payload = {
        "model": model or cfg.generate_model,
        "prompt": prompt,
        "stream": False,
        "options": {"num_ctx": num_ctx_override or cfg.num_ctx},
    }
    data = _post(cfg, "/api/generate", payload)
    response = data.get("response")
    if not isinstance(response, str):
        raise ProtocolError("completion response missing")
    text = response.rstrip()
    if not text:
        raise EmptyCompletion("model returned an empty completion")
    return text


def translate_to_english(text: str, cfg: ModelEndpointConfig) -> str:
    """Translate a chunk to English via the translation model.

    Callers keep the original text; the translation is stored alongside it.
    """
    if not text:
        raise ValueError("text must be non-empty")
    return generate(TRANSLATION_PROMPT + text, cfg, model=cfg.translate_model)


def estimate_tokens(text: str) -> int:
    """Deterministic token estimate: ceil(scalar values / 4)."""
    return math.ceil(len(text) / TOKEN_CHARS)
