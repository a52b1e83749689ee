"""Deterministic in-process stand-in for the model server.

Implements the same two endpoints the gateway speaks (POST /api/embed,
POST /api/generate) with fully reproducible behaviour:

- embeddings are a seeded random projection of the token multiset (bag of
  words, 64 dims by default), so texts sharing tokens score high under cosine;
- completions are table-driven: translation prompts apply a word map, judge
  prompts consume a scripted response queue or a callback, everything else is
  matched against substring rules with a default fallback.

Fault injection (500 responses, dropped connections) and a full call log make
retry and isolation behaviour testable. Also usable as a live demo backend
via ``docforge mock-serve``.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

import numpy as np

EMBED_DIMS = 64

_WORD_RE = re.compile(r"\w+", re.UNICODE)

# Prompt heads used to route completions; they mirror the shipped templates.
TRANSLATION_SENTINEL = "Translate the following text to English."
JUDGE_SENTINEL = "You are a strict evaluator."
_TRANSLATION_PAYLOAD = re.compile(r"\n\nTEXT: (.*)\Z", re.DOTALL)


class MockModelServer:
    """Threaded HTTP server with deterministic embeddings and canned completions."""

    def __init__(self, seed: int = 0, dims: int = EMBED_DIMS, default_response: str = "I don't know."):
        self.seed = seed
        self.dims = dims
        self.default_response = default_response
        self.rules: list[tuple[str, str]] = []
        self.translation_map: dict[str, str] = {}
        self.judge_script: list[str] = []
        self.judge_fn: Callable[[str], str] | None = None
        self.fail_next = 0  # respond 500 to that many requests
        self.drop_next = 0  # abort that many connections without a response
        self.calls: list[dict] = []
        self._lock = threading.RLock()
        self._token_vectors: dict[str, np.ndarray] = {}
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> str:
        server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
        server.daemon_threads = True
        server.mock = self  # type: ignore[attr-defined]
        self._server = server
        self._thread = threading.Thread(target=server.serve_forever, daemon=True)
        self._thread.start()
        return self.base_url

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def __enter__(self) -> "MockModelServer":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    @property
    def base_url(self) -> str:
        assert self._server is not None, "server not started"
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def reset(self) -> None:
        """Restore default behaviour and clear the call log."""
        with self._lock:
            self.rules = []
            self.translation_map = {}
            self.judge_script = []
            self.judge_fn = None
            self.fail_next = 0
            self.drop_next = 0
            self.calls = []

    # -- test introspection --------------------------------------------------

    def calls_to(self, endpoint: str) -> list[dict]:
        with self._lock:
            return [c for c in self.calls if c["endpoint"] == endpoint]

    def _record(self, endpoint: str, payload: dict, fault: str | None = None) -> None:
        with self._lock:
            self.calls.append({"endpoint": endpoint, "payload": payload, "fault": fault})

    # -- deterministic embedding math (reusable as a test oracle) ------------

    def token_vector(self, token: str) -> np.ndarray:
        vec = self._token_vectors.get(token)
        if vec is None:
            digest = hashlib.blake2b(
                f"{self.seed}:{token}".encode("utf-8"), digest_size=8
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            vec = rng.standard_normal(self.dims)
            self._token_vectors[token] = vec
        return vec

    def embed(self, text: str) -> list[float]:
        tokens = _WORD_RE.findall(text.lower()) or [text]
        total = np.zeros(self.dims)
        for token in tokens:
            total += self.token_vector(token)
        return total.tolist()

    # -- completion table -----------------------------------------------------

    def translate(self, text: str) -> str:
        return _WORD_RE.sub(lambda m: self._map_word(m.group(0)), text)

    def _map_word(self, word: str) -> str:
        if word in self.translation_map:
            return self.translation_map[word]
        return self.translation_map.get(word.lower(), word)

    def complete(self, prompt: str) -> str:
        if prompt.startswith(TRANSLATION_SENTINEL):
            m = _TRANSLATION_PAYLOAD.search(prompt)
            return self.translate(m.group(1)) if m else self.default_response
        if prompt.startswith(JUDGE_SENTINEL):
            with self._lock:
                if self.judge_script:
                    return self.judge_script.pop(0)
            if self.judge_fn is not None:
                return self.judge_fn(prompt)
        for needle, response in self.rules:
            if needle in prompt:
                return response
        return self.default_response


class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):  # noqa: N802 (http.server API)
        mock: MockModelServer = self.server.mock  # type: ignore[attr-defined]
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length)
        try:
            payload = json.loads(body)
        except ValueError:
            self._send(400, {"error": "invalid JSON"})
            return

        with mock._lock:
            if mock.drop_next > 0:
                mock.drop_next -= 1
                mock._record(self.path, payload, fault="drop")
                # No HTTP response at all: the client sees a transport error.
                self.close_connection = True
                self.connection.close()
                return
            if mock.fail_next > 0:
                mock.fail_next -= 1
                mock._record(self.path, payload, fault="500")
                self._send(500, {"error": "injected failure"})
                return

        if self.path == "/api/embed":
            mock._record(self.path, payload)
            texts = payload.get("input", [])
            self._send(200, {"embeddings": [mock.embed(t) for t in texts]})
        elif self.path == "/api/generate":
            mock._record(self.path, payload)
            self._send(200, {"response": mock.complete(payload.get("prompt", ""))})
        else:
            self._send(404, {"error": f"unknown endpoint {self.path}"})

    def _send(self, status: int, obj: dict) -> None:
        data = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args) -> None:  # keep test output clean
        pass
