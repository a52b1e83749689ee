"""Splitting document text into retrieval chunks.

Three strategies: fixed character windows, paragraph merging up to a minimum
token count, and paragraph-with-context (each paragraph concatenated with its
neighbours while keeping the core paragraph's offsets). All offsets are in
Unicode scalar values so multi-byte characters are never split. Every
operation here is a pure function.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass, replace

from .corpus import DocumentRecord, block_spans, document_text

PARAGRAPH_BREAK = re.compile(r"\n{2,}")
DEFAULT_MIN_TOKENS = 120

# Window sizes exercised by the standard benchmark grid; the library accepts
# any positive size.
FIXED_GRID_SIZES = (800, 1600, 2000)

FIXED = "fixed"
PARAGRAPH = "paragraph"
PARAGRAPH_CONTEXT = "paragraph-context"

_FIXED_NAME_RE = re.compile(r"^fixed-(\d+)$")


@dataclass(frozen=True)
class ChunkingStrategy:
    kind: str
    size_chars: int = 0
    min_tokens: int = DEFAULT_MIN_TOKENS

    @classmethod
    def fixed(cls, size_chars: int) -> "ChunkingStrategy":
        if size_chars <= 0:
            raise ValueError("size_chars must be positive")
        return cls(kind=FIXED, size_chars=size_chars)

    @classmethod
    def paragraph(cls, min_tokens: int = DEFAULT_MIN_TOKENS) -> "ChunkingStrategy":
        if min_tokens <= 0:
            raise ValueError("min_tokens must be positive")
        return cls(kind=PARAGRAPH, min_tokens=min_tokens)

    @classmethod
    def paragraph_context(cls, min_tokens: int = DEFAULT_MIN_TOKENS) -> "ChunkingStrategy":
        if min_tokens <= 0:
            raise ValueError("min_tokens must be positive")
        return cls(kind=PARAGRAPH_CONTEXT, min_tokens=min_tokens)

    @classmethod
    def parse(cls, name: str) -> "ChunkingStrategy":
        """Parse a strategy name: ``fixed-<N>``, ``paragraph``, ``paragraph-context``."""
        m = _FIXED_NAME_RE.match(name)
        if m:
            return cls.fixed(int(m.group(1)))
        if name == PARAGRAPH:
            return cls.paragraph()
        if name == PARAGRAPH_CONTEXT:
            return cls.paragraph_context()
        raise ValueError(f"unknown chunking strategy: {name!r}")

    @property
    def label(self) -> str:
        if self.kind == FIXED:
            return f"fixed-{self.size_chars}"
        return self.kind


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    text: str


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    ordinal: int
    text: str
    char_start: int
    char_end: int
    page_hint: int
    language: str
    translated_text: str | None = None


def split_fixed(text: str, size_chars: int) -> list[Span]:
    """Cover the text with consecutive windows of size_chars scalar values.

    The final window may be shorter; windows that are only whitespace are
    dropped.
    """
    if size_chars <= 0:
        raise ValueError("size_chars must be positive")
    spans = []
    for start in range(0, len(text), size_chars):
        piece = text[start : start + size_chars]
        if piece.strip():
            spans.append(Span(start, start + len(piece), piece))
    return spans


def split_paragraphs(text: str, min_tokens: int) -> list[Span]:
    """Split on blank lines, merging short paragraphs forward.

    Paragraphs accumulate until the whitespace-token count reaches min_tokens,
    then the merged unit closes. A trailing unit below the minimum is kept.
    Merged spans are contiguous substrings of the input, so offsets stay exact.
    """
    if min_tokens <= 0:
        raise ValueError("min_tokens must be positive")
    paragraphs: list[tuple[int, int]] = []
    pos = 0
    for m in PARAGRAPH_BREAK.finditer(text):
        if text[pos : m.start()].strip():
            paragraphs.append((pos, m.start()))
        pos = m.end()
    if text[pos:].strip():
        paragraphs.append((pos, len(text)))

    spans: list[Span] = []
    acc_start: int | None = None
    acc_end = 0
    acc_tokens = 0
    for start, end in paragraphs:
        if acc_start is None:
            acc_start = start
        acc_end = end
        acc_tokens += len(text[start:end].split())
        if acc_tokens >= min_tokens:
            spans.append(Span(acc_start, acc_end, text[acc_start:acc_end]))
            acc_start = None
            acc_tokens = 0
    if acc_start is not None:
        spans.append(Span(acc_start, acc_end, text[acc_start:acc_end]))
    return spans


def attach_context(chunks: list[Chunk]) -> list[Chunk]:
    """Concatenate each chunk with its neighbours' original texts.

    Offsets keep referencing the core paragraph, so stripping the attached
    neighbours recovers the paragraph chunks exactly. Count is unchanged.
    """
    out = []
    for i, chunk in enumerate(chunks):
        parts = []
        if i > 0:
            parts.append(chunks[i - 1].text)
        parts.append(chunk.text)
        if i + 1 < len(chunks):
            parts.append(chunks[i + 1].text)
        out.append(replace(chunk, text="\n\n".join(parts)))
    return out


def _page_at(spans: list[tuple[int, int, int]], pos: int) -> int:
    # Rightmost block starting at or before pos; if pos falls into the
    # separator after that block, the next block owns the chunk's content.
    starts = [s for s, _, _ in spans]
    idx = max(bisect_right(starts, pos) - 1, 0)
    _, end, page = spans[idx]
    if pos >= end and idx + 1 < len(spans):
        return spans[idx + 1][2]
    return page


def chunk_document(doc: DocumentRecord, strategy: ChunkingStrategy) -> list[Chunk]:
    """Apply a chunking strategy to one document.

    Chunk ids are deterministic (doc id, strategy label, zero-padded ordinal),
    so identical inputs always produce identical chunks.
    """
    text = document_text(doc)
    if not text.strip():
        return []
    if strategy.kind == FIXED:
        spans = split_fixed(text, strategy.size_chars)
    else:
        spans = split_paragraphs(text, strategy.min_tokens)

    pages = block_spans(doc)
    chunks = [
        Chunk(
            chunk_id=f"{doc.doc_id}:{strategy.label}:{i:04d}",
            doc_id=doc.doc_id,
            ordinal=i,
            text=span.text,
            char_start=span.start,
            char_end=span.end,
            page_hint=_page_at(pages, span.start),
            language=doc.language,
        )
        for i, span in enumerate(spans)
    ]
    if strategy.kind == PARAGRAPH_CONTEXT:
        chunks = attach_context(chunks)
    return chunks
