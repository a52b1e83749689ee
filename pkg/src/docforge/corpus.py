"""Corpus ingestion: language-tagged documents built from pre-extracted text blocks.

A corpus is a directory of ``*.doc.json`` files, one per document. Each file
holds a header (doc_id, title, language, page_count) and an ordered array of
blocks; a block is a text, equation, or table span tied to a page number.
Corpus objects are immutable after loading and safe to share across threads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DocforgeError

DOC_SUFFIX = ".doc.json"
BLOCK_KINDS = ("text", "equation", "table")
LANGUAGES = ("en", "de")

# Separator between blocks when a document is flattened to one string.
BLOCK_SEPARATOR = "\n\n"

_WORD_RE = re.compile(r"\w+", re.UNICODE)

# Fixed stopword lists (50 words each) backing the language fallback that is
# used only when a document file carries no "language" field.
_EN_STOPWORDS = frozenset(
    """the be to of and a in that have it for not on with he as you do at this
    but his by from they we say her she or an will my one all would there their
    what so up out if about who get which go me when""".split()
)
_DE_STOPWORDS = frozenset(
    """der die das und ist in ein eine zu haben ich werden sie von nicht mit es
    sich auch auf für an er so dem dass kann dieser als ihr wie bei oder wir
    aber dann man da des den im wird sind nach durch um am über aus wenn""".split()
)


class MissingDirectory(DocforgeError):
    pass


class MalformedDocument(DocforgeError):
    def __init__(self, file: str, reason: str):
        super().__init__(f"{file}: {reason}")
        self.file = file
        self.reason = reason


class DuplicateDocId(DocforgeError):
    def __init__(self, doc_id: str):
        super().__init__(f"duplicate doc_id: {doc_id!r}")
        self.doc_id = doc_id


@dataclass(frozen=True)
class Block:
    kind: str
    content: str
    page: int
    order: int


@dataclass(frozen=True)
class DocumentRecord:
    doc_id: str
    title: str
    language: str
    page_count: int
    blocks: tuple[Block, ...]
    source_path: str = field(default="", compare=False)
    language_inferred: bool = False


@dataclass(frozen=True)
class CorpusStats:
    doc_counts: dict[str, int]
    page_counts: dict[str, int]

    @property
    def total_docs(self) -> int:
        return sum(self.doc_counts.values())

    @property
    def total_pages(self) -> int:
        return sum(self.page_counts.values())


@dataclass(frozen=True)
class Corpus:
    documents: tuple[DocumentRecord, ...]

    @property
    def stats(self) -> CorpusStats:
        docs = {lang: 0 for lang in LANGUAGES}
        pages = {lang: 0 for lang in LANGUAGES}
        for doc in self.documents:
            docs[doc.language] += 1
            pages[doc.language] += doc.page_count
        return CorpusStats(doc_counts=docs, page_counts=pages)

    def get(self, doc_id: str) -> DocumentRecord:
        for doc in self.documents:
            if doc.doc_id == doc_id:
                return doc
        raise KeyError(doc_id)

    def __len__(self) -> int:
        return len(self.documents)


def infer_language(text: str) -> str:
    """Stopword-count fallback for documents missing a language field.

    Ties resolve to English; callers must record that the value was inferred.
    """
    words = [w.lower() for w in _WORD_RE.findall(text)]
    en = sum(1 for w in words if w in _EN_STOPWORDS)
    de = sum(1 for w in words if w in _DE_STOPWORDS)
    return "de" if de > en else "en"


def _parse_document(path: Path) -> DocumentRecord:
    name = str(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise MalformedDocument(name, f"unreadable JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedDocument(name, "top-level value must be an object")

    doc_id = data.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id.strip():
        raise MalformedDocument(name, "doc_id must be a non-empty string")
    title = data.get("title")
    if not isinstance(title, str):
        raise MalformedDocument(name, "title must be a string")
    page_count = data.get("page_count")
    if not isinstance(page_count, int) or isinstance(page_count, bool) or page_count < 1:
        raise MalformedDocument(name, "page_count must be an integer >= 1")

    raw_blocks = data.get("blocks")
    if not isinstance(raw_blocks, list):
        raise MalformedDocument(name, "blocks must be an array")
    blocks: list[Block] = []
    for i, raw in enumerate(raw_blocks):
        if not isinstance(raw, dict):
            raise MalformedDocument(name, f"block {i} must be an object")
        kind = raw.get("kind")
        if kind not in BLOCK_KINDS:
            raise MalformedDocument(name, f"block {i} has invalid kind {kind!r}")
        content = raw.get("content")
        if not isinstance(content, str) or not content.strip():
            raise MalformedDocument(name, f"block {i} has empty content")
        page = raw.get("page")
        if not isinstance(page, int) or isinstance(page, bool) or not 1 <= page <= page_count:
            raise MalformedDocument(
                name, f"block {i} page {page!r} outside [1, {page_count}]"
            )
        blocks.append(Block(kind=kind, content=content, page=page, order=i))

    language = data.get("language")
    inferred = False
    if language is None:
        language = infer_language(BLOCK_SEPARATOR.join(b.content for b in blocks))
        inferred = True
    elif language not in LANGUAGES:
        raise MalformedDocument(name, f"language must be one of {LANGUAGES}, got {language!r}")

    return DocumentRecord(
        doc_id=doc_id,
        title=title,
        language=language,
        page_count=page_count,
        blocks=tuple(blocks),
        source_path=name,
        language_inferred=inferred,
    )


def load_corpus(directory_path: str | Path) -> Corpus:
    """Load every ``*.doc.json`` under a directory into a validated corpus.

    Documents come back sorted by doc_id. Duplicate ids are rejected.
    """
    directory = Path(directory_path)
    if not directory.is_dir():
        raise MissingDirectory(f"not a directory: {directory}")
    docs: list[DocumentRecord] = []
    seen: set[str] = set()
    for path in sorted(directory.glob(f"*{DOC_SUFFIX}")):
        doc = _parse_document(path)
        if doc.doc_id in seen:
            raise DuplicateDocId(doc.doc_id)
        seen.add(doc.doc_id)
        docs.append(doc)
    docs.sort(key=lambda d: d.doc_id)
    return Corpus(documents=tuple(docs))


def write_corpus(corpus: Corpus, directory_path: str | Path) -> Path:
    """Write a corpus back out as one ``*.doc.json`` file per document."""
    directory = Path(directory_path)
    directory.mkdir(parents=True, exist_ok=True)
    used: set[str] = set()
    for doc in corpus.documents:
        stem = re.sub(r"[^A-Za-z0-9._-]", "_", doc.doc_id) or "doc"
        name = stem
        serial = 1
        while name in used:
            serial += 1
            name = f"{stem}-{serial}"
        used.add(name)
        payload = {
            "doc_id": doc.doc_id,
            "title": doc.title,
            "language": doc.language,
            "page_count": doc.page_count,
            "blocks": [
                {"kind": b.kind, "content": b.content, "page": b.page}
                for b in doc.blocks
            ],
        }
        path = directory / f"{name}{DOC_SUFFIX}"
        path.write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return directory


def document_text(doc: DocumentRecord) -> str:
    """Flatten a document's blocks into one string, blank line between blocks."""
    return BLOCK_SEPARATOR.join(b.content for b in doc.blocks)


def block_spans(doc: DocumentRecord) -> list[tuple[int, int, int]]:
    """Character spans (start, end, page) of each block inside document_text."""
    spans = []
    pos = 0
    for b in doc.blocks:
        end = pos + len(b.content)
        spans.append((pos, end, b.page))
        pos = end + len(BLOCK_SEPARATOR)
    return spans
