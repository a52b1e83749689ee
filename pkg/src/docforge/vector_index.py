"""Persisted exact-search store over chunk embeddings.

Search is a linear scan with cosine scores (vectors are unit-norm, so a dot
product suffices), which keeps retrieval metrics exactly reproducible. On
disk an index is a pair of files: a JSON manifest carrying metadata and the
ordered chunk/doc id list, and a sibling binary blob of little-endian float32
rows guarded by a CRC32. Indices are immutable once built; concurrent
searches are safe.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, DocforgeError

FORMAT_VERSION = 1
MANIFEST_SUFFIX = ".index.json"
VECTOR_SUFFIX = ".index.vec"
UNIT_NORM_TOL = 1e-6


class DuplicateChunkId(DocforgeError):
    def __init__(self, chunk_id: str):
        super().__init__(f"duplicate chunk_id: {chunk_id!r}")
        self.chunk_id = chunk_id


class IndexFormatError(DocforgeError):
    pass


class FormatVersionMismatch(IndexFormatError):
    pass


class ChecksumMismatch(IndexFormatError):
    pass


@dataclass(frozen=True)
class IndexEntry:
    chunk_id: str
    doc_id: str
    vector: np.ndarray  # float32, unit norm


@dataclass(frozen=True)
class ScoredChunk:
    chunk_id: str
    doc_id: str
    score: float


@dataclass
class IndexMetadata:
    strategy: str = ""
    embed_model: str = ""
    translated: bool = False
    created_at: str = ""
    corpus_hash: str = ""


class VectorIndex:
    def __init__(self, metadata: IndexMetadata | None = None):
        self.dims = 0
        self.entries: list[IndexEntry] = []
        self.metadata = metadata or IndexMetadata()
        self._ids: set[str] = set()
        self._matrix: np.ndarray | None = None  # float64 cache for scoring
        self._id_array: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def add_entries(self, entries: list[IndexEntry]) -> "VectorIndex":
        """Append entries in order; the first insertion fixes the dimension."""
        for e in entries:
            vec = np.asarray(e.vector, dtype=np.float32)
            if vec.ndim != 1:
                raise DimensionMismatch("entry vector must be one-dimensional")
            if self.dims == 0:
                self.dims = int(vec.shape[0])
            elif vec.shape[0] != self.dims:
                raise DimensionMismatch(
                    f"entry {e.chunk_id!r} has {vec.shape[0]} dims, index has {self.dims}"
                )
            if e.chunk_id in self._ids:
                raise DuplicateChunkId(e.chunk_id)
            if abs(float(np.linalg.norm(vec.astype(np.float64))) - 1.0) > UNIT_NORM_TOL:
                raise ValueError(f"entry {e.chunk_id!r} vector is not unit-norm")
            self._ids.add(e.chunk_id)
            self.entries.append(IndexEntry(e.chunk_id, e.doc_id, vec))
        self._matrix = None
        self._id_array = None
        return self

    def _scoring_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self._matrix is None:
            self._matrix = np.stack([e.vector for e in self.entries]).astype(np.float64)
            self._id_array = np.array([e.chunk_id for e in self.entries])
        return self._matrix, self._id_array

    def search(self, query: np.ndarray, k: int) -> list[ScoredChunk]:
        """Top-k entries by cosine, descending; ties break on ascending chunk_id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self.entries:
            return []
        q = np.asarray(query, dtype=np.float64).ravel()
        if q.shape[0] != self.dims:
            raise DimensionMismatch(f"query has {q.shape[0]} dims, index has {self.dims}")
        matrix, ids = self._scoring_arrays()
        scores = matrix @ q
        order = np.lexsort((ids, -scores))[:k]
        return [
            ScoredChunk(self.entries[i].chunk_id, self.entries[i].doc_id, float(scores[i]))
            for i in order
        ]

    def save(self, path: str | Path) -> tuple[Path, Path]:
        """Write the manifest/vector file pair; returns both paths."""
        base = _base_path(path)
        manifest_path = Path(str(base) + MANIFEST_SUFFIX)
        vector_path = Path(str(base) + VECTOR_SUFFIX)
        if self.entries:
            blob = np.stack([e.vector for e in self.entries]).astype("<f4").tobytes()
        else:
            blob = b""
        manifest = {
            "format_version": FORMAT_VERSION,
            "dims": self.dims,
            "entry_count": len(self.entries),
            "metadata": asdict(self.metadata),
            "entries": [[e.chunk_id, e.doc_id] for e in self.entries],
            "vec_crc32": zlib.crc32(blob),
        }
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        manifest_path.write_text(
            json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        vector_path.write_bytes(blob)
        return manifest_path, vector_path

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        base = _base_path(path)
        manifest_path = Path(str(base) + MANIFEST_SUFFIX)
        vector_path = Path(str(base) + VECTOR_SUFFIX)
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise IndexFormatError(f"{manifest_path}: invalid manifest JSON") from exc
        if manifest.get("format_version") != FORMAT_VERSION:
            raise FormatVersionMismatch(
                f"{manifest_path}: format_version {manifest.get('format_version')!r}, "
                f"expected {FORMAT_VERSION}"
            )
        dims = manifest["dims"]
        count = manifest["entry_count"]
        blob = vector_path.read_bytes()
        if zlib.crc32(blob) != manifest["vec_crc32"]:
            raise ChecksumMismatch(f"{vector_path}: CRC32 does not match manifest")
        if len(blob) != 4 * dims * count:
            raise ChecksumMismatch(
                f"{vector_path}: expected {4 * dims * count} bytes, found {len(blob)}"
            )
        ids = manifest["entries"]
        if len(ids) != count:
            raise IndexFormatError(f"{manifest_path}: entry list length != entry_count")
        vectors = np.frombuffer(blob, dtype="<f4").reshape(count, dims) if count else None
        index = cls(metadata=IndexMetadata(**manifest["metadata"]))
        index.add_entries(
            [
                IndexEntry(chunk_id, doc_id, vectors[i].copy())
                for i, (chunk_id, doc_id) in enumerate(ids)
            ]
            if count
            else []
        )
        index.dims = dims
        return index


def _base_path(path: str | Path) -> Path:
    s = str(path)
    for suffix in (MANIFEST_SUFFIX, VECTOR_SUFFIX):
        if s.endswith(suffix):
            return Path(s[: -len(suffix)])
    return Path(s)


def index_file_paths(base: str | Path) -> tuple[Path, Path]:
    b = _base_path(base)
    return Path(str(b) + MANIFEST_SUFFIX), Path(str(b) + VECTOR_SUFFIX)
