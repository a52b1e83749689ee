import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docforge.errors import DimensionMismatch
from docforge.vector_index import (
    ChecksumMismatch,
    DuplicateChunkId,
    FormatVersionMismatch,
    IndexEntry,
    IndexFormatError,
    IndexMetadata,
    VectorIndex,
    index_file_paths,
)


def unit(values) -> np.ndarray:
    vec = np.asarray(values, dtype=np.float64)
    return (vec / np.linalg.norm(vec)).astype(np.float32)


def random_entries(n, dims=8, seed=0, prefix="c"):
    rng = np.random.default_rng(seed)
    return [
        IndexEntry(f"{prefix}{i:05d}", f"d{i % 7}", unit(rng.standard_normal(dims)))
        for i in range(n)
    ]


def search_oracle(entries, query, k):
    """Full sort over per-entry dot products, ties broken by chunk_id."""
    q = np.asarray(query, dtype=np.float64)
    scored = [
        (float(np.dot(e.vector.astype(np.float64), q)), e.chunk_id, e.doc_id)
        for e in entries
    ]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return scored[:k]


def test_add_zero_entries_is_noop():
    index = VectorIndex()
    index.add_entries([])
    assert len(index) == 0


def test_add_wrong_dims_rejected():
    index = VectorIndex()
    index.add_entries([IndexEntry("a", "d", unit([1, 0, 0]))])
    with pytest.raises(DimensionMismatch):
        index.add_entries([IndexEntry("b", "d", unit([1, 0]))])


def test_duplicate_chunk_id_rejected():
    index = VectorIndex()
    index.add_entries([IndexEntry("a", "d", unit([1, 0]))])
    with pytest.raises(DuplicateChunkId):
        index.add_entries([IndexEntry("a", "d", unit([0, 1]))])


def test_non_unit_vector_rejected():
    index = VectorIndex()
    with pytest.raises(ValueError):
        index.add_entries([IndexEntry("a", "d", np.array([1.0, 1.0], dtype=np.float32))])


def test_three_entries_all_reachable():
    index = VectorIndex()
    index.add_entries(random_entries(3))
    hits = index.search(random_entries(1)[0].vector, 3)
    assert len(hits) == 3
    assert {h.chunk_id for h in hits} == {"c00000", "c00001", "c00002"}


def test_self_similarity_scores_one():
    entries = random_entries(10)
    index = VectorIndex()
    index.add_entries(entries)
    hits = index.search(entries[4].vector, 1)
    assert hits[0].chunk_id == "c00004"
    assert abs(hits[0].score - 1.0) <= 1e-6


def test_orthogonal_vector_scores_zero():
    index = VectorIndex()
    index.add_entries([IndexEntry("a", "d", unit([1, 0, 0]))])
    [hit] = index.search(unit([0, 1, 0]), 1)
    assert abs(hit.score) <= 1e-6


def test_ties_break_on_ascending_chunk_id():
    vec = unit([1, 1, 0])
    index = VectorIndex()
    index.add_entries(
        [IndexEntry("zz", "d", vec), IndexEntry("aa", "d", vec), IndexEntry("mm", "d", vec)]
    )
    hits = index.search(vec, 3)
    assert [h.chunk_id for h in hits] == ["aa", "mm", "zz"]


def test_k_larger_than_index():
    index = VectorIndex()
    index.add_entries(random_entries(3))
    assert len(index.search(unit([1] * 8), 10)) == 3


def test_empty_index_returns_empty():
    assert VectorIndex().search(unit([1, 0]), 5) == []


def test_k_below_one_rejected():
    index = VectorIndex()
    index.add_entries(random_entries(2))
    with pytest.raises(ValueError):
        index.search(unit([1] * 8), 0)


def test_query_dimension_mismatch():
    index = VectorIndex()
    index.add_entries(random_entries(2, dims=8))
    with pytest.raises(DimensionMismatch):
        index.search(unit([1, 0]), 1)


def test_search_matches_oracle_small():
    entries = random_entries(100, seed=3)
    index = VectorIndex()
    index.add_entries(entries)
    rng = np.random.default_rng(11)
    for _ in range(5):
        query = unit(rng.standard_normal(8))
        for k in (1, 3, 5, 20):
            hits = index.search(query, k)
            expected = search_oracle(entries, query, k)
            assert [(h.chunk_id, h.doc_id) for h in hits] == [(c, d) for _, c, d in expected]
            for h, (score, _, _) in zip(hits, expected):
                assert abs(h.score - score) <= 1e-9


@given(st.integers(min_value=0, max_value=60), st.integers(min_value=0, max_value=2**32 - 1),
       st.sampled_from([1, 3, 5, 20]))
@settings(max_examples=60, deadline=None)
def test_search_matches_oracle_property(n, seed, k):
    entries = random_entries(n, dims=6, seed=seed)
    index = VectorIndex()
    index.add_entries(entries)
    query = unit(np.random.default_rng(seed + 1).standard_normal(6))
    if n == 0:
        assert index.search(query, k) == [] if index.dims == 0 else True
        return
    hits = index.search(query, k)
    expected = search_oracle(entries, query, k)
    assert [(h.chunk_id, h.doc_id) for h in hits] == [(c, d) for _, c, d in expected]


def test_scores_sorted_and_bounded():
    entries = random_entries(200, seed=5)
    index = VectorIndex()
    index.add_entries(entries)
    hits = index.search(unit(np.random.default_rng(6).standard_normal(8)), 50)
    scores = [h.score for h in hits]
    assert scores == sorted(scores, reverse=True)
    assert all(-1 - 1e-6 <= s <= 1 + 1e-6 for s in scores)


# -- persistence ----------------------------------------------------------------

def test_round_trip_bit_exact(tmp_path):
    entries = random_entries(3, seed=9)
    index = VectorIndex(metadata=IndexMetadata(strategy="fixed-800", embed_model="m",
                                               translated=True, created_at="t", corpus_hash="h"))
    index.add_entries(entries)
    index.save(tmp_path / "idx")
    loaded = VectorIndex.load(tmp_path / "idx")
    assert loaded.dims == index.dims
    assert loaded.metadata == index.metadata
    assert [(e.chunk_id, e.doc_id) for e in loaded.entries] == [
        (e.chunk_id, e.doc_id) for e in entries
    ]
    for loaded_entry, original in zip(loaded.entries, entries):
        assert loaded_entry.vector.tobytes() == original.vector.tobytes()


def test_round_trip_files_byte_identical(tmp_path):
    index = VectorIndex()
    index.add_entries(random_entries(10, seed=2))
    m1, v1 = index.save(tmp_path / "one")
    loaded = VectorIndex.load(tmp_path / "one")
    m2, v2 = loaded.save(tmp_path / "two")
    assert m1.read_bytes() == m2.read_bytes()
    assert v1.read_bytes() == v2.read_bytes()


def test_empty_index_round_trip(tmp_path):
    index = VectorIndex()
    index.save(tmp_path / "empty")
    loaded = VectorIndex.load(tmp_path / "empty")
    assert len(loaded) == 0
    assert loaded.search(unit([1, 0]), 1) == [] if loaded.dims == 0 else True


def test_truncated_vector_file_detected(tmp_path):
    index = VectorIndex()
    index.add_entries(random_entries(4, seed=1))
    _, vec_path = index.save(tmp_path / "idx")
    vec_path.write_bytes(vec_path.read_bytes()[:-5])
    with pytest.raises(ChecksumMismatch):
        VectorIndex.load(tmp_path / "idx")


def test_format_version_mismatch(tmp_path):
    index = VectorIndex()
    index.add_entries(random_entries(2))
    manifest_path, _ = index.save(tmp_path / "idx")
    manifest = json.loads(manifest_path.read_text())
    manifest["format_version"] = 99
    manifest_path.write_text(json.dumps(manifest))
    with pytest.raises(FormatVersionMismatch):
        VectorIndex.load(tmp_path / "idx")


def test_corrupt_manifest_json(tmp_path):
    index = VectorIndex()
    index.add_entries(random_entries(2))
    manifest_path, _ = index.save(tmp_path / "idx")
    manifest_path.write_text("{broken")
    with pytest.raises(IndexFormatError):
        VectorIndex.load(tmp_path / "idx")


def test_missing_file_is_os_error(tmp_path):
    with pytest.raises(OSError):
        VectorIndex.load(tmp_path / "nothing")


def test_index_file_paths_accepts_any_form(tmp_path):
    base = tmp_path / "name"
    for given_path in (base, f"{base}.index.json", f"{base}.index.vec"):
        manifest, vectors = index_file_paths(given_path)
        assert str(manifest).endswith("name.index.json")
        assert str(vectors).endswith("name.index.vec")
