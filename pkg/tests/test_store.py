"""Store format, normalization, and cosine kernel contracts."""

import json
import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscope.errors import CorruptError, DimError, DuplicateIdError, FormatError
from oscope.store import (
    EmbeddingStore,
    cosine_matrix,
    load_store,
    normalize,
    save_store,
    _to_binary,
)

from .conftest import random_store


def test_binary_identity_round_trip(tmp_path, tiny_store):
    path = tmp_path / "tiny.embs"
    save_store(tiny_store, path)
    loaded = load_store(path)
    assert loaded.ids == ("a", "b")
    assert loaded.dim == 2
    assert np.array_equal(loaded.vectors, tiny_store.vectors)
    save_store(loaded, tmp_path / "again.embs")
    assert (tmp_path / "again.embs").read_bytes() == path.read_bytes()


def test_empty_store_round_trip(tmp_path):
    store = EmbeddingStore.from_records("m", "image", 4, [])
    path = tmp_path / "empty.embs"
    save_store(store, path)
    loaded = load_store(path)
    assert len(loaded) == 0 and loaded.dim == 4 and loaded.modality == "image"


def test_count_field_encodes_record_count(tmp_path):
    rng = np.random.default_rng(1)
    store = random_store(rng, 3, 5)
    blob = _to_binary(store)
    # magic(4) version(1) modality(1) flags(1) dim(4) then count as u64
    (count,) = struct.unpack_from("<Q", blob, 11)
    assert count == 3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(0, 25))
def test_binary_round_trip_randomized(seed, dim, n):
    rng = np.random.default_rng(seed)
    store = random_store(rng, n, dim)
    blob = _to_binary(store)
    import io, tempfile, os

    fd, path = tempfile.mkstemp()
    try:
        os.write(fd, blob)
        os.close(fd)
        loaded = load_store(path)
        assert _to_binary(loaded) == blob
    finally:
        os.unlink(path)


def test_jsonl_round_trip_values(tmp_path):
    rng = np.random.default_rng(7)
    store = random_store(rng, 17, 9)
    path = tmp_path / "s.jsonl"
    save_store(store, path, format="jsonl")
    loaded = load_store(path)
    assert loaded.ids == store.ids
    assert loaded.model_id == store.model_id
    assert np.array_equal(loaded.vectors, store.vectors)  # exact through decimal repr


def test_unicode_ids_survive(tmp_path):
    store = EmbeddingStore.from_records("m", "text", 2, [("κόσμος", [1, 2]), ("猫", [3, 4])])
    for fmt, name in (("binary", "u.embs"), ("jsonl", "u.jsonl")):
        save_store(store, tmp_path / name, format=fmt)
        assert load_store(tmp_path / name).ids == ("κόσμος", "猫")


def test_bad_magic_is_format_error(tmp_path):
    path = tmp_path / "bad.embs"
    path.write_bytes(b"NOPE" + bytes(32))
    with pytest.raises(FormatError):
        load_store(path)


def test_bad_version_is_format_error(tmp_path, tiny_store):
    blob = bytearray(_to_binary(tiny_store))
    blob[4] = 9
    path = tmp_path / "v9.embs"
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError):
        load_store(path)


def test_truncation_is_corrupt_error(tmp_path, tiny_store):
    blob = _to_binary(tiny_store)
    path = tmp_path / "cut.embs"
    path.write_bytes(blob[:-3])
    with pytest.raises(CorruptError):
        load_store(path)


def test_trailing_garbage_is_corrupt_error(tmp_path, tiny_store):
    path = tmp_path / "extra.embs"
    path.write_bytes(_to_binary(tiny_store) + b"xx")
    with pytest.raises(CorruptError):
        load_store(path)


def test_duplicate_id_rejected(tmp_path):
    with pytest.raises(DuplicateIdError):
        EmbeddingStore.from_records("m", "text", 2, [("a", [1, 0]), ("a", [0, 1])])
    # and on disk: build a valid blob, then clone the first record bytes
    store = EmbeddingStore.from_records("m", "text", 1, [("a", [1.0])])
    blob = _to_binary(store)
    header_len = 19 + 2 + len(b"m")
    record = blob[header_len:]
    doubled = bytearray(blob + record)
    struct.pack_into("<Q", doubled, 11, 2)
    path = tmp_path / "dup.embs"
    path.write_bytes(bytes(doubled))
    with pytest.raises(DuplicateIdError):
        load_store(path)


def test_nan_component_is_value_error(tmp_path, tiny_store):
    blob = bytearray(_to_binary(tiny_store))
    nan = struct.pack("<f", float("nan"))
    blob[-4:] = nan
    path = tmp_path / "nan.embs"
    path.write_bytes(bytes(blob))
    with pytest.raises(ValueError):
        load_store(path)


def test_jsonl_vector_length_mismatch_names_line(tmp_path):
    lines = [
        json.dumps({"embs": 1, "dim": 2, "modality": "text", "model_id": "m", "normalized": False}),
        json.dumps({"id": "a", "vec": [1.0, 0.0]}),
        json.dumps({"id": "b", "vec": [1.0, 0.0, 3.0]}),
    ]
    path = tmp_path / "bad.jsonl"
    path.write_text("\n".join(lines))
    with pytest.raises(CorruptError, match="line 3"):
        load_store(path)


def test_jsonl_missing_header_is_format_error(tmp_path):
    path = tmp_path / "nohdr.jsonl"
    path.write_text(json.dumps({"id": "a", "vec": [1.0]}) + "\n")
    with pytest.raises(FormatError):
        load_store(path)


def test_normalized_flag_validated_on_load(tmp_path):
    lines = [
        json.dumps({"embs": 1, "dim": 2, "modality": "text", "model_id": "m", "normalized": True}),
        json.dumps({"id": "a", "vec": [3.0, 4.0]}),
    ]
    path = tmp_path / "flag.jsonl"
    path.write_text("\n".join(lines))
    with pytest.raises(ValueError):
        load_store(path)


def test_oversized_id_rejected():
    with pytest.raises(ValueError):
        EmbeddingStore.from_records("m", "text", 1, [("x" * 70000, [1.0])])


def test_write_failure_is_io_error(tmp_path, tiny_store):
    from oscope.errors import IoError

    with pytest.raises(IoError):
        save_store(tiny_store, tmp_path / "no-such-dir" / "x.embs")
    with pytest.raises(IoError):
        load_store(tmp_path / "missing.embs")


# --- normalize ---


def test_normalize_three_four_five():
    store = EmbeddingStore.from_records("m", "text", 2, [("v", [3.0, 4.0])])
    out = normalize(store)
    assert out.normalized
    assert np.allclose(out.vector("v"), [0.6, 0.8], atol=1e-6)


def test_normalize_keeps_exact_unit_vectors():
    store = EmbeddingStore.from_records(
        "m", "text", 4, [("e1", [1, 0, 0, 0]), ("h", [0.5, 0.5, 0.5, 0.5])]
    )
    out = normalize(store)
    assert np.max(np.abs(out.vectors.astype(np.float64) - store.vectors.astype(np.float64))) < 1e-12


def test_normalize_idempotent_exactly():
    rng = np.random.default_rng(3)
    store = random_store(rng, 20, 6)
    once = normalize(store)
    twice = normalize(once)
    assert np.array_equal(once.vectors, twice.vectors)


def test_normalize_rejects_zero_vector():
    store = EmbeddingStore.from_records("m", "text", 2, [("ok", [1, 1]), ("dead", [0, 0])])
    with pytest.raises(ValueError, match="dead"):
        normalize(store)


# --- cosine_matrix ---


def test_cosine_hand_example():
    q = EmbeddingStore.from_records("q", "text", 2, [("q", [1.0, 0.0])])
    g = EmbeddingStore.from_records("g", "text", 2, [("g", [0.6, 0.8])])
    sim = cosine_matrix(q, g)
    assert abs(sim.values[0, 0] - 0.6) < 1e-6


def test_cosine_self_similarity():
    rng = np.random.default_rng(11)
    store = random_store(rng, 6, 16)
    sim = cosine_matrix(store, store)
    assert np.all(np.abs(np.diag(sim.values) - 1.0) < 1e-6)
    assert sim.values.max() <= 1.0 and sim.values.min() >= -1.0


def test_cosine_matches_double_loop_oracle():
    rng = np.random.default_rng(23)
    q = random_store(rng, 5, 13)
    g = random_store(rng, 7, 13)
    sim = cosine_matrix(q, g)
    for i in range(5):
        for j in range(7):
            a = q.vectors[i].astype(np.float64)
            b = g.vectors[j].astype(np.float64)
            want = float(a @ b / (math.sqrt(a @ a) * math.sqrt(b @ b)))
            assert abs(sim.values[i, j] - want) < 1e-6


def test_cosine_scale_invariance():
    rng = np.random.default_rng(5)
    q = random_store(rng, 4, 8)
    g = random_store(rng, 3, 8)
    scaled = EmbeddingStore("rand", "text", 8, q.ids, (q.vectors * 37.5).astype(np.float32), False)
    assert np.allclose(cosine_matrix(q, g).values, cosine_matrix(scaled, g).values, atol=1e-6)


def test_cosine_symmetry_transpose():
    rng = np.random.default_rng(6)
    a = random_store(rng, 4, 8)
    b = random_store(rng, 5, 8)
    assert np.allclose(cosine_matrix(a, b).values, cosine_matrix(b, a).values.T, atol=1e-6)


def test_cosine_dim_mismatch():
    rng = np.random.default_rng(8)
    with pytest.raises(DimError):
        cosine_matrix(random_store(rng, 2, 4), random_store(rng, 2, 5))


def test_store_immutable(tiny_store):
    with pytest.raises(ValueError):
        tiny_store.vectors[0, 0] = 5.0
