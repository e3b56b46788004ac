"""Feature vectors: layout, determinism, and the context pooling rule."""

import numpy as np
import pytest

from conftest import make_doc, random_doc
from ffrg.features import (
    BASE_DIM,
    CONTEXT_RADIUS,
    FEATURE_DIM,
    FLAG_DIM,
    GEOMETRY_DIM,
    TRIGRAM_DIM,
    featurize,
    featurize_corpus,
)


def test_dimension_breakdown():
    assert TRIGRAM_DIM + FLAG_DIM + GEOMETRY_DIM == BASE_DIM == 276
    assert FEATURE_DIM == 2 * BASE_DIM == 552


def test_shape_and_row_alignment():
    doc = make_doc(
        [("one", 0.1, 0.1, 0.15, 0.12), ("two", 0.3, 0.5, 0.35, 0.52)]
    )
    x = featurize(doc)
    assert x.shape == (2, FEATURE_DIM)
    # geometry slots carry each word's own center and size
    cx, cy = doc.words[1].box.center
    geo = x[1, TRIGRAM_DIM + FLAG_DIM : BASE_DIM]
    assert geo == pytest.approx([cx, cy, 0.05, 0.02])


def test_empty_document_yields_empty_matrix():
    assert featurize(make_doc([])).shape == (0, FEATURE_DIM)


def test_trigram_block_is_unit_norm_and_text_sensitive():
    doc = make_doc(
        [("hello", 0.1, 0.1, 0.15, 0.12), ("help", 0.1, 0.5, 0.15, 0.52)]
    )
    x = featurize(doc)
    assert np.linalg.norm(x[0, :TRIGRAM_DIM]) == pytest.approx(1.0)
    assert not np.allclose(x[0, :TRIGRAM_DIM], x[1, :TRIGRAM_DIM])


def test_same_text_same_geometry_same_vector():
    doc = make_doc(
        [("9.00", 0.1, 0.1, 0.15, 0.12), ("9.00", 0.7, 0.8, 0.75, 0.82)]
    )
    x = featurize(doc)
    # base halves differ only in the geometry slots
    assert np.array_equal(
        x[0, : TRIGRAM_DIM + FLAG_DIM], x[1, : TRIGRAM_DIM + FLAG_DIM]
    )


def test_flags_reflect_shape_classes():
    doc = make_doc(
        [
            ("TOTAL", 0.1, 0.1, 0.15, 0.12),
            ("1234", 0.3, 0.1, 0.35, 0.12),
            ("Mixed1", 0.5, 0.1, 0.55, 0.12),
        ]
    )
    x = featurize(doc)
    upper = x[0, TRIGRAM_DIM : TRIGRAM_DIM + FLAG_DIM]
    digits = x[1, TRIGRAM_DIM : TRIGRAM_DIM + FLAG_DIM]
    assert upper[0] == 1.0 and upper[4] == 0.0
    assert digits[4] == 1.0 and digits[5] == 1.0  # all-digit, digit ratio 1
    assert x[2, TRIGRAM_DIM + 5] == pytest.approx(1 / 6)


def test_context_pools_only_near_words():
    # neighbor inside the radius, stranger far outside it
    doc = make_doc(
        [
            ("a", 0.10, 0.10, 0.12, 0.12),
            ("b", 0.20, 0.10, 0.22, 0.12),
            ("c", 0.90, 0.90, 0.92, 0.92),
        ]
    )
    x = featurize(doc)
    assert np.array_equal(x[0, BASE_DIM:], x[1, :BASE_DIM])  # a's context is b alone
    assert np.all(x[2, BASE_DIM:] == 0.0)                     # c has no neighbors


def test_context_is_the_mean_of_neighbor_bases():
    doc = make_doc(
        [
            ("a", 0.10, 0.10, 0.12, 0.12),
            ("b", 0.16, 0.10, 0.18, 0.12),
            ("c", 0.22, 0.10, 0.24, 0.12),
        ]
    )
    x = featurize(doc)
    expected = (x[0, :BASE_DIM] + x[2, :BASE_DIM]) / 2.0
    assert np.allclose(x[1, BASE_DIM:], expected)
    d01 = np.hypot(0.06, 0.0)
    assert d01 <= CONTEXT_RADIUS  # sanity on the construction


def test_featurize_is_deterministic(rng):
    doc = random_doc(rng, 25)
    assert np.array_equal(featurize(doc), featurize(doc))


def test_corpus_featurization_matches_per_document(rng):
    docs = [random_doc(rng, 10, doc_id=f"d{i}") for i in range(6)]
    rows = featurize_corpus(docs, threads=3)
    for doc, row in zip(docs, rows):
        assert np.array_equal(row, featurize(doc))
