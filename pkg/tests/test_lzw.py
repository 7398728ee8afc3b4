from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from conftest import corpora
from macrozip.lzw import (
    LzwCodebook,
    greedy_parse,
    lzw_build,
    lzw_encoded_bits,
    lzw_objective,
    lzw_parse_counts,
    min_b_limit,
    search_b_limit,
)

A, B = 0, 1


def codebook(entries, b_limit=3, alphabet=2):
    return LzwCodebook(b_limit=b_limit, entries=[tuple(e) for e in entries], alphabet_size=alphabet)


def test_build_ababab():
    book = lzw_build([(A, B, A, B, A, B)], 3)
    assert book.grown == [(A, B), (B, A), (A, B, A)]
    assert [book.entries[c] for c in book.emissions] == [(A,), (B,), (A, B), (A, B)]


def test_encoded_bits_ababab_uses_greedy_parse():
    book = lzw_build([(A, B, A, B, A, B)], 3)
    # longest match against the finished codebook: aba | ba | b
    assert [book.entries[c] for c in greedy_parse((A, B, A, B, A, B), book)] == [(A, B, A), (B, A), (B,)]
    assert lzw_encoded_bits([(A, B, A, B, A, B)], book) == 9


def test_parse_counts_examples():
    counts = lzw_parse_counts([(A, B, A, B)], codebook([(A,), (B,), (A, B)], b_limit=2))
    assert counts == {(A,): 0, (B,): 0, (A, B): 2}
    counts = lzw_parse_counts([(A, B, A, B, A)], codebook([(A,), (B,), (A, B), (A, B, A)]))
    assert counts == {(A,): 1, (B,): 1, (A, B): 0, (A, B, A): 1}


def test_capacity_errors():
    with pytest.raises(ValueError, match="capacity"):
        lzw_build([(0, 1, 2)], 1, alphabet_size=3)
    assert min_b_limit(2) == 1 and min_b_limit(4) == 2 and min_b_limit(5) == 3


def test_action_outside_alphabet():
    with pytest.raises(ValueError):
        lzw_build([(0, 3)], 3, alphabet_size=2)


@given(corpora(max_alphabet=6, max_trajs=6, max_len=40), st.integers(0, 4))
def test_round_trip_and_capacity(corpus, extra_bits):
    k, trajs = corpus
    b = min_b_limit(k) + extra_bits
    book = lzw_build(trajs, b, k)
    assert len(book) <= 2**b
    assert book.expand(book.emissions) == [a for t in trajs for a in t]
    for t in trajs:
        assert tuple(book.expand(greedy_parse(t, book))) == t


@given(corpora(max_alphabet=5, max_trajs=5, max_len=30))
def test_dictionary_is_prefix_closed(corpus):
    k, trajs = corpus
    book = lzw_build(trajs, 6, k)
    assert all(e[:-1] in book for e in book.grown)


def test_full_codebook_stops_growing():
    book = lzw_build([(0, 1) * 20], 2, alphabet_size=2)
    assert len(book) == 4


def test_objective_and_search():
    trajs = [(0, 0, 0, 0, 1, 1, 1, 1) * 6] * 3
    res = search_b_limit(trajs, 5, 2.0, 2)
    assert [r["b_limit"] for r in res.report] == [1, 2, 3, 4, 5]
    assert res.objective_value == min(r["objective"] for r in res.report)
    assert lzw_objective(trajs, res.b_limit, 2.0, 2) == res.objective_value
    assert set(res.macros) == set(res.codebook.entries)
    assert abs(sum(res.distribution.values()) - 1) < 1e-9
    assert res.report_csv().startswith("b_limit,mean_bits,objective\n")


def test_search_ties_prefer_smaller_width():
    # a single primitive symbol: every width encodes the same count, the regularizer decides
    res = search_b_limit([(0, 1)], 4, 1.0, 2)
    assert res.b_limit == 1


def test_search_rejects_small_b_max():
    with pytest.raises(ValueError):
        search_b_limit([(0, 1, 2, 3, 4)], 2, 2.0, 5)
