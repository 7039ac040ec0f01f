import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from app.algebra.gf import make_field, sample
from app.algebra.sl2 import Matrix, commutes, enumerate_sl2, identity, random_sl2
from app.algebra.words import (
    INF,
    FibEnumerator,
    GeneratorPair,
    Word,
    code_commute,
    code_D,
    code_D_inv,
    code_key,
    code_T,
    code_T_inv,
    enumerate_words,
    expand_word,
    hash_word,
    reverse_hash,
    word_stats,
)
from app.core.exceptions import MatrixError, PreconditionError
from app.service.engine_service import WorkCounter
from tests.conftest import xi_pair

bits = st.text(alphabet="01", max_size=64)


def M(F, rows):
    return Matrix.from_rows(F, rows)


def triangular(F):
    """F 위 𝒯 전체"""
    for a in F.elements():
        if a.value:
            for b in F.elements():
                yield Matrix.from_elements(a, b, F.zero, a.inverse())


# ── Word / GeneratorPair ──
def test_word_alphabet_checked():
    with pytest.raises(ValueError):
        Word("012")
    assert len(Word("012", alphabet=3)) == 3
    assert (Word("01") + Word("1")).reverse() == Word("110")
    assert Word("0110").count("1") == 2


def test_generator_pair_rejects_non_sl2(F7):
    with pytest.raises(MatrixError):
        GeneratorPair(M(F7, [[2, 0], [0, 2]]), identity(F7))


# ── hash ──
def test_hash_example(F7, xi01):
    assert hash_word(xi01, "01") == M(F7, [[6, 0], [1, 6]])
    assert hash_word(xi01, Word("01")) == M(F7, [[6, 0], [1, 6]])


def test_hash_work_accounting(xi01):
    counter = WorkCounter()
    assert hash_word(xi01, "", counter).is_identity()
    assert counter.multiplications == 0
    hash_word(xi01, "01101", counter)
    assert counter.multiplications == 4


def test_identity_symbol_counts_work(xi01):
    counter = WorkCounter()
    assert hash_word(xi01, "0212", counter) == hash_word(xi01, "01")
    assert counter.multiplications == 3


@given(u=bits, v=bits, seed=st.integers(0, 2**32 - 1))
def test_hash_is_a_homomorphism(u, v, seed):
    F = make_field(2, 8)
    rng = np.random.default_rng(seed)
    A = GeneratorPair(random_sl2(F, rng), random_sl2(F, rng))
    assert hash_word(A, u + v) == hash_word(A, u) @ hash_word(A, v)


# ── reversal ──
def test_reverse_hash_example(F7, xi01):
    H = M(F7, [[6, 0], [1, 6]])
    assert reverse_hash(H) == M(F7, [[6, 6], [0, 6]])
    assert reverse_hash(H) == hash_word(xi01, "10")
    assert reverse_hash(identity(F7)).is_identity()
    assert reverse_hash(reverse_hash(H)) == H


@pytest.mark.parametrize("p, n", [(7, 1), (2, 3), (3, 2), (2, 8)])
@given(v=bits, seed=st.integers(0, 2**32 - 1))
def test_reversal_law(p, n, v, seed):
    F = make_field(p, n)
    rng = np.random.default_rng(seed)
    A = xi_pair(F, sample(F, rng), sample(F, rng))
    assert reverse_hash(hash_word(A, v)) == hash_word(A, v[::-1])


# ── 코드 ──
def test_code_T_examples(F7):
    assert code_T(M(F7, [[1, 0], [1, 1]])) == 1
    assert code_T(identity(F7)) is INF
    assert code_T_inv(identity(F7)) is INF
    assert code_key(INF, 7) == 7


@given(seed=st.integers(0, 2**32 - 1))
def test_code_T_inv_matches_inverse(seed):
    F = make_field(7)
    X = random_sl2(F, np.random.default_rng(seed))
    assert code_T_inv(X) == code_T(X.inverse())


@pytest.mark.parametrize("p, n", [(3, 1), (5, 1), (2, 2)])
def test_code_T_is_a_coset_invariant(p, n):
    """code_T(M) = code_T(N) ⇔ M⁻¹N ∈ 𝒯"""
    F = make_field(p, n)
    elems = list(enumerate_sl2(F))
    for X, Y in itertools.product(elems, repeat=2):
        same = code_T(X) == code_T(Y)
        assert same == ((X.inverse() @ Y).ents[2] == 0)


def test_code_D_examples(F7):
    assert code_D(M(F7, [[6, 6], [0, 6]])) == 1
    assert code_D(M(F7, [[3, 0], [0, 5]])) == 0
    with pytest.raises(MatrixError):
        code_D(M(F7, [[0, 6], [1, 0]]))


@pytest.mark.parametrize("p, n", [(5, 1), (2, 3), (7, 1)])
def test_code_D_partitions_into_diagonal_cosets(p, n):
    F = make_field(p, n)
    tri = list(triangular(F))
    for X, Y in itertools.product(tri, repeat=2):
        D = X.inverse() @ Y
        assert (code_D(X) == code_D(Y)) == (D.ents[1] == 0)
        assert code_D_inv(X) == code_D(X.inverse())


def test_code_commute_examples(F7):
    assert code_commute(M(F7, [[3, 0], [0, 5]])) is INF
    assert code_commute(M(F7, [[6, 6], [0, 6]])) == 0
    with pytest.raises(MatrixError):
        code_commute(identity(F7))


@pytest.mark.parametrize("p, n", [(3, 1), (5, 1), (2, 2), (2, 3)])
def test_code_commute_detects_commuting_pairs(p, n):
    F = make_field(p, n)
    tri = [X for X in triangular(F) if not X.is_plus_minus_identity()]
    for X, Y in itertools.product(tri, repeat=2):
        assert (code_commute(X) == code_commute(Y)) == commutes(X, Y)


# ── 통계 / 치환 / 열거 ──
def test_word_stats():
    assert word_stats("0110", 3, 5) == (2, 2, 16)
    assert word_stats("", 3, 5) == (0, 0, 0)


@given(u=bits, v=bits, l0=st.integers(1, 9), l1=st.integers(1, 9))
def test_weighted_length_is_additive(u, v, l0, l1):
    assert word_stats(u + v, l0, l1).weighted_length == (
        word_stats(u, l0, l1).weighted_length + word_stats(v, l0, l1).weighted_length
    )


def test_expand_word():
    assert expand_word("0110", {"0": "01", "1": "10"}) == "01101001"


def test_enumerate_words_order():
    assert list(enumerate_words("01", 2)) == ["0", "1", "00", "01", "10", "11"]


def test_fib_small_cases():
    enum = FibEnumerator(1, 2)
    assert enum.fib_next() == ["0"]
    assert sorted(enum.fib_next()) == ["00", "1"]
    assert sorted(enum.fib_next()) == ["000", "01", "10"]

    enum = FibEnumerator(2, 3)
    batches = [enum.fib_next() for _ in range(5)]
    assert sorted(batches[4]) == ["01", "10"]


def test_fib_rejects_equal_weights():
    with pytest.raises(PreconditionError):
        FibEnumerator(3, 3)


@pytest.mark.parametrize("l0, l1", [(1, 2), (2, 3), (3, 5), (5, 2), (4, 6), (7, 3)])
def test_fib_is_complete_and_exact(l0, l1):
    enum = FibEnumerator(l0, l1)
    g = enum.g
    sizes = {}
    brute: dict[int, set[str]] = {}
    for w in enumerate_words("01", 15):
        brute.setdefault(word_stats(w, l0, l1).weighted_length, set()).add(w)
    for n in range(1, 16):
        batch = enum.fib_next()
        assert len(batch) == len(set(batch))
        assert all(word_stats(w, l0, l1).weighted_length == g * n for w in batch)
        assert set(batch) == brute.get(g * n, set())
        sizes[n] = len(batch)
        if n > enum.k1:
            assert sizes[n] == sizes.get(n - enum.k0, 0) + sizes[n - enum.k1]


@pytest.mark.parametrize("l0, l1", [(1, 2), (2, 3), (2, 5), (3, 7), (1, 4)])
def test_fib_cumulative_growth_bound(l0, l1):
    """|S₁ ∪ … ∪ S_n| ≥ ⌊l₁/l₀⌋^⌊gn / 2l₁⌋"""
    enum = FibEnumerator(l0, l1)
    total = 0
    for n in range(1, 31):
        total += len(enum.fib_next())
        assert total >= (l1 // l0) ** ((enum.g * n) // (2 * l1))
