import itertools

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from app.algebra.gf import make_field, sample
from app.algebra.sl2 import Matrix, Shape, identity, in_unipotent, random_sl2, shape_of
from app.algebra.words import GeneratorPair, hash_word
from app.core.constants import (
    METHOD_GENERIC_COMMUTE,
    METHOD_GENERIC_D,
    METHOD_LINEAR,
    METHOD_TRIVIAL,
)
from app.core.exceptions import CollisionVerificationError, PreconditionError
from app.service.attack_service import (
    Phase2,
    assemble_palindromic,
    commuting_search,
    generic_attack,
    identity_preimage,
    k_string,
    linear_attack,
    make_collision,
    phase2_collision,
    stream_factory,
    triangular_pair,
    triangular_word_search,
)
from app.service.engine_service import WalkSpec, WorkCounter, tree_stream, verify_collision
from app.service.experiment_service import random_pair
from tests.conftest import xi_pair


def M(F, rows):
    return Matrix.from_rows(F, rows)


# ── 회문 조립 / 𝒦 문자열 ──
def test_assemble_palindromic_shape():
    assert assemble_palindromic("0") == ("001", "100")
    assert assemble_palindromic("10") == ("00101", "10100")
    with pytest.raises(PreconditionError):
        assemble_palindromic("")


def test_k_string_examples(xi01):
    assert k_string(xi01, "10", 0) == "1000"
    assert k_string(xi01, "10", 1) == "1010"
    assert in_unipotent(hash_word(xi01, "1000"))


def test_k_string_rejects_non_triangular(xi01):
    with pytest.raises(PreconditionError):
        k_string(xi01, "0", 0)
    with pytest.raises(ValueError):
        k_string(xi01, "10", 2)


# ── make_collision ──
def test_make_collision_checks(xi01):
    with pytest.raises(CollisionVerificationError):
        make_collision(xi01, "0", "1", 0, "manual")
    col = make_collision(xi01, "00101", "10100", 3, "manual", note="x")
    assert col.length == 5 and col.extras == {"note": "x"}
    rec = col.to_record(xi01)
    assert rec.generators == [str(xi01.A0), str(xi01.A1)]
    assert rec.hash == str(hash_word(xi01, "00101"))


# ── linear_attack ──
def test_linear_attack_example(xi01, rng):
    counter = WorkCounter()
    col = linear_attack(xi01, rng=rng, counter=counter)
    assert (col.w1, col.w2) == ("00101", "10100")
    assert col.method == METHOD_LINEAR
    assert col.work == counter.multiplications
    assert verify_collision(xi01, col.w1, col.w2)


def test_linear_attack_equal_generators(F7, rng):
    X = M(F7, [[2, 3], [1, 2]])
    col = linear_attack(GeneratorPair(X, X), rng=rng)
    assert (col.w1, col.w2) == ("0", "1")
    assert col.method == METHOD_TRIVIAL


def test_linear_attack_needs_singular_difference(F7, rng):
    A = GeneratorPair(M(F7, [[1, 1], [0, 1]]), M(F7, [[1, 0], [1, 1]]))
    with pytest.raises(PreconditionError):
        linear_attack(A, rng=rng)


def test_linear_attack_triangularizable(F7, rng):
    A = GeneratorPair(M(F7, [[3, 1], [0, 5]]), M(F7, [[3, 2], [0, 5]]))
    col = linear_attack(A, rng=rng)
    assert col.method == METHOD_GENERIC_COMMUTE
    assert verify_collision(A, col.w1, col.w2)


@pytest.mark.parametrize("p, n", [(101, 1), (2, 8), (3, 5), (1009, 1)])
@given(seed=st.integers(0, 2**32 - 1))
@hyp_settings(max_examples=25)
def test_linear_attack_on_conjugated_pairs(p, n, seed):
    F = make_field(p, n)
    rng = np.random.default_rng(seed)
    xi0, xi1 = sample(F, rng), sample(F, rng)
    if xi0 == xi1:
        return
    Q = random_sl2(F, rng)
    A = GeneratorPair(Q.inverse() @ M(F, [[xi0, -1], [1, 0]]) @ Q,
                      Q.inverse() @ M(F, [[xi1, -1], [1, 0]]) @ Q)
    col = linear_attack(A, rng=rng)
    assert col.method == METHOD_LINEAR
    assert col.w1 != col.w2
    assert hash_word(A, col.w1) == hash_word(A, col.w2)
    assert len(col.w1) == len(col.w2) == 2 * col.extras["m"] + 1


def test_linear_attack_with_distinguished_points(rng):
    F = make_field(1009)
    A = xi_pair(F, 5, 600)
    col = linear_attack(A, rng=rng, spec=WalkSpec(source="walk", segment_length=12),
                       distinguish_bits=2)
    assert verify_collision(A, col.w1, col.w2)


def test_linear_attack_with_parallel_shards(rng):
    F = make_field(1009)
    A = xi_pair(F, 5, 600)
    counter = WorkCounter()
    col = linear_attack(A, rng=rng, counter=counter,
                        spec=WalkSpec(segment_length=12, n_jobs=2), distinguish_bits=1)
    assert col.method == METHOD_LINEAR
    assert verify_collision(A, col.w1, col.w2)
    assert col.work == counter.multiplications > 0


# ── 회문 충돌 법칙 ──
def test_palindromic_laws_exhaustive_over_f5():
    """F₅ 의 모든 ξ-쌍, 길이 ≤ 8 의 모든 𝒯-단어 v 에 대해 𝒦 문자열과 회문 충돌이 성립"""
    F = make_field(5)
    checked = 0
    for xi0, xi1 in itertools.permutations(range(5), 2):
        B = xi_pair(F, xi0, xi1)
        for n in range(1, 9):
            for symbols in itertools.product("01", repeat=n):
                v = "".join(symbols)
                if hash_word(B, v).ents[2] != 0:
                    continue
                for i in (0, 1):
                    assert in_unipotent(hash_word(B, k_string(B, v, i)))
                w1, w2 = assemble_palindromic(v)
                assert verify_collision(B, w1, w2)
                checked += 1
    assert checked > 100


@pytest.mark.parametrize("p, n", [(101, 1), (2, 8), (3, 5)])
@given(seed=st.integers(0, 2**32 - 1))
@hyp_settings(max_examples=30)
def test_palindromic_collision_on_random_triangular_words(p, n, seed):
    F = make_field(p, n)
    rng = np.random.default_rng(seed)
    xi0, xi1 = sample(F, rng), sample(F, rng)
    if xi0 == xi1:
        return
    B = xi_pair(F, xi0, xi1)
    v = triangular_word_search(B, rng=rng, counter=WorkCounter(),
                               spec=WalkSpec(source="walk", segment_length=8)).product_word
    w1, w2 = assemble_palindromic(v)
    assert len(w1) == len(w2) == 2 * len(v) + 1
    assert hash_word(B, w1) == hash_word(B, w2)
    mid = w1[1:-1]
    assert mid == mid[::-1] == w2[1:-1]


# ── identity_preimage ──
def test_identity_preimage_example(xi01, rng):
    assert identity_preimage(xi01, rng=rng) == "1000" * 7


def test_identity_preimage_fallback(F7, rng):
    A0 = M(F7, [[1, 1], [0, 1]])
    A = GeneratorPair(A0, M(F7, [[1, 2], [0, 1]]))
    w = identity_preimage(A, rng=rng)
    assert w == "0" * 7
    assert hash_word(A, w).is_identity()


@pytest.mark.parametrize("p, n", [(13, 1), (2, 6), (3, 3)])
def test_identity_preimage_on_xi_pairs(p, n):
    F = make_field(p, n)
    rng = np.random.default_rng(p * 100 + n)
    A = xi_pair(F, F.from_int(2), F.from_int(5))
    w = identity_preimage(A, rng=rng)
    assert w and hash_word(A, w).is_identity()
    assert len(w) % p == 0


# ── 2단계 ──
def test_phase2_trivial_cases(F7, rng):
    D = M(F7, [[3, 0], [0, 5]])
    C = GeneratorPair(D, identity(F7))
    spec = WalkSpec()
    factory = stream_factory(C, spec, WorkCounter())
    assert phase2_collision(C, Phase2.INTO_D, factory, spec, rng=rng, counter=WorkCounter()) == ("01", "10")


def test_phase2_into_d_needs_diagonal(F7, rng):
    C = GeneratorPair(M(F7, [[3, 1], [0, 5]]), M(F7, [[2, 4], [0, 4]]))
    spec = WalkSpec()
    with pytest.raises(PreconditionError):
        phase2_collision(C, Phase2.INTO_D, stream_factory(C, spec, WorkCounter()), spec,
                         rng=rng, counter=WorkCounter())


@pytest.mark.parametrize("phase2", list(Phase2))
def test_phase2_on_triangular_pair(phase2, rng):
    F = make_field(101)
    C = GeneratorPair(M(F, [[3, 0], [0, 34]]), M(F, [[5, 7], [0, 81]]))
    spec = WalkSpec()
    counter = WorkCounter()
    c1, c2 = phase2_collision(C, phase2, stream_factory(C, spec, counter), spec, rng=rng, counter=counter)
    assert c1 != c2
    assert hash_word(C, c1) == hash_word(C, c2)


def test_commuting_search_finds_central_word(F7):
    C = GeneratorPair(M(F7, [[3, 0], [0, 5]]), M(F7, [[6, 0], [0, 6]]))
    out = commuting_search(C, tree_stream(C, "01", WorkCounter()), counter=WorkCounter(), budget=20)
    assert (out.hit.u, out.hit.v) == ("10", "01")
    assert verify_collision(C, out.hit.u, out.hit.v)


# ── generic_attack ──
def test_generic_attack_commuting_generators(F7, rng):
    A = GeneratorPair(M(F7, [[1, 1], [0, 1]]), M(F7, [[1, 2], [0, 1]]))
    col = generic_attack(A, rng=rng)
    assert (col.w1, col.w2) == ("01", "10")
    assert col.method == METHOD_TRIVIAL


def test_triangular_pair_shapes(rng):
    F = make_field(101)
    A = random_pair(F, np.random.default_rng(9))
    pair = triangular_pair(A, rng=rng, counter=WorkCounter())
    assert shape_of(pair.C0) == Shape.DIAGONAL
    assert shape_of(pair.C1) == Shape.UPPER_TRIANGULAR
    B0 = pair.P.inverse() @ hash_word(A, pair.u0) @ pair.P
    assert B0 == pair.C0


@pytest.mark.parametrize("phase2, compressed, method", [
    (Phase2.INTO_D, False, METHOD_GENERIC_D),
    (Phase2.COMMUTE, False, METHOD_GENERIC_COMMUTE),
    (Phase2.COMMUTE, True, METHOD_GENERIC_COMMUTE),
])
@pytest.mark.parametrize("p, n", [(101, 1), (2, 7), (5, 3)])
def test_generic_attack_on_random_pairs(phase2, compressed, method, p, n):
    F = make_field(p, n)
    for seed in range(3):
        rng = np.random.default_rng(seed)
        A = random_pair(F, rng)
        counter = WorkCounter()
        col = generic_attack(A, phase2, compressed, rng=rng, counter=counter)
        assert col.method == method
        assert col.w1 != col.w2
        assert hash_word(A, col.w1) == hash_word(A, col.w2)
        assert col.work == counter.multiplications
        assert col.extras["compressed"] is compressed
        assert col.extras["phase1_work"] <= col.work


def test_commuting_search_resumes_where_it_stopped(rng):
    F = make_field(101)
    C = GeneratorPair(M(F, [[3, 0], [0, 34]]), M(F, [[5, 7], [0, 81]]))
    ref_counter = WorkCounter()
    ref = commuting_search(C, tree_stream(C, "01", ref_counter), counter=ref_counter, budget=10_000)
    assert not ref.exhausted and ref.samples > 2

    counter = WorkCounter()
    first = commuting_search(C, tree_stream(C, "01", counter), counter=counter, budget=ref.samples // 2)
    assert first.exhausted
    second = commuting_search(C, iter(()), counter=counter, budget=10_000, state=first.state)
    assert (second.hit.u, second.hit.v) == (ref.hit.u, ref.hit.v)
    assert counter.multiplications == ref_counter.multiplications
