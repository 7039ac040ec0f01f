"""
Attack Service
==============

• linear_attack   : det(A₀−A₁) = 0 쌍에 대한 선형 길이 공격 (ξ-형 켤레 → 𝒯 로의 mitm → 회문 조립)
• generic_attack  : 임의 쌍. 1단계(대각화 가능한 u₀ + 𝒯 로의 mitm) 후 2단계 IntoD / Commute
• identity_preimage, k_string, assemble_palindromic

모든 Collision 은 원래 생성자에서 verify_collision 을 통과해야만 만들어집니다.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

import numpy as np

from app.algebra.sl2 import (
    Degenerate,
    Matrix,
    RationalForm,
    Shape,
    Split,
    Triangularizable,
    commutes,
    conjugate,
    eigen_split,
    element_order,
    in_unipotent,
    mul,
    rational_form,
    shape_of,
)
from app.algebra.words import (
    INF,
    GeneratorPair,
    Word,
    code_commute,
    code_D,
    code_D_inv,
    code_T,
    code_T_inv,
    expand_word,
    hash_word,
    word_stats,
)
from app.core.config import settings
from app.core.constants import (
    METHOD_GENERIC_COMMUTE,
    METHOD_GENERIC_D,
    METHOD_LINEAR,
    METHOD_TRIVIAL,
)
from app.core.exceptions import (
    CollisionVerificationError,
    PreconditionError,
    SearchExhaustedError,
)
from app.core.logging_config import get_logger
from app.schemas import CollisionRecord
from app.service.engine_service import (
    MitmHit,
    MitmOutcome,
    MitmState,
    Stream,
    WalkSpec,
    WorkCounter,
    default_budget,
    fib_stream,
    mitm,
    mitm_distinguished,
    mitm_parallel,
    search_with_retries,
    tree_stream,
    verify_collision,
    walk_stream,
)

logger = get_logger("sl2c.attack")


# ────────────────────────────────────────────────────────────
# 결과 타입
# ────────────────────────────────────────────────────────────
@dataclass
class Collision:
    w1: str
    w2: str
    hash_value: Matrix
    work: int
    method: str
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def length(self) -> int:
        return max(len(self.w1), len(self.w2))

    def to_record(self, A: GeneratorPair) -> CollisionRecord:
        F = A.params
        return CollisionRecord(
            method=self.method,
            p=F.p,
            n=F.n,
            modulus=list(F.modulus),
            generators=[str(A.A0), str(A.A1)],
            w1=self.w1,
            w2=self.w2,
            hash=str(self.hash_value),
            work_mults=self.work,
            length=self.length,
        )


def make_collision(A: GeneratorPair, w1: str, w2: str, work: int, method: str, **extras: Any) -> Collision:
    if not verify_collision(A, w1, w2):
        raise CollisionVerificationError(f"{method}: ({w1[:32]}…, {w2[:32]}…) does not collide")
    return Collision(w1, w2, hash_word(A, w1), work, method, extras)


@dataclass(frozen=True)
class TriangularPair:
    C0: Matrix          # 대각, ≠ ±I
    C1: Matrix          # 상삼각
    u0: str
    u1: str
    P: Matrix           # 켤레 행렬 (B = P⁻¹AP)

    @property
    def l0(self) -> int:
        return len(self.u0)

    @property
    def l1(self) -> int:
        return len(self.u1)


class Phase2(str, Enum):
    """2단계 변형 (𝒦 를 목표로 하는 변형은 없음)"""

    INTO_D = "into_d"
    COMMUTE = "commute"


def _conjugate_pair(A: GeneratorPair, P: Matrix) -> GeneratorPair:
    return GeneratorPair(conjugate(A.A0, P), conjugate(A.A1, P))


def _has_one(w: str) -> bool:
    return "1" in w


# ────────────────────────────────────────────────────────────
# 회문 조립 / 𝒦 문자열 / 항등 원상
# ────────────────────────────────────────────────────────────
def assemble_palindromic(v: str) -> tuple[str, str]:
    """h(v) ∈ 𝒯 인 v 로부터 ("0"+w+"1", "1"+w+"0"),  w = v^rev · v[1:]"""
    if not v:
        raise PreconditionError("assemble_palindromic needs |v| ≥ 1")
    w = str(Word(v).reverse()) + v[1:]
    return "0" + w + "1", "1" + w + "0"


def k_string(B: GeneratorPair, v: str, i: int) -> str:
    """ξ-형 B 에서 h(v) ∈ 𝒯 이면 v · i · (v[1:])^rev 의 해시는 𝒦"""
    if i not in (0, 1):
        raise ValueError("i must be a bit")
    if not v or hash_word(B, v).ents[2] != 0:
        raise PreconditionError(f"k_string needs a nonempty word hashing into 𝒯 (got {v!r})")
    s = v + str(i) + v[1:][::-1]
    if not in_unipotent(hash_word(B, s)):
        raise PreconditionError("k_string: result is not unit upper triangular")
    return s


def triangular_word_search(
    B: GeneratorPair,
    *,
    rng: np.random.Generator,
    counter: WorkCounter,
    spec: WalkSpec | None = None,
    budget: int | None = None,
    accept: Callable[[str, Matrix], bool] | None = None,
    distinguish_bits: int = 0,
) -> MitmHit:
    """
    code_T / code_T_inv mitm 으로 h_B(w) ∈ 𝒯 인 w (재시도 포함)

    spec.n_jobs > 1 이면 joblib 샤드 병렬 (항상 랜덤 워크 표본),
    distinguish_bits > 0 이면 저메모리 모드.
    """
    spec = spec or WalkSpec()

    if spec.n_jobs > 1:
        def run_parallel(r: np.random.Generator, b: int, state: MitmState | None) -> MitmOutcome:
            return mitm_parallel(B, code_T, code_T_inv, spec, seed=int(r.integers(0, 2**32)),
                                 counter=counter, budget=b, n_jobs=spec.n_jobs, accept=accept,
                                 distinguish_bits=distinguish_bits)

        return search_with_retries(run_parallel, B.params.q, rng, budget, what="mitm→𝒯 (parallel)")

    def run(r: np.random.Generator, b: int, state: MitmState | None) -> MitmOutcome:
        if distinguish_bits > 0:
            return mitm_distinguished(B, code_T, code_T_inv, spec, distinguish_bits,
                                      rng=r, counter=counter, budget=b, accept=accept, state=state)
        return mitm(B, code_T, code_T_inv, spec, rng=r, counter=counter, budget=b,
                    accept=accept, state=state)

    return search_with_retries(run, B.params.q, rng, budget, what="mitm→𝒯",
                               resume=spec.source == "tree")


def _rational_pair(A: GeneratorPair) -> RationalForm | Triangularizable | Degenerate:
    if (A.A0 - A.A1).det().value != 0:
        raise PreconditionError("det(A0 − A1) ≠ 0: the linear attack does not apply")
    return rational_form(A.A0, A.A1)


def identity_preimage(
    A: GeneratorPair,
    *,
    rng: np.random.Generator,
    counter: WorkCounter | None = None,
    spec: WalkSpec | None = None,
    budget: int | None = None,
) -> str:
    """h(s^p) = I 인 단어. ξ-형이 아니면 0^{ord(A₀)} 로 대신한다."""
    counter = counter or WorkCounter()
    p = A.params.p
    match _rational_pair(A):
        case RationalForm(P=P):
            B = _conjugate_pair(A, P)
            hit = triangular_word_search(B, rng=rng, counter=counter, spec=spec, budget=budget)
            word = k_string(B, hit.product_word, 0) * p
        case _:
            word = "0" * element_order(A.A0)
    if not hash_word(A, word).is_identity():
        raise CollisionVerificationError("identity preimage does not hash to I")
    return word


# ────────────────────────────────────────────────────────────
# 2단계 코어 (special 에서도 재사용)
# ────────────────────────────────────────────────────────────
def _central_collision(w: str) -> tuple[str, str]:
    """h(w) = ±I 이면 w 는 모든 원소와 교환"""
    s = "0" if w == "1" * len(w) else "1"
    return w + s, s + w


def commuting_search(
    C: GeneratorPair,
    stream: Stream,
    *,
    counter: WorkCounter,
    budget: int,
    state: MitmState | None = None,
) -> MitmOutcome:
    """
    상삼각 생성자 쌍 C 위에서 교환 코드가 같은 두 단어 u, v 를 찾는다.

    • "0" 을 code_commute(C₀) 로 미리 저장 (C₀ 대각이면 ∞ → 대각 해시는 "0" 과 짝)
    • 0 만으로 된 후보는 건너뜀, u·v = v·u (문자열) 인 일치는 버림
    • 해시가 ±I 이면 (w·s, s·w) 를 hit.u / hit.v 로 바로 돌려준다
    • state 가 있으면 stream 대신 그 위치에서 이어 간다 (budget 은 누적)
    """
    start = counter.multiplications
    if state is None:
        state = MitmState(iter(stream), {})
        if not C.A0.is_plus_minus_identity():
            state.store[code_commute(C.A0)] = ("0", C.A0)
    store = state.store
    while state.samples < budget:
        try:
            w, M = next(state.stream)
        except StopIteration:
            break
        state.samples += 1
        if not _has_one(w):
            continue
        if M.is_plus_minus_identity():
            w1, w2 = _central_collision(w)
            hit = MitmHit(w1, w2, w1, M, INF, counter.multiplications - start)
            return MitmOutcome(hit, state.samples, len(store), hit.work, state)
        code = code_commute(M)
        found = store.get(code)
        if found is not None:
            u, Mu = found
            if u + w != w + u:
                hit = MitmHit(u + w, w + u, u + w, mul(Mu, M, counter), code, counter.multiplications - start)
                return MitmOutcome(hit, state.samples, len(store), hit.work, state)
        store.setdefault(code, (w, M))
    return MitmOutcome(None, state.samples, len(store), counter.multiplications - start, state)


def into_d_search(
    C: GeneratorPair,
    stream: Stream,
    spec: WalkSpec,
    *,
    rng: np.random.Generator,
    counter: WorkCounter,
    budget: int,
    state: MitmState | None = None,
) -> MitmOutcome:
    """code_D / code_D(T⁻¹) mitm. 1 을 포함한 후보만 사용."""
    return mitm(C, code_D, code_D_inv, spec, rng=rng, counter=counter, budget=budget,
                source=stream, sample_filter=_has_one, state=state)


def phase2_collision(
    C: GeneratorPair,
    phase2: Phase2,
    stream_factory: Callable[[np.random.Generator], Stream],
    spec: WalkSpec,
    *,
    rng: np.random.Generator,
    counter: WorkCounter,
    budget: int | None = None,
    resume: bool | None = None,
) -> tuple[str, str]:
    """
    C-알파벳 위의 충돌 쌍.
    resume 은 결정적 스트림(tree / fib)일 때 True: 재시도가 앞 시도의 저장소를 이어 받는다.
    """
    if C.A0.is_plus_minus_identity() or C.A1.is_plus_minus_identity() or commutes(C.A0, C.A1):
        return "01", "10"
    q = C.params.q
    resume = spec.source == "tree" if resume is None else resume
    if phase2 is Phase2.INTO_D:
        if shape_of(C.A0) != Shape.DIAGONAL:
            raise PreconditionError("IntoD needs a diagonal C0")

        def run_d(r: np.random.Generator, b: int, state: MitmState | None) -> MitmOutcome:
            stream = stream_factory(r) if state is None else iter(())
            return into_d_search(C, stream, spec, rng=r, counter=counter, budget=b, state=state)

        hit = search_with_retries(run_d, q, rng, budget, what="phase2 IntoD", resume=resume)
        w = hit.product_word
        return w + "0", "0" + w

    def run_c(r: np.random.Generator, b: int, state: MitmState | None) -> MitmOutcome:
        stream = stream_factory(r) if state is None else iter(())
        return commuting_search(C, stream, counter=counter, budget=b, state=state)

    hit = search_with_retries(run_c, q, rng, budget, what="phase2 Commute", resume=resume)
    return hit.u, hit.v


def stream_factory(
    C: GeneratorPair,
    spec: WalkSpec,
    counter: WorkCounter,
    weights: tuple[int, int] | None = None,
) -> Callable[[np.random.Generator], Stream]:
    if weights is not None and weights[0] != weights[1]:
        l0, l1 = weights
        return lambda r: fib_stream(C, l0, l1, counter)
    if spec.source == "walk":
        return lambda r: walk_stream(C, spec, r, counter)
    return lambda r: tree_stream(C, spec.alphabet, counter)


# ────────────────────────────────────────────────────────────
# linear_attack
# ────────────────────────────────────────────────────────────
def linear_attack(
    A: GeneratorPair,
    *,
    rng: np.random.Generator,
    counter: WorkCounter | None = None,
    spec: WalkSpec | None = None,
    budget: int | None = None,
    distinguish_bits: int = 0,
) -> Collision:
    counter = counter or WorkCounter()
    spec = spec or WalkSpec()
    match _rational_pair(A):
        case Degenerate():
            return make_collision(A, "0", "1", counter.multiplications, METHOD_TRIVIAL)
        case Triangularizable(P=P):
            logger.info("🔺 공통 고유벡터 → 삼각화된 쌍에서 교환 탐색")
            T = _conjugate_pair(A, P)
            factory = stream_factory(T, spec, counter)
            w1, w2 = phase2_collision(T, Phase2.COMMUTE, factory, spec, rng=rng, counter=counter, budget=budget)
            return make_collision(A, w1, w2, counter.multiplications, METHOD_GENERIC_COMMUTE, triangularizable=True)
        case RationalForm(P=P, xi0=xi0, xi1=xi1):
            B = _conjugate_pair(A, P)
            hit = triangular_word_search(B, rng=rng, counter=counter, spec=spec, budget=budget,
                                         distinguish_bits=distinguish_bits)
            v = hit.product_word
            w1, w2 = assemble_palindromic(v)
            logger.debug("선형 공격 충돌 | m=%d work=%d", len(v), counter.multiplications)
            return make_collision(A, w1, w2, counter.multiplications, METHOD_LINEAR,
                                  m=len(v), xi0=str(xi0), xi1=str(xi1))
    raise AssertionError("unreachable")


# ────────────────────────────────────────────────────────────
# generic_attack
# ────────────────────────────────────────────────────────────
def find_diagonalizable(
    A: GeneratorPair,
    counter: WorkCounter,
    max_len: int | None = None,
) -> tuple[str, Split]:
    """길이-사전순으로 eigen_split 이 Split 인 첫 단어"""
    max_len = max_len or settings.PHASE1_MAX_LEN
    for w, M in tree_stream(A, "01", counter):
        if len(w) > max_len:
            break
        if M.is_plus_minus_identity():
            continue
        res = eigen_split(M)
        if isinstance(res, Split):
            return w, res
    raise SearchExhaustedError(f"no diagonalizable word up to length {max_len}")


def triangular_pair(
    A: GeneratorPair,
    *,
    rng: np.random.Generator,
    counter: WorkCounter,
    spec: WalkSpec | None = None,
    budget: int | None = None,
) -> TriangularPair:
    """1단계: 대각 C₀ = h_B(u₀), 상삼각(비대각) C₁ = h_B(u₁)"""
    u0, split = find_diagonalizable(A, counter)
    B = _conjugate_pair(A, split.P)
    C0 = hash_word(B, u0)

    def not_diagonal(word: str, M: Matrix) -> bool:
        return shape_of(M) not in (Shape.DIAGONAL, Shape.PLUS_MINUS_IDENTITY)

    hit = triangular_word_search(B, rng=rng, counter=counter, spec=spec, budget=budget, accept=not_diagonal)
    return TriangularPair(C0, hit.product, u0, hit.product_word, split.P)


def generic_attack(
    A: GeneratorPair,
    phase2: Phase2 = Phase2.INTO_D,
    compressed: bool = False,
    *,
    rng: np.random.Generator,
    counter: WorkCounter | None = None,
    spec: WalkSpec | None = None,
    budget: int | None = None,
) -> Collision:
    counter = counter or WorkCounter()
    spec = spec or WalkSpec()
    method = METHOD_GENERIC_D if phase2 is Phase2.INTO_D else METHOD_GENERIC_COMMUTE
    if A.A0 == A.A1:
        return make_collision(A, "0", "1", 0, METHOD_TRIVIAL)
    if commutes(A.A0, A.A1):
        return make_collision(A, "01", "10", 0, METHOD_TRIVIAL)

    pair = triangular_pair(A, rng=rng, counter=counter, spec=spec, budget=budget)
    phase1_work = counter.multiplications
    logger.debug("1단계 완료 | l0=%d l1=%d work=%d", pair.l0, pair.l1, phase1_work)

    C = GeneratorPair(pair.C0, pair.C1)
    weights = (pair.l0, pair.l1) if compressed else None
    deterministic = spec.source == "tree" or (compressed and pair.l0 != pair.l1)
    factory = stream_factory(C, spec, counter, weights)
    c1, c2 = phase2_collision(C, phase2, factory, spec, rng=rng, counter=counter,
                              budget=budget or default_budget(C.params.q),
                              resume=deterministic)

    sub = {"0": pair.u0, "1": pair.u1}
    w1, w2 = expand_word(c1, sub), expand_word(c2, sub)
    return make_collision(
        A, w1, w2, counter.multiplications, method,
        c_words=(c1, c2), l0=pair.l0, l1=pair.l1, diag_length=pair.l0,
        phase1_work=phase1_work, compressed=compressed,
        weighted_length=max(word_stats(c, pair.l0, pair.l1).weighted_length for c in (c1, c2)),
    )
