"""
Analysis Service
================

• random_homomorphism / lift_collision : {0,1,2} 무작위 걷기로 만든 (r₀, r₁) 위의 충돌을 원래 생성자로 끌어올림
• walk_distance      : 아주 작은 SL₂(F_q) 에서 정확한 걷기 분포와 스펙트럼 비율
• palindrome_check   : ξ = α, α+1 쌍에서 회문의 행렬 형태와 h(0v0) − h(1v1) 공식
• bfs_shortest_collision : 최단 충돌 오라클 (길이-사전순 BFS)
• subexp_table       : 짝수 q 비용 비교표 계산기
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import sympy

from app.algebra.gf import FieldElement, FieldParams, element_order as field_element_order, make_field, primitive_element
from app.algebra.sl2 import Matrix, enumerate_sl2, identity
from app.algebra.words import GeneratorPair, hash_word
from app.core.config import settings
from app.core.constants import LENGTH_BUDGET_LOG2, METHOD_LIFTED, METHOD_ORACLE, MIXING_DEGREE, OMEGA
from app.core.exceptions import LiftDegenerateError, PreconditionError, SearchExhaustedError
from app.core.logging_config import get_logger
from app.service.attack_service import Collision, linear_attack, make_collision
from app.service.engine_service import WalkSpec, WorkCounter, tree_stream

logger = get_logger("sl2c.analysis")


# ────────────────────────────────────────────────────────────
# 무작위 준동형
# ────────────────────────────────────────────────────────────
def sl2_order(q: int) -> int:
    return q * (q * q - 1)


def default_walk_length(group_order: int, c: float | None = None, epsilon: float | None = None) -> int:
    """m = ⌈c · 27/ε² · ln|G|⌉"""
    c = settings.WALK_C if c is None else c
    epsilon = settings.MIX_EPSILON if epsilon is None else epsilon
    return math.ceil(c * 27.0 / (epsilon * epsilon) * math.log(group_order))


@dataclass(frozen=True)
class RandomHomomorphism:
    r0: Matrix
    r1: Matrix
    v0: str
    v1: str
    m: int

    @property
    def pair(self) -> GeneratorPair:
        return GeneratorPair(self.r0, self.r1)


def random_homomorphism(
    g: GeneratorPair,
    spec: WalkSpec | None = None,
    *,
    rng: np.random.Generator,
    m: int | None = None,
    counter: WorkCounter | None = None,
) -> RandomHomomorphism:
    """v₀, v₁ ∈ {0,1,2}^m 균등, rᵢ = h_g(vᵢ) ('2' 는 항등원)"""
    spec = spec or WalkSpec(alphabet="012")
    if m is None:
        m = default_walk_length(sl2_order(g.params.q), spec.walk_c)
    words = []
    for _ in range(2):
        idx = rng.integers(0, 3, size=m)
        words.append("".join("012"[i] for i in idx))
    v0, v1 = words
    return RandomHomomorphism(hash_word(g, v0, counter), hash_word(g, v1, counter), v0, v1, m)


def lift_collision(g: GeneratorPair, v0: str, v1: str, inner: Collision) -> Collision:
    """비트별로 v₀/v₁ 치환 후 '2' 삭제, 원래 생성자에서 검증"""
    sub = {"0": v0, "1": v1}
    w1 = "".join(sub[b] for b in inner.w1).replace("2", "")
    w2 = "".join(sub[b] for b in inner.w2).replace("2", "")
    if w1 == w2:
        raise LiftDegenerateError("lifted words coincide as strings")
    return make_collision(g, w1, w2, inner.work, METHOD_LIFTED,
                          inner_method=inner.method, inner_length=inner.length)


# ────────────────────────────────────────────────────────────
# 혼합 (tiny groups)
# ────────────────────────────────────────────────────────────
@dataclass
class MixingReport:
    group_order: int
    walk_lengths: list[int]
    l1_distances: list[float]
    lambda_ratio: float
    sigma_ratio: float
    generates: bool
    bounds: list[float] = field(default_factory=list)

    def bound_holds(self, slack: float = 1e-12) -> bool:
        return all(0.5 * d <= b + slack for d, b in zip(self.l1_distances, self.bounds))


def field_for_q(q: int):
    fac = sympy.factorint(q)
    if len(fac) != 1:
        raise PreconditionError(f"q={q} is not a prime power")
    (p, n), = fac.items()
    return make_field(p, n)


def xi_form(F: FieldParams, xi: FieldElement | int) -> Matrix:
    """[[ξ, −1], [1, 0]]"""
    return Matrix.from_rows(F, [[xi, -1], [1, 0]])


def primitive_xi_pair(F: FieldParams) -> GeneratorPair:
    """A₀ = [[α, −1], [1, 0]], A₁ = [[α+1, −1], [1, 0]] (α 는 정준 원시원소)"""
    alpha = primitive_element(F)
    return GeneratorPair(xi_form(F, alpha), xi_form(F, alpha + 1))


def default_mixing_pair(q: int) -> GeneratorPair:
    return primitive_xi_pair(field_for_q(q))


def transition_matrix(gens: GeneratorPair) -> tuple[np.ndarray, list[Matrix]]:
    """x → x·g (g ∈ {g₀, g₁, e}, 각 1/3) 의 확률 행렬"""
    F = gens.params
    elems = list(enumerate_sl2(F))
    if len(elems) > settings.MIXING_MAX_ORDER:
        raise PreconditionError(f"|SL2({F.q})| = {len(elems)} exceeds MIXING_MAX_ORDER")
    index = {M.ents: i for i, M in enumerate(elems)}
    T = np.zeros((len(elems), len(elems)))
    steps = (gens.A0, gens.A1, identity(F))
    for i, M in enumerate(elems):
        for g in steps:
            T[i, index[(M @ g).ents]] += 1.0 / MIXING_DEGREE
    return T, elems


def walk_distance(q: int, gens: GeneratorPair | None = None, walk_lengths: Sequence[int] = range(0, 51)) -> MixingReport:
    if q > 5 or q < 2:
        raise PreconditionError("walk_distance is limited to q ∈ {2, 3, 4, 5}")
    gens = gens or default_mixing_pair(q)
    T, elems = transition_matrix(gens)
    size = len(elems)
    uniform = np.full(size, 1.0 / size)
    origin = [M.is_identity() for M in elems].index(True)
    start = np.zeros(size)
    start[origin] = 1.0

    ms = sorted(int(m) for m in walk_lengths)
    dists: list[float] = []
    dist, cur = start, 0
    for m in ms:
        dist = dist @ np.linalg.matrix_power(T, m - cur)
        cur = m
        dists.append(float(np.abs(dist - uniform).sum()))

    ev = np.sort(np.abs(np.linalg.eigvals(T * MIXING_DEGREE)))[::-1]
    lambda_ratio = float(ev[1] / MIXING_DEGREE) if size > 1 else 0.0
    sv = np.linalg.svd(T, compute_uv=False)
    sigma_ratio = float(sv[1]) if size > 1 else 0.0

    reach = np.linalg.matrix_power(T, size)[origin]
    generates = bool((reach > 0).all())

    ratio = max(lambda_ratio, sigma_ratio)
    bounds = [0.5 * math.sqrt(size) * ratio ** m for m in ms]
    logger.debug("mixing | q=%d |G|=%d λ/d=%.4f σ₂=%.4f", q, size, lambda_ratio, sigma_ratio)
    return MixingReport(size, ms, dists, lambda_ratio, sigma_ratio, generates, bounds)


# ────────────────────────────────────────────────────────────
# 회문 검사
# ────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class PalindromeCheck:
    form: Matrix
    delta: Matrix
    form_ok: bool
    delta_ok: bool
    collides: bool


def palindrome_check(A: GeneratorPair, v: str) -> PalindromeCheck:
    F = A.params
    alpha = A.A0.a
    minus_one = F.neg_int(1)
    if A.A0.ents != (alpha.value, minus_one, 1, 0) or A.A1.ents != ((alpha + 1).value, minus_one, 1, 0):
        raise PreconditionError("palindrome_check needs A0 = [[α,−1],[1,0]], A1 = [[α+1,−1],[1,0]]")
    if alpha.value == 0 or field_element_order(alpha) != F.q - 1:
        raise PreconditionError(f"α = {alpha} is not primitive")
    if v != v[::-1]:
        raise PreconditionError(f"{v!r} is not a palindrome")

    h = hash_word(A, v)
    a, b, c = h.a, h.b, h.c
    delta = hash_word(A, "0" + v + "0") - hash_word(A, "1" + v + "1")
    expected = Matrix.from_rows(F, [[-(a * alpha * 2) - a - b * 2, a], [-a, 0]])
    return PalindromeCheck(
        form=h,
        delta=delta,
        form_ok=c == -b,
        delta_ok=delta == expected,
        collides=delta.ents == (0, 0, 0, 0),
    )


# ────────────────────────────────────────────────────────────
# BFS 오라클
# ────────────────────────────────────────────────────────────
def _bfs_word(index: int) -> str:
    """tree_stream("01") 의 index 번째 단어 (길이 L 단어는 2^L − 2 부터)"""
    length = (index + 2).bit_length() - 1
    offset = index - ((1 << length) - 2)
    return format(offset, f"0{length}b")


def bfs_shortest_collision(
    A: GeneratorPair,
    work_cap: int | None = None,
    counter: WorkCounter | None = None,
) -> Collision:
    """
    처음 반복되는 해시 값 → 최단 충돌 (동률은 사전순).
    해시는 정수 하나, 단어는 BFS 순번으로 저장한다 (q 의 수십 배까지 가야 하는 꼬리 대비).
    상한을 넘으면 SearchExhaustedError(work=사용한 곱셈 수).
    """
    q = A.params.q
    cap = int(settings.ORACLE_WORK_FACTOR * q) if work_cap is None else work_cap
    counter = counter if counter is not None else WorkCounter()
    start = counter.multiplications
    seen: dict[int, int] = {}
    for index, (w, M) in enumerate(tree_stream(A, "01", counter)):
        if counter.multiplications - start > cap:
            break
        a, b, c, d = M.ents
        key = ((a * q + b) * q + c) * q + d
        first = seen.get(key)
        if first is not None:
            return make_collision(A, _bfs_word(first), w, counter.multiplications - start, METHOD_ORACLE)
        seen[key] = index
    raise SearchExhaustedError(
        f"bfs oracle: no collision within {cap} multiplications",
        work=counter.multiplications - start,
    )


# ────────────────────────────────────────────────────────────
# 비용 계산기
# ────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class CostPoint:
    n: int
    n0: int
    subexp_work_log2: float
    subexp_length_log2: float
    our_work_log2: float
    our_length_log2: int


def _subexp_length_log2(n: int, n0: int) -> float:
    return math.log2(32 * n**3 / n0) + n0 * math.log2(3)


def subexp_table(n_list: Sequence[int], length_budget_log2: float = LENGTH_BUDGET_LOG2) -> list[CostPoint]:
    points = []
    for n in n_list:
        if n < 4:
            raise PreconditionError("subexp_table needs n ≥ 4")
        n0 = 1
        while n0 + 1 < n and _subexp_length_log2(n, n0 + 1) <= length_budget_log2:
            n0 += 1
        work = OMEGA * n * math.log(n) * math.log(n0) / (n0 * math.log(n / n0))
        ours_len = round(math.log2(2 * n * n / math.log2(n)))
        points.append(CostPoint(n, n0, work, _subexp_length_log2(n, n0), n / 2, ours_len))
    return points


def format_table6(points: Sequence[CostPoint]) -> str:
    head = f"{'q':>8} | {'subexp work':>12} | {'subexp length':>13} | {'our work':>9} | {'our length':>10}"
    lines = [head, "-" * len(head)]
    for pt in points:
        lines.append(
            f"{'2^' + str(pt.n):>8} | {'2^%.1f' % pt.subexp_work_log2:>12} | "
            f"{'2^%.1f' % pt.subexp_length_log2:>13} | {'2^%g' % pt.our_work_log2:>9} | "
            f"{'2^' + str(pt.our_length_log2):>10}"
        )
    return "\n".join(lines)


# ────────────────────────────────────────────────────────────
# 끌어올린 충돌 (end-to-end)
# ────────────────────────────────────────────────────────────
def lifted_attack(
    g: GeneratorPair,
    *,
    rng: np.random.Generator,
    m: int,
    counter: WorkCounter | None = None,
    spec: WalkSpec | None = None,
    budget: int | None = None,
    max_resample: int | None = None,
) -> Collision:
    """det(r₀ − r₁) = 0 이 될 때까지 (r₀, r₁) 재추출 → linear_attack → lift_collision"""
    counter = counter or WorkCounter()
    tries = max_resample if max_resample is not None else 64 * g.params.q
    for _ in range(tries):
        hom = random_homomorphism(g, rng=rng, m=m, counter=counter)
        if (hom.r0 - hom.r1).det().value != 0:
            continue
        inner = linear_attack(hom.pair, rng=rng, counter=counter, spec=spec, budget=budget)
        try:
            col = lift_collision(g, hom.v0, hom.v1, inner)
        except LiftDegenerateError:
            logger.warning("⚠️ 끌어올린 단어가 같음 → v₀, v₁ 재추출")
            continue
        col.work = counter.multiplications
        return col
    raise SearchExhaustedError(f"no det(r0 − r1) = 0 homomorphism in {tries} draws")
