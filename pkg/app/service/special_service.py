"""
Special Service
===============

• even_attack : q = 2ⁿ 임의 생성자에 대한 선형 길이 공격
  (B = (A₀A₁, A₁A₀) → (C, Cᵀ) 켤레 → E 교환자 → D = (CE, C) ξ-형 → E 밀어내기)
• pqtz_attack : 𝒯-해시 단어 N 개 + 이산로그 관계식으로 항등 원상과 충돌 (데스크 규모)

E-pushing 은 문자열 재작성 규칙 CE → ET, TE → EC, EE → ε 를 왼쪽부터 적용합니다 (T = Cᵀ).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from app.algebra.gf import FieldElement, discrete_log, primitive_element
from app.algebra.sl2 import (
    Degenerate,
    Matrix,
    RationalForm,
    Symmetric,
    TransposePairForm,
    Triangularizable,
    common_eigenvector,
    conjugate,
    mul,
    orthogonal_intertwiner,
    rational_form,
    transpose_pair_form,
)
from app.algebra.words import GeneratorPair, expand_word, hash_word
from app.core.config import settings
from app.core.constants import (
    E_PUSH_RULES,
    EVEN_B_EXPANSION,
    EVEN_FALLBACK_TAG,
    METHOD_EVEN,
    METHOD_PQTZ,
    METHOD_TRIVIAL,
)
from app.core.exceptions import (
    CollisionVerificationError,
    IntertwinerError,
    PreconditionError,
    RelationNotFoundError,
    SearchExhaustedError,
)
from app.core.logging_config import get_logger
from app.schemas import IdentityPreimageRecord
from app.service.attack_service import (
    Collision,
    Phase2,
    assemble_palindromic,
    find_diagonalizable,
    generic_attack,
    make_collision,
    phase2_collision,
    stream_factory,
    triangular_word_search,
)
from app.service.engine_service import WalkSpec, WorkCounter

logger = get_logger("sl2c.special")


# ────────────────────────────────────────────────────────────
# 문자열 재작성 / E 밀어내기
# ────────────────────────────────────────────────────────────
def rewrite(word: str, rules: list[tuple[str, str]]) -> str:
    """가장 왼쪽에서 일치하는 규칙을 (목록 순서 우선) 고정점까지 반복 적용"""
    while True:
        best: tuple[int, int] | None = None
        for r, (lhs, _) in enumerate(rules):
            i = word.find(lhs)
            if i >= 0 and (best is None or i < best[0]):
                best = (i, r)
        if best is None:
            return word
        i, r = best
        lhs, rhs = rules[r]
        word = word[:i] + rhs + word[i + len(lhs):]


@dataclass(frozen=True)
class EWord:
    """{C, T, E} 위 단어와 각 C/T 기호가 유래한 D-비트 위치"""

    symbols: str
    provenance: tuple[int, ...] = ()

    @classmethod
    def from_d_bits(cls, bits: str) -> "EWord":
        return cls("".join("CE" if b == "0" else "C" for b in bits), tuple(range(len(bits))))

    def normalized(self) -> "EWord":
        # C/T 기호는 서로 순서가 바뀌지 않으므로 출처 대응이 그대로 유지된다
        return EWord(rewrite(self.symbols, E_PUSH_RULES), self.provenance)

    @property
    def parity(self) -> int:
        return self.symbols.count("E") % 2

    @property
    def residual(self) -> str:
        return self.symbols.lstrip("E")


def push_E(bits: str) -> tuple[int, str]:
    """D-비트 단어 (D₀ = CE, D₁ = C) → (E 패리티, {C, T} 잔여 단어)"""
    w = EWord.from_d_bits(bits).normalized()
    if "E" in w.residual:
        raise AssertionError(f"E left inside the word: {w.symbols}")
    return w.parity, w.residual


def _residual_to_b(residual: str) -> str:
    return residual.translate(str.maketrans("CT", "01"))


# ────────────────────────────────────────────────────────────
# even_attack
# ────────────────────────────────────────────────────────────
def _d_collision(
    D: GeneratorPair,
    spec: WalkSpec,
    *,
    rng: np.random.Generator,
    counter: WorkCounter,
    budget: int | None,
) -> tuple[str, str]:
    """D-쌍 (CE, C) 위 충돌 (det(D₀ − D₁) = 0)"""
    match rational_form(D.A0, D.A1):
        case Degenerate():
            return "0", "1"
        case Triangularizable(P=P):
            T = GeneratorPair(conjugate(D.A0, P), conjugate(D.A1, P))
            return phase2_collision(T, Phase2.COMMUTE, stream_factory(T, spec, counter), spec,
                                    rng=rng, counter=counter, budget=budget)
        case RationalForm(P=P):
            Dr = GeneratorPair(conjugate(D.A0, P), conjugate(D.A1, P))
            hit = triangular_word_search(Dr, rng=rng, counter=counter, spec=spec, budget=budget)
            return assemble_palindromic(hit.product_word)
    raise AssertionError("unreachable")


def _b_words(d1: str, d2: str) -> tuple[int, int, str, str]:
    par1, r1 = push_E(d1)
    par2, r2 = push_E(d2)
    return par1, par2, _residual_to_b(r1), _residual_to_b(r2)


def even_attack(
    A: GeneratorPair,
    *,
    rng: np.random.Generator,
    counter: WorkCounter | None = None,
    spec: WalkSpec | None = None,
    budget: int | None = None,
) -> Collision:
    F = A.params
    if F.p != 2:
        raise PreconditionError("even_attack needs q = 2^n")
    counter = counter or WorkCounter()
    spec = spec or WalkSpec()

    B0 = mul(A.A0, A.A1, counter)
    B1 = mul(A.A1, A.A0, counter)
    if B0 == B1:
        return make_collision(A, "01", "10", counter.multiplications, METHOD_TRIVIAL)

    # B 단어 → A 단어: B₀ ↦ "01", B₁ ↦ "10"
    P = common_eigenvector(B0, B1)
    if P is not None:
        logger.info("🔺 B₀, B₁ 공통 고유벡터 → 삼각화 후 교환 탐색")
        T = GeneratorPair(conjugate(B0, P), conjugate(B1, P))
        b1, b2 = phase2_collision(T, Phase2.COMMUTE, stream_factory(T, spec, counter), spec,
                                  rng=rng, counter=counter, budget=budget)
        return make_collision(
            A, expand_word(b1, EVEN_B_EXPANSION), expand_word(b2, EVEN_B_EXPANSION),
            counter.multiplications, METHOD_EVEN, route="triangular", b_words=(b1, b2),
        )

    try:
        match transpose_pair_form(B0, B1):
            case TransposePairForm(C=C):
                pass
            case other:
                raise IntertwinerError(f"transpose_pair_form: {type(other).__name__}")
        E = orthogonal_intertwiner(C)
        if isinstance(E, Symmetric):
            raise IntertwinerError("C = Cᵀ")
    except IntertwinerError as exc:
        logger.warning("⚠️ 짝수 q 병리 케이스 (%s) → 일반 공격으로 대체", exc)
        col = generic_attack(A, Phase2.COMMUTE, compressed=True, rng=rng, counter=counter,
                             spec=spec, budget=budget)
        col.method = EVEN_FALLBACK_TAG
        col.work = counter.multiplications
        return col

    D = GeneratorPair(C @ E, C)
    d1, d2 = _d_collision(D, spec, rng=rng, counter=counter, budget=budget)
    par1, par2, b1, b2 = _b_words(d1, d2)

    route = "palindromic"
    if par1 != par2:
        # 패리티가 어긋난 충돌 두 개를 이어 붙이면 패리티가 맞는다
        logger.warning("⚠️ E 패리티 불일치 → 두 번째 충돌 탐색")
        for _ in range(settings.MITM_RETRIES + 1):
            y1, y2 = _d_collision(D, spec, rng=rng, counter=counter, budget=budget)
            q1, q2, c1, c2 = _b_words(y1, y2)
            if q1 == q2:
                b1, b2 = c1, c2
                break
            if (par1 + q1) % 2 == (par2 + q2) % 2:
                _, _, b1, b2 = _b_words(d1 + y1, d2 + y2)
                break
        else:
            raise SearchExhaustedError("even_attack: no parity-compatible D-collision")
        route = "two-collision"

    return make_collision(
        A, expand_word(b1, EVEN_B_EXPANSION), expand_word(b2, EVEN_B_EXPANSION),
        counter.multiplications, METHOD_EVEN, route=route, d_words=(d1, d2), b_words=(b1, b2),
    )


# ────────────────────────────────────────────────────────────
# 관계식 탐색
# ────────────────────────────────────────────────────────────
@dataclass
class RelationInstance:
    lambdas: list[FieldElement]
    words: list[str]
    exponents: list[int]
    group_order: int

    def holds(self) -> bool:
        F = self.lambdas[0].params
        acc = F.one
        for lam, k in zip(self.lambdas, self.exponents):
            acc = acc * (lam ** k)
        return acc == 1 and any(self.exponents)


def _half_vectors(size: int, K: int, cap: int, rng: np.random.Generator):
    """[0, K]^size 벡터. 상자가 cap 보다 크면 균등 표본 cap 개 (사전순 앞부분에 치우치지 않도록)."""
    if (K + 1) ** size <= cap:
        return itertools.product(range(K + 1), repeat=size)
    return map(tuple, rng.integers(0, K + 1, size=(cap, size)).tolist())


def relation_search(
    lambdas: list[FieldElement],
    group_order: int,
    rng: np.random.Generator | None = None,
) -> list[int]:
    """
    Σ kᵢ·log(λᵢ) ≡ 0 (mod q−1) 인 작은 비음수 정수 벡터 k.
    상자 [0, K]ᴺ 을 반으로 나눠 meet-in-the-middle, K = 1..RELATION_BOX_MAX.
    반쪽 상자가 RELATION_HALF_CAP 을 넘으면 rng 로 표본을 뽑는다 (기본 시드 0).
    """
    if not lambdas:
        raise RelationNotFoundError("no lambdas")
    rng = rng if rng is not None else np.random.default_rng(0)
    N = len(lambdas)
    for i, lam in enumerate(lambdas):
        if lam.value == 0:
            raise PreconditionError("lambdas must be nonzero")
        if lam == 1:
            return [1 if j == i else 0 for j in range(N)]

    g = primitive_element(lambdas[0].params)
    logs = []
    for lam in lambdas:
        e = discrete_log(g, lam)
        if e is None:
            raise RelationNotFoundError(f"{lam} outside ⟨g⟩")
        logs.append(e)

    m = group_order
    h = N // 2
    left_logs, right_logs = logs[:h], logs[h:]
    cap = settings.RELATION_HALF_CAP

    for K in range(1, settings.RELATION_BOX_MAX + 1):
        table: dict[int, tuple[int, tuple[int, ...]]] = {}
        for vec in _half_vectors(len(left_logs), K, cap, rng):
            s = sum(k * e for k, e in zip(vec, left_logs)) % m
            nrm = sum(k * k for k in vec)
            if nrm and (s not in table or nrm < table[s][0]):
                table[s] = (nrm, vec)

        best: tuple[int, tuple[int, ...]] | None = None

        def offer(nrm: int, vec: tuple[int, ...]) -> None:
            nonlocal best
            if nrm and (best is None or nrm < best[0]):
                best = (nrm, vec)

        zero_left = (0,) * len(left_logs)
        if 0 in table:
            offer(table[0][0], table[0][1] + (0,) * len(right_logs))
        for vec in _half_vectors(len(right_logs), K, cap, rng):
            s = sum(k * e for k, e in zip(vec, right_logs)) % m
            nrm = sum(k * k for k in vec)
            if s == 0:
                offer(nrm, zero_left + vec)
            hit = table.get((-s) % m)
            if hit is not None:
                offer(hit[0] + nrm, hit[1] + vec)
        if best is not None:
            k = list(best[1])
            logger.debug("관계식 발견 | K=%d ‖k‖²=%d", K, best[0])
            return k

    raise RelationNotFoundError(f"no relation in [0, {settings.RELATION_BOX_MAX}]^{N}")


# ────────────────────────────────────────────────────────────
# pqtz_attack
# ────────────────────────────────────────────────────────────
@dataclass
class PqtzResult:
    identity: IdentityPreimageRecord
    collision: Collision
    relation: RelationInstance
    cauchy_schwarz_ok: bool
    extras: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.identity.word
        yield self.collision


def _triangular_words(
    B: GeneratorPair,
    count: int,
    *,
    rng: np.random.Generator,
    counter: WorkCounter,
    spec: WalkSpec,
    budget: int | None,
    seen: set[str],
) -> list[tuple[str, Matrix]]:
    """서로 다른 시드의 mitm 으로 h_B(w) ∈ 𝒯 인 서로 다른 단어 count 개"""
    out: list[tuple[str, Matrix]] = []
    attempts = 0
    while len(out) < count and attempts < 8 * count:
        attempts += 1
        hit = triangular_word_search(B, rng=rng, counter=counter, spec=spec, budget=budget)
        if hit.product_word not in seen:
            seen.add(hit.product_word)
            out.append((hit.product_word, hit.product))
    if len(out) < count:
        raise SearchExhaustedError(f"only {len(out)} distinct 𝒯-words out of {count}")
    return out


def pqtz_attack(
    A: GeneratorPair,
    *,
    rng: np.random.Generator,
    counter: WorkCounter | None = None,
    spec: WalkSpec | None = None,
    budget: int | None = None,
) -> PqtzResult:
    counter = counter or WorkCounter()
    F = A.params
    q, p = F.q, F.p
    if q - 1 > settings.DLOG_MAX_ORDER:
        raise PreconditionError("q − 1 exceeds DLOG_MAX_ORDER")
    base = spec or WalkSpec()
    # 서로 다른 𝒯-단어가 N 개 필요하므로 기본 구간 길이는 lg q
    segment = base.segment_length or math.ceil(math.log2(q))
    spec = WalkSpec(segment_length=segment, alphabet=base.alphabet, seed=base.seed, source="walk")

    _, split = find_diagonalizable(A, counter)
    B = GeneratorPair(conjugate(A.A0, split.P), conjugate(A.A1, split.P))

    N = math.ceil(math.log2(q))
    seen: set[str] = set()
    pairs = _triangular_words(B, N, rng=rng, counter=counter, spec=spec, budget=budget, seen=seen)
    try:
        k = relation_search([FieldElement(M.ents[0], F) for _, M in pairs], q - 1, rng)
    except RelationNotFoundError:
        logger.warning("⚠️ 관계식 없음 → 단어 %d 개 추가", N)
        pairs += _triangular_words(B, N, rng=rng, counter=counter, spec=spec, budget=budget, seen=seen)
        k = relation_search([FieldElement(M.ents[0], F) for _, M in pairs], q - 1, rng)

    words = [w for w, _ in pairs]
    relation = RelationInstance([FieldElement(M.ents[0], F) for _, M in pairs], words, k, q - 1)
    if not relation.holds():
        raise RelationNotFoundError("relation check failed")

    v = "".join(w * ki for w, ki in zip(words, k))
    ident = v * p
    verified = hash_word(A, ident).is_identity()
    if not verified:
        raise CollisionVerificationError("pqtz identity word does not hash to I")

    cs_bound = math.sqrt(sum(ki * ki for ki in k)) * math.sqrt(sum(len(w) ** 2 for w in words))
    cs_ok = len(v) <= cs_bound + 1e-9
    if not cs_ok:
        logger.warning("⚠️ Cauchy–Schwarz 길이 검사 실패 | |v|=%d bound=%.1f", len(v), cs_bound)

    collision = _permutation_collision(A, words, k, ident, counter)
    logger.info("✅ pqtz 완료 | N=%d |v|=%d work=%d", len(words), len(v), counter.multiplications)
    return PqtzResult(
        IdentityPreimageRecord(word=ident, length=len(ident), verified=verified),
        collision, relation, cs_ok, {"N": len(words), "v_length": len(v)},
    )


def _permutation_collision(A: GeneratorPair, words: list[str], k: list[int], ident: str, counter: WorkCounter) -> Collision:
    """
    k_i, k_j ≥ 1 이고 wᵢwⱼ ≠ wⱼwᵢ 이면, w 를 wᵢ·wⱼ 한 번씩 뺀 나머지로 두고
    v = wᵢwⱼw, u = wⱼwᵢw (둘 다 𝒦) 에서 (v·wⱼ·wᵢ, u·wᵢ·wⱼ).
    h(wᵢwⱼ)h(wⱼwᵢ)⁻¹ 도 𝒦 에 있으므로 두 해시가 같다. 길이는 |v| + |wᵢ| + |wⱼ|.
    그런 쌍이 없으면 (v^p·0, 0).
    """
    support = [i for i, ki in enumerate(k) if ki > 0]
    for i, j in itertools.combinations(support, 2):
        wi, wj = words[i], words[j]
        if wi + wj == wj + wi:
            continue
        rest = "".join(
            words[l] * (k[l] - (1 if l in (i, j) else 0)) for l in range(len(words))
        )
        v, u = wi + wj + rest, wj + wi + rest
        return make_collision(A, v + wj + wi, u + wi + wj, counter.multiplications, METHOD_PQTZ,
                              route="permutation", pair=(i, j), v_length=len(v))
    return make_collision(A, ident + "0", "0", counter.multiplications, METHOD_PQTZ, route="identity")
