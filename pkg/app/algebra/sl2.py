"""
app.algebra.sl2
---------------
F_q 위 2×2 행렬과 켤레(conjugation) 도구.

• Matrix 는 (a, b, c, d) 의 value 인코딩 정수 튜플을 들고 있고, 곱셈은 FieldParams 의
  정수 수준 연산으로 직접 계산합니다.
• 작업량(work)은 mul(M, N, counter) 만 올립니다. `@` 연산자와 conjugate() 는 셋업용으로
  카운트하지 않습니다.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Protocol, Sequence, Union

import numpy as np
import sympy

from app.algebra.gf import (
    FieldElement,
    FieldParams,
    Irreducible,
    TwoRoots,
    DoubleRoot,
    parse_element,
    sample,
    solve_unit_quadratic,
    sqrt,
)
from app.core.exceptions import IntertwinerError, MatrixError, PreconditionError
from app.core.logging_config import get_logger

logger = get_logger("sl2c.sl2")

Entry = Union[FieldElement, int]


class Counter(Protocol):
    def add(self, k: int = 1) -> None: ...


# ────────────────────────────────────────────────────────────
# Matrix
# ────────────────────────────────────────────────────────────
class Matrix:
    """row-major [[a, b], [c, d]]. 불변 값 객체."""

    __slots__ = ("params", "ents")

    def __init__(self, params: FieldParams, ents: tuple[int, int, int, int]):
        self.params = params
        self.ents = ents

    @classmethod
    def from_rows(cls, params: FieldParams, rows: Sequence[Sequence[Entry]]) -> "Matrix":
        (a, b), (c, d) = rows
        co = params.coerce
        return cls(params, (co(a).value, co(b).value, co(c).value, co(d).value))

    @classmethod
    def from_elements(cls, a: FieldElement, b: FieldElement, c: FieldElement, d: FieldElement) -> "Matrix":
        F = a.params
        return cls.from_rows(F, [[a, b], [c, d]])

    # ── 성분 ──
    @property
    def a(self) -> FieldElement:
        return FieldElement(self.ents[0], self.params)

    @property
    def b(self) -> FieldElement:
        return FieldElement(self.ents[1], self.params)

    @property
    def c(self) -> FieldElement:
        return FieldElement(self.ents[2], self.params)

    @property
    def d(self) -> FieldElement:
        return FieldElement(self.ents[3], self.params)

    def rows(self) -> list[list[FieldElement]]:
        return [[self.a, self.b], [self.c, self.d]]

    # ── matrix_arith ──
    def __matmul__(self, other: "Matrix") -> "Matrix":
        F = self.params
        add, mul = F.add_int, F.mul_int
        a, b, c, d = self.ents
        e, f, g, h = other.ents
        return Matrix(F, (
            add(mul(a, e), mul(b, g)),
            add(mul(a, f), mul(b, h)),
            add(mul(c, e), mul(d, g)),
            add(mul(c, f), mul(d, h)),
        ))

    def det(self) -> FieldElement:
        F = self.params
        a, b, c, d = self.ents
        return FieldElement(F.sub_int(F.mul_int(a, d), F.mul_int(b, c)), F)

    def trace(self) -> FieldElement:
        return FieldElement(self.params.add_int(self.ents[0], self.ents[3]), self.params)

    def transpose(self) -> "Matrix":
        a, b, c, d = self.ents
        return Matrix(self.params, (a, c, b, d))

    def adjugate(self) -> "Matrix":
        F = self.params
        a, b, c, d = self.ents
        return Matrix(F, (d, F.neg_int(b), F.neg_int(c), a))

    def inverse(self) -> "Matrix":
        det = self.det()
        if det.value == 0:
            raise MatrixError(f"singular matrix {self}")
        adj = self.adjugate()
        if det.value == 1:
            return adj
        return adj.scaled(det.inverse())

    def scaled(self, k: Entry) -> "Matrix":
        F = self.params
        kv = F.coerce(k).value
        return Matrix(F, tuple(F.mul_int(kv, x) for x in self.ents))  # type: ignore[arg-type]

    def __add__(self, other: "Matrix") -> "Matrix":
        F = self.params
        return Matrix(F, tuple(F.add_int(x, y) for x, y in zip(self.ents, other.ents)))  # type: ignore[arg-type]

    def __sub__(self, other: "Matrix") -> "Matrix":
        F = self.params
        return Matrix(F, tuple(F.sub_int(x, y) for x, y in zip(self.ents, other.ents)))  # type: ignore[arg-type]

    def __neg__(self) -> "Matrix":
        F = self.params
        return Matrix(F, tuple(F.neg_int(x) for x in self.ents))  # type: ignore[arg-type]

    def apply(self, v: tuple[int, int]) -> tuple[int, int]:
        """M·v (value 인코딩 벡터)"""
        F = self.params
        add, mul = F.add_int, F.mul_int
        a, b, c, d = self.ents
        return add(mul(a, v[0]), mul(b, v[1])), add(mul(c, v[0]), mul(d, v[1]))

    # ── 판정 ──
    def is_identity(self) -> bool:
        return self.ents == (1, 0, 0, 1)

    def is_plus_minus_identity(self) -> bool:
        a, b, c, d = self.ents
        return b == 0 and c == 0 and a == d and self.params.mul_int(a, a) == 1

    def is_sl2(self) -> bool:
        return self.det().value == 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.ents == other.ents and (self.params is other.params or self.params == other.params)

    def __hash__(self) -> int:
        return hash(self.ents)

    def __str__(self) -> str:
        a, b, c, d = (str(x) for x in (self.a, self.b, self.c, self.d))
        if self.params.n > 1:
            a, b, c, d = (f"({x})" for x in (a, b, c, d))
        return f"[{a},{b};{c},{d}]"

    __repr__ = __str__


def identity(params: FieldParams) -> Matrix:
    return Matrix(params, (1, 0, 0, 1))


def parse_matrix(params: FieldParams, text: str) -> Matrix:
    """'[a,b;c,d]' (소체) 또는 '[(c0,..),(..);(..),(..)]' (확대체)"""
    body = text.strip().lstrip("[").rstrip("]")
    if params.n > 1:
        parts = re.findall(r"\(([^)]*)\)", body)
    else:
        parts = [t for row in body.split(";") for t in row.split(",")]
    if len(parts) != 4:
        raise MatrixError(f"cannot parse matrix text {text!r}")
    a, b, c, d = (parse_element(params, t) for t in parts)
    return Matrix.from_elements(a, b, c, d)


def mul(M: Matrix, N: Matrix, counter: Counter | None = None) -> Matrix:
    """SL₂ 곱. work counter 를 올리는 유일한 연산."""
    if counter is not None:
        counter.add(1)
    return M @ N


def matrix_pow(M: Matrix, k: int, counter: Counter | None = None) -> Matrix:
    if k < 0:
        M, k = M.inverse(), -k
    result = identity(M.params)
    first = True
    base = M
    while k:
        if k & 1:
            result = base if first else mul(result, base, counter)
            first = False
        k >>= 1
        if k:
            base = mul(base, base, counter)
    return result


def conjugate(M: Matrix, P: Matrix) -> Matrix:
    """P⁻¹·M·P (셋업, 카운트 없음)"""
    return P.inverse() @ M @ P


def assert_sl2(*mats: Matrix) -> None:
    for M in mats:
        if not M.is_sl2():
            raise MatrixError(f"det {M} = {M.det()} ≠ 1")


# ────────────────────────────────────────────────────────────
# shape / commute
# ────────────────────────────────────────────────────────────
class Shape:
    PLUS_MINUS_IDENTITY = "PlusMinusIdentity"
    DIAGONAL = "Diagonal"
    UPPER_TRIANGULAR = "UpperTriangular"
    GENERAL = "General"


def shape_of(M: Matrix) -> str:
    if M.ents[2] != 0:
        return Shape.GENERAL
    if M.ents[1] != 0:
        return Shape.UPPER_TRIANGULAR
    if M.is_plus_minus_identity():
        return Shape.PLUS_MINUS_IDENTITY
    return Shape.DIAGONAL


def in_unipotent(M: Matrix) -> bool:
    """𝒦: 단위 상삼각"""
    a, _, c, d = M.ents
    return c == 0 and a == 1 and d == 1


def commutes(M: Matrix, N: Matrix) -> bool:
    return M @ N == N @ M


# ────────────────────────────────────────────────────────────
# 벡터 헬퍼
# ────────────────────────────────────────────────────────────
Vec = tuple[int, int]


def _normalize(F: FieldParams, v: Vec) -> Vec:
    """첫 번째 0 아닌 좌표를 1 로"""
    lead = v[0] if v[0] else v[1]
    k = F.inv_int(lead)
    return F.mul_int(k, v[0]), F.mul_int(k, v[1])


def _parallel(F: FieldParams, u: Vec, v: Vec) -> bool:
    return F.sub_int(F.mul_int(u[0], v[1]), F.mul_int(u[1], v[0])) == 0


def _complete(F: FieldParams, v: Vec) -> Matrix:
    """첫 열이 v 인 det 1 행렬"""
    v1, v2 = v
    if v1:
        return Matrix(F, (v1, 0, v2, F.inv_int(v1)))
    return Matrix(F, (0, F.neg_int(F.inv_int(v2)), v2, 0))


def _eigvec(M: Matrix, lam: FieldElement) -> Vec:
    F = M.params
    a, b, c, d = M.ents
    lv = lam.value
    if c:
        return F.sub_int(lv, d), c
    if b:
        return b, F.sub_int(lv, a)
    return (1, 0) if lv == a else (0, 1)


def _eigenlines(M: Matrix) -> list[Vec] | None:
    """고유직선 목록 (정규화). 스칼라 행렬이면 None (모든 벡터)."""
    a, b, c, d = M.ents
    if b == 0 and c == 0 and a == d:
        return None
    roots = solve_unit_quadratic(M.trace())
    if isinstance(roots, TwoRoots):
        lams = [roots.lam, roots.lam_inv]
    elif isinstance(roots, DoubleRoot):
        lams = [roots.lam]
    else:
        lams = []
    F = M.params
    lines: list[Vec] = []
    for lam in lams:
        v = _normalize(F, _eigvec(M, lam))
        if v not in lines:
            lines.append(v)
    return lines


# ────────────────────────────────────────────────────────────
# 결과 타입
# ────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class Split:
    lam: FieldElement
    P: Matrix


@dataclass(frozen=True)
class NotSplit:
    pass


@dataclass(frozen=True)
class RationalForm:
    P: Matrix
    xi0: FieldElement
    xi1: FieldElement


@dataclass(frozen=True)
class Triangularizable:
    P: Matrix


@dataclass(frozen=True)
class Degenerate:
    pass


@dataclass(frozen=True)
class TransposePairForm:
    P: Matrix
    C: Matrix


@dataclass(frozen=True)
class Alternating:
    pass


@dataclass(frozen=True)
class NoSolution:
    pass


@dataclass(frozen=True)
class Symmetric:
    pass


# ────────────────────────────────────────────────────────────
# eigen_split / rational_form / common_eigenvector
# ────────────────────────────────────────────────────────────
def eigen_split(M: Matrix) -> Split | NotSplit:
    if M.is_plus_minus_identity():
        raise MatrixError("eigen_split of ±I: every vector is an eigenvector")
    roots = solve_unit_quadratic(M.trace())
    if not isinstance(roots, TwoRoots):
        return NotSplit()
    F = M.params
    v = _eigvec(M, roots.lam)
    w = _eigvec(M, roots.lam_inv)
    Q = Matrix(F, (v[0], w[0], v[1], w[1]))
    k = Q.det().inverse().value
    P = Matrix(F, (F.mul_int(k, v[0]), w[0], F.mul_int(k, v[1]), w[1]))
    D = conjugate(M, P)
    if D.ents != (roots.lam.value, 0, 0, roots.lam_inv.value):
        raise MatrixError(f"eigen_split postcondition failed for {M}")
    return Split(roots.lam, P)


def rational_form(A0: Matrix, A1: Matrix) -> RationalForm | Triangularizable | Degenerate:
    """det(A₀−A₁) = 0 인 쌍을 [[ξᵢ, −1], [1, 0]] 꼴로 동시 켤레"""
    F = A0.params
    D = A0 - A1
    if D.det().value != 0:
        raise PreconditionError("rational_form requires det(A0 − A1) = 0")
    adj = D.adjugate().ents
    col1, col2 = (adj[0], adj[2]), (adj[1], adj[3])
    if col1 != (0, 0):
        v = col1
    elif col2 != (0, 0):
        v = col2
    else:
        return Degenerate()
    v = _normalize(F, v)
    u = A0.apply(v)
    if _parallel(F, u, v):
        return Triangularizable(_complete(F, v))

    Q = Matrix(F, (F.neg_int(u[0]), v[0], F.neg_int(u[1]), v[1]))
    xi0, xi1 = A0.trace(), A1.trace()
    minus_one = F.neg_int(1)
    for A, xi in ((A0, xi0), (A1, xi1)):
        if conjugate(A, Q).ents != (xi.value, minus_one, 1, 0):
            raise MatrixError("rational_form postcondition failed")
    return RationalForm(Q, xi0, xi1)


def common_eigenvector(B0: Matrix, B1: Matrix) -> Matrix | None:
    """공통 고유벡터가 있으면 두 행렬을 동시에 상삼각화하는 P, 없으면 None"""
    F = B0.params
    lines0 = _eigenlines(B0)
    lines1 = _eigenlines(B1)
    if lines0 is None and lines1 is None:
        return identity(F)
    if lines0 is None:
        return _complete(F, lines1[0]) if lines1 else None  # type: ignore[index]
    for v in lines0:
        if lines1 is None or _parallel(F, B1.apply(v), v):
            return _complete(F, v)
    return None


# ────────────────────────────────────────────────────────────
# 선형계 (F_q)
# ────────────────────────────────────────────────────────────
def nullspace(rows: list[list[FieldElement]], ncols: int) -> list[list[FieldElement]]:
    """동차 선형계의 해공간 기저 (RREF)"""
    if not rows:
        F = None
    else:
        F = rows[0][0].params
    m = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][col].value), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv_p = m[r][col].inverse()
        m[r] = [x * inv_p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col].value:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
        if r == len(m):
            break
    basis = []
    assert F is not None
    for free in (c for c in range(ncols) if c not in pivots):
        vec = [F.zero] * ncols
        vec[free] = F.one
        for i, pc in enumerate(pivots):
            vec[pc] = -m[i][free]
        basis.append(vec)
    return basis


# ────────────────────────────────────────────────────────────
# char 2: transpose-pair / orthogonal intertwiner
# ────────────────────────────────────────────────────────────
def _factor_symmetric(F: FieldParams, s1: FieldElement, s2: FieldElement, s3: FieldElement) -> Matrix:
    """det 1 인 대칭 S 를 S = P·Pᵀ (det P = 1) 로 분해. char 2 제곱근은 유일."""
    u, w = sqrt(s1), sqrt(s3)
    assert u is not None and w is not None
    if u.value:
        t = s2 / u
        return Matrix.from_elements(u, F.zero, t, t + w)
    t = s2 / w
    return Matrix.from_elements(t, t, F.zero, w)


def transpose_pair_form(B0: Matrix, B1: Matrix) -> TransposePairForm | Alternating | NoSolution:
    F = B0.params
    if F.p != 2:
        raise PreconditionError("transpose_pair_form is only defined for q = 2^n")
    if B0.trace() != B1.trace():
        raise PreconditionError("transpose_pair_form needs tr B0 = tr B1")

    a, b, c, d = B0.a, B0.b, B0.c, B0.d
    e, f, g, h = B1.a, B1.b, B1.c, B1.d
    # S·B₀ᵀ − B₁·S = 0,  S = [[s1, s2], [s2, s3]]
    rows = [
        [a - e, b - f, F.zero],
        [c, d - e, -f],
        [-g, a - h, b],
        [F.zero, c - g, d - h],
    ]
    basis = nullspace(rows, 3)
    if not basis:
        return NoSolution()

    candidates = list(basis)
    small = [F.from_int(v) for v in range(1, min(F.q, 17))]
    for i, bi in enumerate(basis):
        for j, bj in enumerate(basis):
            if i != j:
                candidates.extend([[x + k * y for x, y in zip(bi, bj)] for k in small])

    for s1, s2, s3 in candidates:
        if s1.value == 0 and s3.value == 0:
            continue
        det_s = s1 * s3 - s2 * s2
        if det_s.value == 0:
            continue
        k = sqrt(det_s.inverse())
        assert k is not None
        P = _factor_symmetric(F, k * s1, k * s2, k * s3)
        C = conjugate(B0, P)
        if P.is_sl2() and conjugate(B1, P) == C.transpose():
            return TransposePairForm(P, C)
        logger.warning("transpose_pair_form: 후보 S 검증 실패 | S=(%s,%s,%s)", s1, s2, s3)

    if all(v[0].value == 0 and v[2].value == 0 for v in basis):
        return Alternating()
    return NoSolution()


def orthogonal_intertwiner(C: Matrix) -> Matrix | Symmetric:
    """C·E = E·Cᵀ 를 만족하는 E = [[α+1, α], [α, α+1]]"""
    F = C.params
    if F.p != 2:
        raise PreconditionError("orthogonal_intertwiner is only defined for q = 2^n")
    Ct = C.transpose()
    if C == Ct:
        return Symmetric()
    J = Matrix(F, (1, 1, 1, 1))
    K = (J @ Ct) - (C @ J)
    R = C - Ct
    idx = next((i for i, x in enumerate(K.ents) if x), None)
    if idx is None:
        raise IntertwinerError(f"no α solves C·E = E·Cᵀ for C={C}")
    alpha = FieldElement(R.ents[idx], F) / FieldElement(K.ents[idx], F)
    if K.scaled(alpha) != R:
        raise IntertwinerError(f"inconsistent α for C={C}")
    E = identity(F) + J.scaled(alpha)
    I = identity(F)
    if not (E.transpose() @ E == I and E @ E == I and C @ E == E @ Ct):
        raise IntertwinerError("orthogonal_intertwiner postcondition failed")
    return E


# ────────────────────────────────────────────────────────────
# 군 원소 유틸
# ────────────────────────────────────────────────────────────
def element_order(M: Matrix) -> int:
    """SL₂(F_q) 원소의 위수 (q−1, q+1, 2p 중 하나의 약수)"""
    F = M.params
    best: int | None = None
    for N in (F.q - 1, F.q + 1, 2 * F.p):
        if N <= 0 or not matrix_pow(M, N).is_identity():
            continue
        for r in sympy.factorint(N):
            while N % r == 0 and matrix_pow(M, N // r).is_identity():
                N //= r
        best = N if best is None else min(best, N)
    if best is None:
        raise MatrixError(f"{M} is not in SL2")
    return best


def random_sl2(params: FieldParams, rng: np.random.Generator) -> Matrix:
    """SL₂(F_q) 균등 샘플: 첫 열 ≠ 0 을 고른 뒤 완성"""
    while True:
        a, c = sample(params, rng), sample(params, rng)
        if a.value or c.value:
            break
    if a.value:
        b = sample(params, rng)
        d = (b * c + 1) / a
    else:
        d = sample(params, rng)
        b = -(c.inverse())
    return Matrix.from_elements(a, b, c, d)


def enumerate_sl2(params: FieldParams) -> Iterator[Matrix]:
    """작은 q 전용: SL₂(F_q) 전체 (결정적 순서)"""
    F = params
    elems = list(F.elements())
    for a in elems:
        for b in elems:
            for c in elems:
                if a.value:
                    yield Matrix.from_elements(a, b, c, (b * c + 1) / a)
                elif (b * c).value == F.neg_int(1):
                    for d in elems:
                        yield Matrix.from_elements(a, b, c, d)
