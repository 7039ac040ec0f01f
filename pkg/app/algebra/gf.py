"""
app.algebra.gf
--------------
GF(p^n) 산술.

• 원소는 계수 벡터 (c₀ … c_{n−1}) 를 base-p 정수 Σ cᵢ·pⁱ 로 인코딩한 값(value)으로 보관합니다.
  이 값이 곧 정렬·해시·distinguished-point 판정에 쓰이는 정규 키입니다.
• p = 2 는 carry-less 곱, n = 1 은 mod p 직접 연산, 그 외는 계수 리스트 곱을 씁니다.
• q ≤ LOG_TABLE_MAX_Q 이고 n > 1 이면 exp/log 테이블로 곱셈·역원을 가속합니다 (결과 동일).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence, Union

import numpy as np
import sympy

from app.core.config import settings
from app.core.exceptions import FieldDivisionError, FieldError, FieldTooLargeError
from app.core.logging_config import get_logger

logger = get_logger("sl2c.gf")

_X = sympy.Symbol("x")

# ────────────────────────────────────────────────────────────
# 정수 ↔ 계수 벡터
# ────────────────────────────────────────────────────────────
def _digits(value: int, p: int, n: int) -> list[int]:
    out = []
    for _ in range(n):
        value, r = divmod(value, p)
        out.append(r)
    return out


def _undigits(coeffs: Sequence[int], p: int) -> int:
    value = 0
    for c in reversed(coeffs):
        value = value * p + c
    return value


def _is_irreducible(coeffs: Sequence[int], p: int) -> bool:
    """coeffs = (c₀, …, c_n), monic. sympy 의 GF(p) 다항식 기약성 판정 사용."""
    n = len(coeffs) - 1
    if n == 1:
        return True
    if coeffs[0] == 0:
        return False                      # x 로 나누어떨어짐
    return bool(sympy.Poly(list(reversed(coeffs)), _X, modulus=p).is_irreducible)


# ────────────────────────────────────────────────────────────
# FieldParams
# ────────────────────────────────────────────────────────────
class FieldParams:
    """GF(p^n) 파라미터. make_field() 로만 생성 (동일 필드는 동일 객체)."""

    __slots__ = (
        "p", "n", "modulus", "_q", "_mod_int", "_exp", "_log", "_primitive",
        "add_int", "sub_int", "neg_int", "mul_int", "inv_int",
    )

    def __init__(self, p: int, n: int, modulus: tuple[int, ...]):
        self.p = p
        self.n = n
        self.modulus = modulus
        self._q = p ** n
        self._mod_int = _undigits(modulus, 2) if p == 2 else 0
        self._exp: list[int] | None = None
        self._log: list[int] | None = None
        self._primitive: int | None = None

        if n == 1:
            self.add_int = self._add_prime
            self.sub_int = self._sub_prime
            self.neg_int = self._neg_prime
            self.mul_int = self._mul_prime
            self.inv_int = self._inv_prime
        elif p == 2:
            self.add_int = self._xor
            self.sub_int = self._xor
            self.neg_int = self._identity
            self.mul_int = self._mul_binary
            self.inv_int = self._inv_pow
        else:
            self.add_int = self._add_poly
            self.sub_int = self._sub_poly
            self.neg_int = self._neg_poly
            self.mul_int = self._mul_poly
            self.inv_int = self._inv_pow

    # ── 기본 속성 ──
    @property
    def q(self) -> int:
        return self._q

    @property
    def bits(self) -> float:
        """lg q"""
        return self.n * math.log2(self.p)

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, FieldParams):
            return NotImplemented
        return (self.p, self.n, self.modulus) == (other.p, other.n, other.modulus)

    def __hash__(self) -> int:
        return hash((self.p, self.n, self.modulus))

    def __reduce__(self):
        # exp/log 테이블은 직렬화하지 않고 수신 측에서 다시 만든다
        return (make_field, (self.p, self.n, self.modulus))

    def __repr__(self) -> str:
        return f"FieldParams(p={self.p}, n={self.n}, modulus={list(self.modulus)})"

    # ── 원소 생성 ──
    @property
    def zero(self) -> "FieldElement":
        return FieldElement(0, self)

    @property
    def one(self) -> "FieldElement":
        return FieldElement(1, self)

    def from_int(self, value: int) -> "FieldElement":
        """value 인코딩 (Σ cᵢ pⁱ) → 원소"""
        if not 0 <= value < self._q:
            raise FieldError(f"value {value} outside [0, {self._q})")
        return FieldElement(value, self)

    def element(self, coeffs: Sequence[int]) -> "FieldElement":
        if len(coeffs) != self.n:
            raise FieldError(f"expected {self.n} coefficients, got {len(coeffs)}")
        return FieldElement(_undigits([c % self.p for c in coeffs], self.p), self)

    def scalar(self, k: int) -> "FieldElement":
        """정수 k 의 소체 임베딩 (k mod p)"""
        return FieldElement(k % self.p, self)

    def coerce(self, x: Union["FieldElement", int]) -> "FieldElement":
        """FieldElement 는 그대로, 정수는 소체 임베딩 (value 인코딩은 from_int)"""
        if isinstance(x, FieldElement):
            if x.params is not self and x.params != self:
                raise FieldError("element belongs to a different field")
            return x
        if isinstance(x, (int, np.integer)):
            return self.scalar(int(x))
        raise FieldError(f"cannot coerce {type(x).__name__} into GF({self.p}^{self.n})")

    def elements(self) -> Iterator["FieldElement"]:
        for v in range(self._q):
            yield FieldElement(v, self)

    # ── 정수 수준 연산: n = 1 ──
    def _add_prime(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def _sub_prime(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def _neg_prime(self, a: int) -> int:
        return (-a) % self.p

    def _mul_prime(self, a: int, b: int) -> int:
        return a * b % self.p

    def _inv_prime(self, a: int) -> int:
        if a == 0:
            raise FieldDivisionError("inverse of zero")
        return pow(a, -1, self.p)

    # ── 정수 수준 연산: p = 2 ──
    @staticmethod
    def _xor(a: int, b: int) -> int:
        return a ^ b

    @staticmethod
    def _identity(a: int) -> int:
        return a

    def _mul_binary(self, a: int, b: int) -> int:
        r = 0
        top = 1 << self.n
        m = self._mod_int
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
            if a & top:
                a ^= m
        return r

    # ── 정수 수준 연산: 일반 p^n ──
    def _add_poly(self, a: int, b: int) -> int:
        p = self.p
        r, m = 0, 1
        while a or b:
            a, x = divmod(a, p)
            b, y = divmod(b, p)
            r += ((x + y) % p) * m
            m *= p
        return r

    def _neg_poly(self, a: int) -> int:
        p = self.p
        r, m = 0, 1
        while a:
            a, x = divmod(a, p)
            r += ((p - x) % p) * m
            m *= p
        return r

    def _sub_poly(self, a: int, b: int) -> int:
        return self._add_poly(a, self._neg_poly(b))

    def _mul_poly(self, a: int, b: int) -> int:
        p, n, mod = self.p, self.n, self.modulus
        da, db = _digits(a, p, n), _digits(b, p, n)
        prod = [0] * (2 * n - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    if y:
                        prod[i + j] += x * y
        # x^n ≡ −(c₀ + c₁x + … + c_{n−1}x^{n−1})
        for k in range(2 * n - 2, n - 1, -1):
            c = prod[k] % p
            if c:
                base = k - n
                for i in range(n):
                    if mod[i]:
                        prod[base + i] -= c * mod[i]
        return _undigits([c % p for c in prod[:n]], p)

    def _inv_pow(self, a: int) -> int:
        if a == 0:
            raise FieldDivisionError("inverse of zero")
        return self.pow_int(a, self._q - 2)

    # ── exp/log 테이블 ──
    def _mul_table(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self._exp[self._log[a] + self._log[b]]  # type: ignore[index]

    def _inv_table(self, a: int) -> int:
        if a == 0:
            raise FieldDivisionError("inverse of zero")
        return self._exp[self._q - 1 - self._log[a]]  # type: ignore[index]

    def _build_tables(self) -> None:
        g = self.primitive_int()
        order = self._q - 1
        exp = [0] * (2 * order)
        log = [-1] * self._q
        cur = 1
        for i in range(order):
            exp[i] = cur
            log[cur] = i
            cur = self.mul_int(cur, g)
        for i in range(order, 2 * order):
            exp[i] = exp[i - order]
        self._exp, self._log = exp, log
        self.mul_int = self._mul_table
        self.inv_int = self._inv_table
        logger.debug("exp/log 테이블 생성 | q=%d", self._q)

    # ── 거듭제곱 / 원시원 ──
    def pow_int(self, a: int, k: int) -> int:
        if a == 0:
            if k > 0:
                return 0
            if k == 0:
                return 1
            raise FieldDivisionError("negative power of zero")
        order = self._q - 1
        if self._log is not None:
            return self._exp[(self._log[a] * k) % order]  # type: ignore[index]
        if self.n == 1:
            return pow(a, k % order, self.p)
        k %= order
        result = 1
        mul = self.mul_int
        while k:
            if k & 1:
                result = mul(result, a)
            a = mul(a, a)
            k >>= 1
        return result

    def primitive_int(self) -> int:
        """정규 원시원: order = q−1 인 원소 중 value 가 가장 작은 것"""
        if self._primitive is None:
            order = self._q - 1
            primes = list(sympy.factorint(order)) if order > 1 else []
            for v in range(1, self._q):
                if all(self.pow_int(v, order // r) != 1 for r in primes):
                    self._primitive = v
                    break
        return self._primitive  # type: ignore[return-value]


# ────────────────────────────────────────────────────────────
# FieldElement
# ────────────────────────────────────────────────────────────
class FieldElement:
    """불변 값 객체. value 는 base-p 인코딩 정수."""

    __slots__ = ("value", "params")

    def __init__(self, value: int, params: FieldParams):
        self.value = value
        self.params = params

    @property
    def coeffs(self) -> list[int]:
        return _digits(self.value, self.params.p, self.params.n)

    def _v(self, other: Union["FieldElement", int]) -> int:
        if isinstance(other, FieldElement):
            if other.params is not self.params and other.params != self.params:
                raise FieldError("mismatched fields")
            return other.value
        return self.params.coerce(other).value

    # ── arith ──
    def __add__(self, other):
        return FieldElement(self.params.add_int(self.value, self._v(other)), self.params)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.params.sub_int(self.value, self._v(other)), self.params)

    def __rsub__(self, other):
        return FieldElement(self.params.sub_int(self._v(other), self.value), self.params)

    def __mul__(self, other):
        return FieldElement(self.params.mul_int(self.value, self._v(other)), self.params)

    __rmul__ = __mul__

    def __truediv__(self, other):
        b = self._v(other)
        if b == 0:
            raise FieldDivisionError("division by zero")
        return FieldElement(self.params.mul_int(self.value, self.params.inv_int(b)), self.params)

    def __rtruediv__(self, other):
        return self.params.coerce(other) / self

    def __neg__(self):
        return FieldElement(self.params.neg_int(self.value), self.params)

    def __pow__(self, k: int):
        return FieldElement(self.params.pow_int(self.value, int(k)), self.params)

    def inverse(self) -> "FieldElement":
        return FieldElement(self.params.inv_int(self.value), self.params)

    # ── 비교 / 변환 ──
    def is_zero(self) -> bool:
        return self.value == 0

    def __bool__(self) -> bool:
        return self.value != 0

    def __eq__(self, other: object) -> bool:
        if isinstance(other, FieldElement):
            return self.value == other.value and (
                self.params is other.params or self.params == other.params
            )
        if isinstance(other, int):
            return self.value == self.params.coerce(other).value
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.value)

    def __lt__(self, other: object) -> bool:
        if isinstance(other, FieldElement):
            return self.value < other.value
        return NotImplemented

    def __int__(self) -> int:
        return self.value

    def __str__(self) -> str:
        if self.params.n == 1:
            return str(self.value)
        return ",".join(str(c) for c in self.coeffs)

    def __repr__(self) -> str:
        return f"GF({self.params.p}^{self.params.n})<{self}>"


def power(a: FieldElement, k: int) -> FieldElement:
    """square-and-multiply (k < 0 은 역원 경유)"""
    return a ** k


def inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def parse_element(params: FieldParams, text: str) -> FieldElement:
    parts = [t for t in text.strip().strip("()").split(",") if t.strip()]
    if params.n == 1 and len(parts) == 1:
        return params.scalar(int(parts[0]))
    return params.element([int(t) for t in parts])


# ────────────────────────────────────────────────────────────
# make_field
# ────────────────────────────────────────────────────────────
@lru_cache(maxsize=None)
def _make_field(p: int, n: int, modulus: tuple[int, ...] | None) -> FieldParams:
    if modulus is None:
        for k in range(p ** n):
            cand = tuple(_digits(k, p, n)) + (1,)
            if _is_irreducible(cand, p):
                modulus = cand
                break
    elif not _is_irreducible(modulus, p):
        raise FieldError(f"modulus {list(modulus)} is reducible over Z_{p}")

    params = FieldParams(p, n, modulus)  # type: ignore[arg-type]
    if n > 1 and params.q <= settings.LOG_TABLE_MAX_Q:
        params._build_tables()
    logger.debug("필드 생성 | p=%d n=%d modulus=%s", p, n, list(params.modulus))
    return params


def make_field(p: int, n: int = 1, modulus: Sequence[int] | None = None) -> FieldParams:
    """
    GF(p^n) 파라미터 생성.

    modulus 미지정 시 (c₀, …, c_{n−1}) 의 base-p 값 Σ cᵢpⁱ 가 최소인 monic 기약다항식을 사용.
    동일 인자에 대해서는 캐시된 동일 객체를 돌려준다.
    """
    p, n = int(p), int(n)
    if n < 1:
        raise FieldError(f"degree n must be ≥ 1 (got {n})")
    if p < 2 or not sympy.isprime(p):
        raise FieldError(f"p={p} is not prime")
    if n * math.log2(p) > settings.FIELD_MAX_BITS:
        raise FieldTooLargeError(
            f"GF({p}^{n}) exceeds FIELD_MAX_BITS={settings.FIELD_MAX_BITS}"
        )
    mod: tuple[int, ...] | None = None
    if modulus is not None:
        mod = tuple(int(c) for c in modulus)
        if len(mod) != n + 1 or mod[-1] != 1:
            raise FieldError(f"modulus must be monic of degree {n}: {list(mod)}")
        if any(not 0 <= c < p for c in mod):
            raise FieldError(f"modulus coefficients must lie in [0, {p})")
    return _make_field(p, n, mod)


# ────────────────────────────────────────────────────────────
# 제곱근 · 단위 이차방정식
# ────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class TwoRoots:
    lam: FieldElement
    lam_inv: FieldElement


@dataclass(frozen=True)
class DoubleRoot:
    lam: FieldElement


@dataclass(frozen=True)
class Irreducible:
    pass


QuadraticRoots = Union[TwoRoots, DoubleRoot, Irreducible]


def sqrt(a: FieldElement, rng: np.random.Generator | None = None) -> FieldElement | None:
    """
    √a (없으면 None). 두 근 중 value 가 작은 쪽을 돌려준다.

    char 2 는 a^(q/2) 로 유일, q ≡ 3 (mod 4) 는 a^((q+1)/4),
    그 외는 Tonelli–Shanks (비잉여 z 는 시드 RNG 로 탐색).
    """
    F = a.params
    if a.value == 0:
        return F.zero
    q = F.q
    if F.p == 2:
        return a ** (q // 2)
    if a ** ((q - 1) // 2) != F.one:
        return None
    if q % 4 == 3:
        r = a ** ((q + 1) // 4)
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        s, Q = 0, q - 1
        while Q % 2 == 0:
            Q //= 2
            s += 1
        minus_one = -F.one
        while True:
            z = sample(F, rng)
            if z.value and z ** ((q - 1) // 2) == minus_one:
                break
        M, c, t, r = s, z ** Q, a ** Q, a ** ((Q + 1) // 2)
        while t != F.one:
            i, t2 = 0, t
            while t2 != F.one:
                t2 = t2 * t2
                i += 1
            b = c ** (1 << (M - i - 1))
            M, c = i, b * b
            t, r = t * c, r * b
    neg = -r
    return r if r.value <= neg.value else neg


def _solve_artin_schreier(F: FieldParams, c: int) -> int | None:
    """y² + y = c (char 2) 를 계수 기저 위 F₂-선형계로 푼다. 해가 없으면 None."""
    n = F.n
    images = [F.mul_int(1 << i, 1 << i) ^ (1 << i) for i in range(n)]
    basis: dict[int, tuple[int, int]] = {}           # pivot bit -> (row mask, rhs)
    for r in range(n):
        mask = 0
        for i in range(n):
            if images[i] >> r & 1:
                mask |= 1 << i
        rhs = c >> r & 1
        for pb, (bm, br) in basis.items():
            if mask >> pb & 1:
                mask ^= bm
                rhs ^= br
        if mask == 0:
            if rhs:
                return None
            continue
        pb = mask.bit_length() - 1
        for k, (bm, br) in list(basis.items()):
            if bm >> pb & 1:
                basis[k] = (bm ^ mask, br ^ rhs)
        basis[pb] = (mask, rhs)
    y = 0
    for pb, (_, br) in basis.items():
        if br:
            y |= 1 << pb
    return y


def solve_unit_quadratic(t: FieldElement, rng: np.random.Generator | None = None) -> QuadraticRoots:
    """x² − t·x + 1 = 0 의 F_q 근 분류"""
    F = t.params
    one = F.one
    if F.p == 2:
        if t.value == 0:
            return DoubleRoot(one)
        c = (t * t).inverse()
        y = _solve_artin_schreier(F, c.value)
        if y is None:
            return Irreducible()
        lam = t * FieldElement(y, F)
        return TwoRoots(lam, lam + t)

    disc = t * t - 4
    if disc.value == 0:
        return DoubleRoot(t / 2)
    s = sqrt(disc, rng)
    if s is None:
        return Irreducible()
    return TwoRoots((t + s) / 2, (t - s) / 2)


# ────────────────────────────────────────────────────────────
# 이산로그 / 샘플링
# ────────────────────────────────────────────────────────────
def element_order(a: FieldElement) -> int:
    if a.value == 0:
        raise FieldError("zero has no multiplicative order")
    F = a.params
    order = F.q - 1
    for r, e in sympy.factorint(order).items():
        for _ in range(e):
            if F.pow_int(a.value, order // r) == 1:
                order //= r
            else:
                break
    return order


def primitive_element(params: FieldParams) -> FieldElement:
    return FieldElement(params.primitive_int(), params)


def discrete_log(base: FieldElement, target: FieldElement) -> int | None:
    """
    base^e = target 인 최소 e ≥ 0 (baby-step / giant-step).
    target 이 ⟨base⟩ 밖이면 None.
    """
    F = base.params
    if base.value == 0 or target.value == 0:
        raise FieldError("discrete_log needs nonzero base and target")
    if F.q - 1 > settings.DLOG_MAX_ORDER:
        raise FieldTooLargeError(f"q−1 = {F.q - 1} exceeds DLOG_MAX_ORDER")
    order = F.q - 1
    m = math.isqrt(order - 1) + 1 if order > 1 else 1
    mul = F.mul_int
    table: dict[int, int] = {}
    cur = 1
    for j in range(m):
        table.setdefault(cur, j)
        cur = mul(cur, base.value)
    giant = F.inv_int(F.pow_int(base.value, m))
    gamma = target.value
    for i in range(m + 1):
        j = table.get(gamma)
        if j is not None:
            return i * m + j
        gamma = mul(gamma, giant)
    return None


def sample(params: FieldParams, rng: np.random.Generator) -> FieldElement:
    """F_q 위 균등 샘플 (시드 결정적)"""
    if params.q < (1 << 62):
        return FieldElement(int(rng.integers(0, params.q)), params)
    coeffs = rng.integers(0, params.p, size=params.n)
    return FieldElement(_undigits([int(c) for c in coeffs], params.p), params)
