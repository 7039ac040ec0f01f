"""
app.algebra.words
-----------------
비트열, 준동형 해시 h_A, 역순(reversal) 법칙, 코셋/교환 코드, 가중 길이 열거기.

• 단어는 내부적으로 '0'/'1'/'2' 로 된 str 로 다루고, 외부 API 에서는 Word 로 감쌀 수 있습니다.
• 코드값은 FieldElement 또는 INF(사영점 ∞) 입니다. 둘 다 dict 키로 바로 쓸 수 있습니다.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import total_ordering
from typing import Iterator, Mapping, NamedTuple, Union

from app.algebra.gf import FieldElement
from app.algebra.sl2 import Counter, Matrix, assert_sl2, identity, mul
from app.core.constants import INF_TOKEN
from app.core.exceptions import MatrixError, PreconditionError

# ────────────────────────────────────────────────────────────
# 사영점 ∞
# ────────────────────────────────────────────────────────────
@total_ordering
class _Infinity:
    """모든 체 원소보다 뒤에 정렬되는 단일 객체"""

    _instance: "_Infinity | None" = None

    def __new__(cls) -> "_Infinity":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __eq__(self, other: object) -> bool:
        return other is self

    def __lt__(self, other: object) -> bool:
        return False

    def __hash__(self) -> int:
        return hash(INF_TOKEN)

    def __str__(self) -> str:
        return INF_TOKEN

    __repr__ = __str__

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()

ProjectiveValue = Union[FieldElement, _Infinity]


def code_key(code: ProjectiveValue, q: int) -> int:
    """코드 → 정수 키 (∞ 는 q). distinguished point 판정에 사용."""
    return q if code is INF else code.value  # type: ignore[union-attr]


# ────────────────────────────────────────────────────────────
# Word / GeneratorPair
# ────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class Word:
    symbols: str
    alphabet: int = 2

    def __post_init__(self) -> None:
        allowed = "012"[: self.alphabet]
        if self.alphabet not in (2, 3) or any(s not in allowed for s in self.symbols):
            raise ValueError(f"word {self.symbols!r} is not over {{{','.join(allowed)}}}")

    def __str__(self) -> str:
        return self.symbols

    def __len__(self) -> int:
        return len(self.symbols)

    def __add__(self, other: "Word") -> "Word":
        return Word(self.symbols + other.symbols, max(self.alphabet, other.alphabet))

    def reverse(self) -> "Word":
        return Word(self.symbols[::-1], self.alphabet)

    def count(self, symbol: str) -> int:
        return self.symbols.count(symbol)


WordLike = Union[Word, str]


def _s(v: WordLike) -> str:
    return v.symbols if isinstance(v, Word) else v


@dataclass(frozen=True)
class GeneratorPair:
    """h_A 를 정의하는 (A₀, A₁). 세 번째 기호 '2' 는 항등원."""

    A0: Matrix
    A1: Matrix
    gens: dict[str, Matrix] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        assert_sl2(self.A0, self.A1)
        object.__setattr__(self, "gens", {"0": self.A0, "1": self.A1, "2": identity(self.A0.params)})

    @property
    def params(self):
        return self.A0.params

    def __str__(self) -> str:
        return f"({self.A0}, {self.A1})"


# ────────────────────────────────────────────────────────────
# 해시
# ────────────────────────────────────────────────────────────
def hash_word(A: GeneratorPair, v: WordLike, counter: Counter | None = None) -> Matrix:
    """왼쪽→오른쪽 곱. work 는 max(|v|−1, 0) 만큼 증가 ('2' 도 곱셈으로 센다)."""
    w = _s(v)
    if not w:
        return identity(A.params)
    gens = A.gens
    M = gens[w[0]]
    for s in w[1:]:
        M = mul(M, gens[s], counter)
    return M


def reverse_hash(M: Matrix) -> Matrix:
    """ξ-형 생성자에서 h(v) → h(v^rev) = [[α, −γ], [−β, δ]] (곱셈 없음)"""
    F = M.params
    a, b, c, d = M.ents
    return Matrix(F, (a, F.neg_int(c), F.neg_int(b), d))


# ────────────────────────────────────────────────────────────
# 코드
# ────────────────────────────────────────────────────────────
def code_T(M: Matrix) -> ProjectiveValue:
    """M·𝒯 코셋 코드 α/γ"""
    if M.ents[2] == 0:
        return INF
    return M.a / M.c


def code_T_inv(M: Matrix) -> ProjectiveValue:
    """M⁻¹·𝒯 코셋 코드 −δ/γ (역행렬 계산 없이)"""
    if M.ents[2] == 0:
        return INF
    return -M.d / M.c


def code_D(M: Matrix) -> FieldElement:
    """𝒯 안에서 M·𝒟 코셋 코드 αβ"""
    if M.ents[2] != 0:
        raise MatrixError(f"code_D needs an upper triangular matrix, got {M}")
    return M.a * M.b


def code_D_inv(M: Matrix) -> FieldElement:
    """code_D(M⁻¹) = −β·α⁻¹ (M = [[α, β], [0, α⁻¹]])"""
    if M.ents[2] != 0:
        raise MatrixError(f"code_D needs an upper triangular matrix, got {M}")
    return -M.b / M.a


def code_commute(M: Matrix) -> ProjectiveValue:
    """𝒯∖{±I} 위 교환 코드 (α − α⁻¹)/β"""
    if M.ents[2] != 0:
        raise MatrixError(f"code_commute needs an upper triangular matrix, got {M}")
    if M.is_plus_minus_identity():
        raise MatrixError("code_commute is undefined on ±I")
    if M.ents[1] == 0:
        return INF
    a = M.a
    return (a - a.inverse()) / M.b


# ────────────────────────────────────────────────────────────
# 단어 통계 / 치환 / 열거
# ────────────────────────────────────────────────────────────
class WordStats(NamedTuple):
    nu0: int
    nu1: int
    weighted_length: int


def word_stats(v: WordLike, l0: int, l1: int) -> WordStats:
    w = _s(v)
    nu0, nu1 = w.count("0"), w.count("1")
    return WordStats(nu0, nu1, nu0 * l0 + nu1 * l1)


def expand_word(v: WordLike, substitution: Mapping[str, str]) -> str:
    """기호별 치환 (C-알파벳 → {0,1} 등)"""
    return "".join(substitution[s] for s in _s(v))


def enumerate_words(alphabet: str = "01", max_len: int | None = None) -> Iterator[str]:
    """길이 우선, 길이 내 사전순"""
    level = [""]
    length = 0
    while max_len is None or length < max_len:
        level = [w + s for w in level for s in alphabet]
        length += 1
        yield from level


class FibEnumerator:
    """
    가중치 (l₀, l₁) 의 가중 길이 g·n 단어 집합 S_n 을 차례로 생성.

    S_n = {v0 : v ∈ S_{n−k₀}} ∪ {v1 : v ∈ S_{n−k₁}}  (n > k₁),
    |S_n| 은 일반화 피보나치 수열을 따른다.
    l₀ > l₁ 로 주어지면 내부적으로 가중치를 바꾸고 출력 기호를 되돌려 붙인다.
    """

    def __init__(self, l0: int, l1: int):
        if l0 < 1 or l1 < 1:
            raise PreconditionError("weights must be positive")
        if l0 == l1:
            raise PreconditionError("l0 == l1: use plain length-ordered enumeration")
        self.l0, self.l1 = l0, l1
        self._swapped = l0 > l1
        lo, hi = (l1, l0) if self._swapped else (l0, l1)
        self.g = math.gcd(lo, hi)
        self.k0, self.k1 = lo // self.g, hi // self.g
        self.n = 0
        self._levels: dict[int, list[str]] = {}

    def _relabel(self, w: str) -> str:
        return w.translate(str.maketrans("01", "10")) if self._swapped else w

    def fib_next(self) -> list[str]:
        self.n += 1
        n, k0, k1 = self.n, self.k0, self.k1
        if n <= k1:
            batch = ["0" * (n // k0)] if n % k0 == 0 else []
            if n == k1:
                batch.append("1")
        else:
            batch = [v + "0" for v in self._levels.get(n - k0, [])]
            batch += [v + "1" for v in self._levels.get(n - k1, [])]
        self._levels[n] = batch
        self._levels.pop(n - k1, None)  # 다음 단계부터는 S_{n+1−k₁} 이상만 필요
        return [self._relabel(w) for w in batch]

    def __iter__(self) -> Iterator[list[str]]:
        while True:
            yield self.fib_next()
