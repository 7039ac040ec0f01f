"""
Engine Service
==============

• 모든 공격이 공유하는 작업량 계수(WorkCounter)와 meet-in-the-middle 탐색
• 후보 스트림: tree(길이-사전순 접두사 트리) / walk(독립 균등 구간) / fib(가중 길이 순)
• 저메모리 distinguished-points 모드, 재시도 정책, joblib 병렬 모드

작업량 단위는 SL₂ 곱셈 1회이며 sl2.mul 만 카운터를 올립니다.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Literal

import numpy as np
from joblib import Parallel, delayed

from app.algebra.sl2 import Matrix, mul
from app.algebra.words import (
    FibEnumerator,
    GeneratorPair,
    ProjectiveValue,
    code_key,
    hash_word,
)
from app.core.config import settings
from app.core.exceptions import SearchExhaustedError
from app.core.logging_config import get_logger

logger = get_logger("sl2c.engine")

CodeFn = Callable[[Matrix], ProjectiveValue]
Stream = Iterator[tuple[str, Matrix]]


# ────────────────────────────────────────────────────────────
# 타입
# ────────────────────────────────────────────────────────────
class WorkCounter:
    """SL₂ 곱셈 횟수 (단조 증가)"""

    __slots__ = ("multiplications",)

    def __init__(self, multiplications: int = 0):
        self.multiplications = multiplications

    def add(self, k: int = 1) -> None:
        self.multiplications += k

    def merge(self, other: "WorkCounter | int") -> None:
        self.multiplications += other if isinstance(other, int) else other.multiplications

    def __int__(self) -> int:
        return self.multiplications

    def __repr__(self) -> str:
        return f"WorkCounter({self.multiplications})"


@dataclass
class WalkSpec:
    segment_length: int | None = None           # None → ⌈lg q / 2⌉
    alphabet: str = "01"
    seed: int = 0
    walk_c: float = field(default_factory=lambda: settings.WALK_C)
    source: Literal["tree", "walk"] = field(default_factory=lambda: settings.MITM_SOURCE)
    n_jobs: int = field(default_factory=lambda: settings.MITM_JOBS)    # > 1 → mitm_parallel

    def __post_init__(self) -> None:
        if self.segment_length is not None and self.segment_length < 1:
            raise ValueError("segment_length must be ≥ 1")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be ≥ 1")
        if self.alphabet not in ("01", "012"):
            raise ValueError(f"unsupported alphabet {self.alphabet!r}")

    def resolved_segment(self, q: int) -> int:
        if self.segment_length is not None:
            return self.segment_length
        return max(1, math.ceil(math.log2(q) / 2))


@dataclass(frozen=True)
class MitmHit:
    u: str                      # 저장돼 있던 단어
    v: str                      # 조회한 단어
    product_word: str           # v·u
    product: Matrix             # h(v·u)
    code: ProjectiveValue
    work: int


@dataclass
class MitmState:
    """중단된 탐색을 이어 가기 위한 스트림 위치와 저장소"""

    stream: Iterator[tuple[str, Matrix]]
    store: dict
    samples: int = 0


@dataclass
class MitmOutcome:
    hit: MitmHit | None         # None = Exhausted
    samples: int
    stored: int
    work: int
    state: MitmState | None = field(default=None, repr=False, compare=False)

    @property
    def exhausted(self) -> bool:
        return self.hit is None


def default_budget(q: int) -> int:
    return int(settings.MITM_BUDGET_FACTOR * math.sqrt(q)) + 64


# ────────────────────────────────────────────────────────────
# 후보 스트림
# ────────────────────────────────────────────────────────────
def walk_sample(
    A: GeneratorPair,
    spec: WalkSpec,
    rng: np.random.Generator,
    counter: WorkCounter | None = None,
) -> tuple[str, Matrix]:
    """길이 segment_length 의 균등 단어와 그 해시"""
    length = spec.resolved_segment(A.params.q)
    idx = rng.integers(0, len(spec.alphabet), size=length)
    word = "".join(spec.alphabet[i] for i in idx)
    return word, hash_word(A, word, counter)


def walk_stream(A: GeneratorPair, spec: WalkSpec, rng: np.random.Generator, counter: WorkCounter | None) -> Stream:
    while True:
        yield walk_sample(A, spec, rng, counter)


def tree_stream(A: GeneratorPair, alphabet: str = "01", counter: WorkCounter | None = None) -> Stream:
    """길이-사전순 BFS. 길이 ≥ 2 단어마다 곱셈 1회 (부모 해시 재사용)."""
    gens = A.gens
    queue: deque[tuple[str, Matrix]] = deque()
    for s in alphabet:
        yield s, gens[s]
        queue.append((s, gens[s]))
    while queue:
        w, M = queue.popleft()
        for s in alphabet:
            child = (w + s, mul(M, gens[s], counter))
            yield child
            queue.append(child)


def fib_stream(C: GeneratorPair, l0: int, l1: int, counter: WorkCounter | None = None) -> Stream:
    """가중 길이 ‖·‖_{l₀,l₁} 오름차순. 부모(마지막 기호 제거) 해시를 재사용."""
    gens = C.gens
    enum = FibEnumerator(l0, l1)
    step = {"0": l0 // enum.g, "1": l1 // enum.g}
    levels: dict[int, dict[str, Matrix]] = {}
    for batch in enum:
        n = enum.n
        cur: dict[str, Matrix] = {}
        for w in batch:
            if len(w) == 1:
                M = gens[w]
            else:
                M = mul(levels[n - step[w[-1]]][w[:-1]], gens[w[-1]], counter)
            cur[w] = M
            yield w, M
        levels[n] = cur
        levels.pop(n - enum.k1, None)


def _make_stream(A: GeneratorPair, spec: WalkSpec, rng: np.random.Generator, counter: WorkCounter) -> Stream:
    if spec.source == "walk":
        return walk_stream(A, spec, rng, counter)
    return tree_stream(A, spec.alphabet, counter)


# ────────────────────────────────────────────────────────────
# meet-in-the-middle
# ────────────────────────────────────────────────────────────
def mitm(
    A: GeneratorPair,
    left_code: CodeFn,
    right_code: CodeFn,
    spec: WalkSpec,
    *,
    rng: np.random.Generator,
    counter: WorkCounter,
    budget: int,
    accept: Callable[[str, Matrix], bool] | None = None,
    source: Iterable[tuple[str, Matrix]] | None = None,
    distinguish_bits: int = 0,
    sample_filter: Callable[[str], bool] | None = None,
    state: MitmState | None = None,
) -> MitmOutcome:
    """
    left_code(h(u)) == right_code(h(v)) 인 저장 단어 u 를 찾으면 v·u 를 돌려준다.

    • 조회를 먼저, 저장은 그 다음 (같은 코드는 처음 본 단어를 유지)
    • 같은 단어끼리의 자기 일치는 무시
    • accept 가 False 를 돌려주면 그 일치는 버리고 계속 진행
    • distinguish_bits > 0 이면 code_key 의 하위 비트가 모두 0 인 표본만 저장
    • state 가 주어지면 그 스트림·저장소에서 이어 가며, budget 은 누적 표본 수
    """
    if distinguish_bits < 0:
        raise ValueError("distinguish_bits must be ≥ 0")
    q = A.params.q
    mask = (1 << distinguish_bits) - 1
    start = counter.multiplications
    if state is None:
        stream = iter(source) if source is not None else _make_stream(A, spec, rng, counter)
        state = MitmState(stream, {})
    store: dict[ProjectiveValue, tuple[str, Matrix]] = state.store

    while state.samples < budget:
        try:
            v, M = next(state.stream)
        except StopIteration:
            break
        state.samples += 1
        if sample_filter is not None and not sample_filter(v):
            continue
        rc = right_code(M)
        found = store.get(rc)
        if found is not None and found[0] != v:
            u, Mu = found
            product = mul(M, Mu, counter)
            if accept is None or accept(v + u, product):
                hit = MitmHit(u, v, v + u, product, rc, counter.multiplications - start)
                return MitmOutcome(hit, state.samples, len(store), counter.multiplications - start, state)
        lc = left_code(M)
        if mask == 0 or code_key(lc, q) & mask == 0:
            store.setdefault(lc, (v, M))

    logger.debug("mitm 예산 소진 | samples=%d stored=%d", state.samples, len(store))
    return MitmOutcome(None, state.samples, len(store), counter.multiplications - start, state)


def mitm_distinguished(
    A: GeneratorPair,
    left_code: CodeFn,
    right_code: CodeFn,
    spec: WalkSpec,
    distinguish_bits: int,
    *,
    rng: np.random.Generator,
    counter: WorkCounter,
    budget: int,
    accept: Callable[[str, Matrix], bool] | None = None,
    source: Iterable[tuple[str, Matrix]] | None = None,
    state: MitmState | None = None,
) -> MitmOutcome:
    """저메모리 모드: 저장량 ≈ 표본 수 · 2^-bits, 작업량은 대략 2^bits 배"""
    if distinguish_bits < 1:
        raise ValueError("distinguish_bits must be ≥ 1")
    return mitm(
        A, left_code, right_code, spec,
        rng=rng, counter=counter, budget=budget, accept=accept,
        source=source, distinguish_bits=distinguish_bits, state=state,
    )


def search_with_retries(
    run: Callable[[np.random.Generator, int, MitmState | None], MitmOutcome],
    q: int,
    rng: np.random.Generator,
    budget: int | None = None,
    retries: int | None = None,
    what: str = "mitm",
    resume: bool = False,
) -> MitmHit:
    """
    Exhausted 시 예산 2배, 최대 retries 회 재시도.

    resume=False : 매번 새 시드의 스트림 (랜덤 워크)
    resume=True  : 앞 시도의 스트림·저장소를 이어 받음 (결정적 트리 / 수열 스트림은
                   재시드해도 같은 단어가 나오므로 다시 열거하지 않는다)
    """
    budget = budget if budget is not None else default_budget(q)
    retries = settings.MITM_RETRIES if retries is None else retries
    base = int(rng.integers(0, 2**32))
    state: MitmState | None = None
    for attempt in range(retries + 1):
        out = run(np.random.default_rng([base, attempt]), budget, state)
        if out.hit is not None:
            return out.hit
        logger.warning("%s 소진, 재시도 %d/%d | budget=%d", what, attempt + 1, retries, budget)
        if resume:
            state = out.state
        budget *= 2
    raise SearchExhaustedError(f"{what}: no hit after {retries} retries")


# ────────────────────────────────────────────────────────────
# 병렬 모드 (joblib)
# ────────────────────────────────────────────────────────────
def _shard(
    A: GeneratorPair,
    left_code: CodeFn,
    right_code: CodeFn,
    spec: WalkSpec,
    seed: np.random.SeedSequence,
    size: int,
) -> tuple[list[tuple[str, int, int]], int]:
    """워커: 독립 시드 스트림으로 size 개 표본 → (단어, left key, right key), 사용 곱셈 수"""
    rng = np.random.default_rng(seed)
    counter = WorkCounter()
    q = A.params.q
    rows = []
    for _ in range(size):
        w, M = walk_sample(A, spec, rng, counter)
        rows.append((w, code_key(left_code(M), q), code_key(right_code(M), q)))
    return rows, counter.multiplications


def mitm_parallel(
    A: GeneratorPair,
    left_code: CodeFn,
    right_code: CodeFn,
    spec: WalkSpec,
    *,
    seed: int,
    counter: WorkCounter,
    budget: int,
    n_jobs: int | None = None,
    chunk: int = 4096,
    accept: Callable[[str, Matrix], bool] | None = None,
    distinguish_bits: int = 0,
) -> MitmOutcome:
    """
    워커별 샤드를 라운드마다 워커 순서대로 병합.
    유효한 Hit 는 보장하지만 어떤 Hit 인지는 n_jobs 에 따라 달라진다.
    distinguish_bits 는 mitm 과 같은 뜻 (left key 의 하위 비트가 0 인 표본만 저장).
    """
    if distinguish_bits < 0:
        raise ValueError("distinguish_bits must be ≥ 0")
    mask = (1 << distinguish_bits) - 1
    n_jobs = n_jobs or settings.MITM_JOBS
    start = counter.multiplications
    store: dict[int, str] = {}
    samples = 0
    root = np.random.SeedSequence(seed)
    rounds = max(1, math.ceil(budget / (chunk * n_jobs)))

    with Parallel(n_jobs=n_jobs) as pool:
        for _ in range(rounds):
            seeds = root.spawn(n_jobs)
            shards = pool(delayed(_shard)(A, left_code, right_code, spec, s, chunk) for s in seeds)
            for rows, work in shards:
                counter.merge(work)
                for v, lk, rk in rows:
                    if samples >= budget:
                        break
                    samples += 1
                    u = store.get(rk)
                    if u is not None and u != v:
                        product = hash_word(A, v + u, counter)
                        if accept is None or accept(v + u, product):
                            rc = right_code(hash_word(A, v))
                            hit = MitmHit(u, v, v + u, product, rc, counter.multiplications - start)
                            return MitmOutcome(hit, samples, len(store), counter.multiplications - start)
                    if mask == 0 or lk & mask == 0:
                        store.setdefault(lk, v)

    return MitmOutcome(None, samples, len(store), counter.multiplications - start)


# ────────────────────────────────────────────────────────────
# 검증
# ────────────────────────────────────────────────────────────
def verify_collision(A: GeneratorPair, w1: str, w2: str) -> bool:
    """w1 ≠ w2 (문자열) 이고 h(w1) = h(w2). 카운트하지 않는다."""
    if w1 == w2:
        return False
    return hash_word(A, w1) == hash_word(A, w2)

