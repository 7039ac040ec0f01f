"""
Experiment Service
==================

• presets / make_generators : 생성자 모드별 (A₀, A₁) 구성
• run_trial      : trial 하나 (필드 → 생성자 → 공격 → 검증) → TrialRecord
• run_experiment : trial 배치 (joblib) → StatsRow + trial 로그 DataFrame
• emit / parse_csv : csv · json · table 출력과 csv 역변환
• verify_record  : 충돌 JSON 재검증 (`verify` 명령)
"""
from __future__ import annotations

import io
import json
import math
import sys
from dataclasses import asdict
from typing import Sequence

import numpy as np
import pandas as pd
import sympy
from joblib import Parallel, delayed
from tqdm import tqdm

from app.algebra.gf import FieldParams, make_field, parse_element, sample
from app.algebra.sl2 import commutes, parse_matrix, random_sl2
from app.algebra.words import GeneratorPair, hash_word
from app.core.config import settings
from app.core.constants import PHASE_COLUMNS, PRESET_NAMES, STATS_COLUMNS, TRIAL_ALGORITHMS
from app.core.exceptions import PreconditionError, SearchExhaustedError
from app.core.logging_config import get_logger
from app.schemas import CollisionRecord, ExperimentConfig, StatsRow, TrialRecord
from app.service.analysis_service import (
    CostPoint,
    MixingReport,
    bfs_shortest_collision,
    primitive_xi_pair,
    xi_form,
)
from app.service.attack_service import Collision, Phase2, generic_attack, linear_attack
from app.service.engine_service import WalkSpec, WorkCounter, verify_collision
from app.service.special_service import even_attack, pqtz_attack

logger = get_logger("sl2c.experiment")


# ────────────────────────────────────────────────────────────
# 생성자
# ────────────────────────────────────────────────────────────
def xi_random_pair(F: FieldParams, rng: np.random.Generator) -> GeneratorPair:
    """ξ₀ ≠ ξ₁ 무작위 → det(A₀ − A₁) = 0"""
    xi0 = sample(F, rng)
    xi1 = sample(F, rng)
    while xi1 == xi0:
        xi1 = sample(F, rng)
    return GeneratorPair(xi_form(F, xi0), xi_form(F, xi1))


def random_pair(F: FieldParams, rng: np.random.Generator) -> GeneratorPair:
    """교환하지 않을 때까지 재추출"""
    while True:
        A0, A1 = random_sl2(F, rng), random_sl2(F, rng)
        if not commutes(A0, A1):
            return GeneratorPair(A0, A1)


def presets(name: str, F: FieldParams, rng: np.random.Generator | None = None) -> GeneratorPair:
    rng = rng if rng is not None else np.random.default_rng(0)
    match name:
        case "appendixB":
            return primitive_xi_pair(F)
        case "xi_random":
            return xi_random_pair(F, rng)
        case "random":
            return random_pair(F, rng)
    raise PreconditionError(f"unknown preset {name!r} (expected one of {PRESET_NAMES})")


def make_generators(config: ExperimentConfig, F: FieldParams, rng: np.random.Generator) -> GeneratorPair:
    match config.gen:
        case "xi_explicit":
            return GeneratorPair(xi_form(F, parse_element(F, config.xi0)), xi_form(F, parse_element(F, config.xi1)))
        case "explicit":
            return GeneratorPair(parse_matrix(F, config.A0), parse_matrix(F, config.A1))
    return presets(config.gen, F, rng)


# ────────────────────────────────────────────────────────────
# trial
# ────────────────────────────────────────────────────────────
def _primes(lo: int, hi: int) -> list[int]:
    primes = list(sympy.primerange(lo, hi + 1))
    if not primes:
        raise PreconditionError(f"no prime in [{lo}, {hi}]")
    return primes


def field_for_trial(config: ExperimentConfig, rng: np.random.Generator) -> FieldParams:
    """p 를 범위에서 균등 추출, n = round(N / lg p)"""
    lo, hi = config.p_range
    primes = _primes(lo, hi)
    p = int(primes[rng.integers(0, len(primes))])
    n = max(1, round(config.N / math.log2(p)))
    return make_field(p, n)


def walk_spec(config: ExperimentConfig, seed: int) -> WalkSpec:
    kw = {"segment_length": config.segment_len, "seed": seed}
    if config.source is not None:
        kw["source"] = config.source
    if config.mitm_jobs is not None:
        kw["n_jobs"] = config.mitm_jobs
    return WalkSpec(**kw)


def _attack(config: ExperimentConfig, A: GeneratorPair, rng: np.random.Generator,
            counter: WorkCounter, spec: WalkSpec) -> Collision:
    kw = dict(rng=rng, counter=counter, spec=spec, budget=config.budget)
    match config.alg:
        case "linear":
            return linear_attack(A, distinguish_bits=config.dp_bits, **kw)
        case "generic_d":
            return generic_attack(A, Phase2.INTO_D, **kw)
        case "generic_commute":
            return generic_attack(A, Phase2.COMMUTE, **kw)
        case "generic_compressed":
            return generic_attack(A, Phase2.COMMUTE, compressed=True, **kw)
        case "even":
            return even_attack(A, **kw)
        case "pqtz":
            result = pqtz_attack(A, **kw)
            result.collision.extras.update(identity_length=result.identity.length,
                                           cauchy_schwarz_ok=result.cauchy_schwarz_ok)
            return result.collision
        case "oracle":
            return bfs_shortest_collision(A, config.budget, counter)
    raise PreconditionError(f"{config.alg!r} is not a trial algorithm ({TRIAL_ALGORITHMS})")


def _scalar_extras(extras: dict) -> dict:
    return {k: v for k, v in extras.items() if isinstance(v, (int, float, str, bool))}


def run_trial(config: ExperimentConfig, i: int) -> TrialRecord:
    rng = np.random.default_rng([config.seed, i])
    F = field_for_trial(config, rng)
    A = make_generators(config, F, rng)
    counter = WorkCounter()
    try:
        col = _attack(config, A, rng, counter, walk_spec(config, config.seed))
    except SearchExhaustedError as exc:
        if exc.work is None:
            raise
        # 상한에서 멈춘 trial: work 는 하한값으로 남기고 길이는 없음
        logger.warning("⚠️ trial %d 상한 도달 (censored) | work=%d", i, exc.work,
                       extra={"trial": i, "q": F.q, "alg": config.alg, "work": exc.work})
        return TrialRecord(trial=i, p=F.p, n=F.n, q_bits=F.bits, work=exc.work, censored=True,
                           error=f"{type(exc).__name__}: {exc}")
    verified = verify_collision(A, col.w1, col.w2)
    logger.debug("trial %d | p=%d n=%d work=%d length=%d ok=%s", i, F.p, F.n, col.work, col.length, verified,
                 extra={"trial": i, "q": F.q, "alg": config.alg, "work": col.work})
    return TrialRecord(
        trial=i, p=F.p, n=F.n, q_bits=F.bits,
        work=col.work, length=col.length, verified=verified,
        extras={"method": col.method, **_scalar_extras(col.extras)},
    )


def _safe_trial(config: ExperimentConfig, i: int) -> TrialRecord:
    """예외는 실패 행으로 기록하고 배치는 계속"""
    try:
        return run_trial(config, i)
    except Exception as exc:  # noqa: BLE001
        logger.exception("❌ trial %d 실패: %s", i, exc, extra={"trial": i, "alg": config.alg})
        lo, _ = config.p_range
        return TrialRecord(trial=i, p=lo, n=0, q_bits=0.0, verified=False, error=f"{type(exc).__name__}: {exc}")


# ────────────────────────────────────────────────────────────
# 배치 / 통계
# ────────────────────────────────────────────────────────────
def length_unit(alg: str) -> str:
    return "L" if alg == "generic_compressed" else "lg q"


def work_unit(alg: str) -> str:
    return "q" if alg == "oracle" else "sqrt q"


def _extra(extras, key: str) -> float:
    return float(extras[key]) if isinstance(extras, dict) and key in extras else math.nan


def trial_frame(records: Sequence[TrialRecord], alg: str) -> pd.DataFrame:
    """trial 로그 + 정규화 컬럼 (work_norm, length_norm, 일반 공격이면 단계별 컬럼)"""
    df = pd.DataFrame([r.model_dump() for r in records])
    if df.empty:
        return pd.DataFrame(columns=["trial", "p", "n", "q_bits", "work", "length", "verified", "censored",
                                     "error", "extras", "work_norm", "length_norm",
                                     "diag_length", "phase1_norm", "phase2_norm"])
    df["work"] = pd.to_numeric(df["work"])
    df["length"] = pd.to_numeric(df["length"])
    q = df["p"].astype(float) ** df["n"].astype(float)
    log_q = np.log2(q.where(df["n"] > 0))
    df["work_norm"] = df["work"] / (q if alg == "oracle" else np.sqrt(q))
    if alg == "generic_compressed":
        df["length_norm"] = df["length"] / (log_q ** 2 / np.log2(log_q))
    else:
        df["length_norm"] = df["length"] / log_q
    phase1 = df["extras"].map(lambda e: _extra(e, "phase1_work"))
    df["diag_length"] = df["extras"].map(lambda e: _extra(e, "diag_length"))
    df["phase1_norm"] = phase1 / np.sqrt(q)
    df["phase2_norm"] = (df["work"] - phase1) / np.sqrt(q)
    return df


def _describe(s: pd.Series) -> tuple[float, float, float, float, float]:
    if s.empty:
        return (math.nan,) * 5  # type: ignore[return-value]
    sd = float(s.std(ddof=1)) if len(s) > 1 else 0.0
    return float(s.min()), float(s.median()), float(s.mean()), sd, float(s.max())


def _mean_or_none(s: pd.Series) -> float | None:
    s = s.dropna()
    return float(s.mean()) if len(s) else None


def aggregate(config: ExperimentConfig, df: pd.DataFrame) -> StatsRow:
    """
    work 통계는 검증된 trial + censored trial (상한값 그대로, 즉 하한) 에서,
    length 통계는 검증된 trial 에서만 낸다. failures 는 censored 를 포함한다.
    """
    if df.empty:
        ok = censored = df
    else:
        ok = df[df["verified"].astype(bool)]
        censored = df[df["censored"].astype(bool)]
    worked = pd.concat([ok, censored]) if len(censored) else ok
    wmin, wmed, wmean, wsd, wmax = _describe(worked["work_norm"].astype(float))
    lmin, lmed, lmean, lsd, lmax = _describe(ok["length_norm"].astype(float))
    lo, hi = config.p_range
    phases: dict[str, float | None] = dict.fromkeys(PHASE_COLUMNS)
    if config.alg.startswith("generic") and len(ok):
        phases = {
            "diag_length_mean": _mean_or_none(ok["diag_length"]),
            "phase1_work_mean": _mean_or_none(ok["phase1_norm"]),
            "phase2_work_mean": _mean_or_none(ok["phase2_norm"]),
        }
    return StatsRow(
        p_range=f"{lo}-{hi}",
        N=config.N,
        trials=config.trials,
        work_min=wmin, work_med=wmed, work_mean=wmean, work_sd=wsd, work_max=wmax,
        length_min=lmin, length_med=lmed, length_mean=lmean, length_sd=lsd, length_max=lmax,
        failures=int(config.trials - len(ok)),
        algorithm=config.alg,
        length_unit=length_unit(config.alg),
        work_raw_mean=float(worked["work"].astype(float).mean()) if len(worked) else math.nan,
        length_raw_mean=float(ok["length"].astype(float).mean()) if len(ok) else math.nan,
        censored=len(censored),
        **phases,
    )


def run_experiment(config: ExperimentConfig) -> tuple[list[StatsRow], pd.DataFrame]:
    if config.alg not in TRIAL_ALGORITHMS:
        raise PreconditionError(f"{config.alg!r} has its own command")
    n_jobs = config.n_jobs or settings.N_JOBS
    logger.info("🚀 실험 시작 | alg=%s gen=%s p=%s N=%d trials=%d seed=%d n_jobs=%d",
                config.alg, config.gen, config.p_range, config.N, config.trials, config.seed, n_jobs)

    idx = tqdm(range(config.trials), desc=config.alg, file=sys.stderr,
               disable=not settings.PROGRESS, leave=False)
    if n_jobs == 1:
        records = [_safe_trial(config, i) for i in idx]
    else:
        records = Parallel(n_jobs=n_jobs)(delayed(_safe_trial)(config, i) for i in idx)
    records.sort(key=lambda r: r.trial)

    df = trial_frame(records, config.alg)
    row = aggregate(config, df)
    if row.failures:
        logger.warning("⚠️ 실패 trial %d / %d (censored %d)", row.failures, config.trials, row.censored)
    logger.info("✅ 실험 완료 | work_mean=%.3f %s length_mean=%.3f %s",
                row.work_mean, work_unit(config.alg), row.length_mean, row.length_unit)
    return [row], df


# ────────────────────────────────────────────────────────────
# 출력
# ────────────────────────────────────────────────────────────
def stats_frame(rows: Sequence[StatsRow]) -> pd.DataFrame:
    return pd.DataFrame([r.as_row() for r in rows], columns=STATS_COLUMNS)


def _fmt(x: float | None) -> str:
    return "-" if x is None or math.isnan(x) else f"{x:.2f}"


def _table(rows: Sequence[StatsRow]) -> str:
    """min / median / mean (sd) / max 를 세로로 쌓은 표"""
    blocks = []
    for r in rows:
        lines = [
            f"p ∈ [{r.p_range}], N = {r.N}, trials = {r.trials}, failures = {r.failures} ({r.algorithm})",
            f"{'':<10}{'work':>16}{'length/' + r.length_unit:>16}",
            f"{'min':<10}{_fmt(r.work_min):>16}{_fmt(r.length_min):>16}",
            f"{'median':<10}{_fmt(r.work_med):>16}{_fmt(r.length_med):>16}",
            f"{'mean (sd)':<10}{_fmt(r.work_mean) + ' (' + _fmt(r.work_sd) + ')':>16}"
            f"{_fmt(r.length_mean) + ' (' + _fmt(r.length_sd) + ')':>16}",
            f"{'max':<10}{_fmt(r.work_max):>16}{_fmt(r.length_max):>16}",
        ]
        if r.censored:
            lines.append(f"censored = {r.censored} (work 는 하한값으로 포함)")
        if r.phase1_work_mean is not None:
            lines.append(
                f"diag length = {_fmt(r.diag_length_mean)}, phase 1 = {_fmt(r.phase1_work_mean)} √q, "
                f"phase 2 = {_fmt(r.phase2_work_mean)} √q"
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def emit(rows: Sequence[StatsRow], fmt: str = "csv") -> str:
    match fmt:
        case "csv":
            return stats_frame(rows).to_csv(index=False)
        case "json":
            return json.dumps([r.model_dump() for r in rows], indent=2, ensure_ascii=False)
        case "table":
            return _table(rows)
    raise PreconditionError(f"unknown output format {fmt!r}")


def parse_csv(text: str) -> list[StatsRow]:
    df = pd.read_csv(
        io.StringIO(text),
        dtype={"p_range": str, "algorithm": str, "length_unit": str},
        float_precision="round_trip",
        keep_default_na=False,
        na_values=[""],
    )
    rows = []
    for rec in df.to_dict(orient="records"):
        rec = {k: v.item() if hasattr(v, "item") else v for k, v in rec.items()}
        for k in PHASE_COLUMNS:
            if k in rec and isinstance(rec[k], float) and math.isnan(rec[k]):
                rec[k] = None
        rows.append(StatsRow(**rec))
    return rows


def cost_frame(points: Sequence[CostPoint]) -> pd.DataFrame:
    return pd.DataFrame([asdict(pt) for pt in points])


def mixing_frame(report: MixingReport) -> pd.DataFrame:
    return pd.DataFrame({
        "m": report.walk_lengths,
        "l1_distance": report.l1_distances,
        "bound": report.bounds,
        "lambda_ratio": report.lambda_ratio,
        "sigma_ratio": report.sigma_ratio,
        "group_order": report.group_order,
    })


# ────────────────────────────────────────────────────────────
# 검증
# ────────────────────────────────────────────────────────────
def verify_record(record: CollisionRecord) -> bool:
    """필드와 생성자를 다시 세우고 h(w1) = h(w2) = 기록된 hash 인지 확인"""
    F = make_field(record.p, record.n, record.modulus)
    A = GeneratorPair(*(parse_matrix(F, t) for t in record.generators))
    if not verify_collision(A, record.w1, record.w2):
        return False
    return str(hash_word(A, record.w1)) == record.hash
