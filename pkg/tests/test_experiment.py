import json
import math

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from app.algebra.gf import make_field
from app.algebra.sl2 import commutes
from app.core.constants import STATS_COLUMNS
from app.core.exceptions import PreconditionError
from app.schemas import ExperimentConfig, TrialRecord
from app.service.analysis_service import primitive_xi_pair, subexp_table, walk_distance
from app.service.attack_service import linear_attack
from app.service.experiment_service import (
    cost_frame,
    emit,
    field_for_trial,
    length_unit,
    make_generators,
    mixing_frame,
    parse_csv,
    presets,
    random_pair,
    run_experiment,
    run_trial,
    trial_frame,
    verify_record,
    walk_spec,
    work_unit,
    xi_random_pair,
)


def cfg(**kw) -> ExperimentConfig:
    return ExperimentConfig.model_validate(kw)


# ── 설정 ──
def test_config_aliases_and_defaults():
    c = cfg(**{"p-min": 101, "p-max": 200, "N": 7, "segment-len": 4})
    assert c.p_range == (101, 200)
    assert c.segment_len == 4
    assert (c.gen, c.alg, c.trials, c.out) == ("xi_random", "linear", 1, "csv")


@pytest.mark.parametrize("kw", [
    {},
    {"p-min": 10},
    {"p-min": 20, "p-max": 10},
    {"p": 7, "alg": "linear", "gen": "random"},
    {"p": 7, "gen": "xi_explicit", "xi0": "1"},
    {"p": 7, "gen": "explicit", "A0": "[1,0;0,1]", "alg": "generic_d"},
    {"p": 7, "trials": 0},
    {"p": 7, "bogus": 1},
])
def test_config_rejects(kw):
    with pytest.raises(ValidationError):
        cfg(**kw)


# ── 생성자 ──
def test_presets(F7):
    assert presets("appendixB", F7) == primitive_xi_pair(F7)
    with pytest.raises(PreconditionError):
        presets("nope", F7)


def test_xi_random_and_random_pairs(F256, rng):
    A = xi_random_pair(F256, rng)
    assert A.A0 != A.A1
    assert (A.A0 - A.A1).det() == 0
    B = random_pair(F256, rng)
    assert not commutes(B.A0, B.A1)


def test_make_generators_explicit_modes(F7, xi01, rng):
    A = make_generators(cfg(p=7, gen="xi_explicit", xi0="0", xi1="1"), F7, rng)
    assert A == xi01
    B = make_generators(cfg(p=7, gen="explicit", alg="generic_d", A0="[2,3;1,2]", A1="[1,1;0,1]"), F7, rng)
    assert str(B.A0) == "[2,3;1,2]" and str(B.A1) == "[1,1;0,1]"


@pytest.mark.parametrize("lo, hi, N, n", [(7, 7, 3, 1), (2, 2, 8, 8), (3, 3, 6, 4), (101, 200, 7, 1)])
def test_field_for_trial(lo, hi, N, n):
    F = field_for_trial(cfg(**{"p-min": lo, "p-max": hi, "N": N}), np.random.default_rng(0))
    assert lo <= F.p <= hi and F.n == n


def test_field_for_trial_without_primes():
    with pytest.raises(PreconditionError):
        field_for_trial(cfg(**{"p-min": 24, "p-max": 28}), np.random.default_rng(0))


# ── trial / 배치 ──
def test_run_trial_is_reproducible():
    c = cfg(**{"p-min": 101, "p-max": 300, "N": 8, "seed": 5})
    r1, r2 = run_trial(c, 3), run_trial(c, 3)
    assert r1 == r2
    assert r1.verified and r1.extras["method"] == "linear"


@pytest.mark.parametrize("kw", [
    {"p-min": 101, "p-max": 200, "N": 7, "alg": "linear"},
    {"p-min": 101, "p-max": 200, "N": 7, "alg": "linear", "source": "walk", "segment-len": 10, "dp-bits": 1},
    {"p-min": 101, "p-max": 200, "N": 7, "alg": "generic_d", "gen": "random"},
    {"p-min": 101, "p-max": 200, "N": 7, "alg": "generic_commute", "gen": "random"},
    {"p-min": 101, "p-max": 200, "N": 7, "alg": "generic_compressed", "gen": "random"},
    {"p": 2, "N": 7, "alg": "even", "gen": "random"},
    {"p": 2, "N": 8, "alg": "pqtz", "gen": "random"},
    {"p": 7, "N": 3, "alg": "oracle", "gen": "xi_random"},
])
def test_run_experiment_all_algorithms(kw):
    rows, df = run_experiment(cfg(trials=3, seed=1, **kw))
    (row,) = rows
    assert row.failures == 0
    assert row.trials == 3 and len(df) == 3
    assert df["verified"].all()
    assert row.work_min <= row.work_med <= row.work_max
    assert row.length_min <= row.length_mean <= row.length_max
    assert row.algorithm == kw["alg"]


def test_run_experiment_records_failures():
    c = cfg(p=7, N=3, alg="generic_d", gen="explicit", A0="[2,0;0,2]", A1="[1,0;0,1]", trials=2)
    rows, df = run_experiment(c)
    (row,) = rows
    assert row.failures == 2
    assert math.isnan(row.work_mean)
    assert df["error"].str.contains("MatrixError").all()


def test_run_experiment_rejects_table_commands():
    with pytest.raises(PreconditionError):
        run_experiment(cfg(p=3, alg="mixing"))


def test_trial_frame_normalization():
    recs = [
        TrialRecord(trial=0, p=7, n=1, q_bits=math.log2(7), work=14, length=6, verified=True),
        TrialRecord(trial=1, p=2, n=4, q_bits=4.0, work=8, length=8, verified=True),
    ]
    df = trial_frame(recs, "linear")
    assert df["work_norm"].tolist() == pytest.approx([14 / math.sqrt(7), 2.0])
    assert df["length_norm"].tolist() == pytest.approx([6 / math.log2(7), 2.0])
    oracle = trial_frame(recs, "oracle")
    assert oracle["work_norm"].tolist() == pytest.approx([2.0, 0.5])
    compressed = trial_frame(recs[1:], "generic_compressed")
    assert compressed["length_norm"].tolist() == pytest.approx([8 / (16 / 2)])


def test_units():
    assert length_unit("generic_compressed") == "L"
    assert length_unit("linear") == "lg q"
    assert work_unit("oracle") == "q"
    assert work_unit("even") == "sqrt q"


# ── 출력 ──
def test_emit_empty_csv_is_header_only():
    assert emit([], "csv").strip() == ",".join(STATS_COLUMNS)


def test_emit_formats_and_csv_round_trip():
    rows, _ = run_experiment(cfg(**{"p-min": 101, "p-max": 200, "N": 7, "trials": 4, "seed": 9}))
    text = emit(rows, "csv")
    assert text.splitlines()[0] == ",".join(STATS_COLUMNS)
    assert parse_csv(text) == rows
    data = json.loads(emit(rows, "json"))
    assert data[0]["p_range"] == "101-200"
    table = emit(rows, "table")
    assert "mean (sd)" in table and "median" in table
    with pytest.raises(PreconditionError):
        emit(rows, "xml")


def test_single_trial_has_zero_sd():
    rows, _ = run_experiment(cfg(p=101, N=7, trials=1))
    assert rows[0].work_sd == 0.0 and rows[0].length_sd == 0.0


def test_cost_and_mixing_frames():
    df = cost_frame(subexp_table([64, 128]))
    assert list(df.columns) == ["n", "n0", "subexp_work_log2", "subexp_length_log2",
                                "our_work_log2", "our_length_log2"]
    mf = mixing_frame(walk_distance(2, walk_lengths=range(5)))
    assert isinstance(mf, pd.DataFrame) and len(mf) == 5
    assert (mf["group_order"] == 6).all()


# ── 검증 ──
def test_verify_record(xi01, rng):
    rec = linear_attack(xi01, rng=rng).to_record(xi01)
    assert verify_record(rec)
    assert not verify_record(rec.model_copy(update={"w2": rec.w1}))
    assert not verify_record(rec.model_copy(update={"hash": "[1,0;0,1]"}))


def test_verify_record_extension_field(rng):
    F = make_field(2, 8)
    A = xi_random_pair(F, rng)
    rec = linear_attack(A, rng=rng).to_record(A)
    assert rec.modulus == list(F.modulus)
    assert verify_record(rec)


# ── 중단 trial · 단계 컬럼 · 재현성 ──
def test_oracle_cap_records_censored_trials():
    rows, df = run_experiment(cfg(p=7, N=3, alg="oracle", budget=2, trials=2))
    (row,) = rows
    assert row.censored == 2 and row.failures == 2
    assert df["censored"].all() and not df["verified"].any()
    # 상한까지 쓴 곱셈 수가 work 하한으로 남는다
    assert row.work_mean == pytest.approx(3 / 7)
    assert math.isnan(row.length_mean)
    assert "censored = 2" in emit(rows, "table")


def test_generic_rows_carry_phase_columns():
    c = cfg(**{"p-min": 101, "p-max": 200, "N": 7, "alg": "generic_compressed", "gen": "random",
               "trials": 3, "seed": 4})
    rows, df = run_experiment(c)
    (row,) = rows
    assert row.diag_length_mean >= 1
    assert row.phase1_work_mean > 0 and row.phase2_work_mean >= 0
    total = (df["phase1_norm"] + df["phase2_norm"]).tolist()
    assert total == pytest.approx(df["work_norm"].tolist())
    assert parse_csv(emit(rows, "csv")) == rows
    assert "phase 1" in emit(rows, "table")


def test_linear_rows_leave_phase_columns_empty():
    rows, _ = run_experiment(cfg(p=101, N=7, trials=2))
    assert rows[0].phase1_work_mean is None and rows[0].censored == 0
    assert parse_csv(emit(rows, "csv"))[0].diag_length_mean is None


def test_same_seed_gives_identical_csv():
    c = cfg(**{"p-min": 101, "p-max": 300, "N": 8, "trials": 5, "seed": 11})
    first = emit(run_experiment(c)[0], "csv")
    assert emit(run_experiment(c)[0], "csv") == first


def test_mitm_jobs_reaches_walk_spec():
    c = cfg(p=7, **{"mitm-jobs": 2, "segment-len": 5})
    spec = walk_spec(c, 0)
    assert spec.n_jobs == 2 and spec.segment_length == 5
    assert walk_spec(cfg(p=7), 0).n_jobs == 1


# ── 재현 (느림) ──
Q16_RANGES = [(2, 4), (8, 16), (128, 256), (32768, 65536)]


def _row(**kw):
    rows, _ = run_experiment(cfg(**kw))
    return rows[0]


@pytest.mark.slow
@pytest.mark.parametrize("lo, hi", Q16_RANGES)
def test_linear_attack_statistics_q16(lo, hi):
    """작업량 ≈ 2.4·√q, 길이 ≈ 2.15·lg q"""
    row = _row(**{"p-min": lo, "p-max": hi, "N": 16, "trials": 1000, "seed": 1})
    assert row.failures == 0
    assert 2.1 <= row.work_mean <= 2.9
    assert 2.0 <= row.length_mean <= 2.35


@pytest.mark.slow
def test_linear_attack_statistics_q32():
    row = _row(**{"p-min": 32768, "p-max": 65536, "N": 32, "trials": 200, "seed": 2})
    assert row.failures == 0
    assert 2.1 <= row.work_mean <= 2.9
    assert 1.95 <= row.length_mean <= 2.25


@pytest.mark.slow
@pytest.mark.parametrize("lo, hi", Q16_RANGES)
def test_generic_compressed_statistics_q16(lo, hi):
    row = _row(**{"p-min": lo, "p-max": hi, "N": 16, "alg": "generic_compressed", "gen": "random",
                  "trials": 500, "seed": 3})
    assert row.failures == 0
    assert 1.2 <= row.diag_length_mean <= 1.7
    assert 2.2 <= row.phase1_work_mean <= 3.2
    assert 2.3 <= row.phase2_work_mean <= 3.5
    assert 1.1 <= row.length_mean <= 1.6


@pytest.mark.slow
def test_even_attack_statistics_q32():
    row = _row(p=2, N=32, alg="even", gen="random", trials=200, seed=4)
    assert row.failures == 0
    assert 3.8 <= row.length_mean <= 4.5
    assert 2.1 <= row.work_mean <= 3.0


@pytest.mark.slow
@pytest.mark.parametrize("lo, hi", Q16_RANGES[1:])
def test_shortest_collision_statistics_q16(lo, hi):
    row = _row(**{"p-min": lo, "p-max": hi, "N": 16, "alg": "oracle", "trials": 200, "seed": 5})
    assert row.failures == 0 and row.censored == 0
    assert 4.0 <= row.work_mean <= 7.0
    assert 0.95 <= row.length_mean <= 1.15


@pytest.mark.slow
def test_linear_acceptance_csv_is_deterministic():
    c = cfg(**{"p-min": 128, "p-max": 256, "N": 16, "trials": 1000, "seed": 1})
    assert emit(run_experiment(c)[0], "csv") == emit(run_experiment(c)[0], "csv")
