"""
app.core.constants
────────────────────────────────────────────
공격·통계·비용 계산에 공통으로 쓰이는 하드코딩 상수 모음
"""

# ── 비용 계산기 (짝수 q 비교표) ────────────────
OMEGA: float = 2.8                      # 행렬 곱 상수 ω
LENGTH_BUDGET_LOG2: int = 80            # 부분지수 공격 충돌 길이 상한 (log₂)
TABLE6_N: list[int] = [64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384]

# ── 알고리즘 / 생성자 모드 ──
TRIAL_ALGORITHMS: list[str] = [
    "linear", "generic_d", "generic_commute", "generic_compressed",
    "even", "pqtz", "oracle",
]
ALGORITHMS: list[str] = TRIAL_ALGORITHMS + ["mixing", "table6"]
GENERATOR_MODES: list[str] = ["random", "xi_random", "xi_explicit", "appendixB", "explicit"]
PRESET_NAMES: list[str] = ["appendixB", "xi_random", "random"]

# ── collision method tag ──
METHOD_LINEAR = "linear"
METHOD_GENERIC_D = "generic-into-d"
METHOD_GENERIC_COMMUTE = "generic-commute"
METHOD_EVEN = "even-q"
METHOD_PQTZ = "pqtz"
METHOD_ORACLE = "bfs-oracle"
METHOD_LIFTED = "lifted"
METHOD_TRIVIAL = "trivial"

EVEN_FALLBACK_TAG = "even-q-fallback"

# ── even-q: B-비트 → A-단어 치환 ──
EVEN_B_EXPANSION: dict[str, str] = {"0": "01", "1": "10"}

# ── E-pushing 재작성 규칙 (왼쪽 우선) ──
E_PUSH_RULES: list[tuple[str, str]] = [("CE", "ET"), ("TE", "EC"), ("EE", "")]

# ── 통계 CSV 컬럼 (순서 고정) ──
STATS_COLUMNS: list[str] = [
    "p_range", "N", "trials",
    "work_min", "work_med", "work_mean", "work_sd", "work_max",
    "length_min", "length_med", "length_mean", "length_sd", "length_max",
    "failures",
    "algorithm", "length_unit", "work_raw_mean", "length_raw_mean",
    "censored", "diag_length_mean", "phase1_work_mean", "phase2_work_mean",
]
# 일반 공격에서만 채워지는 컬럼 (그 밖에는 빈 칸)
PHASE_COLUMNS: tuple[str, ...] = ("diag_length_mean", "phase1_work_mean", "phase2_work_mean")

INF_TOKEN: str = "inf"                  # 사영점 ∞ 직렬화
MIXING_Q: tuple[int, ...] = (2, 3, 4, 5)
MIXING_DEGREE: int = 3                  # {g₀, g₁, e}
