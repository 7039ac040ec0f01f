"""
app.core.config
---------------
.env 기반 런타임 설정 (Pydantic BaseSettings)
"""

from functools import lru_cache
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # ───── 로깅 ─────
    LOG_LEVEL: str = Field(default="INFO", alias="LOG_LEVEL")
    LOG_FORMAT: str = Field(default="TEXT", alias="LOG_FORMAT")        # TEXT / JSON
    LOG_EMOJI: bool = Field(default=True, alias="LOG_EMOJI")

    # ───── 유한체 ─────
    FIELD_MAX_BITS: int = Field(default=64, alias="FIELD_MAX_BITS")    # n·lg p 상한
    LOG_TABLE_MAX_Q: int = Field(default=1 << 17, alias="LOG_TABLE_MAX_Q")
    DLOG_MAX_ORDER: int = Field(default=1 << 40, alias="DLOG_MAX_ORDER")

    # ───── meet-in-the-middle ─────
    MITM_BUDGET_FACTOR: float = Field(default=8.0, alias="MITM_BUDGET_FACTOR")   # × √q
    MITM_RETRIES: int = Field(default=3, alias="MITM_RETRIES")
    MITM_SOURCE: Literal["tree", "walk"] = Field(default="tree", alias="MITM_SOURCE")
    PHASE1_MAX_LEN: int = Field(default=12, alias="PHASE1_MAX_LEN")
    MITM_JOBS: int = Field(default=1, alias="MITM_JOBS")                # > 1 → joblib 샤드 병렬

    # ───── 관계식 탐색 (PQTZ) ─────
    RELATION_BOX_MAX: int = Field(default=8, alias="RELATION_BOX_MAX")
    RELATION_HALF_CAP: int = Field(default=1 << 20, alias="RELATION_HALF_CAP")

    # ───── random walk / mixing ─────
    WALK_C: float = Field(default=10.0, alias="WALK_C")
    MIX_EPSILON: float = Field(default=0.1, alias="MIX_EPSILON")
    MIXING_MAX_ORDER: int = Field(default=10_000, alias="MIXING_MAX_ORDER")

    # ───── oracle / 실험 ─────
    ORACLE_WORK_FACTOR: float = Field(default=128.0, alias="ORACLE_WORK_FACTOR")  # × q
    N_JOBS: int = Field(default=1, alias="N_JOBS")
    PROGRESS: bool = Field(default=True, alias="PROGRESS")

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",         # 알 수 없는 환경변수 무시
    )


@lru_cache
def get_settings() -> Settings:
    """CLI / 서비스 모듈 공통 진입점"""
    return Settings()


settings = get_settings()   # 전역 싱글턴
