"""
app.schemas
-----------
실험 설정과 결과 레코드 (pydantic v2).

• ExperimentConfig: CLI 옵션 / JSON 설정 파일과 키가 같음
• StatsRow: 통계 CSV 한 행 (컬럼 순서는 constants.STATS_COLUMNS)
• CollisionRecord: 충돌 JSON ({method, p, n, modulus, generators, w1, w2, hash, work_mults, length})
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.constants import STATS_COLUMNS

Algorithm = Literal[
    "linear", "generic_d", "generic_commute", "generic_compressed",
    "even", "pqtz", "oracle", "mixing", "table6",
]
GeneratorMode = Literal["random", "xi_random", "xi_explicit", "appendixB", "explicit"]
OutputFormat = Literal["csv", "json", "table"]


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    p_min: Optional[int] = Field(default=None, alias="p-min")
    p_max: Optional[int] = Field(default=None, alias="p-max")
    p: Optional[int] = None
    N: int = 16
    gen: GeneratorMode = "xi_random"
    alg: Algorithm = "linear"
    trials: int = Field(default=1, ge=1)
    seed: int = 0
    out: OutputFormat = "csv"
    budget: Optional[int] = Field(default=None, ge=0)
    segment_len: Optional[int] = Field(default=None, alias="segment-len", ge=1)
    dp_bits: int = Field(default=0, alias="dp-bits", ge=0)
    source: Optional[Literal["tree", "walk"]] = None
    xi0: Optional[str] = None
    xi1: Optional[str] = None
    A0: Optional[str] = None
    A1: Optional[str] = None
    n_jobs: Optional[int] = Field(default=None, alias="n-jobs", ge=1)
    mitm_jobs: Optional[int] = Field(default=None, alias="mitm-jobs", ge=1)

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        if self.p is None and (self.p_min is None or self.p_max is None):
            raise ValueError("either p or both p-min / p-max are required")
        if self.p is None and self.p_min > self.p_max:  # type: ignore[operator]
            raise ValueError("p-min > p-max")
        if self.alg == "linear" and self.gen not in ("xi_random", "xi_explicit", "appendixB"):
            raise ValueError("the linear attack needs a det(A0 − A1) = 0 generator mode")
        if self.gen == "xi_explicit" and (self.xi0 is None or self.xi1 is None):
            raise ValueError("gen=xi_explicit needs xi0 and xi1")
        if self.gen == "explicit" and (self.A0 is None or self.A1 is None):
            raise ValueError("gen=explicit needs A0 and A1 matrix texts")
        return self

    @property
    def p_range(self) -> tuple[int, int]:
        if self.p is not None:
            return self.p, self.p
        return self.p_min, self.p_max  # type: ignore[return-value]

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ExperimentConfig":
        return cls.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))


class StatsRow(BaseModel):
    p_range: str
    N: int
    trials: int
    work_min: float
    work_med: float
    work_mean: float
    work_sd: float
    work_max: float
    length_min: float
    length_med: float
    length_mean: float
    length_sd: float
    length_max: float
    failures: int
    algorithm: str
    length_unit: str
    work_raw_mean: float
    length_raw_mean: float
    censored: int = 0                              # 상한에서 멈춘 oracle trial (work 는 하한값)
    diag_length_mean: Optional[float] = None       # l₀
    phase1_work_mean: Optional[float] = None       # / √q
    phase2_work_mean: Optional[float] = None       # / √q

    def as_row(self) -> list:
        d = self.model_dump()
        return [d[c] for c in STATS_COLUMNS]


class TrialRecord(BaseModel):
    """trial 한 건의 로그 행"""

    trial: int
    p: int
    n: int
    q_bits: float
    work: Optional[int] = None
    length: Optional[int] = None
    verified: bool = False
    censored: bool = False
    error: Optional[str] = None
    extras: dict = Field(default_factory=dict)


class CollisionRecord(BaseModel):
    method: str
    p: int
    n: int
    modulus: list[int]
    generators: list[str]
    w1: str
    w2: str
    hash: str
    work_mults: int
    length: int


class IdentityPreimageRecord(BaseModel):
    word: str
    length: int
    verified: bool


def load_collision_record(path: str | Path) -> CollisionRecord:
    return CollisionRecord.model_validate_json(Path(path).read_text(encoding="utf-8"))
