"""
app.core.exceptions
-------------------
sl2c 전역 예외 계층. 라이브러리 코드는 예외를 던지고,
실험 하네스(experiment_service)가 trial 단위로 잡아 실패 행으로 기록한다.
"""


class Sl2cError(Exception):
    """모든 도메인 예외의 루트"""


# ───── 유한체 ─────
class FieldError(Sl2cError, ValueError):
    pass


class FieldDivisionError(FieldError, ZeroDivisionError):
    pass


class FieldTooLargeError(FieldError):
    pass


# ───── 행렬 / 전제조건 ─────
class MatrixError(Sl2cError, ValueError):
    pass


class PreconditionError(Sl2cError, ValueError):
    pass


# ───── 탐색 ─────
class SearchExhaustedError(Sl2cError):
    """예산·재시도·길이 상한 소진. work 는 포기하기 전까지 쓴 곱셈 수 (모르면 None)."""

    def __init__(self, message: str = "", work: int | None = None):
        super().__init__(message)
        self.work = work


class IntertwinerError(Sl2cError):
    pass


class RelationNotFoundError(Sl2cError):
    pass


# ───── 결과 검증 ─────
class CollisionVerificationError(Sl2cError):
    pass


class LiftDegenerateError(Sl2cError):
    pass
