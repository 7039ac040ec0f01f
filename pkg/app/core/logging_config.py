"""
app.core.logging_config
-----------------------
sl2c 전역 로깅 설정.

• 로그는 STDERR 로 나가므로 STDOUT 의 CSV / JSON 출력과 섞이지 않습니다.
• tqdm 진행 막대가 떠 있는 동안에도 줄이 깨지지 않도록 tqdm.write 로 내보냅니다.
• 포맷(TEXT / JSON), 레벨, 이모티콘은 Settings 가 기본값이고 CLI 의 -v / -q 로 덮어씁니다.
"""

import json
import logging
import unicodedata
from logging.config import dictConfig
from typing import Any, Dict, Optional

from tqdm import tqdm

from app.core.config import settings

ROOT_LOGGER = "sl2c"

# trial 문맥으로 붙는 extra 필드 (logger.info(..., extra={"trial": 3}))
_CONTEXT_KEYS = ("trial", "q", "alg", "work")

_EMOJI = (
    (logging.ERROR, "❌"),
    (logging.WARNING, "⚠️ "),
    (logging.INFO, "✅"),
)


# ────────────────────────────────
# 1. Filter / Formatter / Handler
# ────────────────────────────────
class EmojiFilter(logging.Filter):
    """레벨별 이모티콘 접두어. 이미 기호로 시작하는 메시지는 그대로 둔다."""

    def filter(self, record: logging.LogRecord) -> bool:
        msg = str(record.msg)
        marked = bool(msg) and unicodedata.category(msg[0]) == "So"
        if not marked and not getattr(record, "_emoji_done", False):
            for level, mark in _EMOJI:
                if record.levelno >= level:
                    record.msg = f"{mark} {record.msg}"
                    break
            record._emoji_done = True  # type: ignore[attr-defined]
        return True


class JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:  # type: ignore[override]
        base: Dict[str, Any] = {
            "ts": record.created,
            "level": record.levelname,
            "logger": record.name,
            "msg": record.getMessage(),
        }
        for key in _CONTEXT_KEYS:
            if hasattr(record, key):
                base[key] = getattr(record, key)
        if record.exc_info:
            base["exc"] = self.formatException(record.exc_info)
        return json.dumps(base, ensure_ascii=False, default=str)


class TqdmHandler(logging.StreamHandler):
    """진행 막대 위로 로그를 찍는다."""

    def emit(self, record: logging.LogRecord) -> None:
        try:
            tqdm.write(self.format(record), file=self.stream)
        except Exception:
            self.handleError(record)


TEXT_FMT = "%(asctime)s | %(levelname)-7s | %(name)s | %(message)s"


# ────────────────────────────────
# 2. dictConfig
# ────────────────────────────────
def configure_logging(
    level: Optional[str] = None,
    fmt: Optional[str] = None,
    emoji: Optional[bool] = None,
) -> None:
    """인자가 None 이면 Settings 값을 쓴다. 여러 번 불러도 된다."""
    level = (level or settings.LOG_LEVEL).upper()
    fmt = (fmt or settings.LOG_FORMAT).upper()
    emoji = settings.LOG_EMOJI if emoji is None else emoji

    dictConfig({
        "version": 1,
        "disable_existing_loggers": False,
        "filters": {"emoji": {"()": EmojiFilter}},
        "formatters": {
            "text": {"format": TEXT_FMT},
            "json": {"()": JsonFormatter},
        },
        "handlers": {
            "stderr": {
                "()": TqdmHandler,
                "stream": "ext://sys.stderr",
                "formatter": "json" if fmt == "JSON" else "text",
                # JSON 은 기계가 읽으므로 이모티콘을 붙이지 않음
                "filters": ["emoji"] if emoji and fmt != "JSON" else [],
            }
        },
        "loggers": {
            ROOT_LOGGER: {
                "handlers": ["stderr"],
                "level": level,
                "propagate": False,
            },
        },
    })


configure_logging()


# ────────────────────────────────
# 3. 편의 함수
# ────────────────────────────────
def get_logger(name: str) -> logging.Logger:
    """
    모듈에서 호출할 때:
        from app.core.logging_config import get_logger
        logger = get_logger("sl2c.engine")
    """
    if name != ROOT_LOGGER and not name.startswith(ROOT_LOGGER + "."):
        name = f"{ROOT_LOGGER}.{name}"
    return logging.getLogger(name)
