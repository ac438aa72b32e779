import logging
import os

logger = logging.getLogger(__name__)


def _threads(raw: str | None) -> int:
    default = os.cpu_count() or 1
    if raw is None:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("ignoring MIRM_THREADS=%r, not an integer; using %d", raw, default)
        return default


MIRM_THREADS = _threads(os.environ.get("MIRM_THREADS"))
MIRM_LOG_LEVEL = os.environ.get("MIRM_LOG_LEVEL", "WARNING").upper()
