import logging
import sys
import time

from contextlib import contextmanager
from enum import Enum
from typing import Iterator

LOGGER = logging.getLogger("ddseries")


class LogLevel(Enum):
    NOTSET = logging.NOTSET
    DEBUG = logging.DEBUG
    INFO = logging.INFO
    WARNING = logging.WARNING
    ERROR = logging.ERROR
    CRITICAL = logging.CRITICAL
    NOTICE = logging.CRITICAL + 1


FORMATSTR = "[%(levelname)s] %(message)s"


def setup(log_level: LogLevel = LogLevel.WARNING):
    """Attach the stderr channel (once) and set the level"""
    logging.addLevelName(LogLevel.NOTICE.value, LogLevel.NOTICE.name)

    channel = next((h for h in LOGGER.handlers if isinstance(h, _Channel)), None)
    if channel is None:
        channel = _Channel(sys.stderr)
        channel.setFormatter(logging.Formatter(FORMATSTR))
        LOGGER.addHandler(channel)
    else:
        # stderr may have been swapped since the first call
        channel.setStream(sys.stderr)

    LOGGER.setLevel(log_level.value)


class _Channel(logging.StreamHandler):
    pass


def logger() -> logging.Logger:
    return LOGGER


#
# Shortcuts
#
warning = LOGGER.warning
info = LOGGER.info
error = LOGGER.error
critical = LOGGER.critical
debug = LOGGER.debug


def notice(msg: str, *args, **kwargs):
    LOGGER.log(LogLevel.NOTICE.value, msg, *args, **kwargs)


def is_enabled_for(level: LogLevel) -> bool:
    return LOGGER.isEnabledFor(level.value)


#
# Scan helpers
#
class Stopwatch:
    def __init__(self):
        self._start = time.perf_counter()
        self._stop: float | None = None

    def stop(self):
        self._stop = time.perf_counter()

    @property
    def elapsed(self) -> float:
        end = self._stop if self._stop is not None else time.perf_counter()
        return end - self._start


@contextmanager
def timed(label: str) -> Iterator[Stopwatch]:
    """Log the wall time spent in the block at DEBUG level"""
    watch = Stopwatch()
    debug("== %s: started", label)
    try:
        yield watch
    finally:
        watch.stop()
        debug("== %s: done in %.3fs", label, watch.elapsed)


def progress(label: str, done: int, total: int, *, every: int = 10):
    """Report scan progress roughly `every` times over the scan"""
    if total <= 0 or not is_enabled_for(LogLevel.INFO):
        return
    step = max(1, total // every)
    if done == total or done % step == 0:
        info("%s: %d/%d", label, done, total)
