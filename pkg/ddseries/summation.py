"""
Compensated, block-sequential reduction of long sums.

Blocks are evaluated independently (optionally on a thread pool) and
reduced in index order, so the result only depends on the block size.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import (
    Callable,
    Iterable,
    Iterator,
)

import numpy as np

from . import logger

EPS = float(np.finfo(np.float64).eps)


def two_sum(u: float, v: float) -> tuple[float, float]:
    """Error free transformation: u + v == s + t exactly"""
    s = u + v
    up = s - v
    vpp = s - up
    up -= u
    vpp -= v
    return s, -(up + vpp)


class _RealAccumulator:
    __slots__ = ("_s", "_t")

    def __init__(self):
        self._s = 0.0
        self._t = 0.0

    def add(self, y: float):
        y, u = two_sum(y, self._t)
        self._s, self._t = two_sum(y, self._s)
        if self._s == 0:
            self._s = u
        else:
            self._t += u

    @property
    def total(self) -> float:
        return self._s + self._t


class Accumulator:
    """Running compensated sum of complex values"""

    def __init__(self):
        self._re = _RealAccumulator()
        self._im = _RealAccumulator()
        self._mass = 0.0
        self._count = 0

    def add(self, value: complex):
        self._re.add(value.real)
        self._im.add(value.imag)
        self._mass += abs(value)
        self._count += 1

    def add_array(self, values: np.ndarray):
        """Add a block: pairwise sum inside the block, compensated across blocks"""
        if values.size == 0:
            return
        block = complex(np.sum(values))
        self._re.add(block.real)
        self._im.add(block.imag)
        self._mass += float(np.sum(np.abs(values)))
        self._count += values.size

    @property
    def total(self) -> complex:
        return complex(self._re.total, self._im.total)

    @property
    def count(self) -> int:
        return self._count

    @property
    def roundoff(self) -> float:
        """Roundoff estimate: pairwise summation error inside blocks"""
        if self._count == 0:
            return 0.0
        return EPS * self._mass * (2.0 + np.log2(self._count))


def blocks(start: int, stop: int, block_size: int) -> Iterator[tuple[int, int]]:
    """Half open index ranges [a, b) covering [start, stop)"""
    for a in range(start, stop, block_size):
        yield a, min(a + block_size, stop)


def map_blocks[T](
    evaluate: Callable[[int, int], T],
    ranges: Iterable[tuple[int, int]],
    threads: int = 1,
) -> Iterator[T]:
    """Evaluate blocks, results are yielded in block order"""
    ranges = list(ranges)
    if threads <= 1 or len(ranges) <= 1:
        for a, b in ranges:
            yield evaluate(a, b)
        return

    logger.debug("== Evaluating %d blocks on %d threads", len(ranges), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(lambda r: evaluate(*r), ranges)


def block_sum(
    evaluate: Callable[[int, int], np.ndarray],
    start: int,
    stop: int,
    *,
    block_size: int = 4096,
    threads: int = 1,
) -> tuple[complex, float]:
    """Sum the terms produced by `evaluate(a, b)` over [start, stop)

    Returns the compensated total and its roundoff estimate.
    """
    acc = Accumulator()
    for values in map_blocks(evaluate, blocks(start, stop, block_size), threads):
        acc.add_array(np.asarray(values))
    return acc.total, acc.roundoff


def compensated_sum(values: np.ndarray, block_size: int = 4096) -> tuple[complex, float]:
    """Compensated sum of an array already in memory"""
    values = np.asarray(values).ravel()
    return block_sum(lambda a, b: values[a:b], 0, values.size, block_size=block_size)
