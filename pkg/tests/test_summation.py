import numpy as np

from ddseries.summation import (
    Accumulator,
    block_sum,
    blocks,
    compensated_sum,
    map_blocks,
    two_sum,
)


def test_two_sum():
    s, t = two_sum(1e16, 1.0)
    assert s == 1e16
    assert t == 1.0

    s, t = two_sum(0.1, 0.2)
    assert s == 0.1 + 0.2
    assert abs(t) < 1e-16


def test_accumulator_compensation():
    acc = Accumulator()
    for x in (1e16, 1.0, -1e16):
        acc.add(x)
    assert acc.total == 1.0
    assert acc.count == 3

    acc = Accumulator()
    for _ in range(10):
        acc.add(0.1 + 0.1j)
    assert acc.total == complex(1.0, 1.0)
    assert acc.roundoff > 0

    assert Accumulator().total == 0
    assert Accumulator().roundoff == 0


def test_blocks():
    assert list(blocks(0, 10, 4)) == [(0, 4), (4, 8), (8, 10)]
    assert list(blocks(3, 3, 4)) == []


def test_map_blocks_keeps_order():
    ranges = list(blocks(0, 1000, 7))
    sequential = list(map_blocks(lambda a, b: (a, b), ranges, threads=1))
    threaded = list(map_blocks(lambda a, b: (a, b), ranges, threads=4))
    assert sequential == threaded == ranges


def test_block_sum_thread_invariance(rng: np.random.Generator):
    values = rng.standard_normal(100_000) + 1j * rng.standard_normal(100_000)

    def evaluate(a: int, b: int) -> np.ndarray:
        return values[a:b]

    one, err = block_sum(evaluate, 0, values.size, block_size=1000, threads=1)
    many, _ = block_sum(evaluate, 0, values.size, block_size=1000, threads=8)
    print("\n::test_block_sum_thread_invariance::", one, err)
    assert one == many
    assert abs(one - np.sum(values)) <= err


def test_compensated_sum():
    harmonic = 1.0 / np.arange(1, 1_000_001)
    total, err = compensated_sum(harmonic)
    # H_n = log n + γ + 1/2n - 1/12n² + ...
    n = 1_000_000
    expected = np.log(n) + 0.5772156649015329 + 1 / (2 * n) - 1 / (12 * n**2)
    assert abs(total - expected) < 1e-12
    assert err < 1e-9
