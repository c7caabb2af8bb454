"""
Closed-form statistics of the battery.

Each function takes a 1-d ``uint8`` array and returns a :class:`Statistic`
(p-value, observed statistic). Conventions follow the usual frequency, runs,
serial and cumulative-sums tests of fit; the compression statistic lives in
:mod:`src.battery.universal_code`.
"""

import math
from typing import NamedTuple

import numpy as np
from scipy.special import erfc, gammaincc


class Statistic(NamedTuple):
    pvalue: float
    statistic: float


def _to_pm1_sum(bits: np.ndarray) -> int:
    ones = int(np.count_nonzero(bits))
    return 2 * ones - bits.size


def monobit(bits: np.ndarray) -> Statistic:
    """Frequency test, two-sided: p = erfc(|S_n| / sqrt(2n))."""
    n = bits.size
    s_obs = abs(_to_pm1_sum(bits)) / math.sqrt(n)
    return Statistic(float(erfc(s_obs / math.sqrt(2.0))), s_obs)


def block_frequency(bits: np.ndarray, block_size: int = 128) -> Statistic:
    """Proportion of ones in N = n // M blocks, chi-square with N degrees of freedom.

    Trailing bits that do not fill a block are discarded.
    """
    blocks = bits.size // block_size
    matrix = bits[:blocks * block_size].reshape(blocks, block_size)
    proportions = matrix.sum(axis=1, dtype=np.int64) / block_size
    chi_square = 4.0 * block_size * float(np.sum((proportions - 0.5) ** 2))
    return Statistic(float(gammaincc(blocks / 2.0, chi_square / 2.0)), chi_square)


def runs(bits: np.ndarray) -> Statistic:
    """Total number of runs V against 2 n pi (1 - pi).

    When the ones proportion fails the frequency prerequisite
    |pi - 1/2| >= 2/sqrt(n), or the input is constant, the test is not
    applicable and p = 0.
    """
    n = bits.size
    pi = np.count_nonzero(bits) / n
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n) or pi * (1.0 - pi) == 0.0:
        return Statistic(0.0, float("nan"))
    v_obs = int(np.count_nonzero(np.diff(bits))) + 1
    expected = 2.0 * n * pi * (1.0 - pi)
    p = erfc(abs(v_obs - expected) / (2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)))
    return Statistic(float(p), float(v_obs))


def _psi_square(bits: np.ndarray, m: int) -> float:
    """psi^2_m on overlapping m-bit patterns with cyclic wrap-around."""
    n = bits.size
    if m <= 0:
        return 0.0
    extended = np.concatenate([bits, bits[:m - 1]]).astype(np.int64)
    codes = np.zeros(n, dtype=np.int64)
    for j in range(m):
        codes = (codes << 1) | extended[j:j + n]
    counts = np.bincount(codes, minlength=1 << m).astype(np.float64)
    return float((1 << m) / n * np.sum(counts ** 2) - n)


def serial(bits: np.ndarray, order: int = 2) -> Statistic:
    """Serial test on the first difference of psi^2 (chi-square, 2**(m-1) degrees of freedom)."""
    delta = max(0.0, _psi_square(bits, order) - _psi_square(bits, order - 1))
    return Statistic(float(gammaincc(2.0 ** (order - 2), delta / 2.0)), delta)


def cumulative_sums(bits: np.ndarray) -> Statistic:
    """Forward cumulative sums: maximal excursion z of the +/-1 random walk."""
    n = bits.size
    walk = np.cumsum(bits.astype(np.int64) * 2 - 1)
    z = int(np.max(np.abs(walk)))
    if z == 0:
        return Statistic(1.0, 0.0)
    sqrt_n = math.sqrt(n)

    def phi(v: float) -> float:
        return 0.5 * float(erfc(-v / math.sqrt(2.0)))

    total = 1.0
    for k in range(int(math.floor((-n / z + 1) / 4)), int(math.floor((n / z - 1) / 4)) + 1):
        total -= phi((4 * k + 1) * z / sqrt_n) - phi((4 * k - 1) * z / sqrt_n)
    for k in range(int(math.floor((-n / z - 3) / 4)), int(math.floor((n / z - 1) / 4)) + 1):
        total += phi((4 * k + 3) * z / sqrt_n) - phi((4 * k + 1) * z / sqrt_n)
    return Statistic(min(1.0, max(0.0, total)), float(z))
