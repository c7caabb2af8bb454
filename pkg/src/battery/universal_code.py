"""
Universal code lengths and the compression test of fit.

The code is the Krichevsky-Trofimov (add-1/2) sequential estimator with
order-k binary contexts. Lengths are ideal, L(x) = -log2 P_KT(x), so they
satisfy Kraft with equality at every word length and no encoder is built.

The KT probability of a context only depends on its final counts (a zeros,
b ones): P = Gamma(a+1/2) Gamma(b+1/2) / (pi Gamma(a+b+1)), which lets the
whole pass run as a vectorized count.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from src.data.bitstream import BitSequence, BitsLike

_LN2 = math.log(2.0)
_LN_PI = math.log(math.pi)
DEFAULT_ORDER = 1


def kt_log2_probability(zeros, ones):
    """log2 of the KT block probability for the given counts (vectorized)."""
    zeros = np.asarray(zeros, dtype=np.float64)
    ones = np.asarray(ones, dtype=np.float64)
    ln = gammaln(zeros + 0.5) + gammaln(ones + 0.5) - _LN_PI - gammaln(zeros + ones + 1.0)
    return ln / _LN2


@dataclass(frozen=True)
class CodeModel:
    """Order-k KT model; contexts shorter than k at the start use the full history."""

    order: int = DEFAULT_ORDER

    def __post_init__(self) -> None:
        if self.order < 0:
            raise ValueError(f"order must be >= 0, got {self.order}")

    def counts(self, x: BitsLike) -> np.ndarray:
        """Symbol counts per full-length context, shape (2**k, 2).

        Row c holds the context whose bits, oldest first, spell c in binary.
        """
        bits = BitSequence.coerce(x).bits
        k = self.order
        n = bits.size
        if n <= k:
            return np.zeros((1 << k, 2), dtype=np.int64)
        ctx = np.zeros(n - k, dtype=np.int64)
        for j in range(k, 0, -1):
            ctx = (ctx << 1) | bits[k - j:n - j]
        cells = np.bincount(ctx * 2 + bits[k:], minlength=1 << (k + 1))
        return cells.reshape(-1, 2)

    def code_length(self, x: BitsLike) -> float:
        x = BitSequence.coerce(x)
        n = len(x)
        if n == 0:
            return 0.0
        # Los primeros min(k, n) símbolos tienen contexto único: 1 bit cada uno
        head = float(min(self.order, n))
        if n <= self.order:
            return head
        table = self.counts(x)
        used = table.sum(axis=1) > 0
        body = -float(np.sum(kt_log2_probability(table[used, 0], table[used, 1])))
        return head + body


def code_length(x: BitsLike, k: int = DEFAULT_ORDER) -> float:
    """Ideal KT codelength of x in bits."""
    return CodeModel(k).code_length(x)


def tau_phi(x: BitsLike, k: int = DEFAULT_ORDER) -> float:
    """Compression statistic n - L(x); negative for incompressible data."""
    x = BitSequence.coerce(x)
    return len(x) - code_length(x, k)


def compression_log2_pvalue(x: BitsLike, k: int = DEFAULT_ORDER) -> float:
    """log2 of min(1, 2**-tau) without underflow."""
    return -max(0.0, tau_phi(x, k))


def compression_pvalue(x: BitsLike, k: int = DEFAULT_ORDER) -> float:
    """min(1, 2**-tau_phi(x)).

    Kraft equality and Markov's inequality give mu_U{y: tau(y) >= t} <= 2**-t,
    so rejecting when this value is <= alpha is a level-alpha test.
    """
    return 2.0 ** compression_log2_pvalue(x, k)


def entropy_estimate(x: BitsLike, k: int = DEFAULT_ORDER) -> float:
    """Empirical entropy rate L(x)/n in bits per symbol (0 for the empty word)."""
    x = BitSequence.coerce(x)
    if len(x) == 0:
        return 0.0
    return code_length(x, k) / len(x)
