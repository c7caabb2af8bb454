"""
Exact p-values by counting words.

The Neyman-Pearson p-value of x against a known source nu is the uniform
measure of the words that nu makes strictly more probable than x. For a
Bernoulli source nu only depends on the number of ones, so the count is a
binomial tail; Markov sources are enumerated, which caps n.
"""

import math
from fractions import Fraction
from typing import Callable, List

import numpy as np
from scipy.special import gammaln, logsumexp

from src.analysis.entropy import KnownSource
from src.data.bitstream import BitSequence, BitsLike
from src.errors import InfiniteSampleSizeError, OracleLimitError


MARKOV_ENUMERATION_LIMIT = 24
EXHAUSTIVE_LIMIT = 20
# Por debajo de este n la cola binomial se suma con enteros exactos
EXACT_TAIL_LIMIT = 4096
_LN2 = math.log(2.0)
_TIE_TOLERANCE = 1e-12


def _bernoulli_tail_range(source: KnownSource, n: int, ones: int) -> range:
    """Numbers of ones j whose words are strictly more probable than a word with ``ones``."""
    p = source.p
    if p == 0.5:
        return range(0)
    if p == 1.0:
        return range(n, n + 1) if ones < n else range(0)
    if p == 0.0:
        return range(0, 1) if ones > 0 else range(0)
    if p > 0.5:
        return range(ones + 1, n + 1)
    return range(0, ones)


def _log2_binomial_tail(n: int, js: range) -> float:
    """log2 of sum_{j in js} C(n, j)."""
    if len(js) == 0:
        return -math.inf
    if n <= EXACT_TAIL_LIMIT:
        return math.log2(sum(math.comb(n, j) for j in js))
    j = np.arange(js.start, js.stop, dtype=np.float64)
    ln_terms = gammaln(n + 1.0) - gammaln(j + 1.0) - gammaln(n - j + 1.0)
    return float(logsumexp(ln_terms)) / _LN2


def _markov_log2_count(x: BitSequence, source: KnownSource) -> float:
    n = len(x)
    if n > MARKOV_ENUMERATION_LIMIT:
        raise OracleLimitError(
            f"Markov oracle enumerates 2**n words; n={n} exceeds {MARKOV_ENUMERATION_LIMIT}"
        )
    if n == 0:
        return -math.inf
    codes = np.arange(1 << n, dtype=np.int64)
    pair_counts = np.zeros((4, codes.size), dtype=np.int32)
    prev = (codes >> (n - 1)) & 1
    first = prev.copy()
    for i in range(1, n):
        cur = (codes >> (n - 1 - i)) & 1
        idx = prev * 2 + cur
        for cell in range(4):
            pair_counts[cell] += idx == cell
        prev = cur
    # nu depende solo de la firma (x1, n00, n01, n10, n11)
    signature = np.stack([first, *pair_counts]).T
    unique, counts = np.unique(signature, axis=0, return_counts=True)
    lp = source.log2_prob_markov(unique[:, 0], unique[:, 1], unique[:, 2],
                                 unique[:, 3], unique[:, 4])
    lp_x = source.log2_prob(x)
    tol = _TIE_TOLERANCE * max(1.0, abs(lp_x)) if math.isfinite(lp_x) else 0.0
    better = int(counts[lp > lp_x + tol].sum())
    return math.log2(better) if better else -math.inf


def np_log2_pvalue(x: BitsLike, source: KnownSource) -> float:
    """log2 of the Neyman-Pearson p-value; -inf when no word is more probable."""
    x = BitSequence.coerce(x)
    n = len(x)
    if source.is_bernoulli:
        log2_count = _log2_binomial_tail(n, _bernoulli_tail_range(source, n, x.count_ones()))
    else:
        log2_count = _markov_log2_count(x, source)
    return log2_count - n


def np_pvalue_exact(x: BitsLike, source: KnownSource) -> float:
    """|{y : nu(y) > nu(x)}| / 2**n with the strict inequality.

    The uniform source ties every word, so Bernoulli(1/2) gives 0 for any x.
    """
    x = BitSequence.coerce(x)
    n = len(x)
    if source.is_bernoulli and n <= EXACT_TAIL_LIMIT:
        count = sum(math.comb(n, j) for j in _bernoulli_tail_range(source, n, x.count_ones()))
        return count / 2 ** n
    return 2.0 ** np_log2_pvalue(x, source)


def np_pvalue_monte_carlo(x: BitsLike, source: KnownSource, samples: int = 100_000,
                          seed: int = 0) -> float:
    """Sampling estimate of the NP p-value for words too long to enumerate."""
    x = BitSequence.coerce(x)
    n = len(x)
    rng = np.random.Generator(np.random.PCG64(seed))
    lp_x = source.log2_prob(x)
    words = rng.integers(0, 2, size=(samples, n), dtype=np.int64)
    if source.is_bernoulli:
        lp = source.log2_prob_bernoulli(words.sum(axis=1), n)
    else:
        pairs = words[:, :-1] * 2 + words[:, 1:]
        lp = source.log2_prob_markov(words[:, 0], *((pairs == c).sum(axis=1) for c in range(4)))
    tol = _TIE_TOLERANCE * max(1.0, abs(lp_x)) if math.isfinite(lp_x) else 0.0
    return float(np.mean(lp > lp_x + tol))


def np_critical_region_size(alpha: float, n: int, source: KnownSource) -> int:
    """floor(alpha * 2**n), the size of the non-randomized NP critical region."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if not source.is_bernoulli and n > MARKOV_ENUMERATION_LIMIT:
        raise OracleLimitError(f"n={n} exceeds {MARKOV_ENUMERATION_LIMIT} for a Markov source")
    return math.floor(Fraction(alpha) * 2 ** n)


def _all_words(n: int) -> np.ndarray:
    """All 2**n words as rows, in lexicographic order."""
    codes = np.arange(1 << n, dtype=np.int64)[:, None]
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)[None, :]
    return ((codes >> shifts) & 1).astype(np.uint8)


def _word_log2_probs(words: np.ndarray, source: KnownSource) -> np.ndarray:
    n = words.shape[1]
    if n == 0:
        return np.zeros(words.shape[0])
    if source.is_bernoulli:
        return source.log2_prob_bernoulli(words.sum(axis=1, dtype=np.int64), n)
    w = words.astype(np.int64)
    pairs = w[:, :-1] * 2 + w[:, 1:]
    return source.log2_prob_markov(w[:, 0], *((pairs == c).sum(axis=1) for c in range(4)))


def np_critical_region(alpha: float, n: int, source: KnownSource) -> List[BitSequence]:
    """Words of the NP critical region, most probable first, ties lexicographic."""
    if n > EXHAUSTIVE_LIMIT:
        raise OracleLimitError(f"critical region listing enumerates 2**n words; n={n} > {EXHAUSTIVE_LIMIT}")
    size = np_critical_region_size(alpha, n, source)
    words = _all_words(n)
    lp = _word_log2_probs(words, source)
    # lexsort: la última clave es la principal; el índice ya es el orden lexicográfico
    order = np.lexsort((np.arange(words.shape[0]), -lp))
    return [BitSequence(words[i]) for i in order[:size]]


StatisticFn = Callable[[np.ndarray], float]


def exhaustive_pvalue_oracle(statistic: StatisticFn, x: BitsLike,
                             tolerance: float = 1e-9) -> float:
    """|{y : tau(y) > tau(x)}| / 2**n by enumerating every word y.

    Values within ``tolerance`` of tau(x) count as ties (floating round-off).
    """
    x = BitSequence.coerce(x)
    n = len(x)
    if n > EXHAUSTIVE_LIMIT:
        raise OracleLimitError(f"exhaustive oracle supports n <= {EXHAUSTIVE_LIMIT}, got {n}")
    observed = float(statistic(x.bits))
    values = np.fromiter((statistic(row) for row in _all_words(n)), dtype=np.float64,
                         count=1 << n)
    return int(np.count_nonzero(values > observed + tolerance)) / 2 ** n


def required_sample_size(alpha: float, h: float) -> int:
    """ceil(-log2(alpha) / (1 - h)) symbols: below it even the NP test cannot reject."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0.0 <= h <= 1.0:
        raise ValueError(f"entropy must lie in [0, 1], got {h}")
    if h >= 1.0:
        raise InfiniteSampleSizeError("the sample size becomes infinite when h(nu) = 1")
    return math.ceil(-math.log2(alpha) / (1.0 - h))


