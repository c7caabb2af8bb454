"""
Sources with a known law nu, used as alternatives H1 by the exact oracle
and the convergence harness.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.data.bitstream import BitSequence, BitsLike
from src.data.generators import (
    GeneratorKind,
    GeneratorSpec,
    TransitionMatrix,
    binary_entropy,
    generate,
    stationary_distribution,
    true_entropy,
)
from src.errors import InvalidSpecError


def _log2(value: float) -> float:
    return math.log2(value) if value > 0.0 else -math.inf


def _weighted(counts: np.ndarray, log_value: float) -> np.ndarray:
    # 0 * log 0 = 0
    counts = np.asarray(counts, dtype=np.float64)
    if math.isinf(log_value):
        return np.where(counts > 0, -np.inf, 0.0)
    return counts * log_value


@dataclass(frozen=True)
class KnownSource:
    """Bernoulli(p) or stationary binary Markov source with an explicit word law."""

    family: GeneratorKind
    p: float = 0.5
    transition: Optional[TransitionMatrix] = None

    def __post_init__(self) -> None:
        family = GeneratorKind(self.family)
        if family not in (GeneratorKind.BERNOULLI, GeneratorKind.MARKOV):
            raise InvalidSpecError(f"{family.value} has no known law", key="kind")
        object.__setattr__(self, "family", family)
        self.to_spec().validate()

    @classmethod
    def bernoulli(cls, p: float) -> "KnownSource":
        return cls(GeneratorKind.BERNOULLI, p=p)

    @classmethod
    def markov(cls, transition: TransitionMatrix) -> "KnownSource":
        return cls(GeneratorKind.MARKOV, transition=tuple(tuple(row) for row in transition))

    @classmethod
    def from_spec(cls, spec: GeneratorSpec) -> "KnownSource":
        kind = GeneratorKind(spec.kind)
        if kind is GeneratorKind.BERNOULLI:
            return cls.bernoulli(spec.p)
        if kind is GeneratorKind.MARKOV:
            return cls.markov(spec.transition)
        raise InvalidSpecError(f"{kind.value} has no known law", key="kind")

    def to_spec(self, seed: int = 0) -> GeneratorSpec:
        return GeneratorSpec(kind=self.family, seed=seed, p=self.p, transition=self.transition)

    @property
    def is_bernoulli(self) -> bool:
        return self.family is GeneratorKind.BERNOULLI

    @property
    def entropy_rate(self) -> float:
        """h(nu) in bits per symbol."""
        return true_entropy(self.to_spec())

    def sample(self, n: int, seed: int) -> BitSequence:
        return generate(self.to_spec(seed), n)

    # Probabilidades de palabras

    def log2_prob_bernoulli(self, ones, n: int) -> np.ndarray:
        ones = np.asarray(ones)
        return _weighted(ones, _log2(self.p)) + _weighted(n - ones, _log2(1.0 - self.p))

    def log2_prob_markov(self, first, c00, c01, c10, c11) -> np.ndarray:
        """log2 nu from the first symbol and the four transition counts."""
        t = self.transition
        pi0, pi1 = stationary_distribution(t)
        first = np.asarray(first)
        head = np.where(first == 1, _log2(pi1), _log2(pi0))
        return (head
                + _weighted(c00, _log2(t[0][0])) + _weighted(c01, _log2(t[0][1]))
                + _weighted(c10, _log2(t[1][0])) + _weighted(c11, _log2(t[1][1])))

    def log2_prob(self, x: BitsLike) -> float:
        x = BitSequence.coerce(x)
        n = len(x)
        if n == 0:
            return 0.0
        if self.is_bernoulli:
            return float(self.log2_prob_bernoulli(x.count_ones(), n))
        first, counts = markov_signature(x.bits)
        return float(self.log2_prob_markov(first, *counts))

    def prob(self, x: BitsLike) -> float:
        return 2.0 ** self.log2_prob(x)


def markov_signature(bits: np.ndarray) -> Tuple[int, Tuple[int, int, int, int]]:
    """(x1, (n00, n01, n10, n11)); nu(x) of a Markov source only depends on it."""
    bits = np.asarray(bits, dtype=np.int64)
    pairs = np.bincount(bits[:-1] * 2 + bits[1:], minlength=4)
    return int(bits[0]), (int(pairs[0]), int(pairs[1]), int(pairs[2]), int(pairs[3]))


def entropy_rate(source: KnownSource) -> float:
    return source.entropy_rate


def redundancy(source: KnownSource) -> float:
    """1 - h(nu): the limit of -log2(p-value)/n under nu for optimal tests."""
    return 1.0 - source.entropy_rate


__all__ = [
    "KnownSource",
    "binary_entropy",
    "entropy_rate",
    "markov_signature",
    "redundancy",
]
