"""
Deterministic bit sources used to exercise the tester.

Two word generators under test (MRG32k3a, a configurable LCG), the positionwise
mix of a good and a bad stream, and two known-entropy sources (Bernoulli,
binary Markov) driven by numpy's PCG64, a generator distinct from the ones
under test.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.data.bitstream import BitSequence, mix
from src.errors import InvalidSpecError, SeekError, StreamExhaustedError


# MRG32k3a constants (L'Ecuyer's combined order-3 recurrences)
MRG_M1 = 4294967087
MRG_M2 = 4294944443
MRG_A12 = 1403580
MRG_A13N = 810728
MRG_A21 = 527612
MRG_A23N = 1370589

WORD_BITS = 32
TransitionMatrix = Tuple[Tuple[float, float], Tuple[float, float]]


class GeneratorKind(str, Enum):
    MRG32K3A = "mrg32k3a"
    LCG = "lcg"
    MIXED = "mixed"
    BERNOULLI = "bernoulli"
    MARKOV = "markov"


@dataclass(frozen=True)
class GeneratorSpec:
    """Parametric description of a bit source.

    ``p`` is the probability of symbol 1 (Bernoulli); ``transition[s][t]`` is
    P(next = t | current = s) (Markov). ``state`` optionally pins the six
    MRG32k3a seed words; otherwise ``seed`` is expanded through SeedSequence.
    """

    kind: GeneratorKind
    seed: int = 12345
    p: float = 0.5
    transition: Optional[TransitionMatrix] = None
    state: Optional[Tuple[int, ...]] = None
    lcg_multiplier: int = 65539
    lcg_increment: int = 0
    lcg_modulus: int = 2 ** 31
    good: Optional["GeneratorSpec"] = None
    bad: Optional["GeneratorSpec"] = None
    D: int = 2

    def validate(self) -> "GeneratorSpec":
        kind = GeneratorKind(self.kind)
        if kind is GeneratorKind.BERNOULLI:
            if not 0.0 <= self.p <= 1.0:
                raise InvalidSpecError(f"probability must lie in [0, 1], got {self.p}", key="p")
        elif kind is GeneratorKind.MARKOV:
            if self.transition is None:
                raise InvalidSpecError("markov source needs a 2x2 transition matrix", key="transition")
            if len(self.transition) != 2 or any(len(row) != 2 for row in self.transition):
                raise InvalidSpecError("transition matrix must be 2x2", key="transition")
            for row in self.transition:
                if min(row) < 0:
                    raise InvalidSpecError("transition entries must be >= 0", key="transition")
                if abs(sum(row) - 1.0) > 1e-12:
                    raise InvalidSpecError(f"row {row} does not sum to 1", key="transition")
        elif kind is GeneratorKind.MIXED:
            if self.D < 1:
                raise InvalidSpecError(f"D must be >= 1, got {self.D}", key="D")
            if self.good is None or self.bad is None:
                raise InvalidSpecError("mixed source needs both good and bad specs", key="good")
            for label, inner in (("good", self.good), ("bad", self.bad)):
                if GeneratorKind(inner.kind) is GeneratorKind.MIXED:
                    raise InvalidSpecError("mixed sources cannot be nested", key=label)
                inner.validate()
        elif kind is GeneratorKind.LCG:
            if self.lcg_modulus < 2:
                raise InvalidSpecError("modulus must be >= 2", key="lcg_modulus")
            if not 0 < self.lcg_multiplier < self.lcg_modulus:
                raise InvalidSpecError("multiplier must lie in (0, modulus)", key="lcg_multiplier")
        elif kind is GeneratorKind.MRG32K3A and self.state is not None:
            if len(self.state) != 6:
                raise InvalidSpecError("MRG32k3a state needs six integers", key="state")
            s1, s2 = self.state[:3], self.state[3:]
            if any(not 0 <= v < MRG_M1 for v in s1) or not any(s1):
                raise InvalidSpecError("first three state words must lie in [0, m1) and not all be 0", key="state")
            if any(not 0 <= v < MRG_M2 for v in s2) or not any(s2):
                raise InvalidSpecError("last three state words must lie in [0, m2) and not all be 0", key="state")
        return self

    def with_seed(self, seed: int) -> "GeneratorSpec":
        """Same source with a new seed (both inner streams of a mixed source)."""
        if GeneratorKind(self.kind) is GeneratorKind.MIXED:
            return replace(self, seed=seed,
                           good=replace(self.good, seed=seed, state=None),
                           bad=replace(self.bad, seed=seed + 1, state=None))
        return replace(self, seed=seed, state=None)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": GeneratorKind(self.kind).value, "seed": self.seed}
        kind = GeneratorKind(self.kind)
        if kind is GeneratorKind.BERNOULLI:
            data["p"] = self.p
        elif kind is GeneratorKind.MARKOV:
            data["transition"] = [list(row) for row in self.transition]
        elif kind is GeneratorKind.LCG:
            data.update(multiplier=self.lcg_multiplier, increment=self.lcg_increment,
                        modulus=self.lcg_modulus)
        elif kind is GeneratorKind.MIXED:
            data.update(D=self.D, good=self.good.to_dict(), bad=self.bad.to_dict())
        if self.state is not None:
            data["state"] = list(self.state)
        return data


def _words_to_bits(words: List[int]) -> np.ndarray:
    array = np.asarray(words, dtype=">u4")
    return np.unpackbits(array.view(np.uint8))


class BitSource:
    """Seekable stream of bits; ``position`` counts bits already delivered."""

    seekable = True

    def __init__(self) -> None:
        self._position = 0

    @property
    def position(self) -> int:
        return self._position

    @property
    def source_id(self) -> str:
        return f"{type(self).__name__}@{id(self):x}"

    def read(self, n_bits: int) -> BitSequence:
        if n_bits < 0:
            raise ValueError(f"n_bits must be >= 0, got {n_bits}")
        bits = self._produce(n_bits)
        self._position += n_bits
        return BitSequence(bits)

    def seek(self, offset: int) -> None:
        if offset < 0:
            raise ValueError(f"offset must be >= 0, got {offset}")
        if offset < self._position:
            if not self.seekable:
                raise SeekError(f"cannot seek back from {self._position} to {offset}")
            self.reset()
        self._skip(offset - self._position)
        self._position = offset

    def read_window(self, start: int, length: int) -> BitSequence:
        self.seek(start)
        return self.read(length)

    def reset(self) -> None:
        raise NotImplementedError

    def _produce(self, n_bits: int) -> np.ndarray:
        raise NotImplementedError

    def _skip(self, n_bits: int) -> None:
        # Por defecto se genera y se descarta
        chunk = 1 << 20
        while n_bits > 0:
            step = min(chunk, n_bits)
            self._produce(step)
            n_bits -= step


class WordSource(BitSource):
    """Source emitting 32-bit words, consumed most-significant bit first."""

    def __init__(self) -> None:
        super().__init__()
        self._pending = np.zeros(0, dtype=np.uint8)

    def next_word(self) -> int:
        raise NotImplementedError

    def _restart(self) -> None:
        raise NotImplementedError

    def reset(self) -> None:
        self._restart()
        self._pending = np.zeros(0, dtype=np.uint8)
        self._position = 0

    def words(self, count: int) -> List[int]:
        return [self.next_word() for _ in range(count)]

    def _produce(self, n_bits: int) -> np.ndarray:
        if n_bits <= self._pending.size:
            out, self._pending = self._pending[:n_bits], self._pending[n_bits:]
            return out
        missing = n_bits - self._pending.size
        fresh = _words_to_bits(self.words(-(-missing // WORD_BITS)))
        out = np.concatenate([self._pending, fresh[:missing]])
        self._pending = fresh[missing:]
        return out

    def _skip(self, n_bits: int) -> None:
        if n_bits <= self._pending.size:
            self._pending = self._pending[n_bits:]
            return
        n_bits -= self._pending.size
        whole, rest = divmod(n_bits, WORD_BITS)
        for _ in range(whole):
            self.next_word()
        self._pending = np.zeros(0, dtype=np.uint8)
        if rest:
            self._pending = _words_to_bits([self.next_word()])[rest:]


class MRG32k3a(WordSource):
    """Combined multiple recursive generator MRG32k3a.

    Output z = (p1 - p2) mod m1 in [1, m1], delivered as a 32-bit word.
    """

    def __init__(self, state: Tuple[int, ...]):
        super().__init__()
        self._initial = tuple(int(v) for v in state)
        self._restart()

    @classmethod
    def from_seed(cls, seed: int) -> "MRG32k3a":
        words = np.random.SeedSequence(seed).generate_state(6, dtype=np.uint64)
        s1 = [int(w) % MRG_M1 for w in words[:3]]
        s2 = [int(w) % MRG_M2 for w in words[3:]]
        if not any(s1):
            s1[0] = 12345
        if not any(s2):
            s2[0] = 12345
        return cls(tuple(s1 + s2))

    def _restart(self) -> None:
        self._s1 = list(self._initial[:3])
        self._s2 = list(self._initial[3:])

    def next_word(self) -> int:
        s1, s2 = self._s1, self._s2
        p1 = (MRG_A12 * s1[1] - MRG_A13N * s1[0]) % MRG_M1
        s1[0], s1[1], s1[2] = s1[1], s1[2], p1
        p2 = (MRG_A21 * s2[2] - MRG_A23N * s2[0]) % MRG_M2
        s2[0], s2[1], s2[2] = s2[1], s2[2], p2
        return p1 - p2 if p1 > p2 else p1 - p2 + MRG_M1

    def next_uniform(self) -> float:
        return self.next_word() / (MRG_M1 + 1)


class LCG(WordSource):
    """x_{k+1} = (a x_k + c) mod m; the state is scaled to a 32-bit word."""

    def __init__(self, seed: int, multiplier: int = 65539, increment: int = 0,
                 modulus: int = 2 ** 31):
        super().__init__()
        self.multiplier = multiplier
        self.increment = increment
        self.modulus = modulus
        seed = seed % modulus
        if increment == 0 and seed == 0:
            seed = 1  # un multiplicativo con estado 0 queda fijo en 0
        self._seed = seed
        self._restart()

    def _restart(self) -> None:
        self._state = self._seed

    def next_state(self) -> int:
        self._state = (self.multiplier * self._state + self.increment) % self.modulus
        return self._state

    def next_word(self) -> int:
        return (self.next_state() << WORD_BITS) // self.modulus


class BernoulliSource(BitSource):
    """i.i.d. bits, P(1) = p, by threshold on 53-bit uniforms."""

    def __init__(self, p: float, seed: int):
        super().__init__()
        self.p = p
        self._seed = seed
        self.reset()

    def reset(self) -> None:
        self._rng = np.random.Generator(np.random.PCG64(self._seed))
        self._position = 0

    def _produce(self, n_bits: int) -> np.ndarray:
        return (self._rng.random(n_bits) < self.p).astype(np.uint8)

    def _skip(self, n_bits: int) -> None:
        # random() consume exactamente un valor de 64 bits por muestra
        self._rng.bit_generator.advance(n_bits)


class MarkovSource(BitSource):
    """Stationary binary Markov chain; first symbol drawn from the stationary law."""

    def __init__(self, transition: TransitionMatrix, seed: int):
        super().__init__()
        self.transition = transition
        self._seed = seed
        self.reset()

    def reset(self) -> None:
        self._rng = np.random.Generator(np.random.PCG64(self._seed))
        self._last: Optional[int] = None
        self._position = 0

    def _produce(self, n_bits: int) -> np.ndarray:
        uniforms = self._rng.random(n_bits)
        out = np.empty(n_bits, dtype=np.uint8)
        p_one = (self.transition[0][1], self.transition[1][1])
        state = self._last
        start = 0
        if state is None and n_bits:
            state = int(uniforms[0] < stationary_distribution(self.transition)[1])
            out[0] = state
            start = 1
        for i in range(start, n_bits):
            state = 1 if uniforms[i] < p_one[state] else 0
            out[i] = state
        self._last = state
        return out


class MixedSource(BitSource):
    """m_i = g_i if i mod D != 0 else b_i, with i the global 1-based stream position."""

    def __init__(self, good: BitSource, bad: BitSource, D: int):
        super().__init__()
        self.good = good
        self.bad = bad
        self.D = D
        self.seekable = good.seekable and bad.seekable

    def reset(self) -> None:
        self.good.reset()
        self.bad.reset()
        self._position = 0

    def _produce(self, n_bits: int) -> np.ndarray:
        g = self.good.read(n_bits)
        b = self.bad.read(n_bits)
        return mix(g, b, self.D, offset=self._position).bits

    def _skip(self, n_bits: int) -> None:
        self.good.seek(self.good.position + n_bits)
        self.bad.seek(self.bad.position + n_bits)


class SequenceSource(BitSource):
    """In-memory sequence served as a finite, seekable stream."""

    def __init__(self, sequence: BitSequence, name: str = "memory"):
        super().__init__()
        self.sequence = BitSequence.coerce(sequence)
        self.name = name

    @property
    def source_id(self) -> str:
        return f"{self.name}@{id(self.sequence):x}"

    def reset(self) -> None:
        self._position = 0

    def _produce(self, n_bits: int) -> np.ndarray:
        end = self._position + n_bits
        if end > len(self.sequence):
            raise StreamExhaustedError(f"sequence has {len(self.sequence)} bits, asked up to {end}")
        return self.sequence.bits[self._position:end]

    def _skip(self, n_bits: int) -> None:
        if self._position + n_bits > len(self.sequence):
            raise StreamExhaustedError(f"cannot skip past bit {len(self.sequence)}")


def as_source(value) -> BitSource:
    """Pass sources through; wrap in-memory bits in a SequenceSource."""
    if isinstance(value, BitSource):
        return value
    return SequenceSource(BitSequence.coerce(value))


def build_source(spec: GeneratorSpec) -> BitSource:
    spec.validate()
    kind = GeneratorKind(spec.kind)
    if kind is GeneratorKind.MRG32K3A:
        if spec.state is not None:
            return MRG32k3a(spec.state)
        return MRG32k3a.from_seed(spec.seed)
    if kind is GeneratorKind.LCG:
        return LCG(spec.seed, spec.lcg_multiplier, spec.lcg_increment, spec.lcg_modulus)
    if kind is GeneratorKind.BERNOULLI:
        return BernoulliSource(spec.p, spec.seed)
    if kind is GeneratorKind.MARKOV:
        return MarkovSource(spec.transition, spec.seed)
    return MixedSource(build_source(spec.good), build_source(spec.bad), spec.D)


def generate(spec: GeneratorSpec, n_bits: int) -> BitSequence:
    """First ``n_bits`` of the stream determined by ``spec``."""
    return build_source(spec).read(n_bits)


def stream_position(source: BitSource) -> int:
    return source.position


def seek(source: BitSource, offset: int) -> None:
    source.seek(offset)


def binary_entropy(p: float) -> float:
    """h(p) = -p log2 p - (1-p) log2 (1-p), with 0 log 0 = 0."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def stationary_distribution(transition: TransitionMatrix) -> Tuple[float, float]:
    a = transition[0][1]  # 0 -> 1
    b = transition[1][0]  # 1 -> 0
    if a + b == 0.0:
        return 0.5, 0.5  # cadena absorbente: cualquier mezcla es estacionaria
    return b / (a + b), a / (a + b)


def markov_entropy_rate(transition: TransitionMatrix) -> float:
    pi0, pi1 = stationary_distribution(transition)
    return pi0 * binary_entropy(transition[0][1]) + pi1 * binary_entropy(transition[1][1])


def true_entropy(spec: GeneratorSpec) -> Optional[float]:
    """Entropy rate in bits/symbol, or ``None`` when it is not known analytically."""
    kind = GeneratorKind(spec.kind)
    if kind is GeneratorKind.BERNOULLI:
        return binary_entropy(spec.p)
    if kind is GeneratorKind.MARKOV:
        spec.validate()
        return markov_entropy_rate(spec.transition)
    return None


def spec_from_dict(data: Dict[str, Any], key: str = "generator") -> GeneratorSpec:
    """Build a GeneratorSpec from its config mapping, naming bad keys."""
    if not isinstance(data, dict):
        raise InvalidSpecError("expected a mapping", key=key)
    allowed = {"kind", "seed", "p", "transition", "state", "multiplier", "increment",
               "modulus", "good", "bad", "D"}
    for name in data:
        if name not in allowed:
            raise InvalidSpecError("unknown key", key=f"{key}.{name}")
    if "kind" not in data:
        raise InvalidSpecError("missing required field", key=f"{key}.kind")
    try:
        kind = GeneratorKind(str(data["kind"]).lower())
    except ValueError:
        raise InvalidSpecError(f"unknown generator kind {data['kind']!r}", key=f"{key}.kind")
    kwargs: Dict[str, Any] = {"kind": kind}
    if "seed" in data:
        kwargs["seed"] = int(data["seed"])
    if "p" in data:
        kwargs["p"] = float(data["p"])
    if "transition" in data:
        kwargs["transition"] = tuple(tuple(float(v) for v in row) for row in data["transition"])
    if "state" in data:
        kwargs["state"] = tuple(int(v) for v in data["state"])
    for src, dst in (("multiplier", "lcg_multiplier"), ("increment", "lcg_increment"),
                     ("modulus", "lcg_modulus")):
        if src in data:
            kwargs[dst] = int(data[src])
    if "D" in data:
        kwargs["D"] = int(data["D"])
    for inner in ("good", "bad"):
        if inner in data:
            kwargs[inner] = spec_from_dict(data[inner], key=f"{key}.{inner}")
    spec = GeneratorSpec(**kwargs)
    try:
        return spec.validate()
    except InvalidSpecError as exc:
        if exc.key and not exc.key.startswith(key):
            raise InvalidSpecError(str(exc).split(": ", 1)[-1], key=f"{key}.{exc.key}") from exc
        raise
