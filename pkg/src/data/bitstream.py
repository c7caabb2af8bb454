"""
Finite binary words and the two structural transforms applied to them
(decimation and positionwise mixing).

Positions in the public API are 1-based, x = x1 x2 ... xn; storage is a
0-based read-only ``uint8`` numpy array.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

import numpy as np


BitsLike = Union["BitSequence", np.ndarray, Iterable[int], str]


@dataclass(frozen=True, eq=False)
class BitSequence:
    """Immutable finite binary word."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        array = np.asarray(self.bits)
        if array.ndim != 1:
            raise ValueError("BitSequence expects a one-dimensional array")
        if array.size and np.any((array != 0) & (array != 1)):
            raise ValueError("BitSequence symbols must be 0 or 1")
        array = np.array(array, dtype=np.uint8, copy=True)
        array.setflags(write=False)
        object.__setattr__(self, "bits", array)

    @classmethod
    def from_string(cls, text: str) -> "BitSequence":
        """Build from a string such as ``"10110"`` (whitespace ignored)."""
        cleaned = "".join(text.split())
        if any(c not in "01" for c in cleaned):
            raise ValueError(f"not a binary string: {text!r}")
        return cls(np.frombuffer(cleaned.encode("ascii"), dtype=np.uint8) - ord("0"))

    @classmethod
    def coerce(cls, value: BitsLike) -> "BitSequence":
        if isinstance(value, BitSequence):
            return value
        if isinstance(value, str):
            return cls.from_string(value)
        return cls(np.fromiter(value, dtype=np.int64) if not isinstance(value, np.ndarray) else value)

    @classmethod
    def empty(cls) -> "BitSequence":
        return cls(np.zeros(0, dtype=np.uint8))

    def __len__(self) -> int:
        return int(self.bits.size)

    @property
    def n(self) -> int:
        return len(self)

    def __iter__(self) -> Iterator[int]:
        return iter(int(b) for b in self.bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitSequence):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((len(self), self.bits.tobytes()))

    def __repr__(self) -> str:
        if len(self) <= 64:
            return f"BitSequence('{self.to_string()}')"
        return f"BitSequence(<{len(self)} bits>)"

    def at(self, i: int) -> int:
        """Symbol x_i, 1-indexed."""
        if not 1 <= i <= len(self):
            raise IndexError(f"position {i} outside 1..{len(self)}")
        return int(self.bits[i - 1])

    def prefix(self, n: int) -> "BitSequence":
        return BitSequence(self.bits[:n])

    def window(self, start: int, length: int) -> "BitSequence":
        """Bits at 0-based offsets [start, start + length)."""
        return BitSequence(self.bits[start:start + length])

    def count_ones(self) -> int:
        return int(np.count_nonzero(self.bits))

    def to_string(self) -> str:
        return (self.bits + ord("0")).tobytes().decode("ascii")

    def to_bytes(self) -> bytes:
        """Pack most-significant-first; a trailing partial byte is zero padded."""
        return np.packbits(self.bits).tobytes()


def from_bytes(data: Union[bytes, bytearray, memoryview, Iterable[int]]) -> BitSequence:
    """Expand bytes into bits, most-significant bit first within each byte."""
    raw = np.frombuffer(bytes(data), dtype=np.uint8)
    return BitSequence(np.unpackbits(raw))


def read_file(path: Union[str, Path], max_bytes: Optional[int] = None) -> BitSequence:
    with Path(path).open("rb") as f:
        data = f.read() if max_bytes is None else f.read(max_bytes)
    return from_bytes(data)


def decimate(x: BitsLike, step: int) -> BitSequence:
    """Subsequence at positions 1, 1+step, 1+2*step, ...; length ceil(n/step)."""
    if step < 1:
        raise ValueError(f"decimation step must be >= 1, got {step}")
    x = BitSequence.coerce(x)
    if step == 1:
        return x
    return BitSequence(x.bits[::step])


def mix(good: BitsLike, bad: BitsLike, D: int, offset: int = 0) -> BitSequence:
    """Positionwise mix: m_i = b_i when i mod D == 0, else g_i.

    ``offset`` shifts the position counter, so a window that starts at stream
    offset o uses i = o + 1, ..., o + n. The default mixes from position 1.
    """
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    good = BitSequence.coerce(good)
    bad = BitSequence.coerce(bad)
    if len(good) != len(bad):
        raise ValueError(f"length mismatch: good has {len(good)} bits, bad has {len(bad)}")
    positions = np.arange(offset + 1, offset + len(good) + 1, dtype=np.int64)
    return BitSequence(np.where(positions % D == 0, bad.bits, good.bits))
