"""Raw binary files as bit sources (bytes expanded most-significant bit first)."""

import io
from pathlib import Path
from typing import BinaryIO, Optional, Union

import numpy as np

from src.data.generators import BitSource
from src.errors import StreamExhaustedError
from src.utils.logger import get_logger

logger = get_logger(__name__)


class FileBitSource(BitSource):
    """Bit stream over a binary file or file-like object.

    Backward seeks need an underlying stream that supports ``seek``; pipes and
    standard input only move forward.
    """

    def __init__(self, stream: Union[str, Path, BinaryIO]):
        super().__init__()
        if isinstance(stream, (str, Path)):
            self.path: Optional[Path] = Path(stream)
            self._stream: BinaryIO = self.path.open("rb")
            self._owned = True
        else:
            self.path = None
            self._stream = stream
            self._owned = False
        try:
            self.seekable = bool(self._stream.seekable())
        except (AttributeError, io.UnsupportedOperation):
            self.seekable = False
        self._pending = np.zeros(0, dtype=np.uint8)
        logger.debug(f"Fuente de fichero abierta: {self.source_id}")

    @property
    def source_id(self) -> str:
        if self.path is not None:
            return f"file:{self.path.resolve()}"
        return super().source_id

    @property
    def size_bits(self) -> Optional[int]:
        if self.path is not None:
            return self.path.stat().st_size * 8
        return None

    def close(self) -> None:
        if self._owned:
            self._stream.close()

    def __enter__(self) -> "FileBitSource":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def reset(self) -> None:
        self._stream.seek(0)
        self._pending = np.zeros(0, dtype=np.uint8)
        self._position = 0

    def _read_bytes(self, count: int) -> np.ndarray:
        data = self._stream.read(count)
        if len(data) < count:
            raise StreamExhaustedError(
                f"input ended after {self._position // 8 + len(data)} bytes"
            )
        return np.unpackbits(np.frombuffer(data, dtype=np.uint8))

    def _produce(self, n_bits: int) -> np.ndarray:
        if n_bits <= self._pending.size:
            out, self._pending = self._pending[:n_bits], self._pending[n_bits:]
            return out
        missing = n_bits - self._pending.size
        fresh = self._read_bytes(-(-missing // 8))
        out = np.concatenate([self._pending, fresh[:missing]])
        self._pending = fresh[missing:]
        return out

    def _skip(self, n_bits: int) -> None:
        if n_bits <= self._pending.size:
            self._pending = self._pending[n_bits:]
            return
        n_bits -= self._pending.size
        whole, rest = divmod(n_bits, 8)
        if self.seekable:
            self._stream.seek(whole, io.SEEK_CUR)
        else:
            self._read_bytes(whole)
        self._pending = np.zeros(0, dtype=np.uint8)
        if rest:
            self._pending = self._read_bytes(1)[rest:]
