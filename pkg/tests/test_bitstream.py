import numpy as np
import pytest

from src.data.bitstream import BitSequence, decimate, from_bytes, mix, read_file


def test_bit_sequence_is_immutable():
    """Test BitSequence validation, 1-based access and read-only storage."""

    print("\n🧱 TESTING BIT SEQUENCE")
    print("=" * 50)

    x = BitSequence.from_string("1011 0")
    print(f"x = {x!r}")

    assert len(x) == 5
    assert x.at(1) == 1 and x.at(2) == 0 and x.at(5) == 0, "positions are 1-based"
    assert x.count_ones() == 3
    assert x.to_string() == "10110"

    with pytest.raises(ValueError):
        x.bits[0] = 0
    with pytest.raises(IndexError):
        x.at(0)
    with pytest.raises(ValueError):
        BitSequence.from_string("10201")
    with pytest.raises(ValueError):
        BitSequence(np.array([0, 1, 2]))
    with pytest.raises(ValueError):
        BitSequence(np.array([0.5, 1.0]))
    assert BitSequence(np.array([1.0, 0.0, True])).to_string() == "101"

    # the caller's array is copied, later writes do not leak in
    raw = np.array([1, 0, 1], dtype=np.uint8)
    y = BitSequence(raw)
    raw[0] = 0
    assert y.to_string() == "101"

    assert BitSequence.coerce([1, 0, 1]) == y
    assert BitSequence.empty().n == 0
    print("✅ BitSequence test passed!")


def test_from_bytes_msb_first():
    assert from_bytes(bytes([0xA5])).to_string() == "10100101"
    assert from_bytes(bytes([0xFF, 0x00])).to_string() == "1" * 8 + "0" * 8
    assert len(from_bytes(b"")) == 0

    x = BitSequence.from_string("1100101011110000")
    assert from_bytes(x.to_bytes()) == x


def test_read_file(tmp_path):
    path = tmp_path / "stream.bin"
    path.write_bytes(bytes([0x0F, 0x80, 0x01]))

    assert read_file(path).to_string() == "00001111" + "10000000" + "00000001"
    assert read_file(path, max_bytes=1).to_string() == "00001111"


def test_decimate_examples():
    """Test decimation keeps positions 1, 1+d, 1+2d, ..."""

    print("\n✂️ TESTING DECIMATION")
    print("=" * 50)

    assert decimate("101100", 2).to_string() == "110"
    assert decimate("10110", 3).to_string() == "11"
    assert decimate("10110", 1).to_string() == "10110"
    assert decimate("1", 4).to_string() == "1"
    assert len(decimate("", 3)) == 0

    with pytest.raises(ValueError):
        decimate("1010", 0)

    rng = np.random.default_rng(7)
    for n in (1, 2, 3, 17, 64, 1001):
        x = BitSequence(rng.integers(0, 2, n))
        for step in (1, 2, 3, 5):
            assert len(decimate(x, step)) == -(-n // step), f"length for n={n}, step={step}"
        assert decimate(decimate(x, 2), 2) == decimate(x, 4), f"composition fails for n={n}"
        print(f"  n={n}: ok")

    print("✅ Decimation test passed!")


def test_mix_examples():
    """Test positionwise mixing of a good and a bad word."""

    print("\n🔀 TESTING MIX")
    print("=" * 50)

    good, bad = "1111", "0000"
    assert mix(good, bad, 2).to_string() == "1010"
    assert mix(good, bad, 4).to_string() == "1110"
    assert mix(good, bad, 1).to_string() == "0000", "D=1 returns the bad word"
    assert mix(good, bad, 5).to_string() == "1111"

    # offset continues the global position counter
    assert mix(good, bad, 2, offset=1).to_string() == "0101"

    with pytest.raises(ValueError):
        mix("111", "00", 2)
    with pytest.raises(ValueError):
        mix("11", "00", 0)

    rng = np.random.default_rng(3)
    x = BitSequence(rng.integers(0, 2, 333))
    assert mix(x, x, 3) == x, "mixing a word with itself is the identity"

    n = 1000
    for D in (1, 2, 3, 7):
        mixed = mix(np.ones(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8), D)
        zeros = n - mixed.count_ones()
        print(f"  D={D}: {zeros} bits from the bad word")
        assert zeros == n // D

    print("✅ Mix test passed!")
