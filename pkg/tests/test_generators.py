import io

import numpy as np
import pytest

from src.data.bitstream import mix
from src.data.file_source import FileBitSource
from src.data.generators import (
    LCG,
    MRG32k3a,
    GeneratorKind,
    GeneratorSpec,
    SequenceSource,
    build_source,
    generate,
    seek,
    spec_from_dict,
    stationary_distribution,
    stream_position,
    true_entropy,
)
from src.errors import InvalidSpecError, SeekError, StreamExhaustedError


MRG = GeneratorSpec(kind=GeneratorKind.MRG32K3A, seed=2024)
RANDU = GeneratorSpec(kind=GeneratorKind.LCG, seed=1)


def test_mrg32k3a_known_answer():
    """Test MRG32k3a against the reference outputs for the all-12345 state."""

    print("\n🎲 TESTING MRG32k3a KNOWN ANSWERS")
    print("=" * 50)

    gen = MRG32k3a((12345,) * 6)
    words = gen.words(5)
    print(f"First words: {words}")
    assert words == [545508589, 1368065410, 1327943761, 3546985096, 951893194]

    gen.reset()
    assert gen.next_uniform() == pytest.approx(0.1270111220, abs=1e-9)

    # the bit stream is the words, most significant bit first
    spec = GeneratorSpec(kind=GeneratorKind.MRG32K3A, state=(12345,) * 6)
    bits = generate(spec, 64)
    assert int(bits.prefix(32).to_string(), 2) == 545508589
    assert int(bits.window(32, 32).to_string(), 2) == 1368065410
    print("✅ MRG32k3a known-answer test passed!")


def test_randu_states_and_low_bit():
    gen = LCG(seed=1)
    states = [gen.next_state() for _ in range(5)]
    assert states == [65539, 393225, 1769499, 7077969, 26542323]

    gen.reset()
    assert gen.next_word() == 65539 * 2, "31-bit states are scaled to 32-bit words"

    # the lowest bit of every RANDU word is constant
    bits = generate(RANDU, 3200).bits
    assert not bits[31::32].any()


def test_generation_is_deterministic():
    for spec in (MRG, RANDU,
                 GeneratorSpec(kind=GeneratorKind.BERNOULLI, p=0.3, seed=5),
                 GeneratorSpec(kind=GeneratorKind.MARKOV, transition=((0.9, 0.1), (0.2, 0.8)), seed=5)):
        first = generate(spec, 500)
        assert generate(spec, 500) == first, f"{spec.kind} is not reproducible"

        source = build_source(spec)
        head = source.read(123)
        tail = source.read(377)
        assert head.to_string() + tail.to_string() == first.to_string(), f"{spec.kind} chunking"

    assert generate(MRG, 256) != generate(MRG.with_seed(2025), 256)


@pytest.mark.parametrize("spec", [
    MRG,
    RANDU,
    GeneratorSpec(kind=GeneratorKind.BERNOULLI, p=0.3, seed=9),
    GeneratorSpec(kind=GeneratorKind.MARKOV, transition=((0.6, 0.4), (0.3, 0.7)), seed=9),
    GeneratorSpec(kind=GeneratorKind.MIXED, D=3,
                  good=GeneratorSpec(kind=GeneratorKind.MRG32K3A, seed=1),
                  bad=GeneratorSpec(kind=GeneratorKind.LCG, seed=2)),
], ids=lambda s: s.kind.value)
def test_seek_and_window(spec):
    full = generate(spec, 2000)
    source = build_source(spec)

    assert source.read_window(1000, 77) == full.window(1000, 77)
    assert stream_position(source) == 1077

    # backwards and forwards again
    assert source.read_window(13, 50) == full.window(13, 50)
    seek(source, 1500)
    assert source.read(100) == full.window(1500, 100)
    seek(source, 0)
    assert source.read(2000) == full


def test_mixed_source_matches_mix():
    good = GeneratorSpec(kind=GeneratorKind.MRG32K3A, seed=11)
    bad = GeneratorSpec(kind=GeneratorKind.LCG, seed=12)
    spec = GeneratorSpec(kind=GeneratorKind.MIXED, good=good, bad=bad, D=2)

    n = 4096
    expected = mix(generate(good, n), generate(bad, n), 2)
    assert generate(spec, n) == expected

    source = build_source(spec)
    source.read(1001)
    assert source.read(999) == expected.window(1001, 999), "position counter survives chunking"

    reseeded = spec.with_seed(7)
    assert reseeded.good.seed == 7 and reseeded.bad.seed == 8


def test_bernoulli_frequency():
    """Test the Bernoulli source frequency and the degenerate probabilities."""

    print("\n🪙 TESTING BERNOULLI SOURCE")
    print("=" * 50)

    n = 10 ** 6
    x = generate(GeneratorSpec(kind=GeneratorKind.BERNOULLI, p=0.501, seed=1), n)
    freq = x.count_ones() / n
    sigma = (0.25 / n) ** 0.5
    print(f"Frequency of ones: {freq:.5f} (3 sigma = {3 * sigma:.5f})")
    assert abs(freq - 0.501) <= 3 * sigma

    assert generate(GeneratorSpec(kind=GeneratorKind.BERNOULLI, p=0.0), 64).count_ones() == 0
    assert generate(GeneratorSpec(kind=GeneratorKind.BERNOULLI, p=1.0), 64).count_ones() == 64
    print("✅ Bernoulli source test passed!")


def test_markov_stationary_frequency():
    transition = ((0.9, 0.1), (0.2, 0.8))
    assert stationary_distribution(transition) == pytest.approx((2 / 3, 1 / 3))

    x = generate(GeneratorSpec(kind=GeneratorKind.MARKOV, transition=transition, seed=3), 200_000)
    assert x.count_ones() / len(x) == pytest.approx(1 / 3, abs=0.01)


def test_true_entropy():
    assert true_entropy(GeneratorSpec(kind=GeneratorKind.BERNOULLI, p=0.5)) == pytest.approx(1.0)
    assert true_entropy(GeneratorSpec(kind=GeneratorKind.BERNOULLI, p=0.7)) == pytest.approx(0.8813, abs=1e-4)
    assert true_entropy(GeneratorSpec(kind=GeneratorKind.BERNOULLI, p=0.0)) == 0.0
    fair = GeneratorSpec(kind=GeneratorKind.MARKOV, transition=((0.5, 0.5), (0.5, 0.5)))
    assert true_entropy(fair) == pytest.approx(1.0)
    assert true_entropy(MRG) is None
    assert true_entropy(RANDU) is None


def test_invalid_specs():
    bad_specs = [
        GeneratorSpec(kind=GeneratorKind.BERNOULLI, p=1.5),
        GeneratorSpec(kind=GeneratorKind.MARKOV),
        GeneratorSpec(kind=GeneratorKind.MARKOV, transition=((0.5, 0.4), (0.5, 0.5))),
        GeneratorSpec(kind=GeneratorKind.MIXED, D=0, good=MRG, bad=RANDU),
        GeneratorSpec(kind=GeneratorKind.MIXED, good=MRG),
        GeneratorSpec(kind=GeneratorKind.MIXED, good=MRG,
                      bad=GeneratorSpec(kind=GeneratorKind.MIXED, good=MRG, bad=RANDU)),
        GeneratorSpec(kind=GeneratorKind.MRG32K3A, state=(0, 0, 0, 1, 1, 1)),
        GeneratorSpec(kind=GeneratorKind.LCG, lcg_multiplier=0),
    ]
    for spec in bad_specs:
        with pytest.raises(InvalidSpecError):
            build_source(spec)


def test_spec_from_dict():
    spec = spec_from_dict({"kind": "mixed", "D": 3,
                           "good": {"kind": "mrg32k3a", "seed": 4},
                           "bad": {"kind": "lcg", "seed": 1, "multiplier": 65539}})
    assert spec.kind is GeneratorKind.MIXED
    assert spec.good.seed == 4 and spec.bad.lcg_multiplier == 65539
    assert spec_from_dict(spec.to_dict()) == spec

    with pytest.raises(InvalidSpecError) as exc:
        spec_from_dict({"kind": "lcg", "colour": "red"})
    assert exc.value.key == "generator.colour"

    with pytest.raises(InvalidSpecError) as exc:
        spec_from_dict({"kind": "mixed", "good": {"kind": "mrg32k3a"}, "bad": {"kind": "bernoulli", "p": 2}})
    assert exc.value.key == "generator.bad.p"

    with pytest.raises(InvalidSpecError):
        spec_from_dict({"kind": "quantum"})


def test_sequence_source_bounds():
    x = generate(MRG, 100)
    source = SequenceSource(x)
    assert source.read_window(90, 10) == x.window(90, 10)
    with pytest.raises(StreamExhaustedError):
        source.read_window(95, 10)


class _Pipe(io.RawIOBase):
    """Forward-only byte stream, like standard input."""

    def __init__(self, data: bytes):
        self._buffer = io.BytesIO(data)

    def readable(self):
        return True

    def seekable(self):
        return False

    def read(self, size=-1):
        return self._buffer.read(size)


def test_file_source(tmp_path):
    """Test reading generator output back from a file and from a pipe."""

    print("\n📁 TESTING FILE SOURCE")
    print("=" * 50)

    x = generate(MRG, 8 * 1000)
    path = tmp_path / "mrg.bin"
    path.write_bytes(x.to_bytes())

    with FileBitSource(path) as source:
        print(f"Source id: {source.source_id}")
        assert source.source_id.startswith("file:")
        assert source.size_bits == 8000
        assert source.read_window(4003, 500) == x.window(4003, 500)
        assert source.read_window(5, 11) == x.window(5, 11), "seekable files move backwards"
        with pytest.raises(StreamExhaustedError):
            source.read_window(7990, 20)

    pipe = FileBitSource(_Pipe(x.to_bytes()))
    assert not pipe.seekable
    assert pipe.read_window(100, 30) == x.window(100, 30)
    with pytest.raises(SeekError):
        pipe.seek(10)
    print("✅ File source test passed!")
