#!/usr/bin/env python3
"""
Script para volcar la salida de un generador a un fichero binario.
El fichero resultante sirve como entrada `source.file` del CLI.
"""

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import yaml

from src.data.generators import build_source, spec_from_dict
from src.errors import ConfigError

CHUNK_BYTES = 1 << 20


def dump_stream(generator: dict, n_bytes: int, out: Path, seed: Optional[int] = None) -> int:
    """Write the first ``n_bytes`` of the stream; returns the bytes written."""
    spec = spec_from_dict(generator)
    if seed is not None:
        spec = spec.with_seed(seed)
    source = build_source(spec)
    out.parent.mkdir(parents=True, exist_ok=True)
    written = 0
    with out.open("wb") as f:
        while written < n_bytes:
            step = min(CHUNK_BYTES, n_bytes - written)
            f.write(source.read(step * 8).to_bytes())
            written += step
    return written


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Dump a generator stream to a raw binary file")
    parser.add_argument("--generator", required=True,
                        help="YAML/JSON generator mapping, e.g. '{kind: lcg, seed: 1}'")
    parser.add_argument("--bytes", type=int, required=True, help="number of bytes to write")
    parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("--out", required=True, help="output file")
    args = parser.parse_args(argv)

    try:
        generator = yaml.safe_load(args.generator)
        written = dump_stream(generator, args.bytes, Path(args.out), args.seed)
    except (ConfigError, yaml.YAMLError) as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return 2
    print(f"✅ {written} bytes escritos en {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
