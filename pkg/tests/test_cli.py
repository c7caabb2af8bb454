import csv
import json
import os
import subprocess
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

import pytest

from scripts.dump_stream import dump_stream, main as dump_main
from src.config import load_settings
from src.data.file_source import FileBitSource
from src.data.generators import GeneratorKind, GeneratorSpec, generate
from src.main import EXIT_ACCEPT, EXIT_REJECT, EXIT_RUNTIME, EXIT_USAGE, main
from src.utils.logger import get_logger, log_result_row, setup_logger
from src.utils.report import load_report


@pytest.fixture(autouse=True)
def quiet_environment(monkeypatch, tmp_path):
    for name in ("ADABATT_SEED", "ADABATT_RESULTS_LOG", "ADABATT_WORKERS", "ADABATT_PROBE_LENGTH"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("ADABATT_LOG_DIR", str(tmp_path / "logs"))


def _write(tmp_path, name: str, text: str):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_usage_errors_exit_2(tmp_path):
    """Test that configuration problems map to exit code 2."""

    print("\n🚪 TESTING CLI USAGE ERRORS")
    print("=" * 50)

    assert main([]) == EXIT_USAGE, "--config is required"
    assert main(["--config", str(tmp_path / "missing.yaml")]) == EXIT_USAGE

    broken = _write(tmp_path, "broken.yaml", "mode: [battery\n")
    assert main(["--config", str(broken)]) == EXIT_USAGE

    bad_split = _write(tmp_path, "split.yaml", (
        "mode: adaptive\n"
        "source: {generator: {kind: mrg32k3a}}\n"
        "plan:\n"
        "  rounds: [{fraction: 0.05, survivors: 3}, {fraction: 0.15, survivors: 2}]\n"
        "  alpha_split: [0.0004, 0.0004]\n"
    ))
    assert main(["--config", str(bad_split)]) == EXIT_USAGE
    assert main(["--config", str(broken), "--format", "xml"]) == EXIT_USAGE
    assert main(["--help"]) == EXIT_ACCEPT
    print("✅ CLI usage error test passed!")


def test_battery_mode_accepts_good_generator(tmp_path):
    config = _write(tmp_path, "battery.yaml", (
        "mode: battery\n"
        "alpha: 0.001\n"
        "source: {generator: {kind: mrg32k3a}}\n"
        "battery: {length: 200000}\n"
        "output: {format: json}\n"
    ))
    out = tmp_path / "report.json"
    code = main(["--config", str(config), "--seed", "12345", "--out", str(out), "--quiet"])
    runs = load_report(out.read_text(encoding="utf-8"))

    assert code == EXIT_ACCEPT
    assert [seed for seed, _ in runs] == [12345]
    assert runs[0][1].accepted
    assert len(runs[0][1].final) == 6


def test_adaptive_mode_rejects_mixed_generator(tmp_path, capsys):
    """Test an adaptive run end to end, JSON report on standard output."""

    print("\n🧪 TESTING CLI ADAPTIVE RUN")
    print("=" * 50)

    config = _write(tmp_path, "adaptive.yaml", (
        "mode: adaptive\n"
        "seeds: [1, 2]\n"
        "source:\n"
        "  generator:\n"
        "    kind: mixed\n"
        "    D: 2\n"
        "    good: {kind: mrg32k3a}\n"
        "    bad: {kind: lcg}\n"
        "plan: {final_length: 2000000}\n"
    ))
    capsys.readouterr()
    code = main(["--config", str(config), "--format", "json", "--quiet"])
    runs = load_report(capsys.readouterr().out)

    assert code == EXIT_REJECT
    assert [seed for seed, _ in runs] == [1, 2]
    assert all(not verdict.accepted for _, verdict in runs)
    assert all(len(verdict.trace) == 2 for _, verdict in runs)
    print("✅ CLI adaptive run test passed!")


def test_seed_precedence(tmp_path, monkeypatch):
    config = _write(tmp_path, "seeds.yaml", (
        "mode: battery\n"
        "seeds: [1, 2, 3]\n"
        "source: {generator: {kind: lcg}}\n"
        "battery: {length: 4096}\n"
        "output: {format: json}\n"
    ))
    out = tmp_path / "seeds.json"

    main(["--config", str(config), "--out", str(out), "--quiet"])
    assert [seed for seed, _ in load_report(out.read_text())] == [1, 2, 3]

    monkeypatch.setenv("ADABATT_SEED", "8")
    main(["--config", str(config), "--out", str(out), "--quiet"])
    assert [seed for seed, _ in load_report(out.read_text())] == [8]

    main(["--config", str(config), "--out", str(out), "--quiet", "--seed", "9"])
    assert [seed for seed, _ in load_report(out.read_text())] == [9]


def test_verify_and_calibrate_modes(tmp_path):
    verify = _write(tmp_path, "verify.yaml", (
        "mode: verify-theorem\n"
        "seeds: 5\n"
        "source: {generator: {kind: bernoulli, p: 0.7}}\n"
        "verify: {arm: np, n_grid: [2000, 20000], tolerance: 0.02}\n"
        "output: {format: tsv}\n"
    ))
    out = tmp_path / "verify.tsv"
    assert main(["--config", str(verify), "--out", str(out), "--quiet"]) == EXIT_ACCEPT
    header = out.read_text().splitlines()[0].split("\t")
    assert header == ["n", "mean_gamma", "std_gamma", "target", "abs_error", "seeds"]

    strict = _write(tmp_path, "strict.yaml", verify.read_text().replace("tolerance: 0.02", "tolerance: 0.0000001"))
    assert main(["--config", str(strict), "--out", str(out), "--quiet"]) == EXIT_REJECT

    calibrate = _write(tmp_path, "calibrate.yaml", (
        "mode: calibrate\n"
        "calibrate: {probe_length: 20000}\n"
        "output: {format: json}\n"
    ))
    out = tmp_path / "calibration.json"
    assert main(["--config", str(calibrate), "--out", str(out), "--quiet"]) == EXIT_ACCEPT
    rows = json.loads(out.read_text())["rows"]
    assert [row["test"] for row in rows][0] == "monobit"
    assert all(row["speed_bits_per_s"] > 0 for row in rows)


def test_file_source_and_runtime_errors(tmp_path):
    data = tmp_path / "mrg.bin"
    data.write_bytes(generate(GeneratorSpec(kind=GeneratorKind.MRG32K3A, seed=5), 8 * 20_000).to_bytes())

    whole = _write(tmp_path, "file.yaml", f"mode: battery\nsource: {{file: {data}}}\noutput: {{format: json}}\n")
    out = tmp_path / "file.json"
    assert main(["--config", str(whole), "--out", str(out), "--quiet"]) == EXIT_ACCEPT
    runs = load_report(out.read_text())
    assert len(runs) == 1
    assert runs[0][1].final[0].result.n == 8 * 20_000

    too_long = _write(tmp_path, "long.yaml",
                      f"mode: battery\nsource: {{file: {data}}}\nbattery: {{length: 1000000}}\n")
    assert main(["--config", str(too_long), "--quiet"]) == EXIT_RUNTIME


def test_results_ledger(tmp_path, monkeypatch):
    ledger = tmp_path / "results.csv"
    monkeypatch.setenv("ADABATT_RESULTS_LOG", str(ledger))
    config = _write(tmp_path, "ledger.yaml", (
        "mode: battery\n"
        "seeds: [1, 2]\n"
        "source: {generator: {kind: mrg32k3a}}\n"
        "battery: {length: 20000}\n"
        "output: {format: json}\n"
    ))
    main(["--config", str(config), "--out", str(tmp_path / "r.json"), "--quiet"])

    with ledger.open() as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2 * 6
    assert {row["seed"] for row in rows} == {"1", "2"}
    assert rows[0]["mode"] == "battery"


def test_logger_setup(tmp_path):
    logger = setup_logger("DEBUG", log_dir=str(tmp_path / "logs"))
    get_logger("src.battery.battery").info("✅ mensaje de prueba")
    for handler in logger.handlers:
        handler.flush()

    assert logger.name == "adabatt"
    assert get_logger("src.battery.battery").name == "adabatt.battery.battery"
    assert "mensaje de prueba" in (tmp_path / "logs" / "adabatt.log").read_text(encoding="utf-8")
    assert any(isinstance(h, RotatingFileHandler) for h in logger.handlers)

    rows = tmp_path / "rows.csv"
    log_result_row({"test": "monobit", "pvalue": 0.5}, rows)
    log_result_row({"test": "runs", "pvalue": 0.25}, rows)
    assert rows.read_text().splitlines() == ["test,pvalue", "monobit,0.5", "runs,0.25"]


def test_dump_stream_script(tmp_path):
    """Test the stream dump script writes exactly the generator output."""
    out = tmp_path / "randu.bin"
    written = dump_stream({"kind": "lcg", "seed": 1}, 1000, out)
    assert written == 1000
    assert out.stat().st_size == 1000

    with FileBitSource(out) as source:
        assert source.read(8000) == generate(GeneratorSpec(kind=GeneratorKind.LCG, seed=1), 8000)

    assert dump_main(["--generator", "{kind: mrg32k3a}", "--bytes", "64", "--seed", "3",
                      "--out", str(tmp_path / "mrg.bin")]) == 0
    assert (tmp_path / "mrg.bin").read_bytes() == generate(
        GeneratorSpec(kind=GeneratorKind.MRG32K3A, seed=3), 512).to_bytes()
    assert dump_main(["--generator", "{kind: quantum}", "--bytes", "8", "--out", str(tmp_path / "x.bin")]) == 2


def test_malformed_environment_exits_2(tmp_path, monkeypatch):
    """Test a bad ADABATT_* variable is a usage error, not a crash or a rejection."""

    print("\n🌱 TESTING MALFORMED ENVIRONMENT")
    print("=" * 50)

    config = _write(tmp_path, "env.yaml", (
        "mode: battery\n"
        "source: {generator: {kind: mrg32k3a}}\n"
        "battery: {length: 4096}\n"
    ))
    monkeypatch.setenv("ADABATT_WORKERS", "abc")

    fallback, error = load_settings()
    print(f"Fallback: workers={fallback.workers}, error={error}")
    assert fallback.workers == 1
    assert error is not None and error.key == "ADABATT_WORKERS"

    assert main(["--config", str(config), "--quiet"]) == EXIT_USAGE

    monkeypatch.setenv("ADABATT_WORKERS", "2")
    monkeypatch.setenv("ADABATT_PROBE_LENGTH", "lots")
    assert main(["--config", str(config), "--quiet"]) == EXIT_USAGE

    # la variable ya está mal al importar el paquete
    env = dict(os.environ, ADABATT_WORKERS="abc", ADABATT_LOG_DIR=str(tmp_path / "logs"))
    completed = subprocess.run(
        [sys.executable, "-m", "src.main", "--config", str(config), "--quiet"],
        cwd=Path(__file__).resolve().parent.parent, env=env, capture_output=True, text=True,
    )
    print(completed.stderr)
    assert completed.returncode == EXIT_USAGE
    assert "Traceback" not in completed.stderr
    print("✅ Malformed environment test passed!")
