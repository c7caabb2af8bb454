import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from src.adaptive.scheduler import run_adaptive
from src.analysis.entropy import KnownSource
from src.analysis.theorem import convergence_passed, verify_theorem1
from src.battery.battery import calibrate_speed, calibration_table, default_battery, run_battery
from src.battery.results import Verdict
from src.config import Mode, RunConfig, Settings, load_config, source_label
from src.data.file_source import FileBitSource
from src.data.generators import BitSource, build_source
from src.errors import AdabattError, ConfigError
from src.utils.logger import get_logger, log_result_row, setup_logger
from src.utils.report import emit_report

logger = get_logger(__name__)

EXIT_ACCEPT = 0
EXIT_REJECT = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="adabatt",
        description="Time-adaptive statistical testing of random number generators",
    )
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--mode", choices=[m.value for m in Mode], help="override the configured mode")
    parser.add_argument("--seed", type=int, help="run a single seed (overrides ADABATT_SEED)")
    parser.add_argument("--out", help="report path (default: standard output)")
    parser.add_argument("--format", choices=["human", "json", "tsv"], help="report format")
    parser.add_argument("--quiet", action="store_true", help="only warnings on the console")
    return parser.parse_args(argv)


def build_battery(config: RunConfig):
    return default_battery(
        block_size=config.battery.block_size,
        compression_orders=config.battery.compression_orders,
        serial_order=config.battery.serial_order,
        decimations=config.battery.decimations,
    )


def open_source(config: RunConfig, seed: int) -> BitSource:
    if config.source.file is not None:
        return FileBitSource(config.source.file)
    return build_source(config.source.generator.with_seed(seed))


def _seeds_for(config: RunConfig) -> Tuple[int, ...]:
    # un fichero no depende de la semilla: una sola pasada
    return config.seeds[:1] if config.source.file is not None else config.seeds


def run_battery_mode(config: RunConfig) -> List[Tuple[int, Verdict]]:
    battery = build_battery(config)
    runs = []
    for seed in _seeds_for(config):
        source = open_source(config, seed)
        try:
            length = config.battery.length
            if length is None:
                length = source.size_bits
            x = source.read(length)
        finally:
            if isinstance(source, FileBitSource):
                source.close()
        verdict, _ = run_battery(battery, x, config.alpha, config.battery.workers)
        logger.info(f"Semilla {seed}: {verdict.decision.value}")
        runs.append((seed, verdict))
    return runs


def run_adaptive_mode(config: RunConfig) -> List[Tuple[int, Verdict]]:
    battery = build_battery(config)
    runs = []
    for seed in _seeds_for(config):
        source = open_source(config, seed)
        try:
            verdict = run_adaptive(config.plan, battery, source, workers=config.battery.workers)
        finally:
            if isinstance(source, FileBitSource):
                source.close()
        logger.info(f"Semilla {seed}: {verdict.decision.value}")
        runs.append((seed, verdict))
    return runs


def write_report(text: str, path: Optional[Path]) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info(f"📄 Reporte escrito en {path}")


def record_results(runs: List[Tuple[int, Verdict]], ledger_path: str, config: RunConfig) -> None:
    for seed, verdict in runs:
        for check in verdict.final:
            log_result_row({
                "mode": config.mode.value,
                "source": source_label(config),
                "seed": seed,
                "test": check.result.test_id,
                "n": check.result.n,
                "pvalue": check.result.pvalue,
                "gamma": check.result.gamma,
                "alpha": check.alpha,
                "passed": check.passed,
                "decision": verdict.decision.value,
            }, Path(ledger_path))


def execute(config: RunConfig, env: Settings) -> int:
    fmt = config.output.format
    timing = config.output.include_timing

    if config.mode is Mode.CALIBRATE:
        battery = calibrate_speed(build_battery(config), config.probe_length, seed=config.seeds[0])
        write_report(emit_report(calibration_table(battery), fmt, timing, title="Calibration"),
                     config.output.path)
        return EXIT_ACCEPT

    if config.mode is Mode.VERIFY:
        v = config.verify
        table = verify_theorem1(KnownSource.from_spec(config.source.generator), v.arm, v.order,
                                v.n_grid, config.seeds, config.battery.workers)
        write_report(emit_report(table, fmt, timing, title=f"Convergence ({v.arm})"),
                     config.output.path)
        passed = convergence_passed(table, v.tolerance)
        logger.info(f"Verificación {'superada' if passed else 'fallida'} (tolerancia {v.tolerance})")
        return EXIT_ACCEPT if passed else EXIT_REJECT

    if config.mode is Mode.ADAPTIVE:
        runs = run_adaptive_mode(config)
    else:
        runs = run_battery_mode(config)
    write_report(emit_report(runs, fmt, timing), config.output.path)
    if env.results_log:
        record_results(runs, env.results_log, config)
    return EXIT_ACCEPT if all(v.accepted for _, v in runs) else EXIT_REJECT


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        # argparse sale con 2 en errores de uso y con 0 en --help
        return EXIT_USAGE if exc.code else EXIT_ACCEPT

    try:
        env = Settings()
    except ConfigError as exc:
        setup_logger(quiet=args.quiet, log_dir=None)
        logger.error(f"❌ {exc}")
        return EXIT_USAGE
    setup_logger(env.log_level, quiet=args.quiet, log_dir=env.log_dir)

    try:
        config = load_config(args.config, mode=args.mode, env=env)
        seeds = None
        if args.seed is not None:
            seeds = (args.seed,)
        elif env.seed is not None:
            seeds = (env.seed,)
        config = config.with_overrides(seeds=seeds, out=args.out, fmt=args.format)
    except ConfigError as exc:
        logger.error(f"❌ Configuración inválida: {exc}")
        return EXIT_USAGE

    try:
        return execute(config, env)
    except ConfigError as exc:
        logger.error(f"❌ Configuración inválida: {exc}")
        return EXIT_USAGE
    except AdabattError as exc:
        logger.error(f"❌ {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    except Exception as exc:
        logger.exception(f"❌ Error inesperado: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
