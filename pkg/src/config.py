import os
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import yaml
from dotenv import load_dotenv

from src.adaptive.plan import AdaptivePlan, DataMode, RoundSpec, Selection
from src.data.generators import GeneratorKind, GeneratorSpec, spec_from_dict
from src.errors import ConfigError, InvalidSpecError

load_dotenv()


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    raw = os.getenv(name, "")
    if raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"expected an integer, got {raw!r}", key=name)


@dataclass
class Settings:
    """Process-wide settings read from the environment (and ``.env``)."""

    seed: Optional[int] = field(default_factory=lambda: _env_int("ADABATT_SEED", None))
    log_level: str = field(default_factory=lambda: os.getenv("ADABATT_LOG_LEVEL", "INFO"))
    log_dir: str = field(default_factory=lambda: os.getenv("ADABATT_LOG_DIR", "logs"))
    workers: int = field(default_factory=lambda: _env_int("ADABATT_WORKERS", 1))
    probe_length: int = field(default_factory=lambda: _env_int("ADABATT_PROBE_LENGTH", 131072))
    results_log: str = field(default_factory=lambda: os.getenv("ADABATT_RESULTS_LOG", ""))


def load_settings() -> Tuple[Settings, Optional[ConfigError]]:
    """Settings for import time: a malformed variable falls back to the defaults.

    The error is returned so the CLI can report it; ``Settings()`` raises it.
    """
    try:
        return Settings(), None
    except ConfigError as exc:
        return Settings(seed=None, workers=1, probe_length=131072), exc


settings, settings_error = load_settings()


class Mode(str, Enum):
    BATTERY = "battery"
    ADAPTIVE = "adaptive"
    VERIFY = "verify-theorem"
    CALIBRATE = "calibrate"


class ReportFormat(str, Enum):
    HUMAN = "human"
    JSON = "json"
    TSV = "tsv"


@dataclass(frozen=True)
class SourceConfig:
    generator: Optional[GeneratorSpec] = None
    file: Optional[Path] = None

    @property
    def is_file(self) -> bool:
        return self.file is not None


@dataclass(frozen=True)
class BatteryConfig:
    block_size: int = 128
    compression_orders: Tuple[int, ...] = (1,)
    serial_order: int = 2
    decimations: Tuple[int, ...] = (1,)
    length: Optional[int] = 1_000_000
    workers: int = 1


@dataclass(frozen=True)
class VerifyConfig:
    arm: str = "np"
    order: int = 0
    n_grid: Tuple[int, ...] = (1_000, 10_000, 100_000)
    tolerance: float = 0.02


@dataclass(frozen=True)
class OutputConfig:
    path: Optional[Path] = None
    format: ReportFormat = ReportFormat.HUMAN
    include_timing: bool = False


@dataclass(frozen=True)
class RunConfig:
    mode: Mode
    source: SourceConfig
    alpha: float = 0.001
    seeds: Tuple[int, ...] = (12345,)
    battery: BatteryConfig = BatteryConfig()
    plan: Optional[AdaptivePlan] = None
    verify: VerifyConfig = VerifyConfig()
    probe_length: int = 131072
    output: OutputConfig = OutputConfig()

    def with_overrides(self, seeds: Optional[Sequence[int]] = None,
                       out: Optional[Union[str, Path]] = None,
                       fmt: Optional[str] = None) -> "RunConfig":
        config = self
        if seeds is not None:
            config = replace(config, seeds=tuple(seeds))
        if out is not None or fmt is not None:
            output = config.output
            if out is not None:
                output = replace(output, path=Path(out))
            if fmt is not None:
                output = replace(output, format=_enum(ReportFormat, fmt, "output.format"))
            config = replace(config, output=output)
        return config


# Helpers de validación; cada error nombra la clave con su ruta completa

def _section(data: Dict[str, Any], name: str, allowed: Sequence[str], prefix: str = "") -> Dict[str, Any]:
    key = f"{prefix}{name}"
    value = data.get(name, {})
    if value is None:
        value = {}
    if not isinstance(value, dict):
        raise ConfigError("expected a mapping", key=key)
    _check_keys(value, allowed, key)
    return value


def _check_keys(data: Dict[str, Any], allowed: Sequence[str], prefix: str) -> None:
    for name in data:
        if name not in allowed:
            raise ConfigError("unknown key", key=f"{prefix}.{name}" if prefix else str(name))


def _typed(data: Dict[str, Any], name: str, kind: type, default: Any, key: str) -> Any:
    if name not in data or data[name] is None:
        return default
    value = data[name]
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", key=key)
        return value
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ConfigError(f"expected an integer, got {value!r}", key=key)
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", key=key)
        return float(value)
    if kind is str and not isinstance(value, str):
        raise ConfigError(f"expected a string, got {value!r}", key=key)
    return value


def _int_list(data: Dict[str, Any], name: str, default: Tuple[int, ...], key: str) -> Tuple[int, ...]:
    if name not in data:
        return default
    value = data[name]
    if isinstance(value, int) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        raise ConfigError("expected a non-empty list of integers", key=key)
    out = []
    for i, item in enumerate(value):
        if isinstance(item, float) and item.is_integer():
            item = int(item)
        if isinstance(item, bool) or not isinstance(item, int):
            raise ConfigError(f"expected an integer, got {item!r}", key=f"{key}[{i}]")
        out.append(item)
    return tuple(out)


def _enum(enum_type, value: Any, key: str):
    try:
        return enum_type(str(value).lower())
    except ValueError:
        choices = ", ".join(e.value for e in enum_type)
        raise ConfigError(f"expected one of {choices}, got {value!r}", key=key)


def _parse_source(data: Dict[str, Any]) -> SourceConfig:
    section = _section(data, "source", ["generator", "file"])
    has_generator = "generator" in section
    has_file = "file" in section
    if has_generator and has_file:
        raise ConfigError("exactly one of generator or file must be given", key="source")
    if has_file:
        path = section["file"]
        if not isinstance(path, str) or not path:
            raise ConfigError("expected a file path", key="source.file")
        return SourceConfig(file=Path(path))
    if has_generator:
        return SourceConfig(generator=spec_from_dict(section["generator"], key="source.generator"))
    return SourceConfig()


def _parse_battery(data: Dict[str, Any], workers: int) -> BatteryConfig:
    allowed = ["block_size", "compression_orders", "serial_order", "decimations", "length", "workers"]
    section = _section(data, "battery", allowed)
    config = BatteryConfig(
        block_size=_typed(section, "block_size", int, 128, "battery.block_size"),
        compression_orders=_int_list(section, "compression_orders", (1,), "battery.compression_orders"),
        serial_order=_typed(section, "serial_order", int, 2, "battery.serial_order"),
        decimations=_int_list(section, "decimations", (1,), "battery.decimations"),
        length=_typed(section, "length", int, 1_000_000, "battery.length"),
        workers=_typed(section, "workers", int, workers, "battery.workers"),
    )
    if config.block_size < 1:
        raise ConfigError("block size must be >= 1", key="battery.block_size")
    if any(k < 0 for k in config.compression_orders):
        raise ConfigError("compression orders must be >= 0", key="battery.compression_orders")
    if config.serial_order < 2:
        raise ConfigError("serial order must be >= 2", key="battery.serial_order")
    if any(step < 1 for step in config.decimations):
        raise ConfigError("decimation steps must be >= 1", key="battery.decimations")
    if config.length is not None and config.length <= 0:
        raise ConfigError("length must be positive", key="battery.length")
    if config.workers < 1:
        raise ConfigError("workers must be >= 1", key="battery.workers")
    return config


def _parse_rounds(value: Any, final_length: int) -> Tuple[RoundSpec, ...]:
    if not isinstance(value, list):
        raise ConfigError("expected a list of rounds", key="plan.rounds")
    rounds = []
    for i, item in enumerate(value):
        key = f"plan.rounds[{i}]"
        if not isinstance(item, dict):
            raise ConfigError("expected a mapping", key=key)
        _check_keys(item, ["fraction", "length", "survivors"], key)
        if "survivors" not in item:
            raise ConfigError("missing required field", key=f"{key}.survivors")
        if ("fraction" in item) == ("length" in item):
            raise ConfigError("give exactly one of fraction or length", key=key)
        survivors = _typed(item, "survivors", int, None, f"{key}.survivors")
        if "fraction" in item:
            fraction = _typed(item, "fraction", float, None, f"{key}.fraction")
            if not 0.0 < fraction:
                raise ConfigError("fraction must be positive", key=f"{key}.fraction")
            length = AdaptivePlan.from_fractions([(fraction, survivors)], final_length, 0.5).rounds[0].length
        else:
            length = _typed(item, "length", int, None, f"{key}.length")
        rounds.append(RoundSpec(length=length, survivors=survivors))
    return tuple(rounds)


def _parse_plan(data: Dict[str, Any], alpha: float, battery_size: int) -> AdaptivePlan:
    allowed = ["final_length", "rounds", "alpha_split", "speed_weighting", "budget_seconds",
               "selection", "data", "final_tests", "compare_full_battery"]
    section = _section(data, "plan", allowed)
    final_length = _typed(section, "final_length", int, 4_000_000, "plan.final_length")
    if "rounds" in section:
        rounds = _parse_rounds(section["rounds"] or [], final_length)
    else:
        rounds = AdaptivePlan.default(final_length).rounds
    alpha_split = None
    if "alpha_split" in section:
        raw = section["alpha_split"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("expected a non-empty list of numbers", key="plan.alpha_split")
        alpha_split = tuple(_typed({"v": v}, "v", float, None, f"plan.alpha_split[{i}]")
                            for i, v in enumerate(raw))
    plan = AdaptivePlan(
        rounds=rounds,
        final_length=final_length,
        alpha=alpha,
        alpha_split=alpha_split,
        final_tests=_typed(section, "final_tests", int, None, "plan.final_tests"),
        use_speed_weighting=_typed(section, "speed_weighting", bool, False, "plan.speed_weighting"),
        budget_seconds=_typed(section, "budget_seconds", float, None, "plan.budget_seconds"),
        selection=_enum(Selection, section.get("selection", "max"), "plan.selection"),
        data=_enum(DataMode, section.get("data", "prefix"), "plan.data"),
        compare_full_battery=_typed(section, "compare_full_battery", bool, False,
                                    "plan.compare_full_battery"),
    )
    return plan.validate(battery_size)


def _parse_verify(data: Dict[str, Any]) -> VerifyConfig:
    section = _section(data, "verify", ["arm", "order", "n_grid", "tolerance"])
    arm = str(section.get("arm", "np")).lower()
    if arm not in ("np", "compression"):
        raise ConfigError(f"expected np or compression, got {arm!r}", key="verify.arm")
    config = VerifyConfig(
        arm=arm,
        order=_typed(section, "order", int, 0, "verify.order"),
        n_grid=_int_list(section, "n_grid", VerifyConfig.n_grid, "verify.n_grid"),
        tolerance=_typed(section, "tolerance", float, 0.02, "verify.tolerance"),
    )
    if any(n <= 0 for n in config.n_grid):
        raise ConfigError("grid lengths must be positive", key="verify.n_grid")
    if config.order < 0:
        raise ConfigError("order must be >= 0", key="verify.order")
    return config


def _parse_output(data: Dict[str, Any]) -> OutputConfig:
    section = _section(data, "output", ["path", "format", "include_timing"])
    path = _typed(section, "path", str, None, "output.path")
    return OutputConfig(
        path=Path(path) if path else None,
        format=_enum(ReportFormat, section.get("format", "human"), "output.format"),
        include_timing=_typed(section, "include_timing", bool, False, "output.include_timing"),
    )


def battery_size(config: BatteryConfig) -> int:
    per_step = 5 + len(config.compression_orders)
    return per_step * len(config.decimations)


TOP_LEVEL_KEYS = ["mode", "alpha", "seeds", "source", "battery", "plan", "verify",
                  "calibrate", "output"]


def parse_config(text: str, mode: Optional[str] = None,
                 env: Optional[Settings] = None) -> RunConfig:
    """Validate a YAML run configuration into a RunConfig.

    ``mode`` overrides the file's mode before the mode-specific checks run.
    """
    env = env or settings
    try:
        data = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("the configuration must be a mapping")
    _check_keys(data, TOP_LEVEL_KEYS, "")

    raw_mode = mode if mode is not None else data.get("mode")
    if raw_mode is None:
        raise ConfigError("missing required field", key="mode")
    run_mode = _enum(Mode, raw_mode, "mode")

    alpha = _typed(data, "alpha", float, 0.001, "alpha")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}", key="alpha")
    raw_seeds = data.get("seeds")
    if isinstance(raw_seeds, int) and not isinstance(raw_seeds, bool):
        # un entero es un número de semillas: 0, 1, ..., n-1
        if raw_seeds < 1:
            raise ConfigError("seed count must be >= 1", key="seeds")
        seeds = tuple(range(raw_seeds))
    else:
        seeds = _int_list(data, "seeds", (12345,), "seeds")
    source = _parse_source(data)
    battery = _parse_battery(data, env.workers)
    verify = _parse_verify(data)
    calibrate = _section(data, "calibrate", ["probe_length"])
    probe_length = _typed(calibrate, "probe_length", int, env.probe_length, "calibrate.probe_length")
    if probe_length <= 0:
        raise ConfigError("probe length must be positive", key="calibrate.probe_length")
    output = _parse_output(data)

    plan = None
    if run_mode is Mode.ADAPTIVE or "plan" in data:
        plan = _parse_plan(data, alpha, battery_size(battery))

    if run_mode is not Mode.CALIBRATE and source.generator is None and source.file is None:
        raise ConfigError("missing required field: give source.generator or source.file",
                          key="source")
    if run_mode is Mode.VERIFY:
        if source.generator is None or GeneratorKind(source.generator.kind) not in (
                GeneratorKind.BERNOULLI, GeneratorKind.MARKOV):
            raise InvalidSpecError("verify-theorem needs a bernoulli or markov generator",
                                   key="source.generator")
    if source.file is not None and "length" not in (data.get("battery") or {}):
        # un fichero se analiza completo salvo que se indique length
        battery = replace(battery, length=None)

    return RunConfig(
        mode=run_mode,
        source=source,
        alpha=alpha,
        seeds=seeds,
        battery=battery,
        plan=plan,
        verify=verify,
        probe_length=probe_length,
        output=output,
    )


def load_config(path: Union[str, Path], mode: Optional[str] = None,
                env: Optional[Settings] = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc}", key="--config")
    return parse_config(text, mode=mode, env=env)


def source_label(config: RunConfig) -> str:
    if config.source.file is not None:
        return str(config.source.file)
    if config.source.generator is not None:
        return GeneratorKind(config.source.generator.kind).value
    return "probe"


__all__: List[str] = [
    "BatteryConfig", "Mode", "OutputConfig", "ReportFormat", "RunConfig", "Settings",
    "SourceConfig", "VerifyConfig", "battery_size", "load_config", "parse_config",
    "settings", "source_label",
]
