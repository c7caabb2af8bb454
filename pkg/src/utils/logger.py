import csv
import logging
from pathlib import Path
from typing import Dict, Optional
from logging.handlers import RotatingFileHandler

from rich.console import Console
from rich.logging import RichHandler


ROOT_LOGGER = "adabatt"
APP_LOG_NAME = "adabatt.log"


def get_logger(name: str) -> logging.Logger:
    """Child logger under the ``adabatt`` namespace (``src.battery.x`` -> ``adabatt.battery.x``)."""
    if name.startswith("src."):
        name = name[len("src."):]
    return logging.getLogger(f"{ROOT_LOGGER}.{name}")


def setup_logger(level: str = "INFO", quiet: bool = False,
                 log_dir: Optional[str] = "logs") -> logging.Logger:
    """Configure the package logger with console and rotating file output."""
    logger = logging.getLogger(ROOT_LOGGER)
    logger.setLevel(logging.DEBUG)

    # Clear any existing handlers to avoid duplicates
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()

    console_level = logging.WARNING if quiet else getattr(logging, level.upper(), logging.INFO)
    # stdout queda libre para los reportes
    # markup desactivado: los ids de test llevan corchetes
    console_handler = RichHandler(console=Console(stderr=True), markup=False)
    console_handler.setLevel(console_level)
    console_handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(console_handler)

    if log_dir:
        directory = Path(log_dir)
        directory.mkdir(parents=True, exist_ok=True)
        # 10MB por archivo, se mantienen los últimos 5
        file_handler = RotatingFileHandler(
            directory / APP_LOG_NAME,
            maxBytes=10 * 1024 * 1024,
            backupCount=5,
            encoding="utf-8",
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        ))
        logger.addHandler(file_handler)

    return logger


def log_result_row(data: Dict[str, object], path: Path) -> None:
    """Append one result row to the CSV ledger."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_header = not path.exists()
    with path.open("a", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(data.keys()))
        if write_header:
            writer.writeheader()
        writer.writerow(data)
