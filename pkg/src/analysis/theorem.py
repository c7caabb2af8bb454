"""
Convergence of -log2(p-value)/n to 1 - h(nu) under a known source.

For every (n, seed) cell a word x ~ nu is drawn and gamma = -log2 pi(x) / n is
computed with either the exact Neyman-Pearson p-value or the compression
p-value; the table aggregates gamma per n.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.analysis.entropy import KnownSource, redundancy
from src.analysis.oracle import np_log2_pvalue
from src.battery.universal_code import compression_log2_pvalue
from src.errors import ConfigError
from src.utils.logger import get_logger

logger = get_logger(__name__)

TABLE_COLUMNS = ["n", "mean_gamma", "std_gamma", "target", "abs_error", "seeds"]


class Arm(str, Enum):
    NP = "np"
    COMPRESSION = "compression"


def _cell_gamma(source: KnownSource, arm: Arm, order: int, n: int, seed: int) -> float:
    x = source.sample(n, seed)
    if arm is Arm.NP:
        log2_p = np_log2_pvalue(x, source)
        # p = 0 solo si x es la moda; se acota a una palabra, 2**-n
        log2_p = max(log2_p, -float(n))
    else:
        log2_p = compression_log2_pvalue(x, order)
    return -log2_p / n


def verify_theorem1(source: KnownSource, arm: Union[Arm, str] = Arm.NP, order: int = 0,
                    n_grid: Sequence[int] = (1_000, 10_000, 100_000),
                    seeds: Union[int, Iterable[int]] = 30,
                    workers: int = 1) -> pd.DataFrame:
    """Table of (n, mean gamma, std gamma, 1 - h, |mean - target|, seeds).

    The NP arm needs a Bernoulli source with p != 1/2: its closed form is the
    only one that scales to large n, and p = 1/2 ties every word.
    """
    arm = Arm(arm)
    if arm is Arm.NP:
        if not source.is_bernoulli:
            raise ConfigError("the NP arm needs a Bernoulli source", key="verify.arm")
        if source.p == 0.5:
            raise ConfigError("the NP arm is degenerate for p = 1/2", key="verify.arm")
    seed_list = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    if not seed_list:
        raise ConfigError("at least one seed is required", key="seeds")
    if any(n <= 0 for n in n_grid):
        raise ConfigError("grid lengths must be positive", key="verify.n_grid")

    target = redundancy(source)
    cells: List[Tuple[int, int]] = [(n, seed) for n in n_grid for seed in seed_list]
    start = time.perf_counter()

    def run(cell: Tuple[int, int]) -> float:
        return _cell_gamma(source, arm, order, *cell)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            gammas = list(pool.map(run, cells))
    else:
        gammas = [run(cell) for cell in cells]

    frame = pd.DataFrame({"n": [c[0] for c in cells], "gamma": gammas})
    rows = []
    for n in n_grid:
        values = frame.loc[frame["n"] == n, "gamma"].to_numpy()
        mean = float(np.mean(values))
        rows.append({
            "n": int(n),
            "mean_gamma": mean,
            "std_gamma": float(np.std(values, ddof=1)) if values.size > 1 else 0.0,
            "target": target,
            "abs_error": abs(mean - target),
            "seeds": int(values.size),
        })
    table = pd.DataFrame(rows, columns=TABLE_COLUMNS)
    logger.info(
        f"📈 Convergencia {arm.value}: {len(cells)} celdas en "
        f"{time.perf_counter() - start:.1f}s, error final {table['abs_error'].iloc[-1]:.4f}"
    )
    return table


def convergence_passed(table: pd.DataFrame, tolerance: float) -> bool:
    """True when the error at the largest n is within ``tolerance``."""
    if table.empty:
        return False
    last = table.sort_values("n").iloc[-1]
    return bool(math.isfinite(last["abs_error"]) and last["abs_error"] <= tolerance)


def error_inversions(table: pd.DataFrame) -> int:
    """How many times the error grows from one grid length to the next."""
    errors = table.sort_values("n")["abs_error"].to_numpy()
    return int(np.count_nonzero(np.diff(errors) > 0))
