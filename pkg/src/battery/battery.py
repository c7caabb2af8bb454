"""
Battery of tests of fit.

Tests live in a registry keyed by name; a battery is an ordered list of
:class:`TestDescriptor` instances (test name + parameters + optional
decimation step). ``run_test`` turns one descriptor and one sequence into a
:class:`TestResult`; ``run_battery`` applies the whole list with an equal
split of the significance level.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.battery import statistics
from src.battery.results import (
    CostLedger,
    FinalCheck,
    TestResult,
    Verdict,
    battery_significance,
    clamp_pvalue,
    gamma_of,
)
from src.battery.statistics import Statistic
from src.battery.universal_code import compression_log2_pvalue, tau_phi
from src.data.bitstream import BitSequence, BitsLike, decimate
from src.errors import SequenceTooShortError
from src.utils.logger import get_logger

logger = get_logger(__name__)

StatisticFunc = Callable[..., Statistic]
MinLength = Union[int, Callable[[Dict[str, Any]], int]]


@dataclass(frozen=True)
class RegisteredTest:
    name: str
    func: StatisticFunc
    min_length: MinLength

    def required_length(self, params: Dict[str, Any]) -> int:
        if callable(self.min_length):
            return int(self.min_length(params))
        return int(self.min_length)


REGISTRY: Dict[str, RegisteredTest] = {}


def register_test(name: str, func: StatisticFunc, min_length: MinLength) -> None:
    """Add a statistic to the registry.

    ``func(bits, **params)`` receives a 1-d ``uint8`` array and returns a
    :class:`Statistic`; ``min_length`` is an int or a function of the params.
    """
    if name in REGISTRY:
        raise ValueError(f"test '{name}' is already registered")
    REGISTRY[name] = RegisteredTest(name, func, min_length)


def _compression(bits: np.ndarray, order: int = 1) -> Statistic:
    return Statistic(2.0 ** compression_log2_pvalue(bits, order), tau_phi(bits, order))


register_test("monobit", statistics.monobit, 2)
register_test("block_frequency", statistics.block_frequency,
              lambda params: int(params.get("block_size", 128)))
register_test("runs", statistics.runs, 2)
register_test("serial", statistics.serial,
              lambda params: max(16, 4 << int(params.get("order", 2))))
register_test("cumulative_sums", statistics.cumulative_sums, 2)
register_test("compression", _compression, 1)


@dataclass(frozen=True)
class TestDescriptor:
    """One battery member. ``speed`` is bits per second, set by calibration."""

    __test__ = False

    id: str
    test: str
    params: Dict[str, Any] = field(default_factory=dict, hash=False)
    min_length: int = 1
    speed: Optional[float] = None
    decimation: int = 1

    def __post_init__(self) -> None:
        if self.min_length <= 0:
            raise ValueError(f"{self.id}: min_length must be > 0")
        if self.decimation < 1:
            raise ValueError(f"{self.id}: decimation step must be >= 1")

    @property
    def required_length(self) -> int:
        """Bits of input needed before decimation."""
        return (self.min_length - 1) * self.decimation + 1


def describe(test: str, id: Optional[str] = None, decimation: int = 1,
             **params: Any) -> TestDescriptor:
    """Descriptor for a registered test; the id defaults to ``name[key=value,...]``."""
    if test not in REGISTRY:
        raise KeyError(f"unknown test '{test}'; registered: {sorted(REGISTRY)}")
    if id is None:
        id = test
        if params:
            id += "[" + ",".join(f"{k}={v}" for k, v in sorted(params.items())) + "]"
    if decimation != 1:
        id = f"{id}@d{decimation}"
    return TestDescriptor(
        id=id,
        test=test,
        params=dict(params),
        min_length=REGISTRY[test].required_length(params),
        decimation=decimation,
    )


def default_battery(block_size: int = 128,
                    compression_orders: Sequence[int] = (1,),
                    serial_order: int = 2,
                    decimations: Sequence[int] = (1,)) -> List[TestDescriptor]:
    """Monobit, block frequency, runs, serial, cumulative sums and one
    compression test per KT order, repeated for every decimation step."""
    battery: List[TestDescriptor] = []
    for step in decimations:
        battery.append(describe("monobit", decimation=step))
        battery.append(describe(
            "block_frequency",
            id="block_frequency" if block_size == 128 else f"block_frequency[M={block_size}]",
            decimation=step, block_size=block_size))
        battery.append(describe("runs", decimation=step))
        battery.append(describe(
            "serial", id="serial" if serial_order == 2 else f"serial[m={serial_order}]",
            decimation=step, order=serial_order))
        battery.append(describe("cumulative_sums", decimation=step))
        for k in compression_orders:
            battery.append(describe("compression", id=f"compression[k={k}]",
                                    decimation=step, order=k))
    ids = [d.id for d in battery]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate test ids in battery: {ids}")
    return battery


def run_test(desc: TestDescriptor, x: BitsLike) -> TestResult:
    """p-value, gamma and cost of one test on x (decimated first when requested)."""
    x = BitSequence.coerce(x)
    tested = decimate(x, desc.decimation)
    if len(tested) < desc.min_length:
        raise SequenceTooShortError(desc.id, desc.required_length, len(x))
    func = REGISTRY[desc.test].func
    start = time.perf_counter()
    stat = func(tested.bits, **desc.params)
    elapsed = time.perf_counter() - start
    pvalue = clamp_pvalue(stat.pvalue)
    return TestResult(
        test_id=desc.id,
        n=len(tested),
        pvalue=pvalue,
        gamma=gamma_of(pvalue, len(tested)),
        cost=elapsed,
    )


def run_tests(battery: Sequence[TestDescriptor], x: BitsLike, workers: int = 1,
              catch: Tuple[type, ...] = (SequenceTooShortError,)) -> List[TestResult]:
    """Run every descriptor on x, in parallel when ``workers > 1``.

    Exceptions listed in ``catch`` become failed rows (``error`` set) instead of
    propagating. Results keep descriptor order whatever the completion order.
    """
    x = BitSequence.coerce(x)

    def attempt(desc: TestDescriptor) -> TestResult:
        try:
            return run_test(desc, x)
        except catch as exc:
            logger.warning(f"⚠️ Test {desc.id} no ejecutado: {exc}")
            return TestResult.failed(desc.id, len(x), str(exc))

    if workers > 1 and len(battery) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(attempt, battery))
    return [attempt(desc) for desc in battery]


def run_battery(battery: Sequence[TestDescriptor], x: BitsLike, alpha_total: float,
                workers: int = 1) -> Tuple[Verdict, List[TestResult]]:
    """Apply every test with alpha_i = alpha_total / s; reject if any p_i <= alpha_i."""
    if not 0.0 < alpha_total < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha_total}")
    if not battery:
        raise ValueError("battery is empty")
    x = BitSequence.coerce(x)
    alpha_i = alpha_total / len(battery)

    start = time.perf_counter()
    rows = run_tests(battery, x, workers)
    results = [row for row in rows if row.ok]
    warnings = [f"skipped {row.test_id}: {row.error}" for row in rows if not row.ok]
    ledger = CostLedger()
    for result in results:
        ledger.charge(result)
    ledger.wall_time = time.perf_counter() - start
    if not results:
        warnings.append("no test could run on the input")

    final = [FinalCheck(result, alpha_i) for result in results]
    verdict = Verdict.decide(final, ledger=ledger, warnings=warnings)
    logger.info(
        f"Batería: {len(results)}/{len(battery)} tests, alpha_i={alpha_i:.3g}, "
        f"nivel <= {battery_significance([alpha_i] * len(battery)):.3g} -> {verdict.decision.value}"
    )
    return verdict, results


def uniform_probe(length: int, seed: int = 0) -> BitSequence:
    """Uniform bits from PCG64, independent of the generators under test."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return BitSequence(rng.integers(0, 2, size=length, dtype=np.uint8))


def calibrate_speed(battery: Sequence[TestDescriptor], probe_length: int,
                    seed: int = 0) -> List[TestDescriptor]:
    """Copy of the battery with ``speed`` = probe_length / elapsed seconds."""
    needed = max((d.required_length for d in battery), default=1)
    if probe_length < needed:
        raise ValueError(f"probe_length {probe_length} is below the largest min_length {needed}")
    probe = uniform_probe(probe_length, seed)
    calibrated = []
    for desc in battery:
        result = run_test(desc, probe)
        speed = probe_length / max(result.cost, 1e-9)
        calibrated.append(replace(desc, speed=speed))
        logger.debug(f"{desc.id}: {speed:,.0f} bits/s")

    slowest = min(calibrated, key=lambda d: d.speed)
    if slowest.test != "compression" and any(d.test == "compression" for d in calibrated):
        logger.warning(f"⚠️ El test más lento no es compression sino {slowest.id}")
    return calibrated


def calibration_table(battery: Iterable[TestDescriptor]) -> pd.DataFrame:
    rows = [
        {"test": d.id, "min_length": d.min_length, "decimation": d.decimation,
         "speed_bits_per_s": d.speed}
        for d in battery
    ]
    return pd.DataFrame(rows, columns=["test", "min_length", "decimation", "speed_bits_per_s"])
