"""
Time-adaptive scheduler.

Preliminary rounds rank the battery by gamma = -log2(p)/n on short data,
survivors move on to longer data, and the final survivors are applied to a
window disjoint from every preliminary window, each against its own share of
alpha. Because the final data never took part in the selection, the overall
level stays at most alpha.
"""

import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union

from src.adaptive.plan import AdaptivePlan, DataMode, Selection, cost_ratio, estimate_plan_seconds
from src.battery.battery import TestDescriptor, calibrate_speed, run_battery, run_tests
from src.battery.results import CostLedger, FinalCheck, TestResult, Verdict
from src.config import settings
from src.data.bitstream import BitSequence
from src.data.generators import BitSource, as_source
from src.errors import BudgetExceededError, PlanError, WindowOverlapError
from src.utils.logger import get_logger

logger = get_logger(__name__)

SourceLike = Union[BitSource, BitSequence]


@dataclass(frozen=True)
class Window:
    """Bits [start, start + length) of one source."""

    source_id: str
    start: int
    length: int

    @property
    def end(self) -> int:
        return self.start + self.length

    def overlaps(self, other: "Window") -> bool:
        return (self.source_id == other.source_id
                and self.start < other.end and other.start < self.end)


def _score(result: TestResult, speeds: Optional[Dict[str, float]]) -> float:
    if speeds is None:
        return result.gamma
    # gamma^ = -log2(p) / (n / v)
    return result.gamma * speeds[result.test_id]


def _speed_map(tests: Sequence[TestDescriptor]) -> Dict[str, float]:
    missing = [d.id for d in tests if d.speed is None]
    if missing:
        raise ValueError(f"speed weighting needs calibrated speeds, missing for {missing}")
    return {d.id: d.speed for d in tests}


def preliminary_round(tests: Sequence[TestDescriptor], source: SourceLike, length: int,
                      start: int = 0, speed_weighting: bool = False,
                      workers: int = 1) -> List[TestResult]:
    """Run the tests on bits [start, start + length) and rank them.

    Order: gamma (or gamma^ with speed weighting) descending, failed tests
    last, ties kept in descriptor order.
    """
    source = as_source(source)
    x = source.read_window(start, length)
    speeds = _speed_map(tests) if speed_weighting else None
    return rank_results(run_tests(tests, x, workers, catch=(Exception,)), speeds)


def rank_results(results: Sequence[TestResult],
                 speeds: Optional[Dict[str, float]] = None) -> List[TestResult]:
    """Stable sort by score descending; failed rows go last."""
    ranked = sorted(
        enumerate(results),
        key=lambda item: (not item[1].ok, -_score(item[1], speeds) if item[1].ok else 0.0, item[0]),
    )
    return [result for _, result in ranked]


def select_survivors(history: Sequence[Sequence[TestResult]], m: int,
                     rule: Union[Selection, str] = Selection.MAX,
                     candidates: Optional[Sequence[str]] = None,
                     order: Optional[Sequence[str]] = None,
                     speeds: Optional[Dict[str, float]] = None) -> List[str]:
    """Ids of the m best tests.

    With the ``max`` rule a test's score is its best gamma over every round it
    took part in; with ``latest`` it is the gamma of its last round. Only
    tests in ``candidates`` (default: the last round) are eligible; ties go
    to ``order`` (default: first appearance).
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rule = Selection(rule)
    if not history:
        return []
    if candidates is None:
        candidates = [r.test_id for r in history[-1]]
    if order is None:
        order = []
        for round_results in history:
            order.extend(r.test_id for r in round_results if r.test_id not in order)
    position = {test_id: i for i, test_id in enumerate(order)}

    scores: Dict[str, float] = {}
    for round_results in history:
        for result in round_results:
            if result.test_id not in candidates:
                continue
            value = _score(result, speeds) if result.ok else float("-inf")
            if rule is Selection.LATEST or result.test_id not in scores:
                scores[result.test_id] = value
            else:
                scores[result.test_id] = max(scores[result.test_id], value)

    ranked = sorted(scores, key=lambda t: (-scores[t], position.get(t, len(position))))
    return ranked[:m]


def final_stage(tests: Sequence[TestDescriptor], source: SourceLike,
                alpha_split: Sequence[float], window: Window,
                preliminary: Sequence[Window] = (), workers: int = 1) -> Verdict:
    """Apply the selected tests to the final window; accept iff every p_j > alpha_j."""
    if len(tests) != len(alpha_split):
        raise PlanError(f"{len(tests)} final tests for {len(alpha_split)} alpha shares",
                        key="plan.alpha_split")
    for earlier in preliminary:
        if window.overlaps(earlier):
            raise WindowOverlapError(
                f"final window [{window.start}, {window.end}) overlaps preliminary "
                f"window [{earlier.start}, {earlier.end}) of {window.source_id}"
            )
    source = as_source(source)
    x = source.read_window(window.start, window.length)
    results = run_tests(tests, x, workers, catch=())
    final = [FinalCheck(result, alpha) for result, alpha in zip(results, alpha_split)]
    ledger = CostLedger()
    for result in results:
        ledger.charge(result)
    return Verdict.decide(final, ledger=ledger)


def full_battery_comparison(battery: Sequence[TestDescriptor], source: SourceLike,
                            window: Window, alpha: float, workers: int = 1) -> Verdict:
    """Whole battery on the final window with the equal alpha split."""
    source = as_source(source)
    x = source.read_window(window.start, window.length)
    verdict, _ = run_battery(battery, x, alpha, workers)
    return verdict


def run_adaptive(plan: AdaptivePlan, battery: Sequence[TestDescriptor], source: SourceLike,
                 final_source: Optional[SourceLike] = None,
                 workers: int = 1) -> Verdict:
    """Preliminary rounds, survivor selection and final stage.

    ``final_source`` supplies the final window from a separate stream; by
    default the final window follows the preliminary data in ``source``.
    """
    s = len(battery)
    plan.validate(s)
    started = time.perf_counter()
    battery = list(battery)

    if (plan.use_speed_weighting or plan.budget_seconds is not None) and any(
            d.speed is None for d in battery):
        probe = max(settings.probe_length, max(d.required_length for d in battery))
        battery = calibrate_speed(battery, probe)
    if plan.budget_seconds is not None:
        predicted = estimate_plan_seconds(plan, battery)
        if predicted > plan.budget_seconds:
            raise BudgetExceededError(
                f"plan needs up to {predicted:.1f}s, budget is {plan.budget_seconds:.1f}s"
            )
        logger.info(f"⏱️ Tiempo estimado {predicted:.1f}s (presupuesto {plan.budget_seconds:.1f}s)")

    source = as_source(source)
    speeds = _speed_map(battery) if plan.use_speed_weighting else None
    order = [d.id for d in battery]
    by_id = {d.id: d for d in battery}

    participants = battery
    history: List[List[TestResult]] = []
    windows: List[Window] = []
    offset = 0
    for r, spec in enumerate(plan.rounds, start=1):
        start = 0 if plan.data is DataMode.PREFIX else offset
        ranked = preliminary_round(participants, source, spec.length, start,
                                   plan.use_speed_weighting, workers)
        history.append(ranked)
        windows.append(Window(source.source_id, start, spec.length))
        offset = max(offset, start + spec.length)
        kept = select_survivors(history, spec.survivors, plan.selection,
                                candidates=[d.id for d in participants],
                                order=order, speeds=speeds)
        participants = [by_id[test_id] for test_id in kept]
        logger.info(f"🔎 Ronda {r}: {len(ranked)} tests sobre {spec.length} bits -> {kept}")

    if final_source is None:
        final_src, final_start = source, offset
    else:
        final_src, final_start = as_source(final_source), 0
    window = Window(final_src.source_id, final_start, plan.final_length)
    verdict = final_stage(participants, final_src, plan.split(s), window, windows, workers)

    ledger = CostLedger()
    for round_results in history:
        for result in round_results:
            if result.ok:
                ledger.charge(result)
    for check in verdict.final:
        ledger.charge(check.result)
    ledger.cost_ratio = float(cost_ratio(plan, s))
    verdict.ledger = ledger
    verdict.trace = history
    verdict.warnings = [f"{r.test_id}: {r.error}" for rs in history for r in rs if not r.ok]

    if plan.compare_full_battery:
        verdict.comparison = full_battery_comparison(battery, final_src, window, plan.alpha, workers)
        logger.info(f"Batería completa sobre la ventana final: {verdict.comparison.decision.value}")

    ledger.wall_time = time.perf_counter() - started
    logger.info(
        f"✅ Adaptativo: {verdict.decision.value}, {ledger.total_bits} bits evaluados, "
        f"ratio de coste {ledger.cost_ratio:.2f}"
    )
    return verdict
