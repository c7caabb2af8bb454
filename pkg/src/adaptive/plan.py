"""
Round schedules for time-adaptive testing and their cost accounting.

A plan runs every battery member on n_1 bits, keeps m_1 tests, runs them on
n_2 bits, keeps m_2, ... and finally applies the last k = m_r survivors to a
fresh window of M bits with the level alpha split as alpha_1 .. alpha_k.
"""

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from src.battery.battery import TestDescriptor
from src.errors import PlanError

# alpha_1 + ... + alpha_k tiene que coincidir con alpha salvo redondeo de floats
SPLIT_TOLERANCE = 1e-12


class Selection(str, Enum):
    MAX = "max"        # best gamma over every round the test took part in
    LATEST = "latest"  # gamma of the most recent round only


class DataMode(str, Enum):
    PREFIX = "prefix"  # round r+1 data extends round r data
    FRESH = "fresh"    # each round reads a new disjoint window


@dataclass(frozen=True)
class RoundSpec:
    length: int
    survivors: int


@dataclass(frozen=True)
class AdaptivePlan:
    """Preliminary rounds, final length M, level alpha and the final split."""

    rounds: Tuple[RoundSpec, ...]
    final_length: int
    alpha: float
    alpha_split: Optional[Tuple[float, ...]] = None
    final_tests: Optional[int] = None
    use_speed_weighting: bool = False
    budget_seconds: Optional[float] = None
    selection: Selection = Selection.MAX
    data: DataMode = DataMode.PREFIX
    compare_full_battery: bool = False

    @classmethod
    def from_fractions(cls, fractions: Sequence[Tuple[float, int]], final_length: int,
                       alpha: float, **kwargs) -> "AdaptivePlan":
        """Rounds given as (fraction of M, survivors) pairs."""
        rounds = tuple(
            RoundSpec(length=max(1, round(Fraction(str(f)) * final_length)), survivors=int(m))
            for f, m in fractions
        )
        return cls(rounds=rounds, final_length=final_length, alpha=alpha, **kwargs)

    @classmethod
    def default(cls, final_length: int, alpha: float = 0.001, **kwargs) -> "AdaptivePlan":
        """5% of M keeping 3 tests, 15% of M keeping 1, then the final stage."""
        return cls.from_fractions([(0.05, 3), (0.15, 1)], final_length, alpha, **kwargs)

    def k(self, battery_size: int) -> int:
        if self.final_tests is not None:
            return self.final_tests
        if self.rounds:
            return self.rounds[-1].survivors
        return battery_size

    def split(self, battery_size: int) -> Tuple[float, ...]:
        """alpha_j per final test; equal shares unless a split is given."""
        if self.alpha_split is not None:
            return tuple(self.alpha_split)
        k = self.k(battery_size)
        return tuple([self.alpha / k] * k)

    def participants(self, battery_size: int) -> Tuple[int, ...]:
        """Number of tests run in each preliminary round."""
        counts = []
        current = battery_size
        for spec in self.rounds:
            counts.append(current)
            current = spec.survivors
        return tuple(counts)

    def validate(self, battery_size: int) -> "AdaptivePlan":
        if not 0.0 < self.alpha < 1.0:
            raise PlanError(f"alpha must lie in (0, 1), got {self.alpha}", key="alpha")
        if self.final_length <= 0:
            raise PlanError("final length must be positive", key="plan.final_length")
        if battery_size < 1:
            raise PlanError("the battery is empty", key="battery")
        previous_survivors = battery_size
        previous_length = 0
        for i, spec in enumerate(self.rounds):
            key = f"plan.rounds[{i}]"
            if spec.length <= 0:
                raise PlanError("round length must be positive", key=f"{key}.length")
            if spec.length < previous_length:
                raise PlanError("round lengths must be non-decreasing", key=f"{key}.length")
            if spec.survivors < 1:
                raise PlanError("at least one test must survive", key=f"{key}.survivors")
            limit_ok = spec.survivors <= previous_survivors if i == 0 else spec.survivors < previous_survivors
            if not limit_ok:
                raise PlanError(
                    f"survivors must strictly decrease (got {spec.survivors} after {previous_survivors})",
                    key=f"{key}.survivors",
                )
            previous_survivors = spec.survivors
            previous_length = spec.length

        k = self.k(battery_size)
        if k < 1 or k > battery_size:
            raise PlanError(f"k must lie in [1, {battery_size}], got {k}", key="plan.final_tests")
        if self.rounds and k != self.rounds[-1].survivors:
            raise PlanError(
                f"final stage runs the {self.rounds[-1].survivors} survivors of the last round, not {k}",
                key="plan.final_tests",
            )
        if not self.rounds and k != battery_size:
            raise PlanError("without preliminary rounds every test goes to the final stage",
                            key="plan.final_tests")

        if self.alpha_split is not None:
            if len(self.alpha_split) != k:
                raise PlanError(f"alpha split has {len(self.alpha_split)} entries for k={k}",
                                key="plan.alpha_split")
            if any(a <= 0.0 for a in self.alpha_split):
                raise PlanError("every alpha_j must be > 0", key="plan.alpha_split")
            if not math.isclose(math.fsum(self.alpha_split), self.alpha,
                                rel_tol=SPLIT_TOLERANCE, abs_tol=0.0):
                raise PlanError("alpha split does not sum to alpha", key="plan.alpha_split")

        if self.budget_seconds is not None and self.budget_seconds <= 0:
            raise PlanError("budget must be positive", key="plan.budget_seconds")
        return self


def cost_ratio(plan: AdaptivePlan, battery_size: int) -> Fraction:
    """(s M) / (sum_r s_r n_r + k M): full-battery bits over adaptive bits.

    Exact rational arithmetic on the integer lengths.
    """
    s = battery_size
    M = plan.final_length
    adaptive = sum(
        count * spec.length for count, spec in zip(plan.participants(s), plan.rounds)
    ) + plan.k(s) * M
    return Fraction(s * M, adaptive)


def estimate_plan_seconds(plan: AdaptivePlan, battery: Sequence[TestDescriptor]) -> float:
    """Worst-case run time from calibrated speeds.

    Each round after the first is charged with its slowest possible
    participants, and the final stage with the slowest k tests.
    """
    if any(d.speed is None or d.speed <= 0 for d in battery):
        raise ValueError("every descriptor needs a calibrated speed")
    per_bit = sorted((1.0 / d.speed for d in battery), reverse=True)
    total = 0.0
    for count, spec in zip(plan.participants(len(battery)), plan.rounds):
        total += spec.length * sum(per_bit[:count])
    total += plan.final_length * sum(per_bit[:plan.k(len(battery))])
    if plan.compare_full_battery:
        total += plan.final_length * sum(per_bit)
    return total
