"""Result records shared by the battery runner and the adaptive scheduler."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

PVALUE_FLOOR = 1e-300


def clamp_pvalue(p: float) -> float:
    """Keep p in [PVALUE_FLOOR, 1] so gamma stays finite."""
    if math.isnan(p):
        return 1.0
    return min(1.0, max(PVALUE_FLOOR, float(p)))


def gamma_of(pvalue: float, n_bits: int) -> float:
    """-log2(pvalue) / n, zero exactly when pvalue == 1."""
    if pvalue >= 1.0 or n_bits <= 0:
        return 0.0
    return -math.log2(pvalue) / n_bits


@dataclass(frozen=True)
class TestResult:
    """One row of a preliminary table: test, tested length, p-value, gamma.

    ``cost`` is wall time in seconds and does not take part in equality.
    ``error`` is set when the test could not run; such rows rank last.
    """

    __test__ = False  # no es una clase de pytest

    test_id: str
    n: int
    pvalue: float
    gamma: float
    cost: float = field(default=0.0, compare=False)
    error: Optional[str] = None

    @property
    def gamma_per_byte(self) -> float:
        return self.gamma * 8.0

    @property
    def length_bytes(self) -> float:
        return self.n / 8.0

    @property
    def ok(self) -> bool:
        return self.error is None

    @classmethod
    def failed(cls, test_id: str, n: int, error: str) -> "TestResult":
        return cls(test_id=test_id, n=n, pvalue=1.0, gamma=0.0, error=error)


class Decision(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


@dataclass(frozen=True)
class FinalCheck:
    """Final-stage comparison of one p-value against its share of alpha."""

    result: TestResult
    alpha: float

    @property
    def passed(self) -> bool:
        return self.result.pvalue > self.alpha


@dataclass
class CostLedger:
    bits_per_test: Dict[str, int] = field(default_factory=dict)
    total_bits: int = 0
    wall_time: float = field(default=0.0, compare=False)
    cost_ratio: Optional[float] = None

    def charge(self, result: TestResult) -> None:
        self.bits_per_test[result.test_id] = self.bits_per_test.get(result.test_id, 0) + result.n
        self.total_bits += result.n


@dataclass
class Verdict:
    """Accept/reject of H0 with the final checks, the preliminary trace and the costs."""

    decision: Decision
    final: List[FinalCheck]
    trace: List[List[TestResult]] = field(default_factory=list)
    ledger: CostLedger = field(default_factory=CostLedger)
    warnings: List[str] = field(default_factory=list)
    comparison: Optional["Verdict"] = None

    @property
    def accepted(self) -> bool:
        return self.decision is Decision.ACCEPT

    @property
    def alpha(self) -> float:
        return sum(check.alpha for check in self.final)

    @classmethod
    def decide(cls, final: List[FinalCheck], **kwargs) -> "Verdict":
        decision = Decision.ACCEPT if all(c.passed for c in final) else Decision.REJECT
        return cls(decision=decision, final=final, **kwargs)


def battery_significance(alphas: List[float], independent: bool = False) -> float:
    """Level of a battery that rejects when any member rejects.

    Union bound sum(alpha_i); exact 1 - prod(1 - alpha_i) for independent tests.
    """
    if independent:
        return 1.0 - math.prod(1.0 - a for a in alphas)
    return float(sum(alphas))
