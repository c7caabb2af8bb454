"""
Reports for verdicts and tables.

Three formats: a human report built from rich tables (preliminary rounds in
the layout test / length / p-value / -log2(p)/l per byte, then the final
stage and the cost ledger), lossless JSON, and TSV for plotting tools.
Timing values are left out unless ``include_timing`` is set, so the same
configuration and seeds always give the same bytes.
"""

import io
import json
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd
from rich.console import Console
from rich.table import Table

from src.battery.results import (
    CostLedger,
    Decision,
    FinalCheck,
    TestResult,
    Verdict,
    battery_significance,
)

SeedRuns = List[Tuple[int, Verdict]]
Reportable = Union[Verdict, pd.DataFrame, SeedRuns]

_SUPERSCRIPT = str.maketrans("-0123456789", "⁻⁰¹²³⁴⁵⁶⁷⁸⁹")


# Formato numérico

def format_pvalue(p: float) -> str:
    """Scientific notation, two significant digits (``2.1e-02``)."""
    return f"{p:.1e}"


def _two_significant(value: float) -> str:
    if value == 0:
        return "0"
    decimals = 1 - math.floor(math.log10(abs(value)))
    rounded = round(value, decimals)
    return f"{rounded:.{max(decimals, 0)}f}"


def common_exponent(values: Sequence[float]) -> Optional[int]:
    """Power of ten that puts the largest value's mantissa in [10, 100)."""
    positive = [v for v in values if v > 0 and math.isfinite(v)]
    if not positive:
        return None
    return math.floor(math.log10(max(positive))) - 1


def format_gamma(value: float, exponent: Optional[int] = None) -> str:
    """Gamma as ``mantissa 10^e`` with two significant digits (``28 10⁻⁷``)."""
    if value == 0:
        return "0"
    auto = exponent is None
    if auto:
        exponent = common_exponent([value])
    mantissa = _two_significant(value / 10.0 ** exponent)
    if auto and abs(float(mantissa)) >= 100:
        # el redondeo pasó de 99.x a 100
        exponent += 1
        mantissa = _two_significant(float(mantissa) / 10.0)
    return f"{mantissa} 10{str(exponent).translate(_SUPERSCRIPT)}"


# Serialización JSON

def _result_to_dict(result: TestResult, include_timing: bool) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "test": result.test_id,
        "n": result.n,
        "length_bytes": result.length_bytes,
        "pvalue": result.pvalue,
        "gamma": result.gamma,
        "gamma_per_byte": result.gamma_per_byte,
        "error": result.error,
    }
    if include_timing:
        data["cost"] = result.cost
    return data


def _result_from_dict(data: Dict[str, Any]) -> TestResult:
    return TestResult(
        test_id=data["test"],
        n=int(data["n"]),
        pvalue=float(data["pvalue"]),
        gamma=float(data["gamma"]),
        cost=float(data.get("cost", 0.0)),
        error=data.get("error"),
    )


def verdict_to_dict(verdict: Verdict, include_timing: bool = False) -> Dict[str, Any]:
    final = []
    for check in verdict.final:
        row = _result_to_dict(check.result, include_timing)
        row.update(alpha=check.alpha, passed=check.passed)
        final.append(row)
    ledger: Dict[str, Any] = {
        "bits_per_test": dict(verdict.ledger.bits_per_test),
        "total_bits": verdict.ledger.total_bits,
        "cost_ratio": verdict.ledger.cost_ratio,
    }
    if include_timing:
        ledger["wall_time"] = verdict.ledger.wall_time
    return {
        "decision": verdict.decision.value,
        "alpha": verdict.alpha,
        "level_bound": battery_significance([c.alpha for c in verdict.final]),
        "final": final,
        "trace": [[_result_to_dict(r, include_timing) for r in rnd] for rnd in verdict.trace],
        "ledger": ledger,
        "warnings": list(verdict.warnings),
        "comparison": (verdict_to_dict(verdict.comparison, include_timing)
                       if verdict.comparison is not None else None),
    }


def verdict_from_dict(data: Dict[str, Any]) -> Verdict:
    raw_ledger = data.get("ledger", {})
    ledger = CostLedger(
        bits_per_test={k: int(v) for k, v in raw_ledger.get("bits_per_test", {}).items()},
        total_bits=int(raw_ledger.get("total_bits", 0)),
        wall_time=float(raw_ledger.get("wall_time", 0.0)),
        cost_ratio=raw_ledger.get("cost_ratio"),
    )
    comparison = data.get("comparison")
    return Verdict(
        decision=Decision(data["decision"]),
        final=[FinalCheck(_result_from_dict(row), float(row["alpha"])) for row in data["final"]],
        trace=[[_result_from_dict(row) for row in rnd] for rnd in data.get("trace", [])],
        ledger=ledger,
        warnings=list(data.get("warnings", [])),
        comparison=verdict_from_dict(comparison) if comparison is not None else None,
    )


def _plain(value: Any) -> Any:
    return value.item() if hasattr(value, "item") else value


def frame_to_records(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    return [{k: _plain(v) for k, v in row.items()} for row in frame.to_dict(orient="records")]


# Tablas rich

def _render(tables: Sequence[Any]) -> str:
    buffer = io.StringIO()
    # sin markup: los ids de test llevan corchetes, p.ej. compression[k=1]
    console = Console(file=buffer, width=110, color_system=None, force_terminal=False,
                      markup=False, highlight=False)
    for table in tables:
        console.print(table)
    return buffer.getvalue()


def _round_table(title: str, results: Sequence[TestResult]) -> Table:
    exponent = common_exponent([r.gamma_per_byte for r in results if r.ok])
    table = Table(title=title)
    table.add_column("test")
    table.add_column("length (bytes)", justify="right")
    table.add_column("p-value", justify="right")
    table.add_column("-log2(p)/l (per byte)", justify="right")
    for r in results:
        if r.ok:
            table.add_row(r.test_id, f"{r.length_bytes:g}", format_pvalue(r.pvalue),
                          format_gamma(r.gamma_per_byte, exponent))
        else:
            table.add_row(r.test_id, f"{r.length_bytes:g}", "-", f"error: {r.error}")
    return table


def _final_table(verdict: Verdict, title: str, include_timing: bool) -> Table:
    table = Table(title=title)
    for column in ("test", "length (bytes)", "p-value", "alpha_j", "result"):
        table.add_column(column, justify="left" if column == "test" else "right")
    if include_timing:
        table.add_column("cost (s)", justify="right")
    for check in verdict.final:
        r = check.result
        row = [r.test_id, f"{r.length_bytes:g}", format_pvalue(r.pvalue), f"{check.alpha:.2g}",
               "pass" if check.passed else "REJECT"]
        if include_timing:
            row.append(f"{r.cost:.3f}")
        table.add_row(*row)
    return table


def _ledger_table(verdict: Verdict, include_timing: bool) -> Table:
    ledger = verdict.ledger
    table = Table(title="Cost ledger")
    table.add_column("item")
    table.add_column("value", justify="right")
    for test_id, bits in ledger.bits_per_test.items():
        table.add_row(f"bits {test_id}", str(bits))
    table.add_row("total bits", str(ledger.total_bits))
    if ledger.cost_ratio is not None:
        table.add_row("cost ratio (full / adaptive)", f"{ledger.cost_ratio:.2f}")
    table.add_row("level bound", f"{battery_significance([c.alpha for c in verdict.final]):.2g}")
    if include_timing:
        table.add_row("wall time (s)", f"{ledger.wall_time:.3f}")
    return table


def _comparison_line(verdict: Verdict, heading: str) -> str:
    full_bits = verdict.comparison.ledger.total_bits
    adaptive_bits = verdict.ledger.total_bits
    line = f"{heading}full battery: {full_bits} bits, adaptive: {adaptive_bits} bits"
    if adaptive_bits:
        line += f", bits ratio (full / adaptive) {full_bits / adaptive_bits:.2f}"
    return line


def _verdict_tables(verdict: Verdict, include_timing: bool, heading: str = "") -> List[Any]:
    tables: List[Any] = []
    for i, results in enumerate(verdict.trace, start=1):
        tables.append(_round_table(f"{heading}Preliminary stage, round {i}", results))
    tables.append(_final_table(verdict, f"{heading}Final stage", include_timing))
    tables.append(_ledger_table(verdict, include_timing))
    if verdict.comparison is not None:
        tables.append(_final_table(verdict.comparison, f"{heading}Full battery on the final window",
                                   include_timing))
        tables.append(_comparison_line(verdict, heading))
    tables.append(f"{heading}H0 {'accepted' if verdict.accepted else 'rejected'}")
    for warning in verdict.warnings:
        tables.append(f"warning: {warning}")
    return tables


def _frame_table(frame: pd.DataFrame, title: str) -> Table:
    table = Table(title=title)
    for column in frame.columns:
        table.add_column(str(column), justify="right")
    for row in frame_to_records(frame):
        table.add_row(*[f"{v:.4g}" if isinstance(v, float) else str(v) for v in row.values()])
    return table


# TSV

def _verdict_rows(verdict: Verdict, include_timing: bool, seed: Optional[int] = None) -> List[Dict[str, Any]]:
    rows = []

    def add(stage: str, result: TestResult, alpha: Optional[float], passed: Optional[bool]) -> None:
        row: Dict[str, Any] = {} if seed is None else {"seed": seed}
        row.update(stage=stage, test=result.test_id, n=result.n, pvalue=result.pvalue,
                   gamma=result.gamma, gamma_per_byte=result.gamma_per_byte,
                   alpha=alpha, passed=passed, error=result.error)
        if include_timing:
            row["cost"] = result.cost
        rows.append(row)

    for i, results in enumerate(verdict.trace, start=1):
        for result in results:
            add(f"round{i}", result, None, None)
    for check in verdict.final:
        add("final", check.result, check.alpha, check.passed)
    return rows


def emit_report(subject: Reportable, fmt: str = "human", include_timing: bool = False,
                title: str = "Results") -> str:
    """Serialize a Verdict, a list of (seed, Verdict) runs or a DataFrame."""
    fmt = str(getattr(fmt, "value", fmt))
    if fmt not in ("human", "json", "tsv"):
        raise ValueError(f"unknown report format {fmt!r}")

    if isinstance(subject, pd.DataFrame):
        if fmt == "json":
            return json.dumps({"title": title, "rows": frame_to_records(subject)}, indent=2) + "\n"
        if fmt == "tsv":
            return subject.to_csv(sep="\t", index=False)
        return _render([_frame_table(subject, title)])

    if isinstance(subject, Verdict):
        if fmt == "json":
            return json.dumps(verdict_to_dict(subject, include_timing), indent=2) + "\n"
        if fmt == "tsv":
            return pd.DataFrame(_verdict_rows(subject, include_timing)).to_csv(sep="\t", index=False)
        return _render(_verdict_tables(subject, include_timing))

    runs = list(subject)
    if fmt == "json":
        payload = {"runs": [{"seed": seed, "verdict": verdict_to_dict(v, include_timing)}
                            for seed, v in runs]}
        return json.dumps(payload, indent=2) + "\n"
    if fmt == "tsv":
        rows = [row for seed, v in runs for row in _verdict_rows(v, include_timing, seed)]
        return pd.DataFrame(rows).to_csv(sep="\t", index=False)
    tables: List[Any] = []
    for seed, verdict in runs:
        tables.extend(_verdict_tables(verdict, include_timing, heading=f"[seed {seed}] "))
    rejected = sum(1 for _, v in runs if not v.accepted)
    tables.append(f"{rejected}/{len(runs)} runs rejected H0")
    return _render(tables)


def load_report(text: str) -> Union[Verdict, SeedRuns, pd.DataFrame]:
    """Inverse of the JSON report."""
    data = json.loads(text)
    if "runs" in data:
        return [(int(run["seed"]), verdict_from_dict(run["verdict"])) for run in data["runs"]]
    if "rows" in data:
        return pd.DataFrame(data["rows"])
    return verdict_from_dict(data)
