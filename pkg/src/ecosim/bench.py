"""Quarter car benchmark runs, step-size sweeps and run comparisons."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .coupling import validate_graph
from .errors import IncomparableRuns, NonPositiveStep, ScenarioError
from .master import CosimResult, run_cosimulation
from .quartercar import assemble_state, initial_state, make_reticulation
from .reference import ReferenceSolution, reference_solution
from .scenario import BenchmarkScenario

log = logging.getLogger(__name__)

TRACE_COLUMNS = [
    "t", "dt", "u1", "u2", "du1", "du2", "y1", "y2", "deltaP", "deltaE_step",
    "E_acc", "P12", "P12_ref", "dP_avg", "eps",
]
SUMMARY_COLUMNS = [
    "label", "model", "reticulation", "algorithm", "policy", "tuning",
    "tolerance", "steps", "P12_mean", "dP", "dE",
]
TYPE_NAMES = {"uncorrected": "constant", "nepce": "NEPCE", "nepce_mod": "NEPCE mod."}


def fmt(x) -> str:
    if x is None:
        return ""
    return f"{float(x):.8e}"


@dataclass
class BenchmarkResult:
    scenario: BenchmarkScenario
    result: CosimResult
    tolerance: float | None
    summary: dict

    @property
    def steps(self) -> int:
        return len(self.result)


def build_reference(scenario: BenchmarkScenario, force: bool = False) -> ReferenceSolution:
    params = scenario.model_params()
    init = initial_state(scenario.excitation_energy, params, scenario.excitation)
    return reference_solution(params, init, scenario.T, scenario.cache_dir, force=force)


def simulate(
    scenario: BenchmarkScenario,
    tolerance: float | None = None,
    reference: ReferenceSolution | None = None,
    probe_state: bool = False,
) -> CosimResult:
    """One co-simulation run of ``scenario`` (no file output)."""
    params = scenario.model_params()
    init = initial_state(scenario.excitation_energy, params, scenario.excitation)
    s1, s2, bond = make_reticulation(
        params, scenario.reticulation, scenario.micro_steps, init, scenario.jacobian_floor
    )
    graph = validate_graph([s1, s2], [bond])
    ref_power = None
    if reference is not None:
        ref_power = lambda t: reference.power(t, scenario.reticulation)  # noqa: E731
    probe = None
    if probe_state:
        probe = lambda: assemble_state(s1, s2, scenario.reticulation).as_array()  # noqa: E731
    return run_cosimulation(graph, scenario.policy_object(tolerance), ref_power, probe)


def tune_tolerance(
    scenario: BenchmarkScenario,
    target_steps: int,
    rel_tol: float = 0.02,
    max_iter: int = 40,
) -> tuple[float, int]:
    """Geometric bisection on the ECCO tolerance until the step count is
    within ``rel_tol`` of ``target_steps``.  Returns ``(r, steps)``."""
    if scenario.policy != "ecco":
        raise ScenarioError("tolerance tuning needs policy = ecco")

    def steps(r: float) -> int:
        return len(simulate(scenario, tolerance=r))

    r = scenario.tolerance
    n = steps(r)
    best = (abs(n - target_steps), r, n)
    if abs(n - target_steps) <= rel_tol * target_steps:
        return r, n
    # a larger tolerance gives fewer steps
    lo = hi = r
    if n > target_steps:
        while n > target_steps:
            lo, hi = hi, hi * 10.0
            n = steps(hi)
            best = min(best, (abs(n - target_steps), hi, n))
    else:
        while n < target_steps:
            lo, hi = lo / 10.0, lo
            n = steps(lo)
            best = min(best, (abs(n - target_steps), lo, n))
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        n = steps(mid)
        best = min(best, (abs(n - target_steps), mid, n))
        if abs(n - target_steps) <= rel_tol * target_steps:
            return mid, n
        if n > target_steps:
            lo = mid
        else:
            hi = mid
    log.warning("tolerance tuning did not reach %d steps; closest %d", target_steps, best[2])
    return best[1], best[2]


def summarize(scenario: BenchmarkScenario, result: CosimResult, tolerance: float | None) -> dict:
    dt = result.column("dt") if len(result) else np.zeros(0)
    P12 = result.column("P12")[:, 0] if len(result) else np.zeros(0)
    T = scenario.T
    m = result.metrics
    return {
        "label": scenario.name,
        "model": scenario.law,
        "reticulation": scenario.reticulation,
        "algorithm": scenario.algorithm,
        "policy": scenario.policy,
        "tuning": scenario.tuning if scenario.algorithm != "uncorrected" else None,
        "tolerance": tolerance,
        "steps": len(result),
        "P12_mean": float(np.sum(P12 * dt) / T) if T > 0 else 0.0,
        "dP": float(np.sum(m.dP_avg)),
        "dE": float(np.sum(m.E_acc)),
    }


def run_benchmark(scenario: BenchmarkScenario, out_dir: str | Path | None = None) -> BenchmarkResult:
    tolerance = scenario.tolerance
    if scenario.policy == "ecco" and scenario.target_steps:
        tolerance, n = tune_tolerance(scenario, scenario.target_steps)
        log.info("tuned tolerance r=%.3g (%d steps)", tolerance, n)
    reference = build_reference(scenario)
    result = simulate(scenario, tolerance, reference)
    summary = summarize(scenario, result, tolerance)
    out = out_dir if out_dir is not None else scenario.out_dir
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / scenario.trace_file).write_text(trace_csv(result))
        (out / scenario.summary_file).write_text(summary_csv([summary]))
    return BenchmarkResult(scenario, result, tolerance, summary)


def trace_csv(result: CosimResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in result.records:
        ref = r.P12_ref[0] if r.P12_ref is not None else math.nan
        w.writerow([fmt(v) for v in (
            r.t_next, r.dt, r.u[0], r.u[1], r.du[0], r.du[1], r.y[0], r.y[1],
            r.dP[0], r.dE[0], r.E_acc[0], r.P12[0], ref, r.dP_avg[0], r.eps,
        )])
    return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def summary_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def read_summaries(paths: Sequence[str | Path]) -> list[dict]:
    rows = []
    for p in paths:
        with open(p, newline="") as fh:
            for raw in csv.DictReader(fh):
                row = dict(raw)
                row["reticulation"] = int(row["reticulation"])
                row["steps"] = int(row["steps"])
                for k in ("tuning", "tolerance", "P12_mean", "dP", "dE"):
                    row[k] = float(row[k]) if row.get(k) not in (None, "") else None
                rows.append(row)
    return rows


def _slope(x, y) -> float | None:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


@dataclass
class SweepTable:
    rows: list[dict]
    slope_dE: float | None
    slope_du: float | None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dt", "max_abs_dE_step", "max_abs_du", "dE_total", "steps"])
        for r in self.rows:
            w.writerow([fmt(r["dt"]), fmt(r["max_abs_dE_step"]), fmt(r["max_abs_du"]),
                        fmt(r["dE_total"]), r["steps"]])
        if self.slope_dE is not None:
            w.writerow(["# slope_dE", fmt(self.slope_dE)])
            w.writerow(["# slope_du", fmt(self.slope_du) if self.slope_du is not None else ""])
        return buf.getvalue()


def sweep_step_sizes(scenario: BenchmarkScenario, dts: Sequence[float]) -> SweepTable:
    if scenario.policy != "constant":
        raise ScenarioError("a step-size sweep needs policy = constant")
    for dt in dts:
        if not dt > 0:
            raise NonPositiveStep(f"step sizes must be positive, got {dt}")
    rows = []
    for dt in sorted(dts):
        res = simulate(scenario.with_(dt=float(dt)))
        rows.append({
            "dt": float(dt),
            "max_abs_dE_step": float(np.abs(res.column("dE")).max()) if len(res) else 0.0,
            "max_abs_du": float(np.abs(res.column("du")).max()) if len(res) else 0.0,
            "dE_total": float(np.sum(res.metrics.E_acc)),
            "steps": len(res),
        })
    x = [r["dt"] for r in rows]
    return SweepTable(
        rows,
        _slope(x, [r["max_abs_dE_step"] for r in rows]),
        _slope(x, [r["max_abs_du"] for r in rows]) if scenario.algorithm != "uncorrected" else None,
    )


def _reduction(base: float | None, value: float | None) -> float:
    if base is None or value is None or base == 0:
        return math.nan
    return 100.0 * (1.0 - abs(value) / abs(base))


def compare_runs(rows: Sequence[dict], baseline: int | None = None, step_tol: float = 0.05) -> list[dict]:
    """Percent reductions of ``dP`` and ``|dE|`` relative to a baseline row.

    The baseline defaults to the first uncorrected constant-step row, or the
    first row if there is none.
    """
    if not rows:
        return []
    if baseline is None:
        baseline = next(
            (i for i, r in enumerate(rows) if r["algorithm"] == "uncorrected" and r["policy"] == "constant"),
            0,
        )
    base = rows[baseline]
    report = []
    for row in rows:
        if (row["model"], row["reticulation"]) != (base["model"], base["reticulation"]):
            raise IncomparableRuns(
                f"{row['label']} ({row['model']}, ret {row['reticulation']}) does not match "
                f"baseline {base['label']} ({base['model']}, ret {base['reticulation']})"
            )
        if abs(row["steps"] - base["steps"]) > step_tol * base["steps"]:
            raise IncomparableRuns(
                f"{row['label']} has {row['steps']} steps, baseline has {base['steps']}"
            )
        report.append({
            "label": row["label"],
            "baseline": base["label"],
            "dP_reduction_pct": _reduction(base["dP"], row["dP"]),
            "dE_reduction_pct": _reduction(base["dE"], row["dE"]),
        })
    return report


def format_report(report: Sequence[dict]) -> str:
    lines = [f"{'run':<40} {'dP red. %':>10} {'|dE| red. %':>12}"]
    for r in report:
        lines.append(f"{r['label']:<40} {r['dP_reduction_pct']:>10.1f} {r['dE_reduction_pct']:>12.1f}")
    return "\n".join(lines)
