"""Batch experiment driver with persistent CSV/JSON outputs.

``run_table`` reproduces the solved-count / timing / gap-closure tables at
desk scale: instances are drawn per (n, m) cell, screened so the plain
semidefinite relaxation does not already solve them, and every configured
relaxation is scored per instance.  ``run_example`` replays the hard-coded
demonstration problems.

CSV schema (one row per instance x relaxation, sorted by instance_id):

    instance_id,family,n,m,seed,relaxation,status,r_star,v_feasible,
    relative_gap,eig_ratio,solved,rlt_activity,build_ms,solve_ms

Floats are printed with 12 significant digits; the two timing columns are
the only nondeterministic ones.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import RelaxationReport, evaluate_relaxation, gap_closure
from .generators import DEFAULT_MASTER_SEED, ScreenedInstance, generate_screened_batch
from .instances import lift
from .relaxations import resolve_kind
from .solve import SolverOptions
from .verify import VerifyReport, verify_counterexample

CSV_COLUMNS = (
    "instance_id,family,n,m,seed,relaxation,status,r_star,v_feasible,"
    "relative_gap,eig_ratio,solved,rlt_activity,build_ms,solve_ms"
)

_FAMILIES = {"linear", "martinez", "maxnorm"}


@dataclass
class ExperimentConfig:
    family: str
    dims: list[tuple[int, int]]
    count: int = 100
    master_seed: int = DEFAULT_MASTER_SEED
    relaxations: tuple[str, ...] = ("kron", "beta")
    solver: SolverOptions = field(default_factory=SolverOptions)
    output_dir: str = "bench_out"
    workers: int = 1

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        self.dims = [(int(n), int(m)) for n, m in self.dims]
        for n, m in self.dims:
            if self.family in ("linear", "martinez") and m != 2:
                raise ValueError(f"{self.family} family requires m = 2, got {m}")
        self.relaxations = tuple(self.relaxations)

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        d = dict(d)
        if isinstance(d.get("solver"), dict):
            d["solver"] = SolverOptions(**d["solver"])
        return ExperimentConfig(**d)

    @staticmethod
    def from_json(path: str | Path) -> "ExperimentConfig":
        return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))


@dataclass
class BenchResult:
    rows: list[dict]
    summary: dict
    csv_path: Path
    json_path: Path


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def _csv_row(instance_id: str, inst, name: str, rep: RelaxationReport) -> dict:
    return {
        "instance_id": instance_id,
        "family": inst.family,
        "n": inst.n,
        "m": inst.m,
        "seed": inst.seed,
        "relaxation": name,
        "status": rep.status.name,
        "r_star": rep.r_star,
        "v_feasible": rep.v_feasible,
        "relative_gap": rep.relative_gap,
        "eig_ratio": rep.eig_ratio,
        "solved": int(rep.solved),
        "rlt_activity": rep.rlt_activity,
        "build_ms": rep.build_ms,
        "solve_ms": rep.solve_ms,
    }


def _score_instance(rec: ScreenedInstance, config: ExperimentConfig):
    """Solve every configured relaxation for one screened instance."""
    inst = rec.instance
    geom = lift(inst)
    reports: dict[str, RelaxationReport] = {"shor": rec.shor_report}
    for name in config.relaxations:
        reports[name] = evaluate_relaxation(
            inst, resolve_kind(name, inst), config.solver, geom=geom
        )
    return rec, reports


def _cross_table(per_instance: list[dict]) -> dict:
    """The 2x2 solved-status table with mean gap closures per bucket."""
    buckets = {
        (False, False): "kron_unsolved_beta_unsolved",
        (False, True): "kron_unsolved_beta_solved",
        (True, False): "kron_solved_beta_unsolved",
        (True, True): "kron_solved_beta_solved",
    }
    table = {
        name: {
            "instances": 0,
            "avg_closure_kron": None,
            "avg_closure_beta": None,
            "closure_count_kron": 0,
            "closure_count_beta": 0,
        }
        for name in buckets.values()
    }
    sums: dict[str, list] = {name: [[], []] for name in buckets.values()}
    shor_exact = 0
    for row in per_instance:
        if row["closure_kron"] is None and row["closure_beta"] is None and row["shor_exact"]:
            shor_exact += 1
            continue
        name = buckets[(row["kron_solved"], row["beta_solved"])]
        table[name]["instances"] += 1
        if row["closure_kron"] is not None:
            sums[name][0].append(row["closure_kron"])
        if row["closure_beta"] is not None:
            sums[name][1].append(row["closure_beta"])
    for name, (ck, cb) in sums.items():
        table[name]["closure_count_kron"] = len(ck)
        table[name]["closure_count_beta"] = len(cb)
        if ck:
            table[name]["avg_closure_kron"] = float(np.mean(ck))
        if cb:
            table[name]["avg_closure_beta"] = float(np.mean(cb))
    table["shor_exact_excluded"] = shor_exact
    return table


def run_table(config: ExperimentConfig) -> BenchResult:
    """Run the configured experiment; returns rows + summary and writes
    ``<family>_table.csv`` and ``<family>_summary.json`` to the output dir.

    Per-instance solver failures are recorded in their CSV rows (status
    column) and count as unsolved; they never abort the batch.
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    all_rows: list[dict] = []
    cells = []

    for n, m in config.dims:
        batch = generate_screened_batch(
            config.family, n, m, config.count, config.master_seed, config.solver
        )
        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                scored = list(pool.map(lambda r: _score_instance(r, config), batch))
        else:
            scored = [_score_instance(rec, config) for rec in batch]

        totals = {
            name: {"solved": 0, "total_solve_s": 0.0, "total_build_s": 0.0, "failures": 0}
            for name in ("shor", *config.relaxations)
        }
        per_instance = []
        for rec, reports in scored:
            inst = rec.instance
            instance_id = f"{config.family}-n{n}-m{m}-i{rec.index:04d}"
            s_star = rec.shor_report.r_star
            feas_values = [
                rep.v_feasible
                for rep in reports.values()
                if rep.status.ok and math.isfinite(rep.v_feasible)
            ]
            v_best = min(feas_values) if feas_values else math.nan
            for name, rep in reports.items():
                all_rows.append(_csv_row(instance_id, inst, name, rep))
                cell = totals[name]
                cell["solved"] += int(rep.solved)
                cell["total_solve_s"] += rep.solve_ms / 1e3
                cell["total_build_s"] += rep.build_ms / 1e3
                cell["failures"] += int(not rep.status.ok)
            if {"kron", "beta"} <= set(reports):
                closures = {}
                for name in ("kron", "beta"):
                    rep = reports[name]
                    closures[name] = (
                        gap_closure(s_star, rep.r_star, v_best)
                        if rep.status.ok and math.isfinite(v_best)
                        else None
                    )
                per_instance.append(
                    {
                        "kron_solved": reports["kron"].solved,
                        "beta_solved": reports["beta"].solved,
                        "closure_kron": closures["kron"],
                        "closure_beta": closures["beta"],
                        "shor_exact": math.isfinite(v_best)
                        and v_best - s_star < 1e-8,
                    }
                )
        cell_summary = {
            "family": config.family,
            "n": n,
            "m": m,
            "instances": len(batch),
            "draws": (batch[-1].index + 1) if batch else 0,
            "relaxations": totals,
        }
        if per_instance:
            cell_summary["cross_table"] = _cross_table(per_instance)
        cells.append(cell_summary)

    all_rows.sort(key=lambda r: (r["instance_id"], _relaxation_order(r["relaxation"], config)))
    summary = {
        "config": {
            "family": config.family,
            "dims": [list(d) for d in config.dims],
            "count": config.count,
            "master_seed": config.master_seed,
            "relaxations": list(config.relaxations),
            "backend": config.solver.resolved_backend(),
            "rel_tol": config.solver.rel_tol,
        },
        "cells": cells,
    }
    _assert_consistent(all_rows, summary)

    csv_path = out_dir / f"{config.family}_table.csv"
    json_path = out_dir / f"{config.family}_summary.json"
    lines = [CSV_COLUMNS]
    for r in all_rows:
        lines.append(
            ",".join(_fmt(r[c]) if not isinstance(r[c], str) else r[c]
                     for c in CSV_COLUMNS.split(","))
        )
    csv_path.write_text("\n".join(lines) + "\n")
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return BenchResult(all_rows, summary, csv_path, json_path)


def _relaxation_order(name: str, config: ExperimentConfig) -> int:
    order = ("shor", *config.relaxations)
    return order.index(name) if name in order else len(order)


def _assert_consistent(rows: list[dict], summary: dict) -> None:
    """Summary counts must equal the aggregation of per-instance rows."""
    for cell in summary["cells"]:
        key = (cell["family"], cell["n"], cell["m"])
        cell_rows = [r for r in rows if (r["family"], r["n"], r["m"]) == key]
        ids = {r["instance_id"] for r in cell_rows}
        if len(ids) != cell["instances"]:
            raise AssertionError(f"row/summary instance mismatch in cell {key}")
        for name, tot in cell["relaxations"].items():
            solved = sum(r["solved"] for r in cell_rows if r["relaxation"] == name)
            if solved != tot["solved"]:
                raise AssertionError(
                    f"solved-count mismatch for {name} in cell {key}: "
                    f"{solved} rows vs {tot['solved']} summary"
                )


# ---------------------------------------------------------------------------
# Hard-coded examples.
# ---------------------------------------------------------------------------


def run_example(name: str, options: SolverOptions | None = None) -> VerifyReport:
    """Replay one of the named demonstration problems and check its
    reference values (kron/beta objective, extracted minimizer)."""
    from .examples import (
        BALL_EXAMPLE_REFERENCE,
        LINEAR_EXAMPLE_REFERENCE,
        ball_example,
        linear_example,
    )

    if name == "counterexample":
        report = verify_counterexample(options)
        print(report.render())
        return report
    if name == "linear_ex":
        inst, ref = linear_example(), LINEAR_EXAMPLE_REFERENCE
    elif name == "ball_ex":
        inst, ref = ball_example(), BALL_EXAMPLE_REFERENCE
    else:
        raise ValueError(f"unknown example {name!r} (have linear_ex, ball_ex, counterexample)")

    report = VerifyReport(f"example {name}")
    geom = lift(inst)
    for key in ("kron", "beta"):
        rep = evaluate_relaxation(inst, resolve_kind(key, inst), options, geom=geom)
        report.add(
            f"{key} value",
            rep.status.ok and abs(rep.r_star - ref[key]) < 1e-3,
            rep.r_star,
            f"= {ref[key]} +- 1e-3",
        )
        report.info[key] = rep
        if key == "beta":
            xdev = float(np.abs(rep.x - ref["x"]).max()) if rep.x is not None else math.inf
            report.add("extracted point", xdev < 1e-3, xdev, "within 1e-3")
            report.add("solved (rank-1 certificate)", rep.solved, rep.eig_ratio, "> 1e4")
    print(report.render())
    return report
