"""Experiment harness: two-step composition, Monte Carlo sweeps, output.

Every (run, r_max) cell samples one scenario realization from a seed
derived deterministically from (base seed, run id, r_max) and evaluates
all requested schemes on that same instance, so scheme comparisons are
paired.  Records are emitted in (run_id, r_max, scheme) order; with
timing disabled (the default) the whole output is a pure function of
the experiment spec, byte for byte.
"""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import baselines, step1, step2flow
from .instance import (
    AssociationInstance,
    AssociationSolution,
    instance_from_capacity,
    metrics,
    solution_from_x,
)
from .model import ScenarioConfig, build_capacity_matrix, sample_scenario

SCHEMES = ("two-step-exact", "two-step-proposed", "max-sum-rate", "max-snr")
SOLVER_CHOICES = ("exact", "lp-round")

RECORD_FIELDS = (
    "run_id",
    "r_max",
    "scheme",
    "n_associated",
    "n_satisfied",
    "sum_rate_bps",
    "rf_chains_used_step1",
    "wall_time_ms",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """A full Monte Carlo comparison: sweep r_max, repeat, average.

    With measure_time=False (default) wall_time_ms is recorded as 0.0
    so repeated executions produce identical bytes.
    """

    base: ScenarioConfig
    schemes: tuple = SCHEMES
    n_runs: int = 30
    r_max_sweep: tuple = (0.5e9, 1e9, 2e9, 4e9, 8e9)
    output_path: str = "results"
    exact_node_budget: int = step1.DEFAULT_NODE_BUDGET
    measure_time: bool = False

    def __post_init__(self) -> None:
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}; choose from {SCHEMES}")
        if any(r < self.base.r_min_bps for r in self.r_max_sweep):
            raise ValueError("every sweep value must be >= the base r_min_bps")


@dataclass(frozen=True)
class RunRecord:
    run_id: int
    r_max: float
    scheme: str
    n_associated: int
    n_satisfied: int
    sum_rate_bps: float
    rf_chains_used_step1: int
    wall_time_ms: float


@dataclass(frozen=True)
class TwoStepResult:
    combined: AssociationSolution
    step1_solution: AssociationSolution
    residual: step2flow.ResidualInstance


def merge_solutions(
    inst: AssociationInstance,
    first: AssociationSolution,
    res: step2flow.ResidualInstance,
    second_local: AssociationSolution,
) -> AssociationSolution:
    """Overlay the residual-space assignment onto the step-1 one.

    The merged z flags every UE with a link from either step; UEs served
    only in step 2 are associated without a rate promise.
    """
    x = first.x.copy()
    if second_local.x.size:
        block = np.ix_(res.ue_chain_ids, res.bs_chain_ids)
        x[block] = x[block] | second_local.x
    return solution_from_x(inst, x)


def run_two_step(
    inst: AssociationInstance,
    solver_choice: str,
    node_budget: int = step1.DEFAULT_NODE_BUDGET,
) -> TwoStepResult:
    """Requirement step then leftover max-sum-rate step, merged.

    solver_choice is "exact" or "lp-round".  When step 1 associates
    nobody the residual is the whole instance and the output coincides
    with the plain max-sum-rate scheme.
    """
    if solver_choice == "exact":
        first = step1.solve_step1_exact(inst, node_budget=node_budget)
    elif solver_choice == "lp-round":
        first = step1.round_solution(step1.solve_step1_lp(inst), inst)
    else:
        raise ValueError(f"solver_choice must be one of {SOLVER_CHOICES}")
    res = step2flow.make_residual(inst, first)
    second = step2flow.solve_step2(res)
    return TwoStepResult(
        combined=merge_solutions(inst, first, res, second),
        step1_solution=first,
        residual=res,
    )


def run_scheme(
    inst: AssociationInstance, scheme: str, node_budget: int = step1.DEFAULT_NODE_BUDGET
) -> tuple[AssociationSolution, int]:
    """Run one scheme; returns (solution, step-1 chains used)."""
    if scheme == "two-step-exact":
        result = run_two_step(inst, "exact", node_budget)
        return result.combined, int(result.step1_solution.x.sum())
    if scheme == "two-step-proposed":
        result = run_two_step(inst, "lp-round", node_budget)
        return result.combined, int(result.step1_solution.x.sum())
    if scheme == "max-sum-rate":
        return baselines.max_sum_rate(inst), 0
    if scheme == "max-snr":
        return baselines.max_snr(inst), 0
    raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")


def derive_seed(base_seed: int, run_id: int, r_max_bps: float) -> int:
    """Deterministic per-cell seed; r_max enters as its rounded bit/s value."""
    ss = np.random.SeedSequence([int(base_seed), int(run_id), int(round(r_max_bps))])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def build_cell_instance(base: ScenarioConfig, run_id: int, r_max_bps: float):
    cfg = replace(base, r_max_bps=r_max_bps, seed=derive_seed(base.seed, run_id, r_max_bps))
    real = sample_scenario(cfg)
    return instance_from_capacity(build_capacity_matrix(real, cfg), real.rate_req, cfg)


def run_experiment(spec: ExperimentSpec) -> list[RunRecord]:
    """All (run, r_max, scheme) records, sorted by (run_id, r_max, scheme).

    An exhausted exact-search budget is logged and the record is filled
    from the best incumbent; the sweep continues.
    """
    records: list[RunRecord] = []
    for run_id in range(spec.n_runs):
        for r_max in spec.r_max_sweep:
            inst = build_cell_instance(spec.base, run_id, r_max)
            for scheme in spec.schemes:
                start = time.perf_counter()
                try:
                    sol, chains = run_scheme(inst, scheme, spec.exact_node_budget)
                except step1.NodeBudgetExceeded as exc:
                    warnings.warn(
                        f"run {run_id}, r_max {r_max:g}: {exc}; recording the incumbent"
                    )
                    first = exc.incumbent
                    res = step2flow.make_residual(inst, first)
                    sol = merge_solutions(inst, first, res, step2flow.solve_step2(res))
                    chains = int(first.x.sum())
                elapsed_ms = (time.perf_counter() - start) * 1e3
                m = metrics(inst, sol)
                records.append(
                    RunRecord(
                        run_id=run_id,
                        r_max=float(r_max),
                        scheme=scheme,
                        n_associated=m.n_associated,
                        n_satisfied=m.n_satisfied,
                        sum_rate_bps=m.sum_rate_bps,
                        rf_chains_used_step1=chains,
                        wall_time_ms=elapsed_ms if spec.measure_time else 0.0,
                    )
                )
    records.sort(key=lambda r: (r.run_id, r.r_max, r.scheme))
    return records


def aggregate(records: list[RunRecord]) -> list[dict]:
    """Per-(r_max, scheme) means of every numeric record field."""
    groups: dict[tuple, list[RunRecord]] = {}
    for rec in records:
        groups.setdefault((rec.r_max, rec.scheme), []).append(rec)
    out = []
    for (r_max, scheme), recs in sorted(groups.items()):
        out.append(
            {
                "r_max": r_max,
                "scheme": scheme,
                "mean_n_associated": float(np.mean([r.n_associated for r in recs])),
                "mean_n_satisfied": float(np.mean([r.n_satisfied for r in recs])),
                "mean_sum_rate_bps": float(np.mean([r.sum_rate_bps for r in recs])),
                "mean_rf_chains_used_step1": float(
                    np.mean([r.rf_chains_used_step1 for r in recs])
                ),
                "mean_wall_time_ms": float(np.mean([r.wall_time_ms for r in recs])),
                "n_runs": len(recs),
            }
        )
    return out


def _format(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def emit_results(records: list[RunRecord], out_dir: str | Path, fmt: str = "csv"):
    """Write records plus the per-(r_max, scheme) aggregate companion file.

    Returns (records_path, aggregates_path).  Empty record lists are an
    error; unknown formats too.
    """
    if not records:
        raise ValueError("no records to emit")
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    aggs = aggregate(records)

    if fmt == "csv":
        rec_path = out / "records.csv"
        lines = [",".join(RECORD_FIELDS)]
        for rec in records:
            lines.append(",".join(_format(getattr(rec, f)) for f in RECORD_FIELDS))
        rec_path.write_text("\n".join(lines) + "\n")

        agg_path = out / "aggregates.csv"
        agg_fields = list(aggs[0].keys())
        lines = [",".join(agg_fields)]
        for row in aggs:
            lines.append(",".join(_format(row[f]) for f in agg_fields))
        agg_path.write_text("\n".join(lines) + "\n")
    else:
        rec_path = out / "records.json"
        rec_path.write_text(
            json.dumps([{f: getattr(r, f) for f in RECORD_FIELDS} for r in records], indent=1)
            + "\n"
        )
        agg_path = out / "aggregates.json"
        agg_path.write_text(json.dumps(aggs, indent=1) + "\n")
    return rec_path, agg_path


def read_records_csv(path: str | Path) -> list[RunRecord]:
    """Parse a records CSV back into typed RunRecord objects."""
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    if tuple(header) != RECORD_FIELDS:
        raise ValueError(f"unexpected header {header}")
    types = {f.name: f.type for f in fields(RunRecord)}
    out = []
    for line in lines[1:]:
        values = line.split(",")
        kwargs = {}
        for name, value in zip(RECORD_FIELDS, values):
            kwargs[name] = int(value) if types[name] == "int" else (
                float(value) if types[name] == "float" else value
            )
        out.append(RunRecord(**kwargs))
    return out
