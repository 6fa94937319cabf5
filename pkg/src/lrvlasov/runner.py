"""Run orchestration: initialization, time loop, diagnostics and artifacts."""

import os
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .diagnostics import (
    DiagnosticsRecord,
    DiagnosticsWriter,
    SubstepWriter,
    diagnose_fullgrid,
    diagnose_lowrank,
)
from .fullgrid import fullgrid_density, fullgrid_strang_step, initialize_fullgrid
from .grid import PeriodicGrid
from .integrator import BlowUpError, lie_step, strang_step
from .moments import compute_v_moments
from .poisson import solve_field
from .state import LowRankState, density, evaluate_full, initialize_from_function, write_snapshot


@dataclass
class RunResult:
    records: list
    step_reports: list
    final_state: object
    blew_up: bool = False


def make_grids(config: RunConfig):
    sc = config.scenario
    return (
        PeriodicGrid(sc.x_min, sc.x_max, config.n_x),
        PeriodicGrid(sc.v_min, sc.v_max, config.n_v),
    )


def _diagnose(state, t: float) -> DiagnosticsRecord:
    if isinstance(state, LowRankState):
        vm = compute_v_moments(state.V, state.gv)
        E = solve_field(state.gx, density(state, vm.alpha))
        return diagnose_lowrank(state, E, t)
    E = solve_field(state.gx, fullgrid_density(state))
    return diagnose_fullgrid(state, E, t)


def _snapshot_schedule(config: RunConfig) -> dict:
    """Map step index -> requested snapshot time (nearest step wins)."""
    schedule = {}
    for t_req in config.snapshot_times:
        step = int(round(t_req / config.tau))
        step = min(max(step, 0), config.n_steps)
        schedule[step] = t_req
    return schedule


def _dense_values(state) -> np.ndarray:
    return evaluate_full(state) if isinstance(state, LowRankState) else state.f


def run_loop(config: RunConfig, on_record=None, on_reports=None, on_snapshot=None):
    """Advance the configured solver, invoking callbacks as output is ready.

    Emits a diagnostics record at t = 0, every output_interval steps and at
    the final step; correction reports after every step; snapshots at the
    steps nearest the requested times. A BlowUpError propagates after all
    completed output has been delivered.
    """
    gx, gv = make_grids(config)
    if config.solver == "lowrank":
        state = initialize_from_function(config.scenario.f0, gx, gv, config.rank)
        step_fn = strang_step if config.splitting == "strang" else lie_step
    else:
        state = initialize_fullgrid(config.scenario.f0, gx, gv)
        step_fn = None

    snapshots = _snapshot_schedule(config)
    first = _diagnose(state, 0.0)
    # the global correction rows restore the initial invariants, so the
    # combined compromise cannot accumulate drift
    targets = (first.mass, first.momentum)
    if on_record:
        on_record(first)
    if on_snapshot and 0 in snapshots:
        on_snapshot(snapshots[0], _dense_values(state))

    for step in range(1, config.n_steps + 1):
        t = step * config.tau
        if step_fn is not None:
            state, report = step_fn(state, config.tau, config.mode, config.n_sub, targets)
            if on_reports:
                on_reports(step, t, report)
        else:
            state, _ = fullgrid_strang_step(state, config.tau)
        if on_record and (step % config.output_interval == 0 or step == config.n_steps):
            on_record(_diagnose(state, t))
        if on_snapshot and step in snapshots:
            on_snapshot(snapshots[step], _dense_values(state))
    return state


def simulate(config: RunConfig) -> RunResult:
    """Run fully in memory; raises BlowUpError on numerical blow-up."""
    records, reports = [], []
    final = run_loop(
        config,
        on_record=records.append,
        on_reports=lambda step, t, rep: reports.append(rep),
    )
    return RunResult(records=records, step_reports=reports, final_state=final)


def run(config: RunConfig, output_dir: str) -> int:
    """Run and write diagnostics.csv, substeps.csv and snapshots.

    Returns 0 on success, 2 on numerical blow-up (partial output is kept).
    """
    os.makedirs(output_dir, exist_ok=True)
    diag_path = os.path.join(output_dir, "diagnostics.csv")
    sub_path = os.path.join(output_dir, "substeps.csv")
    with open(diag_path, "w") as diag_fh, open(sub_path, "w") as sub_fh:
        diag = DiagnosticsWriter(diag_fh)
        subs = SubstepWriter(sub_fh)

        def on_snapshot(t_req, values):
            write_snapshot(os.path.join(output_dir, f"snapshot_t{t_req:g}.bin"), values)

        try:
            run_loop(
                config,
                on_record=diag.write,
                on_reports=lambda step, t, rep: subs.write(step, t, rep.substeps),
                on_snapshot=on_snapshot,
            )
        except (BlowUpError, ValueError) as exc:
            print(f"numerical blow-up: {exc}")
            return 2
    return 0
