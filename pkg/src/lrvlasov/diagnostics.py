"""Conserved-quantity time series and their CSV serialization."""

import io
from dataclasses import dataclass

import numpy as np

from .fullgrid import FullGridState
from .moments import compute_v_moments
from .poisson import ElectricField, electric_energy
from .state import LowRankState

CSV_COLUMNS = (
    "t",
    "electric_energy",
    "mass",
    "momentum",
    "energy",
    "l2",
    "mass_err",
    "momentum_err",
    "energy_err",
    "l2_err",
)

SUBSTEP_COLUMNS = (
    "step",
    "t",
    "substep",
    "kind",
    "corr_norm",
    "local_resid",
    "mass_resid",
    "mom_resid",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    electric_energy: float
    mass: float
    momentum: float
    energy: float
    l2: float

    def drifts_from(self, ref: "DiagnosticsRecord") -> dict:
        return {
            "mass_err": abs(self.mass - ref.mass),
            "momentum_err": abs(self.momentum - ref.momentum),
            "energy_err": abs(self.energy - ref.energy),
            "l2_err": abs(self.l2 - ref.l2),
        }


def diagnose_lowrank(state: LowRankState, E: ElectricField, t: float) -> DiagnosticsRecord:
    """Invariants straight from the factors: with orthonormal bases the L2
    norm of f is the Frobenius norm of S, and mass, momentum and kinetic
    energy contract kappa' S against the velocity moments."""
    vm = compute_v_moments(state.V, state.gv)
    kappa = state.gx.dx * state.X.sum(axis=0)
    ee = electric_energy(E)
    kinetic = 0.5 * float(kappa @ state.S @ vm.gamma)
    return DiagnosticsRecord(
        t=t,
        electric_energy=ee,
        mass=float(kappa @ state.S @ vm.alpha),
        momentum=float(kappa @ state.S @ vm.beta),
        energy=kinetic + ee,
        l2=float(np.linalg.norm(state.S)),
    )


def diagnose_fullgrid(state: FullGridState, E: ElectricField, t: float) -> DiagnosticsRecord:
    """Same invariants by direct tensor quadrature."""
    gx, gv = state.gx, state.gv
    w = gx.dx * gv.dx
    vw = gv.moment_weight(1)
    v2w = gv.moment_weight(2)
    colsum = state.f.sum(axis=0)
    ee = electric_energy(E)
    return DiagnosticsRecord(
        t=t,
        electric_energy=ee,
        mass=w * float(colsum.sum()),
        momentum=w * float(vw @ colsum),
        energy=0.5 * w * float(v2w @ colsum) + ee,
        l2=float(np.sqrt(w * (state.f**2).sum())),
    )


def format_csv_row(record: DiagnosticsRecord, ref: DiagnosticsRecord) -> str:
    drifts = record.drifts_from(ref)
    fields = [
        record.t,
        record.electric_energy,
        record.mass,
        record.momentum,
        record.energy,
        record.l2,
        drifts["mass_err"],
        drifts["momentum_err"],
        drifts["energy_err"],
        drifts["l2_err"],
    ]
    return ",".join(f"{x:.17g}" for x in fields)


class DiagnosticsWriter:
    """Incremental CSV writer; every row is flushed so a blow-up mid-run
    leaves all completed rows on disk."""

    def __init__(self, stream: io.TextIOBase):
        self.stream = stream
        self.reference: DiagnosticsRecord | None = None
        self.stream.write(",".join(CSV_COLUMNS) + "\n")
        self.stream.flush()

    def write(self, record: DiagnosticsRecord) -> None:
        if self.reference is None:
            self.reference = record
        self.stream.write(format_csv_row(record, self.reference) + "\n")
        self.stream.flush()


class SubstepWriter:
    """Companion CSV with one row per substep correction report."""

    def __init__(self, stream: io.TextIOBase):
        self.stream = stream
        self.stream.write(",".join(SUBSTEP_COLUMNS) + "\n")
        self.stream.flush()

    def write(self, step: int, t: float, reports) -> None:
        for idx, rep in enumerate(reports):
            fields = (
                str(step),
                f"{t:.17g}",
                str(idx),
                rep.kind,
                f"{rep.corr_norm:.17g}",
                f"{rep.local_resid:.17g}",
                f"{rep.mass_resid:.17g}",
                f"{rep.mom_resid:.17g}",
            )
            self.stream.write(",".join(fields) + "\n")
        self.stream.flush()
