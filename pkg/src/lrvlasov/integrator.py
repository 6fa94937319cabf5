"""Projector-splitting time integrator.

One step advances the factors through three substeps: K = X S evolves with V
frozen, the coefficient matrix S evolves backward with both bases frozen,
and L = V S^T evolves with X frozen. QR transfers re-orthonormalize after
the K and L substeps. The electric field is recomputed from the current
density at the start of every substep and held frozen within it; the
conservation correction is applied to every substep output before the QR
transfer.
"""

from dataclasses import dataclass

import numpy as np

from . import conservation as cons
from .conservation import CorrectionMode, CorrectionSystem
from .grid import PeriodicGrid, GridFunction, spectral_derivative
from .moments import VMoments, XMoments, compute_v_moments, compute_x_moments
from .poisson import ElectricField, solve_field
from .state import LowRankState, orthonormalize


class BlowUpError(RuntimeError):
    """A substep produced non-finite values."""

    def __init__(self, kind: str, substep_index: int, stage: str = "integration"):
        super().__init__(
            f"non-finite values in {kind} substep ({stage}, internal step {substep_index})"
        )
        self.kind = kind
        self.substep_index = substep_index
        self.stage = stage


def _check_finite(arr: np.ndarray, kind: str, n_sub: int) -> np.ndarray:
    if not np.isfinite(arr).all():
        raise BlowUpError(kind, n_sub, stage="correction")
    return arr


@dataclass(frozen=True)
class SubstepResult:
    """Uncorrected substep output alongside its input and frozen field."""

    kind: str
    star: np.ndarray
    start: np.ndarray
    E0: ElectricField


@dataclass(frozen=True)
class StepReport:
    """Per-substep correction reports for one full step."""

    substeps: list

    def max_local_resid(self) -> float:
        return max(r.local_resid for r in self.substeps)


# ---------------------------------------------------------------------------
# substep right-hand sides

def rhs_K(K: np.ndarray, vm: VMoments, E: ElectricField, gx: PeriodicGrid) -> np.ndarray:
    """Transport of the space factors: -sum_l c1_jl dK_l/dx + E sum_l c2_jl K_l."""
    return -spectral_derivative(gx, K) @ vm.c1.T + E.values[:, None] * (K @ vm.c2.T)


def rhs_S(S: np.ndarray, vm: VMoments, xm: XMoments) -> np.ndarray:
    """Backward coupling of the coefficients: sum_kl (c1_jl d2_ik - c2_jl d1_ik) S_kl."""
    return xm.d2 @ S @ vm.c1.T - xm.d1 @ S @ vm.c2.T


def rhs_L(L: np.ndarray, xm: XMoments, gv: PeriodicGrid) -> np.ndarray:
    """Transport of the velocity factors: sum_k d1_ik dL_k/dv - v sum_k d2_ik L_k.

    The coordinate v enters as a pointwise multiplier and uses the
    seam-regularized samples, matching the c1 convention on the K side.
    """
    vw = gv.moment_weight(1)
    return spectral_derivative(gv, L) @ xm.d1.T - (vw[:, None] * L) @ xm.d2.T


def _rk4(f, y: np.ndarray, tau: float, n_sub: int, kind: str) -> np.ndarray:
    h = tau / n_sub
    for m in range(n_sub):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if not np.isfinite(y).all():
            raise BlowUpError(kind, m)
    return y


def substep_solve(
    kind: str,
    start: np.ndarray,
    tau: float,
    n_sub: int,
    *,
    vm: VMoments | None = None,
    xm: XMoments | None = None,
    E0: ElectricField | None = None,
    gx: PeriodicGrid | None = None,
    gv: PeriodicGrid | None = None,
    X: np.ndarray | None = None,
) -> SubstepResult:
    """Advance one substep ODE system with classical RK4 in n_sub stages.

    With a frozen field E0 the right-hand side is evaluated with that field
    throughout. When the space basis X is supplied instead, the field (and
    the coefficients d1 it enters) is recomputed self-consistently from the
    substep unknowns at every stage; the composed splitting is second-order
    only with the self-consistent fields.
    """
    if n_sub < 1:
        raise ValueError(f"n_sub must be at least 1, got {n_sub}")
    selfc = X is not None
    if kind == "K":
        if selfc:
            def f(K):
                E = solve_field(gx, GridFunction(gx, K @ vm.alpha))
                return rhs_K(K, vm, E, gx)
        else:
            f = lambda K: rhs_K(K, vm, E0, gx)
    elif kind == "S":
        if selfc:
            def f(S):
                E = solve_field(gx, GridFunction(gx, X @ (S @ vm.alpha)))
                d1 = gx.dx * X.T @ (E.values[:, None] * X)
                return xm.d2 @ S @ vm.c1.T - d1 @ S @ vm.c2.T
        else:
            f = lambda S: rhs_S(S, vm, xm)
    elif kind == "L":
        if selfc:
            vw = gv.moment_weight(1)

            def f(L):
                rho = X @ (gv.dx * L.sum(axis=0))
                E = solve_field(gx, GridFunction(gx, rho))
                d1 = gx.dx * X.T @ (E.values[:, None] * X)
                return spectral_derivative(gv, L) @ d1.T - (vw[:, None] * L) @ xm.d2.T
        else:
            f = lambda L: rhs_L(L, xm, gv)
    else:
        raise ValueError(f"unknown substep kind {kind!r}")
    star = _rk4(f, np.asarray(start, dtype=float), tau, n_sub, kind)
    return SubstepResult(kind=kind, star=star, start=np.asarray(start, dtype=float), E0=E0)


# ---------------------------------------------------------------------------
# full steps

def _field_from(X, S, vm, gx) -> tuple[np.ndarray, ElectricField]:
    rho = X @ (S @ vm.alpha)
    return rho, solve_field(gx, GridFunction(gx, rho))


def advance_sequence(
    state: LowRankState,
    tau: float,
    order: tuple,
    mode: CorrectionMode,
    n_sub: int,
    targets: tuple | None = None,
):
    """Run the given substep sequence once, correcting every substep.

    Returns the new state and the list of per-substep reports. The Lie step
    is the (K, S, L) sequence over tau; the Strang step composes it with its
    adjoint (L, S, K) over tau/2 each.

    `targets` optionally holds the (mass, momentum) values the global rows
    should restore. Anchoring them to the run-initial invariants keeps the
    accumulated drift of the combined least-squares compromise bounded;
    without targets each substep conserves relative to its own start.
    """
    gx, gv = state.gx, state.gv
    X, S, V = state.X, state.S, state.V
    reports = []
    for kind in order:
        vm = compute_v_moments(V, gv)
        rho, E = _field_from(X, S, vm, gx)
        A = np.vstack([vm.alpha, vm.beta])
        if kind == "K":
            kappa = gx.dx * X.sum(axis=0)
            K0 = X @ S
            res = substep_solve("K", K0, tau, n_sub, vm=vm, E0=E, gx=gx, X=X)
            start_qs = cons.mass_mom_K(K0, gx, vm)
            system = CorrectionSystem(
                A=A,
                local_rhs=cons.local_rhs_step1(res.star, K0, X, vm, E, rho, gx, tau),
                global_rows=cons.global_rows(kappa, vm),
                global_rhs=cons.global_rhs(
                    1, cons.mass_mom_K(res.star, gx, vm), targets if targets is not None else start_qs, tau
                ),
                scale=max(1.0, np.sqrt(gx.dx) * np.linalg.norm(K0)),
            )
            lam, deficient = cons.solve_mode(system, mode)
            K1 = _check_finite(cons.apply_correction("K", res.star, X, lam, tau), "K", n_sub)
            reports.append(
                cons.build_report(
                    "K", system, lam, cons.mass_mom_K(K1, gx, vm), start_qs, deficient
                )
            )
            X, S = orthonormalize(K1, gx.dx)
        elif kind == "S":
            xm = compute_x_moments(X, E, gx)
            S0 = S
            res = substep_solve("S", S0, tau, n_sub, vm=vm, xm=xm, E0=E, gx=gx, X=X)
            start_qs = cons.mass_mom_S(S0, xm.kappa, vm)
            system = CorrectionSystem(
                A=A,
                local_rhs=cons.local_rhs_step2(res.star, S0, vm, xm, tau),
                global_rows=cons.global_rows(xm.kappa, vm),
                global_rhs=cons.global_rhs(
                    2, cons.mass_mom_S(res.star, xm.kappa, vm), targets if targets is not None else start_qs, tau
                ),
                scale=max(1.0, np.linalg.norm(S0)),
            )
            lam, deficient = cons.solve_mode(system, mode)
            S = _check_finite(cons.apply_correction("S", res.star, None, lam, tau), "S", n_sub)
            reports.append(
                cons.build_report(
                    "S", system, lam, cons.mass_mom_S(S, xm.kappa, vm), start_qs, deficient
                )
            )
        elif kind == "L":
            xm = compute_x_moments(X, E, gx)
            L0 = V @ S.T
            res = substep_solve("L", L0, tau, n_sub, xm=xm, E0=E, gx=gx, gv=gv, X=X)
            start_qs = cons.mass_mom_L(L0, gv, xm.kappa)
            system = CorrectionSystem(
                A=A,
                local_rhs=cons.local_rhs_step3(res.star, L0, xm, gv, tau),
                global_rows=cons.global_rows(xm.kappa, vm),
                global_rhs=cons.global_rhs(
                    3, cons.mass_mom_L(res.star, gv, xm.kappa), targets if targets is not None else start_qs, tau
                ),
                scale=max(1.0, np.sqrt(gv.dx) * np.linalg.norm(L0)),
            )
            lam, deficient = cons.solve_mode(system, mode)
            L1 = _check_finite(cons.apply_correction("L", res.star, V, lam, tau), "L", n_sub)
            reports.append(
                cons.build_report(
                    "L", system, lam, cons.mass_mom_L(L1, gv, xm.kappa), start_qs, deficient
                )
            )
            V, R = orthonormalize(L1, gv.dx)
            S = R.T
        else:
            raise ValueError(f"unknown substep kind {kind!r}")
    return LowRankState(X=X, S=S, V=V, gx=gx, gv=gv), reports


def lie_step(
    state: LowRankState,
    tau: float,
    mode: CorrectionMode,
    n_sub: int = 2,
    targets: tuple | None = None,
):
    """First-order splitting step: K, S, L over the full tau."""
    new_state, reports = advance_sequence(state, tau, ("K", "S", "L"), mode, n_sub, targets)
    return new_state, StepReport(substeps=reports)


def strang_step(
    state: LowRankState,
    tau: float,
    mode: CorrectionMode,
    n_sub: int = 2,
    targets: tuple | None = None,
):
    """Second-order palindromic step: (K, S, L) then (L, S, K), tau/2 each."""
    half, reports1 = advance_sequence(state, 0.5 * tau, ("K", "S", "L"), mode, n_sub, targets)
    new_state, reports2 = advance_sequence(half, 0.5 * tau, ("L", "S", "K"), mode, n_sub, targets)
    return new_state, StepReport(substeps=reports1 + reports2)
