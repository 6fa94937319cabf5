"""Mass and momentum corrections for the splitting substeps.

After each substep the uncorrected result (star) is nudged by a rank-
structured correction sum_ij lambda_ij X_i V_j, expressed per substep as

    K1_j = K*_j + tau * sum_k lambda_kj X_k      (K substep)
    S1_ij = S*_ij - tau * lambda_ij              (S substep)
    L1_i = L*_i + tau * sum_l lambda_il V_l      (L substep)

lambda is chosen to cancel the discrete projected continuity and momentum
defects (local laws, one decoupled 2 x r system per row of lambda), the
global mass and momentum drift (two rows over all r^2 unknowns), or a
weighted least-squares compromise of both. The S substep runs the transport
backward, which flips the sign of its difference-quotient terms and of its
global rows relative to the K and L substeps.

The flux terms in the local right-hand sides are evaluated at the substep
output (FLUX_THETA = 1). Freezing them at the substep start turns the
enforced moment update into a forward-Euler step, which is anti-dissipative
on the advective waves and blows up once the basis carries high-frequency
content (around t = 2 on the 128^2 two-stream run at tau = 0.025); the
time-symmetric midpoint variant survives longer but still pumps slowly in
the filamented regime (blow-up near t = 238 at rank 15). The backward-
flavored output form damps the enforcement feedback and is stable through
the t = 300 benchmark at both ranks.
"""

from dataclasses import dataclass

import numpy as np

from .grid import PeriodicGrid, integrate, spectral_derivative
from .moments import VMoments, XMoments
from .poisson import ElectricField

# singular values below PINV_RTOL * sigma_max are treated as zero
PINV_RTOL = 1e-12

# where the flux terms of the local right-hand sides are evaluated:
# 0.5 = substep midpoint (time-symmetric), 1.0 = substep output (damps the
# enforcement feedback), 0.0 = substep start (unstable, see module docstring)
FLUX_THETA = 1.0


def _flux_state(start: np.ndarray, star: np.ndarray) -> np.ndarray:
    return (1.0 - FLUX_THETA) * start + FLUX_THETA * star


@dataclass(frozen=True)
class CorrectionMode:
    """Which conservation strategy to apply."""

    kind: str  # "none" | "local" | "global" | "combined"
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in ("none", "local", "global", "combined"):
            raise ValueError(f"unknown correction mode {self.kind!r}")
        if self.kind == "combined" and self.weight < 0:
            raise ValueError(f"combined weight must be nonnegative, got {self.weight}")


NONE = CorrectionMode("none")
LOCAL = CorrectionMode("local")
GLOBAL = CorrectionMode("global")


def combined(weight: float = 1.0) -> CorrectionMode:
    return CorrectionMode("combined", weight)


@dataclass(frozen=True)
class CorrectionSystem:
    """Constraint rows for one substep's correction solve.

    A is the (1+d) x r matrix [alpha; beta]; local_rhs stacks the per-row
    right-hand sides (b_i, d_i) as columns; global_rows couple all r^2
    unknowns (lambda flattened row-major).
    """

    A: np.ndarray           # (2, r)
    local_rhs: np.ndarray   # (2, r), column i = (b_i, d_i)
    global_rows: np.ndarray # (2, r*r)
    global_rhs: np.ndarray  # (2,)
    scale: float            # size of the substep's initial unknowns, >= 1


@dataclass(frozen=True)
class SubstepReport:
    """Correction bookkeeping for one substep."""

    kind: str
    corr_norm: float
    local_resid: float
    mass_resid: float
    mom_resid: float
    rank_deficient: bool = False


# ---------------------------------------------------------------------------
# local right-hand sides (b_i, d_i)

def local_rhs_step1(
    K_star: np.ndarray,
    K0: np.ndarray,
    X0: np.ndarray,
    vm: VMoments,
    E0: ElectricField,
    rho0: np.ndarray,
    gx: PeriodicGrid,
    tau: float,
) -> np.ndarray:
    """Projected continuity/momentum defect rates of the K substep.

    rho0 is kept in the signature for the field solve pairing but the force
    term uses the flux-state density, consistent with the other flux terms.
    """
    dx = gx.dx
    K_flux = _flux_state(K0, K_star)
    P = dx * X0.T @ ((K_star - K0) / tau)      # <X_i, (K*_j - K0_j)/tau>
    Q = dx * X0.T @ spectral_derivative(gx, K_flux)
    rho_flux = K_flux @ vm.alpha
    b = -P @ vm.alpha - Q @ vm.beta
    d = -P @ vm.beta - Q @ vm.gamma - dx * X0.T @ (E0.values * rho_flux)
    return np.vstack([b, d])


def local_rhs_step2(
    S_star: np.ndarray,
    S0: np.ndarray,
    vm: VMoments,
    xm: XMoments,
    tau: float,
) -> np.ndarray:
    """Projected defect rates of the backward S substep."""
    S_flux = _flux_state(S0, S_star)
    dS = (S_star - S0) / tau
    b = dS @ vm.alpha - xm.d2 @ S_flux @ vm.beta
    d = dS @ vm.beta - xm.d2 @ S_flux @ vm.gamma - xm.d1 @ S_flux @ vm.alpha
    return np.vstack([b, d])


def local_rhs_step3(
    L_star: np.ndarray,
    L0: np.ndarray,
    xm: XMoments,
    gv: PeriodicGrid,
    tau: float,
) -> np.ndarray:
    """Projected defect rates of the L substep.

    The continuity part vanishes for the exact substep flow; discretely it is
    of the order of the substep integration error plus an O(tau) remainder
    from the flux-state time quadrature.
    """
    dv = gv.dx
    vw = gv.moment_weight(1)
    v2w = gv.moment_weight(2)
    L_flux = _flux_state(L0, L_star)
    dm = dv * (L_star - L0).sum(axis=0) / tau
    dp = dv * vw @ (L_star - L0) / tau
    b = -dm - xm.d2 @ (dv * vw @ L_flux)
    d = -dp - xm.d2 @ (dv * v2w @ L_flux) - xm.d1 @ (dv * L_flux.sum(axis=0))
    return np.vstack([b, d])


# ---------------------------------------------------------------------------
# global rows and right-hand sides

def global_rows(kappa: np.ndarray, vm: VMoments) -> np.ndarray:
    """Mass and momentum rows over the flattened lambda (row-major)."""
    return np.vstack([np.kron(kappa, vm.alpha), np.kron(kappa, vm.beta)])


def mass_mom_K(K: np.ndarray, gx: PeriodicGrid, vm: VMoments):
    colint = integrate(gx, K)
    return float(colint @ vm.alpha), float(colint @ vm.beta)


def mass_mom_S(S: np.ndarray, kappa: np.ndarray, vm: VMoments):
    return float(kappa @ S @ vm.alpha), float(kappa @ S @ vm.beta)


def mass_mom_L(L: np.ndarray, gv: PeriodicGrid, kappa: np.ndarray):
    dv = gv.dx
    return (
        float(kappa @ (dv * L.sum(axis=0))),
        float(kappa @ (dv * gv.moment_weight(1) @ L)),
    )


def global_rhs(step: int, star_qs, start_qs, tau: float) -> np.ndarray:
    """Defect rates the global rows must cancel.

    star_qs/start_qs are (mass, momentum) of the substep output and input.
    The backward S substep (step 2) carries the opposite sign.
    """
    if step not in (1, 2, 3):
        raise ValueError(f"step must be 1, 2 or 3, got {step}")
    sign = 1.0 if step == 2 else -1.0
    return sign * (np.asarray(star_qs) - np.asarray(start_qs)) / tau


# ---------------------------------------------------------------------------
# solvers

def _min_norm_lstsq(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=PINV_RTOL)
    return sol


def solve_local(A: np.ndarray, rhs: np.ndarray):
    """Minimal-norm solution of A lambda_i = rhs_i for every row i of lambda.

    rhs holds the per-row right-hand sides as columns. Returns (lambda,
    rank_deficient); a row-rank-deficient A degrades to least squares.
    """
    sing = np.linalg.svd(A, compute_uv=False)
    deficient = bool(sing[-1] <= PINV_RTOL * sing[0])
    lam = (np.linalg.pinv(A, rcond=PINV_RTOL) @ rhs).T
    return lam, deficient


def solve_global(rows: np.ndarray, rhs: np.ndarray):
    """Minimal-norm solution of the (1+d)-row global system."""
    r2 = rows.shape[1]
    r = int(round(np.sqrt(r2)))
    sing = np.linalg.svd(rows, compute_uv=False)
    deficient = bool(sing[0] == 0.0 or sing[-1] <= PINV_RTOL * sing[0])
    lam = _min_norm_lstsq(rows, rhs).reshape(r, r)
    return lam, deficient


def solve_combined(
    A: np.ndarray,
    local_rhs: np.ndarray,
    rows: np.ndarray,
    global_rhs: np.ndarray,
    weight: float,
):
    """Weighted least-squares compromise of local and global constraints.

    The (1+d) r local rows are scaled by `weight`, the global rows by one;
    weight zero drops the local block entirely and reproduces the global
    solve exactly.
    """
    if weight < 0:
        raise ValueError(f"weight must be nonnegative, got {weight}")
    if weight == 0.0:
        return solve_global(rows, global_rhs)
    r = A.shape[1]
    local_block = np.vstack([np.kron(np.eye(r), A[0]), np.kron(np.eye(r), A[1])])
    M = np.vstack([weight * local_block, rows])
    rhs = np.concatenate([
        weight * local_rhs[0], weight * local_rhs[1], global_rhs,
    ])
    lam = _min_norm_lstsq(M, rhs).reshape(r, r)
    return lam, False


def apply_correction(kind: str, star: np.ndarray, basis: np.ndarray, lam: np.ndarray, tau: float) -> np.ndarray:
    """Add the solved correction to the substep output."""
    if kind == "K":
        return star + tau * basis @ lam
    if kind == "S":
        return star - tau * lam
    if kind == "L":
        return star + tau * basis @ lam.T
    raise ValueError(f"unknown substep kind {kind!r}")


def solve_mode(system: CorrectionSystem, mode: CorrectionMode):
    """Dispatch the correction solve; mode 'none' returns zero lambda."""
    r = system.A.shape[1]
    if mode.kind == "none":
        return np.zeros((r, r)), False
    if mode.kind == "local":
        return solve_local(system.A, system.local_rhs)
    if mode.kind == "global":
        return solve_global(system.global_rows, system.global_rhs)
    return solve_combined(
        system.A, system.local_rhs, system.global_rows, system.global_rhs, mode.weight
    )


def build_report(
    kind: str,
    system: CorrectionSystem,
    lam: np.ndarray,
    corrected_qs,
    start_qs,
    deficient: bool,
) -> SubstepReport:
    """Residuals of the solved correction, in scale-normalized form.

    local_resid is the remaining defect of the per-row systems at the applied
    lambda; mass/mom_resid are the per-substep drifts of the corrected output
    relative to max(1, |quantity at substep start|).
    """
    local = np.linalg.norm(system.A @ lam.T - system.local_rhs) / system.scale
    mass0, mom0 = start_qs
    mass1, mom1 = corrected_qs
    return SubstepReport(
        kind=kind,
        corr_norm=float(np.linalg.norm(lam)),
        local_resid=float(local),
        mass_resid=abs(mass1 - mass0) / max(1.0, abs(mass0)),
        mom_resid=abs(mom1 - mom0) / max(1.0, abs(mom0)),
        rank_deficient=deficient,
    )
