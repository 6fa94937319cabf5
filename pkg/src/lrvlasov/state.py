"""Rank-r factored representation f = X S V^T and its construction.

X columns are orthonormal in the dx-weighted inner product on the x-grid,
V columns in the dv-weighted product on the v-grid. States are value
objects; stepping produces new states instead of mutating.
"""

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .grid import PeriodicGrid, GridFunction, fourier_mode_table

# relative singular-value threshold below which a direction counts as absent
RANK_RTOL = 1e-12
# Gram-Schmidt residual threshold below which a fill candidate is skipped
FILL_RTOL = 1e-8


@dataclass(frozen=True)
class Scenario:
    """Two-beam perturbation parameters and phase-space domain."""

    alpha_pert: float = 1e-3
    k: float = 0.2
    v0: float = 2.4
    x_min: float = 0.0
    x_max: float = 10.0 * np.pi
    v_min: float = -9.0
    v_max: float = 9.0

    def __post_init__(self):
        if self.alpha_pert <= 0:
            raise ValueError(f"alpha_pert must be positive, got {self.alpha_pert}")
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")

    def f0(self, x, v):
        """Initial distribution: counter-streaming Maxwellian beams with a
        cosine density perturbation. Broadcasts over x and v."""
        beams = np.exp(-0.5 * (v - self.v0) ** 2) + np.exp(-0.5 * (v + self.v0) ** 2)
        return beams / (2.0 * np.sqrt(2.0 * np.pi)) * (1.0 + self.alpha_pert * np.cos(self.k * x))


@dataclass(frozen=True)
class LowRankState:
    """Factors (X, S, V) of the rank-r representation of f."""

    X: np.ndarray
    S: np.ndarray
    V: np.ndarray
    gx: PeriodicGrid
    gv: PeriodicGrid

    @property
    def r(self) -> int:
        return self.S.shape[0]

    def orthonormality_defect(self) -> float:
        """Max-norm departure of dx*X'X and dv*V'V from the identity."""
        ex = self.gx.dx * self.X.T @ self.X - np.eye(self.r)
        ev = self.gv.dx * self.V.T @ self.V - np.eye(self.r)
        return max(np.abs(ex).max(), np.abs(ev).max())


def orthonormalize(columns: np.ndarray, weight: float):
    """QR factorization in the weight-scaled inner product.

    Returns (Q, R) with columns = Q R, weight * Q'Q = I and R upper
    triangular with nonnegative diagonal. A column counts as numerically
    dependent when its projection residual |R_jj| is at roundoff scale
    relative to the column's own norm; such directions are replaced by
    deterministic Fourier fill modes, the matching R rows are zeroed and a
    warning is emitted. Columns that are merely tiny stay untouched.
    """
    columns = np.asarray(columns, dtype=float)
    n, r = columns.shape
    scaled = np.sqrt(weight) * columns
    col_norms = np.linalg.norm(scaled, axis=0)
    if not np.isfinite(col_norms).all():
        raise ValueError("non-finite column norms in weighted QR")
    q, rmat = np.linalg.qr(scaled, mode="reduced")
    signs = np.sign(np.diag(rmat))
    signs[signs == 0] = 1.0
    q = q * signs
    rmat = signs[:, None] * rmat

    qr_rtol = 16.0 * max(n, r) * np.finfo(float).eps
    deficient = np.abs(np.diag(rmat)) <= qr_rtol * col_norms
    if deficient.any():
        warnings.warn(
            f"rank-deficient QR input: filling {int(deficient.sum())} of {r} directions",
            stacklevel=2,
        )
        slots = np.flatnonzero(deficient)
        kept = q[:, ~deficient]
        fills = _fill_directions(kept, len(slots), odd_first=False)
        for j, c in zip(slots, fills.T):
            q[:, j] = c
            rmat[j, :] = 0.0
    return q / np.sqrt(weight), rmat


def _fill_directions(Q: np.ndarray, need: int, odd_first: bool) -> np.ndarray:
    """`need` orthonormal columns extending the Euclidean-orthonormal Q.

    Scans the Fourier mode table in order, skipping candidates numerically
    inside the current span; if the table runs out, the remaining directions
    come from the SVD orthogonal complement (still deterministic).
    """
    n = Q.shape[0]
    unit_grid = PeriodicGrid(0.0, float(n), n)
    candidates = fourier_mode_table(unit_grid, n, odd_first=odd_first)
    qcur = Q
    added = []
    ci = 0
    while len(added) < need:
        if ci >= candidates.shape[1]:
            u = np.linalg.svd(qcur, full_matrices=True)[0]
            comp = u[:, qcur.shape[1]:]
            added.extend(comp[:, : need - len(added)].T)
            break
        c = candidates[:, ci]
        ci += 1
        for _ in range(2):
            c = c - qcur @ (qcur.T @ c)
        nrm = np.linalg.norm(c)
        if nrm > FILL_RTOL:
            c = c / nrm
            qcur = np.hstack([qcur, c[:, None]])
            added.append(c)
    return np.column_stack(added)


def _pad_basis(Q: np.ndarray, grid: PeriodicGrid, r: int, odd_first: bool) -> np.ndarray:
    """Extend orthonormal columns Q to r columns with Fourier fill modes."""
    have = Q.shape[1]
    if have >= r:
        return Q[:, :r]
    qs = np.sqrt(grid.dx) * Q
    fills = _fill_directions(qs, r - have, odd_first=odd_first)
    return np.hstack([qs, fills]) / np.sqrt(grid.dx)


def initialize_from_function(f0, gx: PeriodicGrid, gv: PeriodicGrid, r: int) -> LowRankState:
    """Best rank-r state for the sampled initial condition.

    Samples f0 on the tensor grid, truncates its weighted SVD to the r
    leading triplets and, when the sampled function has numerical rank q < r,
    pads the remaining basis directions with deterministic Fourier modes
    (odd mode first on the velocity side) carrying zero coefficients.
    """
    if not 1 <= r <= min(gx.n, gv.n):
        raise ValueError(f"rank r={r} outside [1, {min(gx.n, gv.n)}]")
    samples = np.asarray(f0(gx.nodes[:, None], gv.nodes[None, :]), dtype=float)
    if samples.shape != (gx.n, gv.n):
        raise ValueError(
            f"sampler returned shape {samples.shape}, expected {(gx.n, gv.n)}"
        )
    if not np.isfinite(samples).all():
        raise ValueError("initial condition produced non-finite samples")

    u, sing, wt = np.linalg.svd(samples, full_matrices=False)
    q = int(np.count_nonzero(sing > RANK_RTOL * sing[0])) if sing[0] > 0 else 0
    keep = min(q, r)

    X = _pad_basis(u[:, :keep] / np.sqrt(gx.dx), gx, r, odd_first=False)
    V = _pad_basis(wt[:keep].T / np.sqrt(gv.dx), gv, r, odd_first=True)
    S = np.zeros((r, r))
    S[:keep, :keep] = np.diag(sing[:keep] * np.sqrt(gx.dx * gv.dx))
    return LowRankState(X=X, S=S, V=V, gx=gx, gv=gv)


def density(state: LowRankState, alpha: np.ndarray) -> GridFunction:
    """Charge density rho(x) = sum_ij X_i S_ij alpha_j for alpha_j = int V_j dv."""
    alpha = np.asarray(alpha)
    if alpha.shape != (state.r,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({state.r},)")
    return GridFunction(state.gx, state.X @ (state.S @ alpha))


def evaluate_full(state: LowRankState) -> np.ndarray:
    """Dense n_x x n_v samples X S V^T (tests and snapshot output)."""
    return state.X @ state.S @ state.V.T


def write_snapshot(path, values: np.ndarray) -> None:
    """Dump a dense phase-space array: two little-endian uint64 (n_x, n_v)
    followed by float64 samples in x-major order."""
    values = np.ascontiguousarray(values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", values.shape[0], values.shape[1]))
        fh.write(values.tobytes(order="C"))


def read_snapshot(path) -> np.ndarray:
    with open(path, "rb") as fh:
        n_x, n_v = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n_x * n_v:
        raise ValueError(f"snapshot payload has {data.size} values, expected {n_x * n_v}")
    return data.reshape(n_x, n_v)
