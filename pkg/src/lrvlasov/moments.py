"""Velocity- and space-side moments coupling the factor evolution equations.

The polynomial velocity weights (beta, gamma, and the low-order moments of
L columns) use the seam-regularized node values of v and v^2, so that the
discrete moments reproduce the analytic ones on the periodic domain. The
coupling coefficients c1, c2 keep the literal node values of v because they
define the advection dynamics.
"""

from dataclasses import dataclass

import numpy as np

from .grid import PeriodicGrid, GridFunction, spectral_derivative


@dataclass(frozen=True)
class VMoments:
    """Moments of the velocity basis V (columns orthonormal w.r.t. dv).

    alpha[j] = int V_j dv          beta[j]  = int v V_j dv
    gamma[j] = int v^2 V_j dv      c1[j,l]  = int v V_j V_l dv (symmetric)
    c2[j,l]  = int V_j dV_l/dv dv  (antisymmetric)
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    c1: np.ndarray
    c2: np.ndarray


@dataclass(frozen=True)
class XMoments:
    """Moments of the space basis X and the frozen field E.

    kappa[i] = int X_i dx          d1[i,k] = int X_i E X_k dx (symmetric)
    d2[i,k]  = int X_i dX_k/dx dx  (antisymmetric)
    """

    kappa: np.ndarray
    d1: np.ndarray
    d2: np.ndarray


def compute_v_moments(V: np.ndarray, gv: PeriodicGrid) -> VMoments:
    dv = gv.dx
    vw = gv.moment_weight(1)
    v2w = gv.moment_weight(2)
    dV = spectral_derivative(gv, V)
    return VMoments(
        alpha=dv * V.sum(axis=0),
        beta=dv * vw @ V,
        gamma=dv * v2w @ V,
        c1=dv * V.T @ (vw[:, None] * V),
        c2=dv * V.T @ dV,
    )


def compute_x_moments(X: np.ndarray, E: GridFunction, gx: PeriodicGrid) -> XMoments:
    dx = gx.dx
    dX = spectral_derivative(gx, X)
    return XMoments(
        kappa=dx * X.sum(axis=0),
        d1=dx * X.T @ (E.values[:, None] * X),
        d2=dx * X.T @ dX,
    )
