"""Periodic 1-d Poisson solve for the self-consistent electric field."""

from dataclasses import dataclass

import numpy as np

from .grid import PeriodicGrid, GridFunction, integrate


@dataclass(frozen=True)
class ElectricField:
    """Zero-mean electric field samples on the x-grid."""

    grid: PeriodicGrid
    values: np.ndarray


def solve_field(gx: PeriodicGrid, rho: GridFunction) -> ElectricField:
    """Solve dE/dx = 1 - rho with the zero-mean gauge.

    Inverted in Fourier space; the mean of (1 - rho) is forcibly zeroed
    before inversion so uncorrected runs with slight mass drift still get a
    well-posed field. The Nyquist bin is dropped along with the mean.
    """
    src = 1.0 - rho.values
    spec = np.fft.rfft(src)
    k = 2.0 * np.pi * np.fft.rfftfreq(gx.n, d=gx.dx)
    spec[0] = 0.0
    spec[1:] /= 1j * k[1:]
    if gx.n % 2 == 0:
        spec[-1] = 0.0
    return ElectricField(gx, np.fft.irfft(spec, n=gx.n))


def electric_energy(E: ElectricField) -> float:
    """One half the integral of E^2 over the x-domain."""
    return 0.5 * integrate(E.grid, E.values**2)
