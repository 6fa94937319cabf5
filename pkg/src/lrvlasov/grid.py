"""Uniform periodic grids, quadrature and Fourier-collocation operators.

Everything downstream (factor bases, fields, moments) lives on these grids.
Arrays with several columns are treated column-wise; the grid axis is 0.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid on [a, b) with periodic identification b == a."""

    a: float
    b: float
    n: int
    dx: float = field(init=False)
    nodes: np.ndarray = field(init=False)
    wavenumbers: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError(f"node count must be positive, got n={self.n}")
        if not self.b > self.a:
            raise ValueError(f"empty domain [{self.a}, {self.b})")
        dx = (self.b - self.a) / self.n
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "nodes", self.a + dx * np.arange(self.n))
        object.__setattr__(
            self, "wavenumbers", 2.0 * np.pi * np.fft.fftfreq(self.n, d=dx)
        )

    @property
    def length(self) -> float:
        return self.b - self.a

    def moment_weight(self, power: int) -> np.ndarray:
        """Node samples of v**power regularized at the periodic seam.

        The periodization of a polynomial jumps at the seam node v = a
        (its one-sided limits are a**p and b**p); the consistent collocation
        value there is the midpoint. For power 0 this is the constant 1.
        """
        w = self.nodes**power
        if power >= 1:
            w = w.astype(float).copy()
            w[0] = 0.5 * (self.a**power + self.b**power)
        return w


@dataclass(frozen=True)
class GridFunction:
    """Real samples of a function at the nodes of a PeriodicGrid."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape[0] != self.grid.n:
            raise ValueError(
                f"sample count {self.values.shape[0]} does not match grid n={self.grid.n}"
            )


def integrate(grid: PeriodicGrid, values: np.ndarray) -> float:
    """Rectangle-rule integral over the periodic domain.

    Spectrally accurate for smooth periodic integrands. For column-stacked
    input, integrates each column and returns a vector.
    """
    values = np.asarray(values)
    if values.shape[0] != grid.n:
        raise ValueError(
            f"sample count {values.shape[0]} does not match grid n={grid.n}"
        )
    return grid.dx * values.sum(axis=0)


def spectral_derivative(grid: PeriodicGrid, values: np.ndarray) -> np.ndarray:
    """Fourier-collocation derivative along axis 0.

    Exact for trigonometric polynomials below the Nyquist frequency; the
    Nyquist mode's derivative coefficient is zeroed, which keeps the operator
    real and antisymmetric.
    """
    values = np.asarray(values)
    if values.shape[0] != grid.n:
        raise ValueError(
            f"sample count {values.shape[0]} does not match grid n={grid.n}"
        )
    spec = np.fft.rfft(values, axis=0)
    k = 2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.dx)
    shape = (-1,) + (1,) * (values.ndim - 1)
    spec *= 1j * k.reshape(shape)
    if grid.n % 2 == 0:
        spec[-1] = 0.0
    return np.fft.irfft(spec, n=grid.n, axis=0)


def fourier_advect(
    grid: PeriodicGrid, values: np.ndarray, speed: float, tau: float
) -> np.ndarray:
    """Exact constant-speed transport: samples of u(. - speed*tau).

    Phase shift in Fourier space; the zero mode is untouched, so the
    rectangle-rule integral is preserved exactly.
    """
    values = np.asarray(values)
    if values.shape[0] != grid.n:
        raise ValueError(
            f"sample count {values.shape[0]} does not match grid n={grid.n}"
        )
    spec = np.fft.rfft(values, axis=0)
    k = 2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.dx)
    shape = (-1,) + (1,) * (values.ndim - 1)
    spec *= np.exp(-1j * k * speed * tau).reshape(shape)
    return np.fft.irfft(spec, n=grid.n, axis=0)


def fourier_mode_table(grid: PeriodicGrid, count: int, odd_first: bool = False) -> np.ndarray:
    """First `count` normalized Fourier modes as columns.

    Natural order is constant, cos, sin, cos2, sin2, ...; with odd_first each
    frequency's sine precedes its cosine and the constant moves after the
    first sine (sin, constant, cos, sin2, cos2, ...), so the second mode is
    odd. Columns have unit dx-weighted norm.
    """
    if count > grid.n:
        raise ValueError(f"cannot build {count} modes on an n={grid.n} grid")
    theta = 2.0 * np.pi * (grid.nodes - grid.a) / grid.length
    const = np.ones(grid.n) / np.sqrt(grid.length)
    scale = np.sqrt(2.0 / grid.length)
    cols = [const]
    for m in range(1, count // 2 + 2):
        c, s = scale * np.cos(m * theta), scale * np.sin(m * theta)
        cols.extend([s, c] if odd_first else [c, s])
    if odd_first:
        cols[0], cols[1] = cols[1], cols[0]
    return np.column_stack(cols[:count])
