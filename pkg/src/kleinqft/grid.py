"""Atomic units, the periodic spatial grid, and spectral transforms.

Transform convention (fixed here once, relied on everywhere else):

    to_momentum(f)[k] = (dx / sqrt(box_length)) * sum_j f(x_j) exp(-i p_k x_j / hbar)
    to_position(g)[j] = (1 / sqrt(box_length)) * sum_k g[k]  exp(+i p_k x_j / hbar)

so a box-normalized plane wave exp(i p_k x)/sqrt(box_length) maps to a unit
Kronecker delta at bin k, and Parseval reads

    sum_j |f(x_j)|^2 dx = sum_k |g[k]|^2        (dp weight absorbed, factor 1/dp)

Momentum bins are kept in FFT order; the degenerate Nyquist bin is assigned to
the positive side of the lattice.  Since x_j = -box/2 + j dx, the offset shows
up as an exact (-1)^k phase per bin relative to a plain FFT.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NYQUIST_MARGIN = 0.8  # scenarios must keep their declared p_max below this fraction of Nyquist


@dataclass(frozen=True)
class Units:
    """Atomic-style unit system. Fermion runs use hbar = m = 1, c = 137.036.

    Boson runs use boson-mass renormalized units, numerically identical with
    m = 1; the active convention is recorded in the run manifest.
    """

    hbar: float = 1.0
    m: float = 1.0
    c: float = 137.036

    def __post_init__(self):
        if self.hbar != 1.0:
            raise ValueError("unit system is defined with hbar = 1")
        if self.m <= 0 or self.c <= 0:
            raise ValueError("mass and speed of light must be positive")

    @property
    def mc2(self) -> float:
        # rest energy, always derived, never stored
        return self.m * self.c * self.c

    def is_fermion_atomic(self) -> bool:
        return self.m == 1.0 and self.c == 137.036


class Grid1D:
    """Periodic spatial lattice with its conjugate momentum lattice.

    n_points must be a power of two.  x runs over [-box/2, box/2) with spacing
    dx; the momentum lattice is 2*pi*hbar*k/box for integer k in
    [-n/2, n/2), stored in FFT bin order with the Nyquist bin flipped to +pi*hbar/dx.
    """

    def __init__(self, n_points: int, box_length: float, units: Units = Units()):
        if n_points < 4 or (n_points & (n_points - 1)) != 0:
            raise ValueError(f"n_points must be a power of two >= 4, got {n_points}")
        if box_length <= 0:
            raise ValueError("box_length must be positive")
        self.n = int(n_points)
        self.box_length = float(box_length)
        self.units = units
        self.dx = self.box_length / self.n
        self.dp = 2.0 * np.pi * units.hbar / self.box_length
        self.x = -self.box_length / 2 + self.dx * np.arange(self.n)
        k = np.rint(np.fft.fftfreq(self.n) * self.n).astype(np.int64)
        k[self.n // 2] = self.n // 2  # Nyquist bin on the positive side
        self._k = k
        self.p = self.dp * k
        # first-derivative lattice: odd spectral derivatives carry no Nyquist
        # component (the symmetric convention); even powers of p keep it.
        # This is what makes the discretized Dirac evolution exactly parity-even.
        self.p_derivative = self.p.copy()
        self.p_derivative[self.n // 2] = 0.0
        # exact (-1)^k phase from the -box/2 grid offset
        self._offset_sign = np.where(k % 2 == 0, 1.0, -1.0)
        self._fwd_scale = self.dx / np.sqrt(self.box_length)
        self._inv_scale = np.sqrt(self.box_length) / self.dx

    @property
    def nyquist(self) -> float:
        return np.pi * self.units.hbar / self.dx

    @property
    def p_sorted_order(self) -> np.ndarray:
        """Index array reordering FFT-bin arrays by ascending momentum."""
        return np.argsort(self.p, kind="stable")

    def mirror_index(self) -> np.ndarray:
        """Bin map p -> -p (Nyquist and zero map to themselves)."""
        return (-np.arange(self.n)) % self.n

    def assert_momentum_margin(self, p_max: float) -> None:
        """Scenarios declare their required p_max; reject if too close to Nyquist."""
        if p_max >= NYQUIST_MARGIN * self.nyquist:
            raise ValueError(
                f"required p_max {p_max:g} exceeds {NYQUIST_MARGIN:g} * Nyquist "
                f"({NYQUIST_MARGIN * self.nyquist:g}); refine the grid"
            )

    def to_momentum(self, values: np.ndarray) -> np.ndarray:
        """Spectral transform along the last axis, unitary in the documented sense."""
        if values.shape[-1] != self.n:
            raise ValueError(f"field length {values.shape[-1]} does not match grid n={self.n}")
        return np.fft.fft(values, axis=-1) * (self._offset_sign * self._fwd_scale)

    def to_position(self, values: np.ndarray) -> np.ndarray:
        if values.shape[-1] != self.n:
            raise ValueError(f"field length {values.shape[-1]} does not match grid n={self.n}")
        return np.fft.ifft(values * (self._offset_sign * self._inv_scale), axis=-1)

    def __eq__(self, other):
        return (
            isinstance(other, Grid1D)
            and self.n == other.n
            and self.box_length == other.box_length
            and self.units == other.units
        )

    def __repr__(self):
        return f"Grid1D(n_points={self.n}, box_length={self.box_length!r})"


def integrate(grid: Grid1D, density: np.ndarray) -> float:
    """Riemann sum over the box, exact for periodic band-limited integrands."""
    density = np.asarray(density)
    if density.shape[-1] != grid.n:
        raise ValueError("density does not live on this grid")
    if not np.all(np.isfinite(density)):
        raise ValueError("density contains non-finite values")
    return float(np.real(np.sum(density, axis=-1)) * grid.dx)
