"""Free-particle plane-wave mode bases for the Dirac and Feshbach-Villars
Klein-Gordon Hamiltonians in one spatial dimension.

The 2x2 momentum-space Hamiltonians are

    fermion:  h(p) = c p sigma_1 + m c^2 sigma_3
    boson:    h(p) = (tau_3 + i tau_2) p^2 / 2m + tau_3 m c^2

Both satisfy h(p)^2 = E_p^2 * I with E_p = sqrt(p^2 c^2 + m^2 c^4), which is
what makes the exact kinetic exponential in the propagator possible.

Inner products: fermions use the plain spinor product; bosons use the
indefinite tau_3 product <f|tau_3|g>.  Mode normalization is box
normalization (a factor 1/sqrt(box_length) on every plane wave), with the
negative Klein-Gordon branch fixed to pseudo-norm <mode|tau_3|mode> = -1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .grid import Grid1D, Units


class ParticleKind(enum.Enum):
    FERMION = "fermion"
    BOSON = "boson"


TAU3 = np.diag([1.0, -1.0])


def energy(p, units: Units = Units()):
    """Relativistic free energy sqrt(p^2 c^2 + m^2 c^4); accepts scalars or arrays."""
    p = np.asarray(p, dtype=float)
    e = np.sqrt(p * p * units.c**2 + units.mc2**2)
    return float(e) if e.ndim == 0 else e


def hamiltonian_matrix(p: float, kind: ParticleKind, units: Units = Units()) -> np.ndarray:
    """The free 2x2 momentum-space Hamiltonian h(p)."""
    mc2 = units.mc2
    if kind is ParticleKind.FERMION:
        cp = units.c * p
        return np.array([[mc2, cp], [cp, -mc2]], dtype=complex)
    a = p * p / (2.0 * units.m)
    return np.array([[mc2 + a, a], [-a, -(mc2 + a)]], dtype=complex)


def grid_h_entries(grid: Grid1D, kind: ParticleKind):
    """Entries of the discretized h(p) over the momentum lattice, as four real
    arrays.  The Dirac derivative term uses the odd-derivative lattice (zero
    at the Nyquist bin), so the discrete free Hamiltonian is exactly even
    under parity; the Klein-Gordon kinetic term is even in p and unaffected.
    """
    units = grid.units
    mc2 = units.mc2
    if kind is ParticleKind.FERMION:
        cp = units.c * grid.p_derivative
        return mc2 + 0 * cp, cp, cp, -mc2 + 0 * cp
    a = grid.p * grid.p / (2.0 * units.m)
    return mc2 + a, a, -a, -(mc2 + a)


def grid_energies(grid: Grid1D, kind: ParticleKind) -> np.ndarray:
    """Eigenvalue magnitudes of the discretized h per bin; equal to the
    continuum dispersion except at the fermion Nyquist bin (rest energy)."""
    p = grid.p_derivative if kind is ParticleKind.FERMION else grid.p
    return energy(p, grid.units)


@dataclass
class TwoComponentField:
    """A complex 2-spinor (fermion) or 2-component Feshbach-Villars field
    sampled on the grid, in either position or momentum representation."""

    values: np.ndarray  # shape (2, n)
    kind: ParticleKind
    grid: Grid1D
    representation: str = "position"  # "position" | "momentum"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (2, self.grid.n):
            raise ValueError(f"field shape {self.values.shape} does not match grid (2, {self.grid.n})")
        if self.representation not in ("position", "momentum"):
            raise ValueError(f"unknown representation {self.representation!r}")

    def to_momentum(self) -> "TwoComponentField":
        if self.representation == "momentum":
            return self
        return TwoComponentField(self.grid.to_momentum(self.values), self.kind, self.grid, "momentum")

    def to_position(self) -> "TwoComponentField":
        if self.representation == "position":
            return self
        return TwoComponentField(self.grid.to_position(self.values), self.kind, self.grid, "position")

    def inner(self, other: "TwoComponentField") -> complex:
        """Kind-appropriate inner product <self|other> (tau_3-weighted for bosons)."""
        if self.kind is not other.kind or self.grid != other.grid:
            raise ValueError("fields must share grid and kind")
        a = self.to_position().values
        b = other.to_position().values
        if self.kind is ParticleKind.FERMION:
            return complex(np.sum(a.conj() * b) * self.grid.dx)
        return complex((np.sum(a[0].conj() * b[0]) - np.sum(a[1].conj() * b[1])) * self.grid.dx)

    def norm_value(self) -> float:
        """<f|f>; for bosons this is the pseudo-norm and may be negative."""
        return self.inner(self).real

    def density(self) -> np.ndarray:
        """Pointwise density: |f1|^2 + |f2|^2 (fermion) or the tau_3 charge
        density |f1|^2 - |f2|^2 (boson, sign-indefinite)."""
        a = self.to_position().values
        if self.kind is ParticleKind.FERMION:
            return (np.abs(a[0]) ** 2 + np.abs(a[1]) ** 2).real
        return (np.abs(a[0]) ** 2 - np.abs(a[1]) ** 2).real


class ModeBasis:
    """All positive/negative-energy plane-wave eigenmodes over the momentum lattice.

    Spinor directions per bin (unnormalized):

        fermion:  u_p = (E + mc^2, c p),        v_p = (-c p, E + mc^2)
        boson:    u_p = (mc^2 + E, mc^2 - E),   v_p = (mc^2 - E, mc^2 + E)

    normalized to <u|u> = 1, <v|v> = 1 (fermion) and <u|tau_3|u> = +1,
    <v|tau_3|v> = -1 (boson).  Mode fields are materialized on demand; the
    spinor tables are what the batched kernels consume.
    """

    def __init__(self, grid: Grid1D, kind: ParticleKind):
        self.grid = grid
        self.kind = kind
        units = grid.units
        self.energies = grid_energies(grid, kind)
        E, mc2 = self.energies, units.mc2
        if kind is ParticleKind.FERMION:
            cp = units.c * grid.p_derivative
            nrm = 1.0 / np.sqrt(2.0 * E * (E + mc2))
            self.u = np.stack([(E + mc2) * nrm, cp * nrm]).astype(complex)
            self.v = np.stack([-cp * nrm, (E + mc2) * nrm]).astype(complex)
        else:
            nrm = 1.0 / (2.0 * np.sqrt(mc2 * E))
            self.u = np.stack([(mc2 + E) * nrm, (mc2 - E) * nrm]).astype(complex)
            self.v = np.stack([(mc2 - E) * nrm, (mc2 + E) * nrm]).astype(complex)
        # duals for coefficient extraction, fixed so that f = sum c+ u + sum c- v
        # for both kinds: fermion duals are the spinors themselves; boson duals
        # are tau_3 u and -tau_3 v (the negative-branch sign of the indefinite
        # metric is absorbed here, in one place)
        if kind is ParticleKind.FERMION:
            self.u_dual = self.u.copy()
            self.v_dual = self.v.copy()
        else:
            self.u_dual = self.u * np.array([[1.0], [-1.0]])
            self.v_dual = self.v * np.array([[-1.0], [1.0]])

    def mode_field(self, sign: str, bin_index: int) -> TwoComponentField:
        """Materialize the basis mode of the given energy sign at a momentum bin."""
        spinor = (self.u if sign == "+" else self.v)[:, bin_index]
        pw = np.exp(1j * self.grid.p[bin_index] * self.grid.x) / np.sqrt(self.grid.box_length)
        return TwoComponentField(spinor[:, None] * pw[None, :], self.kind, self.grid, "position")

    def coefficients(self, fields_momentum: np.ndarray, sign: str) -> np.ndarray:
        """Expansion coefficients of momentum-rep fields (..., 2, n) onto the
        chosen branch, one coefficient per bin, such that

            f = sum_k c+[k] u_k + sum_k c-[k] v_k

        holds for both kinds.  Fermion coefficients are plain inner products;
        boson coefficients are tau_3 inner products with the negative-branch
        sign absorbed (c- = -<v|tau_3|f>), so the amplitude blocks are the
        identity at t = 0 for both kinds.
        """
        dual = self.u_dual if sign == "+" else self.v_dual
        return np.einsum("sk,...sk->...k", dual.conj(), fields_momentum)

    def projector_entries(self, sign: str) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Per-bin entries of the spectral projector (I +/- h(p)/E_p)/2."""
        h11, h12, h21, h22 = grid_h_entries(self.grid, self.kind)
        s = 1.0 if sign == "+" else -1.0
        E = self.energies
        return (0.5 * (1.0 + s * h11 / E), 0.5 * s * h12 / E,
                0.5 * s * h21 / E, 0.5 * (1.0 + s * h22 / E))

    def project_momentum(self, fields_momentum: np.ndarray, sign: str) -> np.ndarray:
        """Apply the energy-sign projector bin by bin to (..., 2, n) momentum-rep data."""
        p11, p12, p21, p22 = self.projector_entries(sign)
        f0 = fields_momentum[..., 0, :]
        f1 = fields_momentum[..., 1, :]
        out = np.empty_like(fields_momentum)
        out[..., 0, :] = p11 * f0 + p12 * f1
        out[..., 1, :] = p21 * f0 + p22 * f1
        return out


def build_basis(grid: Grid1D, kind: ParticleKind) -> ModeBasis:
    return ModeBasis(grid, kind)


def project(field: TwoComponentField, basis: ModeBasis, sign: str) -> TwoComponentField:
    """Projection onto the positive or negative energy subspace.

    Idempotent; project("+") + project("-") is the identity (in the tau_3
    sense for bosons).
    """
    if field.kind is not basis.kind or field.grid != basis.grid:
        raise ValueError("field and basis must share grid and kind")
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    rep = field.representation
    fm = field.to_momentum()
    out = basis.project_momentum(fm.values, sign)
    result = TwoComponentField(out, field.kind, field.grid, "momentum")
    return result.to_position() if rep == "position" else result
