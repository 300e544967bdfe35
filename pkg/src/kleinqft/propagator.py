"""Strang split-operator time stepper shared by the Dirac and
Feshbach-Villars fields.

One step is exp(-i V dt/2) exp(-i h dt) exp(-i V dt/2): the potential factors
are pointwise phases (V couples as the identity on both components in both
equations), and the kinetic factor is the exact per-bin 2x2 exponential

    exp(-i h(p) dt) = cos(E_p dt) I - i sin(E_p dt) h(p)/E_p

valid because h(p)^2 = E_p^2 I.  Every factor is exactly norm-preserving
(fermion) or tau_3-pseudo-norm-preserving (boson); the only discretization
error is the second-order splitting error.

The batched engine evolves a whole stack of fields (shape (M, 2, n)) at once;
adjacent half-steps between snapshots are fused into full potential phases.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid1D, Units
from .modes import ModeBasis, ParticleKind, TwoComponentField, energy, grid_energies, grid_h_entries

try:
    import numba

    @numba.njit(cache=True)
    def _kinetic_mix(f, k11, k12, k21, k22):  # pragma: no cover - numba path
        m, _, n = f.shape
        for i in range(m):
            for j in range(n):
                a = f[i, 0, j]
                b = f[i, 1, j]
                f[i, 0, j] = k11[j] * a + k12[j] * b
                f[i, 1, j] = k21[j] * a + k22[j] * b

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - fallback when numba is unusable
    _HAVE_NUMBA = False

    def _kinetic_mix(f, k11, k12, k21, k22):
        a = f[:, 0, :].copy()
        f[:, 0, :] *= k11
        f[:, 0, :] += k12 * f[:, 1, :]
        f[:, 1, :] *= k22
        f[:, 1, :] += k21 * a


def _fft_workers() -> int:
    try:
        return max(1, int(os.environ.get("KLEINQFT_THREADS", "1")))
    except ValueError:
        return 1


def _fft(a):
    w = _fft_workers()
    if w > 1:
        import scipy.fft

        return scipy.fft.fft(a, axis=-1, workers=w)
    return np.fft.fft(a, axis=-1)


def _ifft(a):
    w = _fft_workers()
    if w > 1:
        import scipy.fft

        return scipy.fft.ifft(a, axis=-1, workers=w)
    return np.fft.ifft(a, axis=-1)


@dataclass
class StepperConfig:
    """Time stepping parameters; dt defaults to the fermion desk-scale value."""

    dt: float = 1e-6
    t_max: float = 0.0
    snapshot_times: list = field(default_factory=list)

    def n_steps(self) -> int:
        n = int(round(self.t_max / self.dt))
        if abs(n * self.dt - self.t_max) > 1e-12:
            raise ValueError(f"t_max {self.t_max!r} is not a multiple of dt {self.dt!r}")
        return n

    def snapshot_steps(self) -> list[int]:
        """Snapshot times as step counts; each must sit on the dt lattice."""
        steps = []
        for t in self.snapshot_times:
            k = int(round(t / self.dt))
            if abs(k * self.dt - t) > 1e-12:
                raise ValueError(f"snapshot time {t!r} is not a multiple of dt {self.dt!r}")
            if not 0 <= k <= self.n_steps():
                raise ValueError(f"snapshot time {t!r} outside [0, t_max]")
            steps.append(k)
        if steps != sorted(steps):
            raise ValueError("snapshot_times must be sorted")
        return steps

    def validate_phase_guard(self, grid: Grid1D, potential: np.ndarray, units: Units) -> None:
        """Phase-resolution guard: max(E_p) dt < 0.5 and max|V| dt < 0.5."""
        e_max = float(energy(grid.nyquist, units))
        if e_max * self.dt >= 0.5:
            raise ValueError(f"dt too large: max E_p * dt = {e_max * self.dt:.3f} >= 0.5")
        v_max = float(np.max(np.abs(potential)))
        if v_max * self.dt >= 0.5:
            raise ValueError(f"dt too large: max|V| * dt = {v_max * self.dt:.3f} >= 0.5")


class SplitStepKernel:
    """Precomputed per-bin phase tables for one (grid, kind, potential, dt)."""

    def __init__(self, grid: Grid1D, kind: ParticleKind, potential: np.ndarray, dt: float):
        potential = np.asarray(potential, dtype=float)
        if potential.shape != (grid.n,):
            raise ValueError("potential does not live on this grid")
        self.grid, self.kind, self.dt = grid, kind, float(dt)
        E = grid_energies(grid, kind)
        h11, h12, h21, h22 = grid_h_entries(grid, kind)
        cosE, sinE = np.cos(E * dt), np.sin(E * dt)
        self.k11 = np.ascontiguousarray(cosE - 1j * sinE * h11 / E)
        self.k12 = np.ascontiguousarray(-1j * sinE * h12 / E)
        self.k21 = np.ascontiguousarray(-1j * sinE * h21 / E)
        self.k22 = np.ascontiguousarray(cosE - 1j * sinE * h22 / E)
        self._half_angle = -0.5 * potential * dt
        self.half_phase = np.exp(1j * self._half_angle)
        self.full_phase = self.half_phase * self.half_phase

    def _scaled_phase(self, scale: float) -> np.ndarray:
        return np.exp(1j * (scale * self._half_angle))

    def run_segment(self, stack: np.ndarray, n_steps: int, scales: np.ndarray | None = None) -> np.ndarray:
        """Advance a position-rep stack (M, 2, n) by n_steps Strang steps.

        Segments compose exactly: half phases of adjacent steps are fused into
        full phases, and the returned state is closed (position rep, integer
        multiple of dt).  A scales array (one midpoint factor per step)
        modulates the potential strength, used for smooth switch-on ramps;
        None is the static fast path.
        """
        if n_steps == 0:
            return stack
        if scales is not None and len(scales) != n_steps:
            raise ValueError("need one potential scale per step")
        if scales is not None and np.all(scales == 1.0):
            scales = None
        if scales is None:
            stack = stack * self.half_phase
            for i in range(n_steps):
                f = _fft(stack)
                _kinetic_mix(f, self.k11, self.k12, self.k21, self.k22)
                stack = _ifft(f)
                stack *= self.full_phase if i < n_steps - 1 else self.half_phase
        else:
            stack = stack * self._scaled_phase(scales[0])
            for i in range(n_steps):
                f = _fft(stack)
                _kinetic_mix(f, self.k11, self.k12, self.k21, self.k22)
                stack = _ifft(f)
                if i < n_steps - 1:
                    stack *= self._scaled_phase(scales[i] + scales[i + 1])
                else:
                    stack *= self._scaled_phase(scales[i])
        if not np.all(np.isfinite(stack[:, :, :: max(1, stack.shape[-1] // 64)])):
            raise FloatingPointError(
                f"non-finite field after segment of {n_steps} steps (dt={self.dt:g}); "
                "reduce dt or check the potential"
            )
        return stack


def step(field_in: TwoComponentField, potential: np.ndarray, dt: float) -> TwoComponentField:
    """One Strang step of a single field; position representation required."""
    if field_in.representation != "position":
        raise ValueError("step() expects the field in position representation")
    kern = SplitStepKernel(field_in.grid, field_in.kind, potential, dt)
    out = kern.run_segment(field_in.values[None, :, :].copy(), 1)
    return TwoComponentField(out[0], field_in.kind, field_in.grid, "position")


def evolve_mode(
    initial: TwoComponentField,
    potential: np.ndarray,
    config: StepperConfig,
) -> list[tuple[float, TwoComponentField]]:
    """Evolve one field, returning (time, field) snapshots at config.snapshot_times."""
    if initial.representation != "position":
        raise ValueError("evolve_mode() expects a position-rep initial field")
    config.validate_phase_guard(initial.grid, potential, initial.grid.units)
    kern = SplitStepKernel(initial.grid, initial.kind, potential, config.dt)
    stack = initial.values[None, :, :].copy()
    out = []
    prev = 0
    for k in config.snapshot_steps():
        stack = kern.run_segment(stack, k - prev)
        prev = k
        out.append((k * config.dt, TwoComponentField(stack[0].copy(), initial.kind, initial.grid, "position")))
    return out
