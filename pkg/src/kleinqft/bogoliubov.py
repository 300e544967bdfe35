"""Evolve the free mode basis under the full Hamiltonian and assemble the
time-dependent Bogoliubov amplitude blocks.

Amplitudes are U_ab[k, p] = <mode_a(k) | exp(-iHt) | mode_b(p)> with
a, b in {+, -}, taken in the kind-appropriate metric (plain for fermions,
tau_3 for bosons, with the negative-branch sign absorbed into the coefficient
convention of ModeBasis.coefficients so U(0) is the identity for both kinds).
Rows always run over the complete momentum lattice (they
come for free from the momentum representation of an evolved field); the
momentum window p_cut restricts which basis modes are evolved, i.e. the
columns.  The stacked block matrix is then unitary (fermion) resp.
eta-pseudo-unitary with eta = diag(I, -I) (boson) on its columns up to
roundoff, independent of the window; the window only truncates mode sums of
physical observables, which is what the two-point convergence check in the
scenario layer monitors.

For an even potential the evolution commutes with parity, so only modes with
p >= 0 are propagated and the p < 0 columns are reconstructed by mirroring
(with a sigma_3 rotation and a branch sign for the Dirac spinors).  This
halves the work of the hot loop and is bit-for-bit deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid1D
from .modes import ModeBasis, ParticleKind
from .propagator import SplitStepKernel, StepperConfig

BRANCHES = ("+", "-")


def window_bins(grid: Grid1D, p_cut: float | None) -> np.ndarray:
    """Momentum-lattice bins inside the window, ordered by ascending momentum."""
    if p_cut is None:
        bins = np.arange(grid.n)
    else:
        if p_cut <= 0:
            raise ValueError("p_cut must be positive")
        bins = np.where(np.abs(grid.p) <= p_cut)[0]
    return bins[np.argsort(grid.p[bins], kind="stable")]


def potential_is_even(grid: Grid1D, potential: np.ndarray) -> bool:
    mirror = grid.mirror_index()
    return bool(np.array_equal(potential, potential[mirror]))


@dataclass
class BranchSnapshot:
    """Evolved fields of one branch at one time, in momentum representation."""

    col_momenta: np.ndarray      # (M,) ascending
    fields: np.ndarray           # (M, 2, n) momentum-rep, FFT bin order on the last axis


@dataclass
class BasisSnapshot:
    t: float
    kind: ParticleKind
    grid: Grid1D
    branches: dict  # sign -> BranchSnapshot


@dataclass
class BogoliubovAmplitudes:
    """The four amplitude blocks at one time.

    Block [k, p] entries pair a row mode k (complete lattice, ascending
    momentum) with an evolved column mode p (windowed, ascending momentum).
    """

    t: float
    kind: ParticleKind
    row_momenta: np.ndarray
    col_momenta: np.ndarray
    upp: np.ndarray
    upm: np.ndarray
    ump: np.ndarray
    umm: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.block([[self.upp, self.upm], [self.ump, self.umm]])

    def pair_number(self) -> float:
        """Created pairs counted from the +- block, Sum |U+-|^2."""
        return float(np.sum(np.abs(self.upm) ** 2))

    def antiparticle_number(self) -> float:
        return float(np.sum(np.abs(self.ump) ** 2))


@dataclass
class AlgebraReport:
    kind: ParticleKind
    t: float
    metric_deviation: float      # max |U+ U - I| (fermion) or |U+ eta U - eta| (boson)
    plain_deviation: float       # max |U+ U - I| with the plain metric, both kinds
    matrix_scale: float          # max column norm, for judging roundoff amplification


class _ParityMap:
    """Reconstructs p < 0 columns of an evolved stack from the p >= 0 ones."""

    def __init__(self, grid: Grid1D, kind: ParticleKind, cols: np.ndarray):
        self.mirror = grid.mirror_index()
        p = grid.p[cols]
        self.evolved_mask = p >= 0
        self.evolved_cols = cols[self.evolved_mask]
        # position of the mirror partner (+|p|) within the evolved subset
        lookup = {b: i for i, b in enumerate(self.evolved_cols)}
        self.partner = np.array(
            [lookup[self.mirror[b]] for b in cols[~self.evolved_mask]], dtype=int
        )
        self.kind = kind
        self.n_cols = len(cols)
        self.order = np.argsort(np.concatenate([p[~self.evolved_mask], p[self.evolved_mask]]), kind="stable")

    def expand(self, evolved_prep: np.ndarray, branch: str) -> np.ndarray:
        """Momentum-rep evolved stack (M+, 2, n) -> full-window stack, ascending momentum."""
        mirrored = evolved_prep[self.partner][:, :, self.mirror]
        if self.kind is ParticleKind.FERMION:
            mirrored[:, 1, :] *= -1.0  # sigma_3
            if branch == "-":
                mirrored *= -1.0  # parity maps the negative Dirac branch with a sign
        full = np.concatenate([mirrored, evolved_prep], axis=0)
        return full[self.order]


def _initial_stack(basis: ModeBasis, branch: str, cols: np.ndarray) -> np.ndarray:
    """Basis modes as a position-rep stack; built as deltas in momentum rep."""
    grid = basis.grid
    spinors = basis.u if branch == "+" else basis.v
    prep = np.zeros((len(cols), 2, grid.n), dtype=complex)
    prep[np.arange(len(cols)), :, cols] = spinors[:, cols].T
    return grid.to_position(prep)


class BasisPropagation:
    """Windowed basis modes marching under one split-operator kernel.

    Scenario drivers advance this in segments and read snapshots between
    them; extra fields (e.g. an incoming wavepacket) can share the same
    kernel via extra_fields.
    """

    def __init__(
        self,
        basis: ModeBasis,
        potential: np.ndarray,
        dt: float,
        p_cut: float | None = None,
        branches: tuple = BRANCHES,
        use_parity: str = "auto",
        switch_on_time: float = 0.0,
    ):
        grid = basis.grid
        potential = np.asarray(potential, dtype=float)
        if p_cut is not None:
            grid.assert_momentum_margin(p_cut)
        if use_parity not in ("auto", "on", "off"):
            raise ValueError("use_parity must be 'auto', 'on' or 'off'")
        even = potential_is_even(grid, potential)
        if use_parity == "on" and not even:
            raise ValueError("parity fast path requested but the potential is not even")
        self.parity = use_parity == "on" or (use_parity == "auto" and even)
        self.basis = basis
        self.grid = grid
        self.kernel = SplitStepKernel(grid, basis.kind, potential, dt)
        self.branches = tuple(branches)
        self.cols = window_bins(grid, p_cut)
        self.col_momenta = grid.p[self.cols]
        self.t = 0.0
        self.switch_on_time = float(switch_on_time)
        self._step_count = 0
        self._maps = {}
        self._stacks = {}
        for br in self.branches:
            if br not in BRANCHES:
                raise ValueError(f"unknown branch {br!r}")
            if self.parity:
                pm = _ParityMap(grid, basis.kind, self.cols)
                self._maps[br] = pm
                self._stacks[br] = _initial_stack(basis, br, pm.evolved_cols)
            else:
                self._maps[br] = None
                self._stacks[br] = _initial_stack(basis, br, self.cols)

    @property
    def n_evolved_fields(self) -> int:
        return sum(s.shape[0] for s in self._stacks.values())

    def _ramp_scales(self, n_steps: int) -> np.ndarray | None:
        """Midpoint potential-strength factors for a smooth sin^2 switch-on."""
        tau = self.switch_on_time
        if tau <= 0.0:
            return None
        dt = self.kernel.dt
        t_mid = (self._step_count + 0.5 + np.arange(n_steps)) * dt
        if t_mid[0] >= tau:
            return None
        return np.where(t_mid < tau, np.sin(0.5 * np.pi * np.minimum(t_mid, tau) / tau) ** 2, 1.0)

    def advance(self, n_steps: int, extra_stacks: list | None = None) -> None:
        """March all branch stacks (and any rider stacks) by n_steps."""
        scales = self._ramp_scales(n_steps)
        for br in self.branches:
            self._stacks[br] = self.kernel.run_segment(self._stacks[br], n_steps, scales)
        if extra_stacks is not None:
            for i, st in enumerate(extra_stacks):
                extra_stacks[i] = self.kernel.run_segment(st, n_steps, scales)
        self._step_count += n_steps
        self.t = self._step_count * self.kernel.dt

    def snapshot(self, branches: tuple | None = None) -> BasisSnapshot:
        branch_snaps = {}
        for br in branches if branches is not None else self.branches:
            prep = self.grid.to_momentum(self._stacks[br])
            if self.parity:
                prep = self._maps[br].expand(prep, br)
            branch_snaps[br] = BranchSnapshot(col_momenta=self.col_momenta, fields=prep)
        return BasisSnapshot(t=self.t, kind=self.basis.kind, grid=self.grid, branches=branch_snaps)


def evolve_basis(
    basis: ModeBasis,
    potential: np.ndarray,
    config: StepperConfig,
    p_cut: float | None = None,
    branches: tuple = BRANCHES,
    on_snapshot=None,
    use_parity: str = "auto",
):
    """Evolve every windowed basis mode and collect snapshots.

    With on_snapshot=None, returns a list of BogoliubovAmplitudes (one per
    snapshot time).  Otherwise on_snapshot(BasisSnapshot) is called and
    nothing is stored, which is what the scenario drivers use to keep memory
    flat on long runs.
    """
    potential = np.asarray(potential, dtype=float)
    config.validate_phase_guard(basis.grid, potential, basis.grid.units)
    prop = BasisPropagation(basis, potential, config.dt, p_cut, branches, use_parity)
    results = [] if on_snapshot is None else None
    prev = 0
    for k_step in config.snapshot_steps():
        prop.advance(k_step - prev)
        prev = k_step
        snap = prop.snapshot()
        if on_snapshot is None:
            results.append(amplitudes_from_snapshot(snap, basis))
        else:
            on_snapshot(snap)
    return results


def amplitudes_from_snapshot(snap: BasisSnapshot, basis: ModeBasis) -> BogoliubovAmplitudes:
    if set(snap.branches) != set(BRANCHES):
        raise ValueError("amplitude blocks need both evolved branches")
    order = snap.grid.p_sorted_order
    rows_p = snap.grid.p[order]

    def blocks(branch):
        f = snap.branches[branch].fields
        cp = basis.coefficients(f, "+")[:, order].T
        cm = basis.coefficients(f, "-")[:, order].T
        return cp, cm

    upp, ump = blocks("+")
    upm, umm = blocks("-")
    return BogoliubovAmplitudes(
        t=snap.t,
        kind=snap.kind,
        row_momenta=rows_p,
        col_momenta=snap.branches["+"].col_momenta,
        upp=upp,
        upm=upm,
        ump=ump,
        umm=umm,
    )


def check_algebra(amps: BogoliubovAmplitudes) -> AlgebraReport:
    """Deviation from unitarity (fermion) / eta-pseudo-unitarity (boson).

    With complete rows this measures metric preservation of the split-operator
    evolution itself, so it sits at the roundoff floor scaled by the matrix
    magnitude (which grows under bosonic superradiant amplification).
    """
    u = amps.stacked()
    m = len(amps.col_momenta)
    eye = np.eye(2 * m)
    plain = u.conj().T @ u
    plain_dev = float(np.max(np.abs(plain - eye)))
    if amps.kind is ParticleKind.FERMION:
        metric_dev = plain_dev
    else:
        nrows = len(amps.row_momenta)
        eta_rows = np.concatenate([np.ones(nrows), -np.ones(nrows)])
        eta_cols = np.concatenate([np.ones(m), -np.ones(m)])
        gram = (u.conj() * eta_rows[:, None]).T @ u
        metric_dev = float(np.max(np.abs(gram - np.diag(eta_cols))))
    scale = float(np.sqrt(np.max(np.sum(np.abs(u) ** 2, axis=0))))
    return AlgebraReport(
        kind=amps.kind,
        t=amps.t,
        metric_deviation=metric_dev,
        plain_deviation=plain_dev,
        matrix_scale=scale,
    )


def snapshot_metric_deviation(snap: BasisSnapshot, basis: ModeBasis) -> tuple[float, float]:
    """Metric-preservation check usable with any subset of evolved branches.

    Returns (deviation, scale_sq): the max deviation of the column Gram matrix
    from the exact metric, and the largest squared column norm.  The expected
    Gram of evolved columns is delta_pq (fermion) resp. +/-delta_pq by branch
    (boson, tau_3 metric); complete rows make this a roundoff-level quantity
    whose floor rises with bosonic amplification, hence scale_sq is reported.
    """
    devs, scale = [], 1.0
    for br, bs in snap.branches.items():
        cp = basis.coefficients(bs.fields, "+")
        cm = basis.coefficients(bs.fields, "-")
        if snap.kind is ParticleKind.FERMION:
            gram = cp @ cp.conj().T + cm @ cm.conj().T
            target = np.eye(len(bs.col_momenta))
        else:
            gram = cp @ cp.conj().T - cm @ cm.conj().T
            target = np.eye(len(bs.col_momenta)) * (1.0 if br == "+" else -1.0)
        devs.append(float(np.max(np.abs(gram - target))))
        scale = max(scale, float(np.max(np.sum(np.abs(cp) ** 2 + np.abs(cm) ** 2, axis=-1))))
    return max(devs), scale
