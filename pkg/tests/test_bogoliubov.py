import numpy as np
import pytest

from kleinqft.grid import Grid1D, Units
from kleinqft.modes import ParticleKind, build_basis
from kleinqft.propagator import StepperConfig
from kleinqft.bogoliubov import (
    BasisPropagation,
    amplitudes_from_snapshot,
    check_algebra,
    evolve_basis,
    potential_is_even,
    snapshot_metric_deviation,
    window_bins,
)

from conftest import barrier_on

UNITS = Units()
MC2 = UNITS.mc2


def short_cfg(dt=1e-6, t_max=2e-5):
    return StepperConfig(dt=dt, t_max=t_max, snapshot_times=[0.0, t_max])


def test_identity_at_t_zero(small_grid, fermion_basis):
    pot = barrier_on(small_grid, 3 * MC2, 0.2, 0.02)
    amps = evolve_basis(fermion_basis, pot, short_cfg(), p_cut=120.0)[0]
    m = len(amps.col_momenta)
    # columns are the windowed identity sub-block of the full lattice
    sel = [np.argmin(np.abs(amps.row_momenta - p)) for p in amps.col_momenta]
    assert np.max(np.abs(amps.upp[sel, :] - np.eye(m))) < 1e-13
    assert np.max(np.abs(amps.umm[sel, :] - np.eye(m))) < 1e-13
    assert np.max(np.abs(amps.upm)) < 1e-13 and np.max(np.abs(amps.ump)) < 1e-13
    assert amps.pair_number() < 1e-20
    assert check_algebra(amps).metric_deviation < 1e-12


@pytest.mark.parametrize("kind", list(ParticleKind))
def test_free_evolution_diagonal_phases(small_grid, kind):
    basis = build_basis(small_grid, kind)
    t_max = 5e-5
    amps = evolve_basis(basis, np.zeros(small_grid.n), short_cfg(t_max=t_max), p_cut=100.0)[1]
    sel = [np.argmin(np.abs(amps.row_momenta - p)) for p in amps.col_momenta]
    e_cols = basis.energies[[np.argmin(np.abs(basis.grid.p - p)) for p in amps.col_momenta]]
    want_plus = np.exp(-1j * e_cols * t_max)
    want_minus = np.exp(+1j * e_cols * t_max)
    assert np.max(np.abs(np.diag(amps.upp[sel, :]) - want_plus)) < 1e-10
    assert np.max(np.abs(np.diag(amps.umm[sel, :]) - want_minus)) < 1e-10
    off = amps.upp[sel, :] - np.diag(np.diag(amps.upp[sel, :]))
    assert np.max(np.abs(off)) < 1e-12
    assert np.max(np.abs(amps.upm)) < 1e-12


@pytest.mark.parametrize("kind", list(ParticleKind))
def test_metric_preservation_supercritical(small_grid, kind):
    basis = build_basis(small_grid, kind)
    pot = barrier_on(small_grid, 3 * MC2, 0.2, 0.02)
    amps = evolve_basis(basis, pot, short_cfg(t_max=5e-5), p_cut=120.0)[1]
    rep = check_algebra(amps)
    assert rep.metric_deviation < 1e-6
    if kind is ParticleKind.BOSON:
        assert rep.plain_deviation > 100 * rep.metric_deviation  # amplification is physical


def test_windowed_blocks_match_full_run(small_grid, fermion_basis):
    pot = barrier_on(small_grid, 3 * MC2, 0.2, 0.02)
    full = evolve_basis(fermion_basis, pot, short_cfg(), p_cut=None)[1]
    cut = evolve_basis(fermion_basis, pot, short_cfg(), p_cut=80.0)[1]
    keep = np.isin(np.round(full.col_momenta, 9), np.round(cut.col_momenta, 9))
    for name in ("upp", "upm", "ump", "umm"):
        assert np.max(np.abs(getattr(full, name)[:, keep] - getattr(cut, name))) < 1e-12


@pytest.mark.parametrize("kind", list(ParticleKind))
def test_parity_fast_path_equals_direct(small_grid, kind):
    basis = build_basis(small_grid, kind)
    pot = barrier_on(small_grid, 3 * MC2, 0.2, 0.02)
    a_on = evolve_basis(basis, pot, short_cfg(), p_cut=120.0, use_parity="on")[1]
    a_off = evolve_basis(basis, pot, short_cfg(), p_cut=120.0, use_parity="off")[1]
    for name in ("upp", "upm", "ump", "umm"):
        assert np.max(np.abs(getattr(a_on, name) - getattr(a_off, name))) < 1e-12


def test_parity_refused_for_uneven_potential(small_grid, fermion_basis):
    pot = barrier_on(small_grid, 3 * MC2, 0.2, 0.02)
    pot[3] += 1.0
    assert not potential_is_even(small_grid, pot)
    with pytest.raises(ValueError, match="parity"):
        BasisPropagation(fermion_basis, pot, 1e-6, p_cut=50.0, use_parity="on")
    prop = BasisPropagation(fermion_basis, pot, 1e-6, p_cut=50.0, use_parity="auto")
    assert not prop.parity


def test_particle_antiparticle_counts_match_full_basis(units):
    # trace identity of the unitary blocks: full-basis counts agree to 1e-8
    grid = Grid1D(128, 1.0, units)
    basis = build_basis(grid, ParticleKind.FERMION)
    pot = barrier_on(grid, 3 * MC2, 0.05, 2.5 * grid.dx)
    amps = evolve_basis(basis, pot, StepperConfig(dt=5e-7, t_max=5e-5, snapshot_times=[5e-5]), p_cut=None)[0]
    n_el, n_po = amps.pair_number(), amps.antiparticle_number()
    assert n_el > 1e-4  # the run actually creates pairs
    assert abs(n_el - n_po) <= 1e-8 * n_el


def test_subcritical_window_stays_quiet(small_grid, fermion_basis):
    # V0 = mc^2 opens no pair channel: the +- block holds only the static
    # vacuum-polarization cloud.  A resolution scan (n = 1024/2048/4096 on the
    # production geometry) froze that floor at ~2.5e-2 with a drift that
    # vanishes as the grid refines; on this small grid the calibrated level is
    # ~7e-3, frozen here at 1e-2, orders of magnitude under any supercritical
    # run at the same time (compare test_metric_preservation_supercritical).
    pot = barrier_on(small_grid, MC2, 0.2, 0.02)
    prop = BasisPropagation(fermion_basis, pot, 2e-6, p_cut=120.0, branches=("-",))
    pairs = []
    for _ in range(4):
        prop.advance(250)
        coeff = fermion_basis.coefficients(prop.snapshot().branches["-"].fields, "+")
        pairs.append(float(np.sum(np.abs(coeff) ** 2)))
    assert max(pairs) < 1.2e-2
    # no secular growth: the cloud is static, not a creation channel
    assert pairs[-1] - pairs[0] < 0.2 * pairs[0]


def test_switch_on_ramp_removes_quench_transient(small_grid, fermion_basis):
    # the smooth switch-on cannot remove the static polarization cloud (it is
    # a property of the dressed vacuum) but it does kill the quench transient
    pot = barrier_on(small_grid, MC2, 0.2, 0.02)

    def pair_series(tau):
        prop = BasisPropagation(fermion_basis, pot, 2e-6, p_cut=120.0, branches=("-",),
                                switch_on_time=tau)
        out = []
        for _ in range(8):
            prop.advance(125)
            c = fermion_basis.coefficients(prop.snapshot().branches["-"].fields, "+")
            out.append(float(np.sum(np.abs(c) ** 2)))
        return np.array(out)

    sudden, ramped = pair_series(0.0), pair_series(2e-4)
    assert ramped[-1] < sudden[-1]
    # ... while the static cloud itself survives the ramp
    assert ramped[-1] > 0.5 * sudden[-1]


def test_repeat_run_bit_identical(small_grid, fermion_basis):
    pot = barrier_on(small_grid, 3 * MC2, 0.2, 0.02)

    def run():
        return evolve_basis(fermion_basis, pot, short_cfg(), p_cut=100.0)[1]

    a, b = run(), run()
    for name in ("upp", "upm", "ump", "umm"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_window_bins_and_errors(small_grid, fermion_basis):
    bins = window_bins(small_grid, 50.0)
    assert np.all(np.abs(small_grid.p[bins]) <= 50.0)
    assert np.all(np.diff(small_grid.p[bins]) > 0)
    with pytest.raises(ValueError):
        window_bins(small_grid, -1.0)
    with pytest.raises(ValueError):
        BasisPropagation(fermion_basis, np.zeros(small_grid.n), 1e-6, p_cut=50.0, branches=("x",))
    prop = BasisPropagation(fermion_basis, np.zeros(small_grid.n), 1e-6, p_cut=50.0, branches=("-",))
    prop.advance(5)
    with pytest.raises(ValueError, match="both evolved branches"):
        amplitudes_from_snapshot(prop.snapshot(), fermion_basis)


def test_single_branch_metric_check(small_grid, boson_basis):
    pot = barrier_on(small_grid, 3 * MC2, 0.1, 0.02)
    prop = BasisPropagation(boson_basis, pot, 1e-6, p_cut=100.0, branches=("-",))
    prop.advance(50)
    dev, scale_sq = snapshot_metric_deviation(prop.snapshot(), boson_basis)
    assert dev < 1e-6 * max(1.0, scale_sq)
    assert scale_sq >= 1.0
