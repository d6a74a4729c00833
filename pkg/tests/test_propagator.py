import hashlib
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridbec.grid import FieldPair, build_grid, initial_gaussian, norms, total_norm
from hybridbec.ground import RelaxationSettings, relax
from hybridbec.propagator import (
    BlowUpError,
    StepSettings,
    evolve,
    make_workspace,
    pack_params,
    run_steps,
    step,
)
from hybridbec.units import DimensionlessParams

FREE = DimensionlessParams()


def digest(f: FieldPair) -> str:
    return hashlib.sha256(f.phi_a.tobytes() + f.phi_m.tobytes()).hexdigest()


def rel_inf(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


@pytest.fixture(scope="module")
def gauge_state(coupled, small_grid):
    return relax(coupled, small_grid, initial_gaussian(small_grid, 1.0, 1.0, 0.1),
                 RelaxationSettings(dtau_imag=2.5e-4, mu_tol=1e-8, check_every=400,
                                    normalization="gauge"))


def test_stationary_state_only_rotates_phase(coupled, small_grid, gauge_state):
    h = 2.5e-4
    f = gauge_state.fields
    out = step(f, coupled, small_grid, StepSettings(dtau=h))
    # the relaxed state is stationary up to the O(dtau_imag) bias of the split relaxation
    assert rel_inf(np.abs(out.phi_a) ** 2, np.abs(f.phi_a) ** 2) < 1e-6
    assert rel_inf(np.abs(out.phi_m) ** 2, np.abs(f.phi_m) ** 2) < 1e-6
    j = int(np.argmax(np.abs(f.phi_a)))
    k = int(np.argmax(np.abs(f.phi_m)))
    phase_a = np.angle(out.phi_a[j] / f.phi_a[j])
    phase_m = np.angle(out.phi_m[k] / f.phi_m[k])
    assert phase_a == pytest.approx(-gauge_state.mu_a * h, rel=5e-3)
    assert phase_m == pytest.approx(2 * phase_a, rel=1e-2)


@pytest.mark.parametrize("which", ["alpha_t", "g2_t"])
def test_linear_decay_matches_exponential(which):
    grid = build_grid(256, 8.0)
    rate = 0.7
    p = DimensionlessParams(**{which: rate})
    seed = initial_gaussian(grid, 1.0, 1.0, 0.5)
    rec = evolve(seed, p, grid, StepSettings(dtau=1e-4, series_stride=1000), 1.0, keep_snapshots=False)
    col = rec.column("n_a" if which == "alpha_t" else "n_m")
    expect = col[0] * np.exp(-2 * rate * rec.tau)
    assert np.max(np.abs(col - expect) / expect) < 1e-6


def test_decay_error_is_second_order():
    grid = build_grid(128, 8.0)
    p = DimensionlessParams(alpha_t=5.0)
    seed = initial_gaussian(grid, 1.0, 1.0, 0.0)
    errs = []
    for h in (0.1, 0.05):
        n_end = evolve(seed, p, grid, StepSettings(dtau=h), 1.0, keep_snapshots=False).column("n_a")[-1]
        errs.append(abs(n_end / norms(seed, grid)[0] - math.exp(-10.0)))
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_exchange_conserves_combined_norm(coupled, small_grid):
    seed = initial_gaussian(small_grid, 1.0, 0.7, 0.4)
    rec = evolve(seed, coupled, small_grid, StepSettings(dtau=1e-3, series_stride=50), 5.0,
                 keep_snapshots=False)
    total = rec.column("n_a") + 2 * rec.column("n_m")
    assert np.max(np.abs(total - 1.0)) < 1e-11
    # the norm really moves between the species
    assert np.ptp(rec.column("n_m")) > 1e-3


@settings(max_examples=15, deadline=None)
@given(alpha=st.floats(0, 2), g1=st.floats(0, 2), g2=st.floats(0, 20),
       chi=st.floats(0, 60), frac=st.floats(0, 0.9))
def test_decays_never_increase_combined_norm(alpha, g1, g2, chi, frac):
    grid = build_grid(64, 8.0)
    p = DimensionlessParams(g_a=10, g_m=10, g_am=10, chi_t=chi, eps_t=20,
                            alpha_t=alpha, g1_t=g1, g2_t=g2)
    rec = evolve(initial_gaussian(grid, 1.0, 0.8, frac), p, grid,
                 StepSettings(dtau=1e-3, series_stride=1), 0.3, keep_snapshots=False)
    total = rec.column("n_a") + 2 * rec.column("n_m")
    assert np.all(np.diff(total) <= 1e-13)


def test_step_with_negative_size_undoes_step(coupled, small_grid):
    seed = initial_gaussian(small_grid, 1.0, 0.7, 0.4)
    a = seed.phi_a.copy()
    m = seed.phi_m.copy()
    prm = pack_params(coupled)
    work = make_workspace(small_grid.nx)
    run_steps(a, m, small_grid.x, small_grid.dx, prm, 1e-3, 200, False, 6, work)
    assert rel_inf(a, seed.phi_a) > 1e-2
    run_steps(a, m, small_grid.x, small_grid.dx, prm, -1e-3, 200, False, 6, work)
    assert rel_inf(a, seed.phi_a) < 1e-8
    assert rel_inf(m, seed.phi_m) < 1e-8


def test_stationary_state_carries_no_radial_current(small_grid):
    p = DimensionlessParams(g_a=20.0, g_m=5.0, g_am=10.0, eps_t=1.0)
    g = relax(p, small_grid, initial_gaussian(small_grid, 1.0, 1.0, 0.3),
              RelaxationSettings(dtau_imag=1e-3, mu_tol=1e-10, normalization="gauge"))

    def max_current(f0):
        rec = evolve(f0, p, small_grid, StepSettings(dtau=1e-3, snapshot_stride=100), 1.0)
        return max(abs(np.imag(np.vdot(phi, np.gradient(phi, small_grid.dx)))) * small_grid.dx
                   for f in rec.snapshots for phi in (f.phi_a, f.phi_m))

    # a relaxed state stays current-free; a displaced one breathes with a visible current
    assert max_current(g.fields) < 1e-5
    assert max_current(initial_gaussian(small_grid, 0.7, 0.7, 0.3)) > 1e-2


def test_evolution_is_deterministic(coupled, small_grid):
    seed = initial_gaussian(small_grid, 1.0, 0.7, 0.4)
    runs = [evolve(seed, coupled, small_grid, StepSettings(dtau=1e-3), 0.5) for _ in range(2)]
    assert np.array_equal(runs[0].series, runs[1].series)
    assert digest(runs[0].snapshots[-1]) == digest(runs[1].snapshots[-1])


def test_inputs_are_not_modified(coupled, small_grid):
    seed = initial_gaussian(small_grid, 1.0, 0.7, 0.4)
    before = digest(seed)
    step(seed, coupled, small_grid, StepSettings(dtau=1e-3))
    evolve(seed, coupled, small_grid, StepSettings(dtau=1e-3), 0.1)
    assert digest(seed) == before


def test_zero_length_run_gives_single_sample(small_grid):
    seed = initial_gaussian(small_grid)
    seed.tau = 2.0
    rec = evolve(seed, FREE, small_grid, StepSettings(), 2.0)
    assert rec.series.shape == (1, 7)
    assert rec.tau[0] == 2.0
    with pytest.raises(ValueError):
        evolve(seed, FREE, small_grid, StepSettings(), 1.0)


def test_last_step_is_shortened_to_land_on_end(small_grid):
    rec = evolve(initial_gaussian(small_grid), FREE, small_grid,
                 StepSettings(dtau=0.03, series_stride=10, snapshot_stride=10), 1.0)
    assert rec.tau[-1] == 1.0
    assert rec.snapshots[-1].tau == 1.0
    assert np.all(np.diff(rec.tau) > 0)


def test_free_evolution_with_shortened_step_matches_exact_rotation(small_grid):
    # the noninteracting ground state only rotates, so the end phase pins the elapsed time
    g = relax(FREE, small_grid, initial_gaussian(small_grid), RelaxationSettings(dtau_imag=1e-3))
    rec = evolve(g.fields, FREE, small_grid, StepSettings(dtau=0.03), 0.1)
    f = rec.snapshots[-1]
    j = int(np.argmax(np.abs(g.fields.phi_a)))
    assert np.angle(f.phi_a[j] / g.fields.phi_a[j]) == pytest.approx(-g.mu_a * 0.1, rel=1e-3)


def test_blow_up_raises_with_partial_record(small_grid):
    seed = initial_gaussian(small_grid)
    huge = FieldPair(1e7 * seed.phi_a, seed.phi_m, 0.0)
    p = DimensionlessParams(g_a=-50.0)
    with pytest.raises(BlowUpError) as exc:
        evolve(huge, p, small_grid, StepSettings(dtau=1e-3), 1.0)
    rec = exc.value.record
    assert rec is not None
    assert rec.terminated_early == "blow-up"
    assert len(rec.series) >= 1


def test_step_settings_are_validated():
    with pytest.raises(ValueError):
        StepSettings(dtau=0.0)
    with pytest.raises(ValueError):
        StepSettings(fp_iters=0)


def test_total_norm_helper_agrees_with_series(small_grid):
    seed = initial_gaussian(small_grid, 1.0, 1.0, 0.3)
    assert total_norm(seed, small_grid) == pytest.approx(1.0, abs=1e-14)
