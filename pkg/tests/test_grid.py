import hashlib

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridbec.grid import (
    ConfigError,
    FieldPair,
    build_grid,
    initial_gaussian,
    norms,
    read_snapshots,
    total_norm,
    write_snapshots,
)


def test_points_exclude_origin():
    g = build_grid(16, 8.0)
    np.testing.assert_allclose(g.x, 0.5 * np.arange(1, 17))
    assert g.x_max == 8.0


def test_spacing():
    g = build_grid(2000, 20.0)
    assert g.dx == pytest.approx(0.01)
    assert np.max(np.abs(np.diff(g.x) - g.dx)) < 1e-15 * 2000


@pytest.mark.parametrize("nx,x_max", [(0, 1.0), (4, 2.0), (15, 1.0), (64, 0.0), (64, -1.0), (16.5, 1.0)])
def test_bad_grid(nx, x_max):
    with pytest.raises(ConfigError):
        build_grid(nx, x_max)


def test_gaussian_pure_species():
    g = build_grid(1024, 10.0)
    f = initial_gaussian(g, 1.0, 1.0, 0.0)
    assert not np.any(f.phi_m)
    assert norms(f, g)[0] == pytest.approx(1.0, abs=1e-12)
    f = initial_gaussian(g, 1.0, 1.0, 1.0)
    assert not np.any(f.phi_a)
    assert 2 * norms(f, g)[1] == pytest.approx(1.0, abs=1e-12)
    assert f.tau == 0.0 and np.all(f.phi_a.imag == 0)


def test_gaussian_normalization_against_fine_quadrature():
    g = build_grid(4096, 10.0)
    f = initial_gaussian(g, 1.0, 1.0, 0.0)
    # the discrete profile sampled on a 4x finer mesh with the same amplitude
    fine = build_grid(4 * 4096, 10.0)
    amp = f.phi_a[0].real / (g.x[0] * np.exp(-g.x[0] ** 2 / 2))
    prof = amp * fine.x * np.exp(-fine.x**2 / 2)
    assert np.trapezoid(np.r_[0.0, prof**2], np.r_[0.0, fine.x]) == pytest.approx(1.0, abs=1e-10)


def test_norms_split():
    g = build_grid(2048, 12.0)
    f = initial_gaussian(g, 1.0, 0.7, 0.5)
    n_a, n_m = norms(f, g)
    assert n_a == pytest.approx(0.5, abs=1e-8)
    assert n_m == pytest.approx(0.25, abs=1e-8)
    assert total_norm(f, g) == pytest.approx(1.0, abs=1e-12)


def test_norms_trivial():
    g = build_grid(32, 4.0)
    z = FieldPair(np.zeros(32), np.zeros(32))
    assert norms(z, g) == (0.0, 0.0)
    f = initial_gaussian(g, 1.0, 1.0, 0.3)
    d = FieldPair(2 * f.phi_a, f.phi_m)
    assert norms(d, g)[0] == pytest.approx(4 * norms(f, g)[0], rel=1e-14)


def test_norm_quadrature_is_second_order():
    # analytic oracle: int_0^inf x^2 exp(-x^2) dx = sqrt(pi) / 4
    errs = []
    for nx in (64, 128, 256):
        g = build_grid(nx, 8.0)
        f = FieldPair(g.x * np.exp(-g.x**2 / 2), np.zeros(nx))
        errs.append(abs(norms(f, g)[0] - np.sqrt(np.pi) / 4))
    # x^2 e^{-x^2} has vanishing odd derivatives at 0, so the trapezoid rule does at least O(dx^2)
    assert errs[1] <= errs[0] / 3.5 or errs[1] < 1e-14


@given(mf=st.floats(0.0, 1.0), wa=st.floats(0.3, 2.0), wm=st.floats(0.3, 2.0))
def test_gaussian_convention(mf, wa, wm):
    g = build_grid(512, 12.0)
    f = initial_gaussian(g, wa, wm, mf)
    n_a, n_m = norms(f, g)
    assert n_a + 2 * n_m == pytest.approx(1.0, abs=1e-12)
    assert 2 * n_m == pytest.approx(mf, abs=1e-12)


@pytest.mark.parametrize("mf", [-0.1, 1.5])
def test_gaussian_rejects_fraction(mf):
    with pytest.raises(ConfigError):
        initial_gaussian(build_grid(32, 4.0), 1.0, 1.0, mf)


def test_field_pair_rejects_nonfinite():
    with pytest.raises(ValueError):
        FieldPair(np.array([1.0, np.nan]), np.zeros(2))


def test_copy_is_independent():
    g = build_grid(64, 6.0)
    f = initial_gaussian(g, 1.0, 1.0, 0.2)
    digest = hashlib.sha256(f.phi_a.tobytes() + f.phi_m.tobytes()).hexdigest()
    c = f.copy()
    c.phi_a *= 2
    c.phi_m[:] = 0
    assert hashlib.sha256(f.phi_a.tobytes() + f.phi_m.tobytes()).hexdigest() == digest


def test_vacuum_check_warns():
    g = build_grid(64, 2.0)
    with pytest.warns(UserWarning, match="x_max"):
        assert not g.check_vacuum(initial_gaussian(g, 1.0, 1.0, 0.0))
    wide = build_grid(256, 12.0)
    assert wide.check_vacuum(initial_gaussian(wide, 1.0, 1.0, 0.5))


def test_snapshot_round_trip(tmp_path):
    g = build_grid(32, 4.0)
    f = initial_gaussian(g, 1.0, 1.0, 0.3)
    f2 = FieldPair(f.phi_a * 1j, f.phi_m * (1 - 1j), 0.5)
    write_snapshots(tmp_path / "s.csv", [f, f2], g)
    header = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert header == "tau,x,dens_a,dens_m,re_a,im_a,re_m,im_m"
    back = read_snapshots(tmp_path / "s.csv")
    assert [b[0] for b in back] == [0.0, 0.5]
    np.testing.assert_array_equal(back[1][2].phi_a, f2.phi_a)
    np.testing.assert_array_equal(back[1][2].phi_m, f2.phi_m)
    np.testing.assert_array_equal(back[0][1], g.x)
