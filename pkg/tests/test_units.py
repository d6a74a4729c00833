import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridbec.units import (
    CHI_QUOTED,
    CODATA,
    DimensionlessParams,
    DomainError,
    PhysicalConstants,
    coupling_chi,
    coupling_lambda,
    invert_linear,
    nondimensionalize,
    oscillator_length,
    rb85_mfr,
)

# independent hard-coded constants (CODATA 2018) for the calculator-style oracles
HBAR = 1.054571817e-34
A0 = 5.29177210903e-11
MU_B = 9.2740100783e-24
M_RB = 1.4112568490e-25
OMEGA = 2 * math.pi * 12.69


def test_oscillator_length_rb85():
    assert oscillator_length(M_RB, OMEGA) == pytest.approx(3.0614e-6, rel=1e-4)
    assert oscillator_length(M_RB, OMEGA) == pytest.approx(math.sqrt(HBAR / (M_RB * OMEGA)), rel=1e-9)


def test_oscillator_length_unit_and_scaling():
    assert oscillator_length(CODATA.hbar, 1.0) == pytest.approx(1.0, rel=1e-15)
    assert oscillator_length(M_RB, 4 * OMEGA) == pytest.approx(0.5 * oscillator_length(M_RB, OMEGA), rel=1e-14)


@pytest.mark.parametrize("m,w", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0), (1.0, -2.0)])
def test_oscillator_length_rejects_nonpositive(m, w):
    with pytest.raises(DomainError):
        oscillator_length(m, w)


def test_coupling_lambda():
    a = 3.016308e-8
    assert a == pytest.approx(570 * A0, rel=1e-6)
    assert coupling_lambda(a, M_RB) == pytest.approx(2.987e-50, rel=1e-3)
    assert coupling_lambda(0.0, M_RB) == 0.0
    assert coupling_lambda(-a, M_RB) == -coupling_lambda(a, M_RB)
    with pytest.raises(DomainError):
        coupling_lambda(a, 0.0)


def test_coupling_chi_matches_quoted_value():
    chi = coupling_chi(-450 * A0, -2.23 * MU_B, 11e-4, M_RB)
    oracle = math.sqrt(8 * math.pi * HBAR**2 * (-450 * A0) * (-2.23 * MU_B) * 11e-4 / M_RB) / HBAR
    assert chi == pytest.approx(oracle, rel=1e-8)
    assert abs(chi - CHI_QUOTED) / CHI_QUOTED < 1e-3


def test_coupling_chi_edge_cases():
    assert coupling_chi(-450 * A0, -2.23 * MU_B, 0.0, M_RB) == 0.0
    with pytest.raises(DomainError, match="a_bg"):
        coupling_chi(450 * A0, -2.23 * MU_B, 11e-4, M_RB)


def test_preset_conversion():
    d = nondimensionalize(rb85_mfr())
    assert d.g_a == pytest.approx(2.12e3, rel=5e-3)
    assert d.g_m == d.g_am == d.g_a
    assert d.eps_t == pytest.approx(2.51e3, rel=5e-3)
    assert d.alpha_t == pytest.approx(2.73e2, rel=5e-3)
    assert d.chi_t == pytest.approx(9.5e4, rel=5e-3)
    assert d.tau_total == pytest.approx(299.0, abs=0.05)
    assert d.alpha_t > 0 and d.g1_t == 0 and d.g2_t == 0


def test_zero_decays_map_to_zero():
    d = nondimensionalize(rb85_mfr(alpha=0.0))
    assert d.alpha_t == d.g1_t == d.g2_t == 0.0
    assert not d.has_decay()


def test_preset_values():
    p = rb85_mfr()
    assert p.n_atoms == 17100
    assert p.omega == pytest.approx(2 * math.pi * 12.69)
    assert p.m == 1.4112568490e-25
    assert p.a == pytest.approx(570 * A0, rel=1e-9)
    assert p.a_bg == pytest.approx(-450 * A0, rel=1e-9)
    assert p.delta_B == pytest.approx(11e-4)
    assert p.delta_mu == pytest.approx(-2.23 * MU_B, rel=1e-9)
    assert p.epsilon == 2e5 and p.alpha == 2.1739e4


@pytest.mark.parametrize("field,value", [("m", 0.0), ("omega", -1.0), ("n_atoms", 0.0), ("alpha", -1.0),
                                         ("gamma1", -1e-20), ("gamma2", -1.0), ("t_total", -1.0)])
def test_physical_params_invariants(field, value):
    with pytest.raises(DomainError):
        rb85_mfr(**{field: value})


def test_physical_params_radicand_sign():
    with pytest.raises(DomainError):
        rb85_mfr(a_bg=450 * A0)


def test_constants_positive():
    with pytest.raises(DomainError):
        PhysicalConstants(hbar=0.0)


def test_dimensionless_invariants():
    with pytest.raises(DomainError):
        DimensionlessParams(g2_t=-1.0)
    with pytest.raises(DomainError):
        DimensionlessParams(chi_t=float("nan"))


rates = st.floats(min_value=0.0, max_value=1e12, allow_nan=False)


@given(eps=rates, alpha=rates, g2=rates, t=st.floats(0.0, 100.0),
       w=st.floats(min_value=1.0, max_value=1e4))
def test_linear_round_trip(eps, alpha, g2, t, w):
    p = rb85_mfr(omega=w, epsilon=eps, alpha=alpha, gamma2=g2, t_total=t)
    back = invert_linear(nondimensionalize(p), w)
    assert back["a_ho"] == pytest.approx(oscillator_length(p.m, w), rel=1e-12)
    for k, v in (("epsilon", eps), ("alpha", alpha), ("gamma2", g2), ("t_total", t)):
        assert back[k] == pytest.approx(v, rel=1e-12, abs=1e-300)


# steps are relative so that both inputs are distinct doubles well above rounding
@given(lo=st.floats(1e-25, 1e-5), factor=st.floats(1e-9, 1e3))
def test_g1_strictly_increasing(lo, factor):
    a = nondimensionalize(rb85_mfr(gamma1=lo)).g1_t
    b = nondimensionalize(rb85_mfr(gamma1=lo * (1 + factor))).g1_t
    assert b > a > 0


@given(lo=st.floats(1e-3, 1e15), factor=st.floats(1e-9, 1e3))
def test_g2_strictly_increasing(lo, factor):
    a = nondimensionalize(rb85_mfr(gamma2=lo)).g2_t
    assert nondimensionalize(rb85_mfr(gamma2=lo * (1 + factor))).g2_t > a > 0


@given(a=st.floats(-1e-7, 1e-7))
def test_sign_preservation(a):
    d = nondimensionalize(rb85_mfr(a=a))
    assert math.copysign(1.0, d.g_a) == math.copysign(1.0, a) or a == 0.0
    assert d.chi_t >= 0
