"""Physical inputs and their conversion to trap (oscillator) units.

Lengths are measured in a_ho = sqrt(hbar / m omega) and times in 1/omega.
The radial fields are scaled as psi(r) = sqrt(N / a_ho**3) * phi(x) / x, so
that int (|phi_a|^2 + 2 |phi_m|^2) dx = 1 and N (together with the 4 pi of
the solid angle) ends up inside the interaction, coupling and cubic-loss
coefficients.

All quoted rates (chi, epsilon, alpha, Gamma1, Gamma2) are taken as angular
rates already divided by hbar. For chi this is confirmed by the closed-form
coupling, which reproduces the quoted 3107.377e-7 m^{3/2} Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from scipy import constants as _sc


class DomainError(ValueError):
    """An input lies outside the domain of a conversion formula."""


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _sc.hbar
    bohr_radius: float = _sc.physical_constants["Bohr radius"][0]
    bohr_magneton: float = _sc.physical_constants["Bohr magneton"][0]

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise DomainError(f"{f.name} must be positive")


CODATA = PhysicalConstants()
GAUSS = 1e-4  # tesla


@dataclass(frozen=True)
class PhysicalParams:
    """Experiment inputs in SI units (rates in rad/s, gamma1 in m^3 rad/s)."""

    m: float
    omega: float
    n_atoms: float
    a: float
    a_bg: float
    delta_B: float
    delta_mu: float
    epsilon: float = 0.0
    alpha: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    t_total: float = 0.0

    def __post_init__(self):
        for name in ("m", "omega", "n_atoms"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("alpha", "gamma1", "gamma2", "t_total"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be nonnegative, got {getattr(self, name)!r}")
        _check_chi_radicand(self.a_bg, self.delta_mu, self.delta_B)


@dataclass(frozen=True)
class DimensionlessParams:
    """Coefficients of the working equations in oscillator units.

    ``a_ho`` is kept only so that results can be mapped back to metres.
    """

    g_a: float = 0.0
    g_m: float = 0.0
    g_am: float = 0.0
    chi_t: float = 0.0
    eps_t: float = 0.0
    alpha_t: float = 0.0
    g1_t: float = 0.0
    g2_t: float = 0.0
    a_ho: float = 1.0
    tau_total: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise DomainError(f"{f.name} must be finite, got {v!r}")
        for name in ("alpha_t", "g1_t", "g2_t", "tau_total"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be nonnegative, got {getattr(self, name)!r}")
        if self.a_ho <= 0:
            raise DomainError("a_ho must be positive")

    def without_decays(self) -> DimensionlessParams:
        return replace(self, alpha_t=0.0, g1_t=0.0, g2_t=0.0)

    def has_decay(self) -> bool:
        return self.alpha_t > 0 or self.g1_t > 0 or self.g2_t > 0


def oscillator_length(m: float, omega: float, const: PhysicalConstants = CODATA) -> float:
    if m <= 0 or omega <= 0:
        raise DomainError(f"oscillator length needs m > 0 and omega > 0 (got m={m}, omega={omega})")
    return math.sqrt(const.hbar / (m * omega))


def coupling_lambda(a: float, m: float, const: PhysicalConstants = CODATA) -> float:
    """Contact interaction strength 4 pi hbar^2 a / m in J m^3."""
    if m <= 0:
        raise DomainError(f"mass must be positive, got {m}")
    return 4.0 * math.pi * const.hbar**2 * a / m


def _check_chi_radicand(a_bg, delta_mu, delta_B):
    if a_bg * delta_mu * delta_B < 0:
        signs = ", ".join(
            f"{n}{'<0' if v < 0 else '>=0'}"
            for n, v in (("a_bg", a_bg), ("delta_mu", delta_mu), ("delta_B", delta_B))
        )
        raise DomainError(f"negative radicand in atom-molecule coupling ({signs})")


def coupling_chi(
    a_bg: float,
    delta_mu: float,
    delta_B: float,
    m: float,
    const: PhysicalConstants = CODATA,
) -> float:
    """Atom-molecule coupling sqrt(8 pi hbar^2 a_bg dmu dB / m) / hbar.

    Returned in rad/s * m^{3/2}, the unit in which the coupling is quoted.
    """
    if m <= 0:
        raise DomainError(f"mass must be positive, got {m}")
    _check_chi_radicand(a_bg, delta_mu, delta_B)
    radicand = 8.0 * math.pi * const.hbar**2 * a_bg * delta_mu * delta_B / m
    return math.sqrt(radicand) / const.hbar


def nondimensionalize(p: PhysicalParams, const: PhysicalConstants = CODATA) -> DimensionlessParams:
    a_ho = oscillator_length(p.m, p.omega, const)
    g = 4.0 * math.pi * p.a * p.n_atoms / a_ho
    chi = coupling_chi(p.a_bg, p.delta_mu, p.delta_B, p.m, const)
    density_scale = p.n_atoms / a_ho**3
    return DimensionlessParams(
        g_a=g,
        g_m=g,
        g_am=g,
        chi_t=chi * math.sqrt(density_scale) / p.omega,
        eps_t=p.epsilon / p.omega,
        alpha_t=p.alpha / p.omega,
        g1_t=p.gamma1 * density_scale / p.omega,
        g2_t=p.gamma2 / p.omega,
        a_ho=a_ho,
        tau_total=p.omega * p.t_total,
    )


def invert_linear(d: DimensionlessParams, omega: float) -> dict:
    """Recover the linearly-scaled physical inputs from trap units."""
    return {
        "a_ho": d.a_ho,
        "t_total": d.tau_total / omega,
        "epsilon": d.eps_t * omega,
        "alpha": d.alpha_t * omega,
        "gamma2": d.g2_t * omega,
    }


def rb85_mfr(const: PhysicalConstants = CODATA, **overrides) -> PhysicalParams:
    """85Rb near the 155 G Feshbach resonance, trap at 12.69 Hz."""
    base = dict(
        m=1.4112568490e-25,
        omega=2.0 * math.pi * 12.69,
        n_atoms=17100.0,
        a=570.0 * const.bohr_radius,
        a_bg=-450.0 * const.bohr_radius,
        delta_B=11.0 * GAUSS,
        delta_mu=-2.23 * const.bohr_magneton,
        epsilon=2.0e5,
        alpha=2.1739e4,
        gamma1=0.0,
        gamma2=0.0,
        t_total=3.75,
    )
    base.update(overrides)
    return PhysicalParams(**base)


CHI_QUOTED = 3107.377e-7  # m^{3/2} rad/s, as reported for the 85Rb preset


def provenance_table(p: PhysicalParams, const: PhysicalConstants = CODATA) -> list[tuple[str, float, str]]:
    """Rows of (name, value, formula) for every derived coefficient."""
    d = nondimensionalize(p, const)
    return [
        ("a_ho [m]", d.a_ho, "sqrt(hbar/(m*omega))"),
        ("lambda_a [J m^3]", coupling_lambda(p.a, p.m, const), "4*pi*hbar^2*a/m"),
        ("chi [m^1.5 rad/s]", coupling_chi(p.a_bg, p.delta_mu, p.delta_B, p.m, const),
         "sqrt(8*pi*hbar^2*a_bg*dmu*dB/m)/hbar"),
        ("g_a = g_m = g_am", d.g_a, "4*pi*a*N/a_ho"),
        ("chi_t", d.chi_t, "chi*sqrt(N/a_ho^3)/omega"),
        ("eps_t", d.eps_t, "epsilon/omega"),
        ("alpha_t", d.alpha_t, "alpha/omega"),
        ("g1_t", d.g1_t, "Gamma1*N/(a_ho^3*omega)"),
        ("g2_t", d.g2_t, "Gamma2/omega"),
        ("tau_total", d.tau_total, "omega*t_total"),
    ]
