"""Decay-free initial state by imaginary-time relaxation.

The relaxation reuses the real-time stepper with t -> -i t and puts the
state back on n_a + 2 n_m = 1 after every renorm_every steps.  Two ways of
doing so are offered:

``"split"`` (default)
    Both fields are scaled by the same factor, leaving the atom/molecule
    split to the coupling.  The fixed point has equal chemical potentials
    for the two species (up to an O(dtau_imag) bias of the discrete
    relaxation), so it is not stationary under the real-time
    equations: switching on the dynamics starts the coherent
    atom-molecule oscillation.
``"gauge"``
    phi_a -> e^s phi_a, phi_m -> e^{2s} phi_m, the imaginary direction of
    the phase symmetry of the equations.  The fixed point obeys
    H_a phi_a = mu phi_a, H_m phi_m = 2 mu phi_m and is a true stationary state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import FieldPair, RadialGrid, norms
from .propagator import make_workspace, pack_params, run_steps
from .units import DimensionlessParams


class DivergenceError(ArithmeticError):
    def __init__(self, iteration: int):
        super().__init__(f"relaxation diverged at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class RelaxationSettings:
    dtau_imag: float = 1e-4
    max_iters: int = 2_000_000
    mu_tol: float = 1e-9
    renorm_every: int = 1
    check_every: int = 100
    normalization: str = "split"

    def __post_init__(self):
        if self.normalization not in ("split", "gauge"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if not self.dtau_imag > 0:
            raise ValueError("dtau_imag must be positive")
        if not self.mu_tol > 0:
            raise ValueError("mu_tol must be positive")
        if self.max_iters < 1 or self.renorm_every < 1 or self.check_every < 1:
            raise ValueError("iteration counts must be at least 1")


@dataclass
class GroundStateResult:
    fields: FieldPair
    mu_a: float
    mu_m: float
    iterations: int
    converged: bool
    energy: float = float("nan")

    def summary(self, grid: RadialGrid) -> dict:
        n_a, n_m = norms(self.fields, grid)
        return {
            "mu_a": _jsonable(self.mu_a),
            "mu_m": _jsonable(self.mu_m),
            "iterations": self.iterations,
            "converged": self.converged,
            "n_a": n_a,
            "n_m": n_m,
        }


def _jsonable(v: float):
    return None if math.isnan(v) else v


def _laplacian(phi: np.ndarray, dx: float) -> np.ndarray:
    lap = -2.0 * phi
    lap[1:] += phi[:-1]
    lap[:-1] += phi[1:]
    return lap / dx**2


def apply_hamiltonians(fields: FieldPair, params: DimensionlessParams, grid: RadialGrid):
    """Decay-free H_a phi_a and H_m phi_m on the grid, including the exchange terms."""
    x = grid.x
    a, m = fields.phi_a, fields.phi_m
    da = np.abs(a) ** 2 / x**2
    dm = np.abs(m) ** 2 / x**2
    ha = (-0.5 * _laplacian(a, grid.dx) + (0.5 * x**2 + params.g_a * da + params.g_am * dm) * a
          + params.chi_t * m * np.conj(a) / x)
    hm = (-0.25 * _laplacian(m, grid.dx)
          + (x**2 + params.eps_t + params.g_m * dm + params.g_am * da) * m
          + 0.5 * params.chi_t * a**2 / x)
    return ha, hm


def chemical_potential(fields: FieldPair, params: DimensionlessParams,
                       grid: RadialGrid) -> tuple[float, float]:
    """<phi|H phi> / <phi|phi> per species; NaN for an empty species."""
    ha, hm = apply_hamiltonians(fields, params, grid)
    out = []
    for phi, hphi in ((fields.phi_a, ha), (fields.phi_m, hm)):
        nrm = float(np.sum(np.abs(phi) ** 2))
        out.append(float(np.real(np.vdot(phi, hphi))) / nrm if nrm > 0 else float("nan"))
    return out[0], out[1]


def energy(fields: FieldPair, params: DimensionlessParams, grid: RadialGrid) -> float:
    """Mean-field energy whose variations generate the decay-free equations."""
    x, dx = grid.x, grid.dx
    a, m = fields.phi_a, fields.phi_m
    da = np.abs(a) ** 2
    dm = np.abs(m) ** 2
    kin = (0.5 * np.real(np.vdot(a, -_laplacian(a, dx)))
           + 0.25 * np.real(np.vdot(m, -_laplacian(m, dx))))
    pot = np.sum(0.5 * x**2 * da + (x**2 + params.eps_t) * dm)
    inter = np.sum((0.5 * params.g_a * da**2 + 0.5 * params.g_m * dm**2
                    + params.g_am * da * dm) / x**2)
    exch = params.chi_t * np.sum(np.real(np.conj(m) * a**2) / x)
    return float(dx * (kin + pot + inter + exch))


def renormalize(a: np.ndarray, m: np.ndarray, dx: float, mode: str = "split") -> None:
    """Rescale in place so that n_a + 2 n_m = 1."""
    n_a = dx * float(np.sum(a.real**2 + a.imag**2))
    n_m = dx * float(np.sum(m.real**2 + m.imag**2))
    total = n_a + 2.0 * n_m
    if not total > 0:
        raise ZeroDivisionError("cannot renormalize an empty state")
    if mode == "split":
        f = 1.0 / math.sqrt(total)
        a *= f
        m *= f
        return
    # positive root of n_a y + 2 n_m y^2 = 1, in the cancellation-free form
    y = 2.0 / (n_a + math.sqrt(n_a * n_a + 8.0 * n_m))
    a *= math.sqrt(y)
    m *= y


def fix_phase(fields: FieldPair) -> FieldPair:
    """Gauge-rotate so the atomic (else molecular) peak amplitude is real and positive."""
    a, m = fields.phi_a, fields.phi_m
    if np.any(a != 0):
        j = int(np.argmax(np.abs(a)))
        theta = -np.angle(a[j])
    elif np.any(m != 0):
        j = int(np.argmax(np.abs(m)))
        theta = -0.5 * np.angle(m[j])
    else:
        theta = 0.0
    return FieldPair(a * np.exp(1j * theta), m * np.exp(2j * theta), fields.tau)


def relax(params: DimensionlessParams, grid: RadialGrid, seed: FieldPair,
          settings: RelaxationSettings | None = None, observer=None) -> GroundStateResult:
    """Imaginary-time relaxation with every decay switched off.

    Converged when both chemical potentials drift by less than mu_tol per
    unit imaginary time between checks (so also by less than mu_tol between
    consecutive iterations).  ``observer(iteration, mu_a, mu_m, energy)`` is
    called at every check.
    """
    settings = settings or RelaxationSettings()
    p0 = params.without_decays()
    prm = pack_params(p0)
    a = seed.phi_a.astype(complex).copy()
    m = seed.phi_m.astype(complex).copy()
    if not (np.any(a != 0) or np.any(m != 0)):
        raise ValueError("seed must be nonzero")
    work = make_workspace(grid.nx)
    renormalize(a, m, grid.dx, settings.normalization)

    def mus():
        return chemical_potential(FieldPair(a, m), p0, grid)

    mu_prev = mus()
    it = 0
    converged = False
    interval = settings.check_every * settings.dtau_imag
    while it < settings.max_iters:
        target = min(it + settings.check_every, settings.max_iters)
        while it < target:
            k = min(settings.renorm_every, target - it)
            done, bad = run_steps(a, m, grid.x, grid.dx, prm, settings.dtau_imag, k,
                                  True, 1, work)
            if bad >= 0 or not (np.all(np.isfinite(a)) and np.all(np.isfinite(m))):
                raise DivergenceError(it + done)
            renormalize(a, m, grid.dx, settings.normalization)
            it += k
        mu = mus()
        if observer is not None:
            observer(it, mu[0], mu[1], energy(FieldPair(a, m), p0, grid))
        drift = [abs(u - v) / interval for u, v in zip(mu, mu_prev) if not math.isnan(u)]
        mu_prev = mu
        if drift and max(drift) < settings.mu_tol:
            converged = True
            break
    fields = fix_phase(FieldPair(a, m, 0.0))
    mu_a, mu_m = chemical_potential(fields, p0, grid)
    return GroundStateResult(fields, mu_a, mu_m, it, converged, energy(fields, p0, grid))
