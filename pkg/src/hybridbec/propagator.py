"""Crank-Nicolson propagation of the coupled radial atom-molecule equations.

In oscillator units, with phi = r psi,

  i d_t phi_a = [-1/2 d_xx + x^2/2 + (g_a |phi_a|^2 + g_am |phi_m|^2) / x^2] phi_a
                + chi phi_m conj(phi_a) / x - i (alpha + g1 |phi_a|^2 / x^2) phi_a

  i d_t phi_m = [-1/4 d_xx + x^2 + eps + (g_m |phi_m|^2 + g_am |phi_a|^2) / x^2] phi_m
                + (chi / 2) phi_a^2 / x - i g2 phi_m

A step is the symmetric composition  C(h/2) D(h) C(h/2):

* D is Crank-Nicolson for everything that is diagonal in the species index
  (kinetic, trap, detuning, mean-field potentials and all decays).  The
  density-dependent potentials are taken at the half step by fixed-point
  passes, so each pass is one tridiagonal solve per species.
* C is the local atom-molecule exchange.  With the coupling frozen at its
  half-step value the pointwise 2x2 problem is integrated exactly; it is
  self-adjoint in the (1, 2) weighted inner product, so n_a + 2 n_m is
  preserved to roundoff however many fixed-point passes are used.

The same kernel runs in imaginary time (d_t -> -i d_t) for relaxation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .grid import FieldPair, RadialGrid
from .stability import EvolutionRecord, sample
from .tridiag import thomas
from .units import DimensionlessParams

BLOWUP_AMPLITUDE = 1e6


class BlowUpError(ArithmeticError):
    """Non-finite or runaway field during propagation."""

    def __init__(self, tau: float, index: int, record=None):
        super().__init__(f"field blew up at tau={tau:.6g}, grid index {index}")
        self.tau = tau
        self.index = index
        self.record = record


@dataclass(frozen=True)
class StepSettings:
    dtau: float = 2.5e-4
    fp_iters: int = 2
    snapshot_stride: int = 4000
    series_stride: int = 200

    def __post_init__(self):
        if not self.dtau > 0:
            raise ValueError("dtau must be positive")
        if self.fp_iters < 1:
            raise ValueError("fp_iters must be at least 1")
        if self.snapshot_stride < 1 or self.series_stride < 1:
            raise ValueError("strides must be at least 1")


def pack_params(p: DimensionlessParams) -> np.ndarray:
    return np.array([p.g_a, p.g_m, p.g_am, p.chi_t, p.eps_t, p.alpha_t, p.g1_t, p.g2_t])


# ---------------------------------------------------------------- kernels


@numba.njit(cache=True)
def _exchange(a, m, x, chi, h, imag_time, fp_iters, a0, m0):
    """Local atom-molecule exchange over a step h (in place)."""
    n = a.shape[0]
    for j in range(n):
        a0[j] = a[j]
        m0[j] = m[j]
    if chi == 0.0:
        return
    for it in range(fp_iters):
        for j in range(n):
            if it == 0:
                ab = a0[j]
            else:
                ab = 0.5 * (a0[j] + a[j])
            q = chi / x[j]
            k = q * ab.conjugate()
            kp = q * ab
            w2 = 0.5 * q * q * (ab.real * ab.real + ab.imag * ab.imag)
            if imag_time:
                w = math.sqrt(w2)
                c = math.cosh(h * w)
                s = math.sinh(h * w) / w if w > 0.0 else h
                a[j] = c * a0[j] - s * k * m0[j]
                m[j] = c * m0[j] - s * 0.5 * kp * a0[j]
            else:
                # Cayley form: c^2 + w^2 s^2 = 1 exactly
                t2 = 0.25 * h * h * w2
                inv = 1.0 / (1.0 + t2)
                c = (1.0 - t2) * inv
                s = h * inv
                a[j] = c * a0[j] - 1j * s * k * m0[j]
                m[j] = c * m0[j] - 1j * s * 0.5 * kp * a0[j]


@numba.njit(cache=True)
def _diagonal(a, m, x, dx, prm, h, imag_time, fp_iters, a0, m0, va, vm, lo, dg, up, rhs, cp):
    """Crank-Nicolson for the species-diagonal part over a step h (in place)."""
    n = a.shape[0]
    g_a, g_m, g_am, eps = prm[0], prm[1], prm[2], prm[4]
    alpha, g1, g2 = prm[5], prm[6], prm[7]
    if imag_time:
        c = 0.5 * h + 0.0j
    else:
        c = 0.5j * h
    for j in range(n):
        a0[j] = a[j]
        m0[j] = m[j]
    inv_dx2 = 1.0 / (dx * dx)
    for it in range(fp_iters):
        for j in range(n):
            if it == 0:
                ab = a0[j]
                mb = m0[j]
            else:
                ab = 0.5 * (a0[j] + a[j])
                mb = 0.5 * (m0[j] + m[j])
            ix2 = 1.0 / (x[j] * x[j])
            da = (ab.real * ab.real + ab.imag * ab.imag) * ix2
            dm = (mb.real * mb.real + mb.imag * mb.imag) * ix2
            va[j] = 0.5 * x[j] * x[j] + g_a * da + g_am * dm - 1j * (alpha + g1 * da)
            vm[j] = x[j] * x[j] + eps + g_m * dm + g_am * da - 1j * g2
        for species in range(2):
            if species == 0:
                kin = 0.5 * inv_dx2
                old = a0
                pot = va
                new = a
            else:
                kin = 0.25 * inv_dx2
                old = m0
                pot = vm
                new = m
            off = -kin
            for j in range(n):
                hd = 2.0 * kin + pot[j]
                s = hd * old[j]
                if j > 0:
                    s += off * old[j - 1]
                if j < n - 1:
                    s += off * old[j + 1]
                rhs[j] = old[j] - c * s
                dg[j] = 1.0 + c * hd
                if j < n - 1:
                    lo[j] = c * off
                    up[j] = c * off
            row = thomas(lo, dg, up, rhs, new, cp)
            if row >= 0:
                return row
    return -1


@numba.njit(cache=True)
def _blown(a, m):
    n = a.shape[0]
    for j in range(n):
        ra = a[j].real * a[j].real + a[j].imag * a[j].imag
        rm = m[j].real * m[j].real + m[j].imag * m[j].imag
        if not (ra < BLOWUP_AMPLITUDE**2 and rm < BLOWUP_AMPLITUDE**2):
            return j
    return -1


@numba.njit(cache=True)
def run_steps(a, m, x, dx, prm, h, nsteps, imag_time, fp_iters, work):
    """Advance ``nsteps`` steps of size h in place.

    Returns (steps_done, bad_index); bad_index >= 0 flags a blow-up or a
    singular pivot on the step that failed.
    """
    a0, m0, va, vm, lo, dg, up, rhs, cp = (work[0], work[1], work[2], work[3], work[4],
                                           work[5], work[6], work[7], work[8])
    chi = prm[3]
    for s in range(nsteps):
        _exchange(a, m, x, chi, 0.5 * h, imag_time, fp_iters, a0, m0)
        row = _diagonal(a, m, x, dx, prm, h, imag_time, fp_iters, a0, m0, va, vm, lo, dg, up, rhs, cp)
        if row >= 0:
            return s, row
        _exchange(a, m, x, chi, 0.5 * h, imag_time, fp_iters, a0, m0)
        bad = _blown(a, m)
        if bad >= 0:
            return s + 1, bad
    return nsteps, -1


def make_workspace(nx: int) -> np.ndarray:
    return np.zeros((9, nx), dtype=np.complex128)


# ------------------------------------------------------------- public API


def step(fields: FieldPair, params: DimensionlessParams, grid: RadialGrid,
         settings: StepSettings, scratch: np.ndarray | None = None) -> FieldPair:
    """One real-time step of size settings.dtau; the input is not modified."""
    out = fields.copy()
    if scratch is None:
        scratch = make_workspace(grid.nx)
    done, bad = run_steps(out.phi_a, out.phi_m, grid.x, grid.dx, pack_params(params),
                          settings.dtau, 1, False, settings.fp_iters, scratch)
    if bad >= 0:
        raise BlowUpError(fields.tau + settings.dtau, int(bad))
    out.tau = fields.tau + settings.dtau
    return out


def evolve(initial: FieldPair, params: DimensionlessParams, grid: RadialGrid,
           settings: StepSettings, tau_end: float, observer=None,
           keep_snapshots: bool = True) -> EvolutionRecord:
    """Step from initial.tau to tau_end, sampling observables along the way.

    The last step is shortened so the run ends exactly at tau_end.  On
    blow-up a BlowUpError is raised with the partial record attached.
    """
    if tau_end < initial.tau:
        raise ValueError("tau_end precedes the initial time")
    state = initial.copy()
    prm = pack_params(params)
    work = make_workspace(grid.nx)
    rows = [sample(state, grid)]
    snaps = [state.copy()] if keep_snapshots else []
    if observer is not None:
        observer(rows[-1])

    span = tau_end - initial.tau
    n_full = int(math.floor(span / settings.dtau * (1 + 1e-12)))
    h_last = span - n_full * settings.dtau
    if h_last < 1e-9 * settings.dtau:
        h_last = 0.0

    def fail(bad):
        rec = EvolutionRecord(np.array(rows, dtype=float), snaps, terminated_early="blow-up")
        raise BlowUpError(state.tau, int(bad), rec)

    def record(force=False):
        if force or done % settings.series_stride == 0:
            rows.append(sample(state, grid))
            if observer is not None:
                observer(rows[-1])
        if keep_snapshots and (force or done % settings.snapshot_stride == 0):
            snaps.append(state.copy())

    done = 0
    while done < n_full:
        chunk = min(settings.series_stride - done % settings.series_stride, n_full - done)
        if keep_snapshots:
            chunk = min(chunk, settings.snapshot_stride - done % settings.snapshot_stride)
        k, bad = run_steps(state.phi_a, state.phi_m, grid.x, grid.dx, prm, settings.dtau,
                           chunk, False, settings.fp_iters, work)
        done += k
        state.tau = initial.tau + done * settings.dtau
        if bad >= 0:
            fail(bad)
        record(force=(done == n_full and h_last == 0.0))
    if h_last > 0.0:
        k, bad = run_steps(state.phi_a, state.phi_m, grid.x, grid.dx, prm, h_last,
                           1, False, settings.fp_iters, work)
        state.tau = tau_end
        if bad >= 0:
            fail(bad)
        record(force=True)
    if len(rows) > 1:
        rows[-1] = (tau_end,) + tuple(rows[-1][1:])
        if keep_snapshots:
            snaps[-1].tau = tau_end
    return EvolutionRecord(np.array(rows, dtype=float), snaps, None)
