"""Radial mesh, the two-component state, and simple diagnostics on it.

The mesh excludes the origin: x_j = j * dx for j = 1..nx, with phi = 0
imposed at x = 0 and x = x_max + dx through the difference stencil.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RadialGrid:
    nx: int
    dx: float
    x: np.ndarray = field(repr=False, compare=False)

    @property
    def x_max(self) -> float:
        return self.nx * self.dx

    def check_vacuum(self, fields: FieldPair, rel: float = 1e-12) -> bool:
        """Warn if either density is not negligible at the outer wall."""
        ok = True
        for name, phi in (("atomic", fields.phi_a), ("molecular", fields.phi_m)):
            dens = np.abs(phi) ** 2
            peak = dens.max()
            if peak > 0 and dens[-1] > rel * peak:
                warnings.warn(f"{name} density at x_max is {dens[-1] / peak:.2e} of peak; enlarge x_max")
                ok = False
        return ok


def build_grid(nx: int, x_max: float) -> RadialGrid:
    if int(nx) != nx or nx < 16:
        raise ConfigError(f"grid needs nx >= 16, got {nx}")
    if not x_max > 0:
        raise ConfigError(f"grid needs x_max > 0, got {x_max}")
    nx = int(nx)
    dx = x_max / nx
    x = dx * np.arange(1, nx + 1, dtype=float)
    x.setflags(write=False)
    return RadialGrid(nx=nx, dx=dx, x=x)


@dataclass
class FieldPair:
    phi_a: np.ndarray
    phi_m: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        self.phi_a = np.asarray(self.phi_a, dtype=complex)
        self.phi_m = np.asarray(self.phi_m, dtype=complex)
        if self.phi_a.shape != self.phi_m.shape or self.phi_a.ndim != 1:
            raise ValueError("phi_a and phi_m must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(self.phi_a)) and np.all(np.isfinite(self.phi_m))):
            raise ValueError("fields must be finite")

    def copy(self) -> FieldPair:
        return FieldPair(self.phi_a.copy(), self.phi_m.copy(), self.tau)


def initial_gaussian(grid: RadialGrid, width_a: float = 1.0, width_m: float = 1.0,
                     mol_fraction: float = 0.0) -> FieldPair:
    """Radial Gaussians x exp(-x^2 / 2w^2), normalized so that n_a + 2 n_m = 1."""
    if not (width_a > 0 and width_m > 0):
        raise ConfigError("seed widths must be positive")
    if not 0.0 <= mol_fraction <= 1.0:
        raise ConfigError(f"mol_fraction must lie in [0, 1], got {mol_fraction}")
    x = grid.x
    shape_a = x * np.exp(-x**2 / (2 * width_a**2))
    shape_m = x * np.exp(-x**2 / (2 * width_m**2))
    na0 = grid.dx * np.sum(shape_a**2)
    nm0 = grid.dx * np.sum(shape_m**2)
    amp_a = math.sqrt((1.0 - mol_fraction) / na0)
    amp_m = math.sqrt(0.5 * mol_fraction / nm0)
    return FieldPair(amp_a * shape_a, amp_m * shape_m, 0.0)


def norms(fields: FieldPair, grid: RadialGrid) -> tuple[float, float]:
    """Trapezoid integrals of |phi|^2; both endpoint values are zero."""
    n_a = grid.dx * float(np.sum(fields.phi_a.real**2 + fields.phi_a.imag**2))
    n_m = grid.dx * float(np.sum(fields.phi_m.real**2 + fields.phi_m.imag**2))
    return n_a, n_m


def total_norm(fields: FieldPair, grid: RadialGrid) -> float:
    n_a, n_m = norms(fields, grid)
    return n_a + 2.0 * n_m


SNAPSHOT_HEADER = ["tau", "x", "dens_a", "dens_m", "re_a", "im_a", "re_m", "im_m"]


def snapshot_rows(fields: FieldPair, grid: RadialGrid):
    x = grid.x
    dens_a = np.abs(fields.phi_a) ** 2 / x**2
    dens_m = np.abs(fields.phi_m) ** 2 / x**2
    for j in range(grid.nx):
        yield (fields.tau, x[j], dens_a[j], dens_m[j], fields.phi_a[j].real, fields.phi_a[j].imag,
               fields.phi_m[j].real, fields.phi_m[j].imag)


def write_snapshots(path, snapshots, grid: RadialGrid) -> None:
    """Write profile snapshots (dens = |phi|^2 / x^2) as one CSV."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SNAPSHOT_HEADER)
        for snap in snapshots:
            for row in snapshot_rows(snap, grid):
                w.writerow([repr(float(v)) for v in row])


def read_snapshots(path) -> list[tuple[float, np.ndarray, FieldPair]]:
    """Inverse of write_snapshots: list of (tau, x, fields)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    out = []
    for tau in np.unique(data[:, 0]):
        block = data[data[:, 0] == tau]
        fp = FieldPair(block[:, 4] + 1j * block[:, 5], block[:, 6] + 1j * block[:, 7], float(tau))
        out.append((float(tau), block[:, 1], fp))
    return out
