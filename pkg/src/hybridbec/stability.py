"""Observables of an evolution and the Stable / Quasistable / Unstable verdict."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import FieldPair, RadialGrid, norms

SERIES_COLUMNS = ("tau", "n_a", "n_m", "peak_a", "peak_m", "width_a", "width_m")


def peak_and_width(fields: FieldPair, grid: RadialGrid) -> tuple[float, float, float, float]:
    """Peak density max |phi|^2 / x^2 and rms radius of each species.

    Returns (peak_a, peak_m, width_a, width_m); an empty species has width 0.
    """
    x = grid.x
    out = []
    for phi in (fields.phi_a, fields.phi_m):
        dens = phi.real**2 + phi.imag**2
        nrm = float(np.sum(dens))
        peak = float(np.max(dens / x**2))
        width = math.sqrt(float(np.sum(x**2 * dens)) / nrm) if nrm > 0 else 0.0
        out.append((peak, width))
    return out[0][0], out[1][0], out[0][1], out[1][1]


def sample(fields: FieldPair, grid: RadialGrid) -> tuple:
    n_a, n_m = norms(fields, grid)
    pa, pm, wa, wm = peak_and_width(fields, grid)
    return (fields.tau, n_a, n_m, pa, pm, wa, wm)


@dataclass
class EvolutionRecord:
    """Scalar time series plus optional profile snapshots of one run.

    ``series`` has one row per sample with columns SERIES_COLUMNS.
    ``terminated_early`` is None for a completed run, else the reason.
    """

    series: np.ndarray
    snapshots: list = field(default_factory=list)
    terminated_early: str | None = None

    def __post_init__(self):
        self.series = np.asarray(self.series, dtype=float).reshape(-1, len(SERIES_COLUMNS))

    @property
    def tau(self) -> np.ndarray:
        return self.series[:, 0]

    def column(self, name: str) -> np.ndarray:
        return self.series[:, SERIES_COLUMNS.index(name)]

    def write_series(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SERIES_COLUMNS)
            for row in self.series:
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def read_series(cls, path) -> EvolutionRecord:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data)


class Label(str, enum.Enum):
    UNSTABLE = "Un"
    QUASISTABLE = "Qs"
    STABLE = "St"

    @property
    def rank(self) -> int:
        return {"Un": 0, "Qs": 1, "St": 2}[self.value]


@dataclass(frozen=True)
class Thresholds:
    cv_lo: float = 0.02
    cv_hi: float = 0.15
    trend_max: float = 0.1
    reg_min: float = 0.6
    floor_frac: float = 0.05
    window_fraction: float = 0.5
    min_samples: int = 32

    def __post_init__(self):
        if not 0 < self.window_fraction <= 1:
            raise ValueError("window_fraction must lie in (0, 1]")
        if not 0 <= self.cv_lo <= self.cv_hi:
            raise ValueError("need 0 <= cv_lo <= cv_hi")


@dataclass(frozen=True)
class SpeciesMetrics:
    cv: float
    trend: float
    regularity: float
    collapsed: bool
    reason: str


@dataclass(frozen=True)
class StabilityVerdict:
    label_atom: Label
    label_mol: Label
    atom: SpeciesMetrics
    mol: SpeciesMetrics
    terminated_early: str | None = None

    def to_json(self, gamma1=None, gamma2=None) -> dict:
        return {
            "gamma1": gamma1,
            "gamma2": gamma2,
            "label_atom": self.label_atom.value,
            "label_mol": self.label_mol.value,
            "cv_a": _finite_or_none(self.atom.cv),
            "cv_m": _finite_or_none(self.mol.cv),
            "trend_a": _finite_or_none(self.atom.trend),
            "trend_m": _finite_or_none(self.mol.trend),
            "reg_a": _finite_or_none(self.atom.regularity),
            "reg_m": _finite_or_none(self.mol.regularity),
            "terminated_early": self.terminated_early,
        }


def _finite_or_none(v: float):
    return v if math.isfinite(v) else None


def spectral_regularity(values: np.ndarray) -> float:
    """Share of mean-removed periodogram power in the strongest bin and its neighbours."""
    y = values - values.mean()
    power = np.abs(np.fft.rfft(y)) ** 2
    power = power[1:]
    total = power.sum()
    if not total > 0:
        return 0.0
    k = int(np.argmax(power))
    return float(power[max(k - 1, 0):k + 2].sum() / total)


def window_metrics(tau: np.ndarray, peak: np.ndarray, th: Thresholds) -> SpeciesMetrics:
    nan = float("nan")
    if not np.all(np.isfinite(peak)):
        return SpeciesMetrics(nan, nan, nan, False, "non-finite")
    mean = float(peak.mean())
    if not mean > 0:
        return SpeciesMetrics(nan, nan, nan, True, "empty")
    cv = float(peak.std() / mean)
    span = float(tau[-1] - tau[0])
    slope = float(np.polyfit(tau - tau[0], peak, 1)[0]) if span > 0 else 0.0
    trend = slope * span / mean
    collapsed = bool(peak[-1] < th.floor_frac * peak[0])
    return SpeciesMetrics(cv, trend, spectral_regularity(peak), collapsed, "")


def label_for(m: SpeciesMetrics, th: Thresholds) -> tuple[Label, str]:
    if m.reason:
        return Label.UNSTABLE, m.reason
    if m.collapsed:
        return Label.UNSTABLE, "collapsed"
    if abs(m.trend) > th.trend_max:
        return Label.UNSTABLE, "drift"
    if m.cv > th.cv_hi:
        return Label.UNSTABLE, "large fluctuation"
    if m.cv <= th.cv_lo:
        return Label.STABLE, ""
    if m.regularity >= th.reg_min:
        return Label.QUASISTABLE, ""
    return Label.UNSTABLE, "irregular"


def classify(record: EvolutionRecord, thresholds: Thresholds | None = None) -> StabilityVerdict:
    """Label each species from the peak-density series in the final window.

    Unstable: early termination, too few samples, collapse, drift beyond
    trend_max, or cv above cv_hi.  Stable: cv <= cv_lo.  Quasistable:
    cv in (cv_lo, cv_hi] with a dominant regular oscillation.
    """
    th = thresholds or Thresholds()
    n = len(record.series)
    n_win = int(math.ceil(th.window_fraction * n))
    metrics = []
    for col in ("peak_a", "peak_m"):
        if record.terminated_early:
            reason = record.terminated_early
        elif n_win < th.min_samples:
            reason = "insufficient-data"
        else:
            reason = ""
        if reason:
            nan = float("nan")
            metrics.append(SpeciesMetrics(nan, nan, nan, False, reason))
            continue
        tau = record.tau[n - n_win:]
        metrics.append(window_metrics(tau, record.column(col)[n - n_win:], th))
    (la, ra), (lm, rm) = (label_for(m, th) for m in metrics)
    atom = SpeciesMetrics(**{**asdict(metrics[0]), "reason": ra})
    mol = SpeciesMetrics(**{**asdict(metrics[1]), "reason": rm})
    return StabilityVerdict(la, lm, atom, mol, record.terminated_early)
