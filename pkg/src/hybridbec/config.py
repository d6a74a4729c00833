"""Run configuration: INI-style ``key = value`` files.

Grammar
-------
Sections (all optional)::

    [run]           preset, tau_end, output_dir, initial
    [physical]      m, omega, n_atoms, a, a_bg, delta_B, delta_mu,
                    epsilon, alpha, gamma1, gamma2, t_total
    [dimensionless] g_a, g_m, g_am, chi_t, eps_t, alpha_t, g1_t, g2_t,
                    a_ho, tau_total
    [grid]          nx, x_max
    [relaxation]    dtau_imag, max_iters, mu_tol, renorm_every,
                    check_every, normalization
    [stepping]      dtau, fp_iters, snapshot_stride, series_stride
    [classify]      cv_lo, cv_hi, trend_max, reg_min, floor_frac,
                    window_fraction, min_samples
    [seed]          width_a, width_m, mol_fraction
    [sweep]         mode (dimensionless | physical), gamma1_values,
                    gamma2_values

Values are numbers, optionally written ``2pi*12.69`` or followed by one
unit word: ``a0`` (Bohr radius), ``muB`` (Bohr magneton), ``G`` (gauss).
Lists are comma separated.  ``;`` and ``#`` start comments.

Physical inputs are converted first; any coefficient also given under
[dimensionless] is then replaced by the dimensionless value (with a
warning when both were set explicitly).
"""

from __future__ import annotations

import configparser
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .grid import ConfigError
from .ground import RelaxationSettings
from .propagator import StepSettings
from .stability import Thresholds
from .units import (
    CODATA,
    GAUSS,
    DimensionlessParams,
    DomainError,
    PhysicalParams,
    nondimensionalize,
    rb85_mfr,
)

log = logging.getLogger(__name__)

PRESETS = {"rb85-mfr": rb85_mfr}

DESK_TAU_END = 60.0

UNITS = {
    "a0": CODATA.bohr_radius,
    "muB": CODATA.bohr_magneton,
    "G": GAUSS,
}

# which physical inputs feed each dimensionless coefficient
SOURCES = {
    "g_a": ("a",), "g_m": ("a",), "g_am": ("a",),
    "chi_t": ("a_bg", "delta_mu", "delta_B"),
    "eps_t": ("epsilon",), "alpha_t": ("alpha",),
    "g1_t": ("gamma1",), "g2_t": ("gamma2",),
    "tau_total": ("t_total",),
}


@dataclass(frozen=True)
class GridSpec:
    nx: int = 2048
    x_max: float = 20.0


@dataclass(frozen=True)
class SeedSpec:
    width_a: float = 1.0
    width_m: float = 1.0
    mol_fraction: float = 0.1


@dataclass(frozen=True)
class SweepSpec:
    gamma1_values: tuple
    gamma2_values: tuple
    mode: str
    base: RunConfig

    def __post_init__(self):
        if self.mode not in ("physical", "dimensionless"):
            raise ConfigError(f"sweep.mode must be 'physical' or 'dimensionless', got {self.mode!r}")
        if not self.gamma1_values or not self.gamma2_values:
            raise ConfigError("sweep value lists must be nonempty")
        for v in (*self.gamma1_values, *self.gamma2_values):
            if not (v >= 0 and math.isfinite(v)):
                raise ConfigError(f"sweep values must be finite and nonnegative, got {v}")
        if self.mode == "physical" and self.base.physical is None:
            raise ConfigError("physical sweep needs a [physical] block or preset")


@dataclass(frozen=True)
class RunConfig:
    params: DimensionlessParams
    physical: PhysicalParams | None = None
    overrides: dict = field(default_factory=dict)
    grid: GridSpec = GridSpec()
    relaxation: RelaxationSettings = RelaxationSettings()
    stepping: StepSettings = StepSettings()
    thresholds: Thresholds = Thresholds()
    seed: SeedSpec = SeedSpec()
    tau_end: float = DESK_TAU_END
    output_dir: Path = Path("gp-output")
    initial: Path | None = None
    provenance: tuple = ()

    def with_decays(self, gamma1: float, gamma2: float, mode: str) -> RunConfig:
        """Copy with the two induced decays replaced (physical or trap units)."""
        if mode == "dimensionless":
            ov = {**self.overrides, "g1_t": gamma1, "g2_t": gamma2}
            return replace(self, params=replace(self.params, g1_t=gamma1, g2_t=gamma2), overrides=ov)
        phys = replace(self.physical, gamma1=gamma1, gamma2=gamma2)
        d = nondimensionalize(phys)
        ov = {k: v for k, v in self.overrides.items() if k not in ("g1_t", "g2_t")}
        return replace(self, physical=phys, params=replace(self.params, g1_t=d.g1_t, g2_t=d.g2_t),
                       overrides=ov)

    def full_horizon(self) -> RunConfig:
        if not self.params.tau_total > 0:
            raise ConfigError("--full needs t_total (physical) or tau_total (dimensionless)")
        return replace(self, tau_end=self.params.tau_total)

    def echo(self) -> dict:
        out = {
            "params": asdict(self.params),
            "physical": asdict(self.physical) if self.physical else None,
            "overrides": dict(self.overrides),
            "grid": asdict(self.grid),
            "relaxation": asdict(self.relaxation),
            "stepping": asdict(self.stepping),
            "thresholds": asdict(self.thresholds),
            "seed": asdict(self.seed),
            "tau_end": self.tau_end,
            "initial": str(self.initial) if self.initial else None,
        }
        return out


def parse_value(text: str, where: str) -> float:
    s = text.strip()
    factor = 1.0
    if s.startswith("2pi*"):
        factor, s = 2.0 * math.pi, s[4:].strip()
    parts = s.split()
    if len(parts) == 2 and parts[1] in UNITS:
        factor *= UNITS[parts[1]]
        s = parts[0]
    elif len(parts) != 1:
        raise ConfigError(f"{where}: cannot parse {text!r}")
    try:
        return factor * float(s)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {text!r}") from None


def parse_list(text: str, where: str) -> tuple:
    return tuple(parse_value(t, where) for t in text.split(",") if t.strip())


def _section_to(cls, parser, name, prov, conv=None):
    """Build dataclass ``cls`` from section ``name``; log defaulted fields."""
    known = {f.name: f for f in fields(cls)}
    given = dict(parser.items(name)) if parser.has_section(name) else {}
    kwargs = {}
    for key, raw in given.items():
        if key not in known:
            raise ConfigError(f"{name}.{key}: unknown key")
        where = f"{name}.{key}"
        if conv and key in conv:
            kwargs[key] = conv[key](raw)
        else:
            default = known[key].default
            if isinstance(default, bool):
                kwargs[key] = raw.strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(default, int):
                v = parse_value(raw, where)
                if v != int(v):
                    raise ConfigError(f"{where}: expected an integer, got {raw!r}")
                kwargs[key] = int(v)
            else:
                kwargs[key] = parse_value(raw, where)
    for key, f in known.items():
        if key not in kwargs:
            prov.append((f"{name}.{key}", f.default, "default"))
        else:
            prov.append((f"{name}.{key}", kwargs[key], "file"))
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{name}] {exc}") from exc


def load_config(path=None, preset: str | None = None, text: str | None = None) -> RunConfig:
    """Parse, validate and resolve a run configuration.

    ``preset`` (or ``[run] preset``) seeds the physical block from a
    built-in parameter set; keys in [physical] then override it.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    if text is not None:
        parser.read_string(text)
    elif path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            parser.read(p)
        except configparser.Error as exc:
            raise ConfigError(f"{p}: {exc}") from exc
    prov: list = []
    run = dict(parser.items("run")) if parser.has_section("run") else {}
    unknown = set(run) - {"preset", "tau_end", "output_dir", "initial"}
    if unknown:
        raise ConfigError(f"run.{sorted(unknown)[0]}: unknown key")
    preset = preset or run.get("preset")

    physical = None
    phys_keys = dict(parser.items("physical")) if parser.has_section("physical") else {}
    if preset or phys_keys:
        values = {}
        if preset:
            if preset not in PRESETS:
                raise ConfigError(f"run.preset: unknown preset {preset!r} (known: {', '.join(PRESETS)})")
            values = asdict(PRESETS[preset]())
            prov.extend((f"physical.{k}", v, f"preset {preset}") for k, v in values.items())
        allowed = {f.name for f in fields(PhysicalParams)}
        for key, raw in phys_keys.items():
            if key not in allowed:
                raise ConfigError(f"physical.{key}: unknown key")
            values[key] = parse_value(raw, f"physical.{key}")
            prov.append((f"physical.{key}", values[key], "file"))
        try:
            physical = PhysicalParams(**values)
        except TypeError as exc:
            raise ConfigError(f"[physical] incomplete: {exc}") from exc
        except DomainError as exc:
            raise ConfigError(f"[physical] {exc}") from exc

    overrides = {}
    if parser.has_section("dimensionless"):
        allowed = {f.name for f in fields(DimensionlessParams)}
        for key, raw in parser.items("dimensionless"):
            if key not in allowed:
                raise ConfigError(f"dimensionless.{key}: unknown key")
            overrides[key] = parse_value(raw, f"dimensionless.{key}")
            prov.append((f"dimensionless.{key}", overrides[key], "file"))

    try:
        base = nondimensionalize(physical) if physical else DimensionlessParams()
        for key in overrides:
            srcs = SOURCES.get(key, ())
            if physical is not None and any(k in phys_keys for k in srcs):
                log.warning("dimensionless %s overrides physical %s", key, "/".join(srcs))
        params = replace(base, **overrides)
    except DomainError as exc:
        raise ConfigError(f"[dimensionless] {exc}") from exc

    grid = _section_to(GridSpec, parser, "grid", prov)
    if grid.nx < 16 or not grid.x_max > 0:
        raise ConfigError(f"grid: need nx >= 16 and x_max > 0, got nx={grid.nx}, x_max={grid.x_max}")
    relaxation = _section_to(RelaxationSettings, parser, "relaxation", prov,
                             conv={"normalization": str.strip})
    stepping = _section_to(StepSettings, parser, "stepping", prov)
    thresholds = _section_to(Thresholds, parser, "classify", prov)
    seed = _section_to(SeedSpec, parser, "seed", prov)
    if not 0 <= seed.mol_fraction <= 1 or seed.width_a <= 0 or seed.width_m <= 0:
        raise ConfigError("seed: widths must be positive and mol_fraction in [0, 1]")

    tau_end = parse_value(run["tau_end"], "run.tau_end") if "tau_end" in run else DESK_TAU_END
    if tau_end < 0:
        raise ConfigError("run.tau_end must be nonnegative")
    out = run.get("output_dir") or os.environ.get("GP_OUTPUT_DIR") or "gp-output"
    initial = Path(run["initial"]) if run.get("initial") else None
    prov.append(("run.tau_end", tau_end, "file" if "tau_end" in run else "default"))
    prov.append(("run.output_dir", out, "file" if "output_dir" in run else "default"))
    for path_, value, origin in prov:
        if origin == "default":
            log.info("default %s = %r", path_, value)
    return RunConfig(params=params, physical=physical, overrides=overrides, grid=grid,
                     relaxation=relaxation, stepping=stepping, thresholds=thresholds,
                     seed=seed, tau_end=tau_end, output_dir=Path(out), initial=initial,
                     provenance=tuple(prov))


def load_sweep(path=None, preset: str | None = None, text: str | None = None) -> SweepSpec:
    base = load_config(path, preset=preset, text=text)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    if text is not None:
        parser.read_string(text)
    else:
        parser.read(path)
    if not parser.has_section("sweep"):
        raise ConfigError("missing [sweep] section")
    sec = dict(parser.items("sweep"))
    for key in ("gamma1_values", "gamma2_values"):
        if key not in sec:
            raise ConfigError(f"sweep.{key}: required")
    return SweepSpec(
        gamma1_values=parse_list(sec["gamma1_values"], "sweep.gamma1_values"),
        gamma2_values=parse_list(sec["gamma2_values"], "sweep.gamma2_values"),
        mode=sec.get("mode", "dimensionless").strip(),
        base=base,
    )
