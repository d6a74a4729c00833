"""Single-run pipeline and the (gamma1, gamma2) sweep.

A run is relax (decays off) -> evolve (decays on) -> classify, with every
artifact written into one directory:

    ground.csv  ground.json  series.csv  snapshots.csv  verdict.json  manifest.json

A sweep relaxes the shared initial state once, then runs every cell of the
Cartesian product in its own forked process (at most ``parallelism`` alive
at a time).  A cell whose process dies or raises is recorded as Unstable
with the reason, so the aggregate is always complete.  The aggregate CSV and
the text matrix are written once, by the parent, after all cells finish.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import multiprocessing as mp
from multiprocessing.connection import wait
import os
import platform
import subprocess
import time
import traceback
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, SweepSpec
from .grid import ConfigError, FieldPair, RadialGrid, build_grid, initial_gaussian, read_snapshots, total_norm, write_snapshots
from .ground import GroundStateResult, chemical_potential, energy, relax
from .propagator import BlowUpError, evolve
from .stability import SERIES_COLUMNS, EvolutionRecord, Label, StabilityVerdict, classify

log = logging.getLogger(__name__)

AGGREGATE_COLUMNS = ("gamma1", "gamma2", "label_atom", "label_mol", "cv_a", "cv_m",
                     "trend_a", "trend_m", "reg_a", "reg_m", "terminated_early")


@dataclass
class RunResult:
    ground: GroundStateResult
    record: EvolutionRecord
    verdict: StabilityVerdict
    norm_drift: float


def code_version() -> str:
    """Package version plus the git commit when run from a checkout."""
    here = Path(__file__).resolve().parent
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], cwd=here, capture_output=True,
                             text=True, timeout=5)
        if rev.returncode == 0:
            return f"{__version__}+g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


def write_manifest(out: Path, config: RunConfig, wall: float, extra: dict | None = None) -> None:
    _dump_json(out / "manifest.json", {
        "tool": "hybridbec",
        "version": code_version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": wall,
        "config": config.echo(),
        "provenance": [list(p) for p in config.provenance],
        **(extra or {}),
    })


# ------------------------------------------------------------ single runs


def load_initial(path, grid: RadialGrid) -> FieldPair:
    """Last snapshot of a profile CSV, checked against the grid."""
    snaps = read_snapshots(path)
    if not snaps:
        raise ConfigError(f"{path}: no profile rows")
    tau, x, fields = snaps[-1]
    if len(x) != grid.nx or not np.allclose(x, grid.x, rtol=1e-12, atol=0):
        raise ConfigError(f"{path}: profile grid does not match nx={grid.nx}, x_max={grid.x_max}")
    fields.tau = 0.0
    return fields


def ground_state(config: RunConfig, grid: RadialGrid | None = None) -> GroundStateResult:
    grid = grid or build_grid(config.grid.nx, config.grid.x_max)
    s = config.seed
    seed = initial_gaussian(grid, s.width_a, s.width_m, s.mol_fraction)
    gs = relax(config.params, grid, seed, config.relaxation)
    if not gs.converged:
        log.warning("relaxation stopped after %d iterations without meeting mu_tol", gs.iterations)
    grid.check_vacuum(gs.fields)
    return gs


def write_ground(out: Path, gs: GroundStateResult, grid: RadialGrid) -> None:
    write_snapshots(out / "ground.csv", [gs.fields], grid)
    _dump_json(out / "ground.json", {**gs.summary(grid), "energy": gs.energy})


def ground_from_file(config: RunConfig, grid: RadialGrid, path) -> GroundStateResult:
    fields = load_initial(path, grid)
    p0 = config.params.without_decays()
    mu_a, mu_m = chemical_potential(fields, p0, grid)
    return GroundStateResult(fields, mu_a, mu_m, 0, True, energy(fields, p0, grid))


def evolve_and_classify(config: RunConfig, gs: GroundStateResult, grid: RadialGrid,
                        keep_snapshots: bool = True, observer=None):
    """Evolve from the ground state; a blow-up yields the partial record."""
    blow = None
    try:
        record = evolve(gs.fields, config.params, grid, config.stepping, config.tau_end,
                        observer=observer, keep_snapshots=keep_snapshots)
    except BlowUpError as exc:
        log.error("%s", exc)
        record, blow = exc.record, exc
    verdict = classify(record, config.thresholds)
    return record, verdict, blow


def run_single(config: RunConfig, out_dir=None, ground: GroundStateResult | None = None,
               keep_snapshots: bool = True, observer=None) -> RunResult:
    """Relax, evolve with decays on, classify, and write all artifacts.

    Raises BlowUpError (after writing the partial record and its verdict)
    if the evolution diverged.
    """
    t0 = time.perf_counter()
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = build_grid(config.grid.nx, config.grid.x_max)
    if ground is None:
        ground = (ground_from_file(config, grid, config.initial) if config.initial
                  else ground_state(config, grid))
    write_ground(out, ground, grid)
    with open(out / "series.csv", "w", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(SERIES_COLUMNS)

        def on_sample(row):
            writer.writerow([repr(float(v)) for v in row])
            stream.flush()
            if observer is not None:
                observer(row)

        record, verdict, blow = evolve_and_classify(config, ground, grid, keep_snapshots, on_sample)
    start = total_norm(ground.fields, grid)
    drift = float(record.column("n_a")[-1] + 2 * record.column("n_m")[-1] - start)
    if not config.params.has_decay():
        log.info("combined norm n_a + 2 n_m drifted by %.3e", drift)
    record.write_series(out / "series.csv")
    if keep_snapshots:
        write_snapshots(out / "snapshots.csv", record.snapshots, grid)
    _dump_json(out / "verdict.json", verdict.to_json(config.params.g1_t, config.params.g2_t))
    write_manifest(out, config, time.perf_counter() - t0,
                   {"norm_drift": drift, "terminated_early": record.terminated_early})
    if blow is not None:
        raise blow
    return RunResult(ground, record, verdict, drift)


# ----------------------------------------------------------------- sweeps


def _cell_name(i: int, j: int) -> str:
    return f"cell_{i:03d}_{j:03d}"


def _failed_verdict(gamma1: float, gamma2: float, reason: str) -> dict:
    nan = None
    return {"gamma1": gamma1, "gamma2": gamma2, "label_atom": Label.UNSTABLE.value,
            "label_mol": Label.UNSTABLE.value, "cv_a": nan, "cv_m": nan, "trend_a": nan,
            "trend_m": nan, "reg_a": nan, "reg_m": nan, "terminated_early": reason}


def _run_cell(config: RunConfig, ground: GroundStateResult, gamma1: float, gamma2: float,
              mode: str, cell_dir: Path, fault=None) -> None:
    """Body of one sweep cell; always runs in its own process."""
    if fault is not None:
        fault(gamma1, gamma2)
    cfg = config.with_decays(gamma1, gamma2, mode)
    grid = build_grid(cfg.grid.nx, cfg.grid.x_max)
    record, verdict, _ = evolve_and_classify(cfg, ground, grid, keep_snapshots=False)
    record.write_series(cell_dir / "series.csv")
    tmp = cell_dir / "verdict.json.tmp"
    _dump_json(tmp, verdict.to_json(gamma1, gamma2))
    os.replace(tmp, cell_dir / "verdict.json")


def _cell_entry(config, ground, gamma1, gamma2, mode, cell_dir, fault):
    try:
        _run_cell(config, ground, gamma1, gamma2, mode, Path(cell_dir), fault)
    except BaseException:  # noqa: BLE001 - reported to the parent via the exit code
        (Path(cell_dir) / "error.txt").write_text(traceback.format_exc())
        os._exit(1)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_aggregate(path: Path, rows: list[dict]) -> None:
    rows = sorted(rows, key=lambda r: (r["gamma1"], r["gamma2"]))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in AGGREGATE_COLUMNS])


def read_aggregate(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def render_matrix(rows: list[dict], gamma1_values, gamma2_values, mode: str) -> str:
    """Table-style text matrix: one row per gamma1, one column per gamma2."""
    cell = {(r["gamma1"], r["gamma2"]): f'{r["label_atom"]} & {r["label_mol"]}' for r in rows}
    unit1, unit2 = ("m^3 rad/s", "rad/s") if mode == "physical" else ("g1_t", "g2_t")
    head = [f"gamma1 ({unit1}) \\ gamma2 ({unit2})"] + [f"{g:.4g}" for g in gamma2_values]
    body = [[f"{g1:.4g}"] + [cell.get((g1, g2), "?") for g2 in gamma2_values]
            for g1 in gamma1_values]
    widths = [max(len(r[k]) for r in [head, *body]) for k in range(len(head))]
    lines = ["  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip() for r in [head, *body]]
    lines.append("Un = unstable, Qs = quasistable, St = stable (atom & molecule)")
    return "\n".join(lines) + "\n"


def run_sweep(spec: SweepSpec, parallelism: int = 1, out_dir=None,
              ground: GroundStateResult | None = None, fault=None) -> list[dict]:
    """Run every (gamma1, gamma2) cell and write the sweep outputs.

    ``fault(gamma1, gamma2)``, if given, is called inside each cell process
    before it starts (used to inject failures).  Returns the aggregate rows
    sorted by (gamma1, gamma2).
    """
    if parallelism < 1:
        raise ValueError("parallelism must be at least 1")
    t0 = time.perf_counter()
    base = spec.base
    out = Path(out_dir if out_dir is not None else base.output_dir)
    cells_dir = out / "cells"
    cells_dir.mkdir(parents=True, exist_ok=True)
    grid = build_grid(base.grid.nx, base.grid.x_max)
    if ground is None:
        ground = (ground_from_file(base, grid, base.initial) if base.initial
                  else ground_state(base, grid))
    write_ground(out, ground, grid)

    g1s = sorted(set(spec.gamma1_values))
    g2s = sorted(set(spec.gamma2_values))
    jobs = []
    for (i, g1), (j, g2) in product(enumerate(g1s), enumerate(g2s)):
        d = cells_dir / _cell_name(i, j)
        d.mkdir(exist_ok=True)
        for stale in ("verdict.json", "error.txt"):
            (d / stale).unlink(missing_ok=True)
        jobs.append((g1, g2, d))

    ctx = mp.get_context("fork")
    pending = list(jobs)
    running: dict = {}
    status: dict = {}
    while pending or running:
        while pending and len(running) < parallelism:
            g1, g2, d = pending.pop(0)
            p = ctx.Process(target=_cell_entry, args=(base, ground, g1, g2, spec.mode, str(d), fault),
                            daemon=True)
            p.start()
            running[p.sentinel] = (p, g1, g2, d)
        ready = wait(list(running))
        for s in ready:
            p, g1, g2, d = running.pop(s)
            p.join()
            status[(g1, g2)] = p.exitcode

    rows = []
    for g1, g2, d in jobs:
        vfile = d / "verdict.json"
        code = status[(g1, g2)]
        if code == 0 and vfile.is_file():
            row = json.loads(vfile.read_text())
        else:
            if code is not None and code < 0:
                reason = f"worker killed by signal {-code}"
            else:
                reason = f"worker failed (exit code {code})"
            log.error("cell gamma1=%g gamma2=%g: %s", g1, g2, reason)
            row = _failed_verdict(g1, g2, reason)
            _dump_json(vfile, row)
        row["gamma1"], row["gamma2"] = g1, g2
        rows.append(row)
    rows.sort(key=lambda r: (r["gamma1"], r["gamma2"]))
    write_aggregate(out / "aggregate.csv", rows)
    (out / "table.txt").write_text(render_matrix(rows, g1s, g2s, spec.mode))
    write_manifest(out, base, time.perf_counter() - t0, {
        "sweep": {"mode": spec.mode, "gamma1_values": g1s, "gamma2_values": g2s,
                  "parallelism": parallelism},
    })
    return rows
