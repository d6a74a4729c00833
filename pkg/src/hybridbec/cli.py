"""``gp`` command line.

    gp <subcommand> [--config PATH] [--out DIR] [--full] [--parallel N] [--preset rb85-mfr]

Subcommands: describe, ground, evolve, run, sweep, chi-check.
Exit codes: 0 success, 1 chi-check mismatch, 2 configuration error,
3 numerical divergence (single-run commands), 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

from .config import PRESETS, RunConfig, load_config, load_sweep
from .grid import ConfigError, build_grid
from .ground import DivergenceError
from .propagator import BlowUpError
from .sweep import ground_from_file, ground_state, run_single, run_sweep, write_ground
from .units import CHI_QUOTED, DomainError, coupling_chi, provenance_table

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3, 4
CHI_TOLERANCE = 1e-3

log = logging.getLogger("hybridbec")


def _resolve(args, cfg: RunConfig) -> RunConfig:
    if args.out:
        cfg = replace(cfg, output_dir=Path(args.out))
    if args.full:
        cfg = cfg.full_horizon()
    return cfg


def cmd_describe(args, cfg: RunConfig) -> int:
    if cfg.physical is not None:
        print("derived coefficients (physical -> oscillator units)")
        for name, value, formula in provenance_table(cfg.physical):
            print(f"  {name:<20} = {value:<13.6g} {formula}")
    print("working coefficients")
    for name, value in asdict(cfg.params).items():
        mark = "  (override)" if name in cfg.overrides else ""
        print(f"  {name:<10} = {value:.6g}{mark}")
    g = cfg.grid
    print(f"grid: nx={g.nx} x_max={g.x_max:g} dx={g.x_max / g.nx:.4g}")
    print(f"stepping: dtau={cfg.stepping.dtau:g} tau_end={cfg.tau_end:g}"
          f" ({int(round(cfg.tau_end / cfg.stepping.dtau))} steps)")
    return EXIT_OK


def cmd_chi_check(args, cfg: RunConfig) -> int:
    phys = cfg.physical if cfg.physical is not None else PRESETS["rb85-mfr"]()
    chi = coupling_chi(phys.a_bg, phys.delta_mu, phys.delta_B, phys.m)
    rel = (chi - CHI_QUOTED) / CHI_QUOTED
    ok = abs(rel) <= CHI_TOLERANCE
    print(f"chi computed = {chi:.6e} m^(3/2)/s")
    print(f"chi quoted   = {CHI_QUOTED:.6e} m^(3/2)/s")
    print(f"relative error = {rel:+.3e} (tolerance {CHI_TOLERANCE:g}): {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_ground(args, cfg: RunConfig) -> int:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    grid = build_grid(cfg.grid.nx, cfg.grid.x_max)
    gs = ground_state(cfg, grid)
    write_ground(out, gs, grid)
    print(json.dumps(gs.summary(grid)))
    return EXIT_OK


def cmd_evolve(args, cfg: RunConfig) -> int:
    grid = build_grid(cfg.grid.nx, cfg.grid.x_max)
    src = cfg.initial or cfg.output_dir / "ground.csv"
    if not Path(src).is_file():
        raise FileNotFoundError(f"initial state {src} not found (run `gp ground` or set run.initial)")
    gs = ground_from_file(cfg, grid, src)
    res = run_single(cfg, ground=gs)
    print(json.dumps(res.verdict.to_json(cfg.params.g1_t, cfg.params.g2_t)))
    return EXIT_OK


def cmd_run(args, cfg: RunConfig) -> int:
    res = run_single(cfg)
    print(json.dumps(res.verdict.to_json(cfg.params.g1_t, cfg.params.g2_t)))
    return EXIT_OK


def cmd_sweep(args, cfg: RunConfig) -> int:
    if not args.config:
        raise ConfigError("sweep needs --config with a [sweep] section")
    spec = load_sweep(args.config, preset=args.preset)
    spec = replace(spec, base=_resolve(args, spec.base))
    run_sweep(spec, parallelism=args.parallel, out_dir=spec.base.output_dir)
    print((spec.base.output_dir / "table.txt").read_text(), end="")
    return EXIT_OK


COMMANDS = {
    "describe": cmd_describe,
    "ground": cmd_ground,
    "evolve": cmd_evolve,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "chi-check": cmd_chi_check,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gp", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=list(COMMANDS))
    ap.add_argument("--config", type=Path, help="INI run configuration")
    ap.add_argument("--out", type=Path, help="output directory (default: run.output_dir, "
                    "then $GP_OUTPUT_DIR, then ./gp-output)")
    ap.add_argument("--full", action="store_true", help="evolve to the full experimental horizon")
    ap.add_argument("--parallel", type=int, default=1, help="concurrent sweep cells")
    ap.add_argument("--preset", choices=list(PRESETS), help="built-in physical parameter set")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.parallel < 1:
            raise ConfigError("--parallel must be at least 1")
        cfg = load_config(args.config, preset=args.preset)
        cfg = _resolve(args, cfg)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, DomainError) as exc:
        print(f"gp: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, BlowUpError) as exc:
        print(f"gp: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"gp: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
