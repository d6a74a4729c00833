"""Density surfaces at chosen decay strengths.

Runs relax -> evolve -> classify for each (g1_t, g2_t) pair on top of a base
configuration and keeps the profile snapshots (tau, x, densities, fields) so
the evolution of the atomic and molecular peaks can be plotted.

    python scripts/regime_profiles.py --point 1e-6,1e-3 --point 1e-2,0.1 [--config ...]
"""

import argparse
from pathlib import Path

from hybridbec.config import load_config
from hybridbec.sweep import run_single

HERE = Path(__file__).resolve().parent


def point(text):
    g1, g2 = (float(v) for v in text.split(","))
    return g1, g2


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--config", type=Path, default=HERE / "configs" / "decay_sweep.ini")
    ap.add_argument("--point", type=point, action="append",
                    help="g1_t,g2_t (repeatable); default: the two extreme sweep corners")
    ap.add_argument("--out", type=Path, default=Path("regime-profiles"))
    args = ap.parse_args()

    base = load_config(args.config)
    points = args.point or [(1e-6, 1e-3), (1e-2, 1.0)]
    for g1, g2 in points:
        cfg = base.with_decays(g1, g2, "dimensionless")
        out = args.out / f"g1_{g1:g}_g2_{g2:g}"
        res = run_single(cfg, out_dir=out)
        v = res.verdict
        print(f"g1={g1:g} g2={g2:g}: atom {v.label_atom.value} (cv {v.atom.cv:.3f}), "
              f"molecule {v.label_mol.value} (cv {v.mol.cv:.3f}) -> {out / 'snapshots.csv'}")


if __name__ == "__main__":
    main()
