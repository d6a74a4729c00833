"""Stability matrix over (g1_t, g2_t) and its trend checks.

Runs the sweep described by a config with a [sweep] section, prints the
label matrix, and reports the structural properties of the matrix: labels at
the weakest-decay corner, monotonicity of the atomic label along g1 and of
the molecular label along g2, and which cells are St/St or Qs/St.

    python scripts/run_decay_sweep.py [--config scripts/configs/decay_sweep.ini] [--parallel 4]
"""

import argparse
import os
from pathlib import Path

from hybridbec.config import load_sweep
from hybridbec.sweep import run_sweep

HERE = Path(__file__).resolve().parent
RANK = {"Un": 0, "Qs": 1, "St": 2}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--config", type=Path, default=HERE / "configs" / "decay_sweep.ini")
    ap.add_argument("--parallel", type=int, default=min(4, os.cpu_count() or 1))
    ap.add_argument("--out", type=Path, default=Path("decay-sweep"))
    args = ap.parse_args()

    spec = load_sweep(args.config)
    rows = run_sweep(spec, parallelism=args.parallel, out_dir=args.out)
    print((args.out / "table.txt").read_text())

    g1s = sorted(set(spec.gamma1_values))
    g2s = sorted(set(spec.gamma2_values))
    lab = {(r["gamma1"], r["gamma2"]): (r["label_atom"], r["label_mol"]) for r in rows}
    corner = lab[(g1s[0], g2s[0])]
    atom_breaks = [(g1s[i], g2) for g2 in g2s for i in range(len(g1s) - 1)
                   if RANK[lab[(g1s[i], g2)][0]] > RANK[lab[(g1s[i + 1], g2)][0]]]
    mol_breaks = [(g1, g2s[j]) for g1 in g1s for j in range(len(g2s) - 1)
                  if RANK[lab[(g1, g2s[j])][1]] > RANK[lab[(g1, g2s[j + 1])][1]]]
    print(f"weakest-decay corner: {corner[0]}/{corner[1]}")
    print(f"atomic label degrades with g1 at: {atom_breaks or 'nowhere'}")
    print(f"molecular label degrades with g2 at: {mol_breaks or 'nowhere'}")
    print(f"St/St cells: {[k for k, v in lab.items() if v == ('St', 'St')] or 'none'}")
    print(f"Qs/St cells: {[k for k, v in lab.items() if v == ('Qs', 'St')] or 'none'}")


if __name__ == "__main__":
    main()
