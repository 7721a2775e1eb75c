"""Limit density on a grid for a few Marchenko-Pastur ratios and a separable model.

Writes one CSV per model with columns x,density.
"""

import argparse
from pathlib import Path

import numpy as np

from sepclt.solver import ModelParams, density_grid, support_bounds
from sepclt.spectra import SpectralMeasure


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/density")
    ap.add_argument("--points", type=int, default=400)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    one = SpectralMeasure.point_mass(1.0)
    models = {f"mp_c{c:g}": ModelParams(c, one, one) for c in (0.25, 0.5, 1.0, 2.0)}
    models["separable"] = ModelParams(
        0.5,
        SpectralMeasure.from_atoms([(1.0, 0.5), (2.0, 0.5)]),
        SpectralMeasure.from_atoms([(1.0, 0.5), (3.0, 0.5)]),
    )
    models["negative_t1"] = ModelParams(0.25, SpectralMeasure.from_atoms([(-1.0, 0.25), (1.0, 0.75)]), one)

    for name, p in models.items():
        lo, hi = support_bounds(p.c, p.h1, p.h2)
        pad = 0.1 * (hi - lo)
        xs = np.linspace(lo - pad, hi + pad, args.points)
        xs = xs[np.abs(xs) > 1e-3]  # skip the atom at zero
        d = density_grid(p, xs)
        np.savetxt(out / f"{name}.csv", np.column_stack([xs, d]), delimiter=",", header="x,density", comments="")
        print(f"{name}: bracket [{lo:.4f}, {hi:.4f}], trapezoid mass {np.trapezoid(d, xs):.4f} (c = {p.c:g})")


if __name__ == "__main__":
    main()
