"""Limit mean and covariance of x, x^2, x^3 for several models, printed as a table."""

import argparse
import json
from pathlib import Path

from sepclt.clt import clt_summary
from sepclt.functions import monomial, parse_function
from sepclt.solver import ModelParams
from sepclt.spectra import SpectralMeasure

ONE = SpectralMeasure.point_mass(1.0)
MODELS = {
    "mp_c0.5": ModelParams(0.5, ONE, ONE),
    "mp_c2": ModelParams(2.0, ONE, ONE),
    "separable_c0.5": ModelParams(
        0.5,
        SpectralMeasure.from_atoms([(1.0, 0.5), (2.0, 0.5)]),
        SpectralMeasure.from_atoms([(1.0, 0.5), (3.0, 0.5)]),
    ),
    "negative_t1": ModelParams(0.25, SpectralMeasure.from_atoms([(-1.0, 0.25), (1.0, 0.75)]), ONE),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/clt")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    functions = [monomial(1), monomial(2), monomial(3), parse_function("log(3+x)")]
    for name, p in MODELS.items():
        s = clt_summary(p, functions)
        (out / f"{name}.json").write_text(json.dumps(s.to_dict(), indent=2))
        print(f"== {name}")
        for i, label in enumerate(s.labels):
            row = "  ".join(f"{v:12.6f}" for v in s.cov[i])
            print(f"{label:>10}  mean {s.mean[i]:12.6f}  cov {row}")


if __name__ == "__main__":
    main()
