"""Command line entry point: ``sepclt {density,clt,simulate,verify} CONFIG --out DIR``.

Exit codes: 0 success, 1 configuration error, 2 computation error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .acceptance import VerifyOptions, run_all
from .clt import CltEntryError, clt_summary
from .errors import SepCltError
from .functions import parse_function
from .montecarlo import EntryDistribution, SimConfig, run_experiment
from .solver import ModelParams, density_grid
from .spectra import SpectralMeasure, expand_to_values

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_VERIFY = 0, 1, 2, 3

_MEASURE = {
    "type": "object",
    "properties": {
        "atoms": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        },
        "label": {"type": "string"},
    },
    "required": ["atoms"],
    "additionalProperties": False,
}

_MODEL = {
    "type": "object",
    "properties": {"c": {"type": "number", "exclusiveMinimum": 0}, "h1": _MEASURE, "h2": _MEASURE},
    "required": ["c", "h1", "h2"],
    "additionalProperties": False,
}

_FUNCTION = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "object",
            "properties": {
                "kind": {"enum": ["polynomial", "log", "exp"]},
                "coefficients": {"type": "array", "items": {"type": "number"}},
                "scale": {"type": "number"},
                "shift": {"type": "number"},
                "label": {"type": "string"},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
    ]
}

_SPECTRUM = {"oneOf": [_MEASURE, {"type": "array", "items": {"type": "number"}, "minItems": 1}]}

SCHEMAS: dict[str, dict[str, Any]] = {
    "density": {
        "type": "object",
        "properties": {
            "model": _MODEL,
            "grid": {
                "type": "object",
                "properties": {
                    "x_min": {"type": "number"},
                    "x_max": {"type": "number"},
                    "points": {"type": "integer", "minimum": 1},
                },
                "required": ["x_min", "x_max", "points"],
                "additionalProperties": False,
            },
            "v_probe": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["model", "grid"],
        "additionalProperties": False,
    },
    "clt": {
        "type": "object",
        "properties": {
            "model": _MODEL,
            "functions": {"type": "array", "items": _FUNCTION},
            "margin_scale": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["model", "functions"],
        "additionalProperties": False,
    },
    "simulate": {
        "type": "object",
        "properties": {
            "bigN": {"type": "integer", "minimum": 1},
            "n": {"type": "integer", "minimum": 1},
            "t1": _SPECTRUM,
            "t2": _SPECTRUM,
            "entry": {"enum": ["gaussian", "three_point"]},
            "reps": {"type": "integer", "minimum": 1},
            "master_seed": {"type": "integer", "minimum": 0},
            "haar_conjugate": {"type": "boolean"},
            "threads": {"type": "integer", "minimum": 0},
            "functions": {"type": "array", "items": _FUNCTION},
        },
        "required": ["bigN", "n", "t1", "t2", "functions"],
        "additionalProperties": False,
    },
    "verify": {
        "type": "object",
        "properties": {
            "reps": {"type": "integer", "minimum": 1},
            "master_seed": {"type": "integer", "minimum": 0},
            "threads": {"type": "integer", "minimum": 0},
            "debug_wrong_centering": {"type": "boolean"},
            "checks": {"type": "array", "items": {"type": "string"}},
        },
        "additionalProperties": False,
    },
}


class ConfigError(Exception):
    pass


def validate(command: str, config: Any) -> None:
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from exc


def _model(data: dict[str, Any]) -> ModelParams:
    return ModelParams.from_dict(data)


def _spectrum(data: Any, size: int) -> tuple[float, ...]:
    if isinstance(data, dict):
        return tuple(float(v) for v in expand_to_values(SpectralMeasure.from_dict(data), size))
    return tuple(float(v) for v in data)


def _dump(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def density_to_dir(config: dict[str, Any], out: Path) -> Path:
    validate("density", config)
    try:
        params = _model(config["model"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    g = config["grid"]
    xs = np.linspace(g["x_min"], g["x_max"], g["points"])
    dens = density_grid(params, xs, config.get("v_probe", 1e-6))
    out.mkdir(parents=True, exist_ok=True)
    path = out / "density.csv"
    lines = ["x,density"] + [f"{x!r},{d!r}" for x, d in zip(xs.tolist(), dens.tolist())]
    path.write_text("\n".join(lines) + "\n")
    return path


def clt_to_dir(config: dict[str, Any], out: Path):
    validate("clt", config)
    try:
        params = _model(config["model"])
        functions = [parse_function(f) for f in config["functions"]]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    summary = clt_summary(params, functions, margin_scale=config.get("margin_scale", 1.0))
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "clt_summary.json", summary.to_dict())
    (out / "clt_summary.csv").write_text(summary.to_csv())
    return summary


def _sim_config(config: dict[str, Any]) -> SimConfig:
    return SimConfig(
        config["bigN"],
        config["n"],
        _spectrum(config["t1"], config["n"]),
        _spectrum(config["t2"], config["bigN"]),
        EntryDistribution(config.get("entry", "gaussian")),
        config.get("reps", 100),
        config.get("master_seed", 0),
        config.get("haar_conjugate", False),
        config.get("threads", 1),
    )


def _safe(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", label).strip("_") or "f"


def simulate_to_dir(config: dict[str, Any], out: Path):
    validate("simulate", config)
    try:
        cfg = _sim_config(config)
        functions = [parse_function(f) for f in config["functions"]]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = run_experiment(cfg, functions)
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "sim_result.json", result.to_dict())
    (out / "per_rep.csv").write_text(result.per_rep_csv())
    (out / "summary.csv").write_text(result.summary_csv())
    for i, label in enumerate(result.labels):
        (out / f"qq_{i}_{_safe(label)}.csv").write_text(result.qq_csv(i))
    return result


def _load(path: str | None) -> Any:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sepclt", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(SCHEMAS))
    ap.add_argument("config", nargs="?", help="JSON config file (optional for verify)")
    ap.add_argument("--out", default="out", help="output directory (default: out)")
    ap.add_argument("--seed", type=int, default=None, help="override master_seed")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    out = Path(args.out)
    try:
        if args.config is None and args.command != "verify":
            raise ConfigError(f"{args.command} needs a config file")
        config = _load(args.config)
        if args.seed is not None and args.command in ("simulate", "verify"):
            config["master_seed"] = args.seed
        if args.command == "density":
            print(density_to_dir(config, out))
        elif args.command == "clt":
            s = clt_to_dir(config, out)
            for label, m, row in zip(s.labels, s.mean, s.cov):
                print(f"{label}: mean {m:.10g}; cov row {[float(f'{v:.10g}') for v in row]}")
        elif args.command == "simulate":
            r = simulate_to_dir(config, out)
            print(r.summary_csv(), end="")
        else:
            return _verify(config, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CltEntryError as exc:
        print(f"computation error in entry ({', '.join(exc.labels)}): {exc.cause}", file=sys.stderr)
        return EXIT_COMPUTE
    except SepCltError as exc:
        print(f"computation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


def _verify(config: dict[str, Any], out: Path) -> int:
    validate("verify", config)
    defaults = VerifyOptions()
    opts = VerifyOptions(
        reps=config.get("reps", defaults.reps),
        master_seed=config.get("master_seed", defaults.master_seed),
        threads=config.get("threads", defaults.threads),
        wrong_centering=config.get("debug_wrong_centering", False),
    )
    results = run_all(opts, config.get("checks"))
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    out.mkdir(parents=True, exist_ok=True)
    _dump(
        out / "verify.json",
        [{k: getattr(r, k) for k in ("name", "expected", "got", "tol", "passed", "seconds")} for r in results],
    )
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"all {len(results)} checks passed")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
