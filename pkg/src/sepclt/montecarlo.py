"""Seeded simulation of centered linear spectral statistics.

Every replication draws from its own Philox stream keyed by
``(master_seed, rep)``, so results do not depend on thread count or
execution order.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import stats

from .clt import CltSummary, clt_summary
from .errors import DomainViolation, EigenFailure, ReplicationFailure, SepCltError
from .functions import TestFunction
from .solver import ModelParams, functional
from .spectra import SpectralMeasure, expand_to_values, from_eigenvalues

__all__ = [
    "EntryDistribution",
    "SimConfig",
    "SimResult",
    "RepRecord",
    "rep_seed",
    "sample_entries",
    "sample_matrix",
    "sample_eigenvalues",
    "lss",
    "centering_term",
    "run_experiment",
    "MAX_FAILURE_RATE",
]

MAX_FAILURE_RATE = 0.01
_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class EntryDistribution:
    """Standardized entry law with fourth moment 3: ``gaussian`` or ``three_point``."""

    kind: str = "gaussian"

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "three_point"):
            raise ValueError(f"unsupported entry distribution {self.kind!r}")

    def sample(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.standard_normal(shape)
        # +-sqrt(3) w.p. 1/6 each, 0 w.p. 2/3
        u = rng.random(shape)
        return np.where(u < 1.0 / 6.0, -_SQRT3, np.where(u < 1.0 / 3.0, _SQRT3, 0.0))

    @property
    def moments(self) -> tuple[float, float, float, float]:
        """Exact raw moments of orders one to four."""
        return (0.0, 1.0, 0.0, 3.0)


@dataclass(frozen=True)
class SimConfig:
    bigN: int
    n: int
    t1_spectrum: tuple[float, ...]
    t2_spectrum: tuple[float, ...]
    entry: EntryDistribution = EntryDistribution()
    reps: int = 100
    master_seed: int = 0
    haar_conjugate: bool = False
    threads: int = 1

    def __post_init__(self) -> None:
        if self.bigN < 1 or self.n < 1 or self.reps < 1:
            raise ValueError("bigN, n and reps must be at least 1")
        if len(self.t1_spectrum) != self.n:
            raise ValueError(f"t1_spectrum has {len(self.t1_spectrum)} entries, expected n={self.n}")
        if len(self.t2_spectrum) != self.bigN:
            raise ValueError(f"t2_spectrum has {len(self.t2_spectrum)} entries, expected bigN={self.bigN}")
        if min(self.t2_spectrum) < 0.0:
            raise ValueError("t2_spectrum must be nonnegative")
        if max(self.t1_spectrum) <= 0.0:
            raise ValueError("t1_spectrum needs a positive entry")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if self.threads < 0:
            raise ValueError("threads must be nonnegative (0 = auto)")

    @classmethod
    def from_measures(
        cls, bigN: int, n: int, h1: SpectralMeasure, h2: SpectralMeasure, **kwargs: Any
    ) -> "SimConfig":
        """Realize limiting measures as diagonal spectra of the right sizes."""
        t1 = tuple(float(v) for v in expand_to_values(h1, n))
        t2 = tuple(float(v) for v in expand_to_values(h2, bigN))
        return cls(bigN, n, t1, t2, **kwargs)

    @property
    def c_n(self) -> float:
        return self.n / self.bigN

    def finite_params(self) -> ModelParams:
        """Model at the finite ratio and empirical spectra."""
        return ModelParams(self.c_n, from_eigenvalues(self.t1_spectrum), from_eigenvalues(self.t2_spectrum))

    def to_dict(self) -> dict[str, Any]:
        return {
            "bigN": self.bigN,
            "n": self.n,
            "t1_spectrum": list(self.t1_spectrum),
            "t2_spectrum": list(self.t2_spectrum),
            "entry": self.entry.kind,
            "reps": self.reps,
            "master_seed": self.master_seed,
            "haar_conjugate": self.haar_conjugate,
            "threads": self.threads,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SimConfig":
        return cls(
            int(data["bigN"]),
            int(data["n"]),
            tuple(float(v) for v in data["t1_spectrum"]),
            tuple(float(v) for v in data["t2_spectrum"]),
            EntryDistribution(data.get("entry", "gaussian")),
            int(data.get("reps", 100)),
            int(data.get("master_seed", 0)),
            bool(data.get("haar_conjugate", False)),
            int(data.get("threads", 1)),
        )


def rep_seed(master_seed: int, rep: int) -> int:
    """64-bit key of replication ``rep``; a pure function of its arguments."""
    return int(np.random.SeedSequence([master_seed, rep]).generate_state(1, np.uint64)[0])


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _haar(rng: np.random.Generator, size: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((size, size)))
    return q * np.sign(np.diag(r))


def sample_entries(cfg: SimConfig, rep: int) -> np.ndarray:
    """The ``N x n`` entry matrix of replication ``rep``."""
    return cfg.entry.sample(_generator(rep_seed(cfg.master_seed, rep)), (cfg.bigN, cfg.n))


def sample_matrix(cfg: SimConfig, rep: int) -> np.ndarray:
    """``B_n = (1/N) T2^{1/2} X T1 X' T2^{1/2}`` for replication ``rep``."""
    rng = _generator(rep_seed(cfg.master_seed, rep))
    x = cfg.entry.sample(rng, (cfg.bigN, cfg.n))
    t1 = np.asarray(cfg.t1_spectrum)
    r2 = np.sqrt(np.asarray(cfg.t2_spectrum))
    if cfg.haar_conjugate:
        u1 = _haar(rng, cfg.n)
        u2 = _haar(rng, cfg.bigN)
        t1_half = u1 * t1 @ u1.T
        left = (u2 * r2 @ u2.T) @ x
        b = left @ t1_half @ left.T / cfg.bigN
    else:
        left = r2[:, None] * x
        b = (left * t1) @ left.T / cfg.bigN
    return 0.5 * (b + b.T)


def sample_eigenvalues(cfg: SimConfig, rep: int) -> np.ndarray:
    """All ``N`` eigenvalues of replication ``rep``, ascending."""
    b = sample_matrix(cfg, rep)
    try:
        return np.linalg.eigvalsh(b)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"eigensolver failed for rep {rep} (seed {rep_seed(cfg.master_seed, rep)}): {exc}") from exc


def lss(eigenvalues: Sequence[float], f: TestFunction) -> float:
    """Unnormalized statistic ``sum_j f(lambda_j)``."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size == 0:
        return 0.0
    if f.kind == "log":
        arg = f.scale * lam + f.shift
        if np.min(arg) <= 0.0:
            raise DomainViolation(f"{f.label} needs a positive argument; smallest is {np.min(arg):.3e}")
    return float(np.sum(f(lam)))


def centering_term(cfg: SimConfig, f: TestFunction) -> float:
    """``N int f dF`` for the model at ``c_n`` and the empirical spectra."""
    return cfg.bigN * functional(cfg.finite_params(), f)


@dataclass(frozen=True)
class RepRecord:
    rep: int
    seed: int
    values: tuple[float, ...]


@dataclass
class SimResult:
    config: SimConfig
    labels: list[str]
    per_rep: list[RepRecord]
    centering: list[float]
    theory: CltSummary
    failures: list[dict[str, Any]] = field(default_factory=list)

    def values(self) -> np.ndarray:
        """Centered statistics, shape ``(reps, functions)``."""
        return np.array([r.values for r in self.per_rep], dtype=float).reshape(len(self.per_rep), len(self.labels))

    @property
    def empirical_mean(self) -> list[float]:
        return self.values().mean(axis=0).tolist()

    @property
    def empirical_var(self) -> list[list[float]] | None:
        """Sample covariance matrix; ``None`` with fewer than two replications."""
        v = self.values()
        if v.shape[0] < 2:
            return None
        return np.atleast_2d(np.cov(v, rowvar=False, ddof=1)).tolist()

    @property
    def z_scores(self) -> list[float]:
        reps = len(self.per_rep)
        out = []
        for i, m in enumerate(self.empirical_mean):
            var = self.theory.cov[i][i]
            out.append((m - self.theory.mean[i]) / math.sqrt(var / reps) if var > 0 else float("nan"))
        return out

    def skewness(self) -> list[float]:
        return stats.skew(self.values(), axis=0, bias=False).tolist()

    def excess_kurtosis(self) -> list[float]:
        return stats.kurtosis(self.values(), axis=0, fisher=True, bias=False).tolist()

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "labels": list(self.labels),
            "per_rep": [{"rep": r.rep, "seed": r.seed, "lss_values": list(r.values)} for r in self.per_rep],
            "centering": list(self.centering),
            "theory": self.theory.to_dict(),
            "failures": list(self.failures),
            "empirical_mean": self.empirical_mean,
            "empirical_var": self.empirical_var,
            "z_scores": self.z_scores,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SimResult":
        return cls(
            SimConfig.from_dict(data["config"]),
            list(data["labels"]),
            [RepRecord(int(r["rep"]), int(r["seed"]), tuple(float(v) for v in r["lss_values"])) for r in data["per_rep"]],
            [float(v) for v in data["centering"]],
            CltSummary.from_dict(data["theory"]),
            list(data.get("failures", [])),
        )

    def per_rep_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rep", "seed", "f_label", "value"])
        for r in self.per_rep:
            for label, v in zip(self.labels, r.values):
                w.writerow([r.rep, r.seed, label, repr(v)])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["f_label", "emp_mean", "theory_mean", "emp_var", "theory_var", "z_score"])
        ev = self.empirical_var
        for i, label in enumerate(self.labels):
            w.writerow([
                label,
                repr(self.empirical_mean[i]),
                repr(self.theory.mean[i]),
                repr(ev[i][i]) if ev is not None else "nan",
                repr(self.theory.cov[i][i]),
                repr(self.z_scores[i]),
            ])
        return buf.getvalue()

    def qq_csv(self, index: int) -> str:
        """Standard normal quantiles against standardized statistics for one function."""
        v = np.sort(self.values()[:, index])
        var = self.theory.cov[index][index]
        scale = math.sqrt(var) if var > 0 else 1.0
        emp = (v - self.theory.mean[index]) / scale
        probs = (np.arange(1, v.size + 1) - 0.5) / v.size
        theo = stats.norm.ppf(probs)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theoretical_quantile", "empirical_quantile"])
        for a, b in zip(theo, emp):
            w.writerow([repr(float(a)), repr(float(b))])
        return buf.getvalue()


def _one_rep(cfg: SimConfig, functions: Sequence[TestFunction], centering: Sequence[float], rep: int):
    seed = rep_seed(cfg.master_seed, rep)
    try:
        lam = sample_eigenvalues(cfg, rep)
        vals = tuple(lss(lam, f) - c0 for f, c0 in zip(functions, centering))
    except SepCltError as exc:
        return {"rep": rep, "seed": seed, "error": f"{type(exc).__name__}: {exc}"}
    return RepRecord(rep, seed, vals)


def run_experiment(
    cfg: SimConfig,
    functions: Sequence[TestFunction],
    *,
    centering: Sequence[float] | None = None,
    theory: CltSummary | None = None,
) -> SimResult:
    """Simulate ``G_n(f)`` for each function and pair it with the limit prediction.

    ``centering`` and ``theory`` may be supplied to skip recomputing them
    (or, for negative controls, to inject wrong values).
    """
    functions = list(functions)
    if centering is None:
        centering = [centering_term(cfg, f) for f in functions]
    if theory is None:
        theory = clt_summary(cfg.finite_params(), functions)
    workers = cfg.threads or os.cpu_count() or 1
    if workers == 1:
        outcomes = [_one_rep(cfg, functions, centering, r) for r in range(cfg.reps)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda r: _one_rep(cfg, functions, centering, r), range(cfg.reps)))
    records = [o for o in outcomes if isinstance(o, RepRecord)]
    failures = [o for o in outcomes if not isinstance(o, RepRecord)]
    if len(failures) > MAX_FAILURE_RATE * cfg.reps:
        raise ReplicationFailure(f"{len(failures)} of {cfg.reps} replications failed; first: {failures[0]['error']}")
    if not records:
        raise ReplicationFailure("no replication succeeded")
    return SimResult(cfg, [f.label for f in functions], records, list(centering), theory, failures)
