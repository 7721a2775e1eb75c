"""CLT for linear spectral statistics of separable sample covariance matrices."""

from .spectra import SpectralMeasure, from_eigenvalues, integrate, moment
from .solver import (
    ModelParams,
    SolverConfig,
    StieltjesTriple,
    density,
    functional,
    solve_along,
    solve_at,
    support_bounds,
)
from .functions import TestFunction, parse_function
from .contour import RectContour
from .clt import CltSummary, clt_cov, clt_mean, clt_summary

__version__ = "0.1.0"
