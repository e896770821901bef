"""Numerical experiments on wavelet coefficients of weighted, vector-valued BMO functions."""

from .dyadic import (SCALAR, DyadicInterval, Grid, GridFunction, Interval, VectorSpace, average,
                     dyadic_family, dyadics_within, integrate_norm, interval_family,
                     read_gridfunction, write_gridfunction)
from .errors import (DegenerateWeightError, DivergenceError, DomainError, PreconditionError,
                     ResolutionError, TruncationError)
from .growth import GrowthModel, eta, eta_model
from .norms import (CoefficientArray, NormReport, bmo_norm, carleson_norm, carleson_scalar_p2,
                    carleson_scalar_squarefn, jn_p_norm)
from .randsign import SignSeries, moment
from .synthesis import SynthesisCutoffs, classify, synthesize
from .wavelets import WaveletModel, wavelet_coefficients
from .weights import WeightModel, aq_constant

__version__ = "0.1.0"

__all__ = [
    "SCALAR", "DyadicInterval", "Grid", "GridFunction", "Interval", "VectorSpace", "average",
    "dyadic_family", "dyadics_within", "integrate_norm", "interval_family", "read_gridfunction",
    "write_gridfunction", "DegenerateWeightError", "DivergenceError", "DomainError", "PreconditionError",
    "ResolutionError", "TruncationError", "GrowthModel", "eta", "eta_model", "CoefficientArray",
    "NormReport", "bmo_norm", "carleson_norm", "carleson_scalar_p2", "carleson_scalar_squarefn",
    "jn_p_norm", "SignSeries", "moment", "SynthesisCutoffs", "classify", "synthesize", "WaveletModel",
    "wavelet_coefficients", "WeightModel", "aq_constant",
]
