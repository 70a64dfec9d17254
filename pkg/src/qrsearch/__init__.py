"""Quasi-random point sets for one-shot hyperparameter search.

Generators (Halton, Hammersley and scrambled variants, Sobol, LHS, grids),
spread metrics, test objectives, a benchmark harness with win-rate based
statistics, and batch Bayesian optimization with low-discrepancy starts.
"""

from qrsearch.errors import ParameterError, UsageError, ValidationError
from qrsearch.sampler import Algorithm, SamplerSpec, generate

__version__ = "0.1.0"

__all__ = ["Algorithm", "SamplerSpec", "generate", "ParameterError", "UsageError",
           "ValidationError", "__version__"]
