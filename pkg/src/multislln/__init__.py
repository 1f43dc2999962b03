"""Numerical laboratory for strong laws of large numbers over multi-indexed sums.

Modules: ``lattice`` (prefix sums, increments, shells), ``normalization``
(b_n families), ``distributions`` (moment oracles), ``series`` and
``conditions`` (certified series verdicts), ``simulate`` (random fields and
Monte Carlo diagnostics), ``pointproc`` (marked Poisson measures),
``kronecker`` (the multi-index Kronecker lemma and its counterexample).
"""

from .distributions import DistributionSpec
from .lattice import ConvergenceMode, increment, prefix_sums
from .normalization import NormalizationSpec
from .series import SeriesReport, Verdict

__version__ = "0.1.0"

__all__ = [
    "ConvergenceMode",
    "DistributionSpec",
    "NormalizationSpec",
    "SeriesReport",
    "Verdict",
    "increment",
    "prefix_sums",
]
