"""Metrical tools for limsup sets defined by weighted products of
consecutive continued-fraction digits.

Modules: ``cfcore`` (expansions, cylinders, Gauss measure), ``growth``
(growth functions and the series test), ``tailsums`` (exceedance
probabilities), ``pressure`` (transfer operators and dimension), and
``montecarlo`` (exact digit sampling).
"""
__version__ = "0.1.0"

from .cfcore import (CFDomainError, Convergent, Cylinder, MeasureValue, as_fraction,
                     child_cylinders, continuant_pairs, convergents, cylinder, evaluate,
                     expand_rational, gauss_measure, gauss_measure_interval,
                     lebesgue_measure, tail_interval)
from .errors import BudgetError, ConfigurationError, ConvergenceError
from .ffuncs import FSpec, f_general_iter, f_pair, f_single, f_unit_iter
from .growth import (GrowthDomainError, GrowthError, GrowthExpr, GrowthNameError,
                     GrowthSyntaxError, classify_branch, estimate_exponents,
                     eval_log_growth, parse_growth, series_test)
from .montecarlo import (DigitSampler, HitReport, MCSummary, hit_scan, mc_experiment,
                         sample_digits, sample_many, union_bound)
from .pressure import (DimensionResult, hdim_dispatch, pressure_spectral, pressure_wordsum,
                       s_of_B, solve_s, transfer_iterate, wordsum)
from .tailsums import (Bracket, Weights, WeightsError, asymptotic_envelope, measure_of_event,
                       tail_sum_1d, weighted_tail_sum)

__all__ = [n for n in dir() if not n.startswith("_")]
