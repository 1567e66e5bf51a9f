"""Randomized lexicographic forests for planted closest-pair search, with their performance theory."""

from .engine import SearchConfig, SearchReport, TryPlan, make_try_plan, run_try, search, sparse_search
from .exponents import bernoulli_exponent, greedy_exponent, random_exponent, sparse_exponent
from .information import cutoff_exponent, forest_information, plan_tries
from .model import CoordinateDistribution, DataModel, Dataset, estimate_model, generate_instance, preset

__version__ = "0.1.0"

__all__ = [
    "CoordinateDistribution",
    "DataModel",
    "Dataset",
    "SearchConfig",
    "SearchReport",
    "TryPlan",
    "bernoulli_exponent",
    "cutoff_exponent",
    "estimate_model",
    "forest_information",
    "generate_instance",
    "greedy_exponent",
    "make_try_plan",
    "plan_tries",
    "preset",
    "random_exponent",
    "run_try",
    "search",
    "sparse_exponent",
    "sparse_search",
]
