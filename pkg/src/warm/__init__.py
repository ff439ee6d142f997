"""Numerical tools for reinforced urn models with power reinforcement ``W(x) = x**alpha``."""

from .dynamics import drift, flow, jacobian, lyapunov, lyapunov_gradient
from .equilibria import Equilibrium, EquilibriumCatalog, classify, find_equilibria, support_lower_bound
from .model import (
    GraphSpec,
    ModelError,
    SubsetDistribution,
    WarmModel,
    build_bernoulli,
    build_complete,
    build_cycle,
    build_family,
    build_fixed_m,
    build_path,
    build_star,
    build_whisker,
    check_symmetry,
    graph_to_warm,
    load_model,
)
from .thresholds import ThresholdResult

__version__ = "0.1.0"
