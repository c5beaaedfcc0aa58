"""Graph-based bounds for zero-error source coding and Slepian-Wolf exponents."""

from .config import DEFAULT_CAPS, CapExceededError, Caps, SolverError
from .graphs import (Graph, channel_graph, characteristic_graph, chromatic_number,
                     independence_number, strong_power, strong_product, tightness_graph)
from .kappa import (KappaSolution, kappa, kappa2, kappa_n, witsenhausen_bound,
                    zero_error_capacity_lb)
from .probability import EmpiricalType, entropy, kl_divergence

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CAPS", "CapExceededError", "Caps", "SolverError",
    "Graph", "channel_graph", "characteristic_graph", "chromatic_number",
    "independence_number", "strong_power", "strong_product", "tightness_graph",
    "KappaSolution", "kappa", "kappa2", "kappa_n", "witsenhausen_bound",
    "zero_error_capacity_lb",
    "EmpiricalType", "entropy", "kl_divergence",
]
