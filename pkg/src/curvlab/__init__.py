"""Entropic and coarse Ricci curvature of finite reversible Markov chains."""

from .chain import MappingChain, MoveSet, check_reversibility, graph_distance
from .couplings import CouplingRates, coupling_lower_bound, validate_coupling_rates
from .functionals import assemble_forms, forms, quad_A, quad_B
from .weights import arithmetic_mean, log_mean, parse_phi, parse_theta, phi_alpha, theta_alpha

__version__ = "0.1.0"

__all__ = [
    "MappingChain", "MoveSet", "check_reversibility", "graph_distance",
    "CouplingRates", "coupling_lower_bound", "validate_coupling_rates",
    "assemble_forms", "forms", "quad_A", "quad_B",
    "arithmetic_mean", "log_mean", "parse_phi", "parse_theta", "phi_alpha", "theta_alpha",
]
