"""Clique and CSP instances rewritten as weighted margin-learning problems."""

from .clique import clique_opt_oracle, clique_opt_zero_one, clique_parameters, reduce_clique
from .csp import (
    Constraint,
    CspInstance,
    csp_opt_lower_bound,
    csp_value,
    decode_assignment,
    decode_details,
    find_satisfying,
    random_regular_csp,
    read_csp,
    reduce_csp,
    repair_weights,
    write_csp,
)
from .graph import Graph, all_graphs, find_clique, plant_clique, random_graph, read_graph, write_graph
from .instance import CertificateCheck, ExactSample, ReductionInstance, check_certificate

__all__ = [
    "CertificateCheck", "Constraint", "CspInstance", "ExactSample", "Graph", "ReductionInstance",
    "all_graphs", "check_certificate", "clique_opt_oracle", "clique_opt_zero_one", "clique_parameters",
    "csp_opt_lower_bound", "csp_value", "decode_assignment", "decode_details", "find_clique",
    "find_satisfying", "plant_clique", "random_graph", "random_regular_csp", "read_csp", "read_graph",
    "reduce_clique", "reduce_csp", "repair_weights", "write_csp", "write_graph",
]
