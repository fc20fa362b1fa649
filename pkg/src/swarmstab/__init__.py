"""Consensus and swarm-stability analysis of descriptor compartmental networks."""

__version__ = "0.1.0"

from .criteria import (
    Classification,
    StabilityVerdict,
    check_consensus,
    check_swarm_stability,
    corollary_fast_paths,
    product_table,
)
from .graph import WeightedDigraph, analyze_laplacian, has_spanning_tree, laplacian, perturb_to_diagonalizable
from .matkit import DEFAULT_TOL, Spectrum, Tolerances
from .network import NetworkSystem, assemble
from .pencil import (
    MatrixPencil,
    char_poly,
    finite_eigenvalues,
    is_impulse_free,
    scaled_pencil_eigenvalues,
    standard_decomposition,
)
from .simulator import (
    consistent_projection,
    empirical_classify,
    predicted_consensus_value,
    reference_integrate,
    simulate,
)

__all__ = [
    "Classification",
    "DEFAULT_TOL",
    "MatrixPencil",
    "NetworkSystem",
    "Spectrum",
    "StabilityVerdict",
    "Tolerances",
    "WeightedDigraph",
    "analyze_laplacian",
    "assemble",
    "char_poly",
    "check_consensus",
    "check_swarm_stability",
    "consistent_projection",
    "corollary_fast_paths",
    "empirical_classify",
    "finite_eigenvalues",
    "has_spanning_tree",
    "is_impulse_free",
    "laplacian",
    "perturb_to_diagonalizable",
    "predicted_consensus_value",
    "product_table",
    "reference_integrate",
    "scaled_pencil_eigenvalues",
    "simulate",
    "standard_decomposition",
]
