"""A descriptor compartmental network: one pencil shared by every agent plus
the interconnection digraph.  Derived quantities are computed lazily and
cached on the instance."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .graph import LaplacianAnalysis, WeightedDigraph, analyze_laplacian
from .matkit import DEFAULT_TOL, Spectrum, Tolerances
from .pencil import (
    CharPoly,
    MatrixPencil,
    StandardDecomposition,
    char_poly,
    finite_eigenvalues,
    standard_decomposition,
)


@dataclass(eq=False)
class NetworkSystem:
    pencil: MatrixPencil
    graph: WeightedDigraph
    tol: Tolerances = DEFAULT_TOL

    @property
    def n(self) -> int:
        return self.pencil.n

    @property
    def m(self) -> int:
        return self.graph.m

    @cached_property
    def laplacian(self) -> LaplacianAnalysis:
        return analyze_laplacian(self.graph, self.tol)

    @cached_property
    def char_poly(self) -> CharPoly:
        return char_poly(self.pencil)

    @cached_property
    def finite_eigenvalues(self) -> Spectrum:
        return finite_eigenvalues(self.pencil)

    @cached_property
    def decomposition(self) -> StandardDecomposition:
        return standard_decomposition(self.pencil)

    @property
    def impulse_free(self) -> bool:
        return self.char_poly.degree == self.pencil.rank_E

    def slow_operator(self) -> np.ndarray:
        """``-(L kron A1)`` acting on the stacked slow coordinates."""
        return -np.kron(self.laplacian.L, self.decomposition.A1)


def assemble(pencil: MatrixPencil, graph: WeightedDigraph, tol: Tolerances = None) -> NetworkSystem:
    """Build a system and populate its caches; the pencil must be regular.

    Stacked vectors are agent-major: agent ``i`` occupies slots
    ``i*n .. (i+1)*n - 1``.  The slow stacked vector collects the first
    ``n1`` transformed coordinates of each agent, in agent order.
    """
    tol = tol or pencil.tol
    sys = NetworkSystem(pencil, graph, tol)
    sys.decomposition  # raises on a non-regular pencil
    sys.laplacian
    sys.finite_eigenvalues
    return sys
