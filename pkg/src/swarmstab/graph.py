"""Weighted digraphs, their Laplacians and spectral structure.

Convention: ``W[i, j] > 0`` means vertex ``j`` is a neighbour of vertex
``i``, so information flows along the arc ``j -> i``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .matkit import (
    DEFAULT_TOL,
    Spectrum,
    Tolerances,
    as_matrix,
    cluster_tolerance,
    eig,
    rank,
)


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedDigraph:
    W: np.ndarray

    def __post_init__(self):
        w = as_matrix(self.W, "W")
        if np.iscomplexobj(w):
            raise GraphError("arc weights must be real")
        if w.shape[0] != w.shape[1]:
            raise GraphError(f"W must be square, got {w.shape}")
        if np.any(w < 0):
            i, j = np.argwhere(w < 0)[0]
            raise GraphError(f"negative weight W[{i}][{j}] = {w[i, j]}")
        if np.any(np.diag(w) != 0):
            i = int(np.flatnonzero(np.diag(w))[0])
            raise GraphError(f"nonzero self-loop W[{i}][{i}] = {w[i, i]}")
        w.setflags(write=False)
        object.__setattr__(self, "W", w)

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.W, self.W.T))


def laplacian(g: WeightedDigraph) -> np.ndarray:
    """``diag(row sums of W) - W``."""
    L = -g.W.copy()
    # correctly rounded row sums: each row cancels to within half an ulp of
    # its diagonal, and exactly whenever the weights sum exactly
    np.fill_diagonal(L, [math.fsum(row) for row in g.W])
    return L


def _reachable(g: WeightedDigraph, root: int) -> set[int]:
    seen = {root}
    queue = deque([root])
    while queue:
        j = queue.popleft()
        for i in np.flatnonzero(g.W[:, j] > 0):
            if i not in seen:
                seen.add(int(i))
                queue.append(int(i))
    return seen


def has_spanning_tree(g: WeightedDigraph) -> bool:
    return any(len(_reachable(g, r)) == g.m for r in range(g.m))


def spanning_tree_roots(g: WeightedDigraph) -> list[int]:
    return [r for r in range(g.m) if len(_reachable(g, r)) == g.m]


@dataclass(frozen=True)
class LaplacianAnalysis:
    L: np.ndarray
    spectrum: Spectrum
    clusters: list  # (eigenvalue, algebraic multiplicity)
    zero_multiplicity: int
    has_spanning_tree: bool
    diagonalizable: bool
    defective: list  # eigenvalues whose geometric multiplicity falls short
    left_zero_vector: Optional[np.ndarray]
    right_zero_vector: np.ndarray
    cluster_tol: float

    @property
    def nonzero_eigenvalues(self) -> np.ndarray:
        """Nonzero eigenvalues with repetition."""
        return np.array([z for z in self.spectrum.values if abs(z) > self.cluster_tol], dtype=complex)


def _left_null_vector(L, tol):
    _, _, vh = np.linalg.svd(L.T)
    nu = vh[-1].conj()
    nu = nu / nu.sum()
    return nu.real if np.allclose(nu.imag, 0) else nu


def is_semisimple(a, value, multiplicity, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Rank test: geometric multiplicity equals algebraic multiplicity."""
    n = a.shape[0]
    return rank(a - value * np.eye(n), tol.rank * n) == n - multiplicity


def analyze_laplacian(g: WeightedDigraph, tol: Tolerances = DEFAULT_TOL) -> LaplacianAnalysis:
    L = laplacian(g)
    spec, _ = eig(L, tol)
    ctol = cluster_tolerance(L, tol)
    clusters = spec.clusters(ctol)
    zero_mult = sum(k for z, k in clusters if abs(z) <= ctol)
    defective = [z for z, k in clusters if k > 1 and not is_semisimple(L, z, k, tol)]
    tree = has_spanning_tree(g)
    nu = _left_null_vector(L, tol) if zero_mult == 1 else None
    return LaplacianAnalysis(
        L=L,
        spectrum=spec,
        clusters=clusters,
        zero_multiplicity=zero_mult,
        has_spanning_tree=tree,
        diagonalizable=not defective,
        defective=defective,
        left_zero_vector=nu,
        right_zero_vector=np.ones(g.m),
        cluster_tol=ctol,
    )


def perturb_to_diagonalizable(
    g: WeightedDigraph,
    eps: float,
    seed: int = 0,
    max_attempts: int = 50,
    tol: Tolerances = DEFAULT_TOL,
) -> WeightedDigraph:
    """Jitter existing positive weights until the Laplacian is diagonalizable.

    The squared Frobenius distance between old and new Laplacians stays
    below ``eps``.  Topology (the sparsity pattern of ``W``) is preserved.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if analyze_laplacian(g, tol).diagonalizable:
        return g
    rng = np.random.default_rng(seed)
    L0 = laplacian(g)
    mask = g.W > 0
    for _ in range(max_attempts):
        jitter = rng.uniform(-1.0, 1.0, size=g.W.shape) * mask
        delta = g.W * jitter
        # shrink the step so that ||L - L'||_F^2 lands at eps / 2
        trial = WeightedDigraph(g.W + delta)
        gap = np.sum((laplacian(trial) - L0) ** 2)
        scale = min(0.5, np.sqrt(0.5 * eps / gap)) if gap > 0 else 0.5
        candidate = WeightedDigraph(g.W + scale * delta)
        if np.sum((laplacian(candidate) - L0) ** 2) >= eps:
            continue
        lap = analyze_laplacian(candidate, tol)
        if lap.diagonalizable and len(lap.clusters) == len(lap.spectrum) - max(lap.zero_multiplicity - 1, 0):
            return candidate
    raise GraphError(f"no diagonalizable perturbation found after {max_attempts} attempts")
