"""Consensus and swarm-stability decisions for descriptor compartmental
networks.

Both tests reduce the stacked ``m*n`` system to products of Laplacian
eigenvalues with finite eigenvalues of the agent pencil:

* consensus holds iff the graph has a spanning tree and every product
  ``lambda_i(L) * mu_j(E, F)`` over nonzero ``lambda_i`` has positive real part;
* for a regular, impulse-free pencil the network is (possibly critically)
  swarm stable iff every ``-lambda_i * mu_j`` has nonpositive real part,
  on-axis ones are semisimple, and, when ``L`` is not diagonalizable, no
  nonzero finite eigenvalue sits on the imaginary axis.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .graph import LaplacianAnalysis, is_semisimple
from .matkit import Spectrum, cluster_tolerance, norm2
from .network import NetworkSystem


class Classification(str, enum.Enum):
    ASYMPTOTICALLY_SWARM_STABLE = "consensus"
    SWARM_STABLE = "swarm_stable"
    SWARM_UNSTABLE = "swarm_unstable"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class ProductEntry:
    i: int  # 1-based position in the sorted Laplacian spectrum
    j: int  # 1-based position in the sorted finite spectrum
    laplacian_eigenvalue: complex
    finite_eigenvalue: complex

    @property
    def product(self) -> complex:
        return self.laplacian_eigenvalue * self.finite_eigenvalue

    @property
    def real(self) -> float:
        return self.product.real

    def to_json(self) -> dict:
        return {
            "i": self.i,
            "j": self.j,
            "laplacian_eigenvalue": _pair(self.laplacian_eigenvalue),
            "finite_eigenvalue": _pair(self.finite_eigenvalue),
            "product": _pair(self.product),
            "real_part": self.real,
        }


@dataclass(frozen=True)
class ProductTable:
    entries: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def min_real(self) -> Optional[float]:
        return min((e.real for e in self.entries), default=None)

    def to_json(self) -> list:
        return [e.to_json() for e in self.entries]


@dataclass
class StabilityVerdict:
    classification: Classification
    reasons: list = field(default_factory=list)
    product_table: ProductTable = field(default_factory=ProductTable)
    tolerance: float = 0.0

    def to_json(self) -> dict:
        return {
            "classification": self.classification.value,
            "reasons": self.reasons,
            "tolerance": self.tolerance,
        }


@dataclass
class FastPathVerdict:
    """Outcome of a closed-form shortcut: it decides consensus only."""

    corollary: str  # "real-finite-eigenvalues" or "symmetric-topology"
    consensus: bool
    reasons: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"path": self.corollary, "consensus": self.consensus, "reasons": self.reasons}


def _pair(z) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def _reason(code, **detail) -> dict:
    out = {"code": code}
    for k, v in detail.items():
        if isinstance(v, (complex, np.complexfloating)):
            v = _pair(v)
        elif isinstance(v, np.generic):
            v = v.item()
        out[k] = v
    return out


def product_table(lap: LaplacianAnalysis, finite: Spectrum) -> ProductTable:
    """All ``lambda_i * mu_j`` with ``lambda_i`` a nonzero Laplacian eigenvalue."""
    entries = []
    for i, lam in enumerate(lap.spectrum.values, start=1):
        if abs(lam) <= lap.cluster_tol:
            continue
        for j, mu in enumerate(finite.values, start=1):
            entries.append(ProductEntry(i, j, complex(lam), complex(mu)))
    return ProductTable(entries)


def strict_tolerance(sys: NetworkSystem) -> float:
    mu = sys.finite_eigenvalues.values
    mu_max = float(np.max(np.abs(mu))) if len(mu) else 0.0
    return sys.tol.strict * (1.0 + norm2(sys.laplacian.L)) * (1.0 + mu_max)


def _axis_tolerance(sys: NetworkSystem) -> float:
    mu = sys.finite_eigenvalues.values
    mu_max = float(np.max(np.abs(mu))) if len(mu) else 0.0
    return sys.tol.strict * (1.0 + mu_max)


def _regularity_reason(sys: NetworkSystem) -> Optional[dict]:
    cp = sys.char_poly
    if cp.status != "regular":
        return _reason("pencil_not_regular", status=cp.status, conditioning=cp.conditioning)
    return None


def _tree_reason(lap: LaplacianAnalysis) -> dict:
    return _reason(
        "spanning_tree",
        present=lap.has_spanning_tree,
        zero_eigenvalue_multiplicity=lap.zero_multiplicity,
    )


def check_consensus(sys: NetworkSystem) -> StabilityVerdict:
    """Asymptotic swarm stability (consensus).  Impulse-freeness is not needed."""
    bad = _regularity_reason(sys)
    if bad:
        return StabilityVerdict(Classification.INDETERMINATE, [bad])
    lap = sys.laplacian
    table = product_table(lap, sys.finite_eigenvalues)
    tol = strict_tolerance(sys)
    reasons = [_tree_reason(lap)]

    if lap.has_spanning_tree != (lap.zero_multiplicity == 1):
        reasons.append(
            _reason("tree_spectrum_disagreement", note="zero-eigenvalue count sits at the cluster tolerance")
        )
        return StabilityVerdict(Classification.INDETERMINATE, reasons, table, tol)

    negative = [e for e in table if e.real < -tol]
    if negative:
        reasons += [
            _reason("product_negative_real_part", i=e.i, j=e.j, product=e.product) for e in negative
        ]
        return StabilityVerdict(Classification.SWARM_UNSTABLE, reasons, table, tol)

    if lap.has_spanning_tree and all(e.real > tol for e in table):
        reasons.append(_reason("all_products_positive", min_real_part=table.min_real))
        return StabilityVerdict(Classification.ASYMPTOTICALLY_SWARM_STABLE, reasons, table, tol)

    # Consensus fails (no spanning tree, or products on the imaginary axis);
    # whether differences stay bounded is the swarm-stability question.
    on_axis = [e for e in table if abs(e.real) <= tol]
    reasons += [_reason("product_on_imaginary_axis", i=e.i, j=e.j, product=e.product) for e in on_axis]
    critical = check_swarm_stability(sys)
    reasons.append(_reason("deferred_to_swarm_stability", verdict=critical.classification.value))
    reasons += critical.reasons
    return StabilityVerdict(critical.classification, reasons, table, tol)


def check_swarm_stability(sys: NetworkSystem) -> StabilityVerdict:
    """Boundedness of pairwise differences, allowing critical (on-axis) modes."""
    bad = _regularity_reason(sys)
    if bad:
        return StabilityVerdict(Classification.INDETERMINATE, [bad])
    lap = sys.laplacian
    mu = sys.finite_eigenvalues
    table = product_table(lap, mu)
    tol = strict_tolerance(sys)
    if not sys.impulse_free:
        reason = _reason(
            "precondition_impulse_free",
            char_poly_degree=sys.char_poly.degree,
            rank_E=sys.pencil.rank_E,
        )
        return StabilityVerdict(Classification.INDETERMINATE, [reason], table, tol)

    dec = sys.decomposition
    A1 = dec.A1
    mu_clusters = mu.clusters(cluster_tolerance(A1, sys.tol))
    axis_tol = _axis_tolerance(sys)
    reasons = [_tree_reason(lap), _reason("laplacian_diagonalizable", value=lap.diagonalizable)]
    violations = []

    if lap.zero_multiplicity > 1 and not is_semisimple(lap.L, 0.0, lap.zero_multiplicity, sys.tol):
        violations.append(_reason("defective_zero_laplacian_eigenvalue"))

    semisimple = {}
    for e in table:
        p = -e.product
        if p.real > tol:
            violations.append(_reason("mode_positive_real_part", i=e.i, j=e.j, eigenvalue=p))
        elif abs(p.real) <= tol:
            center, mult = min(mu_clusters, key=lambda c: abs(c[0] - e.finite_eigenvalue))
            if center not in semisimple:
                semisimple[center] = is_semisimple(A1, center, mult, sys.tol)
            if not semisimple[center]:
                violations.append(
                    _reason("defective_on_axis_mode", i=e.i, j=e.j, eigenvalue=p, multiplicity=mult)
                )

    imaginary = [z for z in mu.values if abs(z.real) <= axis_tol and abs(z) > axis_tol]
    if not lap.diagonalizable and imaginary:
        violations += [
            _reason(
                "imaginary_axis_finite_eigenvalue_with_defective_laplacian",
                finite_eigenvalue=z,
                defective_laplacian_eigenvalues=[_pair(v) for v in lap.defective],
            )
            for z in imaginary
        ]
    if any(abs(z) <= axis_tol for z in mu.values):
        reasons.append(
            _reason("zero_finite_eigenvalue", note="accepted when semisimple, by the literal 'except zero' reading")
        )

    if violations:
        return StabilityVerdict(Classification.SWARM_UNSTABLE, reasons + violations, table, tol)
    return StabilityVerdict(Classification.SWARM_STABLE, reasons, table, tol)


def corollary_fast_paths(sys: NetworkSystem) -> Optional[FastPathVerdict]:
    """Shortcut consensus tests for real finite spectra or symmetric graphs.

    Returns ``None`` when neither shortcut applies (or for a single agent,
    where consensus is trivial).
    """
    if sys.m < 2 or _regularity_reason(sys):
        return None
    mu = sys.finite_eigenvalues.values
    tol = _axis_tolerance(sys)
    lap = sys.laplacian
    if np.all(np.abs(mu.imag) <= tol):
        ok = bool(lap.has_spanning_tree and np.all(mu.real > tol))
        return FastPathVerdict(
            "real-finite-eigenvalues",
            ok,
            [_tree_reason(lap), _reason("finite_eigenvalues_positive", value=bool(np.all(mu.real > tol)))],
        )
    if sys.graph.is_symmetric:
        ok = bool(lap.has_spanning_tree and np.all(mu.real > tol))
        return FastPathVerdict(
            "symmetric-topology",
            ok,
            [
                _reason("connected", value=lap.has_spanning_tree),
                _reason("finite_eigenvalues_positive_real_part", value=bool(np.all(mu.real > tol))),
            ],
        )
    return None


def overall_verdict(consensus: StabilityVerdict, swarm: StabilityVerdict) -> Classification:
    """Single label combining both tests (used for ``expect`` gating)."""
    if consensus.classification is Classification.ASYMPTOTICALLY_SWARM_STABLE:
        return consensus.classification
    labels = {consensus.classification, swarm.classification}
    if Classification.SWARM_UNSTABLE in labels:
        return Classification.SWARM_UNSTABLE
    if Classification.SWARM_STABLE in labels:
        return Classification.SWARM_STABLE
    return Classification.INDETERMINATE
