"""Seeded random generators and cross-oracle suites.

The suites are shared by ``swarmstab selftest`` (small counts) and the
property tests (full counts).  Each returns a :class:`SuiteResult`; none of
them raises on a mismatch.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import ortho_group

from .criteria import check_consensus, check_swarm_stability, overall_verdict
from .graph import WeightedDigraph, analyze_laplacian
from .matkit import DEFAULT_TOL, Spectrum, eigvals, kron, norm2
from .network import assemble
from .pencil import (
    MatrixPencil,
    char_poly,
    finite_eigenvalues,
    scaled_pencil_eigenvalues,
    standard_decomposition,
)


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    excluded: int = 0
    worst: float = 0.0
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures and self.cases > 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f", {self.excluded} excluded" if self.excluded else ""
        return f"{status} {self.name}: {self.cases} cases{extra}, worst {self.worst:.3e}"


def _conditioned(rng, n, spread=2.0):
    """Random matrix with condition number at most ``spread**2``."""
    if n == 1:
        return np.array([[rng.uniform(1 / spread, spread) * rng.choice([-1, 1])]])
    U = ortho_group.rvs(n, random_state=rng)
    V = ortho_group.rvs(n, random_state=rng)
    return U @ np.diag(rng.uniform(1 / spread, spread, n)) @ V


def random_pencil(rng, n_max=8, max_index=3, n=None, n2=None):
    """Regular pencil ``Q^-1 diag(I, N) P^-1``, ``Q^-1 diag(A1, I) P^-1``.

    ``N`` is nilpotent with index at most ``max_index``; ``Q`` and ``P`` are
    well conditioned.  Returns ``(pencil, A1, N)``.
    """
    n = int(rng.integers(1, n_max + 1)) if n is None else n
    n2 = int(rng.integers(0, n + 1)) if n2 is None else n2
    n1 = n - n2
    A1 = rng.standard_normal((n1, n1))
    N = np.zeros((n2, n2))
    if n2 > 1 and rng.random() < 0.5:
        # Jordan chains of length <= max_index along the superdiagonal
        i = 0
        while i < n2 - 1:
            length = int(rng.integers(1, max_index + 1))
            for k in range(i, min(i + length - 1, n2 - 1)):
                N[k, k + 1] = 1.0
            i += length
        S = _conditioned(rng, n2)
        N = S @ N @ np.linalg.inv(S)
    Eb = np.zeros((n, n))
    Eb[:n1, :n1] = np.eye(n1)
    Eb[n1:, n1:] = N
    Fb = np.zeros((n, n))
    Fb[:n1, :n1] = A1
    Fb[n1:, n1:] = np.eye(n2)
    Qi = _conditioned(rng, n)
    Pi = _conditioned(rng, n)
    return MatrixPencil(Qi @ Eb @ Pi, Qi @ Fb @ Pi), A1, N


def random_digraph(rng, m_max=7, m=None) -> WeightedDigraph:
    m = int(rng.integers(1, m_max + 1)) if m is None else m
    density = rng.uniform(0.1, 0.7)
    mask = rng.random((m, m)) < density
    np.fill_diagonal(mask, False)
    if rng.random() < 0.5:
        weights = rng.integers(1, 4, (m, m)).astype(float)
    else:
        weights = rng.uniform(0.2, 3.0, (m, m))
    return WeightedDigraph(np.where(mask, weights, 0.0))


def _timed(fn):
    def run(*args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        result.seconds = time.perf_counter() - start
        return result

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


@_timed
def suite_route_agreement(rng, count=200, limit=1e-6) -> SuiteResult:
    """Interpolated finite eigenvalues vs eigenvalues of the slow block."""
    res = SuiteResult("route-agreement")
    for case in range(count):
        p, _, _ = random_pencil(rng)
        try:
            A1 = standard_decomposition(p).A1
            slow = eigvals(A1) if A1.size else Spectrum(np.zeros(0))
            gap = finite_eigenvalues(p).distance(slow)
        except ArithmeticError as exc:
            res.failures.append(f"case {case}: {exc}")
            continue
        res.cases += 1
        res.worst = max(res.worst, gap)
        if gap > limit:
            res.failures.append(f"case {case}: routes differ by {gap:.3e}")
    return res


@_timed
def suite_spanning_tree(rng, count=200, gap=1e3) -> SuiteResult:
    """Reachability spanning tree vs simple zero Laplacian eigenvalue.

    Graphs with a nonzero eigenvalue within ``gap`` cluster tolerances of
    zero are redrawn and counted as excluded.
    """
    res = SuiteResult("spanning-tree")
    attempts = 0
    while res.cases < count and attempts < 20 * count:
        attempts += 1
        g = random_digraph(rng)
        lap = analyze_laplacian(g)
        mags = np.abs(lap.spectrum.values)
        if np.any((mags > lap.cluster_tol) & (mags <= gap * lap.cluster_tol)):
            res.excluded += 1
            continue
        res.cases += 1
        if lap.has_spanning_tree != (lap.zero_multiplicity == 1):
            res.failures.append(
                f"W={g.W.tolist()}: tree {lap.has_spanning_tree}, zero multiplicity {lap.zero_multiplicity}"
            )
    return res


@_timed
def suite_kronecker(rng, count=100, limit=1e-6) -> SuiteResult:
    res = SuiteResult("kronecker-spectrum")
    for _ in range(count):
        a = rng.standard_normal((int(rng.integers(1, 5)),) * 2)
        b = rng.standard_normal((int(rng.integers(1, 5)),) * 2)
        products = Spectrum(np.outer(eigvals(a).values, eigvals(b).values).ravel())
        gap = eigvals(kron(a, b)).distance(products)
        res.cases += 1
        res.worst = max(res.worst, gap)
        if gap > limit:
            res.failures.append(f"orders {a.shape[0]}, {b.shape[0]}: mismatch {gap:.3e}")
    return res


@_timed
def suite_scaling(rng, count=100, limit=1e-6) -> SuiteResult:
    """sigma(E, cF) computed directly vs c * sigma(E, F)."""
    res = SuiteResult("scaling-law")
    for case in range(count):
        p, _, _ = random_pencil(rng)
        c = rng.uniform(0.2, 5.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        if rng.random() < 0.3:
            c = c.real
        direct, scaled = scaled_pencil_eigenvalues(p, c)
        gap = direct.distance(scaled)
        res.cases += 1
        res.worst = max(res.worst, gap)
        if gap > limit:
            res.failures.append(f"case {case}: mismatch {gap:.3e}")
    return res


def _impulse_tests(p, dec, N_true=None) -> dict:
    lim = p.tol.split * (norm2(p.E) + 1.0)
    out = {
        "degree=rank(E)": char_poly(p).degree == p.rank_E,
        "N=0": dec.n2 == 0 or norm2(dec.N) <= lim,
        "h<=1": dec.h <= 1,
    }
    if N_true is not None:
        out["generator"] = N_true.size == 0 or not np.any(N_true)
    return out


@_timed
def suite_reconstruction(rng, count=200, limit=1e-8, extra=()) -> SuiteResult:
    """Scaled residuals of Q E P and Q F P, plus impulse-free equivalences."""
    res = SuiteResult("reconstruction")
    cases = [(p, None) for p in extra]
    for _ in range(count):
        p, _, N = random_pencil(rng)
        cases.append((p, N))
    for case, (p, N) in enumerate(cases):
        try:
            dec = standard_decomposition(p)
        except ArithmeticError as exc:
            res.failures.append(f"case {case} (n={p.n}): {exc}")
            continue
        res.cases += 1
        scaled = max(dec.residual_E / (norm2(p.E) + 1.0), dec.residual_F / (norm2(p.F) + 1.0))
        res.worst = max(res.worst, scaled)
        if scaled > limit:
            res.failures.append(f"case {case} (n={p.n}): scaled residual {scaled:.3e}")
        tests = _impulse_tests(p, dec, N)
        if len(set(tests.values())) != 1:
            res.failures.append(f"case {case} (n={p.n}): impulse-free tests disagree {tests}")
    return res


@_timed
def suite_paper_instances(scenarios) -> SuiteResult:
    """Verdict of every scenario against its ``expect`` field."""
    res = SuiteResult("paper-instances")
    for sc in scenarios:
        res.cases += 1
        try:
            sys = assemble(MatrixPencil(sc.E, sc.F, sc.tol), WeightedDigraph(sc.W), sc.tol)
            got = overall_verdict(check_consensus(sys), check_swarm_stability(sys)).value
        except (ArithmeticError, ValueError) as exc:
            res.failures.append(f"{sc.name}: {exc}")
            continue
        if sc.expect is not None and got != sc.expect:
            res.failures.append(f"{sc.name}: verdict {got}, expected {sc.expect}")
    return res


def run_selftest(seed=0, scenarios=None, scale=0.2) -> list:
    """All suites at ``scale`` times the property-test counts."""
    from .scenario import load_builtin

    rng = np.random.default_rng(seed)
    if scenarios is None:
        scenarios = [load_builtin(k) for k in (1, 2, 3)]
    paper_pencils = []
    for sc in scenarios:
        try:
            paper_pencils.append(MatrixPencil(sc.E, sc.F, sc.tol))
        except ValueError:
            pass
    count = lambda full: max(1, int(round(full * scale)))  # noqa: E731
    return [
        suite_route_agreement(rng, count(200)),
        suite_spanning_tree(rng, count(200)),
        suite_kronecker(rng, count(100)),
        suite_scaling(rng, count(100)),
        suite_reconstruction(rng, count(200), extra=paper_pencils),
        suite_paper_instances(scenarios),
    ]


__all__ = [
    "DEFAULT_TOL",
    "SuiteResult",
    "random_pencil",
    "random_digraph",
    "suite_route_agreement",
    "suite_spanning_tree",
    "suite_kronecker",
    "suite_scaling",
    "suite_reconstruction",
    "suite_paper_instances",
    "run_selftest",
]
