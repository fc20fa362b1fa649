import json

import numpy as np
import pytest

from swarmstab.criteria import (
    Classification,
    check_consensus,
    check_swarm_stability,
    corollary_fast_paths,
    overall_verdict,
    product_table,
    strict_tolerance,
)
from swarmstab.graph import WeightedDigraph, analyze_laplacian
from swarmstab.matkit import Spectrum
from swarmstab.network import NetworkSystem, assemble
from swarmstab.pencil import MatrixPencil, finite_eigenvalues
from swarmstab.selftest import random_digraph, random_pencil

from instances import E, F1, F2, W_3, W_A, W_B, system

ASS = Classification.ASYMPTOTICALLY_SWARM_STABLE
STABLE = Classification.SWARM_STABLE
UNSTABLE = Classification.SWARM_UNSTABLE
INDETERMINATE = Classification.INDETERMINATE


def random_system(rng, m_min=1, impulse_free=True):
    p, _, _ = random_pencil(rng, n_max=4)
    if impulse_free:
        while True:
            sys = assemble(p, random_digraph(rng, m=int(rng.integers(m_min, 6))))
            if sys.impulse_free:
                return sys
            p, _, _ = random_pencil(rng, n_max=4)
    return assemble(p, random_digraph(rng, m=int(rng.integers(m_min, 6))))


def symmetric_connected(rng, m):
    while True:
        W = np.triu(rng.uniform(0.5, 2.0, (m, m)) * (rng.random((m, m)) < 0.6), 1)
        W = W + W.T
        g = WeightedDigraph(W)
        if analyze_laplacian(g).has_spanning_tree:
            return g


def test_product_table_instance_one():
    sys = system(1)
    table = product_table(sys.laplacian, sys.finite_eigenvalues)
    assert len(table) == 8
    assert all(e.real > 0 for e in table)
    lam = np.array([1.2679, 5.5 + 1.3229j, 5.5 - 1.3229j, 4.7321])
    expected = np.outer(lam, [1.0, 1 / 6]).ravel()
    got = np.array([e.product for e in table])
    assert Spectrum(got).distance(expected) < 1e-3


def test_product_table_single_agent():
    sys = assemble(MatrixPencil(E, F1), WeightedDigraph([[0.0]]))
    assert len(product_table(sys.laplacian, sys.finite_eigenvalues)) == 0


def test_product_table_instance_two_is_imaginary():
    sys = system(2)
    table = product_table(sys.laplacian, sys.finite_eigenvalues)
    assert len(table) == 8
    assert all(abs(e.real) <= strict_tolerance(sys) for e in table)


def test_consensus_instance_one():
    assert check_consensus(system(1)).classification is ASS


def test_consensus_instance_two_and_three():
    assert check_consensus(system(2)).classification is UNSTABLE
    assert check_consensus(system(3)).classification is STABLE


def test_consensus_needs_spanning_tree():
    W = np.zeros((4, 4))
    W[0, 1] = W[1, 0] = W[2, 3] = W[3, 2] = 1.0
    sys = assemble(MatrixPencil(E, F1), WeightedDigraph(W))
    assert not sys.laplacian.has_spanning_tree
    assert check_consensus(sys).classification is not ASS


def test_consensus_symmetric_graph_with_positive_spectrum():
    rng = np.random.default_rng(0)
    F = np.array([[1.0, -2.0], [2.0, 1.0]])  # finite eigenvalues 1 +- 2i
    for m in (2, 3, 4, 5):
        sys = assemble(MatrixPencil(np.eye(2), F), symmetric_connected(rng, m))
        fast = corollary_fast_paths(sys)
        assert fast is not None and fast.corollary == "symmetric-topology"
        assert fast.consensus
        assert check_consensus(sys).classification is ASS


def test_swarm_stability_paper_instances():
    assert check_swarm_stability(system(1)).classification is STABLE
    v2 = check_swarm_stability(system(2))
    assert v2.classification is UNSTABLE
    codes = {r["code"] for r in v2.reasons}
    assert "imaginary_axis_finite_eigenvalue_with_defective_laplacian" in codes
    assert check_swarm_stability(system(3)).classification is STABLE


def test_swarm_stability_requires_impulse_free():
    Eb = np.diag([1.0, 0.0, 0.0])
    Eb[1, 2] = 1.0
    sys = assemble(MatrixPencil(Eb, np.eye(3)), WeightedDigraph(W_B))
    assert not sys.impulse_free
    v = check_swarm_stability(sys)
    assert v.classification is INDETERMINATE
    assert v.reasons[0]["code"] == "precondition_impulse_free"
    # the consensus test does not need it; the finite eigenvalue is 1
    assert check_consensus(sys).classification is ASS


def test_non_regular_pencil_is_indeterminate():
    p = MatrixPencil([[1, 0], [0, 0]], [[1, 0], [0, 0]])
    sys = NetworkSystem(p, WeightedDigraph(W_A))
    for check in (check_consensus, check_swarm_stability):
        v = check(sys)
        assert v.classification is INDETERMINATE
        assert v.reasons[0]["code"] == "pencil_not_regular"
    assert corollary_fast_paths(sys) is None


def test_defective_on_axis_mode_is_unstable():
    # A1 = [[0, 1], [0, 0]]: zero finite eigenvalue with a Jordan block
    F = np.array([[0.0, 1.0], [0.0, 0.0]])
    sys = assemble(MatrixPencil(np.eye(2), F), WeightedDigraph(W_3))
    v = check_swarm_stability(sys)
    assert v.classification is UNSTABLE
    assert any(r["code"] == "defective_on_axis_mode" for r in v.reasons)


def test_semisimple_zero_eigenvalue_is_noted():
    F = np.zeros((1, 1))
    sys = assemble(MatrixPencil(np.eye(1), F), WeightedDigraph(W_3))
    v = check_swarm_stability(sys)
    assert v.classification is STABLE
    assert any(r["code"] == "zero_finite_eigenvalue" for r in v.reasons)
    assert check_consensus(sys).classification is not ASS


def test_fast_path_instance_one():
    fast = corollary_fast_paths(system(1))
    assert fast.corollary == "real-finite-eigenvalues"
    assert fast.consensus


def test_fast_path_symmetric_disconnected():
    W = np.zeros((4, 4))
    W[0, 1] = W[1, 0] = W[2, 3] = W[3, 2] = 1.0
    F = np.array([[1.0, -2.0], [2.0, 1.0]])
    sys = assemble(MatrixPencil(np.eye(2), F), WeightedDigraph(W))
    fast = corollary_fast_paths(sys)
    assert fast.corollary == "symmetric-topology"
    assert not fast.consensus
    assert check_consensus(sys).classification is not ASS


def test_fast_path_absent():
    assert corollary_fast_paths(system(2)) is None
    sys = assemble(MatrixPencil(E, F1), WeightedDigraph([[0.0]]))
    assert corollary_fast_paths(sys) is None


def test_fast_paths_agree_with_full_check():
    rng = np.random.default_rng(1)
    fired = 0
    for _ in range(150):
        sys = random_system(rng, m_min=2, impulse_free=False)
        if rng.random() < 0.3:
            sys = assemble(sys.pencil, symmetric_connected(rng, sys.m))
        fast = corollary_fast_paths(sys)
        if fast is None:
            continue
        full = check_consensus(sys).classification
        if full is INDETERMINATE:
            continue
        fired += 1
        assert fast.consensus == (full is ASS)
    assert fired >= 50


def _sign(z, tol):
    return 0 if abs(z.real) <= tol else int(np.sign(z.real))


def test_scaling_law_consistency():
    rng = np.random.default_rng(2)
    systems = [system(k) for k in (1, 2, 3)] + [random_system(rng, m_min=2) for _ in range(100)]
    for sys in systems:
        tol = strict_tolerance(sys)
        for lam in sys.laplacian.nonzero_eigenvalues:
            direct = finite_eigenvalues(sys.pencil.scaled(-lam)).values
            via_law = -lam * sys.finite_eigenvalues.values
            assert sorted(_sign(z, tol) for z in direct) == sorted(_sign(z, tol) for z in via_law)


def test_consensus_implies_swarm_stability():
    rng = np.random.default_rng(3)
    seen = 0
    for _ in range(200):
        sys = random_system(rng, m_min=2)
        if check_consensus(sys).classification is ASS:
            seen += 1
            assert check_swarm_stability(sys).classification is STABLE
    assert seen > 10


@pytest.mark.parametrize("c", [0.01, 0.5, 3.0, 100.0])
def test_weight_scaling_preserves_verdicts(c):
    rng = np.random.default_rng(4)
    systems = [system(k) for k in (1, 2, 3)] + [random_system(rng, m_min=2) for _ in range(30)]
    for sys in systems:
        scaled = assemble(sys.pencil, WeightedDigraph(c * sys.graph.W))
        assert check_consensus(scaled).classification is check_consensus(sys).classification
        assert check_swarm_stability(scaled).classification is check_swarm_stability(sys).classification


def test_overall_verdict():
    assert overall_verdict(check_consensus(system(1)), check_swarm_stability(system(1))) is ASS
    assert overall_verdict(check_consensus(system(2)), check_swarm_stability(system(2))) is UNSTABLE
    assert overall_verdict(check_consensus(system(3)), check_swarm_stability(system(3))) is STABLE


def test_verdicts_serialize():
    v = check_consensus(system(2))
    json.dumps(v.to_json())
    json.dumps(v.product_table.to_json())
    assert v.to_json()["classification"] == "swarm_unstable"


def test_instance_three_differs_only_in_one_weight():
    assert np.count_nonzero(W_3 != W_A) == 1
    assert F2.shape == (3, 3)
