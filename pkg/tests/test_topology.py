import itertools

import numpy as np
import pytest
import sympy

from rendezvous.topology import (Topology, has_directed_spanning_tree, laplacian_of,
                                 smallest_positive_eigenvalue, spanning_tree_roots)


def exact_spectrum(lap):
    """Roots of the characteristic polynomial, computed symbolically."""
    m = sympy.Matrix(np.asarray(lap, dtype=int).tolist())
    lam = sympy.Symbol("lam")
    return sorted(float(sympy.re(r)) for r in sympy.Poly(m.charpoly(lam).as_expr(), lam).all_roots())


def test_laplacian_complete_pair():
    np.testing.assert_array_equal(laplacian_of([[0, 1], [1, 0]]), [[1, -1], [-1, 1]])


def test_laplacian_undirected_path():
    lap = Topology.path(4).laplacian
    np.testing.assert_array_equal(np.diag(lap), [1, 2, 2, 1])
    for i in range(3):
        assert lap[i, i + 1] == lap[i + 1, i] == -1
    np.testing.assert_array_equal(lap.sum(axis=1), 0)


def test_laplacian_empty_graph():
    np.testing.assert_array_equal(laplacian_of(np.zeros((3, 3))), np.zeros((3, 3)))


@pytest.mark.parametrize("bad, msg", [
    ([[0, -1], [1, 0]], "negative"),
    ([[1, 1], [1, 0]], "must be zero"),
])
def test_laplacian_rejects_bad_adjacency(bad, msg):
    with pytest.raises(ValueError, match=msg):
        laplacian_of(bad)


def test_directed_chain_has_spanning_tree():
    # 1 -> 2 -> 3 -> 4: robot k+1 listens to robot k
    a = np.zeros((4, 4))
    for k in range(3):
        a[k + 1, k] = 1
    t = Topology(a)
    assert has_directed_spanning_tree(t)
    assert spanning_tree_roots(t) == [0]


def test_two_disconnected_pairs():
    a = np.zeros((4, 4))
    a[0, 1] = a[1, 0] = a[2, 3] = a[3, 2] = 1
    assert not has_directed_spanning_tree(Topology(a))


def test_outward_star():
    a = np.zeros((5, 5))
    a[1:, 0] = 1  # every leaf listens to the centre
    assert spanning_tree_roots(Topology(a)) == [0]


def test_default_topology_is_rooted_at_robot_three():
    t = Topology.default4()
    assert spanning_tree_roots(t) == [2]
    assert sorted(np.linalg.eigvals(t.laplacian).real.round(12)) == [0, 1, 1, 2]


def test_smallest_positive_eigenvalue_complete_pair():
    assert smallest_positive_eigenvalue(Topology.complete(2).laplacian) == pytest.approx(2.0, abs=1e-12)


def test_smallest_positive_eigenvalue_path4():
    lap = Topology.path(4).laplacian
    oracle = exact_spectrum(lap)
    assert oracle[1] == pytest.approx(2 - np.sqrt(2), abs=1e-15)
    assert smallest_positive_eigenvalue(lap) == pytest.approx(0.5857864376269049, abs=1e-12)


def test_smallest_positive_eigenvalue_complete4():
    lap = Topology.complete(4).laplacian
    assert exact_spectrum(lap) == pytest.approx([0, 4, 4, 4])
    assert smallest_positive_eigenvalue(lap) == pytest.approx(4.0, abs=1e-12)


def test_edgeless_has_no_positive_eigenvalue():
    with pytest.raises(ValueError):
        smallest_positive_eigenvalue(np.zeros((3, 3)))


def brute_force_rooted(a):
    """Root exists iff some node reaches all others through repeated relaxation."""
    n = a.shape[0]
    # reach[j, i]: information from j arrives at i
    reach = (a.T > 0) | np.eye(n, dtype=bool)
    for k, i, j in itertools.product(range(n), repeat=3):
        reach[i, j] |= reach[i, k] and reach[k, j]
    return bool(reach.all(axis=1).any())


def test_spanning_tree_matches_closure_on_all_3_node_digraphs():
    off = [(i, j) for i in range(3) for j in range(3) if i != j]
    for bits in itertools.product([0, 1], repeat=len(off)):
        a = np.zeros((3, 3))
        for (i, j), b in zip(off, bits):
            a[i, j] = b
        assert has_directed_spanning_tree(Topology(a)) == brute_force_rooted(a)
