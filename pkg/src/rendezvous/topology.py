"""Communication graphs and their Laplacians.

Edge convention: ``adjacency[i, j] > 0`` means robot ``i`` listens to robot
``j`` (``j`` is in the neighbour set of ``i``), so information flows from
``j`` to ``i``. Row ``i`` of the Laplacian is what robot ``i``'s control law
sums over: ``l_ii = sum_j a_ij`` and ``l_ij = -a_ij``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

ZERO_EIG_TOL = 1e-9


def _check_adjacency(adjacency) -> np.ndarray:
    a = np.array(adjacency, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("adjacency has non-finite entries")
    if np.any(a < 0):
        i, j = np.argwhere(a < 0)[0]
        raise ValueError(f"adjacency[{i}][{j}] is negative")
    diag = np.flatnonzero(np.diag(a))
    if diag.size:
        i = int(diag[0])
        raise ValueError(f"adjacency[{i}][{i}] must be zero")
    return a


def laplacian_of(adjacency) -> np.ndarray:
    """``L = D - A`` with ``D`` the diagonal of row sums (in-degrees)."""
    a = _check_adjacency(adjacency)
    return np.diag(a.sum(axis=1)) - a


@dataclass(frozen=True)
class Topology:
    adjacency: np.ndarray
    laplacian: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = _check_adjacency(self.adjacency)
        a.setflags(write=False)
        lap = laplacian_of(a)
        lap.setflags(write=False)
        object.__setattr__(self, "adjacency", a)
        object.__setattr__(self, "laplacian", lap)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def neighbors(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.adjacency[i] > 0)]

    @property
    def is_undirected(self) -> bool:
        return bool(np.array_equal(self.adjacency, self.adjacency.T))

    @classmethod
    def complete(cls, n: int) -> "Topology":
        return cls(np.ones((n, n)) - np.eye(n))

    @classmethod
    def path(cls, n: int) -> "Topology":
        a = np.zeros((n, n))
        for i in range(n - 1):
            a[i, i + 1] = a[i + 1, i] = 1.0
        return cls(a)

    @classmethod
    def default4(cls) -> "Topology":
        """Default four-robot digraph in which robot 3 (1-indexed) reaches everyone.

        Robot 3 listens to nobody; robots 2 and 4 listen to robot 3; robot 1
        listens to robots 2 and 4. Laplacian spectrum is {0, 1, 1, 2}.
        """
        a = np.zeros((4, 4))
        a[0, 1] = a[0, 3] = 1.0
        a[1, 2] = 1.0
        a[3, 2] = 1.0
        return cls(a)


def reachable_from(adjacency, root: int) -> set[int]:
    """Nodes that receive information (transitively) from ``root``."""
    a = np.asarray(adjacency)
    seen = {root}
    queue = deque([root])
    while queue:
        j = queue.popleft()
        # i listens to j  =>  information flows j -> i
        for i in np.flatnonzero(a[:, j] > 0):
            i = int(i)
            if i not in seen:
                seen.add(i)
                queue.append(i)
    return seen


def spanning_tree_roots(t: Topology) -> list[int]:
    return [r for r in range(t.n) if len(reachable_from(t.adjacency, r)) == t.n]


def has_directed_spanning_tree(t: Topology) -> bool:
    return bool(spanning_tree_roots(t))


def smallest_positive_eigenvalue(laplacian) -> float:
    """Smallest eigenvalue real part above ``ZERO_EIG_TOL``.

    Raises ``ValueError`` if every eigenvalue is (numerically) zero.
    """
    re = np.linalg.eigvals(np.asarray(laplacian, dtype=float)).real
    pos = re[re > ZERO_EIG_TOL]
    if pos.size == 0:
        raise ValueError("laplacian has no positive eigenvalue (edgeless graph?)")
    return float(pos.min())
