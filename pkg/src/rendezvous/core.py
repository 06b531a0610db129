"""Controller synthesis and evaluation.

Positions are held as ``(N, m)`` arrays, one row per robot. The stacked
vectors used in the error dynamics are their row-major ravel, which lines up
with ``kron(L, I_m) @ x.ravel()``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matops import CareSolution, as_matrix, solve_care
from .topology import Topology

PER_ROBOT = "per_robot"
LAPLACIAN_WEIGHTED = "laplacian_weighted"
LAW_VARIANTS = (PER_ROBOT, LAPLACIAN_WEIGHTED)


@dataclass(frozen=True)
class RobotModel:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.a, "a")
        b = as_matrix(self.b, "b")
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"a must be square, got {a.shape}")
        if b.shape[0] != a.shape[0]:
            raise ValueError(f"b has {b.shape[0]} rows, a has {a.shape[0]}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def r(self) -> int:
        return self.b.shape[1]

    @classmethod
    def planar(cls) -> "RobotModel":
        """Planar single integrator: ``a = 0``, ``b = I_2``."""
        return cls(np.zeros((2, 2)), np.eye(2))

    @classmethod
    def scalar(cls) -> "RobotModel":
        """Single integrator along one axis."""
        return cls(np.zeros((1, 1)), np.ones((1, 1)))


def broadcast_bounds(bound, n: int, r: int, default: float) -> np.ndarray:
    """Expand a bound spec (None, scalar, per-robot scalar, or per-robot vector) to ``(n, r)``."""
    if bound is None:
        return np.full((n, r), default)
    arr = np.array(bound, dtype=float)
    if arr.ndim == 0:
        return np.full((n, r), float(arr))
    if arr.ndim == 1 and arr.shape[0] == n:
        return np.repeat(arr[:, None], r, axis=1)
    if arr.shape == (n, r):
        return arr.copy()
    raise ValueError(f"bound shape {arr.shape} incompatible with n={n}, r={r}")


@dataclass(frozen=True)
class ControlLaw:
    """Optimal gain ``K = R^-1 B^T P`` plus per-robot input bounds ``(N, r)``."""

    care: CareSolution
    k: np.ndarray
    q_weight: np.ndarray
    r_weight: np.ndarray
    u_min: np.ndarray
    u_max: np.ndarray

    @property
    def p(self) -> np.ndarray:
        return self.care.p


def synthesize(model: RobotModel, q, r, u_min=None, u_max=None, n: int = 1) -> ControlLaw:
    """Solve the Riccati equation for ``model`` and build the control law.

    ``u_min``/``u_max`` accept anything :func:`broadcast_bounds` does; ``None``
    leaves that side unbounded.
    """
    q = as_matrix(q, "q")
    r = as_matrix(r, "r")
    care = solve_care(model.a, model.b, q, r)
    k = np.linalg.solve(r, model.b.T @ care.p)
    lo = broadcast_bounds(u_min, n, model.r, -np.inf)
    hi = broadcast_bounds(u_max, n, model.r, np.inf)
    if np.any(lo > hi):
        raise ValueError("u_min exceeds u_max")
    return ControlLaw(care=care, k=k, q_weight=q, r_weight=r, u_min=lo, u_max=hi)


def saturate(u, lo, hi) -> np.ndarray:
    """Componentwise clamp of ``u`` to ``[lo, hi]``."""
    return np.minimum(np.maximum(np.asarray(u, dtype=float), lo), hi)


def unconstrained_control(law: ControlLaw, x_i, neighbors) -> np.ndarray:
    """``u_i = -K sum_j a_ij (x_i - x_j)`` for ``neighbors`` as ``(a_ij, x_j)`` pairs."""
    x_i = np.asarray(x_i, dtype=float)
    acc = np.zeros_like(x_i)
    for w, x_j in neighbors:
        acc += w * (x_i - np.asarray(x_j, dtype=float))
    return -law.k @ acc


def disagreement(topology: Topology, x) -> np.ndarray:
    """``eps = (L kron I_m) x`` returned in ``(N, m)`` layout.

    Evaluated as ``sum_j a_ij (x_i - x_j)`` so coincident robots give an exact zero.
    """
    return weighted_differences(topology.adjacency, x)


def weighted_differences(adjacency, x) -> np.ndarray:
    """``sum_j a_ij (x_i - x_j)`` for ``x`` of shape ``(..., N, m)``."""
    x = np.asarray(x, dtype=float)
    diff = x[..., :, None, :] - x[..., None, :, :]
    return np.einsum("ij,...ija->...ia", np.asarray(adjacency, dtype=float), diff)


def stacked_control(law: ControlLaw, topology: Topology, eps, variant: str = PER_ROBOT) -> np.ndarray:
    """Unsaturated control for all robots, ``(N, r)``.

    ``per_robot`` applies ``-(I kron K) eps``; ``laplacian_weighted`` applies
    ``-(L kron K) eps``.
    """
    eps = np.asarray(eps, dtype=float)
    if variant == PER_ROBOT:
        return -eps @ law.k.T
    if variant == LAPLACIAN_WEIGHTED:
        return -(topology.laplacian @ eps) @ law.k.T
    raise ValueError(f"unknown law variant {variant!r}")


def quadratic_lyapunov(p, eps) -> float:
    """``0.5 * eps^T (I_N kron P) eps``."""
    eps = np.asarray(eps, dtype=float)
    return 0.5 * float(np.einsum("ia,ab,ib->", eps, np.asarray(p), eps))


def _relu_sq(v):
    return np.square(np.maximum(v, 0.0))


def saturated_lyapunov(p_diag, k_diag, lo, hi, eps) -> float:
    """Integral-of-saturation Lyapunov value.

    ``sum_i sum_a  integral_0^{eps_ia} p_a * sat_[lo_ia, hi_ia](k_a s) ds``,
    evaluated in closed form. Writing ``sat(y) = y - relu(y - hi) + relu(lo - y)``
    makes every piece integrable exactly, with infinite bounds contributing
    nothing. ``p_diag``, ``k_diag`` are length-``m`` vectors with ``k > 0``.
    """
    return float(saturated_lyapunov_trace(p_diag, k_diag, lo, hi, np.asarray(eps)[None])[0])


def saturated_lyapunov_trace(p_diag, k_diag, lo, hi, eps) -> np.ndarray:
    """:func:`saturated_lyapunov` for a ``(T, N, m)`` stack of disagreements."""
    p_diag = np.asarray(p_diag, dtype=float)
    k_diag = np.asarray(k_diag, dtype=float)
    eps = np.asarray(eps, dtype=float)
    lo = np.broadcast_to(lo, eps.shape[1:])
    hi = np.broadcast_to(hi, eps.shape[1:])
    ke = k_diag * eps
    with np.errstate(invalid="ignore"):
        upper = np.where(np.isinf(hi), 0.0, _relu_sq(ke - hi) - _relu_sq(-hi))
        lower = np.where(np.isinf(lo), 0.0, _relu_sq(lo - ke) - _relu_sq(lo))
    integral = 0.5 * k_diag * eps**2 - (upper + lower) / (2.0 * k_diag)
    # sat(k s) has the sign of s when the bounds straddle zero; drop roundoff below 0
    straddle = (lo <= 0) & (hi >= 0)
    integral = np.where(straddle, np.maximum(integral, 0.0), integral)
    return np.sum(p_diag * integral, axis=(1, 2))


def diagonal_gains(law: ControlLaw) -> tuple[np.ndarray, np.ndarray]:
    """Diagonals of ``P`` and ``K``; raises ``ValueError`` unless both are diagonal and square."""
    p, k = law.p, law.k
    if k.shape[0] != k.shape[1]:
        raise ValueError("saturated Lyapunov needs a square gain (r == m)")
    for name, mat in (("P", p), ("K", k)):
        if np.any(np.abs(mat - np.diag(np.diag(mat))) > 1e-12 * (1 + np.abs(mat).max())):
            raise ValueError(f"saturated Lyapunov needs diagonal {name}")
    kd = np.diag(k).copy()
    if np.any(kd <= 0):
        raise ValueError("saturated Lyapunov needs a positive gain diagonal")
    return np.diag(p).copy(), kd


def cost_terms(eps, u, q, r) -> tuple[np.ndarray, np.ndarray]:
    """Per-robot state and effort rates ``0.5 eps_i^T Q eps_i`` and ``0.5 u_i^T R u_i``."""
    eps = np.asarray(eps, dtype=float)
    u = np.asarray(u, dtype=float)
    state = 0.5 * np.einsum("ia,ab,ib->i", eps, np.asarray(q), eps)
    effort = 0.5 * np.einsum("ia,ab,ib->i", u, np.asarray(r), u)
    return state, effort


def cost_rate(eps, u, q, r) -> float:
    """Instantaneous performance-index integrand, summed over robots."""
    state, effort = cost_terms(eps, u, q, r)
    return float(state.sum() + effort.sum())
