"""Saturation switching times.

Two notions of "switch" are computed side by side:

* the root of the trajectory-matching equality, where the trajectory driven
  by the extreme control meets the unconstrained closed-loop trajectory from
  the same start (:func:`solve_switch_time`, :func:`matching_residual`);
* the bound re-entry time, where the unconstrained control computed along the
  saturated (linear) trajectory comes back inside the bound
  (:func:`bound_reentry_time`), which is what a simulation observes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import saturate
from .matops import expm

EXCLUSION_RADIUS = 1e-6
HORIZON = 100.0
ROOT_TOL = 1e-10
REGIME_TOL = 1e-9

UPPER = "upper"
LOWER = "lower"

SAT_MIN = "sat_min"
INTERIOR = "linear_interior"
SAT_MAX = "sat_max"


class NoSwitchError(ValueError):
    """No admissible switching root (or saturation inactive at t = 0)."""


@dataclass(frozen=True)
class SwitchPrediction:
    t_s: float
    residual: float
    bound_side: str
    robot_index: int = 0
    axis_index: int = 0

    def to_dict(self) -> dict:
        return {
            "t_s": self.t_s,
            "residual": self.residual,
            "bound_side": self.bound_side,
            "robot_index": self.robot_index,
            "axis_index": self.axis_index,
        }


@dataclass(frozen=True)
class RegimeEvent:
    time: float
    robot_index: int
    axis_index: int
    from_regime: str
    to_regime: str

    def to_dict(self) -> dict:
        return {
            "time": self.time,
            "robot_index": self.robot_index,
            "axis_index": self.axis_index,
            "from_regime": self.from_regime,
            "to_regime": self.to_regime,
        }


def _integrated_exp(a: np.ndarray, t: float) -> np.ndarray:
    """``integral_0^t exp(a s) ds`` via the block-triangular exponential."""
    n = a.shape[0]
    if not np.any(a):
        return t * np.eye(n)
    blk = np.zeros((2 * n, 2 * n))
    blk[:n, :n] = a
    blk[:n, n:] = np.eye(n)
    return expm(blk * t)[:n, n:]


def matching_residual(t: float, eps0_saturated, eps0, a_stacked, input_map,
                      closed_loop, u_extreme) -> float:
    """Mismatch between the extreme-control and closed-loop trajectories at ``t``.

    Left side: ``exp(A t) eps0_sat + integral_0^t exp(A (t - s)) ds * input_map @ u``.
    Right side: ``exp((A - closed_loop) t) eps0``. ``a_stacked`` is
    ``I kron A``, ``input_map`` is ``L kron B`` and ``closed_loop`` is the
    feedback term subtracted from the drift (``L kron B K`` for the
    per-robot law). All vectors are stacked.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    a = np.atleast_2d(np.asarray(a_stacked, dtype=float))
    g = np.atleast_2d(np.asarray(input_map, dtype=float))
    m = np.atleast_2d(np.asarray(closed_loop, dtype=float))
    e_sat = np.atleast_1d(np.asarray(eps0_saturated, dtype=float))
    e0 = np.atleast_1d(np.asarray(eps0, dtype=float))
    u = np.atleast_1d(np.asarray(u_extreme, dtype=float))
    lhs = expm(a * t) @ e_sat + _integrated_exp(a, t) @ (g @ u)
    rhs = expm((a - m) * t) @ e0
    return float(np.linalg.norm(lhs - rhs))


def _scalar_gap(t: float, k: float, x0: float, u_bound: float) -> float:
    return u_bound * t + x0 - np.exp(-k * t) * x0


def _saturation_side(k: float, x0: float, lo: float, hi: float) -> str | None:
    u = -k * x0
    if u < lo:
        return LOWER
    if u > hi:
        return UPPER
    return None


def solve_switch_time(k: float, x0: float, u_bound: float, side: str, *,
                      robot_index: int = 0, axis_index: int = 0,
                      delta: float = EXCLUSION_RADIUS, horizon: float = HORIZON,
                      tol: float = ROOT_TOL) -> SwitchPrediction:
    """First root past ``delta`` of ``f(t) = u_bound t + x0 - exp(-k t) x0``.

    ``side`` names which bound ``u_bound`` is. The unconstrained control
    ``-k x0`` must violate it at ``t = 0``. The root is bracketed on a
    geometric grid over ``[delta, horizon]`` and refined by bisection.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if side not in (UPPER, LOWER):
        raise ValueError(f"side must be {UPPER!r} or {LOWER!r}")
    u0 = -k * x0
    active = u0 < u_bound if side == LOWER else u0 > u_bound
    if not active:
        raise NoSwitchError(
            f"saturation inactive at t=0: -k*x0={u0:g} vs {side} bound {u_bound:g}")

    grid = np.geomspace(delta, horizon, 4000)
    vals = np.array([_scalar_gap(t, k, x0, u_bound) for t in grid])
    sign = np.sign(vals)
    hits = np.flatnonzero(sign[:-1] * sign[1:] <= 0)
    if hits.size == 0:
        raise NoSwitchError(f"no switching root in [{delta:g}, {horizon:g}] s")
    i = int(hits[0])
    lo, hi = float(grid[i]), float(grid[i + 1])
    f_lo = vals[i]
    if vals[i] == 0.0:
        hi = lo
    elif vals[i + 1] == 0.0:
        lo = hi
    while hi - lo > 4 * np.finfo(float).eps * hi:
        mid = 0.5 * (lo + hi)
        f_mid = _scalar_gap(mid, k, x0, u_bound)
        if f_mid == 0.0:
            lo = hi = mid
            break
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    t_s = 0.5 * (lo + hi)
    res = abs(_scalar_gap(t_s, k, x0, u_bound))
    if res > tol:
        raise NoSwitchError(f"bisection stalled with |f| = {res:.3e}")
    return SwitchPrediction(t_s=t_s, residual=res, bound_side=side,
                            robot_index=robot_index, axis_index=axis_index)


def bound_reentry_time(k: float, x0: float, u_bound: float) -> float:
    """Time at which ``-k x(t)`` re-enters the bound along ``x(t) = u_bound t + x0``."""
    if u_bound == 0:
        return np.inf
    return float((-u_bound / k - x0) / u_bound)


def predict_switches(k_diag, eps0, lo, hi) -> list[SwitchPrediction]:
    """Predictions for every robot/axis whose initial unconstrained control is clamped."""
    out = []
    eps0 = np.asarray(eps0, dtype=float)
    for i in range(eps0.shape[0]):
        for a in range(eps0.shape[1]):
            side = _saturation_side(k_diag[a], eps0[i, a], lo[i, a], hi[i, a])
            if side is None:
                continue
            bound = lo[i, a] if side == LOWER else hi[i, a]
            try:
                out.append(solve_switch_time(k_diag[a], eps0[i, a], bound, side,
                                             robot_index=i, axis_index=a))
            except NoSwitchError:
                continue
    return out


def classify(u_raw, lo, hi, tol: float = REGIME_TOL) -> np.ndarray:
    """Regime label per component: saturated when the clamped value sits on a bound."""
    u_raw = np.asarray(u_raw, dtype=float)
    clamped = saturate(u_raw, lo, hi)
    at_hi = np.abs(clamped - hi) <= tol
    at_lo = np.abs(clamped - lo) <= tol
    labels = np.full(u_raw.shape, INTERIOR, dtype=object)
    labels[at_lo] = SAT_MIN
    # lo == hi: the side is decided by the raw control
    labels[at_hi & (~at_lo | (u_raw > hi))] = SAT_MAX
    return labels


def detect_regimes(times, u_raw, lo, hi, tol: float = REGIME_TOL) -> list[RegimeEvent]:
    """Regime transitions along a logged control history.

    ``u_raw`` is ``(T, N, r)``; ``lo``/``hi`` broadcast against ``(N, r)``.
    Events are ordered by time, then robot, then axis.
    """
    u_raw = np.asarray(u_raw, dtype=float)
    if u_raw.shape[0] == 0:
        raise ValueError("empty log")
    labels = classify(u_raw, lo, hi, tol)
    events = []
    changed = labels[1:] != labels[:-1]
    for s, i, a in zip(*np.nonzero(changed)):
        events.append(RegimeEvent(time=float(times[s + 1]), robot_index=int(i),
                                  axis_index=int(a), from_regime=labels[s, i, a],
                                  to_regime=labels[s + 1, i, a]))
    return events
