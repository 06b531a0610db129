"""Fixed-step simulation of N robots under the (saturated) consensus law.

Controls are recomputed every ``control_period`` from the latest delivered
neighbour samples, clamped to the input bounds and held constant (zero-order
hold) while the robot dynamics are integrated with classical RK4 at step
``dt``.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import PER_ROBOT, ControlLaw, RobotModel
from .matops import NumericalError
from .network import Network, NetworkModel
from .switching import (RegimeEvent, SwitchPrediction, bound_reentry_time,
                        detect_regimes, predict_switches)
from .topology import Topology, has_directed_spanning_tree

BLOWUP = 1e6


class ScenarioError(ValueError):
    """Invalid scenario; ``errors`` lists every ``(json_pointer, message)`` found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p or '/'}: {m}" for p, m in self.errors))


class SimulationBlowUp(NumericalError):
    pass


def _weight(w, dim: int) -> np.ndarray:
    """Scalar weights multiply the identity."""
    if np.ndim(w) == 0:
        return float(w) * np.eye(dim)
    return np.atleast_2d(np.array(w, dtype=float))


@dataclass(frozen=True)
class Scenario:
    model: RobotModel
    topology: Topology
    x0: np.ndarray
    q: np.ndarray
    r: np.ndarray
    u_min: np.ndarray
    u_max: np.ndarray
    control_period: float = 0.1
    dt: float = 0.01
    t_end: float = 20.0
    consensus_tol: float = 1e-3
    network: NetworkModel = field(default_factory=NetworkModel)
    seed: int = 0
    law_variant: str = PER_ROBOT
    name: str = ""

    def __post_init__(self):
        n, m, r = self.topology.n, self.model.m, self.model.r
        x0 = np.array(self.x0, dtype=float)
        if x0.ndim == 1 and m == 1:
            x0 = x0[:, None]
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "q", _weight(self.q, m))
        object.__setattr__(self, "r", _weight(self.r, r))
        errors = []
        try:
            object.__setattr__(self, "u_min", core.broadcast_bounds(self.u_min, n, r, -np.inf))
        except ValueError as exc:
            errors.append(("/bounds/u_min", str(exc)))
        try:
            object.__setattr__(self, "u_max", core.broadcast_bounds(self.u_max, n, r, np.inf))
        except ValueError as exc:
            errors.append(("/bounds/u_max", str(exc)))
        errors += self._errors(n, m, r)
        if errors:
            raise ScenarioError(errors)

    def _errors(self, n, m, r):
        out = []
        if self.x0.shape != (n, m):
            out.append(("/x0", f"expected {n} robots x {m} states, got shape {self.x0.shape}"))
        elif not np.all(np.isfinite(self.x0)):
            out.append(("/x0", "non-finite entries"))
        if self.q.shape != (m, m):
            out.append(("/q", f"expected {m}x{m}, got {self.q.shape}"))
        elif not np.allclose(self.q, self.q.T) or np.linalg.eigvalsh(self.q).min() < -1e-12:
            out.append(("/q", "must be symmetric positive semidefinite"))
        if self.r.shape != (r, r):
            out.append(("/r", f"expected {r}x{r}, got {self.r.shape}"))
        elif not np.allclose(self.r, self.r.T) or np.linalg.eigvalsh(self.r).min() <= 0:
            out.append(("/r", "must be symmetric positive definite"))
        if isinstance(self.u_min, np.ndarray) and isinstance(self.u_max, np.ndarray):
            if self.u_min.shape == self.u_max.shape and np.any(self.u_min > self.u_max):
                out.append(("/bounds", "u_min exceeds u_max"))
        if not self.dt > 0:
            out.append(("/dt", "must be positive"))
        if not self.control_period > 0:
            out.append(("/control_period", "must be positive"))
        elif self.dt > 0:
            if self.dt > self.control_period:
                out.append(("/dt", "must not exceed control_period"))
            else:
                ratio = self.control_period / self.dt
                if abs(ratio - round(ratio)) > 1e-9 * ratio:
                    out.append(("/control_period", "must be an integer multiple of dt"))
        if not self.t_end >= 0:
            out.append(("/t_end", "must be nonnegative"))
        if not self.consensus_tol > 0:
            out.append(("/consensus_tol", "must be positive"))
        if self.law_variant not in core.LAW_VARIANTS:
            out.append(("/law_variant", f"must be one of {list(core.LAW_VARIANTS)}"))
        out += self.network.errors(n)
        return out

    @property
    def n(self) -> int:
        return self.topology.n

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def control_law(self) -> ControlLaw:
        return core.synthesize(self.model, self.q, self.r, self.u_min, self.u_max, n=self.n)


@dataclass
class TrajectoryLog:
    t: np.ndarray            # (T,)
    x: np.ndarray            # (T, N, m)
    u_raw: np.ndarray        # (T, N, r) control before clamping
    u: np.ndarray            # (T, N, r) applied control, held until the next sample
    saturated: np.ndarray    # (T, N, r) bool
    v_quad: np.ndarray       # (T,)
    v_sat: np.ndarray        # (T,)
    state_rate: np.ndarray   # (T, N)
    effort_rate: np.ndarray  # (T, N)
    j_cum: np.ndarray        # (T,)
    ji_cum: np.ndarray       # (T, N)
    consensus_time: float | None = None
    events: list[RegimeEvent] = field(default_factory=list)
    predictions: list[SwitchPrediction] = field(default_factory=list)
    reentry_times: list[dict] = field(default_factory=list)

    @property
    def j_total(self) -> float:
        return float(self.j_cum[-1])

    @property
    def j_state(self) -> float:
        return float(_trapezoid(self.state_rate.sum(axis=1), self.t))

    @property
    def j_effort(self) -> float:
        dt = np.diff(self.t)
        return float(np.sum(self.effort_rate[:-1].sum(axis=1) * dt))


def _trapezoid(y, t):
    if len(t) < 2:
        return 0.0
    return np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t))


def max_pairwise_distance(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    diff = x[:, None, :] - x[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=-1)).max())


def consensus_reached(x, tol: float) -> bool:
    """True iff every pair of robots is within ``tol`` of each other."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    return max_pairwise_distance(x) <= tol


def accumulate_cost(state_rate, effort_rate, dt: float):
    """Cumulative cost per robot and in total.

    The state term is integrated with the trapezoid rule; the effort term is
    exact for zero-order-held controls (the rate at sample ``k`` holds over
    ``[t_k, t_k+1)``).
    """
    state_rate = np.asarray(state_rate, dtype=float)
    effort_rate = np.asarray(effort_rate, dtype=float)
    inc = 0.5 * dt * (state_rate[1:] + state_rate[:-1]) + dt * effort_rate[:-1]
    ji = np.vstack([np.zeros((1, state_rate.shape[1])), np.cumsum(inc, axis=0)])
    return ji.sum(axis=1), ji


def _rk4_step(x, u, a, b, dt):
    drive = u @ b.T

    def f(y):
        return y @ a.T + drive

    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate(s: Scenario, law: ControlLaw | None = None) -> TrajectoryLog:
    """Run one scenario to ``t_end`` and return its full log."""
    if law is None:
        law = s.control_law()
    if not has_directed_spanning_tree(s.topology):
        warnings.warn("topology has no directed spanning tree; consensus is not expected",
                      RuntimeWarning, stacklevel=2)
    n_steps = int(round(s.t_end / s.dt))
    per_tick = int(round(s.control_period / s.dt))
    adj = s.topology.adjacency
    lo, hi = law.u_min, law.u_max
    net = None if s.network.is_perfect else Network(s.network, adj, s.x0, s.seed)

    T = n_steps + 1
    n, m, r = s.n, s.model.m, s.model.r
    xs = np.empty((T, n, m))
    u_raw = np.empty((T, n, r))
    u_app = np.empty((T, n, r))

    x = s.x0.copy()
    ur = ua = None
    for step in range(T):
        if step % per_tick == 0:
            tick = step // per_tick
            if net is None:
                eps_hat = core.disagreement(s.topology, x)
            else:
                net.observe(x)
                eps_hat = net.local_disagreement(x, adj, tick)
            ur = core.stacked_control(law, s.topology, eps_hat, s.law_variant)
            ua = core.saturate(ur, lo, hi)
        xs[step] = x
        u_raw[step] = ur
        u_app[step] = ua
        if step == n_steps:
            break
        x = _rk4_step(x, ua, s.model.a, s.model.b, s.dt)
        if not np.all(np.abs(x) <= BLOWUP):
            raise SimulationBlowUp(f"state exceeded {BLOWUP:g} at t={(step + 1) * s.dt:g}s")

    t = np.arange(T) * s.dt
    return finalize_log(s, law, t, xs, u_raw, u_app)


def finalize_log(s: Scenario, law: ControlLaw, t, xs, u_raw, u_app) -> TrajectoryLog:
    """Derive Lyapunov traces, costs, regime events and predictions from raw samples."""
    lo, hi = law.u_min, law.u_max
    eps = core.weighted_differences(s.topology.adjacency, xs)
    v_quad = 0.5 * np.einsum("tia,ab,tib->t", eps, law.p, eps)
    try:
        p_diag, k_diag = core.diagonal_gains(law)
    except ValueError:
        p_diag = k_diag = None
        v_sat = np.full(len(t), np.nan)
    else:
        v_sat = core.saturated_lyapunov_trace(p_diag, k_diag, lo, hi, eps)
    state = 0.5 * np.einsum("tia,ab,tib->ti", eps, s.q, eps)
    effort = 0.5 * np.einsum("tia,ab,tib->ti", u_app, s.r, u_app)
    j_cum, ji_cum = accumulate_cost(state, effort, s.dt)

    spread = np.sqrt(((xs[:, :, None, :] - xs[:, None, :, :]) ** 2).sum(axis=-1)).max(axis=(1, 2))
    hits = np.flatnonzero(spread <= s.consensus_tol)
    consensus_time = float(t[hits[0]]) if hits.size else None

    events = detect_regimes(t, u_raw, lo, hi)
    predictions, reentry = [], []
    if k_diag is not None and s.law_variant == PER_ROBOT:
        predictions = predict_switches(k_diag, eps[0], lo, hi)
        for p in predictions:
            bound = (hi if p.bound_side == "upper" else lo)[p.robot_index, p.axis_index]
            reentry.append({
                "robot_index": p.robot_index,
                "axis_index": p.axis_index,
                "bound_side": p.bound_side,
                "t_reentry": bound_reentry_time(k_diag[p.axis_index],
                                                eps[0, p.robot_index, p.axis_index], bound),
            })

    return TrajectoryLog(
        t=t, x=xs, u_raw=u_raw, u=u_app,
        saturated=(u_raw > hi) | (u_raw < lo),
        v_quad=v_quad, v_sat=v_sat,
        state_rate=state, effort_rate=effort,
        j_cum=j_cum, ji_cum=ji_cum,
        consensus_time=consensus_time,
        events=events, predictions=predictions, reentry_times=reentry,
    )
