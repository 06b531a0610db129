"""Lossy, delayed neighbour measurements.

Each directed link ``(i, j)`` (robot ``i`` listening to robot ``j``) has a
fixed delay in control ticks, a Bernoulli drop probability and Gaussian
measurement noise. A dropped packet leaves the receiver holding its last
delivered sample. Every link draws from its own generator, spawned from the
scenario seed with the link indices as the spawn key, so results do not
depend on iteration order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

MAX_DELAY = 50


@dataclass(frozen=True)
class NetworkModel:
    """Channel parameters; each field is a scalar or an ``(N, N)`` per-link array."""

    delay_periods: object = 0
    drop_probability: object = 0.0
    sensor_noise_std: float = 0.0
    max_delay: int = MAX_DELAY

    def per_link(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        delay = np.broadcast_to(np.asarray(self.delay_periods), (n, n)).astype(int)
        drop = np.broadcast_to(np.asarray(self.drop_probability, dtype=float), (n, n))
        return delay, drop

    @property
    def is_perfect(self) -> bool:
        return (not np.any(np.asarray(self.delay_periods))
                and not np.any(np.asarray(self.drop_probability))
                and self.sensor_noise_std == 0)

    def errors(self, n: int) -> list[tuple[str, str]]:
        """Validation problems as ``(json_pointer, message)`` pairs."""
        out = []
        for name in ("delay_periods", "drop_probability"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim not in (0, 2) or (arr.ndim == 2 and arr.shape != (n, n)):
                out.append((f"/network/{name}", f"must be a number or an {n}x{n} array"))
        if out:
            return out
        delay, drop = np.asarray(self.delay_periods, dtype=float), np.asarray(self.drop_probability, dtype=float)
        if np.any(delay < 0) or np.any(delay != np.round(delay)):
            out.append(("/network/delay_periods", "must be nonnegative integers"))
        elif np.any(delay > self.max_delay):
            out.append(("/network/delay_periods", f"exceeds the buffer limit of {self.max_delay} ticks"))
        if np.any(drop < 0) or np.any(drop >= 1):
            out.append(("/network/drop_probability", "must lie in [0, 1)"))
        if not self.sensor_noise_std >= 0:
            out.append(("/network/sensor_noise_std", "must be nonnegative"))
        return out


class Network:
    """Runtime state of all links for one simulation run."""

    def __init__(self, model: NetworkModel, adjacency, x0, seed: int):
        adjacency = np.asarray(adjacency)
        n = adjacency.shape[0]
        self.model = model
        self.delay, self.drop = model.per_link(n)
        self.links = [(int(i), int(j)) for i, j in np.argwhere(adjacency > 0)]
        self.rng = {
            (i, j): np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i, j)))
            for i, j in self.links
        }
        x0 = np.asarray(x0, dtype=float)
        # Neighbour initial positions are known before the first exchange.
        self.held = {(i, j): x0[j].copy() for i, j in self.links}
        depth = int(self.delay.max(initial=0)) + 1
        self.history: deque[np.ndarray] = deque(maxlen=depth)

    def observe(self, x) -> None:
        """Record the true positions broadcast at the current tick."""
        self.history.append(np.array(x, dtype=float))

    def deliver(self, link: tuple[int, int], now: int) -> np.ndarray:
        """Sample of robot ``j`` as seen by robot ``i`` at tick ``now``."""
        i, j = link
        rng = self.rng[link]
        u = rng.random()
        noise = rng.normal(0.0, 1.0, size=self.held[link].shape)
        if u < self.drop[i, j]:
            return self.held[link]
        lag = min(int(self.delay[i, j]), now, len(self.history) - 1)
        sample = self.history[-1 - lag][j] + self.model.sensor_noise_std * noise
        self.held[link] = sample
        return sample

    def local_disagreement(self, x, adjacency, now: int) -> np.ndarray:
        """``sum_j a_ij (x_i - xhat_ij)`` per robot from delivered samples."""
        x = np.asarray(x, dtype=float)
        eps = np.zeros_like(x)
        for i, j in self.links:
            eps[i] += adjacency[i, j] * (x[i] - self.deliver((i, j), now))
        return eps
