"""Network layout and the erasure channel.

Two APs each serve ``N`` receivers; the first ``M`` receivers of each AP sit in
the region both APs reach. Receivers ``1..N`` belong to AP1 and ``N+1..2N`` to
AP2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class NetworkConfig:
    N: int
    M: int
    p: float
    B: int
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ConfigError(f"N must be a positive integer, got {self.N!r}")
        if not isinstance(self.M, (int, np.integer)) or not 1 <= self.M <= self.N:
            raise ConfigError(f"M must satisfy 1 <= M <= N={self.N}, got {self.M!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"p must lie in [0, 1], got {self.p!r}")
        if not isinstance(self.B, (int, np.integer)) or self.B < 1:
            raise ConfigError(f"B must be a positive integer, got {self.B!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed!r}")

    @property
    def n_receivers(self) -> int:
        return 2 * self.N

    @property
    def n_overlap(self) -> int:
        return 2 * self.M


@dataclass(frozen=True)
class ReceiverProfile:
    id: int
    home_ap: int
    in_overlap: bool

    @property
    def other_ap(self) -> int:
        return 3 - self.home_ap


def build_topology(cfg: NetworkConfig) -> list[ReceiverProfile]:
    if not isinstance(cfg, NetworkConfig):
        raise ConfigError("expected a NetworkConfig")
    out = []
    for ap in (1, 2):
        for local in range(1, cfg.N + 1):
            rid = (ap - 1) * cfg.N + local
            out.append(ReceiverProfile(rid, ap, local <= cfg.M))
    return out


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent PCG64 stream for one trial, keyed by ``seed ^ trial``."""
    return np.random.Generator(np.random.PCG64(seed ^ trial))


def deliver_clean(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """One uncollided transmission to ``n`` receivers; each gets it w.p. 1-p."""
    return rng.random(n) < 1.0 - p


def deliver_collided(receivers: Sequence[ReceiverProfile], p: float,
                     rng: np.random.Generator) -> np.ndarray:
    """A collision reaches an overlap receiver only if both packets survive."""
    for r in receivers:
        if not r.in_overlap:
            raise DomainError(f"receiver {r.id} is outside the overlap region")
    return rng.random(len(receivers)) < (1.0 - p) ** 2
