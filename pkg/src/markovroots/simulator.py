"""Synthetic sample paths observed at random, state-dependent gaps.

Each path draws its covariates, a uniform initial state at time 0, and then
repeats: gap ``tau = 1 + Poisson(lambda(current state))``, next state from the
current row of ``P(z)^tau``. It stops at the first event whose cumulative gap
reaches the window length.

Every path has its own random stream keyed by ``(seed, replication, path_id)``,
so a dataset of N paths is a prefix of any larger one and generation order
does not matter.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .markov import (
    CovariatePoint,
    LinkModel,
    PsiSpec,
    StochasticMatrix,
    ground_truth,
    link_evaluate,
)
from .paths import SamplePath

__all__ = [
    "ConfigError",
    "CovariateLaw",
    "SimConfig",
    "simulate_paths",
    "gap_histogram",
    "default_gap_means",
]


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def default_gap_means(S: int) -> tuple[float, ...]:
    return tuple(10.0 if i < 2 else 15.0 for i in range(S))


@dataclass(frozen=True)
class CovariateLaw:
    """``Z_c = shift + Beta(a, b)`` and ``Z_d ~ Bernoulli(q)``."""

    beta_a: float = 2.0
    beta_b: float = 2.0
    shift: float = 1.0
    bernoulli_q: float = 0.7

    def draw(self, rng: np.random.Generator) -> CovariatePoint:
        zc = self.shift + rng.beta(self.beta_a, self.beta_b)
        zd = int(rng.random() < self.bernoulli_q)
        return CovariatePoint((zc,), (zd,))


@dataclass(frozen=True)
class SimConfig:
    S: int = 3
    with_covariates: bool = False
    N: int = 1000
    L_window: int = 20
    gap_means: tuple[float, ...] | None = None
    matrix: StochasticMatrix | None = None
    psi: PsiSpec = field(default_factory=PsiSpec.reference)
    covariate_law: CovariateLaw = field(default_factory=CovariateLaw)
    seed: int = 0
    replications: int = 1

    def __post_init__(self):
        if self.matrix is None:
            try:
                object.__setattr__(self, "matrix", ground_truth(self.S))
            except ValueError as exc:
                raise ConfigError("sim.matrix", str(exc)) from None
        if self.matrix.dim != self.S:
            raise ConfigError("sim.matrix", f"dimension {self.matrix.dim} != S={self.S}")
        if self.gap_means is None:
            object.__setattr__(self, "gap_means", default_gap_means(self.S))
        object.__setattr__(self, "gap_means", tuple(float(v) for v in self.gap_means))
        if len(self.gap_means) != self.S:
            raise ConfigError("sim.gap_means", f"need {self.S} values, got {len(self.gap_means)}")
        if not all(v > 0 for v in self.gap_means):
            raise ConfigError("sim.gap_means", "every Poisson mean must be positive")
        if self.N < 1:
            raise ConfigError("sim.N", "must be >= 1")
        if self.L_window < 2:
            raise ConfigError("sim.L_window", "must be >= 2")
        if self.seed < 0:
            raise ConfigError("seed", "must be nonnegative")
        if self.replications < 1:
            raise ConfigError("sim.replications", "must be >= 1")

    @property
    def link(self) -> LinkModel | None:
        return LinkModel(self.matrix, self.psi) if self.with_covariates else None

    def truth(self, z: CovariatePoint) -> StochasticMatrix:
        """The transition matrix generating paths with covariates ``z``."""
        if not self.with_covariates:
            return self.matrix
        return link_evaluate(self.link, z)


class _Powers:
    """Lazily extended table of ``P^1, P^2, ...``."""

    def __init__(self, P: np.ndarray):
        self.P = P
        self.table = [P]

    def cumrow(self, ell: int, i: int) -> np.ndarray:
        while len(self.table) < ell:
            self.table.append(self.table[-1] @ self.P)
        return np.cumsum(self.table[ell - 1][i])


def _draw_state(cum: np.ndarray, u: float) -> int:
    k = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return min(k, len(cum) - 1)


def simulate_path(cfg: SimConfig, path_id: int, replication: int = 0, _powers: _Powers | None = None) -> SamplePath:
    rng = np.random.default_rng([cfg.seed, replication, path_id])
    if cfg.with_covariates:
        z = cfg.covariate_law.draw(rng)
        powers = _Powers(link_evaluate(cfg.link, z).entries)
    else:
        z = CovariatePoint()
        powers = _powers or _Powers(cfg.matrix.entries)
    y0 = int(rng.integers(1, cfg.S + 1))
    events = []
    y = y0
    elapsed = 0
    while elapsed < cfg.L_window:
        tau = 1 + int(rng.poisson(cfg.gap_means[y - 1]))
        y = 1 + _draw_state(powers.cumrow(tau, y - 1), rng.random())
        events.append((tau, y))
        elapsed += tau
    return SamplePath(path_id=path_id, covariates=z, y0=y0, events=tuple(events))


def simulate_paths(cfg: SimConfig, replication: int = 0, n: int | None = None) -> Iterator[SamplePath]:
    """Yield ``n`` (default ``cfg.N``) paths in path_id order."""
    shared = None if cfg.with_covariates else _Powers(cfg.matrix.entries)
    for pid in range(cfg.N if n is None else n):
        yield simulate_path(cfg, pid, replication, shared)


def gap_histogram(paths: Iterable[SamplePath]) -> dict[int, int]:
    """Count of each observed gap over all transitions."""
    counts: Counter[int] = Counter()
    for pth in paths:
        counts.update(t for t, _ in pth.events)
    return dict(sorted(counts.items()))
