"""Streaming accumulators for the kernel-weighted transition counts.

For every evaluation point ``z``, gap ``l`` and states ``i, j`` the bank
holds the unnormalised sums

    U_T[z, l, i, j] = sum_m w_m K_{h_m}(Z_m - z) #{i -> j after gap l in path m}
    U_B[z, l, i]    = sum_j U_T[z, l, i, j]

together with ``omega_sum = sum_m w_m``. Dividing by ``omega_sum`` gives the
recursive averages; ratios never need it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .. import _backend
from ..markov import CovariatePoint
from ..paths import SamplePath
from .bandwidth import BandwidthSchedule
from .kernels import KernelSpec

__all__ = [
    "AccumulatorBank",
    "StateOutOfRange",
    "ShapeMismatch",
    "ScheduleMismatch",
    "VersionMismatch",
    "merge_banks",
    "CHECKPOINT_VERSION",
]

CHECKPOINT_FORMAT = "markovroots.bank"
CHECKPOINT_VERSION = 1


class StateOutOfRange(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


class ScheduleMismatch(ValueError):
    pass


class VersionMismatch(ValueError):
    pass


@dataclass
class AccumulatorBank:
    grid: tuple[CovariatePoint, ...]
    S: int
    L_max: int
    schedule: BandwidthSchedule = field(default_factory=BandwidthSchedule)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    U_T: np.ndarray = None
    U_B: np.ndarray = None
    n_paths: int = 0
    omega_sum: float = 0.0
    next_index: int = 1
    skipped_gaps: int = 0

    def __post_init__(self):
        self.grid = tuple(self.grid)
        if not self.grid:
            raise ValueError("evaluation grid is empty")
        ps = {z.p for z in self.grid}
        ds = {len(z.discrete) for z in self.grid}
        if len(ps) != 1 or len(ds) != 1:
            raise ValueError("grid points disagree on covariate dimensions")
        if self.S < 2 or self.L_max < 1:
            raise ValueError("need S >= 2 and L_max >= 1")
        self.schedule.check(self.p)
        shape_T = (len(self.grid), self.L_max, self.S, self.S)
        if self.U_T is None:
            self.U_T = np.zeros(shape_T)
            self.U_B = np.zeros(shape_T[:3])
        elif self.U_T.shape != shape_T or self.U_B.shape != shape_T[:3]:
            raise ShapeMismatch("accumulator arrays do not match grid, L_max and S")
        self._grid_c = np.array([z.continuous for z in self.grid], dtype=float).reshape(
            len(self.grid), self.p
        )
        self._grid_d = np.array([z.discrete for z in self.grid], dtype=np.int64).reshape(
            len(self.grid), -1
        )

    @property
    def p(self) -> int:
        return self.grid[0].p

    @property
    def n_discrete(self) -> int:
        return len(self.grid[0].discrete)

    @classmethod
    def unconditional(cls, S: int, L_max: int, **kwargs) -> "AccumulatorBank":
        return cls(grid=(CovariatePoint(),), S=S, L_max=L_max, **kwargs)

    def copy(self) -> "AccumulatorBank":
        return AccumulatorBank(
            grid=self.grid, S=self.S, L_max=self.L_max, schedule=self.schedule,
            kernel=self.kernel, U_T=self.U_T.copy(), U_B=self.U_B.copy(),
            n_paths=self.n_paths, omega_sum=self.omega_sum,
            next_index=self.next_index, skipped_gaps=self.skipped_gaps,
        )

    # ------------------------------------------------------------------
    # ingestion
    # ------------------------------------------------------------------

    def path_weights(self, paths: Sequence[SamplePath], m: np.ndarray) -> np.ndarray:
        """``w_m K_{h_m}(Z_m - z)`` for each path (rows) and grid point (columns)."""
        n = len(paths)
        for pth in paths:
            if pth.covariates.p != self.p or len(pth.covariates.discrete) != self.n_discrete:
                raise ShapeMismatch(
                    f"path {pth.path_id}: covariates do not match the grid dimensions"
                )
        Zc = np.array([pth.covariates.continuous for pth in paths], dtype=float).reshape(n, self.p)
        Zd = np.array([pth.covariates.discrete for pth in paths], dtype=np.int64).reshape(
            n, self.n_discrete
        )
        h = self.schedule.bandwidth(m)
        K = self.kernel.product(Zc, self._grid_c, h)
        match = (Zd[:, None, :] == self._grid_d[None, :, :]).all(axis=2)
        return self.schedule.weight(m)[:, None] * K * match

    def absorb_paths(self, paths: Iterable[SamplePath], start_index: int | None = None) -> "AccumulatorBank":
        """Absorb paths in order, giving them consecutive indices ``m``.

        ``start_index`` defaults to the bank's next index; pass it explicitly
        when filling shards that will later be merged.
        """
        paths = list(paths)
        if start_index is None:
            start_index = self.next_index
        if not paths:
            return self
        m = np.arange(start_index, start_index + len(paths), dtype=float)
        owner, frm, to, lag = [], [], [], []
        skipped = 0
        for k, pth in enumerate(paths):
            for i, j, tau in pth.transitions():
                if not (1 <= i <= self.S and 1 <= j <= self.S):
                    raise StateOutOfRange(
                        f"path {pth.path_id}: transition {i}->{j} outside 1..{self.S}"
                    )
                if tau < 1:
                    raise ValueError(f"path {pth.path_id}: gap {tau} < 1")
                if tau > self.L_max:
                    skipped += 1
                    continue
                owner.append(k)
                frm.append(i - 1)
                to.append(j - 1)
                lag.append(tau - 1)
        W = np.ascontiguousarray(self.path_weights(paths, m))
        _backend.accumulate(
            self.U_T, self.U_B, W,
            np.asarray(owner, dtype=np.int64), np.asarray(frm, dtype=np.int64),
            np.asarray(to, dtype=np.int64), np.asarray(lag, dtype=np.int64),
        )
        # sequential sum keeps omega_sum independent of batch boundaries
        for w in self.schedule.weight(m):
            self.omega_sum += float(w)
        self.n_paths += len(paths)
        self.skipped_gaps += skipped
        self.next_index = max(self.next_index, start_index + len(paths))
        return self

    def absorb_path(self, path: SamplePath, m: int | None = None) -> "AccumulatorBank":
        return self.absorb_paths([path], start_index=m)

    # ------------------------------------------------------------------
    # views
    # ------------------------------------------------------------------

    def normalized(self) -> tuple[np.ndarray, np.ndarray]:
        """The recursive averages ``U / omega_sum``."""
        if self.omega_sum == 0:
            return self.U_T.copy(), self.U_B.copy()
        return self.U_T / self.omega_sum, self.U_B / self.omega_sum

    def grid_index(self, z: CovariatePoint) -> int:
        return self.grid.index(z)

    def compatible_with(self, other: "AccumulatorBank") -> bool:
        return (
            self.grid == other.grid and self.S == other.S and self.L_max == other.L_max
            and self.schedule == other.schedule and self.kernel == other.kernel
        )

    # ------------------------------------------------------------------
    # checkpoints
    # ------------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "grid": [z.to_json() for z in self.grid],
            "S": self.S,
            "L_max": self.L_max,
            "schedule": self.schedule.to_json(),
            "kernel": self.kernel.kind,
            "n_paths": self.n_paths,
            "omega_sum": self.omega_sum,
            "next_index": self.next_index,
            "skipped_gaps": self.skipped_gaps,
            "U_T": self.U_T.tolist(),
            "U_B": self.U_B.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AccumulatorBank":
        if obj.get("format") != CHECKPOINT_FORMAT:
            raise VersionMismatch("not an accumulator checkpoint")
        if obj.get("version") != CHECKPOINT_VERSION:
            raise VersionMismatch(
                f"checkpoint version {obj.get('version')} != supported {CHECKPOINT_VERSION}"
            )
        return cls(
            grid=tuple(CovariatePoint.from_json(z) for z in obj["grid"]),
            S=obj["S"],
            L_max=obj["L_max"],
            schedule=BandwidthSchedule.from_json(obj["schedule"]),
            kernel=KernelSpec(obj["kernel"]),
            U_T=np.array(obj["U_T"], dtype=float),
            U_B=np.array(obj["U_B"], dtype=float),
            n_paths=obj["n_paths"],
            omega_sum=obj["omega_sum"],
            next_index=obj["next_index"],
            skipped_gaps=obj["skipped_gaps"],
        )

    def save(self, dest: str | Path) -> None:
        # json floats use repr, so the round trip is exact
        with open(dest, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, src: str | Path) -> "AccumulatorBank":
        with open(src, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def merge_banks(a: AccumulatorBank, b: AccumulatorBank) -> AccumulatorBank:
    """Entrywise sum of two banks built over disjoint path-index ranges."""
    if (a.grid, a.S, a.L_max) != (b.grid, b.S, b.L_max):
        raise ShapeMismatch("banks differ in grid, S or L_max")
    if a.schedule != b.schedule or a.kernel != b.kernel:
        raise ShapeMismatch("banks use different bandwidth schedules or kernels")
    return AccumulatorBank(
        grid=a.grid, S=a.S, L_max=a.L_max, schedule=a.schedule, kernel=a.kernel,
        U_T=a.U_T + b.U_T, U_B=a.U_B + b.U_B,
        n_paths=a.n_paths + b.n_paths, omega_sum=a.omega_sum + b.omega_sum,
        next_index=max(a.next_index, b.next_index),
        skipped_gaps=a.skipped_gaps + b.skipped_gaps,
    )
