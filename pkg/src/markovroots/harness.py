"""Replicated simulation experiments and their summaries."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .estimator import AccumulatorBank, BandwidthSchedule, KernelSpec, estimate
from .estimator.estimates import DEFAULT_LAGS
from .markov import CovariatePoint, StochasticMatrix
from .matfun import spectral_norm
from .paths import SamplePath
from .simulator import SimConfig, simulate_paths

__all__ = [
    "EstimatorConfig",
    "ExperimentSpec",
    "ErrorRecord",
    "SummaryRow",
    "build_bank",
    "run_experiment",
    "summarize",
    "write_records_csv",
    "write_summary_json",
    "format_summary",
]


@dataclass(frozen=True)
class EstimatorConfig:
    kernel: str = "gaussian"
    c: float = 1.0
    alpha: float | None = None
    beta: float = 0.0
    sigma_scale: float | None = None
    L_max: int | None = None
    lags: tuple[int, int] = DEFAULT_LAGS
    reg_mode: str = "weighted"

    def __post_init__(self):
        KernelSpec(self.kernel)
        lo, hi = self.lags
        if not 1 <= lo <= hi:
            raise ValueError(f"bad lag range {lo}:{hi}")
        if self.L_max is not None and self.L_max < hi:
            raise ValueError(f"L_max={self.L_max} below the top lag {hi}")
        if self.reg_mode not in ("weighted", "diagonal"):
            raise ValueError(f"unknown regularization mode {self.reg_mode!r}")

    def schedule(self, p: int, paths: Sequence[SamplePath] = ()) -> BandwidthSchedule:
        """Bandwidth schedule for ``p`` continuous covariates.

        Without an explicit ``sigma_scale`` the sample standard deviation of
        the first continuous covariate in ``paths`` is used.
        """
        alpha = self.alpha if self.alpha is not None else 1.0 / (p + 4)
        sigma = self.sigma_scale
        if sigma is None and p > 0 and len(paths) > 1:
            zc = np.array([pth.covariates.continuous[0] for pth in paths])
            sd = float(zc.std(ddof=1))
            sigma = sd if sd > 0 else None
        return BandwidthSchedule(c=self.c, alpha=alpha, beta=self.beta, sigma_scale=sigma)

    @property
    def l_max(self) -> int:
        return self.L_max if self.L_max is not None else self.lags[1]


def build_bank(
    paths: Sequence[SamplePath],
    grid: Sequence[CovariatePoint],
    S: int,
    est: EstimatorConfig,
) -> AccumulatorBank:
    grid = tuple(grid)
    bank = AccumulatorBank(
        grid=grid, S=S, L_max=est.l_max,
        schedule=est.schedule(grid[0].p, paths), kernel=KernelSpec(est.kernel),
    )
    return bank.absorb_paths(paths)


@dataclass(frozen=True)
class ExperimentSpec:
    sim: SimConfig
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    eval_grid: tuple[CovariatePoint, ...] = (CovariatePoint(),)
    N_values: tuple[int, ...] = (500, 2000)
    replications: int = 20
    seed: int = 0

    def __post_init__(self):
        if not self.eval_grid:
            raise ValueError("eval_grid is empty")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.N_values or min(self.N_values) < 1:
            raise ValueError("N_values must be positive")
        want_p = 1 if self.sim.with_covariates else 0
        for z in self.eval_grid:
            if z.p != want_p or len(z.discrete) != want_p:
                raise ValueError(f"grid point {z} does not match the simulation covariates")


@dataclass(frozen=True)
class ErrorRecord:
    replication: int
    N: int
    grid_index: int
    z_c: tuple[float, ...]
    z_d: tuple[int, ...]
    error_spec: float
    failed: bool
    regularized_lags: int
    log_failed_lags: int
    wall_ms: float = field(default=0.0, compare=False)


EstimateHook = Callable[[StochasticMatrix, CovariatePoint], np.ndarray]


def _run_replication(spec: ExperimentSpec, rep: int, hook: EstimateHook | None) -> list[ErrorRecord]:
    sim = replace(spec.sim, seed=spec.seed)
    all_paths = list(simulate_paths(sim, replication=rep, n=max(spec.N_values)))
    S = sim.S
    out = []
    for N in spec.N_values:
        t0 = time.perf_counter()
        paths = all_paths[:N]
        bank = build_bank(paths, spec.eval_grid, S, spec.estimator)
        cell = []
        for g, z in enumerate(spec.eval_grid):
            truth = sim.truth(z)
            if hook is not None:
                P_hat = np.asarray(hook(truth, z), dtype=float)
                failed, n_reg, n_fail = False, 0, 0
            else:
                bundle = estimate(bank, g, spec.estimator.lags, spec.estimator.reg_mode)
                failed = not bundle.ok
                P_hat = None if failed else bundle.aggregated.entries
                n_reg, n_fail = len(bundle.regularized_lags), len(bundle.failed_lags)
            err = math.nan if P_hat is None else spectral_norm(P_hat - truth.entries)
            cell.append((g, z, err, failed, n_reg, n_fail))
        wall = (time.perf_counter() - t0) * 1e3 / len(cell)
        for g, z, err, failed, n_reg, n_fail in cell:
            out.append(ErrorRecord(rep, N, g, z.continuous, z.discrete, err, failed, n_reg, n_fail, wall))
    return out


def run_experiment(spec: ExperimentSpec, workers: int = 1, estimate_hook: EstimateHook | None = None) -> list[ErrorRecord]:
    """Simulate, estimate and score every (replication, N, grid point).

    Datasets for smaller N are prefixes of the largest one within a
    replication. Records come back ordered by (replication, N, grid index)
    whatever ``workers`` is. ``estimate_hook`` replaces the estimator with a
    function of (truth, z), for testing the scoring path.
    """
    reps = range(spec.replications)
    if workers > 1 and estimate_hook is None:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_replication, [spec] * len(reps), reps, [None] * len(reps)))
    else:
        chunks = [_run_replication(spec, r, estimate_hook) for r in reps]
    records = [r for chunk in chunks for r in chunk]
    order = {n: k for k, n in enumerate(spec.N_values)}
    records.sort(key=lambda r: (r.replication, order[r.N], r.grid_index))
    return records


@dataclass(frozen=True)
class SummaryRow:
    N: int
    grid_index: int
    z_c: tuple[float, ...]
    z_d: tuple[int, ...]
    n: int
    failures: int
    failure_rate: float
    median: float
    q1: float
    q3: float
    log10_median: float


def summarize(records: Sequence[ErrorRecord]) -> list[SummaryRow]:
    """Median and quartiles (linear interpolation) per (N, grid point)."""
    if not records:
        raise ValueError("no records to summarize")
    cells: dict[tuple[int, int], list[ErrorRecord]] = {}
    for r in records:
        cells.setdefault((r.N, r.grid_index), []).append(r)
    rows = []
    for (N, g), recs in cells.items():
        errs = np.array([r.error_spec for r in recs if not r.failed])
        failures = sum(r.failed for r in recs)
        if errs.size:
            q1, med, q3 = (float(v) for v in np.percentile(errs, [25, 50, 75]))
        else:
            q1 = med = q3 = math.nan
        rows.append(SummaryRow(
            N=N, grid_index=g, z_c=recs[0].z_c, z_d=recs[0].z_d, n=len(recs),
            failures=failures, failure_rate=failures / len(recs), median=med, q1=q1, q3=q3,
            log10_median=math.log10(med) if med > 0 else (-math.inf if med == 0 else math.nan),
        ))
    return rows


CSV_COLUMNS = ["replication", "N", "z_c", "z_d", "error_spec", "failed", "regularized_lags", "wall_ms"]


def _fmt_vec(v) -> str:
    return ";".join(repr(x) for x in v)


def write_records_csv(records: Sequence[ErrorRecord], dest: str | Path) -> None:
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([
                r.replication, r.N, _fmt_vec(r.z_c), _fmt_vec(r.z_d),
                "" if math.isnan(r.error_spec) else repr(r.error_spec),
                int(r.failed), r.regularized_lags, f"{r.wall_ms:.3f}",
            ])


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def write_summary_json(rows: Sequence[SummaryRow], dest: str | Path, extra: dict | None = None) -> None:
    payload = {"cells": [{k: _json_safe(v) for k, v in asdict(r).items()} for r in rows]}
    if extra:
        payload.update(extra)
    with open(dest, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def format_summary(rows: Sequence[SummaryRow]) -> str:
    lines = [f"{'N':>7} {'z_c':>8} {'z_d':>4} {'median':>11} {'q1':>11} {'q3':>11} {'log10':>8} {'fail':>6}"]
    for r in rows:
        zc = _fmt_vec(r.z_c) or "-"
        zd = _fmt_vec(r.z_d) or "-"
        lines.append(
            f"{r.N:>7} {zc:>8} {zd:>4} {r.median:>11.5g} {r.q1:>11.5g} {r.q3:>11.5g} "
            f"{r.log10_median:>8.3f} {r.failure_rate:>6.2f}"
        )
    return "\n".join(lines)
