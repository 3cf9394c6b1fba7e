"""Experiment config files: JSON, with ``//`` or ``#`` full-line comments allowed.

Blocks (all optional)::

    {
      "seed": 7,
      "sim": {"S": 3, "with_covariates": false, "N": 1000, "L_window": 20,
              "gap_means": [10, 10, 15], "matrix": {"dim": 3, "rows": [...]},
              "psi": "reference", "covariates": {"beta_a": 2, "beta_b": 2,
              "shift": 1, "bernoulli_q": 0.7}},
      "estimator": {"kernel": "gaussian", "c": 1.0, "alpha": 0.2, "beta": 0,
                    "sigma_scale": null, "L_max": 20, "lags": [6, 20],
                    "reg_mode": "weighted"},
      "grid": "unconditional" | [{"z_c": [1.5], "z_d": [1]}, ...],
      "experiment": {"N_values": [500, 2000], "replications": 20}
    }
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path

from .harness import EstimatorConfig, ExperimentSpec
from .markov import CovariatePoint, NotStochastic, PsiSpec, StochasticMatrix
from .simulator import ConfigError, CovariateLaw, SimConfig

__all__ = ["RunConfig", "load_config", "parse_config", "parse_grid_arg", "parse_lags"]

_COMMENT = re.compile(r"^\s*(//|#).*$", re.MULTILINE)

_SIM_KEYS = {"S", "with_covariates", "N", "L_window", "gap_means", "matrix", "psi",
             "covariates", "replications"}
_EST_KEYS = {"kernel", "c", "alpha", "beta", "sigma_scale", "L_max", "lags", "reg_mode"}
_EXP_KEYS = {"N_values", "replications"}
_TOP_KEYS = {"seed", "sim", "estimator", "grid", "experiment"}


@dataclass(frozen=True)
class RunConfig:
    sim: SimConfig
    estimator: EstimatorConfig
    grid: tuple[CovariatePoint, ...] | None
    N_values: tuple[int, ...]
    replications: int
    seed: int
    digest: str

    def experiment_spec(self) -> ExperimentSpec:
        grid = self.grid if self.grid is not None else (CovariatePoint(),)
        try:
            return ExperimentSpec(
                sim=self.sim, estimator=self.estimator, eval_grid=grid,
                N_values=self.N_values, replications=self.replications, seed=self.seed,
            )
        except ValueError as exc:
            raise ConfigError("experiment", str(exc)) from None


def _check_keys(block: dict, allowed: set[str], where: str) -> None:
    if not isinstance(block, dict):
        raise ConfigError(where, "must be an object")
    for k in block:
        if k not in allowed:
            raise ConfigError(f"{where}.{k}" if where else k, "unknown field")


def _num(block: dict, key: str, where: str, kind=float, default=None):
    if key not in block or block[key] is None:
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}", f"expected a number, got {v!r}")
    if kind is int and int(v) != v:
        raise ConfigError(f"{where}.{key}", f"expected an integer, got {v!r}")
    return kind(v)


def parse_lags(text) -> tuple[int, int]:
    """``"6:20"`` or ``[6, 20]`` to ``(6, 20)``."""
    if isinstance(text, str):
        parts = text.split(":")
    else:
        parts = list(text)
    try:
        lo, hi = (int(p) for p in parts)
    except (TypeError, ValueError):
        raise ConfigError("lags", f"expected LO:HI, got {text!r}") from None
    if not 1 <= lo <= hi:
        raise ConfigError("lags", f"need 1 <= LO <= HI, got {lo}:{hi}")
    return lo, hi


def parse_grid_arg(text: str) -> CovariatePoint:
    """``"1.5/1"`` or ``"1.5,2.0/1,0"`` (continuous/discrete); ``"-"`` is unconditional."""
    if text.strip() in ("-", "none", "unconditional"):
        return CovariatePoint()
    cont, _, disc = text.partition("/")
    try:
        zc = tuple(float(v) for v in cont.split(",") if v.strip())
        zd = tuple(int(v) for v in disc.split(",") if v.strip())
    except ValueError:
        raise ConfigError("grid", f"cannot parse grid point {text!r}") from None
    return CovariatePoint(zc, zd)


def _parse_grid(obj) -> tuple[CovariatePoint, ...] | None:
    if obj is None:
        return None
    if obj == "unconditional":
        return (CovariatePoint(),)
    if not isinstance(obj, list) or not obj:
        raise ConfigError("grid", "expected a nonempty list of points or 'unconditional'")
    out = []
    for k, pt in enumerate(obj):
        if isinstance(pt, str):
            out.append(parse_grid_arg(pt))
            continue
        _check_keys(pt, {"z_c", "z_d"}, f"grid[{k}]")
        out.append(CovariatePoint.from_json(pt))
    return tuple(out)


def _parse_sim(block: dict, seed: int) -> SimConfig:
    _check_keys(block, _SIM_KEYS, "sim")
    kw: dict = {"seed": seed}
    for key in ("S", "N", "L_window", "replications"):
        v = _num(block, key, "sim", int)
        if v is not None:
            kw[key] = v
    if "with_covariates" in block:
        if not isinstance(block["with_covariates"], bool):
            raise ConfigError("sim.with_covariates", "expected true or false")
        kw["with_covariates"] = block["with_covariates"]
    if block.get("gap_means") is not None:
        gm = block["gap_means"]
        if not isinstance(gm, list) or not all(isinstance(v, (int, float)) for v in gm):
            raise ConfigError("sim.gap_means", "expected a list of numbers")
        kw["gap_means"] = tuple(gm)
    if block.get("matrix") is not None:
        try:
            kw["matrix"] = StochasticMatrix.from_json(block["matrix"])
        except (NotStochastic, ValueError, KeyError, TypeError) as exc:
            raise ConfigError("sim.matrix", str(exc)) from None
    if block.get("psi") is not None:
        try:
            kw["psi"] = PsiSpec.from_json(block["psi"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("sim.psi", f"malformed: {exc}") from None
    if block.get("covariates") is not None:
        cov = block["covariates"]
        _check_keys(cov, {"beta_a", "beta_b", "shift", "bernoulli_q"}, "sim.covariates")
        law = CovariateLaw(**{k: _num(cov, k, "sim.covariates") for k in cov})
        if not (law.beta_a > 0 and law.beta_b > 0):
            raise ConfigError("sim.covariates", "beta parameters must be positive")
        if not 0.0 <= law.bernoulli_q <= 1.0:
            raise ConfigError("sim.covariates.bernoulli_q", "must lie in [0, 1]")
        kw["covariate_law"] = law
    return SimConfig(**kw)


def _parse_estimator(block: dict) -> EstimatorConfig:
    _check_keys(block, _EST_KEYS, "estimator")
    kw: dict = {}
    for key in ("c", "alpha", "beta", "sigma_scale"):
        v = _num(block, key, "estimator")
        if v is not None:
            kw[key] = v
    if block.get("L_max") is not None:
        kw["L_max"] = _num(block, "L_max", "estimator", int)
    if block.get("lags") is not None:
        kw["lags"] = parse_lags(block["lags"])
    for key in ("kernel", "reg_mode"):
        if block.get(key) is not None:
            kw[key] = block[key]
    try:
        return EstimatorConfig(**kw)
    except ValueError as exc:
        raise ConfigError("estimator", str(exc)) from None


def parse_config(text: str, seed: int | None = None) -> RunConfig:
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    try:
        obj = json.loads(_COMMENT.sub("", text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}", exc.msg) from None
    _check_keys(obj, _TOP_KEYS, "")
    if seed is None:
        seed = _num(obj, "seed", "config", int, 0)
    sim = _parse_sim(obj.get("sim") or {}, seed)
    est = _parse_estimator(obj.get("estimator") or {})
    grid = _parse_grid(obj.get("grid"))
    exp = obj.get("experiment") or {}
    _check_keys(exp, _EXP_KEYS, "experiment")
    N_values = exp.get("N_values", [sim.N])
    if not isinstance(N_values, list) or not all(isinstance(n, int) and n >= 1 for n in N_values):
        raise ConfigError("experiment.N_values", "expected a list of positive integers")
    reps = _num(exp, "replications", "experiment", int, sim.replications)
    if reps < 1:
        raise ConfigError("experiment.replications", "must be >= 1")
    return RunConfig(sim=sim, estimator=est, grid=grid, N_values=tuple(N_values),
                     replications=reps, seed=seed, digest=digest)


def load_config(path: str | Path, seed: int | None = None) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), seed=seed)
