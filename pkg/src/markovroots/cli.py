"""Command-line entry point: ``markovroots {simulate,estimate,update,experiment}``.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config, parse_grid_arg, parse_lags
from .estimator import (
    AccumulatorBank,
    KernelSpec,
    ScheduleMismatch,
    ShapeMismatch,
    StateOutOfRange,
    VersionMismatch,
    estimate,
)
from .harness import (
    EstimatorConfig,
    format_summary,
    run_experiment,
    summarize,
    write_records_csv,
    write_summary_json,
)
from .markov import CovariatePoint
from .matfun import MatrixFunctionError
from .paths import DatasetError, read_jsonl, write_jsonl
from .simulator import ConfigError, simulate_paths

log = logging.getLogger("markovroots")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _file_digest(path: str | Path | None) -> str | None:
    if path is None or not Path(path).exists():
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, cfg: RunConfig | None, seed, artifacts: dict) -> None:
    """Append one record to ``manifest.jsonl`` beside the main output."""
    rec = {
        "command": command,
        "config_digest": cfg.digest if cfg else None,
        "seed": seed,
        "artifacts": {k: (str(v) if v is not None else None) for k, v in artifacts.items()},
        "artifact_digests": {k: _file_digest(v) for k, v in artifacts.items()},
        "tool_version": __version__,
        "time": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    mpath = out.parent / "manifest.jsonl"
    with open(mpath, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(rec, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    n = write_jsonl(simulate_paths(cfg.sim, replication=args.replication), out)
    write_manifest(out, "simulate", cfg, cfg.seed, {"dataset": out})
    log.info("wrote %d paths to %s", n, out)
    return EXIT_OK


def _resolve_grid(args, cfg: RunConfig | None, paths) -> tuple[CovariatePoint, ...]:
    if args.grid:
        return tuple(parse_grid_arg(g) for g in args.grid)
    if cfg is not None and cfg.grid is not None:
        return cfg.grid
    if cfg is not None and cfg.sim.with_covariates:
        raise ConfigError("grid", "covariate model needs evaluation points (--grid or config grid)")
    if paths and paths[0].covariates != CovariatePoint():
        raise ConfigError("grid", "dataset has covariates; give evaluation points with --grid")
    return (CovariatePoint(),)


def _estimator_config(args, cfg: RunConfig | None) -> EstimatorConfig:
    est = cfg.estimator if cfg is not None else EstimatorConfig()
    if getattr(args, "lags", None):
        lags = parse_lags(args.lags)
        L_max = max(est.l_max, lags[1])
        est = replace(est, lags=lags, L_max=L_max)
    return est


def _n_states(args, cfg: RunConfig | None, paths) -> int:
    if args.states:
        return args.states
    if cfg is not None:
        return cfg.sim.S
    seen = [pth.y0 for pth in paths] + [y for pth in paths for _, y in pth.events]
    if not seen:
        raise UsageError("cannot infer the number of states from an empty dataset; pass --states")
    return max(2, max(seen))


def _new_bank(args, cfg, paths) -> AccumulatorBank:
    est = _estimator_config(args, cfg)
    grid = _resolve_grid(args, cfg, paths)
    return AccumulatorBank(
        grid=grid, S=_n_states(args, cfg, paths), L_max=est.l_max,
        schedule=est.schedule(grid[0].p, paths), kernel=KernelSpec(est.kernel),
    )


def cmd_estimate(args) -> int:
    cfg = load_config(args.config, seed=args.seed) if args.config else None
    est = _estimator_config(args, cfg)
    if args.checkpoint:
        bank = AccumulatorBank.load(args.checkpoint)
        paths = []
    else:
        paths = read_jsonl(args.data)
        bank = _new_bank(args, cfg, paths).absorb_paths(paths)
    if bank.L_max < est.lags[1]:
        raise UsageError(f"lag range {est.lags} exceeds the bank's L_max={bank.L_max}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    results = []
    failed = 0
    for g, z in enumerate(bank.grid):
        bundle = estimate(bank, g, est.lags, est.reg_mode)
        if not bundle.ok:
            failed += 1
            log.warning("grid point %s: %s", z.to_json(), bundle.error)
        results.append({"z": z.to_json(), **bundle.to_json()})
    payload = {
        "n_paths": bank.n_paths,
        "S": bank.S,
        "lags": list(est.lags),
        "reg_mode": est.reg_mode,
        "schedule": bank.schedule.to_json(),
        "skipped_gaps": bank.skipped_gaps,
        "points": results,
    }
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    artifacts = {"dataset": args.data, "checkpoint": args.checkpoint, "results": out}
    if args.save_checkpoint:
        bank.save(args.save_checkpoint)
        artifacts["checkpoint_out"] = args.save_checkpoint
    write_manifest(out, "estimate", cfg, cfg.seed if cfg else None, artifacts)
    if failed and args.strict:
        return EXIT_DATA
    return EXIT_OK


def cmd_update(args) -> int:
    cfg = load_config(args.config, seed=args.seed) if args.config else None
    paths = read_jsonl(args.data)
    ck = Path(args.checkpoint)
    if ck.exists():
        bank = AccumulatorBank.load(ck)
        if cfg is not None:
            _check_schedule(bank, cfg)
    else:
        if cfg is None:
            raise UsageError(f"checkpoint {ck} does not exist; pass --config to start a new one")
        bank = _new_bank(args, cfg, paths)
    bank.absorb_paths(paths)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bank.save(out)
    write_manifest(out, "update", cfg, cfg.seed if cfg else None,
                   {"checkpoint": ck, "dataset": args.data, "checkpoint_out": out})
    log.info("absorbed %d paths; bank holds %d", len(paths), bank.n_paths)
    return EXIT_OK


def _check_schedule(bank: AccumulatorBank, cfg: RunConfig) -> None:
    est = cfg.estimator
    sched = bank.schedule
    alpha = est.alpha if est.alpha is not None else 1.0 / (bank.p + 4)
    diffs = []
    if est.c != sched.c:
        diffs.append(f"c {sched.c} != {est.c}")
    if alpha != sched.alpha:
        diffs.append(f"alpha {sched.alpha} != {alpha}")
    if est.beta != sched.beta:
        diffs.append(f"beta {sched.beta} != {est.beta}")
    if est.sigma_scale is not None and est.sigma_scale != sched.sigma_scale:
        diffs.append(f"sigma_scale {sched.sigma_scale} != {est.sigma_scale}")
    if est.kernel != bank.kernel.kind:
        diffs.append(f"kernel {bank.kernel.kind} != {est.kernel}")
    if diffs:
        raise ScheduleMismatch("checkpoint and config disagree: " + "; ".join(diffs))


def cmd_experiment(args) -> int:
    cfg = load_config(args.config, seed=args.seed)
    spec = cfg.experiment_spec()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    records = run_experiment(spec, workers=args.threads)
    rows = summarize(records)
    write_records_csv(records, out / "records.csv")
    write_summary_json(rows, out / "summary.json", extra={
        "config_digest": cfg.digest, "seed": cfg.seed,
        "N_values": list(spec.N_values), "replications": spec.replications,
    })
    print(format_summary(rows))
    log.info("experiment finished in %.1f s", time.perf_counter() - t0)
    write_manifest(out / "summary.json", "experiment", cfg, cfg.seed,
                   {"results": out / "records.csv", "summary": out / "summary.json"})
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="markovroots",
        description="Estimate covariate-dependent Markov transition matrices from irregularly observed paths.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a JSONL dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--replication", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate transition matrices at grid points")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="JSONL dataset")
    src.add_argument("--checkpoint", help="accumulator checkpoint")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--lags", help="aggregation range LO:HI")
    p.add_argument("--grid", action="append", help="evaluation point c1,c2/d1 (repeatable)")
    p.add_argument("--states", type=int, help="number of states if no config")
    p.add_argument("--strict", action="store_true", help="exit 2 if any grid point fails")
    p.add_argument("--save-checkpoint", help="also write the accumulator bank here")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("update", help="absorb new paths into a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--lags")
    p.add_argument("--grid", action="append")
    p.add_argument("--states", type=int)
    p.set_defaults(func=cmd_update)

    p = sub.add_parser("experiment", help="run replicated simulation experiments")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, UsageError, ScheduleMismatch) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (DatasetError, StateOutOfRange, ShapeMismatch, VersionMismatch, FileNotFoundError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except (MatrixFunctionError, FloatingPointError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
