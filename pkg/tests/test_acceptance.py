"""Acceptance criteria, one test each, at their stated tolerances and time limits.

Each test appends a PASS/FAIL line that is printed in the terminal summary.
"""

import math
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from markovroots.config import load_config
from markovroots.estimator import (
    AccumulatorBank,
    BandwidthSchedule,
    a_hat,
    estimate,
    merge_banks,
    p_hat_ell,
    pi_hat_weights,
    recursive_shrink_factor,
    regularize_generator,
)
from markovroots.estimator.bandwidth import optimal_exponent
from markovroots.harness import run_experiment, summarize
from markovroots.markov import P_FIVE_STATE, P_THREE_STATE, CovariatePoint
from markovroots.matfun import (
    Uniqueness,
    generator_uniqueness_check,
    mat_exp,
    mat_log_principal,
    mercator_log,
    spectral_norm,
    spectrum,
)
from markovroots.simulator import SimConfig, simulate_paths

from oracles import brute_force_estimate, brute_force_sums, random_generator

pytestmark = pytest.mark.acceptance

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
GRID4 = tuple(CovariatePoint((zc,), (zd,)) for zc in (1.5, 1.7) for zd in (1, 0))


@contextmanager
def criterion(number, title, limit_s):
    info = {}
    t0 = time.perf_counter()
    try:
        yield info
    except BaseException as exc:
        dt = time.perf_counter() - t0
        ACCEPTANCE_LINES.append(f"FAIL  {number}. {title} ({dt:.2f} s): {type(exc).__name__}: {exc}")
        raise
    dt = time.perf_counter() - t0
    ok = dt < limit_s
    detail = f" [{info['detail']}]" if "detail" in info else ""
    ACCEPTANCE_LINES.append(
        f"{'PASS' if ok else 'FAIL'}  {number}. {title} ({dt:.2f} s, limit {limit_s:g} s){detail}"
    )
    assert ok, f"criterion {number} took {dt:.2f} s, limit {limit_s} s"


def _generator_violation(B):
    off = B[~np.eye(B.shape[0], dtype=bool)]
    return max(-off.min(), np.abs(B.sum(axis=1)).max(), np.diag(B).max(), 0.0)


def test_01_exact_identity_recovery():
    with criterion(1, "exact-identity recovery of P from P^ell", 1.0) as info:
        worst = 0.0
        for P in (P_THREE_STATE.entries, P_FIVE_STATE.entries):
            for ell in range(2, 11):
                est = p_hat_ell(np.linalg.matrix_power(P, ell), ell)
                err = spectral_norm(est.P_hat.entries - P)
                assert err <= 1e-8, (P.shape, ell, err)
                assert not est.regularized and not est.fallback_diagonal
                worst = max(worst, err)
        info["detail"] = f"max spectral error {worst:.1e}"


def test_02_generator_validity():
    with criterion(2, "principal logs of the ground truths are unique generators", 1.0) as info:
        worst = 0.0
        for P in (P_THREE_STATE.entries, P_FIVE_STATE.entries):
            v = _generator_violation(mat_log_principal(P))
            assert v <= 1e-8, v
            assert generator_uniqueness_check(P) is Uniqueness.UNIQUE
            assert np.diag(P).min() > 0.5
            worst = max(worst, v)
        info["detail"] = f"max invariant violation {worst:.1e}"


def test_03_streaming_equals_batch():
    with criterion(3, "streaming, merged shards and checkpoint resume agree", 30.0) as info:
        paths = list(simulate_paths(SimConfig(S=3, with_covariates=True, seed=303), n=1000))
        sched = BandwidthSchedule(c=1.0, alpha=0.2, beta=0.1, sigma_scale=0.22)

        def new():
            return AccumulatorBank(grid=GRID4, S=3, L_max=20, schedule=sched)

        batch = new().absorb_paths(paths)
        stream = new()
        for pth in paths:
            stream.absorb_path(pth)
        shards = merge_banks(
            new().absorb_paths(paths[:500], start_index=1),
            new().absorb_paths(paths[500:], start_index=501),
        )
        import tempfile

        with tempfile.TemporaryDirectory() as d:
            ck = Path(d) / "ck.json"
            new().absorb_paths(paths[:400]).save(ck)
            resumed = AccumulatorBank.load(ck)
        for pth in paths[400:]:
            resumed.absorb_path(pth)

        worst = 0.0
        for bank in (stream, shards, resumed):
            for mine, ref in ((bank.U_T, batch.U_T), (bank.U_B, batch.U_B)):
                nz = ref != 0
                assert np.array_equal(nz, mine != 0)
                rel = np.abs(mine[nz] - ref[nz]) / np.abs(ref[nz])
                assert rel.max() <= 1e-10, rel.max()
                worst = max(worst, rel.max())
            assert bank.n_paths == 1000
            assert abs(bank.omega_sum - batch.omega_sum) <= 1e-10 * batch.omega_sum
        info["detail"] = f"max relative difference {worst:.1e}"


def test_04_brute_force_oracle():
    with criterion(4, "A-hat, pi-hat and P-hat match direct summation", 5.0) as info:
        paths = list(simulate_paths(SimConfig(S=3, with_covariates=True, seed=404), n=50))
        sigma = 0.22
        bank = AccumulatorBank(
            grid=GRID4, S=3, L_max=20, schedule=BandwidthSchedule(sigma_scale=sigma)
        ).absorb_paths(paths)
        U_T, U_B, omega = brute_force_sums(paths, GRID4, 3, 20, 1.0, 0.2, 0.0, sigma)
        worst = 0.0
        n_agg = 0
        for g in range(len(GRID4)):
            A_ref, pi_ref, agg_ref = brute_force_estimate(U_T[g], U_B[g], omega, (6, 20))
            pi = pi_hat_weights(bank, g, (6, 20))
            d = max(abs(pi[l - 6] - pi_ref[l]) for l in range(6, 21))
            for ell, A in A_ref.items():
                d = max(d, np.abs(a_hat(bank, g, ell).completed().entries - A).max())
            bundle = estimate(bank, g, (6, 20))
            if bundle.ok:
                d = max(d, np.abs(bundle.aggregated.entries - agg_ref).max())
                n_agg += 1
            assert d <= 1e-12, (g, d)
            worst = max(worst, d)
        assert n_agg >= 2
        info["detail"] = f"max abs difference {worst:.1e} over {n_agg} aggregated points"


def test_05_regularization_algebra():
    with criterion(5, "S2 and S2' give idempotent generators with stochastic exponentials", 10.0) as info:
        rng = np.random.default_rng(505)
        worst_row = worst_exp = 0.0
        for k in range(1000):
            S = int(rng.integers(2, 8))
            B = random_generator(rng, S) + rng.uniform(-0.2, 0.2, size=(S, S))
            for mode in ("diagonal", "weighted"):
                G = regularize_generator(B, mode).entries
                off = G[~np.eye(S, dtype=bool)]
                row = np.abs(G.sum(axis=1)).max()
                assert row <= 1e-12 and off.min() >= 0.0 and np.diag(G).max() <= 1e-12, (k, mode)
                assert np.array_equal(regularize_generator(G, mode).entries, G), (k, mode)
                E = mat_exp(G)
                dev = max(-E.min(), np.abs(E.sum(axis=1) - 1).max())
                assert dev <= 1e-10, (k, mode, dev)
                worst_row, worst_exp = max(worst_row, row), max(worst_exp, dev)
        info["detail"] = f"max row sum {worst_row:.1e}, max exp deviation {worst_exp:.1e}"


def _cells(records):
    return {(r.N, r.z_c, r.z_d): r for r in summarize(records)}


def test_06_unconditional_direction():
    with criterion(6, "unconditional S=3 median error falls from N=500 to N=2000", 300.0) as info:
        cfg = load_config(CONFIGS / "uncond_s3.json")
        spec = cfg.experiment_spec()
        assert spec.sim.S == 3 and not spec.sim.with_covariates and spec.sim.L_window == 20
        assert spec.replications == 20 and spec.N_values == (500, 2000)
        cells = _cells(run_experiment(spec, workers=4))
        m500, m2000 = cells[(500, (), ())].median, cells[(2000, (), ())].median
        info["detail"] = f"median {m500:.4f} -> {m2000:.4f}"
        assert m2000 < m500 and m2000 < 0.15


def test_07_covariate_direction():
    with criterion(7, "covariate model: error falls in N and z_d=1 beats z_d=0", 600.0) as info:
        cfg = load_config(CONFIGS / "cond_s3.json")
        spec = cfg.experiment_spec()
        assert spec.sim.with_covariates and spec.replications == 10
        assert spec.N_values == (1000, 4000)
        cells = _cells(run_experiment(spec, workers=4))
        med = {k: c.median for k, c in cells.items()}
        lo, hi = spec.N_values
        a, b = med[(lo, (1.5,), (1,))], med[(hi, (1.5,), (1,))]
        c0, c1 = med[(lo, (1.5,), (0,))], med[(hi, (1.5,), (0,))]
        info["detail"] = (
            f"z=(1.5,1): {a:.4f} -> {b:.4f}; z=(1.5,0): {c0:.4f} -> {c1:.4f}"
        )
        assert b < a
        assert a < c0 and b < c1
        assert all(c.failure_rate == 0 for c in cells.values())


def test_08_bandwidth_constants():
    with criterion(8, "shrink factor c_r(0) = 0.3^(1/5) and c_r < 1", 1.0) as info:
        cr0 = recursive_shrink_factor(0.0, 1)
        assert abs(cr0 - 0.3 ** 0.2) <= 1e-12
        alpha = optimal_exponent(1)
        vals = [recursive_shrink_factor(b, 1) for b in np.linspace(0.0, alpha * 1, 100)]
        assert max(vals) < 1
        info["detail"] = f"c_r(0) = {cr0:.12f}, max c_r = {max(vals):.6f}"


def test_09_matrix_function_suite():
    with criterion(9, "exp/log round trip, Mercator agreement, power identity", 60.0) as info:
        rng = np.random.default_rng(909)
        worst_rt = worst_merc = worst_pow = 0.0
        n_merc = 0
        for k in range(10_000):
            S = int(rng.integers(2, 9))
            G = random_generator(rng, S, max_norm=2.0, sparsity=0.3 if k % 3 == 0 else 0.0)
            assert np.abs(G).sum(axis=1).max() <= 2.0 + 1e-12
            E = mat_exp(G)
            rt = np.abs(mat_log_principal(E) - G).max()
            assert rt <= 1e-8, (k, rt)
            worst_rt = max(worst_rt, rt)
            if k % 5 == 0:
                for ell in range(1, 7):
                    pw = np.abs(mat_exp(ell * G) - np.linalg.matrix_power(E, ell)).max()
                    assert pw <= 1e-9, (k, ell, pw)
                    worst_pow = max(worst_pow, pw)
            if k % 5 == 1 and spectrum(E - np.eye(S)).spectral_radius <= 0.5:
                d = np.abs(mercator_log(E, 100) - mat_log_principal(E)).max()
                assert d <= 1e-8, (k, d)
                worst_merc = max(worst_merc, d)
                n_merc += 1
        assert n_merc >= 500
        info["detail"] = (
            f"round trip {worst_rt:.1e}, Mercator {worst_merc:.1e} ({n_merc} cases), "
            f"power {worst_pow:.1e}"
        )
