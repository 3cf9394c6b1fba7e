import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markovroots.markov import (
    P_FIVE_STATE,
    P_THREE_STATE,
    CovariatePoint,
    GeneratorMatrix,
    LinkModel,
    NotGenerator,
    NotStochastic,
    PsiSpec,
    StochasticMatrix,
    link_evaluate,
    matrix_power,
    register_psi,
    validate_stochastic,
)
from markovroots.paths import DatasetError, SamplePath, read_jsonl, write_jsonl

from oracles import random_generator

A2 = np.array([[0.9, 0.1], [0.2, 0.8]])


class TestTypes:
    def test_stochastic_rejects_negative(self):
        with pytest.raises(NotStochastic):
            StochasticMatrix([[1.01, -0.01], [0.5, 0.5]])

    def test_stochastic_rejects_row_sum(self):
        with pytest.raises(NotStochastic) as err:
            StochasticMatrix([[0.5, 0.5], [0.5, 0.6]])
        assert err.value.rows[0][0] == 1

    def test_entries_read_only(self, P3):
        with pytest.raises(ValueError):
            P_THREE_STATE.entries[0, 0] = 0.0

    def test_json_round_trip(self):
        for M in (P_THREE_STATE, P_FIVE_STATE):
            obj = json.loads(json.dumps(M.to_json()))
            assert obj["dim"] == M.dim
            assert StochasticMatrix.from_json(obj) == M

    def test_generator(self):
        G = GeneratorMatrix([[-0.3, 0.3], [0.6, -0.6]])
        with pytest.raises(NotGenerator):
            GeneratorMatrix([[0.1, -0.1], [0.6, -0.6]])
        with pytest.raises(NotGenerator):
            GeneratorMatrix([[-0.3, 0.2], [0.6, -0.6]])
        assert isinstance(G / 4, GeneratorMatrix)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 8), st.integers(1, 50), st.integers(0, 2**32 - 1))
    def test_generator_division(self, S, ell, seed):
        G = GeneratorMatrix(random_generator(np.random.default_rng(seed), S))
        assert isinstance(G / ell, GeneratorMatrix)

    def test_ground_truth_tolerance(self):
        for M in (P_THREE_STATE, P_FIVE_STATE):
            assert validate_stochastic(M.entries, tol=1e-6) == M
            # printed rows sum to 100.0000 percent
            assert np.abs(M.entries.sum(axis=1) - 1).max() < 1e-12

    def test_covariate_point(self):
        z = CovariatePoint((1.5,), (1,))
        assert z.p == 1
        assert CovariatePoint.from_json(z.to_json()) == z
        assert CovariatePoint().p == 0


class TestLink:
    def test_reference_psi_value(self):
        assert PsiSpec.reference()(CovariatePoint((1.5,), (1,))) == pytest.approx(5.4, abs=1e-12)
        assert PsiSpec.reference()(CovariatePoint((1.5,), (0,))) == pytest.approx(3.6, abs=1e-12)

    def test_zero_psi_uniform(self):
        register_psi("zero", lambda z: 0.0)
        model = LinkModel(P_THREE_STATE, PsiSpec(name="zero"))
        np.testing.assert_allclose(link_evaluate(model, CovariatePoint((1.0,), (0,))).entries, 1 / 3)

    def test_reference_point(self):
        P = link_evaluate(LinkModel(P_THREE_STATE, PsiSpec.reference()), CovariatePoint((1.5,), (1,)))
        np.testing.assert_allclose(P.entries.sum(axis=1), 1.0, atol=1e-15)
        assert np.diag(P.entries).min() > 0.5
        # direct evaluation of the softmax
        e = np.exp(P_THREE_STATE.entries * 5.4)
        np.testing.assert_allclose(P.entries, e / e.sum(axis=1, keepdims=True), rtol=1e-14)

    def test_rows_sum_to_one_random_draws(self):
        rng = np.random.default_rng(5)
        model = LinkModel(P_FIVE_STATE, PsiSpec.reference())
        for _ in range(10_000):
            z = CovariatePoint((1 + rng.beta(2, 2),), (int(rng.random() < 0.7),))
            P = link_evaluate(model, z).entries
            assert np.abs(P.sum(axis=1) - 1).max() <= 1e-14

    def test_psi_json(self):
        spec = PsiSpec.reference()
        assert PsiSpec.from_json(json.loads(json.dumps(spec.to_json()))) == spec
        assert PsiSpec.from_json("reference") == spec


class TestPower:
    def test_two_state(self):
        np.testing.assert_allclose(matrix_power(A2, 2).entries, [[0.83, 0.17], [0.34, 0.66]], atol=1e-15)

    def test_trivial(self, P5):
        assert np.array_equal(matrix_power(P5, 1).entries, P5)
        assert np.array_equal(matrix_power(np.eye(4), 9).entries, np.eye(4))

    def test_bad_exponent(self):
        with pytest.raises(ValueError):
            matrix_power(A2, 0)

    @pytest.mark.parametrize("a,b", [(1, 1), (2, 5), (7, 13), (20, 20)])
    def test_semigroup(self, P5, a, b):
        lhs = matrix_power(P5, a + b).entries
        rhs = matrix_power(P5, a).entries @ matrix_power(P5, b).entries
        assert np.abs(lhs - rhs).max() <= 1e-10


class TestValidate:
    def test_exact_unchanged(self, P3):
        assert np.array_equal(validate_stochastic(P3).entries, P3)

    def test_renormalizes_small_drift(self):
        M = np.array([[0.5, 0.5 + 5e-11], [0.3, 0.7]])
        out = validate_stochastic(M, tol=1e-10).entries
        assert np.abs(out.sum(axis=1) - 1).max() <= 1e-15
        assert out[1, 0] == 0.3

    def test_clamps_small_negative(self):
        out = validate_stochastic([[1.0 + 5e-11, -5e-11], [0.0, 1.0]]).entries
        assert out[0, 1] == 0.0

    def test_rejects_negative(self):
        with pytest.raises(NotStochastic) as err:
            validate_stochastic([[1.02, -0.02], [0.5, 0.5]])
        assert err.value.rows[0] == (0, pytest.approx(-0.02))


class TestPaths:
    def test_transitions(self):
        p = SamplePath(0, CovariatePoint(), 1, ((3, 2), (20, 1)))
        assert list(p.transitions()) == [(1, 2, 3), (2, 1, 20)]
        assert p.total_time == 23

    def test_jsonl_round_trip(self, tmp_path):
        paths = [
            SamplePath(0, CovariatePoint((1.25,), (1,)), 2, ((4, 1), (17, 3))),
            SamplePath(1, CovariatePoint((1.75,), (0,)), 3, ()),
        ]
        f = tmp_path / "d.jsonl"
        assert write_jsonl(paths, f) == 2
        assert read_jsonl(f) == paths
        buf = io.StringIO()
        write_jsonl(paths, buf)
        assert buf.getvalue() == f.read_text()

    def test_malformed_line_reports_location(self, tmp_path):
        f = tmp_path / "bad.jsonl"
        f.write_text('{"path_id": 0, "y0": 1, "events": []}\n{"path_id": 1}\n')
        with pytest.raises(DatasetError, match="bad.jsonl:2"):
            read_jsonl(f)
