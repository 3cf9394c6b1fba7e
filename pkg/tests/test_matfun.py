import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from markovroots.matfun import (
    DivergenceRiskError,
    MagnitudeError,
    NegativeEigenvalueError,
    SingularMatrixError,
    Uniqueness,
    generator_uniqueness_check,
    is_m_matrix_inverse,
    mat_exp,
    mat_log_principal,
    mercator_log,
    spectral_norm,
    spectrum,
    sqrtm_db,
)

from oracles import eig_function, random_generator

A2 = np.array([[0.9, 0.1], [0.2, 0.8]])


class TestExp:
    def test_zero_is_exact_identity(self):
        assert np.array_equal(mat_exp(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        out = mat_exp(np.diag([math.log(2), math.log(3)]))
        np.testing.assert_allclose(out, np.diag([2.0, 3.0]), rtol=1e-14, atol=1e-15)

    def test_two_state_generator_closed_form(self):
        Q = np.array([[-0.3, 0.3], [0.6, -0.6]])
        expected = np.eye(2) + (1 - math.exp(-0.9)) / 0.9 * Q
        np.testing.assert_allclose(mat_exp(Q), expected, atol=1e-15)
        # eigenvalues {0, -0.9}
        np.testing.assert_allclose(
            expected, [[0.802190, 0.197810], [0.395620, 0.604380]], atol=1e-6
        )

    @pytest.mark.parametrize("scale", [0.01, 0.5, 2.0, 6.0, 10.0])
    def test_relative_accuracy_against_scipy(self, rng, scale):
        for _ in range(20):
            Q = rng.normal(size=(5, 5))
            Q *= scale / np.abs(Q).sum(axis=0).max()
            ref = sla.expm(Q)
            assert np.abs(mat_exp(Q) - ref).max() <= 1e-12 * np.abs(ref).max()

    def test_overflow(self):
        with pytest.raises(MagnitudeError):
            mat_exp(np.full((2, 2), 1e300))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            mat_exp([[np.nan, 0], [0, 0]])


class TestLog:
    def test_identity(self):
        assert np.abs(mat_log_principal(np.eye(4))).max() == 0.0

    def test_two_state_closed_form(self):
        expected = math.log(0.7) / -0.3 * (A2 - np.eye(2))
        np.testing.assert_allclose(mat_log_principal(A2), expected, atol=1e-14)
        np.testing.assert_allclose(
            expected, [[-0.118892, 0.118892], [0.237783, -0.237783]], atol=1e-6
        )

    def test_negative_eigenvalue(self):
        # eigenvalues 1 and -0.05
        A = np.array([[0.475, 0.525], [0.525, 0.475]])
        assert np.isclose(np.linalg.eigvals(A).min(), -0.05)
        with pytest.raises(NegativeEigenvalueError):
            mat_log_principal(A)

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            mat_log_principal([[0.5, 0.5], [0.5, 0.5]])

    def test_complex_pair_against_scipy(self, P5):
        # P5 has a complex conjugate pair of eigenvalues
        np.testing.assert_allclose(mat_log_principal(P5), sla.logm(P5).real, atol=1e-13)

    def test_eigen_oracle_on_random_stochastic(self, rng):
        for _ in range(50):
            G = random_generator(rng, 4)
            A = sla.expm(G)
            np.testing.assert_allclose(
                mat_log_principal(A), eig_function(A, np.log), atol=1e-10
            )

    def test_round_trip_exp_log(self, rng):
        for _ in range(50):
            A = sla.expm(random_generator(rng, 6))
            np.testing.assert_allclose(mat_exp(mat_log_principal(A)), A, atol=1e-9)

    def test_sqrt(self, P3):
        R = sqrtm_db(P3)
        np.testing.assert_allclose(R @ R, P3, atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_round_trip_random_generators(S, seed):
    G = random_generator(np.random.default_rng(seed), S, max_norm=2.0)
    assert np.abs(mat_log_principal(mat_exp(G)) - G).max() <= 1e-8


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_power_identity(S, seed):
    G = random_generator(np.random.default_rng(seed), S)
    E = mat_exp(G)
    for ell in range(1, 7):
        assert np.abs(mat_exp(ell * G) - np.linalg.matrix_power(E, ell)).max() <= 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_exp_of_generator_is_stochastic(S, seed):
    P = mat_exp(random_generator(np.random.default_rng(seed), S))
    assert P.min() >= -1e-10
    assert np.abs(P.sum(axis=1) - 1).max() <= 1e-10


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_stochastic_spectrum_contains_one(S, seed):
    r = np.random.default_rng(seed)
    P = r.random((S, S))
    P /= P.sum(axis=1, keepdims=True)
    lam = spectrum(P).eigenvalues
    assert np.abs(lam - 1.0).min() <= 1e-10


class TestSpectrum:
    def test_identity(self):
        s = spectrum(np.eye(3))
        np.testing.assert_allclose(s.eigenvalues, [1, 1, 1])
        assert s.min_modulus == 1.0 and s.dist_to_neg_axis == 1.0

    def test_two_state(self):
        s = spectrum(A2)
        np.testing.assert_allclose(sorted(s.eigenvalues.real), [0.7, 1.0], atol=1e-12)
        assert s.dist_to_neg_axis == pytest.approx(0.7, abs=1e-12)

    def test_permutation(self):
        s = spectrum([[0, 1], [1, 0]])
        np.testing.assert_allclose(sorted(s.eigenvalues.real), [-1, 1], atol=1e-12)
        assert s.dist_to_neg_axis == pytest.approx(0.0, abs=1e-15)

    def test_complex_left_half_plane(self):
        # eigenvalues -1 +/- 2i: distance to the half-line is |Im| = 2
        s = spectrum([[-1, 2], [-2, -1]])
        assert s.dist_to_neg_axis == pytest.approx(2.0)


class TestMercator:
    def test_identity(self):
        assert not mercator_log(np.eye(3), 5).any()

    def test_two_state(self):
        np.testing.assert_allclose(
            mercator_log(A2, 60), math.log(0.7) / -0.3 * (A2 - np.eye(2)), atol=1e-10
        )

    def test_divergence(self):
        # A - I = 1.2 * J with rho = 1.2
        A = np.eye(2) + np.array([[0.0, 1.2], [1.2, 0.0]])
        with pytest.raises(DivergenceRiskError):
            mercator_log(A, 10)

    def test_bad_terms(self):
        with pytest.raises(ValueError):
            mercator_log(np.eye(2), 0)


class TestEmbeddability:
    def test_three_state_truth(self, P3):
        assert is_m_matrix_inverse(P3)

    def test_identity(self):
        assert is_m_matrix_inverse(np.eye(3))

    def test_permutation(self):
        assert not is_m_matrix_inverse([[0, 1], [1, 0]])

    def test_singular_is_false(self):
        assert not is_m_matrix_inverse([[0.5, 0.5], [0.5, 0.5]])

    def test_uniqueness(self, P3, P5):
        np.testing.assert_allclose(np.diag(P3), [0.940007, 0.925639, 0.971131])
        assert generator_uniqueness_check(P3) is Uniqueness.UNIQUE
        assert generator_uniqueness_check(P5) is Uniqueness.UNIQUE
        assert generator_uniqueness_check(np.eye(3)) is Uniqueness.UNIQUE

    def test_uniqueness_inconclusive(self):
        P = np.array([[0.4, 0.6], [0.6, 0.4]])
        # condition (b) fails: 0.4 * det(P) = -0.08 < exp(-pi) * 0.16
        assert 0.4 * np.linalg.det(P) < math.exp(-math.pi) * 0.16
        assert generator_uniqueness_check(P) is Uniqueness.INCONCLUSIVE

    def test_uniqueness_condition_b(self):
        # min diagonal below 1/2 but (b) holds
        P = np.array([[0.45, 0.55, 0.0], [0.0, 0.9, 0.1], [0.0, 0.05, 0.95]])
        assert 0.45 * np.linalg.det(P) > math.exp(-math.pi) * np.prod(np.diag(P))
        assert generator_uniqueness_check(P) is Uniqueness.UNIQUE


def test_spectral_norm_matches_svd(rng):
    for S in (2, 3, 5, 9):
        for _ in range(20):
            U = rng.normal(size=(S, S)) * rng.uniform(1e-4, 1.0)
            ref = np.linalg.norm(U, 2)
            assert spectral_norm(U) == pytest.approx(ref, rel=1e-9)
    assert spectral_norm(np.zeros((3, 3))) == 0.0
