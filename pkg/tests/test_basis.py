"""Basis systems: evaluation, orthonormality, projection, synthesis."""

import numpy as np
import pytest

from qbnpiv.basis import (
    Basis,
    SieveCoefficients,
    eval_matrix,
    eval_vector,
    gram,
    project,
    quadrature_nodes,
    synthesize,
)
from qbnpiv.errors import DimensionError, DomainError, ValidationError

COSINE = Basis("cosine")
HAAR = Basis("haar")

# independent oracle: int_0^1 x*sqrt(2)*cos(pi x) dx, by symbolic calculus
# and cross-checked with adaptive quadrature
PROJ_X_SECOND = -2.0 * np.sqrt(2.0) / np.pi**2  # -0.28657958412537815


class TestEvaluation:
    def test_cosine_at_zero(self):
        np.testing.assert_allclose(eval_vector(COSINE, 1, 0.0), [1.0, np.sqrt(2.0)], atol=1e-12)

    def test_cosine_at_half(self):
        np.testing.assert_allclose(eval_vector(COSINE, 1, 0.5), [1.0, 0.0], atol=1e-12)

    def test_haar_mother_positive_half(self):
        # the level-0 wavelet is +1 on [0, 1/2)
        np.testing.assert_allclose(eval_vector(HAAR, 1, 0.25), [1.0, 1.0], atol=1e-12)

    def test_haar_mother_negative_half(self):
        np.testing.assert_allclose(eval_vector(HAAR, 1, 0.75), [1.0, -1.0], atol=1e-12)

    def test_haar_level_two_support(self):
        # x = 0.1 lies in [0, 1/4): active wavelets are (0,0) and (1,0), both positive
        vec = eval_vector(HAAR, 2, 0.1)
        np.testing.assert_allclose(vec, [1.0, 1.0, np.sqrt(2.0), 0.0], atol=1e-12)

    def test_constant_function_everywhere(self):
        for kind in (COSINE, HAAR):
            for x in (0.0, 0.31, 1.0):
                assert eval_vector(kind, 3, x)[0] == 1.0

    @pytest.mark.parametrize("x", [-0.1, 1.2, np.nan])
    def test_domain_error(self, x):
        with pytest.raises(DomainError):
            eval_vector(COSINE, 1, x)


class TestGram:
    def test_cosine_small(self):
        np.testing.assert_allclose(gram(COSINE, 1), np.eye(2), atol=1e-10)

    def test_haar_exact_under_dyadic_midpoint(self):
        assert np.abs(gram(HAAR, 2) - np.eye(4)).max() < 1e-12

    def test_cosine_dim8_high_accuracy(self):
        g = gram(COSINE, 3)
        assert np.abs(g - np.eye(8)).max() < 1e-10
        # oracle: same integrals at 10x the nodes
        dense = Basis("cosine", n_nodes=40960)
        np.testing.assert_allclose(g, gram(dense, 3), atol=1e-10)

    @pytest.mark.parametrize("basis", [COSINE, HAAR], ids=["cosine", "haar"])
    @pytest.mark.parametrize("level", range(7))
    def test_orthonormality_through_level_six(self, basis, level):
        assert np.abs(gram(basis, level) - np.eye(2**level)).max() < 1e-8

    def test_node_count_scales_with_level(self):
        x, w = quadrature_nodes(HAAR, 10)
        assert x.size >= 2**14
        assert abs(w.sum() - 1.0) < 1e-12


class TestProject:
    def test_constant(self):
        coeffs = project(COSINE, 2, lambda x: 3.0 * np.ones_like(x)).coeffs
        np.testing.assert_allclose(coeffs, [3.0, 0.0, 0.0, 0.0], atol=1e-10)

    def test_basis_function_recovers_unit_vector(self):
        coeffs = project(COSINE, 2, lambda x: np.sqrt(2.0) * np.cos(np.pi * x)).coeffs
        np.testing.assert_allclose(coeffs, [0.0, 1.0, 0.0, 0.0], atol=1e-10)

    def test_linear_function(self):
        coeffs = project(COSINE, 1, lambda x: x).coeffs
        np.testing.assert_allclose(coeffs, [0.5, PROJ_X_SECOND], atol=1e-10)

    def test_nonfinite_values_rejected(self):
        with pytest.raises(ValidationError):
            project(COSINE, 1, lambda x: np.where(x > 0.5, np.inf, 1.0))

    @pytest.mark.parametrize("basis", [COSINE, HAAR], ids=["cosine", "haar"])
    def test_project_synthesize_roundtrip(self, basis):
        rng = np.random.default_rng(7)
        for level in (0, 1, 3):
            b = SieveCoefficients(level, rng.standard_normal(2**level))
            back = project(basis, level, lambda x: synthesize(b, basis, x))
            np.testing.assert_allclose(back.coeffs, b.coeffs, atol=1e-8)


class TestSynthesize:
    def test_constant_coefficients(self):
        b = SieveCoefficients(0, [1.0])
        for x in (0.0, 0.4, 1.0):
            assert synthesize(b, COSINE, x) == pytest.approx(1.0)

    def test_single_mode(self):
        b = SieveCoefficients(1, [0.0, 1.0])
        assert synthesize(b, COSINE, 0.0) == pytest.approx(np.sqrt(2.0), abs=1e-10)

    def test_vanishing_mode_at_half(self):
        b = SieveCoefficients(1, [2.0, -1.0])
        assert synthesize(b, COSINE, 0.5) == pytest.approx(2.0, abs=1e-12)

    def test_vectorized(self):
        b = SieveCoefficients(2, [1.0, 0.5, -0.25, 0.0])
        xs = np.linspace(0, 1, 11)
        vals = synthesize(b, COSINE, xs)
        assert vals.shape == (11,)
        assert vals[0] == pytest.approx(synthesize(b, COSINE, 0.0))


class TestInvariants:
    @pytest.mark.parametrize("basis", [COSINE, HAAR], ids=["cosine", "haar"])
    def test_parseval_on_sieve(self, basis):
        rng = np.random.default_rng(3)
        for level in (1, 2, 4):
            b = SieveCoefficients(level, rng.standard_normal(2**level))
            x, w = quadrature_nodes(basis, level)
            energy = float(np.sum(w * synthesize(b, basis, x) ** 2))
            assert energy == pytest.approx(float(b.coeffs @ b.coeffs), abs=1e-8)

    @pytest.mark.parametrize("basis", [COSINE, HAAR], ids=["cosine", "haar"])
    def test_sup_norm_growth(self, basis):
        grid = np.linspace(0.0, 1.0, 1024)
        for level in range(7):
            norms = np.linalg.norm(eval_matrix(basis, level, grid), axis=1)
            assert norms.max() <= 2.0 * 2.0 ** (level / 2.0)


class TestSieveCoefficients:
    def test_length_must_be_power_of_two(self):
        with pytest.raises(DimensionError):
            SieveCoefficients(2, [1.0, 2.0, 3.0])

    def test_entries_must_be_finite(self):
        with pytest.raises(ValidationError):
            SieveCoefficients(0, [np.inf])

    def test_negative_level_rejected(self):
        with pytest.raises(ValidationError):
            SieveCoefficients(-1, [])

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            Basis("fourier")
