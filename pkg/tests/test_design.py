"""Synthetic designs: spectrum, density, sampling, assumption checks, I/O."""

import dataclasses

import numpy as np
import pytest
from scipy import stats

from qbnpiv.basis import Basis, eval_matrix
from qbnpiv.design import (
    Design,
    Sample,
    build_design,
    density,
    design_from_config,
    design_to_config,
    load_csv,
    population_cross_gram,
    rejection_sample,
    sample,
    save_csv,
    structural_function,
    tail_norm_sq,
    true_coeffs,
    true_tau,
    validate_assumptions,
)
from qbnpiv.errors import ConfigurationError, DataFormatError, DomainError

MILD = build_design("mild", s=2.0, L=32, scale=0.1, r=1.0)
SEVERE = build_design("severe", s=2.0, L=32, scale=0.2, c=1.0)


def quadrature_cross_gram(design, level, n_nodes=384):
    """Independent oracle: (l, m) entry = 2-D quadrature of phi_l(w) f(x,w) phi_m(x)."""
    t, qw = np.polynomial.legendre.leggauss(n_nodes)
    x = (t + 1.0) / 2.0
    w = qw / 2.0
    phi = eval_matrix(Basis("cosine"), level, x)  # nodes x dim
    f = 1.0 + (np.sqrt(2.0) * np.cos(np.pi * np.outer(x, np.arange(1, design.n_modes + 1)))) @ \
        (design.spectrum[:, None] * (np.sqrt(2.0) * np.cos(np.pi * np.outer(np.arange(1, design.n_modes + 1), x))))
    # T = int int phi_l(u) f(v, u) phi_m(v) dv du, u instrument node, v regressor node
    weighted = phi * w[:, None]
    return weighted.T @ f.T @ weighted


class TestBuildDesign:
    def test_harmonic_spectrum_violates_positivity(self):
        with pytest.raises(ConfigurationError, match="positivity"):
            build_design("mild", s=2.0, L=100, scale=0.1, r=1.0)

    def test_square_summable_spectrum_accepted(self):
        d = build_design("mild", s=2.0, L=100, scale=0.1, r=2.0)
        # 2 * 0.1 * sum(l^-2) over 100 terms, well inside the budget
        assert 2.0 * d.spectrum.sum() == pytest.approx(0.32699678003697863, abs=1e-12)

    def test_severe_spectrum_value(self):
        d = build_design("severe", s=2.0, L=50, scale=0.2, c=1.0)
        assert d.spectrum[0] == pytest.approx(0.2 * np.exp(-1.0), abs=1e-12)

    def test_structural_coefficients_decay(self):
        d = build_design("mild", s=1.5, L=10, scale=0.05, r=1.0)
        np.testing.assert_allclose(d.coeffs0[:3], [1.0, 1.0, 2.0**-2.0])

    def test_bad_smoothness(self):
        with pytest.raises(ConfigurationError):
            build_design("mild", s=0.4, L=5, scale=0.05, r=1.0)

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            build_design("weird", s=2.0, L=5, scale=0.05, r=1.0)


class TestDensity:
    def test_vanishing_mode_at_half(self):
        d = build_design("mild", s=2.0, L=1, scale=0.1, r=1.0)
        for w in (0.0, 0.3, 1.0):
            assert density(d, 0.5, w) == pytest.approx(1.0, abs=1e-12)

    def test_corner_value(self):
        d = build_design("mild", s=2.0, L=1, scale=0.1, r=1.0)
        # 1 + rho_1 * phi_2(0)^2 = 1 + 0.1 * 2
        assert density(d, 0.0, 0.0) == pytest.approx(1.2, abs=1e-12)
        assert density(d, 0.0, 0.0) == pytest.approx(d.density_bound, abs=1e-12)

    def test_integrates_to_one(self):
        t, qw = np.polynomial.legendre.leggauss(128)
        x = (t + 1.0) / 2.0
        w = qw / 2.0
        for d in (MILD, SEVERE):
            grid = density(d, np.repeat(x, x.size), np.tile(x, x.size))
            total = float(w @ grid.reshape(x.size, x.size) @ w)
            assert total == pytest.approx(1.0, abs=1e-8)

    def test_positive_everywhere(self):
        rng = np.random.default_rng(0)
        pts = rng.random((2000, 2))
        assert density(MILD, pts[:, 0], pts[:, 1]).min() > 0

    def test_domain_error(self):
        with pytest.raises(DomainError):
            density(MILD, 1.5, 0.5)


class TestSampling:
    def test_degenerate_error_law(self):
        d = dataclasses.replace(MILD, rho_u=0.0, sigma_e=0.0)
        s = sample(d, 500, seed=4)
        np.testing.assert_allclose(s.y, structural_function(d, s.x), atol=1e-12)

    def test_conditional_mean_zero(self):
        s = sample(MILD, 100_000, seed=9)
        u = s.y - structural_function(MILD, s.x)
        phi_w = eval_matrix(Basis("cosine"), 3, s.w)
        for l in range(8):
            z = phi_w[:, l] * u
            assert abs(z.mean()) <= 4.0 * z.std() / np.sqrt(s.n)

    def test_rejection_acceptance_frequency(self):
        rng = np.random.default_rng(5)
        n = 50_000
        _, _, proposals = rejection_sample(MILD, n, rng)
        p = 1.0 / MILD.density_bound
        sd = np.sqrt(p * (1 - p) / proposals)
        assert abs(n / proposals - p) <= 3.5 * sd + 2e-2 * p  # chunk overshoot slack

    def test_marginals_uniform(self):
        s = sample(MILD, 100_000, seed=13)
        crit = 1.63 / np.sqrt(s.n)
        assert stats.kstest(s.x, "uniform").statistic < crit
        assert stats.kstest(s.w, "uniform").statistic < crit

    def test_bit_reproducible(self):
        a = sample(MILD, 2000, seed=42)
        b = sample(MILD, 2000, seed=42)
        assert np.array_equal(a.y, b.y) and np.array_equal(a.x, b.x) and np.array_equal(a.w, b.w)

    def test_invalid_size(self):
        with pytest.raises(Exception):
            sample(MILD, 0, seed=1)


class TestTau:
    def test_level_zero_is_constant_mode(self):
        assert true_tau(MILD, 0) == 1.0

    def test_mild_matches_spectrum(self):
        # direct construction so the spectrum is exactly (1/2, 1/4, 1/6, ...)
        spec = 0.5 / np.arange(1.0, 9.0)
        d = dataclasses.replace(MILD, spectrum=spec, coeffs0=np.ones(9))
        assert true_tau(d, 2) == pytest.approx(1.0 / 6.0, abs=1e-12)

    def test_severe_value(self):
        assert true_tau(SEVERE, 1) == pytest.approx(0.2 * np.exp(-1.0), abs=1e-12)

    def test_nonincreasing_in_level(self):
        taus = [true_tau(MILD, j) for j in range(6)]
        assert all(a >= b for a, b in zip(taus, taus[1:]))

    @pytest.mark.parametrize("design", [MILD, SEVERE], ids=["mild", "severe"])
    @pytest.mark.parametrize("level", [1, 2, 3])
    def test_matches_quadrature_svd_oracle(self, design, level):
        matrix = quadrature_cross_gram(design, level)
        np.testing.assert_allclose(matrix, population_cross_gram(design, level), atol=1e-10)
        smallest = np.linalg.svd(matrix, compute_uv=False)[-1]
        assert true_tau(design, level) == pytest.approx(smallest, abs=1e-6)

    def test_spectrum_exhausted(self):
        d = build_design("mild", s=2.0, L=3, scale=0.1, r=1.0)
        with pytest.raises(ConfigurationError, match="exhausted"):
            true_tau(d, 3)

    def test_truncation_tail(self):
        d = build_design("mild", s=2.0, L=3, scale=0.1, r=1.0)
        assert tail_norm_sq(d, 2) == 0.0
        assert tail_norm_sq(d, 1) == pytest.approx(float(np.sum(d.coeffs0[2:] ** 2)))
        assert true_coeffs(d, 2).coeffs.size == 4


class TestAssumptions:
    def test_valid_design_passes(self):
        report = validate_assumptions(MILD, j_max=4)
        assert report.all_passed, report.as_dict()

    def test_zero_eigenvalue_flags_injectivity(self):
        spec = MILD.spectrum.copy()
        spec[5] = 0.0
        d = dataclasses.replace(MILD, spectrum=spec)
        report = validate_assumptions(d, j_max=3)
        failed = [c.name for c in report.checks if not c.passed]
        assert "injectivity_on_span" in failed

    def test_decay_mismatch_flagged(self):
        ls = np.arange(1.0, 33.0)
        d = dataclasses.replace(MILD, spectrum=0.1 * ls**-2.0)  # declared r=1, built r=2
        report = validate_assumptions(d, j_max=4)
        failed = [c.name for c in report.checks if not c.passed]
        assert "illposedness_decay" in failed

    def test_severe_passes(self):
        report = validate_assumptions(SEVERE, j_max=4)
        assert report.all_passed, report.as_dict()


class TestSerialization:
    def test_config_roundtrip(self):
        cfg = design_to_config(MILD)
        assert cfg["kind"] == "mild" and cfg["r"] == 1.0 and cfg["rho_U"] == 0.5
        d = design_from_config(cfg)
        np.testing.assert_array_equal(d.spectrum, MILD.spectrum)
        np.testing.assert_array_equal(d.coeffs0, MILD.coeffs0)

    def test_config_missing_key(self):
        with pytest.raises(ConfigurationError):
            design_from_config({"kind": "mild", "r": 1.0})

    def test_csv_roundtrip_bit_identical(self, tmp_path):
        s = sample(MILD, 10_000, seed=3)
        path = tmp_path / "sample.csv"
        save_csv(s, path)
        back = load_csv(path)
        assert np.array_equal(back.y, s.y)
        assert np.array_equal(back.x, s.x)
        assert np.array_equal(back.w, s.w)

    def test_single_row(self, tmp_path):
        path = tmp_path / "tiny.csv"
        path.write_text("y,x,w\n1.0,0.5,0.5\n")
        s = load_csv(path)
        assert s.n == 1 and s.y[0] == 1.0

    def test_out_of_range_row_named(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("y,x,w\n1.0,1.5,0.5\n")
        with pytest.raises(DataFormatError, match=r"rows \[1\]") as err:
            load_csv(path)
        assert err.value.code == "out-of-range"

    def test_missing_header(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(DataFormatError) as err:
            load_csv(path)
        assert err.value.code == "bad-header"

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataFormatError) as err:
            load_csv(path)
        assert err.value.code == "empty-file"

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "mal.csv"
        path.write_text("y,x,w\n1.0,0.5\n")
        with pytest.raises(DataFormatError) as err:
            load_csv(path)
        assert err.value.code == "bad-row"


class TestSampleType:
    def test_rejects_out_of_range(self):
        with pytest.raises(DomainError):
            Sample(y=np.ones(2), x=np.array([0.5, 1.5]), w=np.array([0.5, 0.5]))

    def test_rejects_nonfinite(self):
        with pytest.raises(Exception):
            Sample(y=np.array([np.nan]), x=np.array([0.5]), w=np.array([0.5]))
