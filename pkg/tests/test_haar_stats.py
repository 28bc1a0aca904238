"""Reference distributions, KS testing, and the observable density."""

import numpy as np
import pytest

from qntk import (
    BoundaryError,
    DegenerateSpectrumError,
    InvalidDimensionError,
    Observable,
    ReferenceDistribution,
    ShapeMismatchError,
    SpectrumSpec,
    density_normalization,
    ks_statistic,
    mc_observable_density,
    observable_density,
    substream,
    verify_coefficient_laws,
)


def simplex_spline_density(eigenvalues, y):
    """Independent closed form: density of sum h_k p_k with (p_k) flat Dirichlet.

    p(y) = (N-1) * sum_k max(h_k - y, 0)^(N-2) / prod_{j != k} (h_k - h_j).
    """
    h = np.asarray(eigenvalues, dtype=float)
    n = h.size
    total = 0.0
    for k in range(n):
        denom = np.prod([h[k] - h[j] for j in range(n) if j != k])
        total += max(h[k] - y, 0.0) ** (n - 2) / denom
    return (n - 1) * total


class TestReferenceDistribution:
    def test_beta_cdf_closed_form(self):
        d = 16
        dist = ReferenceDistribution.beta(1.0, d - 1.0)
        for x in (0.01, 0.1, 0.5):
            assert dist.cdf(x) == pytest.approx(1.0 - (1.0 - x) ** (d - 1), abs=1e-12)

    def test_laplace_median(self):
        assert ReferenceDistribution.laplace(0.0, 0.3).cdf(0.0) == pytest.approx(0.5)

    def test_normal_median(self):
        assert ReferenceDistribution.normal(2.5, 4.0).cdf(2.5) == pytest.approx(0.5)

    def test_uniform_cdf(self):
        dist = ReferenceDistribution.uniform(-1.0, 1.0)
        assert dist.cdf(0.0) == pytest.approx(0.5)
        assert dist.cdf(-1.0) == 0.0 and dist.cdf(1.0) == 1.0

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            ReferenceDistribution.beta(0.0, 1.0)
        with pytest.raises(ValueError):
            ReferenceDistribution.laplace(0.0, -1.0)
        with pytest.raises(ValueError):
            ReferenceDistribution.normal(0.0, 0.0)
        with pytest.raises(ValueError):
            ReferenceDistribution.uniform(1.0, 1.0)


class TestKsStatistic:
    def test_self_consistency(self):
        # samples drawn from the reference pass at the 1% level almost always
        dist = ReferenceDistribution.uniform(0.0, 1.0)
        rng = substream(400, 0)
        passes = sum(
            ks_statistic(dist.sample(10_000, rng), dist).passed for _ in range(40)
        )
        assert passes >= 38

    def test_constant_samples_fail_hard(self):
        dist = ReferenceDistribution.normal(0.0, 1.0)
        result = ks_statistic(np.zeros(500), dist)
        assert result.statistic >= 0.5
        assert not result.passed

    def test_short_input_rejected(self):
        with pytest.raises(ValueError):
            ks_statistic(np.arange(50), ReferenceDistribution.uniform(0, 100))

    def test_unsorted_input_handled(self):
        dist = ReferenceDistribution.uniform(0.0, 1.0)
        rng = substream(400, 1)
        x = dist.sample(2000, rng)
        shuffled = x.copy()
        rng.shuffle(shuffled)
        assert ks_statistic(shuffled, dist).statistic == ks_statistic(np.sort(x), dist).statistic

    def test_threshold_value(self):
        result = ks_statistic(np.linspace(0.001, 0.999, 10_000), ReferenceDistribution.uniform(0, 1))
        assert result.threshold == pytest.approx(1.63 / 100.0)


class TestSpectrumSpec:
    def test_requires_descending(self):
        with pytest.raises(ShapeMismatchError):
            SpectrumSpec([0.0, 1.0])

    def test_requires_two_levels(self):
        with pytest.raises(InvalidDimensionError):
            SpectrumSpec([1.0])

    def test_shift_and_scale(self):
        spec = SpectrumSpec([1.0, 0.0, -1.0])
        np.testing.assert_array_equal(spec.shifted(2.0).eigenvalues, [3.0, 2.0, 1.0])
        np.testing.assert_array_equal(spec.scaled(2.0).eigenvalues, [2.0, 0.0, -2.0])


class TestObservableDensity:
    def test_two_level_flat(self):
        spec = SpectrumSpec([1.0, -1.0])
        for y in (-0.9, -0.3, 0.0, 0.5, 0.99):
            assert observable_density(spec, y) == pytest.approx(0.5, abs=1e-3)

    def test_outside_support_is_zero(self):
        spec = SpectrumSpec([1.0, 0.0, -1.0])
        assert observable_density(spec, 1.5) == 0.0
        assert observable_density(spec, 1.0) == 0.0
        assert observable_density(spec, -1.0) == 0.0

    def test_three_level_triangle(self):
        # hand integration for diag(1, 0, -1) gives p(y) = 1 - |y|
        spec = SpectrumSpec([1.0, 0.0, -1.0])
        for y in (-0.8, -0.4, -0.1, 0.2, 0.55, 0.9):
            assert observable_density(spec, y) == pytest.approx(1.0 - abs(y), abs=1e-6)

    def test_three_level_asymmetric_against_spline(self):
        spec = SpectrumSpec([2.0, 0.5, -1.0])
        for y in (-0.7, 0.0, 0.4, 1.2, 1.9):
            assert observable_density(spec, y) == pytest.approx(
                simplex_spline_density(spec.eigenvalues, y), abs=1e-6
            )

    def test_four_level_against_spline(self):
        spec = SpectrumSpec([3.0, 1.0, 0.0, -2.0])
        for y in (-1.5, -0.5, 0.5, 2.0, 2.8):
            assert observable_density(spec, y) == pytest.approx(
                simplex_spline_density(spec.eigenvalues, y), abs=1e-5
            )

    def test_normalizes_to_one(self):
        assert density_normalization(SpectrumSpec([1.0, 0.0, -1.0])) == pytest.approx(1.0, abs=1e-3)
        assert density_normalization(SpectrumSpec([3.0, 1.0, 0.0, -2.0])) == pytest.approx(1.0, abs=1e-3)

    def test_shift_covariance(self):
        spec = SpectrumSpec([1.0, 0.0, -1.0])
        c = 0.75
        for y in (-0.5, 0.2, 0.8):
            assert observable_density(spec.shifted(c), y + c) == pytest.approx(
                observable_density(spec, y), abs=1e-8
            )

    def test_scale_covariance(self):
        spec = SpectrumSpec([1.0, 0.0, -1.0])
        s = 2.5
        for y in (-0.5, 0.2, 0.8):
            assert observable_density(spec.scaled(s), s * y) == pytest.approx(
                observable_density(spec, y) / s, abs=1e-8
            )

    def test_degenerate_spectrum_rejected(self):
        with pytest.raises(DegenerateSpectrumError):
            observable_density(SpectrumSpec([1.0, 1.0, -1.0]), 0.5)

    def test_interior_eigenvalue_rejected(self):
        with pytest.raises(BoundaryError):
            observable_density(SpectrumSpec([1.0, 0.0, -1.0]), 0.0)

    def test_five_levels_unsupported(self):
        with pytest.raises(InvalidDimensionError):
            observable_density(SpectrumSpec([2.0, 1.0, 0.0, -1.0, -2.0]), 0.3)

    def test_matches_monte_carlo(self):
        spec = SpectrumSpec([1.0, 0.0, -1.0])
        hist = mc_observable_density(spec, 100_000, 20, substream(401, 0))
        centers = hist.centers
        quad = np.array([observable_density(spec, float(y)) for y in centers])
        dev = np.abs(quad - hist.density) / hist.std_error
        assert np.max(dev) <= 3.0


class TestMcObservableDensity:
    def test_identity_observable_concentrates(self):
        spec = SpectrumSpec([1.0, 1.0])
        hist = mc_observable_density(spec, 10_000, 11, substream(402, 0))
        center_bin = np.digitize(1.0, hist.bin_edges) - 1
        center_bin = min(center_bin, hist.density.size - 1)
        mass = hist.density * np.diff(hist.bin_edges)
        assert mass[center_bin] == pytest.approx(1.0, abs=1e-12)

    def test_histogram_integrates_to_one(self):
        spec = SpectrumSpec([1.0, 0.0, -1.0])
        hist = mc_observable_density(spec, 20_000, 30, substream(402, 1))
        assert hist.integral() == pytest.approx(1.0, abs=1e-12)

    def test_two_level_flat_within_noise(self):
        spec = SpectrumSpec([1.0, -1.0])
        hist = mc_observable_density(spec, 50_000, 10, substream(402, 2))
        dev = np.abs(hist.density - 0.5) / hist.std_error
        assert np.max(dev) <= 4.0

    def test_minimum_samples(self):
        with pytest.raises(ValueError):
            mc_observable_density(SpectrumSpec([1.0, -1.0]), 100, 5, substream(402, 3))


class TestVerifyCoefficientLaws:
    def test_report_structure_and_determinism(self):
        obs = Observable.pauli("ZZZ")
        report = verify_coefficient_laws(8, obs, 10_000, substream(403, 0))
        again = verify_coefficient_laws(8, obs, 10_000, substream(403, 0))
        assert report == again
        names = {law["coefficient"] for law in report["laws"]}
        assert names == {"alpha_1", "re_beta_12", "im_beta_12", "re_b_12", "im_b_12"}
        for law in report["laws"]:
            assert 0.0 <= law["ks_statistic"] <= 1.0
            assert law["threshold"] == pytest.approx(1.63 / 100.0)
        a_info = report["a_coefficient"]
        assert set(a_info["candidates"]) == {"unit_mean_law", "moment_derived_law"}
        # the empirical moments single out the moment-derived candidate
        moment_law = a_info["candidates"]["moment_derived_law"]
        assert a_info["sample_mean"] == pytest.approx(moment_law["mean"], abs=0.05)
        assert a_info["sample_variance"] == pytest.approx(moment_law["variance"], rel=0.2)
        unit_law = a_info["candidates"]["unit_mean_law"]
        assert abs(a_info["sample_variance"] - unit_law["variance"]) > 10 * a_info["sample_variance"]

    def test_alpha_law_exact_even_at_small_d(self):
        # |u_11|^2 is exactly Beta(1, d-1) at every d, so the KS must pass
        obs = Observable.pauli("ZZZ")
        report = verify_coefficient_laws(8, obs, 10_000, substream(403, 1))
        alpha_law = next(l for l in report["laws"] if l["coefficient"] == "alpha_1")
        assert alpha_law["passed"]

    def test_dimension_guard(self):
        with pytest.raises(InvalidDimensionError):
            verify_coefficient_laws(4, Observable.pauli("ZZ"), 10_000, substream(403, 2))
