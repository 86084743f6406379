import numpy as np
import pytest
from numpy.testing import assert_allclose

from wavecrb import (
    DegenerateScenarioError,
    InapplicableBasisError,
    InvalidParameterError,
    Scenario,
    basis_ofdm,
    basis_sc,
    build_geometry,
    eisl_gap,
    geodesic_derivatives,
    hessian_r2_closed,
    jensen_bound,
    make_psk,
    make_qam,
    pair_weights,
    random_direction,
    second_order_gap,
    selection,
    sigma_s_closed,
    spread_gap_lower_bound_check,
)
from wavecrb.linalg import inv_sqrt_psd

PI = np.pi


class TestJensenBound:
    def test_frozen_single_target(self):
        geom = build_geometry(
            Scenario(n=2, delays=[0.0], gains=[1.0 + 0j], noise_var=1.0)
        )
        assert jensen_bound(geom, selection("delay", 1)) == pytest.approx(
            1 / PI**2, rel=1e-12
        )

    def test_noise_scaling_linear(self, two_target_scenario):
        sel = selection("delay", 2)
        base = jensen_bound(build_geometry(two_target_scenario), sel)
        import dataclasses

        scaled_scen = dataclasses.replace(two_target_scenario, noise_var=3.0)
        scaled = jensen_bound(build_geometry(scaled_scen), sel)
        assert scaled == pytest.approx(3.0 * base, rel=1e-12)

    def test_full_equals_delay_plus_amplitude(self, two_target_geometry):
        full = jensen_bound(two_target_geometry, selection("full", 2))
        parts = jensen_bound(two_target_geometry, selection("delay", 2)) + jensen_bound(
            two_target_geometry, selection("amplitude", 2)
        )
        assert full == pytest.approx(parts, rel=1e-12)


class TestSigmaSClosed:
    def test_localized_unit_kurtosis_vanishes(self):
        assert np.all(sigma_s_closed(basis_ofdm(8), 1.0) == 0.0)

    def test_localized_qam(self):
        assert_allclose(
            sigma_s_closed(basis_ofdm(8), 1.32), 0.32 * np.eye(8), atol=1e-12
        )

    def test_sc_spectrum(self):
        n, kappa = 16, 1.32
        w = np.linalg.eigvalsh(sigma_s_closed(basis_sc(n), kappa))
        assert w[0] == pytest.approx(kappa - 1, abs=1e-9)
        assert_allclose(w[1:], np.ones(n - 1), atol=1e-9)

    def test_eigenvalues_within_band(self):
        from wavecrb import basis_geodesic

        base = basis_ofdm(12)
        moved = basis_geodesic(base, random_direction(12, seed=2), 0.3)
        w = np.linalg.eigvalsh(sigma_s_closed(moved, 1.5))
        assert w[0] >= 1.5 - 1 - 1e-9 and w[-1] <= 1 + 1e-9

    def test_kappa_domain(self):
        with pytest.raises(InvalidParameterError):
            sigma_s_closed(basis_sc(8), 0.9)


class TestSecondOrderGap:
    def test_localized_basis_gap_zero(self, two_target_geometry):
        report = second_order_gap(two_target_geometry, basis_ofdm(16), kappa=1.32)
        assert report.gap_closed == 0.0

    def test_gaussian_boundary_gap_zero(self, two_target_geometry):
        report = second_order_gap(two_target_geometry, basis_sc(16), kappa=2.0)
        assert report.gap_closed == 0.0

    def test_positive_for_spread_basis(self, two_target_geometry):
        report = second_order_gap(two_target_geometry, basis_sc(16), kappa=1.32)
        assert report.gap_closed > 0
        assert report.mu_weights.shape == (16, 16)
        assert np.all(report.mu_weights[np.tril_indices(16)] == 0.0)

    def test_monte_carlo_cross_check(self, two_target_geometry):
        report = second_order_gap(
            two_target_geometry,
            basis_sc(16),
            constellation=make_qam(16),
            trials=20_000,
            seed=3,
        )
        tol = max(5 * report.stderr_mc, 0.05 * report.gap_closed)
        assert abs(report.gap_mc - report.gap_closed) <= tol

    def test_requires_kappa_or_alphabet(self, two_target_geometry):
        with pytest.raises(InvalidParameterError):
            second_order_gap(two_target_geometry, basis_sc(16))


class TestEislGap:
    def test_localized_zero(self):
        assert eisl_gap(basis_ofdm(16), 1.32) == 0.0

    def test_sc_frozen_value(self):
        assert eisl_gap(basis_sc(8), 1.0) == pytest.approx(56.0, rel=1e-12)

    def test_gaussian_boundary_zero(self):
        assert eisl_gap(basis_sc(8), 2.0) == 0.0

    def test_pairwise_overlap_identity(self):
        from wavecrb import basis_afdm

        for basis in (basis_sc(12), basis_afdm(12, "1/6", 0.2)):
            kappa = 1.32
            overlap = basis.mixing.T @ basis.mixing
            iu = np.triu_indices(12, 1)
            alt = 2 * 12 * (2 - kappa) * np.sum(overlap[iu])
            assert eisl_gap(basis, kappa) == pytest.approx(alt, rel=1e-9)


class TestHessianClosed:
    def test_diagonal_direction_zero(self, two_target_geometry):
        k = np.diag(1j * np.linspace(0.2, 1.0, 16))
        k = k / np.linalg.norm(k, ord=2)
        assert hessian_r2_closed(two_target_geometry, k, 1.32) == 0.0

    def test_gaussian_boundary_zero(self, two_target_geometry):
        k = random_direction(16, seed=1)
        assert hessian_r2_closed(two_target_geometry, k, 2.0) == 0.0

    def test_depends_only_on_offdiagonal_magnitudes(self, two_target_geometry):
        rng = np.random.default_rng(4)
        k = random_direction(16, seed=5).matrix
        phases = np.exp(1j * rng.uniform(0, 2 * PI, size=(16, 16)))
        rephased = np.triu(np.abs(k) * phases, 1)
        rephased = rephased - rephased.conj().T + np.diag(1j * np.diag(k).imag)
        a = hessian_r2_closed(two_target_geometry, k, 1.32)
        b = hessian_r2_closed(two_target_geometry, rephased, 1.32)
        assert a == pytest.approx(b, rel=1e-12)
        assert a >= 0.0


class TestPairWeights:
    def test_cached_per_selection(self, two_target_geometry):
        sel = selection("delay", 2)
        first = pair_weights(two_target_geometry, sel)
        second = pair_weights(two_target_geometry, sel)
        assert first is second

    def test_symmetric_nonnegative(self, two_target_geometry):
        mu = pair_weights(two_target_geometry, selection("delay", 2))
        assert np.all(mu >= 0) and np.all(np.diag(mu) == 0)
        assert_allclose(mu, mu.T, atol=0)

    def test_matches_direct_norm(self, two_target_geometry):
        geom = two_target_geometry
        sel = selection("delay", 2)
        mu = pair_weights(geom, sel)
        jinv = np.linalg.inv(geom.expected_fim)
        half = inv_sqrt_psd(geom.expected_fim)
        n, m = 2, 11
        diff = geom.bin_fims[n] - geom.bin_fims[m]
        direct = np.linalg.norm(jinv[sel.indices, :] @ diff @ half) ** 2
        assert mu[n, m] == pytest.approx(direct, rel=1e-9)


class TestGeodesicDerivatives:
    def test_psk_base_value_at_floor_and_flat(self, two_target_geometry):
        report = geodesic_derivatives(
            two_target_geometry,
            random_direction(16, seed=0),
            make_psk(16),
            selection("delay", 2),
            step=0.02,
            trials=4000,
            seed=1,
        )
        floor = jensen_bound(two_target_geometry, selection("delay", 2))
        assert report.mean_at_base == pytest.approx(floor, rel=1e-12)
        assert abs(report.first_deriv) <= 5 * max(report.first_stderr, 1e-15)

    def test_qam_stationary_and_curvature_matches(self, two_target_geometry):
        report = geodesic_derivatives(
            two_target_geometry,
            random_direction(16, seed=2),
            make_qam(16),
            selection("delay", 2),
            step=0.02,
            trials=30_000,
            seed=2,
        )
        assert abs(report.first_deriv) <= 5 * report.first_stderr
        assert report.second_order_hess_closed >= 0
        tol = max(
            5 * report.second_order_hess_stderr,
            0.05 * report.second_order_hess_closed,
        )
        assert abs(
            report.second_order_hess_fd - report.second_order_hess_closed
        ) <= tol

    def test_step_domain(self, two_target_geometry):
        with pytest.raises(InvalidParameterError):
            geodesic_derivatives(
                two_target_geometry,
                random_direction(16, seed=0),
                make_qam(16),
                selection("delay", 2),
                step=0.5,
                trials=10,
                seed=0,
            )


class TestSpreadScaling:
    TEMPLATE = Scenario(n=32, delays=[3.2, 10.7], gains=[1.0, 1.0j], noise_var=1.0)

    def test_localized_basis_inapplicable(self):
        with pytest.raises(InapplicableBasisError):
            spread_gap_lower_bound_check(self.TEMPLATE, "ofdm", 1.32, [32, 64])

    def test_sc_family_scaling_and_bound(self):
        report = spread_gap_lower_bound_check(
            self.TEMPLATE, "sc", 1.32, [32, 64, 128]
        )
        assert report.gap_n2_min > 0
        assert (report.gap_n2_max - report.gap_n2_min) / report.gap_n2_min < 0.5
        for row in report.rows:
            assert row.bound_ok
            assert row.alpha > 0.28


def test_degenerate_geometry_rejected_by_jensen():
    # Nearly coincident delays: construction succeeds, inversion must not.
    scen = Scenario(
        n=16, delays=[2.0, 2.0 + 1e-13], gains=[1.0, 1.0], noise_var=1.0
    )
    geom = build_geometry(scen)
    with pytest.raises(DegenerateScenarioError):
        jensen_bound(geom, selection("delay", 2))
