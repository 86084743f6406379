import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

from wavecrb import (
    InvalidDimensionError,
    InvalidParameterError,
    Scenario,
    SingularFimError,
    basis_afdm,
    basis_ofdm,
    basis_otfs,
    basis_sc,
    build_geometry,
    conditional_crb,
    fim,
    fim_via_cn,
    make_psk,
    make_qam,
    random_scenario,
    resolvent,
    sample_symbols,
    selection,
)
from wavecrb.linalg import inv_sqrt_psd

PI = np.pi


def single_target_geometry():
    return build_geometry(
        Scenario(n=2, delays=[0.0], gains=[1.0 + 0j], noise_var=1.0)
    )


FROZEN_FIM = np.array([[2 * PI**2, 0, -2 * PI], [0, 4, 0], [-2 * PI, 0, 4]])


class TestFimAssembly:
    def test_ofdm_psk_reproduces_expected_fim_exactly(self, two_target_geometry):
        basis = basis_ofdm(16)
        const = make_psk(16)
        draw = sample_symbols(const, 16, seed=1, trial=0)
        sample = fim(two_target_geometry, basis, draw)
        assert np.array_equal(sample.matrix, two_target_geometry.expected_fim)
        assert np.all(sample.bin_weights == 1.0)

    def test_single_target_frozen_matrix(self):
        geom = single_target_geometry()
        sample = fim(geom, basis_ofdm(2), np.array([1.0 + 0j, 1.0 + 0j]))
        assert_allclose(sample.matrix, FROZEN_FIM, atol=1e-12)

    def test_all_equal_draw_is_singular_under_sc(self):
        scen = Scenario(n=8, delays=[1.5, 4.2], gains=[1.0, 1.0j], noise_var=1.0)
        geom = build_geometry(scen)
        s = np.full(8, 1.0 + 1.0j) / np.sqrt(2)
        sample = fim(geom, basis_sc(8), s)
        expected = np.zeros(8)
        expected[0] = 8 * abs(s[0]) ** 2
        assert_allclose(sample.bin_weights, expected, atol=1e-12)
        assert sample.rcond < 1e-12
        from wavecrb import rcond_estimate

        assert rcond_estimate(sample.matrix) < 1e-12

    def test_dimension_mismatch(self, two_target_geometry):
        with pytest.raises(InvalidDimensionError):
            fim(two_target_geometry, basis_ofdm(8), np.ones(8, dtype=complex))

    def test_weight_sum_matches_symbol_energy(self, two_target_geometry):
        const = make_qam(16)
        for trial, basis in enumerate(
            (basis_sc(16), basis_otfs(4, 4), basis_afdm(16, "1/8", 0.3))
        ):
            draw = sample_symbols(const, 16, seed=5, trial=trial)
            sample = fim(two_target_geometry, basis, draw)
            energy = float(np.sum(np.abs(draw.symbols) ** 2))
            assert np.mean(sample.bin_weights) * 16 == pytest.approx(
                energy, rel=1e-9
            )


class TestFimViaCn:
    def test_unit_weights_give_expected_fim(self, two_target_geometry):
        j = fim_via_cn(two_target_geometry, np.ones(16))
        res = np.linalg.norm(j - two_target_geometry.expected_fim)
        assert res <= 1e-12 * np.linalg.norm(two_target_geometry.expected_fim)

    def test_single_bin_weight(self, two_target_geometry):
        w = np.zeros(16)
        w[0] = 16.0
        assert_allclose(
            fim_via_cn(two_target_geometry, w),
            16.0 * two_target_geometry.bin_fims[0],
            rtol=0,
            atol=0,
        )

    def test_negative_weight_rejected(self, two_target_geometry):
        w = np.ones(16)
        w[3] = -0.1
        with pytest.raises(InvalidParameterError):
            fim_via_cn(two_target_geometry, w)

    def test_matches_fim_on_same_weights(self, two_target_geometry):
        const = make_qam(16)
        basis = basis_sc(16)
        draw = sample_symbols(const, 16, seed=8, trial=0)
        sample = fim(two_target_geometry, basis, draw)
        dual = fim_via_cn(two_target_geometry, sample.bin_weights)
        assert np.linalg.norm(dual - sample.matrix) <= 1e-9 * np.linalg.norm(
            sample.matrix
        )

    def test_dual_route_agreement_random_triples(self):
        rng = np.random.default_rng(0)
        const = make_qam(16)
        count = 0
        for rep in range(100):
            n = int(rng.choice([8, 12, 16, 24, 32]))
            l = int(rng.integers(1, max(2, n // 4)))
            scen = random_scenario(seed=100 + rep, n=n, l=min(l, (n - 1) // 3))
            geom = build_geometry(scen)
            basis = (basis_sc, basis_ofdm)[rep % 2](n)
            draw = sample_symbols(const, n, seed=rep, trial=0)
            sample = fim(geom, basis, draw)
            dual = fim_via_cn(geom, sample.bin_weights)
            assert np.linalg.norm(dual - sample.matrix) <= 1e-9 * np.linalg.norm(
                sample.matrix
            )
            count += 1
        assert count == 100


class TestConditionalCrb:
    def test_frozen_delay_value(self):
        geom = single_target_geometry()
        sample = fim(geom, basis_ofdm(2), np.array([1.0 + 0j, 1.0 + 0j]))
        value = conditional_crb(sample, selection("delay", 1))
        assert value == pytest.approx(1 / PI**2, rel=1e-12)

    def test_frozen_full_value_against_inversion_oracle(self):
        geom = single_target_geometry()
        sample = fim(geom, basis_ofdm(2), np.array([1.0 + 0j, 1.0 + 0j]))
        value = conditional_crb(sample, selection("full", 1))
        oracle = float(np.trace(np.linalg.inv(FROZEN_FIM)))
        assert value == pytest.approx(oracle, rel=1e-12)
        assert value == pytest.approx((4 + 3 * PI**2) / (4 * PI**2), rel=1e-12)

    def test_amplitude_plus_delay_equals_full(self, two_target_geometry):
        const = make_qam(16)
        draw = sample_symbols(const, 16, seed=2, trial=3)
        sample = fim(two_target_geometry, basis_sc(16), draw)
        full = conditional_crb(sample, selection("full", 2))
        parts = conditional_crb(sample, selection("delay", 2)) + conditional_crb(
            sample, selection("amplitude", 2)
        )
        assert full == pytest.approx(parts, rel=1e-12)

    def test_singular_draw_raises(self):
        scen = Scenario(n=8, delays=[1.5, 4.2], gains=[1.0, 1.0j], noise_var=1.0)
        geom = build_geometry(scen)
        s = np.full(8, 1.0 + 0j)
        sample = fim(geom, basis_sc(8), s)
        with pytest.raises(SingularFimError):
            conditional_crb(sample, selection("delay", 2))


class TestResolvent:
    def test_ofdm_psk_all_terms_zero(self, two_target_geometry, delay_selection_2):
        const = make_psk(16)
        draw = sample_symbols(const, 16, seed=4, trial=0)
        sample = fim(two_target_geometry, basis_ofdm(16), draw)
        terms = resolvent(two_target_geometry, sample, delay_selection_2)
        assert terms.fluctuation_norm == 0.0
        assert terms.first_order == 0.0
        assert terms.second_order == 0.0
        assert terms.third_order == 0.0

    def test_telescoping_identity(self, delay_selection_2):
        # Use a block length at which the fluctuation norm is typically
        # below one, so the expansion converges on most draws.
        const = make_qam(16)
        scen = random_scenario(seed=5, n=128, l=2)
        geom = build_geometry(scen)
        floor = jensen_bound_local(geom, delay_selection_2)
        checked = 0
        for trial in range(10):
            draw = sample_symbols(const, 128, seed=6, trial=trial)
            sample = fim(geom, basis_sc(128), draw)
            terms = resolvent(geom, sample, delay_selection_2)
            if terms.third_order is None:
                continue
            direct = conditional_crb(sample, delay_selection_2)
            recon = floor - terms.first_order + terms.second_order - terms.third_order
            assert abs(recon - direct) <= 1e-8 * max(abs(direct), abs(recon))
            checked += 1
        assert checked >= 5

    def test_second_order_matches_norm_formula(
        self, two_target_geometry, delay_selection_2
    ):
        geom = two_target_geometry
        const = make_qam(16)
        draw = sample_symbols(const, 16, seed=9, trial=1)
        sample = fim(geom, basis_sc(16), draw)
        terms = resolvent(geom, sample, delay_selection_2)
        jbar_inv = np.linalg.inv(geom.expected_fim)
        half = inv_sqrt_psd(geom.expected_fim)
        z = jbar_inv @ (sample.matrix - geom.expected_fim)
        norm_form = np.linalg.norm(z[delay_selection_2.indices, :] @ half) ** 2
        assert terms.second_order == pytest.approx(norm_form, rel=1e-10)
        assert terms.second_order >= 0.0


def jensen_bound_local(geom, sel):
    inv = np.linalg.inv(geom.expected_fim)
    return float(np.sum(np.diag(inv)[sel.indices]))


def test_mean_fim_matches_expected_within_noise():
    from wavecrb.montecarlo import assemble_fims, bin_weight_block, symbol_chunks

    scen = Scenario(n=8, delays=[1.5, 4.7], gains=[1.0, -1.0j], noise_var=1.0)
    geom = build_geometry(scen)
    basis = basis_sc(8)
    const = make_qam(16)
    trials = 100_000
    flat = geom.bin_fims.reshape(8, -1)
    acc = np.zeros((6, 6))
    acc2 = np.zeros((6, 6))
    for _, symbols in symbol_chunks(const, 8, 11, trials):
        jstack = assemble_fims(bin_weight_block(symbols, basis), flat)
        acc += jstack.sum(axis=0)
        acc2 += (jstack**2).sum(axis=0)
    mean = acc / trials
    var = acc2 / trials - mean**2
    stderr = np.sqrt(np.clip(var, 0, None) / trials)
    scale = np.linalg.norm(geom.expected_fim)
    dev = np.abs(mean - geom.expected_fim)
    assert np.all(dev <= 5 * stderr + 1e-9 * scale)
