import numpy as np
import pytest
from numpy.testing import assert_allclose

from wavecrb import (
    Constellation,
    UnsupportedConstellationError,
    by_name,
    kurtosis,
    make_psk,
    make_qam,
    sample_symbols,
    validate_assumptions,
)
from wavecrb.constellation import GAUSSIAN_KURTOSIS

# Exact fourth moments of the square grids (rational arithmetic by hand).
QAM_KURTOSIS_EXACT = {16: 1.32, 64: 2436 / 1764, 256: 40324 / 28900}
# Reference values for the cross layouts, quoted to their published precision.
QAM_KURTOSIS_REFERENCE = {128: 1.3427, 512: 1.3506, 1024: 1.3988, 2048: 1.3525}


class TestPsk:
    def test_qpsk_points(self):
        c = make_psk(4)
        assert sorted(np.round(c.points, 12), key=lambda z: (z.real, z.imag)) == [
            (-1 - 0j),
            -1j,
            1j,
            (1 + 0j),
        ]
        assert c.kurtosis == 1.0

    def test_sixteen_psk_unit_circle(self):
        c = make_psk(16)
        assert c.order == 16
        mag2 = c.points.real**2 + c.points.imag**2
        assert np.all(mag2 == 1.0)  # exact by construction
        assert c.power == 1.0

    def test_points_close_to_roots_of_unity(self):
        c = make_psk(16)
        ideal = np.exp(2j * np.pi * np.arange(16) / 16)
        assert np.max(np.abs(c.points - ideal)) < 1e-14

    def test_odd_or_small_orders_rejected(self):
        for order in (2, 3, 5, 7):
            with pytest.raises(UnsupportedConstellationError):
                make_psk(order)

    def test_negation_closure_exact(self):
        c = make_psk(8)
        point_set = {complex(p) for p in c.points}
        assert {-p for p in point_set} == point_set


class TestQam:
    @pytest.mark.parametrize("order,expected", sorted(QAM_KURTOSIS_EXACT.items()))
    def test_square_kurtosis_exact(self, order, expected):
        assert make_qam(order).kurtosis == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("order,expected", sorted(QAM_KURTOSIS_REFERENCE.items()))
    def test_reference_kurtosis(self, order, expected):
        assert make_qam(order).kurtosis == pytest.approx(expected, abs=1e-3)

    def test_unit_power(self):
        for order in (16, 64, 128, 256):
            assert make_qam(order).power == pytest.approx(1.0, abs=1e-12)

    def test_unsupported_orders(self):
        for order in (4, 8, 32, 200, 4096):
            with pytest.raises(UnsupportedConstellationError):
                make_qam(order)

    def test_cross_point_count(self):
        assert make_qam(128).order == 128
        assert make_qam(512).order == 512


class TestMoments:
    def test_kurtosis_recompute_matches_cache(self):
        for c in (make_psk(16), make_qam(64)):
            assert kurtosis(c) == pytest.approx(c.kurtosis, abs=1e-14)

    def test_gaussian_reference_constant(self):
        assert GAUSSIAN_KURTOSIS == 2.0

    def test_all_supported_sub_gaussian(self):
        for name in ("psk4", "psk16", "qam16", "qam64", "qam256", "qam1024"):
            c = by_name(name)
            assert 1.0 <= c.kurtosis < 2.0


class TestValidateAssumptions:
    def test_qpsk_all_pass(self):
        report = validate_assumptions(make_psk(4))
        assert report.all_ok and report.sub_gaussian

    def test_qam16_all_pass(self):
        report = validate_assumptions(make_qam(16))
        assert report.all_ok
        assert report.sub_gaussian and report.kurtosis == pytest.approx(1.32)

    def test_asymmetric_alphabet_fails_ring_check(self):
        pts = np.array([1.0 + 0j, -1.0 + 0j, 0.5 + 0j])
        bad = Constellation(name="bad", points=pts, kurtosis=1.0, power=0.75)
        report = validate_assumptions(bad)
        assert not report.central_symmetry_ok


class TestByName:
    def test_round_trip(self):
        assert by_name("psk16").name == "psk16"
        assert by_name("qam64").name == "qam64"

    def test_unknown_rejected(self):
        for name in ("pam4", "qam", "psk", "16qam"):
            with pytest.raises(UnsupportedConstellationError):
                by_name(name)


class TestSampling:
    def test_deterministic_per_seed_trial(self):
        c = make_qam(16)
        a = sample_symbols(c, 32, seed=9, trial=4)
        b = sample_symbols(c, 32, seed=9, trial=4)
        assert np.array_equal(a.symbols, b.symbols)
        assert (a.seed, a.trial) == (9, 4)

    def test_distinct_trials_differ(self):
        c = make_qam(16)
        a = sample_symbols(c, 64, seed=9, trial=0)
        b = sample_symbols(c, 64, seed=9, trial=1)
        assert not np.array_equal(a.symbols, b.symbols)

    def test_membership(self):
        c = make_psk(8)
        draw = sample_symbols(c, 100, seed=1, trial=0)
        pts = set(map(complex, c.points))
        assert all(complex(s) in pts for s in draw.symbols)

    def test_qpsk_power_law_of_large_numbers(self):
        c = make_psk(4)
        draw = sample_symbols(c, 1_000_000, seed=2, trial=0)
        power = np.mean(np.abs(draw.symbols) ** 2)
        assert abs(power - 1.0) <= 0.005

    def test_qam16_empirical_kurtosis(self):
        c = make_qam(16)
        draw = sample_symbols(c, 1_000_000, seed=3, trial=0)
        mag2 = np.abs(draw.symbols) ** 2
        emp = np.mean(mag2**2) / np.mean(mag2) ** 2
        assert abs(emp - 1.32) <= 0.01

    def test_empirical_moments_five_sigma(self):
        c = make_qam(64)
        n = 250_000
        draw = sample_symbols(c, n, seed=4, trial=0)
        mag2 = np.abs(draw.symbols) ** 2
        stderr = np.std(mag2) / np.sqrt(n)
        assert abs(np.mean(mag2) - 1.0) <= 5 * stderr
