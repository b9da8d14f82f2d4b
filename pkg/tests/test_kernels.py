import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from rbftopo import kernels
from rbftopo.errors import InvalidArgumentError, InvalidParameterError
from rbftopo.kernels import HalfIntegerOrder, KernelFamily, KernelSpec

FAMILIES = list(KernelFamily)
MATERN = [KernelFamily.MATERN12, KernelFamily.MATERN32, KernelFamily.MATERN52]


def spec(family, locality=1.0):
    return KernelSpec(family, locality)


class TestKernelSpec:
    def test_accepts_strings(self):
        s = KernelSpec("matern32", 2)
        assert s.family is KernelFamily.MATERN32
        assert s.locality == 2.0

    @pytest.mark.parametrize("locality", [0.0, -1.0, float("nan"), float("inf")])
    def test_rejects_bad_locality(self, locality):
        with pytest.raises(InvalidParameterError):
            KernelSpec("gaussian", locality)

    def test_rejects_unknown_family(self):
        with pytest.raises(InvalidParameterError):
            KernelSpec("tps", 1.0)

    def test_exactly_six_families(self):
        assert len(KernelFamily) == 6


class TestEvaluate:
    @pytest.mark.parametrize("family", FAMILIES)
    @pytest.mark.parametrize("locality", [1e-3, 1.0, 250.0])
    def test_normalized_at_origin(self, family, locality):
        assert kernels.evaluate(spec(family, locality), 0.0) == 1.0

    def test_wendland_support_boundary(self):
        assert kernels.evaluate(spec("wendland31"), 1.0) == 0.0

    def test_matern32_direct_substitution(self):
        assert kernels.evaluate(spec("matern32"), 1.0) == pytest.approx(2 / math.e, rel=1e-15)
        assert kernels.evaluate(spec("matern32"), 1.0) == pytest.approx(0.7357589, abs=1e-7)

    def test_wu_direct_substitution(self):
        assert kernels.evaluate(spec("wu12", 2.0), 1.0) == pytest.approx(0.240234375, rel=1e-15)

    def test_gaussian_uses_sigma_squared(self):
        assert kernels.evaluate(spec("gaussian", 2.0), 1.0) == pytest.approx(math.exp(-0.25))

    def test_matern52_value(self):
        assert kernels.evaluate(spec("matern52"), 3.0) == pytest.approx(7 * math.exp(-3))

    @pytest.mark.parametrize("family", [KernelFamily.WENDLAND31, KernelFamily.WU12])
    def test_compact_kernels_vanish_exactly(self, family):
        r = np.linspace(2.0, 50.0, 1000)
        assert np.all(kernels.evaluate(spec(family, 2.0), r) == 0.0)
        # no negative leakage just past the boundary
        assert kernels.evaluate(spec(family, 2.0), np.nextafter(2.0, 3.0)) == 0.0

    @pytest.mark.parametrize("family", [KernelFamily.GAUSSIAN] + MATERN)
    def test_global_kernels_positive(self, family):
        r = np.linspace(0.0, 20.0, 1000)
        assert np.all(kernels.evaluate(spec(family), r) > 0)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_monotone_decay(self, family):
        c = 0.7
        r = np.linspace(0.0, 5 * c, 1000)
        v = kernels.evaluate(spec(family, c), r)
        assert np.all(np.diff(v) <= 0)
        assert np.all((v >= 0) & (v <= 1))

    def test_negative_distance_rejected(self):
        with pytest.raises(InvalidArgumentError):
            kernels.evaluate(spec("gaussian"), -0.1)

    def test_vectorized_shape(self):
        r = np.ones((3, 4))
        assert kernels.evaluate(spec("matern12"), r).shape == (3, 4)


def central_difference(s, r, h):
    return (kernels.evaluate(s, r + h) - kernels.evaluate(s, r - h)) / (2 * h)


class TestRadialDerivative:
    def test_matern32_at_c(self):
        assert kernels.radial_derivative(spec("matern32"), 1.0) == pytest.approx(-1 / math.e)

    def test_wendland_boundary(self):
        assert kernels.radial_derivative(spec("wendland31"), 1.0) == 0.0

    def test_gaussian_minimizer_value(self):
        r = 1 / math.sqrt(2)
        expected = -math.sqrt(2) * math.exp(-0.5)
        assert kernels.radial_derivative(spec("gaussian"), r) == pytest.approx(expected)
        # finite-difference oracle
        assert central_difference(spec("gaussian"), r, 1e-6) == pytest.approx(expected, abs=1e-8)

    def test_matern52_uses_dimensionally_consistent_form(self):
        c, r = 2.0, 1.3
        expected = -(r / (3 * c**2) + r**2 / (3 * c**3)) * math.exp(-r / c)
        assert kernels.radial_derivative(spec("matern52", c), r) == pytest.approx(expected)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_radial_limit_at_origin(self, family):
        c = 0.5
        d0 = kernels.radial_derivative(spec(family, c), 0.0)
        if family is KernelFamily.MATERN12:
            assert d0 == -1 / c
            assert not kernels.is_smooth_at_origin(family)
        else:
            assert d0 == 0.0
            assert kernels.is_smooth_at_origin(family)

    @pytest.mark.parametrize("family", FAMILIES)
    @pytest.mark.parametrize("locality", [0.3, 1.0, 40.0])
    def test_matches_finite_differences(self, family, locality):
        s = spec(family, locality)
        h = 1e-6 * locality
        r = np.linspace(0.01 * locality, 3 * locality, 100)
        if family.compact:
            r = r[np.abs(r - locality) > 2 * h]
        analytic = kernels.radial_derivative(s, r)
        fd = central_difference(s, r, h)
        assert np.all(np.abs(analytic - fd) <= 1e-6 * np.maximum(1.0, np.abs(analytic)))


@given(family=st.sampled_from(FAMILIES),
       c=st.floats(1e-3, 1e3),
       r=st.floats(0.0, 1e3))
def test_scale_covariance(family, c, r):
    scaled = kernels.evaluate(spec(family, c), r)
    unit = kernels.evaluate(spec(family, 1.0), r / c)
    assert scaled == pytest.approx(unit, rel=1e-12, abs=1e-300)
    d_scaled = kernels.radial_derivative(spec(family, c), r)
    d_unit = kernels.radial_derivative(spec(family, 1.0), r / c) / c
    assert d_scaled == pytest.approx(d_unit, rel=1e-12, abs=1e-300)


class TestUnitDerivativeMin:
    def test_matern32(self):
        m = kernels.unit_derivative_min("matern32")
        assert m.r_star == pytest.approx(1.0, abs=1e-6)
        assert m.value == pytest.approx(-1 / math.e, rel=1e-12)
        assert not m.at_limit

    def test_matern52(self):
        m = kernels.unit_derivative_min("matern52")
        golden = (math.sqrt(5) + 1) / 2
        assert m.r_star == pytest.approx(golden, abs=1e-6)
        # -(s + s^2)/3 e^-s at the golden ratio, where s + s^2 = s^3 = 2 + sqrt 5
        assert m.value == pytest.approx(-(2 + math.sqrt(5)) / 3 * math.exp(-golden), rel=1e-12)
        assert m.value == pytest.approx(-0.28, abs=5e-5)

    def test_wendland(self):
        m = kernels.unit_derivative_min("wendland31")
        assert m.r_star == pytest.approx(0.25, abs=1e-6)
        assert m.value == pytest.approx(-135 / 64, rel=1e-12)

    def test_gaussian(self):
        m = kernels.unit_derivative_min("gaussian")
        assert m.r_star == pytest.approx(1 / math.sqrt(2), abs=1e-6)
        assert m.value == pytest.approx(-math.sqrt(2) * math.exp(-0.5), rel=1e-12)

    def test_wu_against_dense_scan(self):
        m = kernels.unit_derivative_min("wu12")
        s = np.linspace(0, 1, 2_000_001)
        dense = kernels.radial_derivative(spec("wu12"), s)
        assert m.value <= dense.min() + 1e-12
        assert m.value == pytest.approx(dense.min(), rel=1e-10)

    def test_matern12_is_a_limit(self):
        m = kernels.unit_derivative_min("matern12")
        assert m == (0.0, -1.0, True)


def test_golden_section_on_parabola():
    x, fx = kernels.golden_section(lambda t: (t - 0.3) ** 2 + 2, -1.0, 2.0, tol=1e-12)
    assert x == pytest.approx(0.3, abs=1e-7)
    assert fx == pytest.approx(2.0, abs=1e-14)


class TestBessel:
    def test_k_half_at_one(self):
        assert kernels.bessel_k_half(1, 1.0) == pytest.approx(math.sqrt(math.pi / 2) / math.e)
        assert kernels.bessel_k_half(1, 1.0) == pytest.approx(0.4610685, abs=1e-7)

    def test_k_three_halves_at_one(self):
        assert kernels.bessel_k_half(3, 1.0) == pytest.approx(0.9221370, abs=1e-7)

    def test_decays(self):
        assert kernels.bessel_k_half(5, 700.0) < 1e-300

    @pytest.mark.parametrize("order", list(HalfIntegerOrder))
    def test_against_scipy(self, order):
        z = np.logspace(-4, 2, 200)
        ours = kernels.bessel_k_half(order, z)
        ref = scipy.special.kv(order.nu, z)
        np.testing.assert_allclose(ours, ref, rtol=1e-12)

    @pytest.mark.parametrize("z", [0.0, -1.0])
    def test_rejects_nonpositive(self, z):
        with pytest.raises(InvalidArgumentError):
            kernels.bessel_k_half(1, z)

    def test_rejects_other_orders(self):
        with pytest.raises(InvalidArgumentError):
            kernels.bessel_k_half(7, 1.0)

    def test_matern_via_bessel_examples(self):
        assert kernels.matern_via_bessel(3, 1.0, 1.0) == pytest.approx(2 / math.e, rel=1e-14)
        assert kernels.matern_via_bessel(5, 1.0, 3.0) == pytest.approx(7 * math.exp(-3), rel=1e-14)
        assert kernels.matern_via_bessel(5, 1.0, 3.0) == pytest.approx(0.3485095, abs=1e-7)
        for r, c in [(0.1, 1.0), (2.0, 0.5), (30.0, 7.0)]:
            assert kernels.matern_via_bessel(1, c, r) == pytest.approx(math.exp(-r / c), rel=1e-14)

    def test_matern_via_bessel_rejects_origin(self):
        with pytest.raises(InvalidArgumentError):
            kernels.matern_via_bessel(1, 1.0, 0.0)

    @pytest.mark.parametrize("family", MATERN)
    def test_oracle_equivalence(self, family):
        c = 0.37
        r = c * np.logspace(-6, np.log10(20), 200)
        closed = kernels.evaluate(spec(family, c), r)
        bessel = kernels.matern_via_bessel(kernels.MATERN_ORDERS[family], c, r)
        np.testing.assert_allclose(bessel, closed, rtol=1e-12)


@settings(max_examples=50)
@given(family=st.sampled_from(FAMILIES), s=st.floats(0.0, 3.0))
def test_mpmath_path_matches_numpy(family, s):
    import mpmath
    with mpmath.workdps(30):
        v = kernels.unit_profile(family, mpmath.mpf(s))
        d = kernels.unit_profile_derivative(family, mpmath.mpf(s))
    assert float(v) == pytest.approx(float(kernels.unit_profile(family, np.float64(s))),
                                     rel=1e-14, abs=1e-300)
    assert float(d) == pytest.approx(float(kernels.unit_profile_derivative(family, np.float64(s))),
                                     rel=1e-13, abs=1e-300)
