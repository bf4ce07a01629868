import math

import numpy as np
import pytest
from scipy import integrate, stats

from ricewaves import rice1d
from ricewaves.errors import DomainError
from ricewaves.spectral_models import (SpecularGeometry, Spectrum1D,
                                       builtin_covariance_gaussian, builtin_covariance_wendland,
                                       gaussian_abs_moment)

SPEC = Spectrum1D(1.0, 1.0, 3.0)


def test_intensity_reference_value():
    g = SpecularGeometry.from_k(0.5)
    want = gaussian_abs_moment(0.5, math.sqrt(3.0)) * stats.norm.pdf(0.5)
    assert rice1d.sp2_intensity(SPEC, g, 1.0) == pytest.approx(want, rel=1e-14)
    # G(0.01, sqrt 3) phi(0): G = sqrt(6/pi) (1 + 0.01^2 / 6 + ...) = 1.3819996
    g = SpecularGeometry.from_k(0.01)
    assert gaussian_abs_moment(0.01, math.sqrt(3.0)) == pytest.approx(1.3819996, abs=5e-7)
    assert rice1d.sp2_intensity(SPEC, g, 0.0) == pytest.approx(0.5513380, abs=5e-7)


def test_intensity_even_and_decaying():
    g = SpecularGeometry.from_k(0.1)
    x = np.array([3.0, 40.0, 400.0])
    assert np.allclose(rice1d.sp2_intensity(SPEC, g, x), rice1d.sp2_intensity(SPEC, g, -x))
    assert rice1d.sp2_intensity(SPEC, g, 400.0) < 1e-300 + 1e-200


def test_total_small_k_series():
    k = 1e-3
    total = rice1d.sp2_total_expectation(SPEC, SpecularGeometry.from_k(k))
    lead = math.sqrt(2 * SPEC.lambda4 / math.pi) / k
    assert abs(total / lead - (1 + k * k / (2 * SPEC.lambda4))) < 1e-11


def test_total_is_integral_of_intensity():
    g = SpecularGeometry.from_k(0.03)
    total = rice1d.sp2_total_expectation(SPEC, g)
    v, _ = integrate.quad(lambda x: rice1d.sp2_intensity(SPEC, g, x), -np.inf, np.inf,
                          points=None, epsabs=0, epsrel=1e-12, limit=500)
    assert total == pytest.approx(v, rel=1e-9)
    assert rice1d.sp2_expectation_interval(SPEC, g, -math.inf, math.inf) == pytest.approx(
        total, rel=1e-10)


def test_total_requires_positive_k():
    with pytest.raises(DomainError):
        rice1d.sp2_total_expectation(SPEC, SpecularGeometry(k=0.0))


def _naive_m1(x, w, h1, h2):
    a, b = h1 - w, h2 - w
    return (x * x - a * b + math.sqrt((x * x + a * a) * (x * x + b * b))) / (x * (a + b))


@pytest.mark.parametrize("x,w", [(3.0, 0.5), (-20.0, 2.0), (150.0, -1.0)])
def test_specular_slope_matches_textbook_form(x, w):
    h1, h2 = 90.0, 110.0
    m1, dx, dw = rice1d.specular_slope(x, w, h1, h2)
    assert m1 == pytest.approx(_naive_m1(x, w, h1, h2), rel=1e-12)
    eps = 1e-5
    fdx = (_naive_m1(x + eps, w, h1, h2) - _naive_m1(x - eps, w, h1, h2)) / (2 * eps)
    fdw = (_naive_m1(x, w + eps, h1, h2) - _naive_m1(x, w - eps, h1, h2)) / (2 * eps)
    assert dx == pytest.approx(fdx, rel=1e-6)
    assert dw == pytest.approx(fdw, rel=1e-6, abs=1e-12)


def test_specular_slope_at_origin_is_finite():
    m1, dx, dw = rice1d.specular_slope(0.0, 0.3, 100.0, 300.0)
    assert m1 == 0.0
    assert math.isfinite(dx) and math.isfinite(dw)
    # d m1/dx at x = 0 equals (1/a + 1/b) / 2 with a, b measured from w.
    assert dx == pytest.approx(0.5 * (1 / 99.7 + 1 / 299.7), rel=1e-12)


def test_exact_intensity_matches_independent_quadrature():
    """Reference: integrate over w with the textbook slope and numeric partials."""
    h1, h2, x = 90.0, 110.0, 40.0
    g = SpecularGeometry.from_heights(h1, h2)
    l2, l4 = SPEC.lambda2, SPEC.lambda4

    def integrand(w):
        eps = 1e-5
        m = _naive_m1(x, w, h1, h2)
        mx = (_naive_m1(x + eps, w, h1, h2) - _naive_m1(x - eps, w, h1, h2)) / (2 * eps)
        mw = (_naive_m1(x, w + eps, h1, h2) - _naive_m1(x, w - eps, h1, h2)) / (2 * eps)
        # Given W = w and W' = m: W'' ~ N(-lambda2 w, lambda4 - lambda2^2).
        mean = -l2 * w - mx - mw * m
        return (stats.norm.pdf(w) * stats.norm.pdf(m / math.sqrt(l2)) / math.sqrt(l2)
                * gaussian_abs_moment(mean, math.sqrt(l4 - l2 * l2)))

    ref, _ = integrate.quad(integrand, -12, 12, epsabs=0, epsrel=1e-11, limit=200)
    assert rice1d.sp1_exact_intensity(SPEC, g, x) == pytest.approx(ref, rel=1e-7)


def test_exact_tends_to_approximation_for_high_source():
    g = SpecularGeometry.from_heights(5000.0, 5000.0)
    exact = rice1d.sp1_exact_expectation(SPEC, g)
    approx = rice1d.sp2_total_expectation(SPEC, g)
    assert exact == pytest.approx(approx, rel=1e-5)


def test_exact_expectation_on_interval_is_additive():
    g = SpecularGeometry.from_heights(90.0, 110.0)
    whole = rice1d.sp1_exact_expectation(SPEC, g, -200.0, 200.0)
    left = rice1d.sp1_exact_expectation(SPEC, g, -200.0, 0.0)
    right = rice1d.sp1_exact_expectation(SPEC, g, 0.0, 200.0)
    assert whole == pytest.approx(left + right, rel=1e-9)


def test_exact_needs_heights():
    with pytest.raises(DomainError):
        rice1d.sp1_exact_expectation(SPEC, SpecularGeometry.from_k(0.01))


def test_h_bivariate_abs_values():
    assert rice1d.h_bivariate_abs(0.0) == pytest.approx(2 / math.pi, abs=1e-15)
    assert rice1d.h_bivariate_abs(1.0) == pytest.approx(1.0, abs=1e-15)
    assert rice1d.h_bivariate_abs(-1.0) == pytest.approx(1.0, abs=1e-15)
    assert rice1d.h_bivariate_abs(0.5) == pytest.approx(0.7179955621, abs=1e-9)
    with pytest.raises(DomainError):
        rice1d.h_bivariate_abs(1.1)


def test_h_bivariate_abs_by_quadrature():
    rho = 0.3
    c = 1.0 / (2 * math.pi * math.sqrt(1 - rho * rho))

    def dens(y, x):
        return abs(x * y) * c * math.exp(-(x * x - 2 * rho * x * y + y * y) / (2 * (1 - rho * rho)))

    v, _ = integrate.dblquad(dens, -9, 9, -9, 9, epsabs=1e-10)
    assert rice1d.h_bivariate_abs(rho) == pytest.approx(v, rel=1e-6)


@pytest.fixture(scope="module")
def wendland_params():
    cov = builtin_covariance_wendland(1.0, 1.0, 3)
    return cov, rice1d.variance_params(cov)


def test_variance_params_structure(wendland_params):
    cov, p = wendland_params
    assert p.lambda2 == pytest.approx(18.0)
    assert p.lambda4 == pytest.approx(1008.0)
    assert p.theta > 0
    z = np.linspace(0.01, 0.99, 50)
    assert np.all(np.abs(p.rho(z)) <= 1 + 1e-9)
    assert np.all(p.sigma2(z) > 0)
    assert rice1d.sp2_variance_asymptotic(p, 0.1) == pytest.approx(p.theta / 0.1)
    assert rice1d.coefficient_of_variation(p, 0.05) * 2 == pytest.approx(
        rice1d.coefficient_of_variation(p, 0.2))
    assert rice1d.coefficient_of_variation_leading(p, 0.1) == pytest.approx(
        math.sqrt(p.theta / 0.1) / rice1d.sp2_leading_mean(
            Spectrum1D(1.0, 18.0, 1008.0), 0.1), rel=1e-12)


def test_mixing_variant_agrees_on_compact_support(wendland_params):
    cov, p = wendland_params
    assert rice1d.theta_mixing_variant(cov) == pytest.approx(p.theta, rel=1e-6)


def test_theta_scales_with_range():
    # With W_delta(x) = W(x / delta), W_delta'(x) = k x becomes W'(u) = k delta^2 u,
    # so the count at k for range delta is the count at k delta^2 for range 1.
    t1 = rice1d.variance_params(builtin_covariance_wendland(1.0)).theta
    t2 = rice1d.variance_params(builtin_covariance_wendland(2.0)).theta
    assert t2 == pytest.approx(t1 / 4.0, rel=1e-6)


def test_mean_shift_variant_exceeds_theta(wendland_params):
    cov, p = wendland_params
    assert rice1d.theta_with_mean_shift(cov) > p.theta


def test_variance_needs_finite_range():
    with pytest.raises(DomainError):
        rice1d.variance_params(builtin_covariance_gaussian(1.0))


def test_derivative_zero_rate():
    assert rice1d.derivative_zero_rate(SPEC) == pytest.approx(math.sqrt(3) / math.pi)
