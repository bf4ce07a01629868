import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from ricewaves.errors import DomainError, QuadratureError
from ricewaves.numerics import (DEFAULT_QUAD, QuadratureSpec, eig_sym3, elliptic_e, elliptic_k,
                                gauss_legendre, integrate_adaptive, std_normal_pdf_cdf,
                                sym_sqrt3)


@pytest.mark.parametrize("policy", ["gaussian", "power"])
def test_gaussian_integral_over_line(policy):
    spec = DEFAULT_QUAD.with_policy(policy)
    v, err = integrate_adaptive(lambda x: math.exp(-x * x), -math.inf, math.inf, spec)
    assert v == pytest.approx(math.sqrt(math.pi), rel=1e-10)
    assert err < 1e-6


def test_power_tail_half_line():
    v, _ = integrate_adaptive(lambda x: 1.0 / (1.0 + x * x), 0.0, math.inf,
                              DEFAULT_QUAD.with_policy("power"))
    assert v == pytest.approx(math.pi / 2, rel=1e-10)


def test_scaled_gaussian_with_center():
    # N(5, 0.01^2) density integrates to one when the scale and centre are given.
    s = 0.01

    def f(x):
        return math.exp(-0.5 * ((x - 5.0) / s) ** 2) / (s * math.sqrt(2 * math.pi))

    v, _ = integrate_adaptive(f, -math.inf, math.inf, DEFAULT_QUAD, scale=s, center=5.0)
    assert v == pytest.approx(1.0, rel=1e-9)


def test_finite_interval_polynomial():
    v, _ = integrate_adaptive(lambda x: x ** 3 - 2 * x, 0.0, 2.0)
    assert v == pytest.approx(0.0, abs=1e-12)


def test_divergent_integral_raises():
    with pytest.raises(QuadratureError) as info:
        integrate_adaptive(lambda x: 1.0 / x, 0.0, 1.0, QuadratureSpec(max_subdivisions=50))
    assert math.isfinite(info.value.err_est) or info.value.err_est is None


def test_bad_policy_rejected():
    with pytest.raises(DomainError):
        QuadratureSpec(truncation_policy="none")


def test_gauss_legendre_exactness():
    x, w = gauss_legendre(10)
    # Exact for polynomials of degree 19.
    assert np.sum(w * x ** 18) == pytest.approx(2.0 / 19.0, rel=1e-13)
    assert np.sum(w) == pytest.approx(2.0, rel=1e-14)


def test_normal_pdf_cdf_values():
    phi, Phi = std_normal_pdf_cdf(1.0)
    assert Phi == pytest.approx(0.8413447460685429, abs=1e-12)
    assert phi == pytest.approx(math.exp(-0.5) / math.sqrt(2 * math.pi), rel=1e-14)
    _, tail = std_normal_pdf_cdf(-10.0)
    assert tail == pytest.approx(7.619853024160527e-24, rel=1e-10)


def test_elliptic_values():
    assert elliptic_k(0.0) == pytest.approx(math.pi / 2, rel=1e-15)
    assert elliptic_e(0.0) == pytest.approx(math.pi / 2, rel=1e-15)
    assert elliptic_k(0.25) == pytest.approx(1.685750354812596, rel=1e-13)
    for m in (0.1, 0.5, 0.9, 0.99):
        k_def, _ = integrate.quad(lambda t: (1 - m * math.sin(t) ** 2) ** -0.5, 0, math.pi / 2,
                                  epsabs=0, epsrel=1e-13)
        e_def, _ = integrate.quad(lambda t: (1 - m * math.sin(t) ** 2) ** 0.5, 0, math.pi / 2,
                                  epsabs=0, epsrel=1e-13)
        assert elliptic_k(m) == pytest.approx(k_def, rel=1e-12)
        assert elliptic_e(m) == pytest.approx(e_def, rel=1e-12)


def test_legendre_relation():
    # E(m) K(1-m) + E(1-m) K(m) - K(m) K(1-m) = pi / 2
    m = 0.3
    lhs = (elliptic_e(m) * elliptic_k(1 - m) + elliptic_e(1 - m) * elliptic_k(m)
           - elliptic_k(m) * elliptic_k(1 - m))
    assert lhs == pytest.approx(math.pi / 2, rel=1e-13)


@pytest.mark.parametrize("m", [-0.1, 1.0, 1.5, float("nan")])
def test_elliptic_domain(m):
    with pytest.raises(DomainError):
        elliptic_k(m)


sym3 = st.lists(st.floats(-10, 10, allow_nan=False), min_size=6, max_size=6)


def _sym(v):
    a, b, c, d, e, f = v
    return np.array([[a, d, e], [d, b, f], [e, f, c]])


@settings(max_examples=60, deadline=None)
@given(sym3)
def test_eig_sym3_reconstructs(v):
    M = _sym(v)
    lam, P = eig_sym3(M)
    assert np.all(np.diff(lam) <= 1e-12)
    assert np.allclose(P.T @ P, np.eye(3), atol=1e-10)
    assert np.allclose(P @ np.diag(lam) @ P.T, M, atol=1e-9 * max(1.0, np.abs(M).max()))


def test_eig_sym3_repeated_eigenvalues():
    lam, P = eig_sym3(np.eye(3) * 2.0)
    assert np.allclose(lam, 2.0)
    assert np.allclose(P @ P.T, np.eye(3))


@settings(max_examples=60, deadline=None)
@given(sym3)
def test_sym_sqrt3_squares_back(v):
    A = _sym(v)
    M = A @ A.T
    R = sym_sqrt3(M, tol=1e-9 * max(1.0, np.abs(M).max()))
    assert np.allclose(R, R.T)
    assert np.allclose(R @ R, M, atol=1e-7 * max(1.0, np.abs(M).max()))


def test_sym_sqrt3_rejects_indefinite():
    with pytest.raises(DomainError):
        sym_sqrt3(np.diag([1.0, -0.5, 2.0]))


def test_sym_sqrt3_clamps_roundoff():
    M = np.diag([1.0, -1e-14, 4.0])
    assert np.allclose(sym_sqrt3(M), np.diag([1.0, 0.0, 2.0]))
