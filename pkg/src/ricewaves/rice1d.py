"""Specular points of a 1D Gaussian surface: expectations and variance.

A light source at height ``h1`` and an observer at height ``h2`` look at the
random curve ``y = W(x)``. Specular points are the abscissae where the curve
reflects the source into the observer. For large heights they are the zeros
of ``W'(x) - k x`` with ``k = (1/h1 + 1/h2) / 2``; this module gives the
expected number of them, the expectation under the exact reflection
condition, and the asymptotic variance of the count as ``k -> 0``.

The exact condition reads ``W'(x) = m1(x, W(x))`` with

    m1(x, w) = [x^2 - a b + sqrt((x^2 + a^2)(x^2 + b^2))] / (x (a + b)),

``a = h1 - w`` and ``b = h2 - w``. Multiplying through by ``sqrt(...) + a b``
removes the 0/0 at ``x = 0``:

    m1(x, w) = x (1 + (x^2 + a^2 + b^2) / (R + a b)) / (a + b),

with ``R = sqrt((x^2 + a^2)(x^2 + b^2))``. This form is used everywhere and
its partial derivatives are hard-coded below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegeneracyError, DomainError
from .numerics import (
    DEFAULT_QUAD,
    SQRT_2_OVER_PI,
    QuadratureSpec,
    gauss_legendre,
    integrate_adaptive,
    std_normal_pdf,
)
from .spectral_models import (
    CovarianceModel1D,
    SpecularGeometry,
    Spectrum1D,
    gaussian_abs_moment,
    moments_from_covariance,
)

# Half-width of the x-range, in units of sqrt(lambda2)/k, for totals over R.
TOTAL_X_HALFWIDTH = 10.0
# Half-width of the w-range in standard deviations of W.
W_HALFWIDTH = 10.0
# Gauss-Legendre nodes for the inner w-integral.
DEFAULT_W_NODES = 200
# Relative guard around z = 0 in the variance integrands.
Z_GUARD = 1e-4


# ---------------------------------------------------------------------------
# Linearised (large-height) specular points
# ---------------------------------------------------------------------------

def sp2_intensity(spec: Spectrum1D, geom: SpecularGeometry, x):
    """Expected density of specular points at ``x`` for ``W'(x) = k x``.

    ``G(k, sqrt(lambda4)) phi(k x / sqrt(lambda2)) / sqrt(lambda2)``.
    """
    l2 = spec.lambda2
    g = gaussian_abs_moment(geom.k, math.sqrt(spec.lambda4))
    out = g * std_normal_pdf(geom.k * np.asarray(x, dtype=float) / math.sqrt(l2)) / math.sqrt(l2)
    return out if np.ndim(out) else float(out)


def sp2_total_expectation(spec: Spectrum1D, geom: SpecularGeometry) -> float:
    """Expected total number of specular points on the line, ``G(k, sqrt(lambda4)) / k``."""
    if not geom.k > 0:
        raise DomainError("k must be positive")
    return gaussian_abs_moment(geom.k, math.sqrt(spec.lambda4)) / geom.k


def sp2_expectation_interval(spec: Spectrum1D, geom: SpecularGeometry, a, b,
                             quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Quadrature of :func:`sp2_intensity` over ``[a, b]`` (limits may be infinite)."""
    sigma_x = math.sqrt(spec.lambda2) / geom.k
    value, _ = integrate_adaptive(
        lambda x: sp2_intensity(spec, geom, x), a, b,
        quad.with_policy("gaussian"), scale=sigma_x, center=0.0, points=[0.0],
    )
    return value


# ---------------------------------------------------------------------------
# Exact reflection condition
# ---------------------------------------------------------------------------

def specular_slope(x, w, h1: float, h2: float):
    """Slope ``m1(x, w)`` that makes ``(x, w)`` specular, with its partials.

    Returns
    -------
    m1, dm1_dx, dm1_dw : ndarray
        The slope and its partial derivatives, broadcast over ``x`` and ``w``.
        Valid for ``w < min(h1, h2)``.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    a = h1 - w
    b = h2 - w
    s = a + b
    x2 = x * x
    pa = x2 + a * a
    pb = x2 + b * b
    R = np.sqrt(pa * pb)
    D = R + a * b
    Q = x2 + a * a + b * b
    N = 1.0 + Q / D
    m1 = x * N / s

    dR_dx = x * (pa + pb) / R
    dR_dw = -(a * pb + b * pa) / R
    dD_dx = dR_dx
    dD_dw = dR_dw - s
    D2 = D * D
    dN_dx = (2.0 * x * D - Q * dD_dx) / D2
    dN_dw = (-2.0 * s * D - Q * dD_dw) / D2
    dm1_dx = (N + x * dN_dx) / s
    dm1_dw = x * dN_dw / s + 2.0 * x * N / (s * s)
    return m1, dm1_dx, dm1_dw


def _normalized_inputs(spec: Spectrum1D, geom: SpecularGeometry):
    """Rescale lengths so that Var W = 1.

    Scaling every length by ``c = lambda0^{-1/2}`` leaves the specular set
    unchanged (up to the same scaling of abscissae) and maps
    ``(lambda0, lambda2, lambda4, h)`` to ``(1, lambda2, lambda4 / c^2, c h)``.
    Returns ``(lambda2, lambda4, h1, h2, c)``.
    """
    if not geom.has_heights:
        raise DomainError("the exact specular formula needs both heights")
    c = 1.0 / math.sqrt(spec.lambda0)
    l2 = spec.lambda2
    l4 = spec.lambda4 / (c * c)
    if not l4 > l2 * l2:
        raise DomainError("the exact formula needs lambda4 > lambda2^2 (with lambda0 = 1)")
    h1 = geom.h1 * c
    h2 = geom.h2 * c
    if min(h1, h2) <= W_HALFWIDTH:
        raise DomainError(
            f"heights must exceed {W_HALFWIDTH} standard deviations of W "
            "for the exact formula"
        )
    return l2, l4, h1, h2, c


def _exact_inner(x, l2, l4, h1, h2, n_w):
    """Inner w-integral of the exact intensity, without the constant prefactor."""
    nodes, weights = gauss_legendre(n_w)
    w = W_HALFWIDTH * np.asarray(nodes)
    wt = W_HALFWIDTH * np.asarray(weights)
    x = np.atleast_1d(np.asarray(x, dtype=float))[:, None]
    m1, dx, dw = specular_slope(x, w[None, :], h1, h2)
    K = dx + dw * m1
    m = (l2 * w[None, :] + K) / math.sqrt(l4 - l2 * l2)
    vals = gaussian_abs_moment(m, 1.0) * np.exp(-0.5 * (w[None, :] ** 2 + m1 * m1 / l2))
    return vals @ wt


def sp1_exact_intensity(spec: Spectrum1D, geom: SpecularGeometry, x,
                        n_w: int = DEFAULT_W_NODES):
    """Expected density of exact specular points at abscissa ``x``."""
    l2, l4, h1, h2, c = _normalized_inputs(spec, geom)
    pref = math.sqrt((l4 - l2 * l2) / l2) / (2.0 * math.pi)
    xs = np.asarray(x, dtype=float)
    # Densities transform as 1/length under the rescaling x -> c x.
    out = pref * _exact_inner(xs.ravel() * c, l2, l4, h1, h2, n_w) * c
    out = out.reshape(xs.shape)
    return out if out.ndim else float(out)


def sp1_exact_expectation(spec: Spectrum1D, geom: SpecularGeometry,
                          a: float = -math.inf, b: float = math.inf,
                          quad: QuadratureSpec = DEFAULT_QUAD,
                          n_w: int = DEFAULT_W_NODES) -> float:
    """Expected number of specular points in ``[a, b]`` under the exact condition.

    The outer x-integral is adaptive; infinite limits are replaced by
    ``+-10 sqrt(lambda2) / k``. The inner w-integral uses a fixed
    Gauss-Legendre rule on ``[-10, 10]``.

    Raises
    ------
    DomainError
        If ``a >= b``, if ``lambda4 <= lambda2^2`` after normalisation, or if a
        height does not exceed the w-range.
    """
    if not a < b:
        raise DomainError("need a < b")
    l2, l4, h1, h2, c = _normalized_inputs(spec, geom)
    k = 0.5 * (1.0 / h1 + 1.0 / h2)
    half = TOTAL_X_HALFWIDTH * math.sqrt(l2) / k
    lo = max(a * c, -half)
    hi = min(b * c, half)
    if lo >= hi:
        return 0.0
    pref = math.sqrt((l4 - l2 * l2) / l2) / (2.0 * math.pi)

    def f(x):
        return float(_exact_inner(x, l2, l4, h1, h2, n_w)[0])

    value, _ = integrate_adaptive(f, lo, hi, quad, points=[0.0])
    return pref * value


# ---------------------------------------------------------------------------
# Variance asymptotics
# ---------------------------------------------------------------------------

def h_bivariate_abs(rho):
    """``E|xi eta|`` for standard Gaussians with correlation ``rho``.

    ``(2/pi) sqrt(1 - rho^2) + (2 rho / pi) arcsin(rho)``; the arcsine is
    the same as ``arctan(rho / sqrt(1 - rho^2))`` and stays finite at
    ``|rho| = 1``, where the value is 1.
    """
    r = np.asarray(rho, dtype=float)
    if np.any(np.abs(r) > 1.0 + 1e-12):
        raise DomainError("correlation must lie in [-1, 1]")
    r = np.clip(r, -1.0, 1.0)
    out = (2.0 / math.pi) * (np.sqrt(1.0 - r * r) + r * np.arcsin(r))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class VarianceParams:
    """Ingredients of the asymptotic variance of the specular count.

    Attributes
    ----------
    sigma2, rho : callable
        Conditional variance of ``W''`` at one end of a lag ``z`` given
        ``W'`` at both ends, and the conditional correlation of the two
        second derivatives.
    J : float
        ``int sigma2(z) H(rho(z)) / sqrt(2 pi (lambda2 + Gamma''(z))) dz`` over
        ``[-delta, delta]``.
    theta : float
        ``J / sqrt(2) + sqrt(2 lambda4 / pi) - 2 delta lambda4 / sqrt(pi^3 lambda2)``.
    """

    sigma2: Callable
    rho: Callable
    J: float
    theta: float
    delta: float
    lambda2: float
    lambda4: float


def _conditional_structure(cov: CovarianceModel1D, spec: Spectrum1D):
    """Return vectorised ``sigma2(z)`` and ``rho(z)`` with the z=0 patch."""
    l2, l4, l6 = spec.lambda2, spec.lambda4, spec.lambda6
    scale = cov.delta if math.isfinite(cov.delta) else 1.0 / math.sqrt(l2)
    guard = Z_GUARD * scale
    limit = (l2 * l6 - l4 * l4) / (4.0 * l2) if math.isfinite(l6) else None

    def raw(z):
        g2 = cov.gamma2(z)
        g3 = cov.gamma3(z)
        g4 = cov.gamma4(z)
        den = (l2 - g2) * (l2 + g2)
        s2 = l4 - l2 * g3 * g3 / den
        c = g4 + g3 * g3 * g2 / den
        return s2, c

    def sigma2(z):
        z = np.asarray(z, dtype=float)
        za = np.abs(z)
        safe = np.where(za < guard, guard, za)
        s2, _ = raw(safe)
        if limit is not None:
            patched = limit * za * za
        else:
            patched = s2 * za / guard
        out = np.where(za < guard, patched, s2)
        out = np.maximum(out, 0.0)
        return out if out.ndim else float(out)

    def rho(z):
        z = np.asarray(z, dtype=float)
        za = np.abs(z)
        safe = np.where(za < guard, guard, za)
        s2, c = raw(safe)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(s2 > 0, c / s2, -1.0)
        out = np.where(za < guard, -1.0, np.clip(r, -1.0, 1.0))
        return out if out.ndim else float(out)

    return sigma2, rho


def _check_nondegenerate(cov: CovarianceModel1D, spec: Spectrum1D, upper: float):
    l2 = spec.lambda2
    z = np.linspace(0.0, upper, 4001)[1:]
    gap = l2 * l2 - cov.gamma2(z) ** 2
    bad = np.flatnonzero(gap <= 1e-14 * l2 * l2)
    if bad.size:
        raise DegeneracyError(
            f"lambda2^2 - Gamma''(z)^2 vanishes at z = {z[bad[0]]:.6g}"
        )


def _j_integrand(cov, spec, sigma2, rho):
    l2 = spec.lambda2

    def f(z):
        base = l2 + float(cov.gamma2(z))
        if base <= 0.0:
            return 0.0
        return float(sigma2(z)) * float(h_bivariate_abs(rho(z))) / math.sqrt(2.0 * math.pi * base)

    return f


def variance_params(cov: CovarianceModel1D, quad: QuadratureSpec = DEFAULT_QUAD) -> VarianceParams:
    """Asymptotic variance coefficient ``theta`` for a lag-limited covariance.

    ``Var(S) = theta / k + O(1)`` as ``k -> 0``, where ``S`` counts the zeros of
    ``W'(x) - k x`` on the whole line and the covariance vanishes beyond
    ``delta``.

    Raises
    ------
    DomainError
        If the covariance has no finite range.
    DegeneracyError
        If ``lambda2^2 = Gamma''(z)^2`` for some ``0 < |z| <= delta``.
    """
    if not math.isfinite(cov.delta):
        raise DomainError("variance_params needs a covariance with finite range")
    spec = moments_from_covariance(cov)
    delta = cov.delta
    _check_nondegenerate(cov, spec, delta)
    sigma2, rho = _conditional_structure(cov, spec)
    f = _j_integrand(cov, spec, sigma2, rho)
    half, _ = integrate_adaptive(f, 0.0, delta, quad)
    J = 2.0 * half
    l2, l4 = spec.lambda2, spec.lambda4
    theta = (J / math.sqrt(2.0) + math.sqrt(2.0 * l4 / math.pi)
             - 2.0 * delta * l4 / math.sqrt(math.pi ** 3 * l2))
    return VarianceParams(sigma2=sigma2, rho=rho, J=J, theta=theta, delta=delta,
                          lambda2=l2, lambda4=l4)


def sp2_variance_asymptotic(params: VarianceParams, k: float) -> float:
    """Leading term ``theta / k`` of the variance of the specular count."""
    if not k > 0:
        raise DomainError("k must be positive")
    return params.theta / k


def coefficient_of_variation(params: VarianceParams, k: float) -> float:
    """The shorthand ``sqrt(theta k)`` for the coefficient of variation.

    It drops the mean's constant: the ratio of ``sqrt(theta / k)`` to the
    leading mean ``sqrt(2 lambda4 / pi) / k`` is
    :func:`coefficient_of_variation_leading`. The two agree only when
    ``2 lambda4 = pi``.
    """
    if not k > 0:
        raise DomainError("k must be positive")
    return math.sqrt(params.theta * k)


def coefficient_of_variation_leading(params: VarianceParams, k: float) -> float:
    """``sqrt(Var S) / E S`` to leading order, ``sqrt(theta k) / sqrt(2 lambda4 / pi)``."""
    if not k > 0:
        raise DomainError("k must be positive")
    return math.sqrt(params.theta * k) / (SQRT_2_OVER_PI * math.sqrt(params.lambda4))


def theta_mixing_variant(cov: CovarianceModel1D, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``theta`` written as a single integral over the whole line.

    ``sqrt(2 lambda4 / pi) + pi^{-1/2} int [sigma2 H(rho) / (2 sqrt(lambda2 +
    Gamma'')) - lambda4 / (pi sqrt(lambda2))] dz``. The bracket vanishes
    wherever the covariance does, so the integral also makes sense for
    covariances that only decay. The half-line is compactified, without a
    break at ``delta``.
    """
    spec = moments_from_covariance(cov)
    l2, l4 = spec.lambda2, spec.lambda4
    length = cov.delta if math.isfinite(cov.delta) else 1.0 / math.sqrt(l2)
    _check_nondegenerate(cov, spec, length if math.isfinite(cov.delta) else 20.0 * length)
    sigma2, rho = _conditional_structure(cov, spec)
    tail = l4 / (math.pi * math.sqrt(l2))

    def bracket(z):
        base = l2 + float(cov.gamma2(z))
        first = 0.0
        if base > 0.0:
            first = float(sigma2(z)) * float(h_bivariate_abs(rho(z))) / (2.0 * math.sqrt(base))
        return first - tail

    half, _ = integrate_adaptive(bracket, 0.0, math.inf, quad.with_policy("power"),
                                 scale=length)
    return math.sqrt(2.0 * l4 / math.pi) + 2.0 * half / math.sqrt(math.pi)


def theta_with_mean_shift(cov: CovarianceModel1D, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Variance coefficient keeping the conditional means of ``W''``.

    Given ``W'(x) = W'(x+z) = u`` the two second derivatives are not centred:
    their conditional means are ``-/+ Gamma'''(z) u / (lambda2 - Gamma''(z))``.
    Averaging ``E|W''(x) W''(x+z)|`` over ``u`` as well turns the pair into a
    centred Gaussian pair with variances ``v = sigma2 + Gamma'''^2 / (2
    (lambda2 - Gamma''))`` and covariance ``sigma2 rho - Gamma'''^2 / (2
    (lambda2 - Gamma''))``. This function returns ``theta`` with that pair in
    place of the centred one; it is the limit the simulated ``Var(S) k``
    approaches, while :func:`variance_params` drops the shift.
    """
    if not math.isfinite(cov.delta):
        raise DomainError("theta_with_mean_shift needs a covariance with finite range")
    spec = moments_from_covariance(cov)
    l2, l4 = spec.lambda2, spec.lambda4
    delta = cov.delta
    _check_nondegenerate(cov, spec, delta)
    sigma2, rho = _conditional_structure(cov, spec)
    guard = Z_GUARD * delta

    def f(z):
        if z < guard:
            return 0.0
        g2 = float(cov.gamma2(z))
        g3 = float(cov.gamma3(z))
        base = l2 + g2
        if base <= 0.0:
            return 0.0
        shift = g3 * g3 / (2.0 * (l2 - g2))
        s2 = float(sigma2(z))
        v = s2 + shift
        if v <= 0.0:
            return 0.0
        r = (s2 * float(rho(z)) - shift) / v
        return v * float(h_bivariate_abs(np.clip(r, -1.0, 1.0))) / math.sqrt(2.0 * math.pi * base)

    half, _ = integrate_adaptive(f, 0.0, delta, quad)
    J = 2.0 * half
    return (J / math.sqrt(2.0) + math.sqrt(2.0 * l4 / math.pi)
            - 2.0 * delta * l4 / math.sqrt(math.pi ** 3 * l2))


def derivative_zero_rate(spec: Spectrum1D) -> float:
    """Expected zeros of ``W'`` per unit length, ``sqrt(lambda4 / lambda2) / pi``."""
    return math.sqrt(spec.lambda4 / spec.lambda2) / math.pi


def sp2_leading_mean(spec: Spectrum1D, k: float) -> float:
    """Leading term ``sqrt(2 lambda4 / pi) / k`` of the expected specular count."""
    return SQRT_2_OVER_PI * math.sqrt(spec.lambda4) / k
