"""Specular points of a 2D Gaussian surface in the large-height limit.

Specular points are the solutions of ``grad W(x, y) = k (x, y)``. Their
expected density is ``E|det Y'| p_{grad W}(k x, k y)``, where ``Y' = Hess W -
k I``. The absolute determinant is handled through the characteristic
function of the quadratic form ``det(Hess W - k I)``: write the Hessian
entries ``(W_xx, W_yy, W_xy)`` as ``Sigma^{1/2} Z`` with ``Z`` standard, so
that ``W_xx W_yy - W_xy^2 = Z' Sigma^{1/2} A Sigma^{1/2} Z`` with

    A = [[0, 1/2, 0], [1/2, 0, 0], [0, 0, -1]].

Diagonalising ``Sigma^{1/2} A Sigma^{1/2} = P diag(Delta) P'`` turns the
determinant into ``sum_j Delta_j (Z_j + mu_j)^2`` up to a constant, and

    E|X| = (2/pi) int_0^inf (1 - Re E e^{itX}) / t^2 dt.

Each factor ``E exp(i t Delta (Z + mu)^2)`` has modulus
``(1 + 4 Delta^2 t^2)^{-1/4} exp(-2 Delta^2 t^2 mu^2 / (1 + 4 Delta^2 t^2))``
and phase ``arctan(2 Delta t)/2 + t Delta mu^2 / (1 + 4 Delta^2 t^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConsistencyError, DomainError
from .numerics import DEFAULT_QUAD, QuadratureSpec, eig_sym3, integrate_adaptive, sym_sqrt3
from .spectral_models import Spectrum2D

A_MATRIX = np.array([[0.0, 0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, -1.0]])
A_MATRIX.setflags(write=False)

# Relative guard (in units of 1 / max|Delta|) around t = 0.
T_GUARD = 1e-4
FORMS_RTOL = 1e-9


@dataclass(frozen=True)
class AbsDetContext:
    """Diagonalised form of ``det(Hess W - k I)``.

    Attributes
    ----------
    deltas : ndarray, shape (3,)
        Eigenvalues of ``Sigma^{1/2} A Sigma^{1/2}``, descending.
    s : ndarray, shape (3, 3)
        ``Sigma^{1/2} P``; column ``j`` maps ``Z_j`` onto ``(W_xx, W_yy,
        W_xy)``.
    k : float
        Longuet-Higgins constant.
    """

    deltas: np.ndarray
    s: np.ndarray
    k: float

    @property
    def c(self) -> np.ndarray:
        """Loadings ``s_1j + s_2j`` of ``W_xx + W_yy`` on each ``Z_j``."""
        return self.s[0] + self.s[1]

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.deltas)))


def make_absdet_context(spec2: Spectrum2D, k: float = 0.0) -> AbsDetContext:
    """Diagonalise the quadratic form of the Hessian determinant."""
    if not (k >= 0 and math.isfinite(k)):
        raise DomainError("k must be non-negative")
    root = sym_sqrt3(spec2.hess_cov)
    M = root @ A_MATRIX @ root
    deltas, P = eig_sym3(M)
    s = root @ P
    deltas.setflags(write=False)
    s.setflags(write=False)
    return AbsDetContext(deltas=deltas, s=s, k=float(k))


def re_char_function(ctx: AbsDetContext, t):
    """Real part of ``h(t) = E exp(i t det(Hess W - k I))``.

    Vectorised over ``t``.
    """
    t = np.asarray(t, dtype=float)
    tt = t[..., None]
    d = ctx.deltas
    c2 = ctx.c ** 2
    k2 = ctx.k * ctx.k
    q = 1.0 + 4.0 * d * d * tt * tt
    modulus = np.prod(q ** -0.25 * np.exp(-0.5 * k2 * tt * tt * c2 / q), axis=-1)
    phi = 0.5 * np.arctan(2.0 * d * tt)
    psi = 1.0 / 3.0 - tt * tt * c2 * d / q
    phase = np.sum(phi + k2 * tt * psi, axis=-1)
    out = modulus * np.cos(phase)
    return out if out.ndim else float(out)


def _small_t_limit(ctx: AbsDetContext) -> float:
    """Limit of ``(1 - Re h(t)) / t^2`` at ``t = 0``, i.e. ``E X^2 / 2``."""
    d = ctx.deltas
    c2 = ctx.c ** 2
    k2 = ctx.k * ctx.k
    mean = float(np.sum(d)) + k2
    return float(np.sum(d * d)) + 0.5 * k2 * float(np.sum(c2)) + 0.5 * mean * mean


def expected_abs_det(ctx: AbsDetContext, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``E|det(Hess W - k I)|`` by the characteristic-function integral."""
    scale = ctx.scale
    if scale == 0.0:
        return ctx.k * ctx.k
    # The phase turns at rate ~k^2 as well as ~Delta; both set the t-scale.
    rate = max(scale, ctx.k * ctx.k)
    guard = T_GUARD / rate
    limit = _small_t_limit(ctx)

    def f(t):
        if t < guard:
            return limit
        return (1.0 - re_char_function(ctx, t)) / (t * t)

    value, _ = integrate_adaptive(f, 0.0, math.inf, quad.with_policy("power"),
                                  scale=1.0 / rate)
    return 2.0 / math.pi * value


@lru_cache(maxsize=256)
def _cached_abs_det(key, k, quad):
    grad = np.array(key[:4]).reshape(2, 2)
    hess = np.array(key[4:]).reshape(3, 3)
    spec2 = Spectrum2D(grad, hess)
    return expected_abs_det(make_absdet_context(spec2, k), quad)


def sp2d_abs_det(spec2: Spectrum2D, k: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Cached ``E|det(Hess W - k I)|`` keyed on the covariances and ``k``."""
    return _cached_abs_det(spec2.key(), float(k), quad)


def gradient_density(spec2: Spectrum2D, k: float, x, y):
    """Density of ``grad W`` evaluated at ``(k x, k y)``."""
    g = spec2.grad_cov
    det = spec2.grad_det
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    quad_form = (g[1, 1] * x * x - 2.0 * g[0, 1] * x * y + g[0, 0] * y * y) / det
    out = np.exp(-0.5 * k * k * quad_form) / (2.0 * math.pi * math.sqrt(det))
    return out if out.ndim else float(out)


def sp2d_intensity(spec2: Spectrum2D, k: float, x, y,
                   quad: QuadratureSpec = DEFAULT_QUAD):
    """Expected density of specular points at ``(x, y)``; vectorised."""
    if not k > 0:
        raise DomainError("k must be positive")
    return sp2d_abs_det(spec2, k, quad) * gradient_density(spec2, k, x, y)


def sp2d_total_by_quadrature(spec2: Spectrum2D, k: float,
                             quad: QuadratureSpec = DEFAULT_QUAD, nodes: int = 96) -> float:
    """Integral of :func:`sp2d_intensity` over the plane on a tensor grid.

    The plane is mapped to the whitened coordinates of the gradient density
    and integrated with Gauss-Legendre nodes on ``[-9, 9]^2``; this route does
    not use the closed-form Gaussian normalisation.
    """
    from .numerics import gauss_legendre

    g = spec2.grad_cov
    L = np.linalg.cholesky(g)
    u, wu = gauss_legendre(nodes)
    u = 9.0 * np.asarray(u)
    wu = 9.0 * np.asarray(wu)
    U1, U2 = np.meshgrid(u, u, indexing="ij")
    pts = np.einsum("ij,jab->iab", L, np.stack([U1, U2])) / k
    jac = float(np.linalg.det(L)) / (k * k)
    vals = sp2d_intensity(spec2, k, pts[0], pts[1], quad)
    return float(np.einsum("i,j,ij->", wu, wu, vals)) * jac


def _m2_integrand_cos(deltas, t):
    q = 1.0 + 4.0 * deltas * deltas * t * t
    return (1.0 - np.prod(q ** -0.25) * math.cos(float(np.sum(0.5 * np.arctan(2.0 * deltas * t))))) / (t * t)


def _m2_integrand_product(deltas, t):
    a = (1.0 + 4.0 * deltas * deltas * t * t) ** -0.5
    # tan of the half angle, carrying the sign of Delta_j.
    b = np.sign(deltas) * np.sqrt((1.0 - a) / (1.0 + a))
    pair = b[0] * b[1] + b[1] * b[2] + b[2] * b[0]
    return (1.0 - 2.0 ** -1.5 * np.prod(np.sqrt(a) * np.sqrt(1.0 + a)) * (1.0 - pair)) / (t * t)


def m2_integrands(spec2: Spectrum2D, t):
    """Both forms of the m2 integrand at ``t`` (for consistency checks)."""
    deltas = make_absdet_context(spec2, 0.0).deltas
    return _m2_integrand_cos(deltas, float(t)), _m2_integrand_product(deltas, float(t))


def m2_coefficient(spec2: Spectrum2D, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Leading coefficient ``m2`` in ``E(number of specular points) = m2 / k^2``.

    ``m2 = E|det Hess W|``, computed twice: once from the cosine of the summed
    half angles and once from the half-angle product expansion
    ``cos(a+b+c) = cos a cos b cos c (1 - tan a tan b - tan b tan c - tan c
    tan a)``. The two routes must agree to ``1e-9`` relative.

    Raises
    ------
    ConsistencyError
        If the two integrals disagree.
    """
    ctx = make_absdet_context(spec2, 0.0)
    d = ctx.deltas
    scale = ctx.scale
    if scale == 0.0:
        raise DomainError("Hessian covariance is degenerate (all Delta_j vanish)")
    guard = T_GUARD / scale
    limit = _small_t_limit(ctx)
    tight = QuadratureSpec(1e-14, 1e-12, quad.max_subdivisions, "power")

    def wrap(form):
        def f(t):
            return limit if t < guard else form(d, t)
        return f

    v_cos, _ = integrate_adaptive(wrap(_m2_integrand_cos), 0.0, math.inf, tight, scale=1.0 / scale)
    v_prod, _ = integrate_adaptive(wrap(_m2_integrand_product), 0.0, math.inf, tight,
                                   scale=1.0 / scale)
    if abs(v_cos - v_prod) > FORMS_RTOL * abs(v_cos):
        raise ConsistencyError(
            f"m2 integrand forms disagree: {v_cos!r} vs {v_prod!r}"
        )
    return 2.0 / math.pi * v_cos


def sp2d_total_expectation(spec2: Spectrum2D, k: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Leading-order expected number of specular points in the plane, ``m2 / k^2``."""
    if not k > 0:
        raise DomainError("k must be positive")
    return m2_coefficient(spec2, quad) / (k * k)
