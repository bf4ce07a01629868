"""Spectral and covariance descriptions of the underlying Gaussian models.

One-dimensional processes are described by their even spectral moments
(:class:`Spectrum1D`) and, when a variance computation needs it, by a
covariance function with analytic derivatives (:class:`CovarianceModel1D`).
Two-dimensional fields carry the covariance of the gradient and of the
Hessian (:class:`Spectrum2D`); space-time fields used for level curves carry
the few moments the crossing intensity needs (:class:`Spectrum3D`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import special

from .errors import DomainError
from .numerics import SQRT_2_OVER_PI, std_normal_cdf, std_normal_pdf

MOMENT_RTOL = 1e-10


def gaussian_abs_moment(mu, sigma):
    """Mean absolute value ``G(mu, sigma) = E|Z|`` of ``Z ~ N(mu, sigma^2)``.

    Parameters
    ----------
    mu : float or array_like
        Mean of the Gaussian.
    sigma : float or array_like
        Standard deviation, non-negative.

    Returns
    -------
    float or ndarray
        ``mu (2 Phi(mu/sigma) - 1) + 2 sigma phi(mu/sigma)``, and ``|mu|`` where
        ``sigma == 0``.
    """
    mu_a = np.asarray(mu, dtype=float)
    sig_a = np.asarray(sigma, dtype=float)
    if np.any(sig_a < 0):
        raise DomainError("sigma must be non-negative")
    mu_b, sig_b = np.broadcast_arrays(mu_a, sig_a)
    out = np.array(np.abs(mu_b), dtype=float)
    pos = sig_b > 0
    if np.any(pos):
        m = mu_b[pos]
        s = sig_b[pos]
        with np.errstate(over="ignore", divide="ignore"):
            ratio = np.clip(m / s, -1e154, 1e154)
        # Phi(r) - Phi(-r) = 1 - 2 Phi(-|r|), which keeps precision for large |r|.
        two_phi_minus_one = np.sign(ratio) * (1.0 - 2.0 * std_normal_cdf(-np.abs(ratio)))
        out[pos] = m * two_phi_minus_one + 2.0 * s * std_normal_pdf(ratio)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CovarianceModel1D:
    """Stationary covariance ``Gamma(z)`` with analytic derivatives.

    Parameters
    ----------
    gamma, gamma1, gamma2, gamma3, gamma4 : callable
        Vectorised evaluators of ``Gamma`` and its derivatives of order 1 to 4.
    delta : float
        Dependence range: the covariance vanishes for ``|z| > delta``. Use
        ``math.inf`` for models that only decay.
    gamma6 : callable, optional
        Sixth derivative. When present, ``lambda6 = -gamma6(0)`` is finite.
    mixing_alpha : float, optional
        Polynomial decay exponent of ``Gamma`` and its derivatives, for models
        with infinite range. ``math.inf`` marks faster-than-polynomial decay.
    name : str
        Label echoed in reports.
    params : dict
        Constructor parameters, echoed in reports.
    """

    gamma: Callable
    gamma1: Callable
    gamma2: Callable
    gamma3: Callable
    gamma4: Callable
    delta: float
    gamma6: Optional[Callable] = None
    mixing_alpha: Optional[float] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError("delta must be positive (use math.inf for no cutoff)")
        g0 = float(self.gamma(0.0))
        if not g0 > 0:
            raise DomainError("Gamma(0) must be positive")
        span = self.delta if math.isfinite(self.delta) else 10.0
        grid = np.linspace(-span, span, 401)
        if np.any(np.abs(self.gamma(grid)) > g0 * (1.0 + 1e-12)):
            raise DomainError("|Gamma(z)| exceeds Gamma(0) on the test grid")
        if math.isfinite(self.delta):
            outside = np.array([1.0 + 1e-9, 1.01, 1.5, 3.0]) * self.delta
            outside = np.concatenate([outside, -outside])
            for order in (0, 1, 2, 3, 4):
                if np.any(self.derivative(order, outside) != 0.0):
                    raise DomainError(
                        f"derivative of order {order} does not vanish beyond delta"
                    )

    def derivative(self, order: int, z):
        """Evaluate ``Gamma^{(order)}(z)`` for order in 0..4 (or 6 if known)."""
        table = {0: self.gamma, 1: self.gamma1, 2: self.gamma2, 3: self.gamma3,
                 4: self.gamma4, 6: self.gamma6}
        fn = table.get(order)
        if fn is None:
            raise DomainError(f"derivative of order {order} is not available")
        return fn(z)


@dataclass(frozen=True)
class Spectrum1D:
    """Even spectral moments of a 1D stationary Gaussian process.

    ``lambda2 = Var W'`` and ``lambda4 = Var W''``. ``lambda6`` may be
    ``math.inf`` when the sixth moment does not exist. When a covariance model
    is attached, its derivatives at zero must reproduce the moments to a
    relative ``1e-10``.
    """

    lambda0: float = 1.0
    lambda2: float = 1.0
    lambda4: float = 3.0
    lambda6: float = math.inf
    covariance: Optional[CovarianceModel1D] = None

    def __post_init__(self):
        for name in ("lambda0", "lambda2", "lambda4"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")
        if not self.lambda6 >= 0:
            raise DomainError("lambda6 must be non-negative or inf")
        tol = 1.0 + 1e-12
        if self.lambda2 ** 2 > self.lambda0 * self.lambda4 * tol:
            raise DomainError("moments violate lambda2^2 <= lambda0 * lambda4")
        if math.isfinite(self.lambda6) and self.lambda4 ** 2 > self.lambda2 * self.lambda6 * tol:
            raise DomainError("moments violate lambda4^2 <= lambda2 * lambda6")
        if self.covariance is not None:
            cov = self.covariance
            pairs = [
                ("lambda0", self.lambda0, float(cov.gamma(0.0))),
                ("lambda2", self.lambda2, -float(cov.gamma2(0.0))),
                ("lambda4", self.lambda4, float(cov.gamma4(0.0))),
            ]
            for name, stated, implied in pairs:
                if abs(stated - implied) > MOMENT_RTOL * abs(stated):
                    raise DomainError(
                        f"{name}={stated!r} disagrees with the covariance ({implied!r})"
                    )

    @property
    def sixth_moment_finite(self) -> bool:
        return math.isfinite(self.lambda6)


def moments_from_covariance(cov: CovarianceModel1D) -> Spectrum1D:
    """Spectral moments read off the covariance derivatives at the origin.

    ``lambda0 = Gamma(0)``, ``lambda2 = -Gamma''(0)``, ``lambda4 =
    Gamma''''(0)``, and ``lambda6 = -Gamma^{(6)}(0)`` when a sixth-derivative
    evaluator exists (``inf`` otherwise).
    """
    l0 = float(cov.gamma(0.0))
    l2 = -float(cov.gamma2(0.0))
    l4 = float(cov.gamma4(0.0))
    l6 = -float(cov.gamma6(0.0)) if cov.gamma6 is not None else math.inf
    for name, value in (("lambda0", l0), ("lambda2", l2), ("lambda4", l4)):
        if not value > 0:
            raise DomainError(f"covariance implies non-positive {name} = {value!r}")
    return Spectrum1D(l0, l2, l4, l6, covariance=cov)


# Wendland functions phi_{3,k}(r), positive definite up to dimension 3, written
# as polynomials in r on [0, 1] with ascending coefficients and phi(0) = 1.
# k=2: (1-r)^5 (8r^2+5r+1), C^4.
# k=3: (1-r)^7 (21r^3+19r^2+7r+1), C^6, normalised by 1.
# k=4: (1-r)^9 (384r^4+453r^3+237r^2+63r+7)/7, C^8.
def _wendland_coefficients(smoothness: int) -> np.ndarray:
    r = npoly.Polynomial
    one_minus = r([1.0, -1.0])
    if smoothness == 2:
        poly = one_minus ** 5 * r([1.0, 5.0, 8.0])
    elif smoothness == 3:
        poly = one_minus ** 7 * r([1.0, 7.0, 19.0, 21.0])
    elif smoothness == 4:
        poly = one_minus ** 9 * r([7.0, 63.0, 237.0, 453.0, 384.0]) / 7.0
    else:
        raise DomainError("Wendland smoothness must be 2, 3 or 4")
    return poly.coef


def _compact_poly_evaluator(coef, order, delta, scale):
    dcoef = npoly.polyder(coef, order) if order else np.asarray(coef, dtype=float)
    factor = scale / delta ** order

    def evaluate(z):
        z_arr = np.asarray(z, dtype=float)
        r = np.abs(z_arr) / delta
        val = npoly.polyval(np.minimum(r, 1.0), dcoef) * factor
        if order % 2:
            val = val * np.sign(z_arr)
        out = np.where(r < 1.0, val, 0.0)
        return out if out.ndim else float(out)

    return evaluate


def builtin_covariance_wendland(delta: float = 1.0, scale: float = 1.0,
                                smoothness: int = 3) -> CovarianceModel1D:
    """Compactly supported Wendland covariance ``scale * phi(|z| / delta)``.

    Parameters
    ----------
    delta : float
        Support radius; ``Gamma`` and all its derivatives vanish beyond it.
    scale : float
        Variance ``Gamma(0)``.
    smoothness : {2, 3, 4}
        Wendland index. Index 2 is C^4 at the origin with an infinite sixth
        moment; 3 (default) is C^6 with finite ``lambda6``; 4 is C^8.

    Notes
    -----
    With ``delta = 1`` and unit variance, index 3 gives ``lambda2 = 18``,
    ``lambda4 = 1008`` and ``lambda6 = 151200``.
    """
    if not delta > 0 or not math.isfinite(delta):
        raise DomainError("delta must be positive and finite")
    if not scale > 0:
        raise DomainError("scale must be positive")
    coef = _wendland_coefficients(int(smoothness))
    ev = [_compact_poly_evaluator(coef, n, delta, scale) for n in range(7)]
    gamma6 = ev[6] if smoothness >= 3 else None
    return CovarianceModel1D(
        gamma=ev[0], gamma1=ev[1], gamma2=ev[2], gamma3=ev[3], gamma4=ev[4],
        delta=float(delta), gamma6=gamma6, mixing_alpha=None,
        name="wendland",
        params={"delta": float(delta), "scale": float(scale), "smoothness": int(smoothness)},
    )


def builtin_covariance_gaussian(ell: float = 1.0, scale: float = 1.0) -> CovarianceModel1D:
    """Gaussian covariance ``scale * exp(-z^2 / (2 ell^2))``.

    Derivatives use probabilists' Hermite polynomials,
    ``Gamma^{(n)}(z) = scale (-1/ell)^n He_n(z/ell) exp(-z^2/(2 ell^2))``.
    The moments are ``lambda2 = 1/ell^2``, ``lambda4 = 3/ell^4`` and
    ``lambda6 = 15/ell^6`` (times ``scale``).
    """
    if not ell > 0 or not scale > 0:
        raise DomainError("ell and scale must be positive")

    def make(order):
        def evaluate(z):
            x = np.asarray(z, dtype=float) / ell
            out = scale * (-1.0 / ell) ** order * special.eval_hermitenorm(order, x) \
                * np.exp(-0.5 * x * x)
            return out if np.ndim(out) else float(out)
        return evaluate

    ev = [make(n) for n in range(7)]
    return CovarianceModel1D(
        gamma=ev[0], gamma1=ev[1], gamma2=ev[2], gamma3=ev[3], gamma4=ev[4],
        delta=math.inf, gamma6=ev[6], mixing_alpha=math.inf,
        name="gaussian", params={"ell": float(ell), "scale": float(scale)},
    )


@dataclass(frozen=True)
class SpecularGeometry:
    """Source and observer heights and the constant ``k = (1/h1 + 1/h2) / 2``.

    Build it with :meth:`from_heights` for exact computations, or with
    :meth:`from_k` when only the linearised condition ``W'(x) = k x`` is used.
    """

    k: float
    h1: Optional[float] = None
    h2: Optional[float] = None

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise DomainError(f"k must be positive and finite, got {self.k!r}")
        if (self.h1 is None) != (self.h2 is None):
            raise DomainError("give both heights or neither")
        if self.h1 is not None:
            if not (self.h1 > 0 and self.h2 > 0):
                raise DomainError("heights must be positive")
            expected = 0.5 * (1.0 / self.h1 + 1.0 / self.h2)
            if self.k != expected:
                raise DomainError("k is inconsistent with the heights")

    @classmethod
    def from_heights(cls, h1: float, h2: float) -> "SpecularGeometry":
        h1 = float(h1)
        h2 = float(h2)
        if not (h1 > 0 and h2 > 0):
            raise DomainError("heights must be positive")
        return cls(k=0.5 * (1.0 / h1 + 1.0 / h2), h1=h1, h2=h2)

    @classmethod
    def from_k(cls, k: float) -> "SpecularGeometry":
        return cls(k=float(k))

    @property
    def has_heights(self) -> bool:
        return self.h1 is not None


@dataclass(frozen=True)
class Spectrum2D:
    """Second-order structure of a 2D stationary field.

    Parameters
    ----------
    grad_cov : array_like, shape (2, 2)
        Covariance of ``(W_x, W_y)``: ``[[l20, l11], [l11, l02]]``.
    hess_cov : array_like, shape (3, 3)
        Covariance of ``(W_xx, W_yy, W_xy)``:
        ``[[l40, l22, l31], [l22, l04, l13], [l31, l13, l22]]``.
    """

    grad_cov: np.ndarray
    hess_cov: np.ndarray

    def __post_init__(self):
        g = np.array(self.grad_cov, dtype=float)
        s = np.array(self.hess_cov, dtype=float)
        if g.shape != (2, 2) or s.shape != (3, 3):
            raise DomainError("grad_cov must be 2x2 and hess_cov 3x3")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(s))):
            raise DomainError("covariances must be finite")
        if not np.allclose(g, g.T, rtol=0, atol=1e-14 * np.abs(g).max()):
            raise DomainError("grad_cov must be symmetric")
        if not np.allclose(s, s.T, rtol=0, atol=1e-14 * np.abs(s).max()):
            raise DomainError("hess_cov must be symmetric")
        if not (g[0, 0] > 0 and g[0, 0] * g[1, 1] - g[0, 1] ** 2 > 0):
            raise DomainError("grad_cov must be positive definite")
        scale = np.abs(s).max()
        if abs(s[0, 1] - s[2, 2]) > 1e-12 * scale:
            raise DomainError(
                "hess_cov entries (1,2) and (3,3) must both equal lambda22"
            )
        if np.linalg.eigvalsh(0.5 * (s + s.T)).min() < -1e-12 * scale:
            raise DomainError("hess_cov must be positive semidefinite")
        g = 0.5 * (g + g.T)
        s = 0.5 * (s + s.T)
        g.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "grad_cov", g)
        object.__setattr__(self, "hess_cov", s)

    @classmethod
    def from_moments(cls, l20, l11, l02, l40, l31, l22, l13, l04) -> "Spectrum2D":
        grad = [[l20, l11], [l11, l02]]
        hess = [[l40, l22, l31], [l22, l04, l13], [l31, l13, l22]]
        return cls(np.array(grad, dtype=float), np.array(hess, dtype=float))

    @property
    def grad_det(self) -> float:
        g = self.grad_cov
        return float(g[0, 0] * g[1, 1] - g[0, 1] ** 2)

    def key(self):
        """Hashable identity used for caching derived quantities."""
        return tuple(self.grad_cov.ravel()) + tuple(self.hess_cov.ravel())


@dataclass(frozen=True)
class Spectrum3D:
    """Space-time moments ``lambda_abc`` (order 0 in time) of a random movie."""

    lambda000: float = 1.0
    lambda200: float = 1.0
    lambda020: float = 1.0
    lambda110: float = 0.0

    def __post_init__(self):
        if not self.lambda000 > 0:
            raise DomainError("lambda000 must be positive")
        if not (self.lambda200 > 0
                and self.lambda200 * self.lambda020 - self.lambda110 ** 2 > 0):
            raise DomainError("spatial gradient covariance must be positive definite")

    def lambda_abc(self, a: int, b: int, c: int = 0) -> float:
        table = {(0, 0, 0): self.lambda000, (2, 0, 0): self.lambda200,
                 (0, 2, 0): self.lambda020, (1, 1, 0): self.lambda110}
        try:
            return table[(a, b, c)]
        except KeyError:
            raise DomainError(f"moment lambda_{a}{b}{c} is not stored") from None


def folded_normal_lower_bound(mu, sigma):
    """``max(|mu|, sigma sqrt(2/pi))``, a lower bound for ``G(mu, sigma)``."""
    return np.maximum(np.abs(mu), np.asarray(sigma) * SQRT_2_OVER_PI)
