"""Level curves of 2D fields and dislocations of isotropic complex waves.

Three groups of closed forms live here:

* the expected length of a level curve of a space-time field per unit area,
* the length-weighted (Palm) distribution of the direction of the gradient
  along a level curve,
* the density and the pair correlation of the common zeros of two
  independent isotropic fields ``xi`` and ``eta`` (wavefront dislocations).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special

from .errors import DegeneracyError, DomainError
from .numerics import DEFAULT_QUAD, QuadratureSpec, elliptic_e, elliptic_k, integrate_adaptive
from .spectral_models import Spectrum3D


def crossing_intensity(spec3: Spectrum3D, u: float, area: float = 1.0) -> float:
    """Expected length of the level curve ``{W(., t) = u}`` inside a region.

    ``area * sqrt(lambda200 / lambda000) * exp(-u^2 / (2 lambda000)) / pi``.
    """
    if not area > 0:
        raise DomainError("area must be positive")
    return (area / math.pi * math.sqrt(spec3.lambda200 / spec3.lambda000)
            * math.exp(-u * u / (2.0 * spec3.lambda000)))


# ---------------------------------------------------------------------------
# Palm distribution of the gradient angle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PalmAngleParams:
    """Anisotropy of the gradient of a stationary field.

    ``lambda_plus >= lambda_minus`` are the eigenvalues of the gradient
    covariance, ``kappa`` is the angle of the eigenvector of ``lambda_plus``
    (in ``(-pi/2, pi/2]``) and ``gamma2 = 1 - lambda_minus / lambda_plus``.
    """

    lambda_plus: float
    lambda_minus: float
    kappa: float
    gamma2: float

    def __post_init__(self):
        if not (0.0 <= self.gamma2 < 1.0):
            raise DomainError("gamma2 must lie in [0, 1)")
        if not (self.lambda_plus >= self.lambda_minus > 0):
            raise DomainError("need lambda_plus >= lambda_minus > 0")
        expected = 1.0 - self.lambda_minus / self.lambda_plus
        if abs(expected - self.gamma2) > 1e-12:
            raise DomainError("gamma2 is inconsistent with the eigenvalues")

    @classmethod
    def from_anisotropy(cls, gamma2: float, kappa: float) -> "PalmAngleParams":
        """Parameters with ``lambda_plus = 1`` and the given anisotropy."""
        return cls(1.0, 1.0 - gamma2, float(kappa), float(gamma2))


def palm_params_from_gradient(grad_cov) -> PalmAngleParams:
    """Eigen-structure of a 2x2 gradient covariance.

    For an isotropic covariance ``kappa`` is set to 0.
    """
    g = np.asarray(grad_cov, dtype=float)
    if g.shape != (2, 2):
        raise DomainError("grad_cov must be 2x2")
    g = 0.5 * (g + g.T)
    values, vectors = np.linalg.eigh(g)
    lam_minus, lam_plus = float(values[0]), float(values[1])
    if not lam_minus > 0:
        raise DegeneracyError("gradient covariance is not positive definite")
    if lam_plus - lam_minus <= 1e-14 * lam_plus:
        return PalmAngleParams(lam_plus, lam_plus, 0.0, 0.0)
    vx, vy = vectors[:, 1]
    kappa = math.atan2(vy, vx)
    if kappa <= -math.pi / 2:
        kappa += math.pi
    elif kappa > math.pi / 2:
        kappa -= math.pi
    gamma2 = 1.0 - lam_minus / lam_plus
    return PalmAngleParams(lam_plus, lam_minus, kappa, gamma2)


def palm_angle_density(params: PalmAngleParams, phi):
    """Angle density ``(1 - gamma2 sin^2(phi - kappa))^{-1/2} / (4 K(gamma2))``.

    This is the closed form as usually stated. It integrates to one on
    ``[-pi, pi]`` but does not match the length-weighted angle distribution
    observed on simulated level curves; see :func:`palm_angle_density_exact`.
    """
    m = params.gamma2
    phi = np.asarray(phi, dtype=float)
    s = np.sin(phi - params.kappa)
    out = (1.0 - m * s * s) ** -0.5 / (4.0 * elliptic_k(m))
    return out if out.ndim else float(out)


def palm_angle_density_exact(params: PalmAngleParams, phi):
    """Length-weighted density of the gradient angle along a level curve.

    The level set is independent of the gradient at the same point, so the
    angle density is proportional to ``E[|grad W|; angle in dphi]``. With the
    gradient covariance ``G``, polar integration gives a factor
    ``(e' G^{-1} e)^{-3/2}`` for the unit direction ``e``:

        g(phi) = (1 - gamma2) (1 - gamma2 cos^2(phi - kappa))^{-3/2} / (4 E(gamma2)),

    with ``E`` the complete elliptic integral of the second kind. The mode is
    at ``kappa``, the direction of larger gradient variance.
    """
    m = params.gamma2
    phi = np.asarray(phi, dtype=float)
    c = np.cos(phi - params.kappa)
    out = (1.0 - m) * (1.0 - m * c * c) ** -1.5 / (4.0 * elliptic_e(m))
    return out if out.ndim else float(out)


def palm_bin_masses(params: PalmAngleParams, edges, density: Optional[Callable] = None,
                    quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """Probability of each angle bin ``[edges[i], edges[i+1])`` under a density."""
    fn = density or palm_angle_density
    edges = np.asarray(edges, dtype=float)
    return np.array([
        integrate_adaptive(lambda p: float(fn(params, p)), lo, hi, quad)[0]
        for lo, hi in zip(edges[:-1], edges[1:])
    ])


# ---------------------------------------------------------------------------
# Dislocations of isotropic waves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IsotropicWaveModel:
    """Unit-variance isotropic field with covariance ``rho(|x - x'|)``.

    Attributes
    ----------
    rho, rho1, rho2 : callable
        ``rho`` and its first two radial derivatives (vectorised in ``r``).
    lambda2 : float
        ``-rho''(0)``, the variance of each partial derivative.
    Pi : callable, optional
        Radial spectral density, ``rho(r) = int J0(k r) Pi(k) dk``.
    name : str
        Label echoed in reports.
    params : dict
        Constructor parameters.
    """

    rho: Callable
    rho1: Callable
    rho2: Callable
    lambda2: float
    Pi: Optional[Callable] = None
    name: str = "custom"
    params: dict = None

    def __post_init__(self):
        if not self.lambda2 > 0:
            raise DomainError("lambda2 must be positive")
        if abs(float(self.rho(0.0)) - 1.0) > 1e-8:
            raise DomainError("the wave model must have unit variance, rho(0) = 1")
        grid = np.linspace(1e-3, 60.0, 600) / math.sqrt(self.lambda2)
        if np.any(np.abs(self.rho(grid)) > 1.0 + 1e-10):
            raise DomainError("|rho(r)| exceeds 1 on the test grid")


def ring_spectrum_model(k0: float = 1.0) -> IsotropicWaveModel:
    """Monochromatic waves: all spectral mass at wavenumber ``k0``.

    ``rho = J0(k0 r)``, ``rho' = -k0 J1(k0 r)``, ``rho'' = -k0^2 (J0 - J1/(k0 r))``
    and ``lambda2 = k0^2 / 2``.
    """
    if not k0 > 0:
        raise DomainError("k0 must be positive")

    def rho(r):
        return special.j0(k0 * np.asarray(r, dtype=float))

    def rho1(r):
        return -k0 * special.j1(k0 * np.asarray(r, dtype=float))

    def rho2(r):
        x = k0 * np.asarray(r, dtype=float)
        safe = np.where(x == 0.0, 1.0, x)
        ratio = np.where(x == 0.0, 0.5, special.j1(safe) / safe)
        return -k0 * k0 * (special.j0(x) - ratio)

    return IsotropicWaveModel(rho=rho, rho1=rho1, rho2=rho2, lambda2=0.5 * k0 * k0,
                              Pi=None, name="ring", params={"k0": float(k0)})


def gaussian_wave_model(ell: float = 1.0) -> IsotropicWaveModel:
    """Isotropic Gaussian covariance ``exp(-r^2 / (2 ell^2))``.

    The radial spectral density is ``ell^2 k exp(-k^2 ell^2 / 2)`` and
    ``lambda2 = 1 / ell^2``.
    """
    if not ell > 0:
        raise DomainError("ell must be positive")
    inv = 1.0 / (ell * ell)

    def rho(r):
        r = np.asarray(r, dtype=float)
        return np.exp(-0.5 * r * r * inv)

    def rho1(r):
        r = np.asarray(r, dtype=float)
        return -r * inv * np.exp(-0.5 * r * r * inv)

    def rho2(r):
        r = np.asarray(r, dtype=float)
        return (r * r * inv - 1.0) * inv * np.exp(-0.5 * r * r * inv)

    def Pi(k):
        k = np.asarray(k, dtype=float)
        return ell * ell * k * np.exp(-0.5 * k * k * ell * ell)

    return IsotropicWaveModel(rho=rho, rho1=rho1, rho2=rho2, lambda2=inv, Pi=Pi,
                              name="gaussian", params={"ell": float(ell)})


def radial_spectrum_model(Pi: Callable, k_max: float,
                          quad: QuadratureSpec = DEFAULT_QUAD) -> IsotropicWaveModel:
    """Wave model from a radial spectral density supported on ``[0, k_max]``.

    ``Pi`` is rescaled to unit mass. The covariance and its derivatives are
    Hankel transforms evaluated by adaptive quadrature:
    ``rho' = -int k J1(k r) Pi dk`` and
    ``rho'' = -int k^2 (J0(k r) - J1(k r) / (k r)) Pi dk``.
    """
    mass, _ = integrate_adaptive(lambda k: float(Pi(k)), 0.0, k_max, quad)
    if not mass > 0:
        raise DomainError("spectral density has no mass")
    lam2, _ = integrate_adaptive(lambda k: 0.5 * k * k * float(Pi(k)) / mass, 0.0, k_max, quad)

    def transform(kernel):
        def evaluate(r):
            r_arr = np.atleast_1d(np.asarray(r, dtype=float))
            vals = np.array([
                integrate_adaptive(lambda k, rr=rr: kernel(k, rr) * float(Pi(k)) / mass,
                                   0.0, k_max, quad, points=None)[0]
                for rr in r_arr.ravel()
            ]).reshape(r_arr.shape)
            return vals if np.ndim(r) else float(vals[0])
        return evaluate

    def k_rho2(k, r):
        x = k * r
        ratio = 0.5 if x == 0.0 else special.j1(x) / x
        return -k * k * (special.j0(x) - ratio)

    return IsotropicWaveModel(
        rho=transform(lambda k, r: special.j0(k * r)),
        rho1=transform(lambda k, r: -k * special.j1(k * r)),
        rho2=transform(k_rho2),
        lambda2=lam2,
        Pi=lambda k: Pi(k) / mass,
        name="radial",
        params={"k_max": float(k_max)},
    )


def dislocation_density(lambda2: float) -> float:
    """Expected number of dislocations per unit area, ``lambda2 / (2 pi)``."""
    if not lambda2 > 0:
        raise DomainError("lambda2 must be positive")
    return lambda2 / (2.0 * math.pi)


@dataclass(frozen=True)
class DislocationLocalQuantities:
    """Covariance summaries at separation ``r`` entering the pair correlation."""

    r: float
    C: float
    E: float
    H: float
    F: float
    F0: float
    A1: float
    A2: float
    Z: float

    def Z1(self, t):
        return self.A2 / (1.0 + self.Z * np.asarray(t) ** 2)

    def Z2(self, t):
        t2 = np.asarray(t) ** 2
        return (1.0 + t2) / (1.0 + self.Z * t2)


def local_quantities(r: float, C: float, E: float, H: float, F: float, F0: float,
                     z_tol: float = 1e-9) -> DislocationLocalQuantities:
    """Assemble ``A1``, ``A2`` and ``Z`` from covariance values at separation r.

    ``C = rho(r)``, ``E = rho'(r)``, ``H = -E / r``, ``F = -rho''(r)`` and
    ``F0 = -rho''(0)``. ``Z`` is a product of two quantities in ``[0, 1]``;
    rounding may push it slightly below zero, which is clamped when the
    excursion is below ``z_tol``.
    """
    one_c2 = 1.0 - C * C
    if not one_c2 > 0:
        raise DegeneracyError(f"rho(r)^2 = 1 at r = {r!r}; separation is degenerate")
    cond_var = F0 - E * E / one_c2
    if not cond_var > 0:
        raise DegeneracyError(f"conditional slope variance vanishes at r = {r!r}")
    A1 = F0 * cond_var
    A2 = (H / F0) * (F * one_c2 - E * E * C) / (F0 * one_c2 - E * E)
    cond_cov = F - E * E * C / one_c2
    Z = ((F0 * F0 - H * H) / (F0 * F0)) * (1.0 - (cond_cov / cond_var) ** 2)
    if Z < 0.0:
        if Z < -z_tol:
            raise DomainError(f"Z = {Z:.3e} < 0 at r = {r!r}")
        Z = 0.0
    return DislocationLocalQuantities(float(r), float(C), float(E), float(H), float(F),
                                      float(F0), float(A1), float(A2), float(Z))


def dislocation_local(model: IsotropicWaveModel, r: float) -> DislocationLocalQuantities:
    """Covariance summaries of ``model`` at separation ``r > 0``."""
    if not r > 0:
        raise DomainError("separation r must be positive")
    C = float(model.rho(r))
    E = float(model.rho1(r))
    F = -float(model.rho2(r))
    return local_quantities(r, C, E, -E / r, F, model.lambda2)


def _pair_integral(q: DislocationLocalQuantities, quad: QuadratureSpec) -> float:
    """``int_R t^{-2} [1 - (Z2 - 2 Z1^2 t^2) / ((1 + t^2) Z2 sqrt(Z2 - Z1^2 t^2))] dt``.

    At ``t -> 0`` the bracket behaves as ``t^2 (3 - Z + 3 A2^2) / 2``: with
    ``f = (Z2 - 2 Z1^2 t^2) / ((1 + t^2) Z2 sqrt(Z2 - Z1^2 t^2))``, ``f(0) = 1``
    and ``d log f / d(t^2) = -1 - (1 - Z) / 2 - 3 A2^2 / 2`` at 0, using
    ``Z2 = 1 + (1 - Z) t^2 + O(t^4)`` and ``Z1 = A2 + O(t^2)``.
    """
    limit = 0.5 * (3.0 - q.Z + 3.0 * q.A2 * q.A2)
    guard = 1e-4

    def f(t):
        if t < guard:
            return limit
        t2 = t * t
        z1 = q.A2 / (1.0 + q.Z * t2)
        z2 = (1.0 + t2) / (1.0 + q.Z * t2)
        rad = z2 - z1 * z1 * t2
        if not rad > 0:
            raise DomainError(
                f"Z2 - Z1^2 t^2 = {rad:.3e} <= 0 at r = {q.r!r}, t = {t!r}"
            )
        return (1.0 - (z2 - 2.0 * z1 * z1 * t2) / ((1.0 + t2) * z2 * math.sqrt(rad))) / t2

    half, _ = integrate_adaptive(f, 0.0, math.inf, quad.with_policy("power"), scale=1.0)
    return 2.0 * half


def dislocation_correlation_from_local(q: DislocationLocalQuantities,
                                       quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Pair correlation ``A(r)`` from precomputed local quantities."""
    return q.A1 / (4.0 * math.pi ** 3 * (1.0 - q.C * q.C)) * _pair_integral(q, quad)


def dislocation_correlation(model: IsotropicWaveModel, r: float,
                            quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Second factorial moment density ``A(r)`` of the dislocation point process."""
    return dislocation_correlation_from_local(dislocation_local(model, r), quad)


def normalized_dislocation_correlation(model: IsotropicWaveModel, r: float,
                                       quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``A(r) / d2^2``; tends to 1 when the two sites decorrelate."""
    d2 = dislocation_density(model.lambda2)
    return dislocation_correlation(model, r, quad) / (d2 * d2)


def dislocation_correlation_profile(model: IsotropicWaveModel, radii,
                                    quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """``A(r) / d2^2`` on a grid of separations."""
    return np.array([normalized_dislocation_correlation(model, float(r), quad) for r in radii])
