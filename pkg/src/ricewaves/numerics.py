"""Special functions, quadrature and small symmetric linear algebra.

Everything here is shared plumbing for the Rice-formula modules. The adaptive
integrator wraps QUADPACK (through :func:`scipy.integrate.quad`) and adds two
policies for semi-infinite ranges. The symmetric eigensolver wraps LAPACK
(through :func:`numpy.linalg.eigh`) and pins down ordering and signs so that
results are reproducible across platforms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureError

SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

# exp(-x^2/2) drops below 1e-16 of its peak beyond this many scale units.
GAUSSIAN_CUTOFF = math.sqrt(2.0 * math.log(1e16))

TAIL_POLICIES = ("gaussian", "power")


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and tail policy for :func:`integrate_adaptive`.

    Parameters
    ----------
    abs_tol, rel_tol : float
        Target accuracy. The integrator stops once the error estimate is below
        ``max(abs_tol, rel_tol * |value|)``.
    max_subdivisions : int
        Upper bound on the number of bisected subintervals.
    truncation_policy : {"gaussian", "power"}
        How an infinite endpoint is handled. ``"gaussian"`` assumes the
        integrand carries a factor ``exp(-(x - center)**2 / (2 scale**2))`` and
        cuts the range where that factor falls below 1e-16 of its peak.
        ``"power"`` maps ``[a, inf)`` onto ``[0, 1)`` with
        ``x = a + scale * u / (1 - u)``, which suits algebraic tails.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    truncation_policy: str = "power"

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if int(self.max_subdivisions) < 1:
            raise DomainError("max_subdivisions must be a positive integer")
        if self.truncation_policy not in TAIL_POLICIES:
            raise DomainError(
                f"truncation_policy must be one of {TAIL_POLICIES}, "
                f"got {self.truncation_policy!r}"
            )

    def with_policy(self, policy: str) -> "QuadratureSpec":
        """Return a copy using another tail policy."""
        return QuadratureSpec(self.abs_tol, self.rel_tol, self.max_subdivisions, policy)


DEFAULT_QUAD = QuadratureSpec()


def _quad_finite(f, a, b, spec, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(
            f,
            a,
            b,
            epsabs=spec.abs_tol,
            epsrel=spec.rel_tol,
            limit=int(spec.max_subdivisions),
            points=points,
            full_output=1,
        )
    value, err = float(out[0]), float(out[1])
    tol = max(spec.abs_tol, spec.rel_tol * abs(value))
    if not math.isfinite(value):
        raise QuadratureError("integrand produced a non-finite value", value, err)
    # QUADPACK attaches a message only when it reports a problem; a report
    # is tolerated when the error estimate still meets the target.
    if len(out) > 3 and err > tol:
        raise QuadratureError(
            f"adaptive quadrature on [{a:g}, {b:g}] did not converge "
            f"(estimate {value:.12g}, error {err:.3g}): {out[3]}",
            value,
            err,
        )
    return value, err


def integrate_adaptive(f, a, b, spec: QuadratureSpec = DEFAULT_QUAD, *,
                       scale: float = 1.0, center: float = 0.0, points=None):
    """Adaptive Gauss-Kronrod quadrature of a scalar function.

    Parameters
    ----------
    f : callable
        Scalar integrand. It must be finite on the range; removable
        singularities are the caller's job.
    a, b : float
        Limits, possibly infinite.
    spec : QuadratureSpec
        Tolerances and tail policy.
    scale, center : float
        Length scale and centre used by the tail policy.
    points : sequence of float, optional
        Interior break points, only used on finite ranges.

    Returns
    -------
    value, err_est : float
        Integral estimate and its error estimate.

    Raises
    ------
    QuadratureError
        When the tolerance is not reached; the best estimate is attached.
    """
    a = float(a)
    b = float(b)
    if a == b:
        return 0.0, 0.0
    if a > b:
        value, err = integrate_adaptive(f, b, a, spec, scale=scale, center=center,
                                        points=points)
        return -value, err
    if scale <= 0:
        raise DomainError("tail scale must be positive")
    a_inf = math.isinf(a)
    b_inf = math.isinf(b)
    if not (a_inf or b_inf):
        pts = None
        if points is not None:
            pts = [p for p in points if a < p < b] or None
        return _quad_finite(f, a, b, spec, pts)

    if spec.truncation_policy == "gaussian":
        lo = center - GAUSSIAN_CUTOFF * scale if a_inf else a
        hi = center + GAUSSIAN_CUTOFF * scale if b_inf else b
        if lo >= hi:
            return 0.0, 0.0
        pts = None
        if points is not None:
            pts = [p for p in points if lo < p < hi] or None
        return _quad_finite(f, lo, hi, spec, pts)

    # Power tails: split at a finite point and compactify each half-line.
    if a_inf and b_inf:
        left = integrate_adaptive(f, a, center, spec, scale=scale, center=center)
        right = integrate_adaptive(f, center, b, spec, scale=scale, center=center)
        return left[0] + right[0], left[1] + right[1]
    if b_inf:
        def g(u):
            one_minus = 1.0 - u
            return f(a + scale * u / one_minus) * scale / (one_minus * one_minus)
    else:
        def g(u):
            one_minus = 1.0 - u
            return f(b - scale * u / one_minus) * scale / (one_minus * one_minus)
    return _quad_finite(g, 0.0, 1.0, spec)


@lru_cache(maxsize=32)
def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1] (cached, read-only)."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def std_normal_pdf(x):
    """Standard Gaussian density."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / SQRT_2PI
    return out if out.ndim else float(out)


def std_normal_cdf(x):
    """Standard Gaussian distribution function, computed from erfc."""
    out = special.ndtr(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def std_normal_pdf_cdf(x):
    """Return ``(phi(x), Phi(x))`` for the standard Gaussian."""
    return std_normal_pdf(x), std_normal_cdf(x)


def _elliptic_parameter(m) -> float:
    m = float(m)
    if not (0.0 <= m < 1.0) or math.isnan(m):
        raise DomainError(f"elliptic parameter must lie in [0, 1), got {m!r}")
    return m


def elliptic_k(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter convention.

    ``K(m) = int_0^{pi/2} (1 - m sin^2 t)^{-1/2} dt`` for ``0 <= m < 1``
    (Cephes routine through :func:`scipy.special.ellipk`).
    """
    return float(special.ellipk(_elliptic_parameter(m)))


def elliptic_e(m: float) -> float:
    """Complete elliptic integral of the second kind, parameter convention.

    ``E(m) = int_0^{pi/2} (1 - m sin^2 t)^{1/2} dt`` for ``0 <= m < 1``
    (Cephes routine through :func:`scipy.special.ellipe`).
    """
    return float(special.ellipe(_elliptic_parameter(m)))


def _symmetrize3(M):
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise DomainError(f"expected a 3x3 matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix has non-finite entries")
    return 0.5 * (M + M.T)


def eig_sym3(M):
    """Eigen-decomposition of a symmetric 3x3 matrix.

    Returns
    -------
    values : ndarray, shape (3,)
        Eigenvalues in descending order.
    P : ndarray, shape (3, 3)
        Orthogonal matrix whose columns are the eigenvectors, with the first
        nonzero component of each column made positive.
    """
    S = _symmetrize3(M)
    values, P = np.linalg.eigh(S)
    order = np.argsort(values)[::-1]
    values = values[order]
    P = P[:, order].copy()
    for j in range(3):
        col = P[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-14)
        if nz.size and col[nz[0]] < 0:
            P[:, j] = -col
    return values, P


def sym_sqrt3(M, tol: float = 1e-12):
    """Symmetric positive semidefinite square root of a 3x3 matrix.

    Eigenvalues in ``[-tol * max(1, |M|), 0)`` are clamped to zero; anything
    more negative is rejected.
    """
    S = _symmetrize3(M)
    values, P = eig_sym3(S)
    floor = -tol * max(1.0, float(np.max(np.abs(values))))
    if values.min() < floor:
        raise DomainError(
            f"matrix is not positive semidefinite (eigenvalue {values.min():.3e})"
        )
    root = P @ np.diag(np.sqrt(np.clip(values, 0.0, None))) @ P.T
    return 0.5 * (root + root.T)
