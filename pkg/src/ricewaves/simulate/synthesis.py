"""Spectral synthesis of stationary Gaussian paths and fields.

A field is a finite random spectral sum

    W(x) = sum_j sqrt(w_j) (xi_j cos(omega_j . x) + eta_j sin(omega_j . x)),

with independent standard normal ``xi_j``, ``eta_j``. Its covariance is
``sum_j w_j cos(omega_j . z)`` and every derivative is available analytically
from the same coefficients.

Two node layouts are supported.

* Harmonic lattices. The frequencies are the multiples of ``2 pi / P`` of a
  period ``P`` and the weights are the discrete Fourier coefficients of the
  covariance sampled on the grid. On grid points the synthesised field then
  has *exactly* the target covariance at every lag shorter than
  ``P - support``, and the whole grid is produced by one FFT.
* Explicit node lists (rings of directions, a single node, ...), evaluated by
  direct summation.

Random numbers come from :class:`numpy.random.Generator` (PCG64) streams
spawned from a :class:`numpy.random.SeedSequence`; see
:mod:`ricewaves.simulate.ensemble`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import DomainError
from ..spectral_models import CovarianceModel1D, Spectrum2D

MOMENT_MATCH_RTOL = 1e-3


def _rng(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def _next_pow2(n: int) -> int:
    return 1 << max(1, int(math.ceil(math.log2(max(int(n), 2)))))


# ---------------------------------------------------------------------------
# One dimension
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthesisPlan1D:
    """Spectral nodes and sampling grid for 1D paths.

    Attributes
    ----------
    frequencies, weights : ndarray
        Non-negative angular frequencies and spectral masses.
    start, step, count : float, float, int
        Sampling grid ``start + step * arange(count)``.
    seed : int
        Default seed for :func:`synthesize_path_1d`.
    n_fft : int
        FFT length when the nodes form the harmonic lattice of period
        ``n_fft * step`` (0 for explicit nodes).
    realized : dict
        Moments of the discretised spectrum: ``lambda0``, ``lambda2``,
        ``lambda4`` (and targets when known).
    """

    frequencies: np.ndarray
    weights: np.ndarray
    start: float
    step: float
    count: int
    seed: int = 0
    n_fft: int = 0
    realized: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        f = np.asarray(self.frequencies, dtype=float)
        if w.shape != f.shape or w.ndim != 1:
            raise DomainError("frequencies and weights must be 1D arrays of equal length")
        if np.any(w < 0):
            raise DomainError("spectral weights must be non-negative")
        if not (self.step > 0 and self.count >= 2):
            raise DomainError("grid needs a positive step and at least two points")
        if self.n_fft and self.count > self.n_fft:
            raise DomainError("grid is longer than the FFT period")
        realized = dict(self.realized)
        realized.setdefault("lambda0", float(np.sum(w)))
        realized.setdefault("lambda2", float(np.sum(w * f ** 2)))
        realized.setdefault("lambda4", float(np.sum(w * f ** 4)))
        object.__setattr__(self, "realized", realized)

    @property
    def grid(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    @property
    def period(self) -> float:
        return self.n_fft * self.step if self.n_fft else math.inf


def build_plan_1d(cov: CovarianceModel1D, window, step: float, seed: int = 0,
                  margin: Optional[float] = None, check_moments: bool = True) -> SynthesisPlan1D:
    """Harmonic-lattice plan reproducing ``cov`` exactly on the sampling grid.

    Parameters
    ----------
    cov : CovarianceModel1D
        Target covariance.
    window : (float, float)
        Interval that must be covered by the grid.
    step : float
        Grid step.
    seed : int
        Default seed stored in the plan.
    margin : float, optional
        Extra period length beyond the window so that points of the window are
        never correlated through the periodic wrap. Defaults to ``delta`` for
        lag-limited covariances and ``14 / sqrt(lambda2)`` otherwise.
    check_moments : bool
        Raise when the realised ``lambda2`` or ``lambda4`` misses the target by
        more than 0.1 %.
    """
    a, b = (float(v) for v in window)
    if not b > a:
        raise DomainError("window must have positive length")
    if not step > 0:
        raise DomainError("step must be positive")
    l0 = float(cov.gamma(0.0))
    l2 = -float(cov.gamma2(0.0))
    l4 = float(cov.gamma4(0.0))
    if margin is None:
        margin = cov.delta if math.isfinite(cov.delta) else 14.0 / math.sqrt(l2)
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    if a + (count - 1) * step < b - 1e-9 * step:
        count += 1
    n_fft = _next_pow2(count + int(math.ceil(margin / step)) + 1)
    lags = np.arange(n_fft) * step
    lags = np.minimum(lags, n_fft * step - lags)
    c = np.fft.rfft(cov.gamma(lags)).real / n_fft
    c = np.clip(c, 0.0, None)
    weights = 2.0 * c
    weights[0] = c[0]
    weights[-1] = c[-1]
    freqs = 2.0 * math.pi * np.arange(weights.size) / (n_fft * step)
    realized = {
        "lambda0": float(np.sum(weights)),
        "lambda2": float(np.sum(weights * freqs ** 2)),
        "lambda4": float(np.sum(weights * freqs ** 4)),
        "target_lambda0": l0,
        "target_lambda2": l2,
        "target_lambda4": l4,
    }
    if check_moments:
        for name, target in (("lambda2", l2), ("lambda4", l4)):
            if abs(realized[name] - target) > MOMENT_MATCH_RTOL * target:
                raise DomainError(
                    f"realised {name} = {realized[name]:.6g} misses the target "
                    f"{target:.6g} by more than 0.1%; reduce the step"
                )
    return SynthesisPlan1D(freqs, weights, a, step, count, int(seed), n_fft, realized)


def plan_from_nodes_1d(frequencies, weights, window, step: float, seed: int = 0) -> SynthesisPlan1D:
    """Plan with explicit spectral nodes, evaluated by direct summation."""
    a, b = (float(v) for v in window)
    count = int(round((b - a) / step)) + 1
    return SynthesisPlan1D(np.asarray(frequencies, dtype=float), np.asarray(weights, dtype=float),
                           a, float(step), count, int(seed), 0)


@dataclass(frozen=True)
class SampledPath1D:
    """Grid samples of a synthesised path and its derivatives.

    ``derivs[m]`` holds the samples of ``W^{(m)}``. :meth:`evaluate` gives
    the analytic path anywhere from the same random coefficients.
    """

    x: np.ndarray
    derivs: tuple
    plan: SynthesisPlan1D
    coeffs: np.ndarray

    def evaluate(self, x, order: int = 0):
        """Direct-sum evaluation of ``W^{(order)}`` at arbitrary points."""
        return self.evaluate_orders(x, (order,))[0]

    def evaluate_orders(self, x, orders):
        """Several derivative orders at the same points, sharing the phases."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        f = self.plan.frequencies
        active = self.plan.weights > 0
        f = f[active]
        C = np.stack([self.coeffs[active] * (1j * f) ** m for m in orders], axis=1)
        out = np.empty((len(orders), x.size))
        chunk = max(1, 2_000_000 // max(f.size, 1))
        for i in range(0, x.size, chunk):
            xs = x[i:i + chunk]
            out[:, i:i + chunk] = np.real(np.exp(1j * np.outer(xs, f)) @ C).T
        return out


def synthesize_path_1d(plan: SynthesisPlan1D, seed=None, orders=(0, 1, 2)) -> SampledPath1D:
    """Draw one path and sample the requested derivatives on the plan grid.

    Parameters
    ----------
    plan : SynthesisPlan1D
        Nodes and grid.
    seed : int or numpy.random.Generator, optional
        Overrides ``plan.seed``.
    orders : sequence of int
        Derivative orders to sample (0 is the path itself).
    """
    rng = _rng(plan.seed if seed is None else seed)
    n = plan.weights.size
    xi = rng.standard_normal(n)
    eta = rng.standard_normal(n)
    coeffs = np.sqrt(plan.weights) * (xi - 1j * eta)
    orders = tuple(int(o) for o in orders)
    max_order = max(orders) if orders else 0
    derivs = [None] * (max_order + 1)
    if plan.n_fft:
        N = plan.n_fft
        base = coeffs * np.exp(1j * plan.frequencies * plan.start)
        # irfft(X)[n] = (X_0 + 2 sum Re(X_j e^{2 pi i j n / N}) + X_{N/2} (-1)^n) / N
        scale = np.full(n, 0.5 * N)
        scale[0] = N
        scale[-1] = N
        for m in orders:
            X = base * (1j * plan.frequencies) ** m * scale
            derivs[m] = np.fft.irfft(X, n=N)[: plan.count]
    else:
        path = SampledPath1D(plan.grid, (), plan, coeffs)
        for m in orders:
            derivs[m] = path.evaluate(plan.grid, m)
    return SampledPath1D(plan.grid, tuple(derivs), plan, coeffs)


# ---------------------------------------------------------------------------
# Two dimensions
# ---------------------------------------------------------------------------

def anisotropic_gaussian_covariance(Q):
    """Covariance ``exp(-h' Q h / 2)`` and the matching :class:`Spectrum2D`.

    The spectral measure is ``N(0, Q)``, so the gradient covariance is ``Q`` and
    the fourth moments follow from Isserlis' formula.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (2, 2) or not np.allclose(Q, Q.T) or np.linalg.eigvalsh(Q).min() <= 0:
        raise DomainError("Q must be a symmetric positive definite 2x2 matrix")
    a, b, c = Q[0, 0], Q[0, 1], Q[1, 1]

    def gamma(hx, hy):
        return np.exp(-0.5 * (a * hx * hx + 2.0 * b * hx * hy + c * hy * hy))

    spec2 = Spectrum2D.from_moments(
        l20=a, l11=b, l02=c,
        l40=3 * a * a, l31=3 * a * b, l22=a * c + 2 * b * b, l13=3 * c * b, l04=3 * c * c,
    )
    return gamma, spec2


def rotated_anisotropy(gamma2: float, kappa: float, ell: float = 1.0) -> np.ndarray:
    """Gradient covariance with eigenvalues ``(1, 1 - gamma2) / ell^2`` and major axis at ``kappa``."""
    R = np.array([[math.cos(kappa), -math.sin(kappa)], [math.sin(kappa), math.cos(kappa)]])
    return R @ np.diag([1.0, 1.0 - gamma2]) @ R.T / (ell * ell)


@dataclass(frozen=True)
class LatticePlan2D:
    """Harmonic-lattice plan for 2D fields.

    ``weights[j1, j2]`` is the spectral mass at the signed angular frequency
    ``(kx[j1], ky[j2])``; the masses are symmetric under ``j -> -j`` and the
    Nyquist row and column are zero.
    """

    kx: np.ndarray
    ky: np.ndarray
    weights: np.ndarray
    origin: tuple
    step: float
    shape: tuple
    n_fft: tuple
    realized: dict
    seed: int = 0

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.step * np.arange(self.shape[0])

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.step * np.arange(self.shape[1])


def _realized_2d(kx, ky, w):
    KX, KY = np.meshgrid(kx, ky, indexing="ij")

    def m(a, b):
        return float(np.sum(w * KX ** a * KY ** b))

    return {
        "lambda00": m(0, 0), "lambda20": m(2, 0), "lambda11": m(1, 1), "lambda02": m(0, 2),
        "lambda40": m(4, 0), "lambda31": m(3, 1), "lambda22": m(2, 2), "lambda13": m(1, 3),
        "lambda04": m(0, 4),
    }


def realized_spectrum2d(realized: dict) -> Spectrum2D:
    """:class:`Spectrum2D` built from a plan's realised moments."""
    r = realized
    return Spectrum2D.from_moments(r["lambda20"], r["lambda11"], r["lambda02"], r["lambda40"],
                                   r["lambda31"], r["lambda22"], r["lambda13"], r["lambda04"])


def build_lattice_plan_2d(gamma: Callable, window, step: float, margin: float,
                          target: Optional[Spectrum2D] = None, seed: int = 0) -> LatticePlan2D:
    """Lattice plan reproducing the covariance ``gamma(hx, hy)`` on the grid.

    Parameters
    ----------
    gamma : callable
        Vectorised covariance of the lag components.
    window : ((x0, x1), (y0, y1))
        Rectangle that the sampling grid must cover.
    step : float
        Grid step in both directions.
    margin : float
        Lag beyond which the covariance is negligible; added to the period.
    target : Spectrum2D, optional
        When given, realised second and fourth moments must match it to 0.1 %.
    """
    (x0, x1), (y0, y1) = window
    nx = int(math.ceil((x1 - x0) / step - 1e-9)) + 1
    ny = int(math.ceil((y1 - y0) / step - 1e-9)) + 1
    N1 = _next_pow2(nx + int(math.ceil(margin / step)) + 1)
    N2 = _next_pow2(ny + int(math.ceil(margin / step)) + 1)
    lx = np.arange(N1) * step
    ly = np.arange(N2) * step
    lx = np.where(lx > 0.5 * N1 * step, lx - N1 * step, lx)
    ly = np.where(ly > 0.5 * N2 * step, ly - N2 * step, ly)
    LX, LY = np.meshgrid(lx, ly, indexing="ij")
    c = np.fft.fft2(gamma(LX, LY)).real / (N1 * N2)
    c = np.clip(c, 0.0, None)
    c[N1 // 2, :] = 0.0
    c[:, N2 // 2] = 0.0
    kx = 2.0 * math.pi * np.fft.fftfreq(N1, d=step)
    ky = 2.0 * math.pi * np.fft.fftfreq(N2, d=step)
    realized = _realized_2d(kx, ky, c)
    if target is not None:
        pairs = {
            "lambda20": target.grad_cov[0, 0], "lambda02": target.grad_cov[1, 1],
            "lambda40": target.hess_cov[0, 0], "lambda04": target.hess_cov[1, 1],
            "lambda22": target.hess_cov[2, 2],
        }
        for name, value in pairs.items():
            if abs(realized[name] - value) > MOMENT_MATCH_RTOL * abs(value):
                raise DomainError(
                    f"realised {name} = {realized[name]:.6g} misses target {value:.6g}"
                )
    return LatticePlan2D(kx, ky, c, (float(x0), float(y0)), float(step), (nx, ny), (N1, N2),
                         realized, int(seed))


@dataclass(frozen=True)
class DirectPlan2D:
    """Explicit 2D spectral nodes ``omega_j`` with masses ``w_j``."""

    nodes: np.ndarray
    weights: np.ndarray
    realized: dict

    @property
    def spectrum(self) -> Spectrum2D:
        return realized_spectrum2d(self.realized)


def ring_plan_2d(k0: float = 1.0, directions: int = 64) -> DirectPlan2D:
    """Equal masses on ``directions`` wave vectors of length ``k0`` in ``[0, pi)``.

    The covariance approximates ``J0(k0 r)``, with ``lambda20 = lambda02 =
    k0^2 / 2`` and ``lambda11 = 0`` exactly for ``directions >= 3``.
    """
    if directions < 3:
        raise DomainError("need at least three directions")
    theta = math.pi * (np.arange(directions) + 0.5) / directions
    nodes = k0 * np.column_stack([np.cos(theta), np.sin(theta)])
    w = np.full(directions, 1.0 / directions)
    return DirectPlan2D(nodes, w, _realized_nodes(nodes, w))


def _realized_nodes(nodes, w):
    a = nodes[:, 0]
    b = nodes[:, 1]

    def m(p, q):
        return float(np.sum(w * a ** p * b ** q))

    return {
        "lambda00": m(0, 0), "lambda20": m(2, 0), "lambda11": m(1, 1), "lambda02": m(0, 2),
        "lambda40": m(4, 0), "lambda31": m(3, 1), "lambda22": m(2, 2), "lambda13": m(1, 3),
        "lambda04": m(0, 4),
    }


def direct_plan_2d(nodes, weights) -> DirectPlan2D:
    nodes = np.asarray(nodes, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if nodes.ndim != 2 or nodes.shape[1] != 2 or weights.shape != (nodes.shape[0],):
        raise DomainError("nodes must be (M, 2) and weights (M,)")
    if np.any(weights < 0):
        raise DomainError("weights must be non-negative")
    return DirectPlan2D(nodes, weights, _realized_nodes(nodes, weights))


FIELD_KEYS = {"W": (0, 0), "Wx": (1, 0), "Wy": (0, 1), "Wxx": (2, 0), "Wxy": (1, 1), "Wyy": (0, 2)}


@dataclass(frozen=True)
class Field2D:
    """Samples of a synthesised 2D field on the grid ``x`` by ``y``.

    ``values[key]`` has shape ``(len(x), len(y))`` for keys among ``W``,
    ``Wx``, ``Wy``, ``Wxx``, ``Wxy``, ``Wyy``. :meth:`evaluate` gives the
    analytic field and derivatives at arbitrary points when the synthesis
    supports it.
    """

    x: np.ndarray
    y: np.ndarray
    values: dict
    nodes: Optional[np.ndarray] = None
    coeffs: Optional[np.ndarray] = None

    @property
    def step(self) -> float:
        return float(self.x[1] - self.x[0])

    def evaluate(self, points, keys=("Wx", "Wy", "Wxx", "Wxy", "Wyy")):
        """Direct-sum evaluation at ``points`` of shape ``(n, 2)``."""
        if self.nodes is None:
            raise DomainError("this field has no analytic evaluator")
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        phase = np.exp(1j * (pts @ self.nodes.T))
        out = {}
        for key in keys:
            p, q = FIELD_KEYS[key]
            factor = (1j * self.nodes[:, 0]) ** p * (1j * self.nodes[:, 1]) ** q
            out[key] = np.real(phase @ (self.coeffs * factor))
        return out


def synthesize_direct_2d(plan: DirectPlan2D, x, y, seed=None,
                         keys=("W", "Wx", "Wy")) -> Field2D:
    """Field from explicit nodes, evaluated on the grid by separable products."""
    rng = _rng(seed)
    M = plan.weights.size
    coeffs = np.sqrt(plan.weights) * (rng.standard_normal(M) - 1j * rng.standard_normal(M))
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    U = np.exp(1j * np.outer(x, plan.nodes[:, 0]))
    V = np.exp(1j * np.outer(y, plan.nodes[:, 1]))
    values = {}
    for key in keys:
        p, q = FIELD_KEYS[key]
        factor = (1j * plan.nodes[:, 0]) ** p * (1j * plan.nodes[:, 1]) ** q
        values[key] = np.real((U * (coeffs * factor)) @ V.T)
    return Field2D(x, y, values, plan.nodes, coeffs)


def synthesize_lattice_2d(plan: LatticePlan2D, seed=None, keys=("W", "Wx", "Wy"),
                          pair: bool = False, oversample: int = 1, analytic: bool = False):
    """Field (or an independent pair of fields) from a lattice plan.

    One complex FFT of ``sum_j sqrt(c_j) zeta_j exp(i omega_j . x)`` with complex
    standard normal ``zeta_j`` yields two independent real fields with the
    target covariance, its real and imaginary parts.

    Parameters
    ----------
    pair : bool
        Return ``(real_field, imag_field)`` instead of the real field only.
    oversample : int
        Evaluate on a grid ``oversample`` times finer (same random field).
    analytic : bool
        Attach a direct-sum evaluator restricted to nodes with non-negligible
        mass (expensive for broad spectra).
    """
    rng = _rng(plan.seed if seed is None else seed)
    N1, N2 = plan.n_fft
    zeta = rng.standard_normal((N1, N2)) + 1j * rng.standard_normal((N1, N2))
    amp = np.sqrt(plan.weights) * zeta
    os_ = int(oversample)
    if os_ < 1:
        raise DomainError("oversample must be a positive integer")
    KX, KY = np.meshgrid(plan.kx, plan.ky, indexing="ij")
    base = amp * np.exp(1j * (KX * plan.origin[0] + KY * plan.origin[1]))
    M1, M2 = N1 * os_, N2 * os_
    nx = (plan.shape[0] - 1) * os_ + 1
    ny = (plan.shape[1] - 1) * os_ + 1
    re_vals, im_vals = {}, {}
    for key in keys:
        p, q = FIELD_KEYS[key]
        spec = base * (1j * KX) ** p * (1j * KY) ** q
        if os_ > 1:
            padded = np.zeros((M1, M2), dtype=complex)
            i1 = np.fft.fftfreq(N1, d=1.0 / N1).astype(int) % M1
            i2 = np.fft.fftfreq(N2, d=1.0 / N2).astype(int) % M2
            padded[np.ix_(i1, i2)] = spec
            spec = padded
        Z = np.fft.ifft2(spec) * (M1 * M2)
        Z = Z[:nx, :ny]
        re_vals[key] = np.ascontiguousarray(Z.real)
        im_vals[key] = np.ascontiguousarray(Z.imag)
    step = plan.step / os_
    x = plan.origin[0] + step * np.arange(nx)
    y = plan.origin[1] + step * np.arange(ny)
    nodes = coeffs_re = coeffs_im = None
    if analytic:
        mask = plan.weights > 1e-14 * plan.weights.max()
        nodes = np.column_stack([KX[mask], KY[mask]])
        # Absolute-position amplitudes; Im Z = Re(-i Z) for the second field.
        coeffs_re = base[mask] * np.exp(-1j * (KX[mask] * plan.origin[0] + KY[mask] * plan.origin[1]))
        coeffs_im = -1j * coeffs_re
    real_field = Field2D(x, y, re_vals, nodes, coeffs_re)
    if not pair:
        return real_field
    return real_field, Field2D(x, y, im_vals, nodes, coeffs_im)
