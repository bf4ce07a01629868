"""Geometric counting on sampled paths and fields.

* Zeros of ``W^{(m)}(x) - (offset + slope x)`` on a 1D grid.
* Common zeros of two sampled 2D functions (specular points, dislocations),
  detected by the winding number of the vector field around each cell and
  optionally located by Newton's method on the analytic synthesis.
* Level curves by marching squares, with the gradient angle and length of
  every segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DomainError
from .synthesis import Field2D, SampledPath1D

# Expected crossings per grid step above which a count is flagged.
CROSSINGS_PER_STEP_GUARD = 0.05


@dataclass(frozen=True)
class ZeroCount:
    """Result of a counting operation.

    Attributes
    ----------
    count : int
        Number of zeros found.
    flags : dict
        Diagnostic counters (refined intervals, guard violations, fallbacks).
    roots : ndarray, optional
        Located zeros, when requested.
    signed : int, optional
        Sum of the indices of the zeros (2D only).
    """

    count: int
    flags: dict = field(default_factory=dict)
    roots: Optional[np.ndarray] = None
    signed: Optional[int] = None


# ---------------------------------------------------------------------------
# One dimension
# ---------------------------------------------------------------------------

def _hermite_extremum_crosses(y0, y1, d0, d1, h):
    """Whether the cubic Hermite interpolant on an interval dips through zero.

    Used on intervals whose end values share a sign: returns True when the
    interpolant reaches the opposite sign inside the interval, which signals a
    possible pair of nearby zeros.
    """
    # Cubic p(s) on s in [0, 1] with p(0)=y0, p(1)=y1, p'(0)=h d0, p'(1)=h d1.
    a = 2 * y0 - 2 * y1 + h * d0 + h * d1
    b = -3 * y0 + 3 * y1 - 2 * h * d0 - h * d1
    c = h * d0
    # Critical points solve 3 a s^2 + 2 b s + c = 0.
    disc = 4 * b * b - 12 * a * c
    out = np.zeros(y0.shape, dtype=bool)
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    for sign in (-1.0, 1.0):
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(np.abs(a) > 1e-300, (-2 * b + sign * sq) / (6 * a),
                         np.where(np.abs(b) > 1e-300, -c / (2 * b), -1.0))
        inside = ok & (s > 0) & (s < 1)
        p = ((a * s + b) * s + c) * s + y0
        out |= inside & (np.sign(p) == -np.sign(y0)) & (y0 != 0)
    return out


def _refine_interval(path, order, slope, offset, xa, h, ya, yb, a, b, c, steps):
    """Zeros in ``[xa, xa + h]`` from the signs at the interval's critical points.

    ``a, b, c`` are the cubic Hermite coefficients on the unit interval; its
    critical points seed Newton's method on the derivative of the analytic
    path.
    """
    disc = 4 * b * b - 12 * a * c
    if disc < 0:
        return int(ya * yb < 0)
    sq = math.sqrt(disc)
    if abs(a) > 1e-300:
        s = np.array([(-2 * b - sq) / (6 * a), (-2 * b + sq) / (6 * a)])
    else:
        s = np.array([-c / (2 * b)]) if abs(b) > 1e-300 else np.array([])
    s = s[(s > 0) & (s < 1)]
    if s.size == 0:
        return int(ya * yb < 0)
    xc = xa + h * np.sort(s)
    for _ in range(steps):
        d1, d2 = path.evaluate_orders(xc, (order + 1, order + 2))
        d1 = d1 - slope
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d2 != 0, d1 / d2, 0.0)
        xc = np.clip(xc - step, xa, xa + h)
    xc = np.sort(xc)
    fc = path.evaluate_orders(xc, (order,))[0] - (offset + slope * xc)
    seq = np.concatenate([[ya], fc, [yb]])
    return int(np.count_nonzero(seq[:-1] * seq[1:] < 0)) + int(np.count_nonzero(fc == 0))


def count_zeros_1d(path: SampledPath1D, order: int = 0, slope: float = 0.0,
                   offset: float = 0.0, window=None, newton_steps: int = 6,
                   expected_rate: Optional[float] = None) -> ZeroCount:
    """Count zeros of ``W^{(order)}(x) - (offset + slope x)`` on the path grid.

    Every sign change between consecutive samples is one zero; a sample that
    is exactly zero counts once. When the derivative of the selected function
    is available (``order + 1`` sampled), each interval is also screened with
    the cubic Hermite interpolant; intervals where it hints at a hidden pair
    of zeros (or three zeros) are resolved on the analytic path: the interior
    critical points are located by Newton's method started from those of the
    interpolant, and the zeros are counted from the signs at the end points
    and at the critical points.

    Parameters
    ----------
    path : SampledPath1D
        Sampled path; ``path.derivs[order]`` must exist.
    order : int
        Derivative order of the selected function.
    slope, offset : float
        Affine function subtracted from ``W^{(order)}``. The specular selector
        is ``order=1, slope=k``.
    window : (float, float), optional
        Restrict to grid points in this interval.
    newton_steps : int
        Newton iterations per critical point in a refined interval.
    expected_rate : float, optional
        Expected zeros per unit length; when ``expected_rate * step`` exceeds
        0.05 the result carries a ``resolution_guard`` flag.
    """
    if order >= len(path.derivs) or path.derivs[order] is None:
        raise DomainError(f"derivative of order {order} was not sampled")
    x = path.x
    y = path.derivs[order] - (offset + slope * x)
    dy = None
    if order + 1 < len(path.derivs) and path.derivs[order + 1] is not None:
        dy = path.derivs[order + 1] - slope
    if window is not None:
        sel = (x >= window[0]) & (x <= window[1])
        x, y = x[sel], y[sel]
        dy = dy[sel] if dy is not None else None
    h = float(x[1] - x[0])
    exact = int(np.count_nonzero(y == 0.0))
    y0, y1 = y[:-1], y[1:]
    change = (y0 * y1) < 0
    count = int(np.count_nonzero(change)) + exact
    flags = {"refined_intervals": 0, "resolution_guard": False}
    if dy is not None:
        d0, d1 = dy[:-1], dy[1:]
        hidden = (~change) & (y0 * y1 > 0) & _hermite_extremum_crosses(y0, y1, d0, d1, h)
        # Three zeros inside a bracketing interval need two interior extrema.
        a = 2 * y0 - 2 * y1 + h * d0 + h * d1
        b = -3 * y0 + 3 * y1 - 2 * h * d0 - h * d1
        disc = 4 * b * b - 12 * a * (h * d0)
        triple = change & (disc > 0) & (np.sign(d0) != np.sign(d1)) & (np.sign(d0) != np.sign(y1 - y0))
        suspicious = np.flatnonzero(hidden | triple)
        for i in suspicious:
            n_new = _refine_interval(path, order, slope, offset, x[i], h, y0[i], y1[i],
                                     a[i], b[i], h * d0[i], newton_steps)
            count += n_new - (1 if change[i] else 0)
            flags["refined_intervals"] += 1
    if expected_rate is not None and expected_rate * h > CROSSINGS_PER_STEP_GUARD:
        flags["resolution_guard"] = True
    return ZeroCount(count=count, flags=flags)


def section_crossings(values: np.ndarray, u: float = 0.0, axis: int = 0) -> np.ndarray:
    """Crossings of level ``u`` along each grid line of a sampled 2D field.

    Returns one count per line (lines run along ``axis``).
    """
    v = np.moveaxis(np.asarray(values, dtype=float) - u, axis, -1)
    return np.count_nonzero(v[..., :-1] * v[..., 1:] < 0, axis=-1) + np.count_nonzero(v == 0, axis=-1)


# ---------------------------------------------------------------------------
# Two dimensions: common zeros
# ---------------------------------------------------------------------------

def _wrap(d):
    return (d + math.pi) % (2.0 * math.pi) - math.pi


def cell_windings(F1: np.ndarray, F2: np.ndarray) -> np.ndarray:
    """Winding number of ``(F1, F2)`` around every grid cell.

    Corners are visited counter-clockwise, ``(i, j) -> (i+1, j) -> (i+1, j+1)
    -> (i, j+1)``, and each edge contributes the angle increment wrapped to
    ``(-pi, pi]``. A cell owns a zero of index ``+-1`` exactly when its
    winding is ``+-1`` (up to pairs of zeros closer than a cell).
    """
    ang = np.arctan2(F2, F1)
    a00 = ang[:-1, :-1]
    a10 = ang[1:, :-1]
    a11 = ang[1:, 1:]
    a01 = ang[:-1, 1:]
    total = _wrap(a10 - a00) + _wrap(a11 - a10) + _wrap(a01 - a11) + _wrap(a00 - a01)
    return np.rint(total / (2.0 * math.pi)).astype(int)


def _sign_candidates(F1, F2):
    def changes(F):
        s = F > 0
        c = np.stack([s[:-1, :-1], s[1:, :-1], s[1:, 1:], s[:-1, 1:]])
        return c.any(axis=0) & ~c.all(axis=0)
    return changes(F1) & changes(F2)


def _bilinear_root(f00, f10, f11, f01, g00, g10, g11, g01):
    """Zero of the bilinear interpolants of two functions on the unit cell."""
    s, t = 0.5, 0.5
    for _ in range(30):
        f = f00 * (1 - s) * (1 - t) + f10 * s * (1 - t) + f11 * s * t + f01 * (1 - s) * t
        g = g00 * (1 - s) * (1 - t) + g10 * s * (1 - t) + g11 * s * t + g01 * (1 - s) * t
        fs = (f10 - f00) * (1 - t) + (f11 - f01) * t
        ft = (f01 - f00) * (1 - s) + (f11 - f10) * s
        gs = (g10 - g00) * (1 - t) + (g11 - g01) * t
        gt = (g01 - g00) * (1 - s) + (g11 - g10) * s
        det = fs * gt - ft * gs
        if det == 0:
            break
        ds = (f * gt - ft * g) / det
        dt = (fs * g - f * gs) / det
        s = min(max(s - ds, 0.0), 1.0)
        t = min(max(t - dt, 0.0), 1.0)
        if abs(ds) + abs(dt) < 1e-12:
            break
    return s, t


def count_joint_zeros(F1: np.ndarray, F2: np.ndarray, x: np.ndarray, y: np.ndarray,
                      window=None, evaluator=None, newton_tol: float = 1e-10,
                      max_iter: int = 30) -> ZeroCount:
    """Count common zeros of two sampled functions on a grid.

    Cells where both components change sign at the corners are screened
    with the winding number; the count is the sum of ``|winding|``. When an
    ``evaluator`` is supplied, each zero is located by Newton's method from
    the cell centre and must land in the same cell (cell ownership); if it
    does not, the zero is placed with the bilinear interpolants and the
    ``newton_fallback`` flag is incremented.

    Parameters
    ----------
    F1, F2 : ndarray, shape (nx, ny)
        Samples on the grid ``x`` by ``y``.
    window : ((x0, x1), (y0, y1)), optional
        Only cells lying inside this rectangle are counted.
    evaluator : callable, optional
        ``evaluator(point) -> (F, J)`` with ``F`` of shape (2,) and the
        Jacobian ``J`` of shape (2, 2).
    """
    F1 = np.asarray(F1, dtype=float)
    F2 = np.asarray(F2, dtype=float)
    if F1.shape != F2.shape or F1.shape != (len(x), len(y)):
        raise DomainError("F1, F2 must have shape (len(x), len(y))")
    cand = _sign_candidates(F1, F2)
    if window is not None:
        (x0, x1), (y0, y1) = window
        cx = (x[:-1] >= x0 - 1e-12) & (x[1:] <= x1 + 1e-12)
        cy = (y[:-1] >= y0 - 1e-12) & (y[1:] <= y1 + 1e-12)
        cand &= cx[:, None] & cy[None, :]
    ii, jj = np.nonzero(cand)
    flags = {"candidate_cells": int(ii.size), "multi_zero_cells": 0, "newton_fallback": 0}
    if ii.size == 0:
        return ZeroCount(0, flags, np.zeros((0, 2)) if evaluator else None, 0)
    ang = np.arctan2(F2, F1)
    a00 = ang[ii, jj]
    a10 = ang[ii + 1, jj]
    a11 = ang[ii + 1, jj + 1]
    a01 = ang[ii, jj + 1]
    total = _wrap(a10 - a00) + _wrap(a11 - a10) + _wrap(a01 - a11) + _wrap(a00 - a01)
    wind = np.rint(total / (2.0 * math.pi)).astype(int)
    hit = wind != 0
    flags["multi_zero_cells"] = int(np.count_nonzero(np.abs(wind) > 1))
    count = int(np.sum(np.abs(wind)))
    signed = int(np.sum(wind))
    roots = None
    if evaluator is not None:
        hx = float(x[1] - x[0])
        hy = float(y[1] - y[0])
        found = []
        for i, j in zip(ii[hit], jj[hit]):
            p = np.array([x[i] + 0.5 * hx, y[j] + 0.5 * hy])
            ok = False
            for _ in range(max_iter):
                Fv, J = evaluator(p)
                try:
                    step = np.linalg.solve(J, Fv)
                except np.linalg.LinAlgError:
                    break
                p = p - step
                if np.hypot(*step) < newton_tol * hx:
                    ok = True
                    break
            pad = 1e-9 * hx
            inside = (x[i] - pad <= p[0] <= x[i + 1] + pad) and (y[j] - pad <= p[1] <= y[j + 1] + pad)
            if not (ok and inside):
                flags["newton_fallback"] += 1
                s, t = _bilinear_root(F1[i, j], F1[i + 1, j], F1[i + 1, j + 1], F1[i, j + 1],
                                      F2[i, j], F2[i + 1, j], F2[i + 1, j + 1], F2[i, j + 1])
                p = np.array([x[i] + s * hx, y[j] + t * hy])
            found.append(p)
        roots = np.array(found).reshape(-1, 2)
    return ZeroCount(count=count, flags=flags, roots=roots, signed=signed)


def count_specular_2d(field_: Field2D, k: float, window=None, refine: bool = False) -> ZeroCount:
    """Count solutions of ``W_x = k x`` and ``W_y = k y`` in the window.

    Parameters
    ----------
    field_ : Field2D
        Needs ``Wx`` and ``Wy`` samples; ``refine`` also needs the analytic
        evaluator (second derivatives).
    k : float
        Longuet-Higgins constant.
    window : ((x0, x1), (y0, y1)), optional
        Counting rectangle, default the whole grid.
    refine : bool
        Locate each zero with Newton's method on the analytic field.
    """
    if not k > 0:
        raise DomainError("k must be positive")
    X, Y = np.meshgrid(field_.x, field_.y, indexing="ij")
    F1 = field_.values["Wx"] - k * X
    F2 = field_.values["Wy"] - k * Y
    evaluator = None
    if refine:
        def evaluator(p):
            v = field_.evaluate(p[None, :], keys=("Wx", "Wy", "Wxx", "Wxy", "Wyy"))
            F = np.array([v["Wx"][0] - k * p[0], v["Wy"][0] - k * p[1]])
            J = np.array([[v["Wxx"][0] - k, v["Wxy"][0]], [v["Wxy"][0], v["Wyy"][0] - k]])
            return F, J
    return count_joint_zeros(F1, F2, field_.x, field_.y, window, evaluator)


def count_dislocations(xi: Field2D, eta: Field2D, window=None, refine: bool = False) -> ZeroCount:
    """Count common zeros of two fields sampled on the same grid."""
    if not (np.array_equal(xi.x, eta.x) and np.array_equal(xi.y, eta.y)):
        raise DomainError("the two fields must share the grid")
    evaluator = None
    if refine:
        def evaluator(p):
            a = xi.evaluate(p[None, :], keys=("W", "Wx", "Wy"))
            b = eta.evaluate(p[None, :], keys=("W", "Wx", "Wy"))
            F = np.array([a["W"][0], b["W"][0]])
            J = np.array([[a["Wx"][0], a["Wy"][0]], [b["Wx"][0], b["Wy"][0]]])
            return F, J
    return count_joint_zeros(xi.values["W"], eta.values["W"], xi.x, xi.y, window, evaluator)


# ---------------------------------------------------------------------------
# Level curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelCurveSample:
    """Segments of a level curve: gradient angle and length of each."""

    angles: np.ndarray
    lengths: np.ndarray
    flags: dict

    @property
    def total_length(self) -> float:
        return float(np.sum(self.lengths))


# Marching-squares edges: 0 bottom (00-10), 1 right (10-11), 2 top (01-11), 3 left (00-01).
_SEGMENTS_TWO = {
    1: (3, 0), 2: (0, 1), 3: (3, 1), 4: (1, 2), 6: (0, 2), 7: (3, 2), 8: (2, 3),
    9: (0, 2), 11: (1, 2), 12: (1, 3), 13: (0, 1), 14: (0, 3),
}


def sample_level_curve_angles(field_: Field2D, u: float = 0.0, window=None) -> LevelCurveSample:
    """Marching-squares extraction of ``{W = u}`` with gradient angles.

    Each segment joins the two edge crossings of a cell (two segments in a
    saddle cell, paired by the sign of the cell-centre average). The angle
    is ``atan2(W_y, W_x)`` at the segment midpoint, from bilinear
    interpolation of the gradient samples; the weight is the segment length.
    """
    x = field_.x
    y = field_.y
    W = field_.values["W"] - u
    Wx = field_.values["Wx"]
    Wy = field_.values["Wy"]
    if window is not None:
        (x0, x1), (y0, y1) = window
        sx = (x >= x0 - 1e-12) & (x <= x1 + 1e-12)
        sy = (y >= y0 - 1e-12) & (y <= y1 + 1e-12)
        x, y = x[sx], y[sy]
        W, Wx, Wy = (a[np.ix_(sx, sy)] for a in (W, Wx, Wy))
    hx = float(x[1] - x[0])
    hy = float(y[1] - y[0])
    above = W >= 0
    v00, v10, v11, v01 = W[:-1, :-1], W[1:, :-1], W[1:, 1:], W[:-1, 1:]
    b00, b10, b11, b01 = above[:-1, :-1], above[1:, :-1], above[1:, 1:], above[:-1, 1:]
    case = b00.astype(np.int8) | (b10.astype(np.int8) << 1) | (b11.astype(np.int8) << 2) \
        | (b01.astype(np.int8) << 3)
    ii, jj = np.nonzero((case != 0) & (case != 15))
    c = case[ii, jj]

    def frac(va, vb):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.clip(va / (va - vb), 0.0, 1.0)

    a00, a10, a11, a01 = v00[ii, jj], v10[ii, jj], v11[ii, jj], v01[ii, jj]
    # Edge crossing points in local cell coordinates (s, t) in [0, 1]^2.
    e = np.empty((ii.size, 4, 2))
    e[:, 0] = np.column_stack([frac(a00, a10), np.zeros(ii.size)])
    e[:, 1] = np.column_stack([np.ones(ii.size), frac(a10, a11)])
    e[:, 2] = np.column_stack([frac(a01, a11), np.ones(ii.size)])
    e[:, 3] = np.column_stack([np.zeros(ii.size), frac(a00, a01)])

    first = np.full(ii.size, -1)
    second = np.full(ii.size, -1)
    for code, (p, q) in _SEGMENTS_TWO.items():
        sel = c == code
        first[sel] = p
        second[sel] = q
    seg_cell = [np.arange(ii.size)[first >= 0]]
    seg_p = [first[first >= 0]]
    seg_q = [second[first >= 0]]
    saddle = np.flatnonzero((c == 5) | (c == 10))
    if saddle.size:
        centre_above = (a00 + a10 + a11 + a01)[saddle] >= 0
        cs = c[saddle]
        # Case 5: corners 00 and 11 above. Centre above joins them, isolating 10 and 01.
        # Case 10: corners 10 and 01 above. Centre above joins them, isolating 00 and 11.
        isolate_10_01 = ((cs == 5) & centre_above) | ((cs == 10) & ~centre_above)
        pairs_a = np.where(isolate_10_01[:, None], [0, 1], [3, 0])
        pairs_b = np.where(isolate_10_01[:, None], [2, 3], [1, 2])
        for pairs in (pairs_a, pairs_b):
            seg_cell.append(saddle)
            seg_p.append(pairs[:, 0])
            seg_q.append(pairs[:, 1])
    cells = np.concatenate(seg_cell)
    P = e[cells, np.concatenate(seg_p)]
    Qp = e[cells, np.concatenate(seg_q)]
    dx = (Qp[:, 0] - P[:, 0]) * hx
    dy = (Qp[:, 1] - P[:, 1]) * hy
    lengths = np.hypot(dx, dy)
    s = 0.5 * (P[:, 0] + Qp[:, 0])
    t = 0.5 * (P[:, 1] + Qp[:, 1])
    ci, cj = ii[cells], jj[cells]

    def bilinear(A):
        return (A[ci, cj] * (1 - s) * (1 - t) + A[ci + 1, cj] * s * (1 - t)
                + A[ci + 1, cj + 1] * s * t + A[ci, cj + 1] * (1 - s) * t)

    angles = np.arctan2(bilinear(Wy), bilinear(Wx))
    flags = {"saddle_cells": int(saddle.size), "segments": int(lengths.size)}
    return LevelCurveSample(angles, lengths, flags)
