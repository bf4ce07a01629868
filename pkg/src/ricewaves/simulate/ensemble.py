"""Monte Carlo ensembles of counting tasks.

Replication ``i`` of an ensemble with base seed ``s`` uses the generator
``numpy.random.default_rng(r_i)`` where ``r_i`` is the first 64-bit word of
``SeedSequence(s, spawn_key=(i,))``. The streams are independent PCG64
streams, ``r_i`` is stored next to every result, and any replication can be
rerun on its own from that integer.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import stats

from ..errors import DomainError
from .counting import (count_dislocations, count_specular_2d, count_zeros_1d,
                       sample_level_curve_angles, section_crossings)
from .synthesis import (DirectPlan2D, LatticePlan2D, SynthesisPlan1D, synthesize_direct_2d,
                        synthesize_lattice_2d, synthesize_path_1d)


def replication_seed(seed_base: int, index: int) -> int:
    """64-bit seed of replication ``index``."""
    ss = np.random.SeedSequence(int(seed_base), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class McEnsemble:
    """Per-replication results and their summaries.

    ``counts`` has shape ``(R,)`` for scalar tasks and ``(R, m)`` for vector
    tasks; ``mean``, ``variance`` (unbiased) and ``std_error`` are taken over
    the first axis.
    """

    replication_count: int
    counts: np.ndarray
    mean: Union[float, np.ndarray]
    variance: Union[float, np.ndarray]
    std_error: Union[float, np.ndarray]
    seed_base: int
    seeds: np.ndarray = field(default=None)
    flags: tuple = ()

    @classmethod
    def from_counts(cls, counts, seed_base: int = 0, seeds=None, flags=()) -> "McEnsemble":
        c = np.asarray(counts)
        if c.shape[0] < 2:
            raise DomainError("an ensemble needs at least two replications")
        r = c.shape[0]
        # Summaries are computed on the sorted values so that the result
        # does not depend on the order in which replications finished.
        ordered = np.sort(c.astype(float), axis=0)
        mean = ordered.mean(axis=0)
        var = ordered.var(axis=0, ddof=1)
        se = np.sqrt(var / r)
        if c.ndim == 1:
            mean, var, se = float(mean), float(var), float(se)
        if seeds is None:
            seeds = np.array([replication_seed(seed_base, i) for i in range(r)], dtype=np.uint64)
        return cls(r, c, mean, var, se, int(seed_base), np.asarray(seeds, dtype=np.uint64),
                   tuple(dict(f) for f in flags))

    def flag_totals(self) -> dict:
        """Sum of every numeric flag over the replications."""
        out = {}
        for f in self.flags:
            for key, val in f.items():
                out[key] = out.get(key, 0) + int(val)
        return out

    def to_csv(self, path) -> None:
        """One row per replication: ``replication, seed, count..., flags``."""
        c = self.counts if self.counts.ndim == 2 else self.counts[:, None]
        names = ["count"] if c.shape[1] == 1 else [f"count_{j}" for j in range(c.shape[1])]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["replication", "seed", *names, "flags"])
            for i in range(self.replication_count):
                f = self.flags[i] if i < len(self.flags) else {}
                ftxt = ";".join(f"{k}={int(v)}" for k, v in sorted(f.items()))
                w.writerow([i, int(self.seeds[i]), *(repr(float(v)) if not float(v).is_integer()
                                                      else int(v) for v in c[i]), ftxt])


def normality_stats(values, center: Optional[float] = None, scale: Optional[float] = None) -> dict:
    """Skewness, excess kurtosis and Kolmogorov-Smirnov distance to N(0, 1).

    The values are standardised with ``center`` and ``scale`` when given
    (for instance the asymptotic mean and standard deviation), otherwise with
    the sample mean and standard deviation.
    """
    v = np.asarray(values, dtype=float)
    c = float(np.mean(v)) if center is None else float(center)
    s = float(np.std(v, ddof=1)) if scale is None else float(scale)
    if not s > 0:
        raise DomainError("scale must be positive")
    z = (v - c) / s
    ks = stats.kstest(z, "norm")
    return {
        "skewness": float(stats.skew(v)),
        "excess_kurtosis": float(stats.kurtosis(v)),
        "ks_distance": float(ks.statistic),
        "ks_pvalue": float(ks.pvalue),
    }


def _call(task, seed):
    out = task(np.random.default_rng(seed))
    if isinstance(out, tuple):
        return out
    return out, {}


def run_ensemble(task: Callable, replications: int, seed_base: int = 0,
                 workers: int = 1) -> McEnsemble:
    """Run ``task`` on independent streams and collect the results.

    Parameters
    ----------
    task : callable
        ``task(rng) -> value`` or ``(value, flags)``; must be picklable when
        ``workers > 1``.
    replications : int
        Number of replications, at least 2.
    seed_base : int
        Base seed; see the module docstring for the stream derivation.
    workers : int
        Processes used to run replications concurrently.
    """
    if replications < 2:
        raise DomainError("replications must be at least 2")
    seeds = [replication_seed(seed_base, i) for i in range(replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_call, [task] * replications, seeds,
                                    chunksize=max(1, replications // (4 * workers))))
    else:
        results = [_call(task, s) for s in seeds]
    values = np.array([r[0] for r in results])
    return McEnsemble.from_counts(values, seed_base, np.array(seeds, dtype=np.uint64),
                                  [r[1] for r in results])


# ---------------------------------------------------------------------------
# Counting tasks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpecularCount1DTask:
    """Number of solutions of ``W'(x) = k x`` on the plan grid."""

    plan: SynthesisPlan1D
    k: float

    def __call__(self, rng):
        path = synthesize_path_1d(self.plan, rng, orders=(1, 2))
        r = self.plan.realized
        # Peak specular intensity, reached at x = 0.
        rate = math.sqrt(r["lambda4"] / r["lambda2"]) / math.pi
        res = count_zeros_1d(path, 1, slope=self.k, expected_rate=rate)
        return res.count, res.flags


@dataclass(frozen=True)
class DerivativeZeroTask:
    """Zeros of ``W^{(order)}`` over the plan grid."""

    plan: SynthesisPlan1D
    order: int = 1

    def __call__(self, rng):
        path = synthesize_path_1d(self.plan, rng, orders=(self.order, self.order + 1))
        res = count_zeros_1d(path, self.order)
        return res.count, res.flags


def _field_pair(plan, rng, keys, step, window, pair):
    if isinstance(plan, LatticePlan2D):
        return synthesize_lattice_2d(plan, rng, keys=keys, pair=pair)
    (x0, x1), (y0, y1) = window
    x = np.arange(x0, x1 + 0.5 * step, step)
    y = np.arange(y0, y1 + 0.5 * step, step)
    first = synthesize_direct_2d(plan, x, y, rng, keys=keys)
    if not pair:
        return first
    return first, synthesize_direct_2d(plan, x, y, rng, keys=keys)


@dataclass(frozen=True)
class SpecularCount2DTask:
    """Number of solutions of ``grad W = k (x, y)`` in a window."""

    plan: Union[LatticePlan2D, DirectPlan2D]
    k: float
    window: tuple
    step: Optional[float] = None
    refine: bool = False

    def __call__(self, rng):
        keys = ("Wx", "Wy")
        f = _field_pair(self.plan, rng, keys, self.step, self.window, False)
        res = count_specular_2d(f, self.k, self.window, refine=self.refine)
        return res.count, res.flags


@dataclass(frozen=True)
class DislocationCountTask:
    """Common zeros of two independent fields, per unit area of the window."""

    plan: Union[LatticePlan2D, DirectPlan2D]
    window: tuple
    step: Optional[float] = None
    refine: bool = False
    per_area: bool = False

    def __call__(self, rng):
        xi, eta = _field_pair(self.plan, rng, ("W", "Wx", "Wy"), self.step, self.window, True)
        res = count_dislocations(xi, eta, self.window, refine=self.refine)
        if self.per_area:
            (x0, x1), (y0, y1) = self.window
            return res.count / ((x1 - x0) * (y1 - y0)), res.flags
        return res.count, res.flags


@dataclass(frozen=True)
class AngleHistogramTask:
    """Level-curve length falling in each gradient-angle bin.

    The value is the vector of lengths per bin; the Palm probability of a
    bin is the ratio of its expected length to the expected total length,
    see :func:`palm_histogram`.
    """

    plan: Union[LatticePlan2D, DirectPlan2D]
    edges: tuple
    u: float = 0.0
    window: Optional[tuple] = None
    step: Optional[float] = None

    def __call__(self, rng):
        f = _field_pair(self.plan, rng, ("W", "Wx", "Wy"), self.step, self.window, False)
        s = sample_level_curve_angles(f, self.u, self.window)
        hist, _ = np.histogram(s.angles, bins=np.asarray(self.edges), weights=s.lengths)
        return hist, s.flags


def palm_histogram(ens: McEnsemble):
    """Ratio estimate of the Palm bin probabilities and their standard errors.

    ``p_b = mean(L_b) / mean(L)`` with ``L = sum_b L_b``; the standard error
    uses the delta method on the per-replication pairs ``(L_b, L)``.
    """
    Lb = np.asarray(ens.counts, dtype=float)
    L = Lb.sum(axis=1)
    mL = L.mean()
    p = Lb.mean(axis=0) / mL
    resid = Lb - p[None, :] * L[:, None]
    se = np.sqrt(resid.var(axis=0, ddof=1) / Lb.shape[0]) / mL
    return p, se


# ---------------------------------------------------------------------------
# Time averages over a space-time movie
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeAverage:
    """Result of :func:`time_average_level_functional`.

    Attributes
    ----------
    value : float
        Mean of the functional over the frames.
    times, frames : ndarray
        Frame times and the functional at each frame.
    running_mean : ndarray
        Cumulative mean after each frame.
    band : float
        Half-range of the running mean over the second half of the horizon,
        a simple convergence diagnostic.
    """

    value: float
    times: np.ndarray
    frames: np.ndarray
    running_mean: np.ndarray
    band: float


def row_crossings_per_length(u: float = 0.0) -> Callable:
    """Functional: crossings of level ``u`` per unit length along grid rows."""

    def functional(field_):
        x = field_.x
        n = section_crossings(field_.values["W"], u, axis=0)
        return float(np.mean(n)) / float(x[-1] - x[0])

    return functional


def time_average_level_functional(plan: LatticePlan2D, functional: Callable, horizon: float,
                                  frames: int = 200, seed=0, gravity: float = 9.81,
                                  mass_floor: float = 1e-12) -> TimeAverage:
    """Average a functional of the frames of a dispersive random movie.

    The movie is ``W(x, t) = sum_j sqrt(2 c_j) cos(omega_j . x - nu_j t +
    phi_j)`` over the lattice nodes with ``c_j > mass_floor * max c``,
    uniform random phases ``phi_j`` and deep-water dispersion ``nu_j =
    sqrt(gravity |omega_j|)``. Amplitudes are fixed, so the time average
    explores the phase torus and converges to the phase average; with many
    nodes the frames are close to Gaussian with the plan's covariance.

    Parameters
    ----------
    plan : LatticePlan2D
        Spatial nodes and sampling grid.
    functional : callable
        ``functional(Field2D) -> float``.
    horizon : float
        Length ``T`` of the time interval; frames are equally spaced in
        ``[0, T)``.
    """
    if not horizon > 0 or frames < 1:
        raise DomainError("horizon must be positive and frames >= 1")
    from .synthesis import Field2D

    rng = np.random.default_rng(seed)
    N1, N2 = plan.n_fft
    KX, KY = np.meshgrid(plan.kx, plan.ky, indexing="ij")
    mass = np.where(plan.weights > mass_floor * plan.weights.max(), plan.weights, 0.0)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=(N1, N2))
    amp = np.sqrt(2.0 * mass) * np.exp(1j * (phases + KX * plan.origin[0] + KY * plan.origin[1]))
    nu = np.sqrt(gravity * np.hypot(KX, KY))
    nx, ny = plan.shape
    times = horizon * np.arange(frames) / frames
    values = np.empty(frames)
    for i, t in enumerate(times):
        W = (np.fft.ifft2(amp * np.exp(-1j * nu * t)) * (N1 * N2)).real[:nx, :ny]
        values[i] = functional(Field2D(plan.x, plan.y, {"W": W}))
    running = np.cumsum(values) / np.arange(1, frames + 1)
    tail = running[frames // 2:]
    return TimeAverage(float(values.mean()), times, values, running,
                       float(0.5 * (tail.max() - tail.min())))
