"""Command-line front end.

``ricewaves <task> [--config FILE] [--out DIR] [--seed N] [--replications N]``

The configuration is a YAML (or JSON) mapping with the keys ``task``,
``model``, ``geometry``, ``grids``, ``mc`` and ``output``. Every run writes
``summary.json`` (results, the full configuration after overrides, the
library version and the seeds) and, depending on the task, CSV tables.

Exit status: 0 on success, 2 when the configuration is invalid (the message
names the offending field), 3 when a numerical routine fails.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import level_geometry as lg
from . import rice1d, rice2d
from .errors import RiceError
from .spectral_models import (SpecularGeometry, Spectrum1D, Spectrum2D, Spectrum3D,
                              builtin_covariance_gaussian, builtin_covariance_wendland,
                              moments_from_covariance)

TASKS = (
    "sp1d-expect", "sp1d-exact", "sp1d-variance", "sp2d-intensity", "sp2d-m2", "palm-angle",
    "crossing-intensity", "dislocation-density", "dislocation-correlation", "mc-verify",
    "ergodic-demo", "compare-figures",
)
MC_KINDS = ("sp1d", "sp2d", "dislocations", "palm")

DEFAULT_OUT = "ricewaves-out"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    """Invalid configuration; ``field`` is the dotted path of the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------------------
# Config access
# ---------------------------------------------------------------------------

def _section(cfg: dict, name: str) -> dict:
    sec = cfg.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(name, "must be a mapping")
    return sec


def _num(sec: dict, key: str, path: str, default=None, positive=False, integer=False):
    if key not in sec or sec[key] is None:
        if default is None:
            raise ConfigError(f"{path}.{key}", "is required")
        return default
    val = sec[key]
    try:
        val = int(val) if integer else float(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {sec[key]!r}") from None
    if not integer and not math.isfinite(val):
        raise ConfigError(f"{path}.{key}", "must be finite")
    if positive and not val > 0:
        raise ConfigError(f"{path}.{key}", "must be positive")
    return val


def _matrix(sec: dict, key: str, path: str, shape, default=None):
    if key not in sec:
        if default is None:
            raise ConfigError(f"{path}.{key}", "is required")
        return np.asarray(default, dtype=float)
    try:
        m = np.asarray(sec[key], dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}", "must be a numeric matrix") from None
    if m.shape != shape:
        raise ConfigError(f"{path}.{key}", f"expected shape {shape}, got {m.shape}")
    return m


def _grid(cfg: dict, name: str, default):
    """``grids.<name>: {start, stop, count}`` as a monotone array."""
    grids = _section(cfg, "grids")
    sec = grids.get(name)
    if sec is None:
        start, stop, count = default
    else:
        if not isinstance(sec, dict):
            raise ConfigError(f"grids.{name}", "must be a mapping with start, stop, count")
        path = f"grids.{name}"
        start = _num(sec, "start", path)
        stop = _num(sec, "stop", path)
        count = _num(sec, "count", path, integer=True)
    if not (count >= 2 and stop > start):
        raise ConfigError(f"grids.{name}", "needs stop > start and count >= 2")
    return np.linspace(start, stop, int(count))


def _model_1d(cfg: dict):
    """``(Spectrum1D, covariance or None)`` from the ``model`` section."""
    sec = _section(cfg, "model")
    family = sec.get("family", "moments")
    try:
        if family == "moments":
            spec = Spectrum1D(
                lambda0=_num(sec, "lambda0", "model", 1.0, positive=True),
                lambda2=_num(sec, "lambda2", "model", 1.0, positive=True),
                lambda4=_num(sec, "lambda4", "model", 3.0, positive=True),
            )
            return spec, None
        if family == "wendland":
            cov = builtin_covariance_wendland(
                _num(sec, "delta", "model", 1.0, positive=True),
                _num(sec, "scale", "model", 1.0, positive=True),
                _num(sec, "smoothness", "model", 3, integer=True),
            )
        elif family == "gaussian":
            cov = builtin_covariance_gaussian(
                _num(sec, "ell", "model", 1.0, positive=True),
                _num(sec, "scale", "model", 1.0, positive=True),
            )
        else:
            raise ConfigError("model.family", f"unknown 1D family {family!r}")
    except RiceError as exc:
        raise ConfigError("model", str(exc)) from None
    return moments_from_covariance(cov), cov


def _model_2d(cfg: dict):
    """``(Spectrum2D, Q or None)``; ``Q`` is set for anisotropic Gaussian fields."""
    from .simulate.synthesis import anisotropic_gaussian_covariance, rotated_anisotropy

    sec = _section(cfg, "model")
    family = sec.get("family", "matrices")
    try:
        if family == "matrices":
            hess = _matrix(sec, "hess_cov", "model", (3, 3))
            grad = _matrix(sec, "grad_cov", "model", (2, 2), default=np.eye(2))
            return Spectrum2D(grad, hess), None
        if family == "gaussian2d":
            if "Q" in sec:
                Q = _matrix(sec, "Q", "model", (2, 2))
            else:
                Q = rotated_anisotropy(_num(sec, "gamma2", "model", 0.0),
                                       _num(sec, "kappa", "model", 0.0),
                                       _num(sec, "ell", "model", 1.0, positive=True))
            _, spec2 = anisotropic_gaussian_covariance(Q)
            return spec2, Q
    except RiceError as exc:
        raise ConfigError("model", str(exc)) from None
    raise ConfigError("model.family", f"unknown 2D family {family!r}")


def _wave_model(cfg: dict):
    sec = _section(cfg, "model")
    family = sec.get("family", "ring")
    try:
        if family == "ring":
            return lg.ring_spectrum_model(_num(sec, "k0", "model", 1.0, positive=True))
        if family == "gaussian":
            return lg.gaussian_wave_model(_num(sec, "ell", "model", 1.0, positive=True))
    except RiceError as exc:
        raise ConfigError("model", str(exc)) from None
    raise ConfigError("model.family", f"unknown isotropic family {family!r}")


def _geometry(cfg: dict, need_heights=False, default_heights=None) -> SpecularGeometry:
    sec = _section(cfg, "geometry")
    if "h1" in sec or "h2" in sec or (default_heights and "k" not in sec):
        d1, d2 = default_heights or (None, None)
        h1 = _num(sec, "h1", "geometry", d1, positive=True)
        h2 = _num(sec, "h2", "geometry", d2, positive=True)
        return SpecularGeometry.from_heights(h1, h2)
    if need_heights:
        raise ConfigError("geometry.h1", "is required (exact computations need heights)")
    return SpecularGeometry.from_k(_num(sec, "k", "geometry", positive=True))


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def write_csv(path: Path, header, rows) -> None:
    """Write a header and rows with ``repr`` floats (locale independent)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return repr(float(v))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


# ---------------------------------------------------------------------------
# Tasks
# ---------------------------------------------------------------------------

def _task_sp1d_expect(cfg, out):
    spec, _ = _model_1d(cfg)
    geom = _geometry(cfg)
    res = {"k": geom.k, "total": rice1d.sp2_total_expectation(spec, geom)}
    files = []
    if "x" in _section(cfg, "grids"):
        x = _grid(cfg, "x", None)
        write_csv(out / "sp1d_intensity.csv", ["x", "approx_intensity"],
                  zip(x, rice1d.sp2_intensity(spec, geom, x)))
        files.append("sp1d_intensity.csv")
    return res, files


def _task_sp1d_exact(cfg, out):
    spec, _ = _model_1d(cfg)
    geom = _geometry(cfg, need_heights=True)
    exact = rice1d.sp1_exact_expectation(spec, geom)
    approx = rice1d.sp2_total_expectation(spec, geom)
    return {"k": geom.k, "h1": geom.h1, "h2": geom.h2, "exact_total": exact,
            "approx_total": approx, "difference": exact - approx}, []


def _task_sp1d_variance(cfg, out):
    _, cov = _model_1d(cfg)
    if cov is None:
        raise ConfigError("model.family", "variance needs a covariance family (wendland)")
    params = rice1d.variance_params(cov)
    res = {"theta": params.theta, "theta_mixing_variant": rice1d.theta_mixing_variant(cov),
           "theta_with_mean_shift": rice1d.theta_with_mean_shift(cov),
           "J": params.J, "delta": params.delta}
    if "k" in _section(cfg, "geometry") or "h1" in _section(cfg, "geometry"):
        k = _geometry(cfg).k
        res.update(k=k, variance=rice1d.sp2_variance_asymptotic(params, k),
                   coefficient_of_variation=rice1d.coefficient_of_variation(params, k),
                   coefficient_of_variation_leading=rice1d.coefficient_of_variation_leading(
                       params, k))
    return res, []


def _task_sp2d_intensity(cfg, out):
    spec2, _ = _model_2d(cfg)
    k = _geometry(cfg).k
    half = 4.0 * math.sqrt(float(np.max(np.diag(spec2.grad_cov)))) / k
    x = _grid(cfg, "x", (-half, half, 41))
    y = _grid(cfg, "y", (-half, half, 41))
    X, Y = np.meshgrid(x, y, indexing="ij")
    vals = rice2d.sp2d_intensity(spec2, k, X, Y)
    write_csv(out / "sp2d_intensity.csv", ["x", "y", "intensity"],
              zip(X.ravel(), Y.ravel(), vals.ravel()))
    return {"k": k, "abs_det": rice2d.sp2d_abs_det(spec2, k),
            "total": rice2d.sp2d_abs_det(spec2, k) / (k * k)}, ["sp2d_intensity.csv"]


def _task_sp2d_m2(cfg, out):
    spec2, _ = _model_2d(cfg)
    m2 = rice2d.m2_coefficient(spec2)
    res = {"m2": m2, "deltas": rice2d.make_absdet_context(spec2).deltas}
    geo = _section(cfg, "geometry")
    if "k" in geo or "h1" in geo:
        k = _geometry(cfg).k
        res.update(k=k, total=m2 / (k * k))
    return res, []


def _palm_params(cfg):
    sec = _section(cfg, "model")
    if "grad_cov" in sec:
        return lg.palm_params_from_gradient(_matrix(sec, "grad_cov", "model", (2, 2)))
    try:
        return lg.PalmAngleParams.from_anisotropy(_num(sec, "gamma2", "model", 0.25),
                                                  _num(sec, "kappa", "model", math.pi / 4))
    except RiceError as exc:
        raise ConfigError("model.gamma2", str(exc)) from None


def _task_palm_angle(cfg, out):
    params = _palm_params(cfg)
    phi = _grid(cfg, "phi", (-math.pi, math.pi, 361))
    printed = lg.palm_angle_density(params, phi)
    exact = lg.palm_angle_density_exact(params, phi)
    write_csv(out / "palm_density.csv", ["phi", "density", "density_exact"],
              zip(phi, printed, exact))
    return {"gamma2": params.gamma2, "kappa": params.kappa}, ["palm_density.csv"]


def _task_crossing_intensity(cfg, out):
    sec = _section(cfg, "model")
    try:
        spec3 = Spectrum3D(_num(sec, "lambda000", "model", 1.0), _num(sec, "lambda200", "model", 1.0),
                           _num(sec, "lambda020", "model", 1.0), _num(sec, "lambda110", "model", 0.0))
    except RiceError as exc:
        raise ConfigError("model", str(exc)) from None
    geo = _section(cfg, "geometry")
    u = _num(geo, "u", "geometry", 0.0)
    area = _num(geo, "area", "geometry", 1.0, positive=True)
    res = {"u": u, "area": area, "intensity": lg.crossing_intensity(spec3, u, area)}
    files = []
    if "u" in _section(cfg, "grids"):
        us = _grid(cfg, "u", None)
        write_csv(out / "crossing_intensity.csv", ["u", "intensity"],
                  ((v, lg.crossing_intensity(spec3, v, area)) for v in us))
        files.append("crossing_intensity.csv")
    return res, files


def _task_dislocation_density(cfg, out):
    sec = _section(cfg, "model")
    if "lambda2" in sec:
        l2 = _num(sec, "lambda2", "model", positive=True)
    else:
        l2 = _wave_model(cfg).lambda2
    return {"lambda2": l2, "density": lg.dislocation_density(l2)}, []


def _task_dislocation_correlation(cfg, out):
    model = _wave_model(cfg)
    r = _grid(cfg, "r", (0.25, 10.0, 40))
    d2 = lg.dislocation_density(model.lambda2)
    ratio = lg.dislocation_correlation_profile(model, r)
    write_csv(out / "dislocation_correlation.csv", ["r", "A", "A_over_d2sq"],
              zip(r, ratio * d2 * d2, ratio))
    return {"density": d2, "min_ratio": float(ratio.min()), "max_ratio": float(ratio.max())}, \
        ["dislocation_correlation.csv"]


def _task_compare_figures(cfg, out):
    sec = _section(cfg, "model")
    if "family" not in sec:
        cfg.setdefault("model", {}).update({"family": "moments", "lambda4": sec.get("lambda4", 3.0)})
    spec, _ = _model_1d(cfg)
    geom = _geometry(cfg, default_heights=(100.0, 300.0))
    half = 3.0 * math.sqrt(spec.lambda2) / geom.k
    x = _grid(cfg, "x", (-half, half, 121))
    exact = np.asarray(rice1d.sp1_exact_intensity(spec, geom, x))
    approx = np.asarray(rice1d.sp2_intensity(spec, geom, x))
    write_csv(out / "figure1.csv", ["x", "exact_intensity", "approx_intensity"],
              zip(x, exact, approx))
    gap = float(np.max(np.abs(exact - approx)) / np.max(approx))
    return {"h1": geom.h1, "h2": geom.h2, "k": geom.k, "rows": int(x.size),
            "max_relative_gap": gap}, ["figure1.csv"]


def _mc_settings(cfg):
    mc = _section(cfg, "mc")
    kind = mc.get("kind")
    if kind not in MC_KINDS:
        raise ConfigError("mc.kind", f"must be one of {', '.join(MC_KINDS)}")
    reps = _num(mc, "replications", "mc", 200, integer=True)
    if reps < 2:
        raise ConfigError("mc.replications", "must be at least 2")
    seed = _num(mc, "seed", "mc", 0, integer=True)
    workers = _num(mc, "workers", "mc", 1, integer=True)
    return mc, kind, reps, seed, workers


def _task_mc_verify(cfg, out):
    from .simulate import ensemble as en
    from .simulate import synthesis as sy

    mc, kind, reps, seed, workers = _mc_settings(cfg)
    extra = {}
    if kind == "sp1d":
        spec, cov = _model_1d(cfg)
        if cov is None:
            raise ConfigError("model.family", "sp1d simulation needs a covariance family")
        k = _geometry(cfg).k
        half = rice1d.TOTAL_X_HALFWIDTH * math.sqrt(spec.lambda2) / k
        plan = sy.build_plan_1d(cov, (-half, half), _num(mc, "step", "mc", 0.01, positive=True))
        task = en.SpecularCount1DTask(plan, k)
        analytic = rice1d.sp2_total_expectation(spec, SpecularGeometry.from_k(k))
    elif kind == "sp2d":
        spec2, Q = _model_2d(cfg)
        if Q is None:
            raise ConfigError("model.family", "sp2d simulation needs family gaussian2d")
        k = _geometry(cfg).k
        gamma, _ = sy.anisotropic_gaussian_covariance(Q)
        half = _num(mc, "window_sigmas", "mc", 4.5, positive=True) \
            * math.sqrt(float(np.max(np.diag(Q)))) / k
        window = ((-half, half), (-half, half))
        plan = sy.build_lattice_plan_2d(gamma, window, _num(mc, "step", "mc", 0.2, positive=True),
                                        margin=8.0 / math.sqrt(float(np.min(np.linalg.eigvalsh(Q)))),
                                        target=spec2)
        task = en.SpecularCount2DTask(plan, k, window)
        analytic = rice2d.sp2d_abs_det(spec2, k) / (k * k)
    elif kind == "dislocations":
        sec = _section(cfg, "model")
        k0 = _num(sec, "k0", "model", 1.0, positive=True)
        plan = sy.ring_plan_2d(k0, _num(mc, "directions", "mc", 64, integer=True))
        side = _num(mc, "window", "mc", 20.0, positive=True)
        window = ((0.0, side), (0.0, side))
        task = en.DislocationCountTask(plan, window, _num(mc, "step", "mc", 0.1, positive=True),
                                       per_area=True)
        analytic = lg.dislocation_density(plan.realized["lambda20"])
    else:
        params = _palm_params(cfg)
        R = np.array([[math.cos(params.kappa), -math.sin(params.kappa)],
                      [math.sin(params.kappa), math.cos(params.kappa)]])
        Q = R @ np.diag([params.lambda_plus, params.lambda_minus]) @ R.T
        gamma, spec2 = sy.anisotropic_gaussian_covariance(Q / params.lambda_plus)
        side = _num(mc, "window", "mc", 20.0, positive=True)
        window = ((-side / 2, side / 2), (-side / 2, side / 2))
        plan = sy.build_lattice_plan_2d(gamma, window, _num(mc, "step", "mc", 0.1, positive=True),
                                        margin=10.0, target=spec2)
        edges = np.linspace(-math.pi, math.pi, _num(mc, "bins", "mc", 24, integer=True) + 1)
        task = en.AngleHistogramTask(plan, tuple(edges))
        analytic = None
    ens = en.run_ensemble(task, reps, seed, workers)
    ens.to_csv(out / "ensemble.csv")
    res = {"kind": kind, "replications": reps, "seed_base": seed, "flags": ens.flag_totals()}
    if analytic is not None:
        z = (ens.mean - analytic) / ens.std_error if ens.std_error > 0 else 0.0
        res.update(analytic=analytic, mc_mean=ens.mean, mc_std_error=ens.std_error,
                   mc_variance=ens.variance, z_score=z, consistent=bool(abs(z) <= 3.0))
    else:
        p, se = en.palm_histogram(ens)
        exact = lg.palm_bin_masses(params, edges, density=lg.palm_angle_density_exact)
        printed = lg.palm_bin_masses(params, edges)
        z_exact = (p - exact) / se
        z_printed = (p - printed) / se
        write_csv(out / "palm_histogram.csv",
                  ["phi_low", "phi_high", "mc_probability", "mc_std_error", "density_mass",
                   "density_exact_mass"],
                  zip(edges[:-1], edges[1:], p, se, printed, exact))
        res.update(max_abs_z=float(np.max(np.abs(z_printed))),
                   max_abs_z_exact=float(np.max(np.abs(z_exact))),
                   consistent=bool(np.all(np.abs(z_printed) <= 3.0)),
                   consistent_exact=bool(np.all(np.abs(z_exact) <= 3.0)))
        extra["palm_histogram.csv"] = True
    return res, ["ensemble.csv", *extra]


def _task_ergodic_demo(cfg, out):
    from .simulate import ensemble as en
    from .simulate import synthesis as sy

    spec2, Q = _model_2d(cfg) if _section(cfg, "model") else (None, np.eye(2))
    if Q is None:
        raise ConfigError("model.family", "the movie needs family gaussian2d")
    mc = _section(cfg, "mc")
    side = _num(mc, "window", "mc", 20.0, positive=True)
    gamma, _ = sy.anisotropic_gaussian_covariance(Q)
    plan = sy.build_lattice_plan_2d(gamma, ((0.0, side), (0.0, side)),
                                    _num(mc, "step", "mc", 0.1, positive=True), 8.0)
    u = _num(_section(cfg, "geometry"), "u", "geometry", 0.0)
    horizon = _num(mc, "horizon", "mc", 200.0, positive=True)
    frames = _num(mc, "frames", "mc", 200, integer=True)
    seed = _num(mc, "seed", "mc", 0, integer=True)
    ta = en.time_average_level_functional(plan, en.row_crossings_per_length(u), horizon, frames,
                                          seed)
    r = plan.realized
    target = lg.crossing_intensity(Spectrum3D(r["lambda00"], r["lambda20"], r["lambda02"],
                                              r["lambda11"]), u)
    write_csv(out / "ergodic_running_mean.csv", ["t", "frame_value", "running_mean"],
              zip(ta.times, ta.frames, ta.running_mean))
    return {"time_average": ta.value, "rice_value": target,
            "relative_error": ta.value / target - 1.0, "band": ta.band,
            "seed": seed}, ["ergodic_running_mean.csv"]


DISPATCH = {
    "sp1d-expect": _task_sp1d_expect,
    "sp1d-exact": _task_sp1d_exact,
    "sp1d-variance": _task_sp1d_variance,
    "sp2d-intensity": _task_sp2d_intensity,
    "sp2d-m2": _task_sp2d_m2,
    "palm-angle": _task_palm_angle,
    "crossing-intensity": _task_crossing_intensity,
    "dislocation-density": _task_dislocation_density,
    "dislocation-correlation": _task_dislocation_correlation,
    "mc-verify": _task_mc_verify,
    "ergodic-demo": _task_ergodic_demo,
    "compare-figures": _task_compare_figures,
}


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def load_config(path) -> dict:
    """Read a YAML or JSON mapping."""
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from None
    except yaml.YAMLError as exc:
        raise ConfigError("--config", f"not valid YAML/JSON: {exc}") from None
    if cfg is None:
        return {}
    if not isinstance(cfg, dict):
        raise ConfigError("--config", "top level must be a mapping")
    return cfg


def _csv_to_json(path: Path) -> Path:
    """Rewrite a CSV table as a JSON list of records and remove the CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]

    def cell(v):
        try:
            return int(v)
        except ValueError:
            try:
                return float(v)
            except ValueError:
                return v

    target = path.with_suffix(".json")
    with open(target, "w") as fh:
        json.dump([dict(zip(header, map(cell, r))) for r in body], fh, indent=1)
        fh.write("\n")
    path.unlink()
    return target


def _output_settings(cfg: dict, out_dir):
    sec = _section(cfg, "output")
    fmt = sec.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("output.format", "must be csv or json")
    path = out_dir if out_dir is not None else sec.get("path", DEFAULT_OUT)
    if not isinstance(path, (str, Path)):
        raise ConfigError("output.path", "must be a string")
    return Path(path), fmt


def run(task: str, cfg: dict, out_dir=None) -> dict:
    """Validate, dispatch and write outputs; returns the summary dictionary.

    ``out_dir`` overrides ``output.path``. With ``output.format: json`` the
    tables are written as JSON lists of records instead of CSV.

    Raises
    ------
    ConfigError
        Invalid configuration.
    RiceError
        Numerical failure inside a task.
    """
    if task not in DISPATCH:
        raise ConfigError("task", f"unknown task {task!r}")
    cfg = copy.deepcopy(cfg)
    if cfg.get("task", task) != task:
        raise ConfigError("task", f"config says {cfg['task']!r} but the command is {task!r}")
    cfg["task"] = task
    echo = copy.deepcopy(cfg)
    out, fmt = _output_settings(cfg, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results, files = DISPATCH[task](cfg, out)
    if fmt == "json":
        files = [_csv_to_json(out / name).name for name in files]
    mc = cfg.get("mc") or {}
    summary = {
        "task": task,
        "version": __version__,
        "config": echo,
        "seeds": {"seed_base": mc.get("seed", 0)},
        "results": results,
        "files": files,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(_jsonable(summary), fh, indent=2)
        fh.write("\n")
    return summary


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ricewaves",
                                description="Specular points, level curves and dislocations "
                                            "of Gaussian random fields.")
    p.add_argument("task", choices=TASKS)
    p.add_argument("--config", help="YAML or JSON configuration file")
    p.add_argument("--out", help=f"output directory (default output.path or {DEFAULT_OUT})")
    p.add_argument("--seed", type=int, help="override mc.seed")
    p.add_argument("--replications", type=int, help="override mc.replications")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else {}
        if args.seed is not None or args.replications is not None:
            mc = cfg.setdefault("mc", {})
            if not isinstance(mc, dict):
                raise ConfigError("mc", "must be a mapping")
            if args.seed is not None:
                mc["seed"] = args.seed
            if args.replications is not None:
                mc["replications"] = args.replications
        summary = run(args.task, cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RiceError, ArithmeticError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps(_jsonable(summary["results"]), indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
