import math

import numpy as np
import pytest

from ricewaves.errors import DomainError
from ricewaves.spectral_models import builtin_covariance_gaussian, builtin_covariance_wendland
from ricewaves.simulate import synthesis as sy


@pytest.fixture(scope="module")
def wendland_plan():
    cov = builtin_covariance_wendland(1.0)
    return cov, sy.build_plan_1d(cov, (0.0, 20.0), 0.01, seed=3)


def test_lattice_covariance_exact_on_grid(wendland_plan):
    cov, plan = wendland_plan
    lags = plan.step * np.arange(0, 300, 7)
    realised = np.cos(np.outer(lags, plan.frequencies)) @ plan.weights
    assert np.allclose(realised, cov.gamma(lags), atol=1e-12)
    assert plan.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_realised_moments_close_to_target(wendland_plan):
    _, plan = wendland_plan
    r = plan.realized
    assert r["lambda2"] == pytest.approx(r["target_lambda2"], rel=1e-3)
    assert r["lambda4"] == pytest.approx(r["target_lambda4"], rel=1e-3)


def test_coarse_step_rejected():
    cov = builtin_covariance_wendland(1.0)
    with pytest.raises(DomainError):
        sy.build_plan_1d(cov, (0.0, 5.0), 0.2)


def test_path_determinism(wendland_plan):
    _, plan = wendland_plan
    a = sy.synthesize_path_1d(plan, seed=11)
    b = sy.synthesize_path_1d(plan, seed=11)
    c = sy.synthesize_path_1d(plan, seed=12)
    assert np.array_equal(a.derivs[0], b.derivs[0])
    assert not np.array_equal(a.derivs[0], c.derivs[0])
    assert np.array_equal(sy.synthesize_path_1d(plan).derivs[1],
                          sy.synthesize_path_1d(plan, seed=plan.seed).derivs[1])


def test_fft_samples_match_direct_sum(wendland_plan):
    _, plan = wendland_plan
    path = sy.synthesize_path_1d(plan, seed=5)
    idx = np.array([0, 17, 999, plan.count - 1])
    for m in (0, 1, 2):
        direct = path.evaluate(plan.grid[idx], m)
        assert np.allclose(direct, path.derivs[m][idx], atol=1e-9 * np.abs(path.derivs[m]).max())


def test_derivatives_against_finite_differences(wendland_plan):
    _, plan = wendland_plan
    path = sy.synthesize_path_1d(plan, seed=8)
    x0 = np.array([3.3, 7.71])
    errs = []
    for h in (2e-3, 1e-3):
        fd = (path.evaluate(x0 + h) - path.evaluate(x0 - h)) / (2 * h)
        errs.append(np.abs(fd - path.evaluate(x0, 1)).max())
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_lag_covariance_over_replications():
    cov = builtin_covariance_gaussian(1.0)
    plan = sy.build_plan_1d(cov, (0.0, 2.0), 0.05)
    n = 4000
    samples = np.array([sy.synthesize_path_1d(plan, seed=s, orders=(0, 1)).derivs[0][[0, 10, 40]]
                        for s in range(n)])
    for j, lag in ((1, 0.5), (2, 2.0)):
        prod = samples[:, 0] * samples[:, j]
        se = prod.std(ddof=1) / math.sqrt(n)
        assert abs(prod.mean() - math.exp(-lag * lag / 2)) < 3.5 * se
    assert samples[:, 0].var() == pytest.approx(1.0, abs=3.5 * math.sqrt(2 / n))


def test_single_node_variance():
    plan = sy.plan_from_nodes_1d([1.0], [1.0], (0.0, 10.0), 0.1)
    vals = np.array([sy.synthesize_path_1d(plan, seed=s, orders=(0,)).derivs[0][3]
                     for s in range(3000)])
    assert vals.var() == pytest.approx(1.0, abs=3.5 * math.sqrt(2 / 3000))
    p = sy.synthesize_path_1d(plan, seed=1, orders=(0, 1))
    # W'' = -W for a single unit-frequency node
    assert np.allclose(p.evaluate(p.x, 2), -p.derivs[0])


# -------------------------------------------------------------------- 2D

@pytest.fixture(scope="module")
def aniso_plan():
    Q = sy.rotated_anisotropy(0.25, math.pi / 4)
    gamma, spec = sy.anisotropic_gaussian_covariance(Q)
    plan = sy.build_lattice_plan_2d(gamma, ((0, 6), (0, 6)), 0.2, margin=9.0, target=spec)
    return Q, gamma, spec, plan


def test_rotated_anisotropy():
    Q = sy.rotated_anisotropy(0.36, 0.5, ell=2.0)
    w, v = np.linalg.eigh(Q)
    assert np.allclose(w, [0.64 / 4, 1 / 4])
    assert abs(abs(v[:, 1] @ [math.cos(0.5), math.sin(0.5)]) - 1) < 1e-12


def test_lattice_2d_exact_covariance(aniso_plan):
    Q, gamma, spec, plan = aniso_plan
    KX, KY = np.meshgrid(plan.kx, plan.ky, indexing="ij")
    for h in ((0.4, -0.6), (1.0, 1.2), (0.0, 0.0)):
        realised = np.sum(plan.weights * np.cos(KX * h[0] + KY * h[1]))
        assert realised == pytest.approx(float(gamma(*h)), abs=1e-10)
    assert plan.realized["lambda20"] == pytest.approx(Q[0, 0], rel=1e-3)
    assert plan.realized["lambda11"] == pytest.approx(Q[0, 1], rel=1e-3)


def test_lattice_pair_gradient_covariance(aniso_plan):
    Q, _, _, plan = aniso_plan
    g_re, g_im, cross = [], [], []
    for s in range(600):
        f1, f2 = sy.synthesize_lattice_2d(plan, seed=s, keys=("W", "Wx", "Wy"), pair=True)
        g_re.append([f1.values["Wx"][5, 7], f1.values["Wy"][5, 7]])
        g_im.append([f2.values["Wx"][5, 7], f2.values["Wy"][5, 7]])
        cross.append(f1.values["W"][5, 7] * f2.values["W"][5, 7])
    for g in (np.array(g_re), np.array(g_im)):
        emp = g.T @ g / len(g)
        se = math.sqrt(2.0 / len(g)) * np.sqrt(np.outer(np.diag(Q), np.diag(Q)))
        assert np.all(np.abs(emp - Q) < 4 * se)
    cross = np.array(cross)
    assert abs(cross.mean()) < 4 * cross.std() / math.sqrt(cross.size)


def test_oversample_consistent(aniso_plan):
    *_, plan = aniso_plan
    a = sy.synthesize_lattice_2d(plan, seed=4, keys=("W", "Wxy"))
    b = sy.synthesize_lattice_2d(plan, seed=4, keys=("W", "Wxy"), oversample=2)
    assert b.step == pytest.approx(a.step / 2)
    assert np.allclose(b.values["W"][::2, ::2], a.values["W"], atol=1e-10)
    assert np.allclose(b.values["Wxy"][::2, ::2], a.values["Wxy"], atol=1e-9)


def test_analytic_evaluator_matches_grid(aniso_plan):
    *_, plan = aniso_plan
    f1, f2 = sy.synthesize_lattice_2d(plan, seed=9, keys=("W", "Wx", "Wyy"), pair=True,
                                      analytic=True)
    pts = np.array([[f1.x[3], f1.y[11]], [f1.x[20], f1.y[0]]])
    for f in (f1, f2):
        ev = f.evaluate(pts, keys=("W", "Wx", "Wyy"))
        for key in ev:
            grid = np.array([f.values[key][3, 11], f.values[key][20, 0]])
            assert np.allclose(ev[key], grid, atol=1e-6)


def test_ring_plan_isotropy():
    plan = sy.ring_plan_2d(2.0, 64)
    r = plan.realized
    assert r["lambda00"] == pytest.approx(1.0)
    assert r["lambda20"] == pytest.approx(2.0) and r["lambda02"] == pytest.approx(2.0)
    assert abs(r["lambda11"]) < 1e-12
    assert r["lambda40"] == pytest.approx(3 * 16 / 8)
    with pytest.raises(DomainError):
        sy.ring_plan_2d(1.0, 2)


def test_direct_field_derivatives():
    plan = sy.ring_plan_2d(1.0, 16)
    x = np.linspace(0, 3, 31)
    f = sy.synthesize_direct_2d(plan, x, x, seed=2, keys=("W", "Wx", "Wxx", "Wyy"))
    assert np.allclose(f.values["Wxx"] + f.values["Wyy"], -f.values["W"], atol=1e-12)
    ev = f.evaluate(np.array([[x[4], x[9]]]), keys=("Wx",))
    assert ev["Wx"][0] == pytest.approx(f.values["Wx"][4, 9])
