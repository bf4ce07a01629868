import math

import numpy as np
import pytest
from scipy import integrate

from ricewaves import level_geometry as lg
from ricewaves.errors import DegeneracyError, DomainError
from ricewaves.spectral_models import Spectrum3D


# ---------------------------------------------------------------- crossings

def test_crossing_intensity_values():
    s = Spectrum3D(1.0, 1.0, 1.0, 0.0)
    assert lg.crossing_intensity(s, 0.0) == pytest.approx(1 / math.pi, abs=1e-6)
    u = math.sqrt(2 * math.log(2.0))
    assert lg.crossing_intensity(s, u) == pytest.approx(0.5 / math.pi, rel=1e-14)


def test_crossing_intensity_monotone_and_linear():
    s = Spectrum3D(2.0, 3.0, 1.0, 0.2)
    u = np.linspace(0, 4, 9)
    vals = [lg.crossing_intensity(s, v) for v in u]
    assert np.all(np.diff(vals) < 0)
    assert lg.crossing_intensity(s, -1.0) == lg.crossing_intensity(s, 1.0)
    assert lg.crossing_intensity(s, 0.5, 3.0) == pytest.approx(3 * lg.crossing_intensity(s, 0.5))
    with pytest.raises(DomainError):
        lg.crossing_intensity(s, 0.0, 0.0)


# ---------------------------------------------------------------- Palm angle

@pytest.mark.parametrize("density", [lg.palm_angle_density, lg.palm_angle_density_exact])
@pytest.mark.parametrize("gamma2,kappa", [(0.0, 0.0), (0.25, math.pi / 4), (0.9, -1.2),
                                          (0.999, 0.3)])
def test_palm_densities_normalised(density, gamma2, kappa):
    p = lg.PalmAngleParams.from_anisotropy(gamma2, kappa)
    v, _ = integrate.quad(lambda t: density(p, t), -math.pi, math.pi, epsabs=0,
                          epsrel=1e-13, limit=400)
    assert v == pytest.approx(1.0, abs=1e-10)


def test_palm_isotropic_uniform():
    p = lg.PalmAngleParams.from_anisotropy(0.0, 0.7)
    phi = np.linspace(-math.pi, math.pi, 17)
    assert np.allclose(lg.palm_angle_density(p, phi), 1 / (2 * math.pi), atol=1e-15)
    assert np.allclose(lg.palm_angle_density_exact(p, phi), 1 / (2 * math.pi), atol=1e-15)


def test_palm_symmetry_and_extremes():
    g2, kappa = 0.36, 0.4
    p = lg.PalmAngleParams.from_anisotropy(g2, kappa)
    phi = np.linspace(0.1, 3.0, 7)
    g = lg.palm_angle_density
    assert np.allclose(g(p, kappa + phi), g(p, kappa - phi))
    assert np.allclose(g(p, phi), g(p, phi + 2 * math.pi))
    ratio = g(p, kappa + math.pi / 2) / g(p, kappa)
    assert ratio == pytest.approx((1 - g2) ** -0.5, rel=1e-13)
    ge = lg.palm_angle_density_exact
    assert ge(p, kappa) / ge(p, kappa + math.pi / 2) == pytest.approx((1 - g2) ** -1.5, rel=1e-13)


def test_palm_exact_density_by_direct_integration():
    """Density of the gradient angle weighted by |grad W|, by polar quadrature."""
    G = np.array([[1.0, 0.3], [0.3, 0.6]])
    Gi = np.linalg.inv(G)
    p = lg.palm_params_from_gradient(G)

    def weight(phi):
        e = np.array([math.cos(phi), math.sin(phi)])
        q = e @ Gi @ e
        # int_0^inf r * r * exp(-q r^2 / 2) dr = sqrt(pi / 2) q^{-3/2}
        return math.sqrt(math.pi / 2) * q ** -1.5

    total, _ = integrate.quad(weight, -math.pi, math.pi, epsrel=1e-12)
    for phi in (-2.0, 0.3, 1.1):
        assert lg.palm_angle_density_exact(p, phi) == pytest.approx(weight(phi) / total,
                                                                    rel=1e-10)


def test_palm_params_from_gradient():
    p = lg.palm_params_from_gradient(np.array([[2.0, 0.0], [0.0, 1.5]]))
    assert p.kappa == pytest.approx(0.0)
    assert p.gamma2 == pytest.approx(0.25)
    p = lg.palm_params_from_gradient(np.array([[1.0, 0.0], [0.0, 4.0]]))
    assert p.kappa == pytest.approx(math.pi / 2)
    p = lg.palm_params_from_gradient(np.eye(2))
    assert (p.kappa, p.gamma2) == (0.0, 0.0)
    with pytest.raises(DegeneracyError):
        lg.palm_params_from_gradient(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(DomainError):
        lg.PalmAngleParams(1.0, 0.5, 0.0, 0.3)


def test_bin_masses_sum_to_one():
    p = lg.PalmAngleParams.from_anisotropy(0.25, math.pi / 4)
    edges = np.linspace(-math.pi, math.pi, 25)
    assert lg.palm_bin_masses(p, edges).sum() == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------- dislocations

def test_dislocation_density():
    assert lg.dislocation_density(0.5) == pytest.approx(1 / (4 * math.pi))
    with pytest.raises(DomainError):
        lg.dislocation_density(0.0)


def test_ring_model():
    m = lg.ring_spectrum_model(1.0)
    assert m.lambda2 == 0.5
    assert m.rho(0.0) == 1.0
    # rho'' near zero approaches -lambda2
    assert float(m.rho2(1e-4)) == pytest.approx(-0.5, rel=1e-6)
    h = 1e-4
    assert float(m.rho1(2.0)) == pytest.approx((m.rho(2 + h) - m.rho(2 - h)) / (2 * h), rel=1e-7)


def test_radial_model_matches_closed_form():
    g = lg.gaussian_wave_model(1.0)
    num = lg.radial_spectrum_model(g.Pi, 12.0)
    r = np.array([0.3, 1.0, 2.5])
    assert np.allclose(num.rho(r), g.rho(r), atol=1e-9)
    assert np.allclose(num.rho1(r), g.rho1(r), atol=1e-9)
    assert np.allclose(num.rho2(r), g.rho2(r), atol=1e-8)
    assert num.lambda2 == pytest.approx(g.lambda2, rel=1e-8)


def test_independence_limit_exact():
    F0 = 0.5
    q = lg.local_quantities(10.0, 0.0, 0.0, 0.0, 0.0, F0)
    assert (q.A2, q.Z) == (0.0, 1.0)
    A = lg.dislocation_correlation_from_local(q)
    d2 = lg.dislocation_density(F0)
    assert A / d2 ** 2 == pytest.approx(1.0, abs=1e-10)


def test_t_zero_limit_of_bracket():
    q = lg.dislocation_local(lg.ring_spectrum_model(), 1.7)
    t = 1e-3
    t2 = t * t
    z1, z2 = q.Z1(t), q.Z2(t)
    f = (z2 - 2 * z1 * z1 * t2) / ((1 + t2) * z2 * math.sqrt(z2 - z1 * z1 * t2))
    assert (1 - f) / t2 == pytest.approx(0.5 * (3 - q.Z + 3 * q.A2 ** 2), rel=1e-5)


def test_correlation_non_negative_and_decays():
    m = lg.ring_spectrum_model()
    r = np.linspace(0.25, 12.0, 24)
    prof = lg.dislocation_correlation_profile(m, r)
    assert np.all(prof >= 0)
    assert lg.normalized_dislocation_correlation(m, 50.0) == pytest.approx(1.0, abs=0.05)


def test_zero_separation_rejected():
    with pytest.raises(DomainError):
        lg.dislocation_local(lg.ring_spectrum_model(), 0.0)
    with pytest.raises(DegeneracyError):
        lg.local_quantities(1.0, 1.0, 0.0, 0.0, 0.0, 1.0)


def _conditional_pair_oracle(model, r, n, seed):
    """A(r) = p(0) E[|det J(0)| |det J(r)| | xi = eta = 0 at both sites]."""
    C = float(model.rho(r))
    E = float(model.rho1(r))
    F2 = float(model.rho2(r))
    u = np.array([1.0, 0.0])
    P = np.outer(u, u)
    hess_r = F2 * P + E / r * (np.eye(2) - P)
    # Ordering: W(0), W(r u), grad W(0), grad W(r u).
    S = np.zeros((6, 6))
    S[0, 0] = S[1, 1] = 1.0
    S[0, 1] = S[1, 0] = C
    g = E * u  # gradient of the covariance at lag r u
    S[4:6, 0] = g       # Cov(grad W(r u), W(0)) = grad C(r u)
    S[2:4, 1] = -g      # Cov(grad W(0), W(r u)) = grad C(-r u)
    S[0, 4:6] = g
    S[1, 2:4] = -g
    S[2:4, 2:4] = S[4:6, 4:6] = model.lambda2 * np.eye(2)
    S[2:4, 4:6] = -hess_r  # Cov(d_i W(0), d_j W(r u)) = -d_i d_j C(-r u)
    S[4:6, 2:4] = -hess_r
    Svv, Sgv, Sgg = S[:2, :2], S[2:, :2], S[2:, 2:]
    L = np.linalg.cholesky(Sgg - Sgv @ np.linalg.solve(Svv, Sgv.T))
    rng = np.random.default_rng(seed)
    p0 = (1.0 / (2 * math.pi * math.sqrt(1 - C * C))) ** 2
    batches = []
    for _ in range(10):
        gx = rng.standard_normal((n, 4)) @ L.T
        gy = rng.standard_normal((n, 4)) @ L.T
        d0 = gx[:, 0] * gy[:, 1] - gx[:, 1] * gy[:, 0]
        d1 = gx[:, 2] * gy[:, 3] - gx[:, 3] * gy[:, 2]
        batches.append(p0 * np.abs(d0 * d1).mean())
    b = np.array(batches)
    return b.mean(), b.std(ddof=1) / math.sqrt(b.size)


@pytest.mark.parametrize("r", [0.8, 2.0])
def test_pair_correlation_conditional_monte_carlo(r):
    m = lg.ring_spectrum_model()
    est, se = _conditional_pair_oracle(m, r, 500_000, seed=int(r * 10))
    assert abs(lg.dislocation_correlation(m, r) - est) < 3.5 * se
