import math

import numpy as np
import pytest

from ricewaves.errors import DomainError
from ricewaves.simulate import counting as ct
from ricewaves.simulate import synthesis as sy


def _fixed_path(frequencies, coeffs, window, step, orders=(0, 1, 2)):
    """Path ``Re sum_j c_j exp(i f_j x)`` with prescribed complex coefficients."""
    plan = sy.plan_from_nodes_1d(frequencies, np.abs(coeffs) ** 2, window, step)
    probe = sy.SampledPath1D(plan.grid, (), plan, np.asarray(coeffs, dtype=complex))
    derivs = tuple(probe.evaluate(plan.grid, m) for m in range(max(orders) + 1))
    return sy.SampledPath1D(plan.grid, derivs, plan, np.asarray(coeffs, dtype=complex))


@pytest.mark.parametrize("seed", range(5))
def test_random_phase_sinusoid_has_ten_zeros(seed):
    L = 10 * math.pi
    plan = sy.plan_from_nodes_1d([1.0], [1.0], (0.0, L), L / 2000)
    path = sy.synthesize_path_1d(plan, seed=seed)
    assert ct.count_zeros_1d(path).count == 10


def test_hidden_pair_recovered_by_refinement():
    path = _fixed_path([0.0, 1.0], [0.9999, 1.0], (0.0, 2 * math.pi), 0.1)
    assert np.all(path.derivs[0] > 0)  # no sign change visible on the grid
    res = ct.count_zeros_1d(path)
    assert res.count == 2
    assert res.flags["refined_intervals"] >= 1
    coarse = ct.count_zeros_1d(sy.SampledPath1D(path.x, path.derivs[:1], path.plan, path.coeffs))
    assert coarse.count == 0


def test_specular_selector_and_window():
    # W'(x) = cos x; cos x = 0.1 x has 3 solutions on [0, 12]
    path = _fixed_path([1.0], [-1j], (0.0, 12.0), 0.01)
    assert np.allclose(path.derivs[1], np.cos(path.x))
    assert ct.count_zeros_1d(path, order=1, slope=0.1).count == 3
    assert ct.count_zeros_1d(path, order=1, slope=0.1, window=(0.0, 6.0)).count == 2


def test_resolution_guard_flag():
    path = _fixed_path([1.0], [1.0], (0.0, 10.0), 0.1)
    assert ct.count_zeros_1d(path, expected_rate=1.0).flags["resolution_guard"] == 1
    assert ct.count_zeros_1d(path, expected_rate=0.1).flags["resolution_guard"] == 0


def test_section_crossings():
    x = np.linspace(0, 4 * math.pi, 401) + 0.05
    values = np.sin(x)[:, None] * np.ones((1, 3))
    assert list(ct.section_crossings(values, 0.0, axis=0)) == [4, 4, 4]
    assert list(ct.section_crossings(values, 2.0, axis=0)) == [0, 0, 0]
    assert ct.section_crossings(values.T, 0.0, axis=1).tolist() == [4, 4, 4]


# ------------------------------------------------------------------ joint zeros

@pytest.fixture
def grid():
    x = np.linspace(-1, 1, 21)
    return x, x.copy(), *np.meshgrid(x, x, indexing="ij")


def test_linear_joint_zero(grid):
    x, y, X, Y = grid
    z = np.array([0.33, -0.47])

    def evaluator(p):
        A = np.array([[2.0, 0.5], [-0.3, 1.0]])
        return A @ (p - z), A

    F1 = 2.0 * (X - z[0]) + 0.5 * (Y - z[1])
    F2 = -0.3 * (X - z[0]) + 1.0 * (Y - z[1])
    res = ct.count_joint_zeros(F1, F2, x, y, evaluator=evaluator)
    assert (res.count, res.signed) == (1, 1)
    assert np.allclose(res.roots[0], z, atol=1e-12)
    assert res.flags["newton_fallback"] == 0
    swapped = ct.count_joint_zeros(F2, F1, x, y)
    assert (swapped.count, swapped.signed) == (1, -1)
    assert ct.count_joint_zeros(F1 + 10, F2, x, y).count == 0
    assert ct.count_joint_zeros(F1, F2, x, y, window=((0.5, 1.0), (-1, 1))).count == 0


def test_bilinear_fallback_locates_root(grid):
    x, y, X, Y = grid
    F1, F2 = X - 0.12, Y + 0.61
    res = ct.count_joint_zeros(F1, F2, x, y, evaluator=lambda p: (np.zeros(2), np.zeros((2, 2))))
    assert res.flags["newton_fallback"] == 1
    assert np.allclose(res.roots[0], [0.12, -0.61], atol=1e-12)


def test_cell_windings_two_opposite_zeros(grid):
    x, y, X, Y = grid
    # zeros at (+-0.45, 0.05): indices of opposite sign
    F1 = X ** 2 - 0.45 ** 2
    F2 = Y - 0.05
    w = ct.cell_windings(F1, F2)
    assert sorted(w[w != 0].tolist()) == [-1, 1]
    res = ct.count_joint_zeros(F1, F2, x, y)
    assert (res.count, res.signed) == (2, 0)


@pytest.mark.parametrize("seed", range(10))
def test_weak_field_single_specular_point(seed):
    ring = sy.ring_plan_2d(1.0, 16)
    plan = sy.direct_plan_2d(ring.nodes, 1e-4 * ring.weights)
    x = np.linspace(-2, 2, 81)
    f = sy.synthesize_direct_2d(plan, x, x, seed=seed, keys=("Wx", "Wy"))
    res = ct.count_specular_2d(f, 1.0, refine=True)
    assert res.count == 1
    assert np.hypot(*res.roots[0]) < 0.03
    # the Jacobian is near +I: index +1
    assert res.signed == 1


def test_specular_count_invariant_under_grid_refinement():
    Q = sy.rotated_anisotropy(0.3, 0.4)
    gamma, spec = sy.anisotropic_gaussian_covariance(Q)
    plan = sy.build_lattice_plan_2d(gamma, ((-10, 10), (-10, 10)), 0.1, margin=9.0, target=spec)
    for seed in range(3):
        a = sy.synthesize_lattice_2d(plan, seed=seed, keys=("Wx", "Wy"))
        b = sy.synthesize_lattice_2d(plan, seed=seed, keys=("Wx", "Wy"), oversample=2)
        ca = ct.count_specular_2d(a, 0.3).count
        cb = ct.count_specular_2d(b, 0.3).count
        assert ca == cb
        assert ca > 0


def test_dislocations_require_shared_grid():
    plan = sy.ring_plan_2d(1.0, 8)
    f = sy.synthesize_direct_2d(plan, np.linspace(0, 1, 5), np.linspace(0, 1, 5), seed=0)
    g = sy.synthesize_direct_2d(plan, np.linspace(0, 2, 5), np.linspace(0, 1, 5), seed=1)
    with pytest.raises(DomainError):
        ct.count_dislocations(f, g)
    with pytest.raises(DomainError):
        ct.count_specular_2d(f, 0.0)


# ------------------------------------------------------------------ level curves

def _field(x, y, W, Wx, Wy):
    return sy.Field2D(x, y, {"W": W, "Wx": Wx, "Wy": Wy})


def test_level_curve_plane():
    x = np.linspace(0, 2, 41)
    X, Y = np.meshgrid(x, x, indexing="ij")
    a = 0.3
    c, s = math.cos(a), math.sin(a)
    W = c * X + s * Y
    res = ct.sample_level_curve_angles(_field(x, x, W, c + 0 * X, s + 0 * X), u=0.5)
    assert np.allclose(res.angles, a)
    # the line c x + s y = 0.5 meets x = 0 at y = 0.5 / s and y = 0 at x = 0.5 / c
    assert res.total_length == pytest.approx(math.hypot(0.5 / c, 0.5 / s), rel=1e-12)
    assert res.flags["saddle_cells"] == 0


def test_level_curve_circle():
    x = np.linspace(-1.5, 1.5, 301)
    X, Y = np.meshgrid(x, x, indexing="ij")
    R = 0.9
    res = ct.sample_level_curve_angles(_field(x, x, X ** 2 + Y ** 2, 2 * X, 2 * Y), u=R * R)
    assert res.total_length == pytest.approx(2 * math.pi * R, rel=1e-4)
    # outward normal: the angle equals the polar angle of the segment
    hist, _ = np.histogram(res.angles, bins=8, range=(-math.pi, math.pi), weights=res.lengths)
    assert np.allclose(hist, 2 * math.pi * R / 8, rtol=0.02)


def test_level_curve_saddle_flag_and_window():
    x = np.linspace(-1.05, 1.05, 22)
    X, Y = np.meshgrid(x, x, indexing="ij")
    res = ct.sample_level_curve_angles(_field(x, x, X * Y, Y, X), u=0.0)
    assert res.flags["saddle_cells"] >= 1
    # the cross through the centre cell is resolved as two corner cuts
    h = x[1] - x[0]
    assert res.total_length == pytest.approx(4 * 1.05 - 2 * h + math.sqrt(2) * h, rel=1e-9)
    sub = ct.sample_level_curve_angles(_field(x, x, X * Y, Y, X), u=0.0,
                                       window=((0.05, 1.05), (-1.05, 1.05)))
    assert sub.total_length == pytest.approx(1.0, rel=1e-9)
