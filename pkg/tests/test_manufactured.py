import numpy as np
import pytest

from stfem.manufactured import EX3_C, affine, example, pde_residual_check, sample_interior
from stfem.mesh import Geometry


def test_example2_midpoint():
    sol = example(2)
    assert sol.u(np.array([[0.5, 0.5]]), np.array([0.5]))[0] == pytest.approx(1.0, abs=1e-15)


def test_example3_vanishes_initially(rng):
    x = rng.uniform(size=(50, 2))
    np.testing.assert_array_equal(example(3).u(x, np.zeros(50)), 0.0)


def test_example3_constant():
    assert EX3_C == (2 * np.pi**2 + 1) / (2 * np.pi**2 + 2)


def test_example1_source_at_origin_slice():
    # f(0.5, 0) = -pi sin(pi/2) sin(0) + pi^2 sin(pi/2) cos(0) = pi^2
    f = example(1).f(np.array([[0.5]]), np.array([0.0]))[0]
    assert f == pytest.approx(np.pi**2, rel=1e-15)


def test_example1_source_by_finite_differences():
    sol = example(1)
    x, t, h = np.array([[0.5]]), np.array([0.0]), 1e-4
    ut = (sol.u(x, t + h) - sol.u(x, t - h)) / (2 * h)
    uxx = (sol.u(x + h, t) - 2 * sol.u(x, t) + sol.u(x - h, t)) / h**2
    assert (ut - uxx)[0] == pytest.approx(np.pi**2, rel=1e-6)


@pytest.mark.parametrize("idx", [1, 2, 3, 4])
def test_residual_with_closed_form_laplacian(idx, rng):
    sol = example(idx)
    pts = sample_interior(sol.geometry, 1000, rng)
    x, t = pts[:, :-1], pts[:, -1]
    res = sol.dudt(x, t) - sol.laplacian(x, t) - sol.f(x, t)
    assert np.abs(res).max() <= 1e-10


@pytest.mark.parametrize("idx", [1, 2, 3, 4])
def test_residual_against_finite_differences(idx):
    assert pde_residual_check(example(idx), 1000, step=1e-3) <= 1e-6


@pytest.mark.parametrize("geom", [Geometry.UNIT_SQUARE, Geometry.UNIT_CUBE])
def test_affine_residual(geom):
    assert pde_residual_check(affine(geom), 200) <= 1e-10


@pytest.mark.parametrize("idx", [1, 2, 3, 4])
def test_gradients_by_finite_differences(idx, rng):
    sol = example(idx)
    pts = sample_interior(sol.geometry, 100, rng)
    x, t = pts[:, :-1], pts[:, -1]
    h = 1e-6
    for k in range(sol.dim):
        e = np.zeros(sol.dim)
        e[k] = h
        fd = (sol.u(x + e, t) - sol.u(x - e, t)) / (2 * h)
        np.testing.assert_allclose(sol.grad_x(x, t)[:, k], fd, atol=1e-7)
    fd = (sol.u(x, t + h) - sol.u(x, t - h)) / (2 * h)
    np.testing.assert_allclose(sol.dudt(x, t), fd, atol=1e-7)


def _boundary_samples(geom, part, rng, n=200):
    s = rng.uniform(size=(n, geom.dim + 1))
    if part == "initial":
        s[:, -1] = 0.0
    elif part == "terminal":
        s[:, -1] = 1.0
    else:
        axis = rng.integers(geom.dim, size=n)
        s[np.arange(n), axis] = rng.integers(2, size=n).astype(float)
    return geom.map(s)


@pytest.mark.parametrize("idx", [1, 2, 3, 4])
def test_homogeneity_flags(idx, rng):
    sol = example(idx)
    for part, flag in (
        ("initial", sol.zero_initial),
        ("lateral", sol.zero_lateral),
        ("terminal", sol.zero_terminal),
    ):
        vals = sol.at(_boundary_samples(sol.geometry, part, rng))
        if flag:
            assert np.abs(vals).max() <= 1e-12, part
        else:
            assert np.abs(vals).max() > 1e-3, part


def test_flags_match_examples():
    assert not example(1).zero_initial
    assert not example(4).zero_lateral
    for idx in (2, 3):
        sol = example(idx)
        assert sol.zero_initial and sol.zero_lateral


@pytest.mark.parametrize("idx", [0, 5, "x"])
def test_unknown_example(idx):
    with pytest.raises(ValueError):
        example(idx)


def test_fd_check_needs_identity():
    from stfem.coefficients import CoefficientField
    from dataclasses import replace

    sol = replace(example(1), coefficient=CoefficientField.constant([[2.0]]))
    with pytest.raises(ValueError):
        pde_residual_check(sol)
