import numpy as np
import pytest
import scipy.sparse as sp

from stfem.assembly import DofMap, assemble_system
from stfem.exceptions import ConvergenceError, SingularMatrixError
from stfem.linsolve import ILU0, SolverConfig, solve, solve_spd
from stfem.manufactured import example
from stfem.mesh import build_mesh


def dense_elimination(a, b):
    """Gaussian elimination with partial pivoting, written out."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = len(b)
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        a[[k, p]] = a[[p, k]]
        b[[k, p]] = b[[p, k]]
        for i in range(k + 1, n):
            f = a[i, k] / a[k, k]
            a[i, k:] -= f * a[k, k:]
            b[i] -= f * b[k]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - a[i, i + 1:] @ x[i + 1:]) / a[i, i]
    return x


def test_identity():
    np.testing.assert_array_equal(solve(sp.identity(2, format="csr"), rhs=[3.0, -1.0]), [3.0, -1.0])


def test_back_substitution():
    m = sp.csr_matrix([[2.0, 1.0], [0.0, 1.0]])
    np.testing.assert_allclose(solve(m, rhs=[3.0, 1.0]), [1.0, 1.0], rtol=1e-15)


def test_empty_system():
    assert solve(sp.csr_matrix((0, 0)), rhs=np.zeros(0)).shape == (0,)


def test_random_systems_against_dense_oracle(rng):
    for _ in range(100):
        a = sp.random(20, 20, density=0.2, random_state=rng) + sp.diags(rng.uniform(0.5, 2.0, 20))
        a = a.tocsr()
        b = rng.normal(size=20)
        expected = dense_elimination(a.toarray(), b)
        got = solve(a, rhs=b)
        assert np.linalg.norm(got - expected) <= 1e-9 * np.linalg.norm(expected)


def test_singular_matrix():
    with pytest.raises(SingularMatrixError):
        solve(sp.csr_matrix([[1.0, 2.0], [2.0, 4.0]]), rhs=[1.0, 1.0])


def test_gmres_nonconvergence_reports_residual():
    sol = example(1)
    m = build_mesh(sol.geometry, 16)
    s = assemble_system(m, DofMap.for_solution(m, sol), sol.coefficient, sol.f)
    cfg = SolverConfig("gmres", rtol=1e-14, restart=2, maxiter=1, preconditioner="none")
    with pytest.raises(ConvergenceError) as err:
        solve(s, cfg)
    assert err.value.residual > 1e-14


@pytest.mark.parametrize("n", [4, 8, 16])
def test_example1_residual_and_gmres_agreement(n):
    sol = example(1)
    m = build_mesh(sol.geometry, n)
    s = assemble_system(m, DofMap.for_solution(m, sol), sol.coefficient, sol.f)
    x_lu = solve(s)
    assert np.linalg.norm(s.matrix @ x_lu - s.rhs) <= 1e-10 * np.linalg.norm(s.rhs)
    x_gm = solve(s, SolverConfig("gmres", rtol=1e-12))
    assert np.linalg.norm(x_gm - x_lu) <= 1e-7 * np.linalg.norm(x_lu)


def test_gmres_without_preconditioner():
    a = sp.diags([-1.0, 4.0, -1.5], [-1, 0, 1], shape=(30, 30), format="csr")
    b = np.arange(30.0)
    x = solve(a, SolverConfig("gmres", preconditioner="none", rtol=1e-12), rhs=b)
    np.testing.assert_allclose(a @ x, b, atol=1e-9)


def test_ilu0_is_exact_without_fill():
    # a tridiagonal matrix has no fill, so ILU(0) equals the full LU
    a = sp.diags([-1.0, 4.0, -2.0], [-1, 0, 1], shape=(12, 12), format="csr")
    b = np.linspace(-1, 1, 12)
    np.testing.assert_allclose(ILU0(a).solve(b), np.linalg.solve(a.toarray(), b), rtol=1e-13)


def test_ilu0_zero_pivot():
    with pytest.raises(SingularMatrixError):
        ILU0(sp.csr_matrix([[0.0, 1.0], [1.0, 0.0]]))


def test_spd_solve(rng):
    q = rng.normal(size=(8, 8))
    a = sp.csr_matrix(q @ q.T + 8 * np.eye(8))
    b = rng.normal(size=8)
    np.testing.assert_allclose(solve_spd(a, b), np.linalg.solve(a.toarray(), b), rtol=1e-12)


@pytest.mark.parametrize(
    "kwargs", [{"method": "cg"}, {"rtol": 0.0}, {"rtol": 1.0}, {"restart": 0}, {"preconditioner": "amg"}]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)
