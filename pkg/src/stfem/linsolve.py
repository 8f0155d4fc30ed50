"""Sparse linear solvers for the nonsymmetric space-time system and the SPD
Gram systems."""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .exceptions import ConvergenceError, SingularMatrixError

log = logging.getLogger(__name__)

LU_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    method: str = "lu"
    rtol: float = 1e-10
    maxiter: int = 2000
    restart: int = 50
    preconditioner: str = "ilu0"

    def __post_init__(self):
        if self.method not in ("lu", "gmres"):
            raise ValueError(f"unknown solver method {self.method!r}")
        if self.preconditioner not in ("none", "ilu0"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")
        if not 0.0 < self.rtol < 1.0:
            raise ValueError("rtol must lie in (0, 1)")
        if self.restart < 1:
            raise ValueError("restart must be at least 1")
        if self.maxiter < 1:
            raise ValueError("maxiter must be at least 1")


def relative_residual(matrix, x, b):
    r = np.linalg.norm(matrix @ x - b)
    nb = np.linalg.norm(b)
    return r / nb if nb > 0.0 else r


class ILU0:
    """Zero-fill incomplete LU on the CSR pattern of ``matrix``."""

    def __init__(self, matrix):
        a = sp.csr_matrix(matrix, copy=True)
        a.sum_duplicates()
        a.sort_indices()
        self.indptr = a.indptr.astype(np.int64)
        self.indices = a.indices.astype(np.int64)
        self.lu, self.diag, bad = kernels.ilu0_factor(
            self.indptr, self.indices, a.data.astype(float)
        )
        if bad >= 0:
            raise SingularMatrixError(f"ILU(0) breakdown at row {bad}")
        self.shape = a.shape

    def solve(self, b):
        return kernels.ilu0_solve(
            self.indptr, self.indices, self.lu, self.diag, np.asarray(b, dtype=float)
        )

    def as_operator(self):
        return spla.LinearOperator(self.shape, matvec=self.solve, dtype=float)


def _splu(matrix, symmetric=False):
    opts = {"SymmetricMode": True} if symmetric else {}
    try:
        return spla.splu(
            sp.csc_matrix(matrix),
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0 if symmetric else 1.0,
            options=opts,
        )
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from exc


def _solve_lu(matrix, b):
    lu = _splu(matrix)
    x = lu.solve(b)
    res = relative_residual(matrix, x, b)
    for _ in range(2):
        if res <= LU_RESIDUAL_TOL:
            break
        x = x + lu.solve(b - matrix @ x)
        res = relative_residual(matrix, x, b)
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("LU solve produced non-finite values")
    if res > LU_RESIDUAL_TOL:
        raise ConvergenceError(f"LU residual {res:.3e} above {LU_RESIDUAL_TOL}", res)
    return x


def _solve_gmres(matrix, b, config):
    m = None
    if config.preconditioner == "ilu0":
        m = ILU0(matrix).as_operator()
    x, info = spla.gmres(
        matrix, b, rtol=config.rtol, atol=0.0, restart=config.restart,
        maxiter=config.maxiter, M=m,
    )
    res = relative_residual(matrix, x, b)
    if info != 0 or res > config.rtol * 1.0001:
        raise ConvergenceError(
            f"GMRES stopped (info={info}) with relative residual {res:.3e}", res
        )
    return x


def solve(system, config=None, rhs=None):
    """Solve ``matrix x = rhs``.

    ``system`` is a ``SparseSystem`` or a sparse matrix (then ``rhs`` is
    required). Empty systems return an empty vector.
    """
    config = config or SolverConfig()
    if rhs is None:
        matrix, b = system.matrix, system.rhs
    else:
        matrix, b = system, rhs
    b = np.asarray(b, dtype=float)
    if matrix.shape[0] != matrix.shape[1] or matrix.shape[0] != len(b):
        raise ValueError(f"incompatible system: {matrix.shape} with rhs {b.shape}")
    if len(b) == 0:
        return np.zeros(0)
    if config.method == "lu":
        return _solve_lu(matrix, b)
    return _solve_gmres(matrix, b, config)


class SPDSolver:
    """Factor a symmetric positive definite matrix once, solve many times."""

    def __init__(self, matrix):
        self.n = matrix.shape[0]
        self.matrix = matrix
        self._lu = _splu(matrix, symmetric=True) if self.n else None

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if self.n == 0:
            return np.zeros(b.shape)
        return self._lu.solve(b)


def solve_spd(matrix, rhs):
    return SPDSolver(matrix).solve(rhs)
