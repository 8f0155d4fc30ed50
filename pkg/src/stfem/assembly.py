"""Global assembly of the space-time system and auxiliary Gram matrices.

Rows are test functions and columns trial functions, so the system entry
``(i, j)`` is ``a(phi_j, phi_i)``.
"""
import os
from dataclasses import dataclass
from math import factorial

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import kernels
from .coefficients import CoefficientField
from .fem import quadrature

CHUNK = 1 << 16  # cells per quadrature batch; fixed so results are reproducible


def default_degree(mesh):
    # triangles: degree 5; tetrahedra: degree 4 (served by the degree-5 rule)
    return 5 if mesh.dim == 1 else 4


@dataclass(frozen=True, eq=False)
class DofMap:
    """Free / constrained split of the mesh nodes.

    ``free_index[v]`` is the position of node ``v`` in the free ordering, or -1
    when the node is constrained. ``values`` carries the prescribed nodal value
    of constrained nodes and zero elsewhere.
    """

    free_mask: np.ndarray
    free_index: np.ndarray
    values: np.ndarray

    @classmethod
    def from_mask(cls, constrained, values=None):
        constrained = np.asarray(constrained, dtype=bool)
        free_index = np.full(len(constrained), -1, dtype=np.int64)
        free_index[~constrained] = np.arange(int((~constrained).sum()))
        vals = np.zeros(len(constrained))
        if values is not None:
            vals[constrained] = np.asarray(values, dtype=float)[constrained]
        if not np.all(np.isfinite(vals)):
            raise ValueError("prescribed values must be finite")
        return cls(~constrained, free_index, vals)

    @classmethod
    def homogeneous(cls, mesh):
        return cls.from_mask(mesh.constrained_mask())

    @classmethod
    def for_solution(cls, mesh, sol):
        """Constrained values taken from the exact solution (Dirichlet lift)."""
        mask = mesh.constrained_mask()
        values = np.zeros(mesh.nvertices)
        values[mask] = sol.at(mesh.vertices[mask])
        return cls.from_mask(mask, values)

    @property
    def nnodes(self):
        return len(self.free_mask)

    @property
    def n_free(self):
        return int(self.free_mask.sum())

    @property
    def free_nodes(self):
        return np.flatnonzero(self.free_mask)

    @property
    def constrained_nodes(self):
        return np.flatnonzero(~self.free_mask)

    def expand(self, free_values):
        """Nodal vector over all nodes from the free-dof coefficients."""
        full = self.values.copy()
        full[self.free_mask] = free_values
        return full


@dataclass(frozen=True, eq=False)
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def indptr(self):
        return self.matrix.indptr

    @property
    def indices(self):
        return self.matrix.indices

    @property
    def data(self):
        return self.matrix.data

    def dump(self, path):
        """Write the matrix in MatrixMarket coordinate format."""
        scipy.io.mmwrite(str(path), self.matrix)


def scatter(mesh, local):
    """Sum per-cell ``(k, k)`` blocks into a CSR matrix over all mesh nodes."""
    order, starts, indptr, indices = mesh.scatter_plan
    data = np.add.reduceat(local.reshape(-1)[order], starts)
    n = mesh.nvertices
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def _chunks(ncells):
    for lo in range(0, ncells, CHUNK):
        yield slice(lo, min(lo + CHUNK, ncells))


def quadrature_points(mesh, rule, cells=slice(None)):
    """Physical quadrature points of a block of cells, shape ``(nc, nq, d + 1)``."""
    phi = rule.basis_values()
    return np.einsum("qi,cim->cqm", phi, mesh.vertices[mesh.cells[cells]])


def cell_average_coefficient(mesh, coeff, quad_degree=None):
    """Cell means of ``A``; ``None`` for the identity fast path."""
    if coeff is None or coeff.is_identity:
        return None
    rule = quadrature(mesh.dim + 1, quad_degree or default_degree(mesh))
    w = rule.weights / rule.weights.sum()
    d = mesh.dim
    out = np.empty((mesh.ncells, d, d))
    for sl in _chunks(mesh.ncells):
        pts = quadrature_points(mesh, rule, sl)
        nc, nq, _ = pts.shape
        flat = pts.reshape(-1, d + 1)
        a = coeff(flat[:, :d], flat[:, d]).reshape(nc, nq, d, d)
        out[sl] = np.einsum("q,cqab->cab", w, a)
    return out


def local_matrix(cellmap, coeff=None, rule=None):
    """Element matrix ``int_K (d_t phi_j) phi_i + (A grad_x phi_j) . grad_x phi_i``.

    ``cellmap`` is a ``fem.CellMap``. ``A`` is averaged over the cell with
    ``rule`` (P1 gradients are constant, so this is exact).
    """
    m = len(cellmap.vertices) - 1
    grads = cellmap.gradients()[None]
    vols = np.array([cellmap.volume])
    abar = None
    if coeff is not None and not coeff.is_identity:
        rule = rule or quadrature(m, 5 if m == 2 else 4)
        pts = cellmap.to_physical(rule.points)
        a = coeff(pts[:, :-1], pts[:, -1])
        abar = (np.einsum("q,qab->ab", rule.weights, a) / rule.weights.sum())[None]
    return kernels.local_matrices(grads, vols, abar)[0]


def _cell_volumes(mesh):
    _, det = mesh.cell_gradients
    return np.abs(det) / factorial(mesh.dim + 1)


def load_vector(mesh, f, quad_degree=None):
    """``int f phi_i`` for every node, as a dense vector."""
    rule = quadrature(mesh.dim + 1, quad_degree or default_degree(mesh))
    phi = rule.basis_values()
    _, det = mesh.cell_gradients
    absdet = np.abs(det)
    d = mesh.dim
    local = np.empty((mesh.ncells, d + 2))
    for sl in _chunks(mesh.ncells):
        pts = quadrature_points(mesh, rule, sl)
        nc, nq, _ = pts.shape
        flat = pts.reshape(-1, d + 1)
        fq = np.asarray(f(flat[:, :d], flat[:, d]), dtype=float).reshape(nc, nq)
        local[sl] = ((fq * rule.weights) @ phi) * absdet[sl, None]
    out = np.zeros(mesh.nvertices)
    np.add.at(out, mesh.cells.ravel(), local.ravel())
    return out


def assemble_operator(mesh, coeff=None, conv=1.0, stiff=1.0, quad_degree=None):
    """``conv * (d_t u, v) + stiff * (A grad_x u, grad_x v)`` over all nodes."""
    grads, _ = mesh.cell_gradients
    abar = cell_average_coefficient(mesh, coeff, quad_degree)
    local = kernels.local_matrices(grads, _cell_volumes(mesh), abar, conv, stiff)
    if conv == 0.0:
        # a + b == b + a exactly, so the symmetric part is bitwise symmetric
        local = 0.5 * (local + np.swapaxes(local, 1, 2))
    return scatter(mesh, local)


def restrict(matrix, dofmap):
    """Free-by-free block and free-by-constrained block of a full matrix."""
    rows = matrix[dofmap.free_nodes]
    ff = rows[:, dofmap.free_nodes].tocsr()
    fc = rows[:, dofmap.constrained_nodes].tocsr()
    ff.sort_indices()
    return ff, fc


def assemble_system(mesh, dofmap, coeff, f, quad_degree=None):
    """Discrete space-time problem on the free dofs, with the constrained
    values moved to the right-hand side."""
    full = assemble_operator(mesh, coeff, quad_degree=quad_degree)
    ff, fc = restrict(full, dofmap)
    load = load_vector(mesh, f, quad_degree)
    rhs = load[dofmap.free_nodes] - fc @ dofmap.values[dofmap.constrained_nodes]
    system = SparseSystem(ff, rhs)
    dump = os.environ.get("STFEM_DUMP_MATRIX")
    if dump:
        system.dump(dump)
    return system


def assemble_mass(mesh, quad_degree=2):
    """L2 Gram matrix of the nodal basis over all nodes."""
    rule = quadrature(mesh.dim + 1, max(2, quad_degree))
    phi = rule.basis_values()
    ref = (phi * rule.weights[:, None]).T @ phi
    ref = 0.5 * (ref + ref.T)
    _, det = mesh.cell_gradients
    local = np.abs(det)[:, None, None] * ref[None]
    return scatter(mesh, local)


def assemble_spatial_stiffness(mesh, dofmap=None, coeff=None):
    """``int (A grad_x phi_j) . grad_x phi_i``; restricted to free dofs if a
    dofmap is given, otherwise over all nodes."""
    full = assemble_operator(mesh, coeff, conv=0.0, stiff=1.0)
    if dofmap is None:
        return full
    return restrict(full, dofmap)[0]


def assemble_convection(mesh, dofmap=None):
    """``int (d_t phi_j) phi_i``."""
    full = assemble_operator(mesh, None, conv=1.0, stiff=0.0)
    if dofmap is None:
        return full
    return restrict(full, dofmap)[0]


__all__ = [
    "CoefficientField",
    "DofMap",
    "SparseSystem",
    "assemble_convection",
    "assemble_mass",
    "assemble_operator",
    "assemble_spatial_stiffness",
    "assemble_system",
    "load_vector",
    "local_matrix",
    "scatter",
]
