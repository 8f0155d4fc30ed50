"""Error norms, the L2 projection onto the trial space and the discrete
inf-sup functional."""
from dataclasses import dataclass
from math import log2, sqrt
from typing import Optional

import numpy as np

from . import kernels
from .assembly import (
    CHUNK,
    DofMap,
    assemble_convection,
    assemble_mass,
    assemble_operator,
    assemble_spatial_stiffness,
    cell_average_coefficient,
    default_degree,
    restrict,
)
from .exceptions import InvalidMeshError, UndefinedRatioError
from .fem import facet_quadrature, quadrature
from .linsolve import SPDSolver
from .mesh import BoundaryTag


@dataclass(frozen=True, eq=False)
class DiscreteField:
    """Continuous P1 function given by its values at every mesh node."""

    mesh: object
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.mesh.nvertices,):
            raise ValueError(
                f"field has {vals.shape} values for {self.mesh.nvertices} nodes"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def interpolate(cls, mesh, func):
        """Nodal interpolant of ``func(x, t)``."""
        v = mesh.vertices
        return cls(mesh, func(v[:, :-1], v[:, -1]))

    def cell_gradients(self):
        """Constant space-time gradient on each cell, ``(nc, d + 1)``."""
        grads, _ = self.mesh.cell_gradients
        return np.einsum("ci,cia->ca", self.values[self.mesh.cells], grads)


@dataclass(frozen=True)
class ErrorReport:
    n: int
    h: float
    err_l2_terminal: float
    err_l2_cylinder: float
    err_h1_cylinder: float
    err_hnorm: Optional[float] = None


def convergence_order(e_coarse, e_fine):
    """Observed order ``log2(e_coarse / e_fine)`` for a halved mesh size."""
    if not (e_coarse > 0.0 and e_fine > 0.0):
        raise ValueError("errors must be positive to compute an order")
    return log2(e_coarse / e_fine)


def _cells(mesh):
    for lo in range(0, mesh.ncells, CHUNK):
        yield slice(lo, min(lo + CHUNK, mesh.ncells))


def _error_terms(field, exact, quad_degree=None):
    """Per-cell integrals of ``e^2``, ``|grad_x e|^2``, ``(d_t e)^2`` for
    ``e = exact - field``; ``exact=None`` stands for the zero function."""
    mesh = field.mesh
    rule = quadrature(mesh.dim + 1, quad_degree or default_degree(mesh))
    phi = rule.basis_values()
    grads, det = mesh.cell_gradients
    absdet = np.abs(det)
    d = mesh.dim
    out = np.empty((mesh.ncells, 3))
    for sl in _cells(mesh):
        coords = mesh.vertices[mesh.cells[sl]]
        nc = coords.shape[0]
        if exact is None:
            u = np.zeros((nc, rule.npoints))
            du = np.zeros((nc, rule.npoints, d + 1))
        else:
            pts = np.einsum("qi,cim->cqm", phi, coords).reshape(-1, d + 1)
            x, t = pts[:, :d], pts[:, d]
            u = exact.u(x, t).reshape(nc, -1)
            du = exact.space_time_gradient(x, t).reshape(nc, -1, d + 1)
        out[sl] = kernels.cell_error_terms(
            field.values[mesh.cells[sl]], grads[sl], absdet[sl], phi,
            rule.weights, u, du,
        )
    return out


def l2_error_cylinder(field, exact, quad_degree=None):
    return sqrt(float(np.sum(_error_terms(field, exact, quad_degree)[:, 0])))


def h1_error_cylinder(field, exact, quad_degree=None):
    """``(||e||^2 + ||grad_x e||^2 + ||d_t e||^2)^(1/2)`` over the cylinder."""
    return sqrt(float(np.sum(_error_terms(field, exact, quad_degree))))


def space_time_gradient_error(field, exact, quad_degree=None):
    terms = _error_terms(field, exact, quad_degree)
    return sqrt(float(np.sum(terms[:, 1:])))


def errors_l2_h1(field, exact, quad_degree=None):
    terms = _error_terms(field, exact, quad_degree).sum(axis=0)
    return sqrt(terms[0]), sqrt(terms.sum())


def l2_error_terminal(field, exact, quad_degree=5):
    """``||(u - u_h)(., T)||`` in L2 of the terminal slice."""
    mesh = field.mesh
    facets = mesh.boundary_facets(BoundaryTag.TERMINAL)
    if len(facets) == 0:
        raise InvalidMeshError("mesh has no terminal facets")
    rule = facet_quadrature(mesh.dim + 1, quad_degree)
    phi = rule.basis_values()
    d = mesh.dim
    coords = mesh.vertices[facets]
    edges = coords[:, 1:, :d] - coords[:, :1, :d]
    measure = np.abs(np.linalg.det(edges)) if d > 1 else np.abs(edges[:, 0, 0])
    pts = np.einsum("qi,fim->fqm", phi, coords)
    nf, nq, _ = pts.shape
    flat = pts.reshape(-1, d + 1)
    u = np.zeros(nf * nq) if exact is None else exact.u(flat[:, :d], flat[:, d])
    uh = field.values[facets] @ phi.T
    e = u.reshape(nf, nq) - uh
    return sqrt(float(np.sum(measure * ((e * e) @ rule.weights))))


def v_norm(field, coeff=None):
    """``(int (A grad_x y) . grad_x y)^(1/2)`` of a P1 field."""
    mesh = field.mesh
    d = mesh.dim
    g = field.cell_gradients()[:, :d]
    _, det = mesh.cell_gradients
    vols = np.abs(det) / np.prod(np.arange(1, d + 2))
    abar = cell_average_coefficient(mesh, coeff)
    if abar is None:
        dens = np.sum(g * g, axis=1)
    else:
        dens = np.einsum("ca,cab,cb->c", g, abar, g)
    return sqrt(float(np.sum(vols * dens)))


def v_norm_error(field, exact, coeff=None, quad_degree=None):
    """V-norm of ``exact - field``, integrated with quadrature."""
    mesh = field.mesh
    if coeff is None or coeff.is_identity:
        return sqrt(float(np.sum(_error_terms(field, exact, quad_degree)[:, 1])))
    rule = quadrature(mesh.dim + 1, quad_degree or default_degree(mesh))
    phi = rule.basis_values()
    _, det = mesh.cell_gradients
    absdet = np.abs(det)
    ghx = field.cell_gradients()[:, : mesh.dim]
    d = mesh.dim
    total = 0.0
    for sl in _cells(mesh):
        pts = np.einsum("qi,cim->cqm", phi, mesh.vertices[mesh.cells[sl]])
        nc, nq, _ = pts.shape
        flat = pts.reshape(-1, d + 1)
        x, t = flat[:, :d], flat[:, d]
        de = exact.grad_x(x, t).reshape(nc, nq, d) - ghx[sl, None, :]
        a = coeff(x, t).reshape(nc, nq, d, d)
        dens = np.einsum("cqa,cqab,cqb->cq", de, a, de)
        total += float(np.sum(absdet[sl] * (dens @ rule.weights)))
    return sqrt(total)


class _StiffnessCache:
    def __init__(self, mesh, dofmap, coeff):
        self.matrix = assemble_spatial_stiffness(mesh, dofmap, coeff)
        self.solver = SPDSolver(self.matrix)


def q_h(mesh, dofmap, coeff, field, exact=None, quad_degree=None, stiffness=None):
    """Discrete spatial Riesz lift of ``d_t (exact - field)``.

    Solves ``int (A grad_x q) . grad_x phi = int d_t(u - u_h) phi`` for all free
    test functions; constrained values of ``q`` are zero.
    """
    rule = quadrature(mesh.dim + 1, quad_degree or default_degree(mesh))
    phi = rule.basis_values()
    _, det = mesh.cell_gradients
    absdet = np.abs(det)
    d = mesh.dim
    dt_uh = field.cell_gradients()[:, d]
    local = np.empty((mesh.ncells, d + 2))
    for sl in _cells(mesh):
        coords = mesh.vertices[mesh.cells[sl]]
        nc = coords.shape[0]
        if exact is None:
            ut = np.zeros((nc, rule.npoints))
        else:
            pts = np.einsum("qi,cim->cqm", phi, coords).reshape(-1, d + 1)
            ut = exact.dudt(pts[:, :d], pts[:, d]).reshape(nc, -1)
        r = ut - dt_uh[sl, None]
        local[sl] = ((r * rule.weights) @ phi) * absdet[sl, None]
    rhs = np.zeros(mesh.nvertices)
    np.add.at(rhs, mesh.cells.ravel(), local.ravel())
    cache = stiffness or _StiffnessCache(mesh, dofmap, coeff)
    q_free = cache.solver.solve(rhs[dofmap.free_nodes])
    values = np.zeros(mesh.nvertices)
    values[dofmap.free_nodes] = q_free
    return DiscreteField(mesh, values)


def h_norm_error(field, exact, dofmap, coeff=None, quad_degree=None):
    """Mesh-dependent norm ``(||e||_V^2 + ||q_h(e)||_V^2)^(1/2)``, ``e = exact - field``."""
    mesh = field.mesh
    ve = v_norm_error(field, exact, coeff, quad_degree)
    q = q_h(mesh, dofmap, coeff, field, exact, quad_degree)
    return sqrt(ve**2 + v_norm(q, coeff) ** 2)


def l2_project(mesh, target, dofmap=None, quad_degree=None):
    """L2-orthogonal projection of ``target`` onto the constrained P1 space.

    ``target`` is a callable ``(x, t) -> values`` or a ``DiscreteField``.
    """
    dofmap = dofmap or DofMap.homogeneous(mesh)
    mass = assemble_mass(mesh)
    if isinstance(target, DiscreteField):
        rhs = mass @ target.values
    else:
        from .assembly import load_vector

        rhs = load_vector(mesh, target, quad_degree)
    mff, _ = restrict(mass, dofmap)
    coeffs = SPDSolver(mff).solve(rhs[dofmap.free_nodes])
    values = np.zeros(mesh.nvertices)
    values[dofmap.free_nodes] = coeffs
    return DiscreteField(mesh, values)


class InfSupEvaluator:
    """``sup_v a(u_h, v) / ||v||_V`` divided by ``||u_h||_h`` on the free dofs.

    The supremum is the V-dual norm of the residual functional,
    ``(r^T K^-1 r)^(1/2)`` with ``r = A_ff c``; ``||u_h||_h^2`` is
    ``c^T K c + b^T K^-1 b`` with ``b = C_ff c`` the time-derivative functional.
    """

    def __init__(self, mesh, dofmap, coeff=None):
        self.system = restrict(assemble_operator(mesh, coeff), dofmap)[0]
        self.stiffness = assemble_spatial_stiffness(mesh, dofmap, coeff)
        self.convection = assemble_convection(mesh, dofmap)
        self.solver = SPDSolver(self.stiffness)

    def __call__(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        r = self.system @ c
        sup2 = float(r @ self.solver.solve(r))
        b = self.convection @ c
        h2 = float(c @ (self.stiffness @ c) + b @ self.solver.solve(b))
        if h2 <= 0.0:
            raise UndefinedRatioError("||u_h||_h vanishes; the ratio is undefined")
        return sqrt(max(sup2, 0.0) / h2)


def infsup_ratio(mesh, dofmap, coeff, coeffs):
    return InfSupEvaluator(mesh, dofmap, coeff)(coeffs)
