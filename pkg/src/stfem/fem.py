"""P1 Lagrange machinery on the reference simplex.

The reference simplex in dimension ``m`` has vertices ``0, e_1, ..., e_m``.
Its P1 basis is ``phi_0 = 1 - sum(xi)`` and ``phi_i = xi_i``.
"""
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from math import factorial, sqrt

import numpy as np
from scipy.special import roots_jacobi

from .exceptions import DegenerateCellError

DEGENERATE_TOL = 1e-14


def reference_vertices(dim):
    return np.vstack([np.zeros(dim), np.eye(dim)])


def reference_gradients(dim):
    """Constant gradients of the P1 basis, shape ``(dim + 1, dim)``."""
    return np.vstack([-np.ones(dim), np.eye(dim)])


def eval_p1(dim, point):
    """Values and gradients of the ``dim + 1`` P1 basis functions at ``point``.

    ``point`` may also be an array of points of shape ``(n, dim)``; values then
    have shape ``(n, dim + 1)`` while gradients stay ``(dim + 1, dim)``.
    """
    p = np.asarray(point, dtype=float)
    if p.shape[-1] != dim:
        raise ValueError(f"point has {p.shape[-1]} coordinates, expected {dim}")
    values = np.concatenate([1.0 - p.sum(axis=-1, keepdims=True), p], axis=-1)
    return values, reference_gradients(dim)


def simplex_monomial_integral(exponents):
    """Exact integral of ``prod(x_i ** a_i)`` over the reference simplex."""
    exponents = [int(a) for a in exponents]
    num = 1
    for a in exponents:
        num *= factorial(a)
    return num / factorial(sum(exponents) + len(exponents))


@dataclass(frozen=True)
class QuadratureRule:
    dim: int
    degree: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def npoints(self):
        return len(self.weights)

    def basis_values(self):
        """P1 basis values at the quadrature points, shape ``(npoints, dim + 1)``."""
        return eval_p1(self.dim, self.points)[0]


def _orbit(bary):
    return sorted(set(permutations(bary)))


def _symmetric_rule(dim, degree, orbits):
    pts, wts = [], []
    for bary, w in orbits:
        for p in _orbit(bary):
            pts.append(p[1:])
            wts.append(w)
    order = np.lexsort(np.array(pts).T[::-1])
    return QuadratureRule(dim, degree, np.array(pts)[order], np.array(wts)[order])


def _triangle_rules():
    s15 = sqrt(15.0)
    a1, a2 = (6.0 - s15) / 21.0, (6.0 + s15) / 21.0
    d4a, d4b = 0.4459484909159648, 0.09157621350977091
    d6a, d6b = 0.06308901449150889, 0.24928674517087768
    d6c, d6d = 0.05314504984479465, 0.3103524510338094
    return {
        1: [((1 / 3, 1 / 3, 1 / 3), 0.5)],
        2: [((2 / 3, 1 / 6, 1 / 6), 1 / 6)],
        4: [
            ((1 - 2 * d4a, d4a, d4a), 0.11169079483900558),
            ((1 - 2 * d4b, d4b, d4b), 0.05497587182766108),
        ],
        5: [
            ((1 / 3, 1 / 3, 1 / 3), 9 / 80),
            ((1 - 2 * a1, a1, a1), (155.0 - s15) / 2400.0),
            ((1 - 2 * a2, a2, a2), (155.0 + s15) / 2400.0),
        ],
        6: [
            ((1 - 2 * d6a, d6a, d6a), 0.025422453185108194),
            ((1 - 2 * d6b, d6b, d6b), 0.05839313786321665),
            ((1 - d6c - d6d, d6c, d6d), 0.04142553780917092),
        ],
    }


def _tetrahedron_rules():
    a = (5.0 - sqrt(5.0)) / 20.0
    b1, b2, c = 0.0927352503108912, 0.3108859192633006, 0.0455037041256496
    return {
        1: [((0.25, 0.25, 0.25, 0.25), 1 / 6)],
        2: [((1 - 3 * a, a, a, a), 1 / 24)],
        # 14-point positive rule, exact through degree 5
        5: [
            ((1 - 3 * b1, b1, b1, b1), 0.01224884051939366),
            ((1 - 3 * b2, b2, b2, b2), 0.01878132095300264),
            ((0.5 - c, 0.5 - c, c, c), 0.007091003462846911),
        ],
    }


def conical_product_rule(dim, degree):
    """Collapsed Gauss-Jacobi rule on the reference simplex, exact to ``degree``.

    Positive weights for every degree, at the cost of ``ceil((degree+1)/2)**dim``
    points.
    """
    q = (degree + 2) // 2
    nodes, weights = [], []
    for k in range(dim):
        alpha = dim - 1 - k
        x, w = roots_jacobi(q, alpha, 0.0)
        nodes.append((x + 1.0) / 2.0)
        weights.append(w / 2.0 ** (alpha + 1))
    grids = np.meshgrid(*nodes, indexing="ij")
    wgrid = np.prod(np.meshgrid(*weights, indexing="ij"), axis=0).ravel()
    s = [g.ravel() for g in grids]
    # s[0] collapses first: x_dim-1 = s0, x_dim-2 = s1 (1 - s0), ...
    pts = np.zeros((len(wgrid), dim))
    scale = np.ones(len(wgrid))
    for k in range(dim):
        pts[:, dim - 1 - k] = s[k] * scale
        scale = scale * (1.0 - s[k])
    return QuadratureRule(dim, degree, pts, wgrid)


@lru_cache(maxsize=None)
def quadrature(dim, degree):
    """Quadrature rule on the reference simplex exact for polynomials of ``degree``.

    Triangles use symmetric Gauss rules of exactness 1, 2, 4, 5 and 6.
    Tetrahedra use symmetric rules of exactness 1, 2 and 5, and a conical
    product rule for degree 6. The cheapest rule meeting ``degree`` is returned;
    ``rule.degree`` reports its true exactness.
    """
    if dim not in (2, 3):
        raise ValueError(f"unsupported simplex dimension {dim}")
    if not 1 <= degree <= 6:
        raise ValueError(f"unsupported quadrature degree {degree}")
    table = _triangle_rules() if dim == 2 else _tetrahedron_rules()
    for exact in sorted(table):
        if exact >= degree:
            return _symmetric_rule(dim, exact, table[exact])
    return conical_product_rule(dim, degree)


@lru_cache(maxsize=None)
def facet_quadrature(dim, degree):
    """Rule on the reference facet of a ``dim``-simplex (a ``dim - 1`` simplex).

    For segments this is Gauss-Legendre on ``[0, 1]`` (weights sum to 1).
    """
    if dim == 2:
        n = (degree + 2) // 2
        x, w = np.polynomial.legendre.leggauss(n)
        return QuadratureRule(1, 2 * n - 1, ((x + 1.0) / 2.0)[:, None], w / 2.0)
    return quadrature(dim - 1, degree)


@dataclass(frozen=True)
class CellMap:
    """Affine map ``x = v_0 + J xi`` from the reference simplex onto one cell."""

    vertices: np.ndarray
    jacobian: np.ndarray
    det: float
    inv_t: np.ndarray

    @property
    def abs_det(self):
        return abs(self.det)

    @property
    def volume(self):
        return self.abs_det / factorial(len(self.vertices) - 1)

    def to_physical(self, ref_points):
        return self.vertices[0] + np.asarray(ref_points) @ self.jacobian.T

    def gradients(self):
        """Physical gradients of the P1 basis on this cell, shape ``(m + 1, m)``."""
        return reference_gradients(len(self.vertices) - 1) @ self.inv_t.T


def cell_map(vertices):
    v = np.asarray(vertices, dtype=float)
    m = v.shape[1]
    if v.shape[0] != m + 1:
        raise ValueError(f"a {m}-simplex needs {m + 1} vertices, got {v.shape[0]}")
    jac = (v[1:] - v[0]).T
    det = float(np.linalg.det(jac))
    if abs(det) < DEGENERATE_TOL:
        raise DegenerateCellError(f"degenerate simplex, |det J| = {abs(det):.3e}")
    return CellMap(v, jac, det, np.linalg.inv(jac).T)
