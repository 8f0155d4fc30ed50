"""Structured simplicial meshes of space-time domains.

Coordinates are ``(x, t)`` for one space dimension and ``(x, y, t)`` for two;
time is always the last column and runs over ``[0, 1]``.
"""
import enum
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations, permutations
from math import factorial

import numpy as np

from . import kernels
from .exceptions import DegenerateCellError

GEOM_TOL = 1e-12


class BoundaryTag(enum.IntEnum):
    LATERAL = 0
    INITIAL = 1
    TERMINAL = 2


class NodeStatus(enum.Enum):
    CONSTRAINED = "constrained"
    FREE = "free"


class Geometry(enum.Enum):
    UNIT_SQUARE = "unit_square"
    UNIT_CUBE = "unit_cube"
    TRAPEZOID = "trapezoid"

    @property
    def dim(self):
        """Spatial dimension."""
        return 2 if self is Geometry.UNIT_CUBE else 1

    @property
    def volume(self):
        # trapezoid: integral of (0.5 + 2t) over (0, 1)
        return 1.5 if self is Geometry.TRAPEZOID else 1.0

    def map(self, ref):
        """Map reference coordinates in ``[0, 1]^(d+1)`` onto the domain."""
        ref = np.asarray(ref, dtype=float)
        if self is not Geometry.TRAPEZOID:
            return ref.copy()
        xi, tau = ref[..., 0], ref[..., 1]
        return np.stack([-tau + xi * (0.5 + 2.0 * tau), tau], axis=-1)

    def on_lateral(self, pts, tol=GEOM_TOL):
        """Mask of points lying on the closure of the lateral boundary."""
        pts = np.asarray(pts, dtype=float)
        t = pts[..., -1]
        if self is Geometry.TRAPEZOID:
            x = pts[..., 0]
            return (np.abs(x + t) <= tol) | (np.abs(x - 0.5 - t) <= tol)
        xs = pts[..., :-1]
        return np.any((np.abs(xs) <= tol) | (np.abs(xs - 1.0) <= tol), axis=-1)


@dataclass(frozen=True, eq=False)
class SpaceTimeMesh:
    """Conforming simplicial mesh of a space-time domain.

    Attributes
    ----------
    dim : int
        Spatial dimension ``d``; cells are ``(d+1)``-simplices.
    vertices : ndarray, shape (nv, d + 1)
    cells : ndarray, shape (nc, d + 2)
        Vertex indices, positively oriented.
    facets : ndarray, shape (nf, d + 1)
        Boundary facets, each listed once.
    facet_tags : ndarray, shape (nf,)
        ``BoundaryTag`` value of every boundary facet.
    h : float
        Largest cell diameter.
    """

    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    facets: np.ndarray
    facet_tags: np.ndarray
    h: float
    geometry: Geometry
    n: int

    @property
    def nvertices(self):
        return len(self.vertices)

    @property
    def ncells(self):
        return len(self.cells)

    def cell_coordinates(self):
        return self.vertices[self.cells]

    @cached_property
    def cell_gradients(self):
        """Physical P1 gradients ``(nc, d + 2, d + 1)`` and Jacobian determinants."""
        grads, det = kernels.p1_gradients(self.cell_coordinates())
        bad = np.abs(det) < 1e-14
        if bad.any():
            raise DegenerateCellError(f"cell {int(np.argmax(bad))} is degenerate")
        return grads, det

    @cached_property
    def scatter_plan(self):
        """Sparsity pattern of the P1 stiffness graph and the permutation that
        gathers per-cell ``(i, j)`` contributions into it, cells in index order."""
        k = self.cells.shape[1]
        n = np.int64(self.nvertices)
        rows = np.repeat(self.cells, k, axis=1).ravel().astype(np.int64)
        cols = np.tile(self.cells, (1, k)).ravel().astype(np.int64)
        key = rows * n + cols
        order = np.argsort(key, kind="stable")
        key = key[order]
        starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
        ukey = key[starts]
        indptr = np.zeros(self.nvertices + 1, dtype=np.int64)
        np.cumsum(np.bincount(ukey // n, minlength=self.nvertices), out=indptr[1:])
        return order, starts, indptr, (ukey % n).astype(np.int32)

    def signed_volumes(self):
        c = self.cell_coordinates()
        jac = c[:, 1:, :] - c[:, :1, :]
        return np.linalg.det(jac) / factorial(self.dim + 1)

    def cell_volumes(self):
        return np.abs(self.signed_volumes())

    def boundary_facets(self, tag=None):
        if tag is None:
            return self.facets
        return self.facets[self.facet_tags == int(tag)]

    def constrained_mask(self):
        """Nodes on the closed lateral boundary or on the initial slice."""
        mask = np.zeros(self.nvertices, dtype=bool)
        for tag in (BoundaryTag.LATERAL, BoundaryTag.INITIAL):
            mask[self.boundary_facets(tag).ravel()] = True
        return mask


def facet_incidence(cells, nvertices):
    """Unique facets of a simplicial complex and the number of cells sharing each."""
    k = cells.shape[1]
    faces = np.concatenate(
        [cells[:, list(c)] for c in combinations(range(k), k - 1)], axis=0
    )
    faces = np.sort(faces, axis=1).astype(np.int64)
    key = np.zeros(len(faces), dtype=np.int64)
    for j in range(faces.shape[1]):
        key = key * nvertices + faces[:, j]
    _, first, counts = np.unique(key, return_index=True, return_counts=True)
    return faces[first], counts


def check_conformity(mesh):
    """True iff every facet is shared by one (boundary) or two (interior) cells
    and the boundary facets are exactly the once-shared ones."""
    faces, counts = facet_incidence(mesh.cells, mesh.nvertices)
    if counts.max() > 2:
        return False
    once = {tuple(f) for f in faces[counts == 1]}
    listed = [tuple(sorted(f)) for f in mesh.facets]
    return len(listed) == len(set(listed)) and set(listed) == once


def _max_diameter(coords):
    k = coords.shape[1]
    h = 0.0
    for i, j in combinations(range(k), 2):
        d = np.linalg.norm(coords[:, i] - coords[:, j], axis=1)
        h = max(h, float(d.max()))
    return h


def _tag_facets(vertices, facets):
    t = vertices[facets][..., -1]
    tags = np.full(len(facets), int(BoundaryTag.LATERAL), dtype=np.int8)
    tags[np.all(np.abs(t) <= GEOM_TOL, axis=1)] = BoundaryTag.INITIAL
    tags[np.all(np.abs(t - 1.0) <= GEOM_TOL, axis=1)] = BoundaryTag.TERMINAL
    return tags


def _finish(dim, vertices, cells, geometry, n):
    faces, counts = facet_incidence(cells, len(vertices))
    facets = faces[counts == 1]
    return SpaceTimeMesh(
        dim=dim,
        vertices=vertices,
        cells=cells,
        facets=facets,
        facet_tags=_tag_facets(vertices, facets),
        h=_max_diameter(vertices[cells]),
        geometry=geometry,
        n=n,
    )


def build_structured_2d(n, geometry=Geometry.UNIT_SQUARE):
    """Triangulate the reference square with ``n`` subdivisions per edge and map
    the vertices onto ``geometry``. Squares are cut along the ``(+xi, +tau)``
    diagonal."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if geometry.dim != 1:
        raise ValueError(f"{geometry.name} is not a 1d-in-space geometry")
    n = int(n)
    s = np.linspace(0.0, 1.0, n + 1)
    xi, tau = np.meshgrid(s, s, indexing="xy")
    vertices = geometry.map(np.column_stack([xi.ravel(), tau.ravel()]))

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    v00 = (i + (n + 1) * j).ravel()
    v10, v01 = v00 + 1, v00 + n + 1
    v11 = v01 + 1
    cells = np.empty((2 * n * n, 3), dtype=np.int64)
    cells[0::2] = np.column_stack([v00, v10, v11])
    cells[1::2] = np.column_stack([v00, v11, v01])
    return _finish(1, vertices, cells, geometry, n)


def _kuhn_simplices():
    """The six tetrahedra of the unit cube sharing the main diagonal, as local
    corner indices (bit k of a corner index is its k-th coordinate)."""
    out = []
    for perm in permutations(range(3)):
        corner, tet = 0, [0]
        for axis in perm:
            corner |= 1 << axis
            tet.append(corner)
        coords = np.array([[(c >> k) & 1 for k in range(3)] for c in tet], float)
        if np.linalg.det(coords[1:] - coords[0]) < 0:
            tet[1], tet[2] = tet[2], tet[1]
        out.append(tet)
    return np.array(out)


def build_structured_3d(n):
    """Kuhn (Freudenthal) triangulation of the unit cube: ``6 n^3`` tetrahedra."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    s = np.linspace(0.0, 1.0, n + 1)
    # vertex index = i + (n+1) j + (n+1)^2 k for coordinates (x_i, y_j, t_k)
    t, y, x = np.meshgrid(s, s, s, indexing="ij")
    vertices = np.column_stack([x.ravel(), y.ravel(), t.ravel()])

    m = n + 1
    k, j, i = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    base = (i + m * j + m * m * k).ravel().astype(np.int64)
    offset = np.array([(c & 1) + m * ((c >> 1) & 1) + m * m * ((c >> 2) & 1)
                       for c in range(8)], dtype=np.int64)
    local = offset[_kuhn_simplices()]  # (6, 4)
    cells = (base[:, None, None] + local[None, :, :]).reshape(-1, 4)
    return _finish(2, vertices, cells, Geometry.UNIT_CUBE, n)


def build_mesh(geometry, n):
    if geometry is Geometry.UNIT_CUBE:
        return build_structured_3d(n)
    return build_structured_2d(n, geometry)


def classify_node(mesh, vertex):
    if not 0 <= vertex < mesh.nvertices:
        raise IndexError(f"vertex {vertex} out of range")
    constrained = mesh.constrained_mask()[vertex]
    return NodeStatus.CONSTRAINED if constrained else NodeStatus.FREE
