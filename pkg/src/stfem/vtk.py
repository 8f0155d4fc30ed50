"""Legacy ASCII VTK export of space-time meshes and nodal fields."""
import numpy as np

VTK_TRIANGLE = 5
VTK_TETRA = 10


def write_vtk(path, mesh, point_data=None, title="space-time mesh"):
    """Write ``mesh`` as an UNSTRUCTURED_GRID; ``point_data`` maps names to
    nodal arrays. Space-time meshes in 2d get a zero third coordinate."""
    pts = mesh.vertices
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    k = mesh.cells.shape[1]
    ctype = VTK_TRIANGLE if k == 3 else VTK_TETRA
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(pts)} double\n")
        np.savetxt(fh, pts, fmt="%.17g")
        fh.write(f"CELLS {mesh.ncells} {mesh.ncells * (k + 1)}\n")
        np.savetxt(fh, np.column_stack([np.full(mesh.ncells, k), mesh.cells]), fmt="%d")
        fh.write(f"CELL_TYPES {mesh.ncells}\n")
        np.savetxt(fh, np.full(mesh.ncells, ctype), fmt="%d")
        if point_data:
            fh.write(f"POINT_DATA {len(pts)}\n")
            for name, values in point_data.items():
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                np.savetxt(fh, np.asarray(values, dtype=float), fmt="%.17g")


def read_vtk(path):
    """Minimal reader for files produced by :func:`write_vtk`.

    Returns ``(points, cells, cell_types, point_data)``.
    """
    with open(path) as fh:
        tokens = fh.read().split("\n")
    it = iter(tokens[4:])
    points = cells = types = None
    data = {}
    for line in it:
        head = line.split()
        if not head:
            continue
        if head[0] == "POINTS":
            n = int(head[1])
            points = np.array([next(it).split() for _ in range(n)], dtype=float)
        elif head[0] == "CELLS":
            n = int(head[1])
            rows = [next(it).split() for _ in range(n)]
            cells = np.array([r[1:] for r in rows], dtype=np.int64)
        elif head[0] == "CELL_TYPES":
            types = np.array([next(it) for _ in range(int(head[1]))], dtype=int)
        elif head[0] == "POINT_DATA":
            npts = int(head[1])
        elif head[0] == "SCALARS":
            next(it)  # LOOKUP_TABLE
            data[head[1]] = np.array([next(it) for _ in range(npts)], dtype=float)
    return points, cells, types, data
