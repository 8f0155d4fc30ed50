"""Per-cell numeric kernels.

Every kernel exists twice: a numba loop (``*_numba``) and a vectorized numpy
version (``*_numpy``). The public name dispatches on ``_accel.USE_NUMBA``.
Both paths agree to rounding; each is bitwise reproducible on its own.
"""
import numpy as np

from . import _accel
from ._accel import njit

# ---------------------------------------------------------------- gradients


def p1_gradients_numpy(coords):
    """Physical P1 gradients and Jacobian determinants for a batch of simplices.

    ``coords`` has shape ``(nc, m + 1, m)``. Returns ``grads`` of shape
    ``(nc, m + 1, m)`` and ``det`` of shape ``(nc,)``.
    """
    jac = np.transpose(coords[:, 1:, :] - coords[:, :1, :], (0, 2, 1))
    det = np.linalg.det(jac)
    inv = np.linalg.inv(jac)
    grads = np.concatenate([-inv.sum(axis=1, keepdims=True), inv], axis=1)
    return grads, det


@njit(cache=True)
def p1_gradients_numba(coords):
    nc, k, m = coords.shape
    grads = np.empty((nc, k, m))
    det = np.empty(nc)
    for c in range(nc):
        if m == 2:
            a = coords[c, 1, 0] - coords[c, 0, 0]
            b = coords[c, 2, 0] - coords[c, 0, 0]
            d = coords[c, 1, 1] - coords[c, 0, 1]
            e = coords[c, 2, 1] - coords[c, 0, 1]
            # J = [[a, b], [d, e]]
            dt = a * e - b * d
            det[c] = dt
            grads[c, 1, 0] = e / dt
            grads[c, 1, 1] = -b / dt
            grads[c, 2, 0] = -d / dt
            grads[c, 2, 1] = a / dt
        else:
            j = np.empty((3, 3))
            for r in range(3):
                for s in range(3):
                    j[r, s] = coords[c, s + 1, r] - coords[c, 0, r]
            c00 = j[1, 1] * j[2, 2] - j[1, 2] * j[2, 1]
            c01 = j[1, 2] * j[2, 0] - j[1, 0] * j[2, 2]
            c02 = j[1, 0] * j[2, 1] - j[1, 1] * j[2, 0]
            dt = j[0, 0] * c00 + j[0, 1] * c01 + j[0, 2] * c02
            det[c] = dt
            # row i of inv(J) is the gradient of phi_{i+1}
            grads[c, 1, 0] = c00 / dt
            grads[c, 2, 0] = c01 / dt
            grads[c, 3, 0] = c02 / dt
            grads[c, 1, 1] = (j[0, 2] * j[2, 1] - j[0, 1] * j[2, 2]) / dt
            grads[c, 2, 1] = (j[0, 0] * j[2, 2] - j[0, 2] * j[2, 0]) / dt
            grads[c, 3, 1] = (j[0, 1] * j[2, 0] - j[0, 0] * j[2, 1]) / dt
            grads[c, 1, 2] = (j[0, 1] * j[1, 2] - j[0, 2] * j[1, 1]) / dt
            grads[c, 2, 2] = (j[0, 2] * j[1, 0] - j[0, 0] * j[1, 2]) / dt
            grads[c, 3, 2] = (j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0]) / dt
        for a in range(m):
            s = 0.0
            for i in range(1, k):
                s += grads[c, i, a]
            grads[c, 0, a] = -s
    return grads, det


# ---------------------------------------------------------- local matrices


def local_matrices_numpy(grads, vols, abar, conv, stiff):
    """Batched ``conv * int (d_t phi_j) phi_i + stiff * int (A grad_x phi_j) . grad_x phi_i``.

    ``abar`` is the cell average of ``A`` with shape ``(nc, d, d)``, or an empty
    array for the identity.
    """
    nc, k, m = grads.shape
    d = m - 1
    gx = grads[:, :, :d]
    out = (conv / k) * vols[:, None, None] * grads[:, None, :, d]
    out = np.broadcast_to(out, (nc, k, k)).copy()
    if stiff != 0.0:
        if abar.size == 0:
            s = np.einsum("cia,cja->cij", gx, gx)
        else:
            s = np.einsum("cia,cab,cjb->cij", gx, abar, gx)
        out += stiff * vols[:, None, None] * s
    return out


@njit(cache=True)
def local_matrices_numba(grads, vols, abar, conv, stiff):
    nc, k, m = grads.shape
    d = m - 1
    identity = abar.size == 0
    out = np.empty((nc, k, k))
    for c in range(nc):
        cw = conv * vols[c] / k
        for i in range(k):
            for j in range(k):
                acc = 0.0
                if stiff != 0.0:
                    if identity:
                        for a in range(d):
                            acc += grads[c, i, a] * grads[c, j, a]
                    else:
                        for a in range(d):
                            for b in range(d):
                                acc += grads[c, i, a] * abar[c, a, b] * grads[c, j, b]
                out[c, i, j] = cw * grads[c, j, d] + stiff * vols[c] * acc
    return out


# ------------------------------------------------------------- error sums


def cell_error_terms_numpy(nodal, grads, absdet, phi, weights, u, du):
    """Per-cell integrals of ``e^2``, ``|grad_x e|^2`` and ``(d_t e)^2`` with
    ``e = u - u_h``.

    ``nodal`` (nc, k) holds ``u_h`` at the cell vertices, ``u`` (nc, nq) and
    ``du`` (nc, nq, m) the exact value and space-time gradient at the
    quadrature points.
    """
    m = grads.shape[2]
    uh = nodal @ phi.T
    duh = np.einsum("ci,cia->ca", nodal, grads)
    e = u - uh
    de = du - duh[:, None, :]
    wd = weights[None, :] * absdet[:, None]
    l2 = np.sum(wd * e * e, axis=1)
    gx = np.sum(wd * np.sum(de[:, :, : m - 1] ** 2, axis=2), axis=1)
    gt = np.sum(wd * de[:, :, m - 1] ** 2, axis=1)
    return np.column_stack([l2, gx, gt])


@njit(cache=True)
def cell_error_terms_numba(nodal, grads, absdet, phi, weights, u, du):
    nc, k, m = grads.shape
    nq = weights.shape[0]
    out = np.zeros((nc, 3))
    duh = np.empty(m)
    for c in range(nc):
        for a in range(m):
            s = 0.0
            for i in range(k):
                s += nodal[c, i] * grads[c, i, a]
            duh[a] = s
        l2 = 0.0
        gx = 0.0
        gt = 0.0
        for q in range(nq):
            uh = 0.0
            for i in range(k):
                uh += nodal[c, i] * phi[q, i]
            e = u[c, q] - uh
            w = weights[q] * absdet[c]
            l2 += w * e * e
            for a in range(m - 1):
                de = du[c, q, a] - duh[a]
                gx += w * de * de
            de = du[c, q, m - 1] - duh[m - 1]
            gt += w * de * de
        out[c, 0] = l2
        out[c, 1] = gx
        out[c, 2] = gt
    return out


# -------------------------------------------------------------------- ILU(0)


def _ilu0_factor(indptr, indices, data):
    n = indptr.shape[0] - 1
    lu = data.copy()
    diag = np.full(n, -1, dtype=np.int64)
    pos = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            if indices[p] == i:
                diag[i] = p
    for i in range(n):
        if diag[i] < 0:
            return lu, diag, i
        for p in range(indptr[i], indptr[i + 1]):
            pos[indices[p]] = p
        for p in range(indptr[i], diag[i]):
            k = indices[p]
            lu[p] = lu[p] / lu[diag[k]]
            for q in range(diag[k] + 1, indptr[k + 1]):
                r = pos[indices[q]]
                if r >= 0:
                    lu[r] -= lu[p] * lu[q]
        for p in range(indptr[i], indptr[i + 1]):
            pos[indices[p]] = -1
        if lu[diag[i]] == 0.0:
            return lu, diag, i
    return lu, diag, -1


def _ilu0_solve(indptr, indices, lu, diag, b):
    n = b.shape[0]
    x = b.copy()
    for i in range(n):
        s = x[i]
        for p in range(indptr[i], diag[i]):
            s -= lu[p] * x[indices[p]]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for p in range(diag[i] + 1, indptr[i + 1]):
            s -= lu[p] * x[indices[p]]
        x[i] = s / lu[diag[i]]
    return x


ilu0_factor_numba = njit(cache=True)(_ilu0_factor)
ilu0_solve_numba = njit(cache=True)(_ilu0_solve)
# no vectorized form exists for the row recurrences; the fallback is the same
# loop run by the interpreter
ilu0_factor_numpy = _ilu0_factor
ilu0_solve_numpy = _ilu0_solve


# --------------------------------------------------------------- dispatch


def _pick(name):
    suffix = "numba" if _accel.USE_NUMBA else "numpy"
    return globals()[f"{name}_{suffix}"]


def backend():
    return "numba" if _accel.USE_NUMBA else "numpy"


def p1_gradients(coords):
    return _pick("p1_gradients")(np.ascontiguousarray(coords, dtype=float))


def local_matrices(grads, vols, abar=None, conv=1.0, stiff=1.0):
    if abar is None:
        abar = np.empty((0, 0, 0))
    return _pick("local_matrices")(grads, vols, abar, float(conv), float(stiff))


def cell_error_terms(nodal, grads, absdet, phi, weights, u, du):
    return _pick("cell_error_terms")(
        np.ascontiguousarray(nodal), grads, absdet, phi, weights,
        np.ascontiguousarray(u), np.ascontiguousarray(du),
    )


def ilu0_factor(indptr, indices, data):
    return _pick("ilu0_factor")(indptr, indices, data)


def ilu0_solve(indptr, indices, lu, diag, b):
    return _pick("ilu0_solve")(indptr, indices, lu, diag, b)
