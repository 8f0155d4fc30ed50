"""Time the numba kernels against their numpy fallbacks on one mesh.

    python3 benchmarks/bench_kernels.py --dim 3 --n 24 --repeat 3
"""
import argparse
import time

import numpy as np

from stfem import _accel, kernels
from stfem.assembly import DofMap, assemble_system
from stfem.fem import quadrature
from stfem.manufactured import example
from stfem.mesh import build_structured_2d, build_structured_3d


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(mesh, ilu_size):
    coords = mesh.cell_coordinates()
    grads, det = kernels.p1_gradients_numpy(coords)
    vols = mesh.cell_volumes()
    rule = quadrature(mesh.dim + 1, 4)
    rng = np.random.default_rng(0)
    nodal = rng.normal(size=(mesh.ncells, mesh.dim + 2))
    u = rng.normal(size=(mesh.ncells, rule.npoints))
    du = rng.normal(size=(mesh.ncells, rule.npoints, mesh.dim + 1))
    err_args = (nodal, grads, np.abs(det), rule.basis_values(), rule.weights, u, du)
    abar = np.zeros((0, 0, 0))

    sol = example(2 if mesh.dim == 2 else 1)
    small = (build_structured_3d if mesh.dim == 2 else build_structured_2d)(ilu_size)
    a = assemble_system(small, DofMap.for_solution(small, sol), sol.coefficient, sol.f).matrix
    ip, ix = a.indptr.astype(np.int64), a.indices.astype(np.int64)
    lu, diag, _ = kernels.ilu0_factor_numba(ip, ix, a.data.copy())
    b = np.ones(a.shape[0])

    return {
        "p1_gradients": lambda impl: impl(coords),
        "local_matrices": lambda impl: impl(grads, vols, abar, 1.0, 1.0),
        "cell_error_terms": lambda impl: impl(*err_args),
        "ilu0_factor": lambda impl: impl(ip, ix, a.data.copy()),
        "ilu0_solve": lambda impl: impl(ip, ix, lu, diag, b),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dim", type=int, choices=(1, 2), default=2,
                   help="spatial dimension (2 gives tetrahedral space-time meshes)")
    p.add_argument("--n", type=int, default=24, help="cells per axis")
    p.add_argument("--ilu-size", type=int, default=None,
                   help="cells per axis of the ILU(0) test system (slow in pure python)")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if not _accel.HAS_NUMBA:
        p.error("numba is not installed; nothing to compare")

    mesh = (build_structured_2d if args.dim == 1 else build_structured_3d)(args.n)
    ilu_size = args.ilu_size or (8 if args.dim == 2 else 24)
    print(f"mesh: {mesh.ncells} cells, {mesh.nvertices} vertices; ILU(0) on N={ilu_size}")
    print(f"{'kernel':<18}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, call in cases(mesh, ilu_size).items():
        fast = getattr(kernels, f"{name}_numba")
        slow = getattr(kernels, f"{name}_numpy")
        call(fast)  # compile outside the timing
        t_np = best_of(lambda: call(slow), args.repeat)
        t_nb = best_of(lambda: call(fast), args.repeat)
        print(f"{name:<18}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
