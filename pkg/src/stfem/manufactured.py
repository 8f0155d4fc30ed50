"""Closed-form test solutions for the heat equation ``u_t - div(A grad u) = f``.

Every callback takes ``x`` of shape ``(n, d)`` and ``t`` of shape ``(n,)``.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy import pi

from .coefficients import CoefficientField
from .mesh import Geometry

# Example 3 time profile: -c t^2 + t
EX3_C = (2.0 * pi**2 + 1.0) / (2.0 * pi**2 + 2.0)


@dataclass(frozen=True)
class ManufacturedSolution:
    name: str
    geometry: Geometry
    u: Callable
    dudt: Callable
    grad_x: Callable
    f: Callable
    laplacian: Optional[Callable] = None
    coefficient: Optional[CoefficientField] = None
    zero_initial: bool = True
    zero_lateral: bool = True
    zero_terminal: bool = False

    def __post_init__(self):
        if self.coefficient is None:
            object.__setattr__(self, "coefficient", CoefficientField.identity(self.dim))

    @property
    def dim(self):
        return self.geometry.dim

    def space_time_gradient(self, x, t):
        """``(grad_x u, u_t)`` stacked, shape ``(n, d + 1)``."""
        return np.column_stack([self.grad_x(x, t), self.dudt(x, t)])

    def at(self, points, which="u"):
        """Evaluate a callback at space-time points of shape ``(n, d + 1)``."""
        points = np.asarray(points, dtype=float)
        return getattr(self, which)(points[:, :-1], points[:, -1])


def _ex1():
    def u(x, t):
        return np.sin(pi * x[:, 0]) * np.cos(pi * t)

    def dudt(x, t):
        return -pi * np.sin(pi * x[:, 0]) * np.sin(pi * t)

    def grad_x(x, t):
        return (pi * np.cos(pi * x[:, 0]) * np.cos(pi * t))[:, None]

    def lap(x, t):
        return -pi**2 * u(x, t)

    def f(x, t):
        s = np.sin(pi * x[:, 0])
        return -pi * s * np.sin(pi * t) + pi**2 * s * np.cos(pi * t)

    return ManufacturedSolution(
        "example1", Geometry.UNIT_SQUARE, u, dudt, grad_x, f, lap,
        zero_initial=False, zero_lateral=True, zero_terminal=False,
    )


def _spatial_2d(name, g, dg, zero_terminal):
    """``sin(pi x) sin(pi y) g(t)`` on the unit cube."""

    def s(x):
        return np.sin(pi * x[:, 0]) * np.sin(pi * x[:, 1])

    def u(x, t):
        return s(x) * g(t)

    def dudt(x, t):
        return s(x) * dg(t)

    def grad_x(x, t):
        gx = pi * np.cos(pi * x[:, 0]) * np.sin(pi * x[:, 1])
        gy = pi * np.sin(pi * x[:, 0]) * np.cos(pi * x[:, 1])
        return np.column_stack([gx, gy]) * g(t)[:, None]

    def lap(x, t):
        return -2.0 * pi**2 * u(x, t)

    def f(x, t):
        return s(x) * (dg(t) + 2.0 * pi**2 * g(t))

    return ManufacturedSolution(
        name, Geometry.UNIT_CUBE, u, dudt, grad_x, f, lap,
        zero_initial=True, zero_lateral=True, zero_terminal=zero_terminal,
    )


def _ex2():
    return _spatial_2d(
        "example2", lambda t: np.sin(pi * t), lambda t: pi * np.cos(pi * t), True
    )


def _ex3():
    return _spatial_2d(
        "example3", lambda t: -EX3_C * t**2 + t, lambda t: 1.0 - 2.0 * EX3_C * t, False
    )


def _ex4():
    def u(x, t):
        return np.sin(pi * x[:, 0]) * t * np.exp(2.0 * t)

    def dudt(x, t):
        return np.sin(pi * x[:, 0]) * (1.0 + 2.0 * t) * np.exp(2.0 * t)

    def grad_x(x, t):
        return (pi * np.cos(pi * x[:, 0]) * t * np.exp(2.0 * t))[:, None]

    def lap(x, t):
        return -pi**2 * u(x, t)

    def f(x, t):
        s = np.sin(pi * x[:, 0])
        return s * np.exp(2.0 * t) * (1.0 + 2.0 * t + pi**2 * t)

    return ManufacturedSolution(
        "example4", Geometry.TRAPEZOID, u, dudt, grad_x, f, lap,
        zero_initial=True, zero_lateral=False, zero_terminal=False,
    )


def affine(geometry=Geometry.UNIT_SQUARE):
    """``u = sum(x) + t``; lies in the P1 space of any mesh, ``f = 1``."""
    d = geometry.dim

    def u(x, t):
        return x.sum(axis=1) + t

    return ManufacturedSolution(
        f"affine{d}d", geometry, u,
        dudt=lambda x, t: np.ones(len(t)),
        grad_x=lambda x, t: np.ones((len(t), d)),
        f=lambda x, t: np.ones(len(t)),
        laplacian=lambda x, t: np.zeros(len(t)),
        zero_initial=False, zero_lateral=False,
    )


_REGISTRY = {1: _ex1, 2: _ex2, 3: _ex3, 4: _ex4}


def example(idx):
    try:
        return _REGISTRY[int(idx)]()
    except (KeyError, ValueError):
        raise ValueError(f"unknown example {idx!r}; choose from 1-4") from None


def sample_interior(geometry, n, rng):
    """Uniform samples of the reference box mapped into ``geometry``."""
    ref = rng.uniform(0.0, 1.0, size=(n, geometry.dim + 1))
    return geometry.map(ref)


def _fd_first(g, h):
    return (-g(2 * h) + 8.0 * g(h) - 8.0 * g(-h) + g(-2 * h)) / (12.0 * h)


def _fd_second(g, h):
    return (-g(2 * h) + 16.0 * g(h) - 30.0 * g(0.0) + 16.0 * g(-h) - g(-2 * h)) / (
        12.0 * h * h
    )


def pde_residual_check(sol, n_samples=1000, step=1e-3, seed=0):
    """Max ``|u_t - lap_x u - f|`` at random interior points, with ``u_t`` and
    ``lap_x u`` taken from fourth-order central differences of ``sol.u``.

    ``step`` is rounded to a power of two and the samples are snapped to a
    ``2**-30`` grid, so shifted coordinates carry no rounding error and the
    quotients are exact for polynomials of low degree. Only meaningful for
    the identity coefficient.
    """
    if not sol.coefficient.is_identity:
        raise ValueError("finite-difference residual check assumes A = I")
    rng = np.random.default_rng(seed)
    pts = np.round(sample_interior(sol.geometry, n_samples, rng) * 2.0**30) / 2.0**30
    step = 2.0 ** np.round(np.log2(step))
    x, t = pts[:, :-1], pts[:, -1]
    ut = _fd_first(lambda s: sol.u(x, t + s), step)
    lap = np.zeros(len(t))
    for k in range(sol.dim):
        e = np.zeros(sol.dim)
        e[k] = 1.0
        lap += _fd_second(lambda s: sol.u(x + s * e, t), step)
    return float(np.max(np.abs(ut - lap - sol.f(x, t))))


def sine_product():
    """``sin(pi x) sin(pi t)`` on the unit square; a smooth member of the
    constrained space's closure, used for projection-rate checks."""

    def u(x, t):
        return np.sin(pi * x[:, 0]) * np.sin(pi * t)

    def dudt(x, t):
        return pi * np.sin(pi * x[:, 0]) * np.cos(pi * t)

    def grad_x(x, t):
        return (pi * np.cos(pi * x[:, 0]) * np.sin(pi * t))[:, None]

    def lap(x, t):
        return -pi**2 * u(x, t)

    def f(x, t):
        return dudt(x, t) - lap(x, t)

    return ManufacturedSolution("sine_product", Geometry.UNIT_SQUARE, u, dudt, grad_x, f, lap)
