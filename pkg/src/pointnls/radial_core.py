"""Radial grids with their quadrature, plus the discrete Laplacian and its resolvent.

A grid function is a plain complex (or real) numpy array of node samples.
The last node sits on the Dirichlet wall r = R and always carries 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._bessel import EULER_GAMMA, bessel_i0, bessel_k0
from ._kernels import TridiagSolver, sym_tri_matvec

__all__ = [
    "EULER_GAMMA",
    "RadialGrid",
    "bessel_i0",
    "bessel_k0",
    "extrapolation_weights",
    "free_resolvent_apply",
    "inner_product",
    "laplacian_apply",
    "lp_norm",
    "make_grid",
]

_CACHE_LIMIT = 512


def extrapolation_weights(r, m: int = 4):
    """Weights e with e @ f[:m] = least-squares quadratic through (r_j, f_j) evaluated at 0."""
    vander = np.vander(np.asarray(r[:m], float), 3, increasing=True)
    return np.linalg.pinv(vander)[0]


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Graded radial mesh r_j = R (j/N)^grading, j = 1..N, with r_N = R a wall.

    ``weights`` integrate against c_n r^{n-1} dr (trapezoid in the graded
    coordinate). ``couplings`` are exact radial fluxes between neighbours,
    except the first few, which are rescaled so that the discrete Laplace
    Green function for the origin functional is exactly the fundamental
    solution at every node.
    """

    n: int
    R: float
    N: int
    grading: float
    nodes: np.ndarray
    weights: np.ndarray
    couplings: np.ndarray
    origin_weights: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def r(self):
        return self.nodes

    @property
    def interior(self):
        return self.N - 1

    @cached_property
    def stiffness_diag(self):
        a = self.couplings
        d = a.copy()
        d[1:] += a[:-1]
        return d

    @cached_property
    def stiffness_off(self):
        return -self.couplings[:-1]

    def stiffness_apply(self, f):
        """A f, the symmetric finite-volume stiffness; wall entry returned as 0."""
        out = np.zeros(self.N, np.complex128)
        out[:-1] = sym_tri_matvec(self.stiffness_diag, self.stiffness_off, f[:-1])
        return out

    def shifted_solver(self, z) -> TridiagSolver:
        """Factorisation of A + zW on the interior nodes, cached per z."""
        key = complex(z)
        solver = self._cache.get(key)
        if solver is None:
            if len(self._cache) >= _CACHE_LIMIT:
                self._cache.clear()
            solver = TridiagSolver(self.stiffness_diag + key * self.weights[:-1], self.stiffness_off)
            self._cache[key] = solver
        return solver

    def solve_shifted(self, z, rhs):
        """x with (A + zW) x = rhs on the interior, wall value 0."""
        out = np.zeros(self.N, np.complex128)
        out[:-1] = self.shifted_solver(z).solve(rhs[:-1])
        return out


def make_grid(n: int, R: float, N: int, grading: float = 2.0, origin_nodes: int = 4) -> RadialGrid:
    if n not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {n}")
    if N < 16:
        raise ValueError(f"need N >= 16 nodes, got {N}")
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R}")
    if grading < 1:
        raise ValueError(f"grading must be >= 1, got {grading}")
    s = np.arange(1, N + 1) / N
    r = R * s**grading
    cn = 2 * np.pi if n == 2 else 4 * np.pi
    w = cn * r ** (n - 1) * grading * R * s ** (grading - 1) / N
    w[-1] *= 0.5
    if n == 3:
        a = cn * r[:-1] * r[1:] / (r[1:] - r[:-1])
    else:
        a = cn / np.log(r[1:] / r[:-1])
    e = extrapolation_weights(r, origin_nodes)
    # A G0 = e node by node forces these partial sums onto the first fluxes
    partial = np.cumsum(e)[:-1]
    if np.any(partial <= 0):
        raise ValueError("origin extrapolation gives a non-positive flux; change grading or origin_nodes")
    a[: origin_nodes - 1] *= partial
    origin = np.zeros(N)
    origin[:origin_nodes] = e
    return RadialGrid(n, float(R), int(N), float(grading), r, w, a, origin)


def _check_shift(z, allow_zero=False):
    z = complex(z)
    if z.imag == 0.0 and (z.real < 0.0 or (z.real == 0.0 and not allow_zero)):
        raise ValueError(f"shift z = {z} lies on the cut (-inf, 0]")
    return z


def laplacian_apply(grid: RadialGrid, f, z=0.0):
    """(-Laplacian + z) f on regular radial samples, Dirichlet wall at R."""
    f = np.asarray(f)
    out = grid.stiffness_apply(f)
    out[:-1] = out[:-1] / grid.weights[:-1] + z * f[:-1]
    return out


def free_resolvent_apply(grid: RadialGrid, f, z):
    """Solve (-Laplacian + z) g = f discretely."""
    z = _check_shift(z)
    return grid.solve_shifted(z, grid.weights * np.asarray(f))


def inner_product(grid: RadialGrid, f, g) -> complex:
    """Quadrature inner product, conjugate-linear in the first slot."""
    return complex(np.sum(grid.weights * np.conj(f) * g))


def lp_norm(grid: RadialGrid, f, p) -> float:
    mod = np.abs(f)
    if np.isinf(p):
        return float(mod.max())
    if p < 1:
        raise ValueError("lp_norm needs p >= 1")
    return float(np.sum(grid.weights * mod**p) ** (1.0 / p))
