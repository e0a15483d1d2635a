"""Tridiagonal hot loops.

Two interchangeable backends: numba-compiled Thomas elimination, and a
vectorised parallel cyclic reduction in plain numpy. Setting the
environment variable ``POINTNLS_DISABLE_NUMBA=1`` before import selects
the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "SingularPivotError",
    "TridiagSolver",
    "sym_tri_matvec",
]


class SingularPivotError(ZeroDivisionError):
    """A pivot of the tridiagonal elimination vanished."""


_PIVOT_FLOOR = 1e-300

_disabled = os.environ.get("POINTNLS_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _disabled:
        raise ImportError
    from numba import njit
except ImportError:  # pragma: no cover - exercised via the env flag in a subprocess
    njit = None

BACKEND = "numba" if njit is not None else "numpy"


# ---------------------------------------------------------------- numpy path

def _matvec_np(diag, off, x):
    y = diag * x
    y[:-1] += off * x[1:]
    y[1:] += off * x[:-1]
    return y


def _pcr_solve_np(diag, off, rhs):
    """Parallel cyclic reduction for a symmetric tridiagonal system."""
    n = diag.shape[0]
    b = diag.astype(np.complex128)
    a = np.zeros(n, np.complex128)
    c = np.zeros(n, np.complex128)
    a[1:] = off
    c[:-1] = off
    d = rhs.astype(np.complex128)
    stride = 1
    while stride < n:
        if np.any(np.abs(b) < _PIVOT_FLOOR):
            raise SingularPivotError("zero pivot in cyclic reduction")
        alpha = np.zeros(n, np.complex128)
        gamma = np.zeros(n, np.complex128)
        alpha[stride:] = -a[stride:] / b[:-stride]
        gamma[:-stride] = -c[:-stride] / b[stride:]
        a_new = np.zeros(n, np.complex128)
        c_new = np.zeros(n, np.complex128)
        a_new[stride:] = alpha[stride:] * a[:-stride]
        c_new[:-stride] = gamma[:-stride] * c[stride:]
        b_new = b.copy()
        d_new = d.copy()
        b_new[stride:] += alpha[stride:] * c[:-stride]
        b_new[:-stride] += gamma[:-stride] * a[stride:]
        d_new[stride:] += alpha[stride:] * d[:-stride]
        d_new[:-stride] += gamma[:-stride] * d[stride:]
        a, b, c, d = a_new, b_new, c_new, d_new
        stride *= 2
    if np.any(np.abs(b) < _PIVOT_FLOOR):
        raise SingularPivotError("zero pivot in cyclic reduction")
    return d / b


# ---------------------------------------------------------------- numba path

if njit is not None:

    @njit(cache=True)
    def _thomas_factor_nb(diag, off):
        n = diag.shape[0]
        cp = np.zeros(n, np.complex128)
        inv = np.zeros(n, np.complex128)
        denom = diag[0]
        for i in range(n):
            if i > 0:
                denom = diag[i] - off[i - 1] * cp[i - 1]
            if abs(denom) < 1e-300:
                return cp, inv, i
            inv[i] = 1.0 / denom
            if i < n - 1:
                cp[i] = off[i] * inv[i]
        return cp, inv, -1

    @njit(cache=True)
    def _thomas_solve_nb(off, cp, inv, rhs):
        n = rhs.shape[0]
        x = np.empty(n, np.complex128)
        x[0] = rhs[0] * inv[0]
        for i in range(1, n):
            x[i] = (rhs[i] - off[i - 1] * x[i - 1]) * inv[i]
        for i in range(n - 2, -1, -1):
            x[i] -= cp[i] * x[i + 1]
        return x

    @njit(cache=True)
    def _matvec_nb(diag, off, x):
        n = x.shape[0]
        y = np.empty(n, np.complex128)
        for i in range(n):
            acc = diag[i] * x[i]
            if i > 0:
                acc += off[i - 1] * x[i - 1]
            if i < n - 1:
                acc += off[i] * x[i + 1]
            y[i] = acc
        return y


class TridiagSolver:
    """Factorised solver for a symmetric tridiagonal matrix.

    ``diag`` may be complex, ``off`` is the (shared) sub/super diagonal.
    """

    def __init__(self, diag, off, backend: str | None = None):
        self.backend = backend or BACKEND
        if self.backend == "numba" and njit is None:
            raise RuntimeError("numba backend requested but unavailable")
        self.diag = np.ascontiguousarray(diag, dtype=np.complex128)
        self.off = np.ascontiguousarray(off, dtype=np.float64)
        if self.backend == "numba":
            cp, inv, bad = _thomas_factor_nb(self.diag, self.off)
            if bad >= 0:
                raise SingularPivotError(f"zero pivot at row {bad}")
            self._cp, self._inv = cp, inv

    def solve(self, rhs):
        rhs = np.ascontiguousarray(rhs, dtype=np.complex128)
        if self.backend == "numba":
            return _thomas_solve_nb(self.off, self._cp, self._inv, rhs)
        return _pcr_solve_np(self.diag, self.off, rhs)


def sym_tri_matvec(diag, off, x, backend: str | None = None):
    x = np.ascontiguousarray(x, dtype=np.complex128)
    if (backend or BACKEND) == "numba":
        return _matvec_nb(np.ascontiguousarray(diag, dtype=np.complex128), off, x)
    return _matvec_np(diag, off, x)
