"""Fractional powers of H + lambda and of -Laplacian + lambda.

Both use the spectral-shift integral

    (y + lam)^{-s/2} = sin(s pi / 2)/pi * int_0^inf t^{-s/2} (y + lam + t)^{-1} dt.

The integral is evaluated by the trapezoid rule in u = ln t, the parts
beyond the cut-offs summed in closed form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .point_interaction import (
    DomainState,
    PointInteractionOp,
    from_values,
    h_apply,
    krein_resolvent_apply,
    synthesize,
)
from .radial_core import RadialGrid, free_resolvent_apply, inner_product, laplacian_apply, lp_norm

__all__ = [
    "FracQuadrature",
    "dfrac_norm",
    "dhalf_norm",
    "frac_quadrature",
    "frac_resolvent_apply",
    "frac_resolvent_state",
    "free_frac_apply",
    "inequality_report",
    "sobolev_norm",
]


@dataclass(frozen=True)
class FracQuadrature:
    """Shift nodes t_i with weights, plus coefficients for the two tails.

    ``low`` multiplies (y + lam)^{-1}, ``high`` multiplies the identity.
    """

    s: float
    nodes: np.ndarray
    weights: np.ndarray
    low: float
    high: float

    @property
    def count(self):
        return self.nodes.size

    def scalar(self, y, lam=1.0):
        """Quadrature applied to (y + lam + t)^{-1}; approximates (y + lam)^{-s/2}."""
        y = np.asarray(y, float)[..., None]
        body = np.sum(self.weights / (y + lam + self.nodes), axis=-1)
        return body + self.low / (y[..., 0] + lam) + self.high


@lru_cache(maxsize=64)
def frac_quadrature(s: float, step: float = 0.5, u_min: float = -35.0, u_max: float = 46.0) -> FracQuadrature:
    if not 0 < s < 2:
        raise ValueError(f"fractional exponent must lie in (0, 2), got {s}")
    count = int(round((u_max - u_min) / step)) + 1
    u = np.linspace(u_min, u_max, count)
    h = u[1] - u[0]
    t = np.exp(u)
    pref = math.sin(s * math.pi / 2) / math.pi
    w = pref * h * t ** (1 - s / 2)
    # the lattice continues past both cut-offs; there the integrand is a pure
    # exponential in u, so the remaining trapezoid sums are geometric series
    a_lo, a_hi = 1 - s / 2, s / 2
    low = pref * h * math.exp(a_lo * u_min) * math.exp(-a_lo * h) / -math.expm1(-a_lo * h)
    high = pref * h * math.exp(-a_hi * u_max) * math.exp(-a_hi * h) / -math.expm1(-a_hi * h)
    return FracQuadrature(float(s), t, w, low, high)


def _as_state(op, f):
    return f if isinstance(f, DomainState) else from_values(op, f)


def frac_resolvent_state(op: PointInteractionOp, f, s: float, lam: float | None = None) -> DomainState:
    """(H + lam)^{-s/2} f as a domain state at the operator gauge."""
    lam = op.gauge if lam is None else float(lam)
    if op.energy is not None and not lam > -op.energy:
        raise ValueError("fractional powers need lam > |E_alpha|")
    quad = frac_quadrature(float(s))
    values = f.values() if isinstance(f, DomainState) else np.asarray(f, np.complex128)
    out = quad.high * _as_state(op, values)
    out = out + quad.low * krein_resolvent_apply(op, values, lam)
    # fixed summation order keeps runs bit-reproducible
    for t, w in zip(quad.nodes, quad.weights):
        out = out + w * krein_resolvent_apply(op, values, lam + t)
    return out


def frac_resolvent_apply(op: PointInteractionOp, f, s: float, lam: float | None = None):
    return synthesize(frac_resolvent_state(op, f, s, lam))


def free_frac_apply(grid: RadialGrid, f, s: float, lam: float = 1.0):
    """(-Laplacian + lam)^{-s/2} f."""
    quad = frac_quadrature(float(s))
    f = np.asarray(f, np.complex128)
    out = quad.high * f + quad.low * free_resolvent_apply(grid, f, lam)
    for t, w in zip(quad.nodes, quad.weights):
        out = out + w * free_resolvent_apply(grid, f, lam + t)
    out[-1] = 0.0
    return out


def dhalf_norm(s: DomainState) -> float:
    """(Re <psi, (H + lam) psi>)^{1/2} at the operator gauge."""
    psi = synthesize(s)
    val = inner_product(s.op.grid, psi, h_apply(s) + s.op.gauge * psi).real
    if val < 0:
        warnings.warn(f"negative quadratic form {val:.3e} clamped to 0", RuntimeWarning, stacklevel=2)
        val = 0.0
    return math.sqrt(val)


def dfrac_norm(op: PointInteractionOp, f, s: float) -> float:
    """||(H + lam)^{s/2} f|| for s in (0, 2), via (H + lam) (H + lam)^{-(2-s)/2}."""
    st = frac_resolvent_state(op, f, 2.0 - s)
    v = h_apply(st) + op.gauge * synthesize(st)
    return lp_norm(op.grid, v, 2)


def sobolev_norm(grid: RadialGrid, f, s: float, lam: float = 1.0) -> float:
    """||(-Laplacian + lam)^{s/2} f|| for s in (0, 1)."""
    if not 0 < s < 1:
        raise ValueError("sobolev_norm takes s in (0, 1)")
    return lp_norm(grid, laplacian_apply(grid, free_frac_apply(grid, f, 2.0 - s, lam), lam), 2)


def _s_range(n, q):
    if n == 2:
        if not 2 <= q < math.inf:
            raise ValueError("n = 2 needs 2 <= q < inf")
        top = 1.0
    else:
        if not 2 <= q < 3:
            raise ValueError("n = 3 needs 2 <= q < 3")
        if q > 2.75:
            warnings.warn("q close to 3: L^q quadrature of the singular part converges slowly", RuntimeWarning, stacklevel=3)
        top = 0.5
    return n * (0.5 - 1.0 / q), top


def inequality_report(state: DomainState, p: float, targets, embedding: bool = True):
    """Empirical Gagliardo-Nirenberg and embedding ratios.

    ``targets`` lists q values or (q, s) pairs; a bare q uses s_c and the
    midpoint of [s_c, s_max). ``p`` is recorded for reference.
    """
    op = state.op
    grid = op.grid
    psi = synthesize(state)
    l2 = lp_norm(grid, psi, 2)
    dh = dhalf_norm(state)
    rows = []
    for target in targets:
        q, s_given = (target if isinstance(target, tuple) else (target, None))
        s_c, top = _s_range(op.n, float(q))
        exps = [s_given] if s_given is not None else [s_c, 0.5 * (s_c + top)]
        lq = lp_norm(grid, psi, q)
        for s in exps:
            if not s_c - 1e-12 <= s < top:
                raise ValueError(f"s = {s} outside [{s_c}, {top}) for q = {q}")
            row = {
                "p": float(p),
                "q": float(q),
                "s": float(s),
                "lq": lq,
                "l2": l2,
                "dhalf": dh,
                "gn_ratio": lq / (l2 ** (1 - s) * dh**s),
            }
            if embedding:
                # s = 0 is the degenerate L^2 case
                dn = l2 if s == 0 else dfrac_norm(op, psi, s)
                row["dfrac"] = dn
                row["embed_ratio"] = lq / dn
            rows.append(row)
    return rows
