"""Conservation monitors plus residual and decay diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import evolution
from .fractional import dhalf_norm
from .point_interaction import (
    DomainState,
    boundary_residual,
    h_apply,
    pac_project,
    synthesize,
)
from .radial_core import inner_product, lp_norm

__all__ = [
    "BumpTestFunction",
    "DecayFit",
    "DiagnosticRecord",
    "bc_residual",
    "charge_jump_ratio",
    "continuous_dependence_probe",
    "decay_fit",
    "dnorm",
    "drift",
    "energy",
    "energy_bound_ratio",
    "mass",
    "record",
    "strichartz_accumulate",
    "weak_residual",
]

bc_residual = boundary_residual


@dataclass
class DiagnosticRecord:
    t: float
    mass: float
    energy: float
    dnorm: float
    dhalf: float
    bc_residual: float
    lp_norms: dict = field(default_factory=dict)
    charge: complex = 0j


def mass(s: DomainState) -> float:
    return lp_norm(s.op.grid, synthesize(s), 2) ** 2


def energy(s: DomainState, p: float, sign: int, weight: float = 1.0) -> float:
    """1/2 <psi, H psi> + sign/(p+1) ||psi||_{p+1}^{p+1}; ``weight`` scales the nonlinear term."""
    psi = synthesize(s)
    linear = 0.5 * inner_product(s.op.grid, psi, h_apply(s)).real
    if weight == 0:
        return linear
    return linear + weight * sign * lp_norm(s.op.grid, psi, p + 1) ** (p + 1) / (p + 1)


def dnorm(s: DomainState) -> float:
    """||(H + lam) psi||."""
    return lp_norm(s.op.grid, h_apply(s) + s.op.gauge * synthesize(s), 2)


def record(s: DomainState, cfg, t: float, exponents=()) -> DiagnosticRecord:
    psi = synthesize(s)
    grid = s.op.grid
    return DiagnosticRecord(
        t=float(t),
        mass=lp_norm(grid, psi, 2) ** 2,
        energy=energy(s, cfg.p, cfg.sign, cfg.nonlinear_weight),
        dnorm=dnorm(s),
        dhalf=dhalf_norm(s),
        bc_residual=boundary_residual(s),
        lp_norms={float(q): lp_norm(grid, psi, q) for q in exponents},
        charge=complex(s.q),
    )


def drift(traj, key: str) -> float:
    """max_t |x(t) - x(0)| / |x(0)| for a record field."""
    vals = np.array([getattr(r, key) for r in traj.records])
    return float(np.max(np.abs(vals - vals[0])) / abs(vals[0]))


def charge_jump_ratio(traj) -> float:
    """Largest monitor-to-monitor charge jump over the median jump."""
    q = np.array([r.charge for r in traj.records])
    jumps = np.abs(np.diff(q))
    if jumps.size == 0:
        return 0.0
    typical = np.median(jumps)
    return float(jumps.max() / typical) if typical > 0 else (0.0 if jumps.max() == 0 else math.inf)


# ---------------------------------------------------------------- weak residual

@dataclass(frozen=True)
class BumpTestFunction:
    """zeta(t, r) = chi(t) exp(-(r/width)^2) with chi a C-infinity bump on (t0, t1)."""

    t0: float
    t1: float
    width: float = 1.0
    n: int = 3

    def _chi(self, t):
        t = np.asarray(t, float)
        mid, half = 0.5 * (self.t0 + self.t1), 0.5 * (self.t1 - self.t0)
        tau = (t - mid) / half
        inside = np.abs(tau) < 1
        val = np.zeros_like(t)
        der = np.zeros_like(t)
        ti = tau[inside]
        val[inside] = np.exp(-1.0 / (1.0 - ti**2))
        der[inside] = val[inside] * (-2.0 * ti / (1.0 - ti**2) ** 2) / half
        return val, der

    def spatial(self, r):
        return np.exp(-((r / self.width) ** 2))

    def value(self, t, r):
        return self._chi(t)[0] * self.spatial(r)

    def time_derivative(self, t, r):
        return self._chi(t)[1] * self.spatial(r)

    def laplacian(self, t, r):
        w2 = self.width**2
        return self._chi(t)[0] * (4 * r**2 / w2**2 - 2 * self.n / w2) * self.spatial(r)

    def at_origin(self, t):
        return self._chi(t)[0]


def _trapezoid_weights(times):
    t = np.asarray(times, float)
    w = np.zeros_like(t)
    if t.size > 1:
        dt = np.diff(t)
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
    return w


def weak_residual(traj, zeta, p: float = 1.0, sign: int = 1, weight: float = 1.0) -> complex:
    """int dt [ <i psi_t + Lap psi - F(psi), zeta> + q zeta(t, 0) ], pairing bilinear.

    The time derivative is moved onto zeta and the Laplacian onto zeta, so
    only psi itself is sampled. The identity vanishes for exact solutions.
    """
    if not traj.states:
        return 0j
    grid = traj.states[0].op.grid
    r, w = grid.nodes, grid.weights
    total = 0j
    for tw, t, s in zip(_trapezoid_weights(traj.times), traj.times, traj.states):
        if tw == 0:
            continue
        psi = synthesize(s)
        force = evolution.nonlinearity(psi, p, sign, weight)
        body = np.sum(w * (-1j * psi * zeta.time_derivative(t, r) + psi * zeta.laplacian(t, r) - force * zeta.value(t, r)))
        total += tw * (body + s.q * zeta.at_origin(t))
    return complex(total)


# ---------------------------------------------------------------- space-time norms

def strichartz_accumulate(traj, p: float, T: float | None = None) -> float:
    """(int_0^T ||psi(t)||_{p+1}^r dt)^{1/r} by trapezoid over monitor times."""
    grid = traj.states[0].op.grid
    n = grid.n
    r = evolution.strichartz_exponent(n, p)
    norms = np.array([lp_norm(grid, synthesize(s), p + 1) for s in traj.states])
    if math.isinf(r):
        return float(norms.max())
    if len(norms) == 1:
        if T is None:
            raise ValueError("a single-time trajectory needs the horizon T")
        return float(T ** (1 / r) * norms[0])
    return float(np.sum(_trapezoid_weights(traj.times) * norms**r) ** (1 / r))


def energy_bound_ratio(traj, p: float, s: float | None = None) -> float:
    """max_t ||psi||_{p+1}^{p+1} / (||psi||^{(1-s)(p+1)} ||psi||_{D^1/2}^{s(p+1)})."""
    n = traj.states[0].op.n
    if s is None:
        lo, hi = ((p - 1) / (p + 1), 1.0) if n == 2 else ((3 * p - 3) / (2 * p + 2), 0.5)
        s = 0.5 * (lo + hi)
    out = 0.0
    for rec, st in zip(traj.records, traj.states):
        lq = rec.lp_norms.get(float(p + 1))
        if lq is None:
            lq = lp_norm(st.op.grid, synthesize(st), p + 1)
        denom = math.sqrt(rec.mass) ** ((1 - s) * (p + 1)) * rec.dhalf ** (s * (p + 1))
        out = max(out, lq ** (p + 1) / denom)
    return out


# ---------------------------------------------------------------- decay

@dataclass
class DecayFit:
    beta: float
    target: float
    times: np.ndarray
    norms: np.ndarray
    charges: np.ndarray
    stable: bool


def decay_fit(op, phi, sigma: float, times, max_step: float = 1e-2, project: bool = True) -> DecayFit:
    """Fit ||U(t) P_ac phi||_sigma ~ t^{-beta} on the given times."""
    times = np.sort(np.asarray(times, float))
    if not times[0] > 0:
        raise ValueError("decay times must be positive")
    data = pac_project(op, phi) if project else np.asarray(phi, np.complex128)
    state = data
    grid = op.grid
    norms, charges = [], []
    t_prev = 0.0
    for t in times:
        sub = max(1, math.ceil((t - t_prev) / max_step - 1e-9))
        state = evolution.u_apply(op, state, t - t_prev, sub)
        t_prev = t
        norms.append(lp_norm(grid, synthesize(state), sigma))
        charges.append(state.q)
    norms = np.array(norms)
    slope = np.polyfit(np.log(times), np.log(norms), 1)[0]
    stable = times[-1] / times[0] >= math.sqrt(10)
    if not stable:
        warnings.warn("decay window shorter than half a decade; fit unstable", RuntimeWarning, stacklevel=2)
    target = op.n * (0.5 - 1.0 / sigma)
    return DecayFit(float(-slope), float(target), times, norms, np.array(charges), stable)


def continuous_dependence_probe(op, psi0: DomainState, perturbations, cfg):
    """Rows of (||d psi0||_D, sup_t ||d psi(t)||, ratio) for each perturbation."""
    base = evolution.evolve(op, psi0, cfg)
    rows = []
    for d in perturbations:
        size = dnorm(d)
        other = evolution.evolve(op, psi0 + d, cfg)
        dev = max(
            lp_norm(op.grid, synthesize(a) - synthesize(b), 2)
            for a, b in zip(base.states, other.states)
        )
        rows.append({"d_initial": size, "sup_deviation": dev, "ratio": dev / size if size > 0 else 0.0})
    return rows
