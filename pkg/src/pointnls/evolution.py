"""Time stepping built on a Crank-Nicolson propagator with a point interaction."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics
from ._kernels import SingularPivotError
from .point_interaction import (
    DomainState,
    PointInteractionOp,
    PoleError,
    from_values,
    krein_resolvent_apply,
    synthesize,
)
from .radial_core import lp_norm

__all__ = [
    "EvolutionConfig",
    "PicardResult",
    "Trajectory",
    "evolve",
    "cn_forced",
    "exp_midpoint_step",
    "nonlinear_phase",
    "nonlinearity",
    "picard_solve",
    "strichartz_exponent",
    "u_apply",
    "well_posedness_window",
]

SCHEMES = ("linear-only", "exp-midpoint", "picard")
_ROUNDOFF = 1e-13


def well_posedness_window(n: int, p: float) -> dict:
    """Whether (n, p) lies in the proven local and global existence ranges."""
    if n == 3:
        local = 1 <= p < 1.5
        glob = local
    else:
        local = p >= 1
        glob = 1 <= p < 3
    inside = local and glob
    return {
        "local": local,
        "global": glob,
        "inside": inside,
        "stamp": ("inside" if inside else "outside") + " paper well-posedness window",
    }


def strichartz_exponent(n: int, p: float) -> float:
    """Time exponent r with (r, p + 1) admissible; infinite for p = 1."""
    return math.inf if p == 1 else 4 * (p + 1) / (n * (p - 1))


@dataclass(frozen=True)
class EvolutionConfig:
    p: float = 2.0
    sign: int = 1  # +1 defocusing, -1 focusing
    dt: float = 1e-3
    T: float = 1.0
    scheme: str = "exp-midpoint"
    monitor_cadence: int = 10
    blowup_threshold: float | None = None
    blowup_factor: float = 1e6
    cn_substeps: int = 1
    lp_exponents: tuple = ()
    picard_iterations: int = 5
    nonlinear_weight: float = 1.0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 (defocusing) or -1 (focusing)")
        if not self.dt > 0 or not self.T > 0:
            raise ValueError("dt and T must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.monitor_cadence < 1 or self.cn_substeps < 1:
            raise ValueError("monitor_cadence and cn_substeps must be >= 1")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    def monitor_exponents(self):
        return tuple(self.lp_exponents) or (self.p + 1,)


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    records: list = field(default_factory=list)
    termination: str = "completed"
    window: dict = field(default_factory=dict)
    message: str = ""


# ---------------------------------------------------------------- linear flow

def _as_state(op, x):
    return x if isinstance(x, DomainState) else from_values(op, x)


def cn_forced(op: PointInteractionOp, x, t: float, substeps: int = 1, force=None) -> DomainState:
    """Crank-Nicolson for i psi_t = H psi + force, with ``force`` frozen in time.

    One substep of size delta is the Cayley map
    psi <- -psi + (4/(i delta)) (H + z)^{-1} (psi - (i delta/2) force),
    z = -2i/delta. The force enters through (1 + i delta H/2)^{-1}, which is
    the Crank-Nicolson counterpart of int_0^delta U(s) ds / delta.
    """
    state = _as_state(op, x)
    if t == 0:
        return state
    delta = t / substeps
    z = -2j / delta
    c = 4 / (1j * delta)
    shift = None if force is None else 0.5j * delta * np.asarray(force)
    for _ in range(substeps):
        rhs = synthesize(state) if shift is None else synthesize(state) - shift
        state = c * krein_resolvent_apply(op, rhs, z, state.gauge) - state
    return state


def u_apply(op: PointInteractionOp, x, t: float, substeps: int = 1) -> DomainState:
    """exp(-itH) approximated by ``substeps`` Crank-Nicolson steps."""
    return cn_forced(op, x, t, substeps)


# ---------------------------------------------------------------- nonlinearity

def nonlinearity(values, p: float, sign: int, weight: float = 1.0):
    """F(psi) = sign |psi|^{p-1} psi, pointwise."""
    return (weight * sign) * np.abs(values) ** (p - 1) * values


def nonlinear_phase(values, dt: float, p: float, sign: int):
    """Exact flow of i psi_t = F(psi): a pointwise phase rotation."""
    values = np.asarray(values)
    return np.exp(-1j * sign * dt * np.abs(values) ** (p - 1)) * values


def exp_midpoint_step(op: PointInteractionOp, s: DomainState, cfg: EvolutionConfig) -> DomainState:
    """One exponential-midpoint step on the Duhamel form.

    psi_mid  = S(dt/2; F(psi_n)) psi_n
    psi_next = S(dt; F(psi_mid)) psi_n
    where S(t; f) is Crank-Nicolson for i psi_t = H psi + f with f frozen.
    ``cn_substeps`` counts substeps per half step.
    """
    dt, m = cfg.dt, cfg.cn_substeps
    force = nonlinearity(synthesize(s), cfg.p, cfg.sign, cfg.nonlinear_weight)
    mid = cn_forced(op, s, dt / 2, m, force)
    force_mid = nonlinearity(synthesize(mid), cfg.p, cfg.sign, cfg.nonlinear_weight)
    return cn_forced(op, s, dt, 2 * m, force_mid)


# ---------------------------------------------------------------- main loop

def _linear_step(op, s, cfg):
    return u_apply(op, s, cfg.dt, cfg.cn_substeps)


def evolve(op: PointInteractionOp, psi0: DomainState, cfg: EvolutionConfig) -> Trajectory:
    window = well_posedness_window(op.n, cfg.p)
    if not window["inside"] and cfg.scheme != "linear-only":
        warnings.warn(f"(n, p) = ({op.n}, {cfg.p}) is {window['stamp']}", RuntimeWarning, stacklevel=2)
    traj = Trajectory(window=window)
    if cfg.scheme == "picard":
        return _evolve_picard(op, psi0, cfg, traj)
    step = _linear_step if cfg.scheme == "linear-only" else exp_midpoint_step
    exps = cfg.monitor_exponents()
    state = psi0
    threshold = None
    for n in range(cfg.steps + 1):
        if n % cfg.monitor_cadence == 0 or n == cfg.steps:
            rec = diagnostics.record(state, cfg, n * cfg.dt, exps)
            traj.times.append(n * cfg.dt)
            traj.states.append(state)
            traj.records.append(rec)
            if threshold is None:
                threshold = cfg.blowup_threshold or cfg.blowup_factor * rec.dnorm
            if not np.isfinite(rec.dnorm) or rec.dnorm > threshold:
                traj.termination = "blowup_suspected"
                traj.message = (
                    f"D-norm {rec.dnorm:.6g} crossed {threshold:.6g} at t = {n * cfg.dt:.6g}; "
                    "rerun at dt/2 and 2N before reading this as blow-up"
                )
                return traj
        if n == cfg.steps:
            break
        try:
            with np.errstate(over="raise", invalid="raise"):
                state = step(op, state, cfg)
        except (PoleError, SingularPivotError, FloatingPointError) as exc:
            traj.termination = "solver_error"
            traj.message = f"{type(exc).__name__} at t = {n * cfg.dt:.6g}: {exc}"
            return traj
    return traj


def _evolve_picard(op, psi0, cfg, traj):
    res = picard_solve(op, psi0, cfg.T, cfg.steps, cfg.picard_iterations, cfg)
    exps = cfg.monitor_exponents()
    for m, (t, st) in enumerate(zip(res.times, res.states)):
        if m % cfg.monitor_cadence == 0 or m == len(res.times) - 1:
            traj.times.append(t)
            traj.states.append(st)
            traj.records.append(diagnostics.record(st, cfg, t, exps))
    if res.status == "non_contraction":
        traj.message = "Picard iteration did not contract"
    return traj


# ---------------------------------------------------------------- Picard

@dataclass
class PicardResult:
    times: np.ndarray
    states: list
    ratios: dict
    increments: list
    status: str


def x_norm(grid, series, p, n, dt):
    """max(sup_t ||v||_2, (int ||v||_{p+1}^r dt)^{1/r}) on the time grid."""
    l2 = max(lp_norm(grid, v, 2) for v in series)
    lp = np.array([lp_norm(grid, v, p + 1) for v in series])
    r = strichartz_exponent(n, p)
    if math.isinf(r):
        acc = lp.max()
    else:
        vals = lp**r
        acc = (dt * (vals.sum() - 0.5 * (vals[0] + vals[-1]))) ** (1.0 / r)
    return max(l2, acc)


def picard_solve(op, psi0: DomainState, T: float, M: int, K: int, cfg: EvolutionConfig,
                 substeps: int | None = None) -> PicardResult:
    """Iterate v <- U psi0 - i Gamma F(v) on t_m = m T/M, m = 0..M.

    Gamma u = int_0^t U(t - s) u(s) ds solves i y' = H y + i u, y(0) = 0;
    each interval is advanced by Crank-Nicolson with u replaced by the
    trapezoid average (u(t_m) + u(t_{m+1}))/2.
    ratios[k] = ||v^k - v^{k-1}||_X / ||v^{k-1} - v^{k-2}||_X for k = 2..K.
    Iteration stops early, with status "converged", once an increment
    reaches rounding level relative to the iterate.
    """
    if M < 1 or K < 1:
        raise ValueError("need M >= 1 time steps and K >= 1 iterations")
    dt = T / M
    m_sub = substeps if substeps is not None else max(cfg.cn_substeps, math.ceil(dt / 1e-2 - 1e-12))
    times = np.linspace(0.0, T, M + 1)
    free = [psi0]
    for _ in range(M):
        free.append(u_apply(op, free[-1], dt, m_sub))
    iterate = free
    prev_vals = [synthesize(s) for s in iterate]
    increments, ratios = [], {}
    status = "contracting"
    for k in range(1, K + 1):
        force = [nonlinearity(v, cfg.p, cfg.sign, cfg.nonlinear_weight) for v in prev_vals]
        gamma = [from_values(op, np.zeros(op.grid.N))]
        for m in range(M):
            avg = 0.5j * (force[m] + force[m + 1])
            gamma.append(cn_forced(op, gamma[-1], dt, m_sub, avg))
        iterate = [f - 1j * g for f, g in zip(free, gamma)]
        vals = [synthesize(s) for s in iterate]
        inc = x_norm(op.grid, [a - b for a, b in zip(vals, prev_vals)], cfg.p, op.n, dt)
        increments.append(inc)
        prev_vals = vals
        # below this the increments are rounding noise and ratios mean nothing
        if inc <= _ROUNDOFF * x_norm(op.grid, vals, cfg.p, op.n, dt):
            status = "converged"
            break
        if k >= 2:
            ratios[k] = inc / increments[-2]
            if ratios[k] >= 1:
                status = "non_contraction"
    return PicardResult(times, iterate, ratios, increments, status)
