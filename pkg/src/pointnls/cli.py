"""Command-line front end: ``pointnls {spectrum,evolve,picard,decay,inequalities}``.

Configuration is an INI file with the sections below; every key has a
default, so an empty file is a valid run. ``--override section.key=value``
may be repeated and is applied after the file. The whole configuration is
parsed and validated before any computation or file output.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import diagnostics, evolution
from .fractional import inequality_report
from .point_interaction import (
    PointInteractionOp,
    gaussian_state,
    green_state,
    h_apply,
    krein_resolvent_apply,
    lambda_coeff,
    synthesize,
)
from .radial_core import lp_norm, make_grid

COMMANDS = ("spectrum", "evolve", "picard", "decay", "inequalities")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- parsing

def _opt_float(text):
    return None if text.strip() in ("", "none", "auto") else float(text)


def _float_list(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _sign(text):
    low = text.strip().lower()
    table = {"defocusing": 1, "+1": 1, "1": 1, "+": 1, "focusing": -1, "-1": -1, "-": -1}
    if low not in table:
        raise ValueError(f"sign must be focusing or defocusing, got {text!r}")
    return table[low]


def _choice(*options):
    def parse(text):
        if text.strip() not in options:
            raise ValueError(f"expected one of {options}, got {text!r}")
        return text.strip()
    return parse


def _charges(text):
    out = []
    for tok in text.replace(",", " ").split():
        out.append(None if tok == "bc" else float(tok))
    return tuple(out)


SCHEMA = {
    "run": {
        "n": (int, "3"),
        "alpha": (float, "1.0"),
        "R": (float, "40"),
        "N": (int, "4096"),
        "grading": (float, "2.0"),
        "gauge": (_opt_float, ""),
        "tol_bc": (float, "1e-6"),
    },
    "datum": {
        "family": (_choice("gaussian", "bound", "green"), "gaussian"),
        "amplitude": (float, "1.0"),
        "width": (float, "1.0"),
        "charge": (_opt_float, ""),
        "raw_charge": (_opt_float, ""),
        "mu": (float, "1.0"),
        "dnorm": (_opt_float, ""),
    },
    "evolution": {
        "p": (float, "2.0"),
        "sign": (_sign, "defocusing"),
        "dt": (float, "1e-3"),
        "T": (float, "1.0"),
        "scheme": (_choice(*evolution.SCHEMES), "exp-midpoint"),
        "monitor_cadence": (int, "10"),
        "blowup_threshold": (_opt_float, ""),
        "blowup_factor": (float, "1e6"),
        "cn_substeps": (int, "1"),
        "lp_exponents": (_float_list, ""),
    },
    "picard": {
        "M": (int, "64"),
        "K": (int, "5"),
        "substeps": (_opt_float, ""),
        "midpoint_steps": (_float_list, "4 8 16"),
    },
    "decay": {
        "sigma": (_float_list, "inf 2"),
        "t_start": (float, "1.0"),
        "t_end": (float, "6.0"),
        "count": (int, "26"),
        "max_step": (float, "1e-2"),
        "project": (_bool, "true"),
    },
    "inequalities": {
        "targets": (_float_list, ""),
        "widths": (_float_list, "0.5 0.75 1 1.5 2"),
        "charges": (_charges, "bc 0 0.5 -0.5"),
        "embedding": (_bool, "true"),
    },
    "spectrum": {
        "lambdas": (_float_list, "1 2 4 8 16"),
        "eigen_tol": (float, "1e-2"),
        "resolvent_tol": (float, "1e-3"),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Typed view of the parsed INI file plus the resolved text."""

    values: dict
    text: dict

    def __getitem__(self, section):
        return self.values[section]


def load_config(path=None, overrides=()) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_dict({sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()})
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        if section not in SCHEMA:
            raise ConfigError(f"unknown section {section!r}")
        parser.set(section, name, value.strip())
    values, text = {}, {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        values[section], text[section] = {}, {}
        for name, raw in parser.items(section):
            if name not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{name}")
            try:
                values[section][name] = SCHEMA[section][name][0](raw)
            except ValueError as exc:
                raise ConfigError(f"{section}.{name}: {exc}") from exc
            text[section][name] = raw
    cfg = RunConfig(values, text)
    _validate(cfg)
    return cfg


def _validate(cfg):
    run = cfg["run"]
    if run["n"] not in (2, 3):
        raise ConfigError("run.n must be 2 or 3")
    if run["N"] < 16 or run["R"] <= 0 or run["grading"] < 1:
        raise ConfigError("grid needs N >= 16, R > 0 and grading >= 1")
    try:
        evolution_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    pic = cfg["picard"]
    if pic["M"] < 1 or pic["K"] < 1:
        raise ConfigError("picard.M and picard.K must be >= 1")
    dec = cfg["decay"]
    if not 0 < dec["t_start"] < dec["t_end"] or dec["count"] < 2:
        raise ConfigError("decay needs 0 < t_start < t_end and count >= 2")
    if any(s < 1 for s in dec["sigma"]):
        raise ConfigError("decay.sigma entries must be >= 1")


def evolution_config(cfg) -> evolution.EvolutionConfig:
    e = cfg["evolution"]
    return evolution.EvolutionConfig(
        p=e["p"], sign=e["sign"], dt=e["dt"], T=e["T"], scheme=e["scheme"],
        monitor_cadence=e["monitor_cadence"], blowup_threshold=e["blowup_threshold"],
        blowup_factor=e["blowup_factor"], cn_substeps=e["cn_substeps"],
        lp_exponents=e["lp_exponents"],
    )


def build_operator(cfg) -> PointInteractionOp:
    run = cfg["run"]
    grid = make_grid(run["n"], run["R"], run["N"], run["grading"])
    return PointInteractionOp(grid, run["alpha"], gauge=run["gauge"], tol_bc=run["tol_bc"])


def build_datum(op, cfg):
    d = cfg["datum"]
    if d["family"] == "bound":
        state = op.bound_domain_state()
        if state is None:
            raise ConfigError("datum.family = bound but this operator has no bound state")
        state = d["amplitude"] * state
    elif d["family"] == "green":
        state = green_state(op, d["mu"], d["amplitude"])
    else:
        state = gaussian_state(op, d["amplitude"], d["width"], charge=d["charge"], raw_charge=d["raw_charge"])
    if d["dnorm"] is not None:
        state = (d["dnorm"] / diagnostics.dnorm(state)) * state
    return state


# ---------------------------------------------------------------- output

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def _json_ready(x):
    if isinstance(x, dict):
        return {str(k): _json_ready(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_ready(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        # 17 significant digits; non-finite values as strings keep the JSON valid
        return float(format(x, ".17g")) if math.isfinite(x) else str(x)
    if isinstance(x, complex):
        return [_json_ready(x.real), _json_ready(x.imag)]
    return x


class Writer:
    """Collects outputs in memory; nothing touches disk until ``flush``."""

    def __init__(self, out_dir, cfg, window):
        self.out = Path(out_dir)
        self.cfg = cfg
        self.window = window
        self.files = {}

    def _preamble(self):
        lines = [f"# window: {self.window['stamp']}"]
        for section, items in self.cfg.text.items():
            lines.extend(f"# config: {section}.{k} = {v}" for k, v in items.items())
        return "\n".join(lines) + "\n"

    def csv(self, name, header, rows):
        buf = io.StringIO()
        buf.write(self._preamble())
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
        self.files[name] = buf.getvalue()

    def json(self, name, payload):
        body = {"window": self.window, "config": self.cfg.text, **payload}
        self.files[name] = json.dumps(_json_ready(body), indent=2, sort_keys=True) + "\n"

    def flush(self):
        self.out.mkdir(parents=True, exist_ok=True)
        for name, content in self.files.items():
            (self.out / name).write_text(content, encoding="utf-8")
        return sorted(self.files)


def _trajectory_rows(traj):
    exps = sorted(traj.records[0].lp_norms) if traj.records else []
    header = ["t", "mass", "energy", "dnorm", "dhalf", "bc_residual", "re_q", "im_q"]
    header += [f"l{_fmt(q)}_norm" for q in exps]
    rows = [
        [r.t, r.mass, r.energy, r.dnorm, r.dhalf, r.bc_residual, r.charge.real, r.charge.imag]
        + [r.lp_norms[q] for q in exps]
        for r in traj.records
    ]
    return header, rows


def _trajectory_summary(traj, cfg):
    recs = traj.records
    out = {
        "termination": traj.termination,
        "message": traj.message,
        "monitors": len(recs),
        "final_time": recs[-1].t if recs else 0.0,
    }
    if recs:
        dn = np.array([r.dnorm for r in recs])
        out.update(
            mass_drift=diagnostics.drift(traj, "mass"),
            energy_drift=diagnostics.drift(traj, "energy"),
            dnorm_growth=float(dn.max() / dn[0]) if dn[0] > 0 else 0.0,
            max_bc_residual=max(r.bc_residual for r in recs),
            charge_jump_ratio=diagnostics.charge_jump_ratio(traj),
        )
        if cfg["evolution"]["p"] > 1:
            out["energy_bound_ratio"] = diagnostics.energy_bound_ratio(traj, cfg["evolution"]["p"])
    return out


# ---------------------------------------------------------------- commands

def cmd_spectrum(cfg, writer):
    op = build_operator(cfg)
    sp = cfg["spectrum"]
    rows = []
    for lam in sp["lambdas"]:
        try:
            rows.append([lam, lambda_coeff(op.n, op.alpha, lam).real, op.boundary_coeff(lam).real])
        except (ValueError, ArithmeticError):
            rows.append([lam, math.nan, math.nan])
    report = {"energy": op.energy, "gauge": op.gauge, "bound_state": op.has_bound_state}
    ok = True
    if op.has_bound_state:
        bound = op.bound_domain_state()
        psi = synthesize(bound)
        norm = lp_norm(op.grid, psi, 2)
        eig = lp_norm(op.grid, h_apply(bound) - op.energy * psi, 2) / norm
        lam = op.gauge
        res = krein_resolvent_apply(op, psi, lam)
        ident = lp_norm(op.grid, synthesize(res) - psi / (op.energy + lam), 2) * abs(op.energy + lam) / norm
        report.update(
            norm2=norm**2,
            norm2_closed_form=op.bound_norm2,
            eigen_residual=eig,
            resolvent_identity=ident,
        )
        ok = eig <= sp["eigen_tol"] and ident <= sp["resolvent_tol"]
        print(f"E_alpha = {_fmt(op.energy)}  ||psi_alpha||^2 = {_fmt(norm**2)} (closed form {_fmt(op.bound_norm2)})")
        print(f"eigen residual {eig:.3e}  resolvent identity {ident:.3e}")
    else:
        print("no bound state")
    report["invariants_ok"] = ok
    writer.csv("spectrum.csv", ["lambda", "Lambda", "Lambda_discrete"], rows)
    writer.json("summary.json", report)
    return 0 if ok else 1


def cmd_evolve(cfg, writer):
    op = build_operator(cfg)
    psi0 = build_datum(op, cfg)
    traj = evolution.evolve(op, psi0, evolution_config(cfg))
    header, rows = _trajectory_rows(traj)
    writer.csv("trajectory.csv", header, rows)
    writer.json("summary.json", _trajectory_summary(traj, cfg))
    print(f"termination: {traj.termination}")
    return 0 if traj.termination == "completed" else 3


def cmd_picard(cfg, writer):
    op = build_operator(cfg)
    psi0 = build_datum(op, cfg)
    ecfg = evolution_config(cfg)
    pic = cfg["picard"]
    T, M = ecfg.T, pic["M"]
    sub = None if pic["substeps"] is None else int(pic["substeps"])
    res = evolution.picard_solve(op, psi0, T, M, pic["K"], ecfg, substeps=sub)
    m_sub = sub if sub is not None else max(ecfg.cn_substeps, math.ceil(T / M / 1e-2 - 1e-12))
    ref = synthesize(res.states[-1])
    rows = [[k, res.ratios.get(k, math.nan), inc] for k, inc in enumerate(res.increments, start=1)]
    writer.csv("ratios.csv", ["k", "ratio", "increment"], rows)
    disc = []
    for steps in pic["midpoint_steps"]:
        steps = int(steps)
        # same Crank-Nicolson substep length as the Picard reference
        per_half = M * m_sub / (2 * steps)
        if per_half < 1 or per_half != int(per_half):
            raise ConfigError(f"midpoint_steps {steps} does not divide the Picard substep grid")
        mcfg = evolution.EvolutionConfig(
            p=ecfg.p, sign=ecfg.sign, dt=T / steps, T=T, scheme="exp-midpoint",
            monitor_cadence=steps, cn_substeps=int(per_half), blowup_factor=ecfg.blowup_factor,
        )
        traj = evolution.evolve(op, psi0, mcfg)
        err = lp_norm(op.grid, synthesize(traj.states[-1]) - ref, 2)
        disc.append({"steps": steps, "dt": T / steps, "l2_discrepancy": err})
    for a, b in zip(disc, disc[1:]):
        b["ratio_to_previous"] = a["l2_discrepancy"] / b["l2_discrepancy"] if b["l2_discrepancy"] > 0 else math.inf
    writer.json("summary.json", {
        "status": res.status,
        "ratios": {str(k): v for k, v in res.ratios.items()},
        "increments": res.increments,
        "substeps": m_sub,
        "midpoint_discrepancy": disc,
    })
    print(f"picard status: {res.status}")
    return 0


def cmd_decay(cfg, writer):
    op = build_operator(cfg)
    psi0 = build_datum(op, cfg)
    dec = cfg["decay"]
    times = np.geomspace(dec["t_start"], dec["t_end"], dec["count"])
    fits = {}
    for sigma in dec["sigma"]:
        fits[sigma] = diagnostics.decay_fit(op, synthesize(psi0), sigma, times, dec["max_step"], dec["project"])
    sigmas = list(fits)
    header = ["t"] + [f"norm_sigma_{_fmt(s)}" for s in sigmas] + ["re_q", "im_q"]
    first = fits[sigmas[0]]
    rows = [[t] + [fits[s].norms[i] for s in sigmas] + [first.charges[i].real, first.charges[i].imag]
            for i, t in enumerate(times)]
    writer.csv("decay.csv", header, rows)
    writer.json("summary.json", {
        "fits": [{"sigma": s, "beta": f.beta, "target": f.target, "stable_window": f.stable} for s, f in fits.items()],
    })
    for s, f in fits.items():
        print(f"sigma = {_fmt(s)}: beta = {f.beta:.4f} (target {f.target:.4f})")
    return 0


def cmd_inequalities(cfg, writer):
    op = build_operator(cfg)
    ineq = cfg["inequalities"]
    p = cfg["evolution"]["p"]
    targets = ineq["targets"] or ((2.5,) if op.n == 3 else (4.0,))
    rows = []
    keys = ["q", "s", "lq", "l2", "dhalf", "gn_ratio", "dfrac", "embed_ratio"]
    for w in ineq["widths"]:
        for c in ineq["charges"]:
            state = gaussian_state(op, 1.0, w, charge=c)
            for row in inequality_report(state, p, targets, ineq["embedding"]):
                rows.append([w, "bc" if c is None else c] + [row.get(k, math.nan) for k in keys])
    writer.csv("ratios.csv", ["width", "charge"] + keys, rows)
    gn = [r[7] for r in rows]
    em = [r[9] for r in rows] if ineq["embedding"] else []
    writer.json("summary.json", {
        "states": len(ineq["widths"]) * len(ineq["charges"]),
        "max_gn_ratio": max(gn),
        "max_embed_ratio": max(em) if em else None,
        "all_finite": bool(np.all(np.isfinite(gn + em))),
    })
    print(f"max GN ratio {max(gn):.6g}")
    return 0


HANDLERS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "picard": cmd_picard,
    "decay": cmd_decay,
    "inequalities": cmd_inequalities,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="pointnls", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", metavar="PATH", help="INI configuration file")
    ap.add_argument("--out", metavar="DIR", default=".", help="output directory (default: current)")
    ap.add_argument("--override", metavar="KEY=VALUE", action="append", default=[],
                    help="section.key=value, applied after the file; repeatable")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.override)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    p = cfg["evolution"]["p"]
    window = evolution.well_posedness_window(cfg["run"]["n"], p)
    writer = Writer(args.out, cfg, window)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            code = HANDLERS[args.command](cfg, writer)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for name in writer.flush():
        print(f"wrote {Path(args.out) / name}")
    return code


if __name__ == "__main__":
    sys.exit(main())
