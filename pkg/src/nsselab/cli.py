"""Command-line experiments driven by INI configuration files.

    python -m nsselab simulate --config run.ini --out results/
    python -m nsselab compare  --config run.ini
    python -m nsselab criteria --config run.ini --enforce
    python -m nsselab steady   --config run.ini

Each command prints a text table and, with ``--out``, writes a JSON summary
holding the fully resolved configuration.  The exit status is 0 when every
enabled check passes, 1 when a check fails and 2 for configuration or
runtime errors.
"""

import argparse
import configparser
import csv
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import criteria, hilbert, lindblad, model
from .errors import (BlowUpError, ConfigError, NonUniqueSteadyStateError, NsseError,
                     OutOfScopeError)
from .girsanov import compare_estimators, normalize_and_weight, observable, weighted_expectation
from .nsse import simulate_nsse
from .sse_linear import simulate_linear
from .stationary import default_burn_in, time_average, windows_agree
from .trajectory import SolverConfig

__all__ = ["main", "load_config", "Config", "cmd_simulate", "cmd_compare", "cmd_criteria",
           "cmd_steady"]

_SECTIONS = ("model", "solver", "ensemble", "checks")

_MODEL_DEFAULTS = {
    "oscillator": {k: 0.0 for k in ("beta1", "beta2", "beta3", "alpha1", "alpha2", "alpha3",
                                     "alpha4", "alpha5", "alpha6")},
    "damped": {"omega": 1.0, "A": 1.0, "nu": 0.5},
    "two_photon": {"beta3": 0.0, "alpha4": 1.0, "alpha5": 0.0},
    "measurement": {"kappa": 1.0, "sigma": 1.0, "h_alpha": 1.0, "h_beta": 0.0},
}

_SOLVER_DEFAULTS = {
    "method": "nsse",
    "dt": 1e-3,
    "t_final": 1.0,
    "scheme": "euler_maruyama",
    "record_stride": 10,
    "renormalize": True,
}

_ENSEMBLE_DEFAULTS = {"n_traj": 100, "seed": 0, "initial": "0"}

_CHECKS_DEFAULTS = {
    "observables": "N Q proj0",
    "times": "",
    "slack": "",
    "p": 4,
    "burn_in": "",
    "windows": "",
    "kernel_tol": lindblad.KERNEL_RTOL,
}


class Config:
    """Parsed configuration with the source line of every key."""

    def __init__(self, path, sections, lines):
        self.path = str(path)
        self.sections = sections
        self.lines = lines

    def error(self, section, key, message):
        return ConfigError(f"[{section}] {key}: {message}", self.path,
                           self.lines.get((section, key)))

    def get(self, section, key, default, cast):
        raw = self.sections.get(section, {}).get(key)
        if raw is None or not raw.strip():
            return default
        try:
            return cast(raw)
        except (TypeError, ValueError) as exc:
            raise self.error(section, key, f"cannot read {raw!r} ({exc})") from None


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", str(path))
    text = path.read_text()
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"cannot parse config: {exc.message.splitlines()[0]}",
                          str(path), line) from None
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}", str(path),
                          getattr(exc, "lineno", None)) from None
    lines = {}
    section = None
    for i, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            lines[(section, m.group(1).strip())] = i
    for sec in parser.sections():
        if sec not in _SECTIONS:
            sec_line = next((i for i, raw in enumerate(text.splitlines(), 1)
                             if raw.strip() == f"[{sec}]"), None)
            raise ConfigError(f"unknown section [{sec}]", str(path), sec_line)
    sections = {sec: dict(parser[sec]) for sec in parser.sections()}
    if "model" not in sections:
        raise ConfigError("missing [model] section", str(path))
    return Config(path, sections, lines)


def _bool(raw):
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _floats(raw):
    return [float(v) for v in raw.replace(",", " ").split()]


def _windows(raw):
    out = []
    for item in raw.replace(",", " ").split():
        a, b = item.split(":")
        out.append((float(a), float(b)))
    return out


def _number(raw):
    c = complex(raw.replace(" ", ""))
    return c.real if c.imag == 0 else c


def resolve(cfg):
    """Fully expanded settings (defaults filled in) as plain Python values."""
    sec = cfg.sections.get("model", {})
    name = sec.get("name")
    if name is None:
        raise cfg.error("model", "name", "missing")
    if name not in _MODEL_DEFAULTS:
        raise cfg.error("model", "name", f"unknown preset {name!r}")
    dim = cfg.get("model", "dim", None, int)
    if dim is None:
        raise cfg.error("model", "dim", "missing")
    params = dict(_MODEL_DEFAULTS[name])
    for key in sec:
        if key in ("name", "dim"):
            continue
        if key not in params:
            raise cfg.error("model", key, f"not a parameter of {name!r}")
        params[key] = cfg.get("model", key, None, _number)
    solver = {
        "method": cfg.get("solver", "method", _SOLVER_DEFAULTS["method"], str.strip),
        "dt": cfg.get("solver", "dt", _SOLVER_DEFAULTS["dt"], float),
        "t_final": cfg.get("solver", "t_final", _SOLVER_DEFAULTS["t_final"], float),
        "scheme": cfg.get("solver", "scheme", _SOLVER_DEFAULTS["scheme"], str.strip),
        "record_stride": cfg.get("solver", "record_stride", _SOLVER_DEFAULTS["record_stride"], int),
        "renormalize": cfg.get("solver", "renormalize", _SOLVER_DEFAULTS["renormalize"], _bool),
    }
    if solver["method"] not in ("nsse", "linear"):
        raise cfg.error("solver", "method", "must be 'nsse' or 'linear'")
    ensemble = {
        "n_traj": cfg.get("ensemble", "n_traj", _ENSEMBLE_DEFAULTS["n_traj"], int),
        "seed": cfg.get("ensemble", "seed", _ENSEMBLE_DEFAULTS["seed"], int),
        "initial": [int(v) for v in cfg.get("ensemble", "initial", _ENSEMBLE_DEFAULTS["initial"],
                                            str).replace(",", " ").split()],
    }
    for j in ensemble["initial"]:
        if not 0 <= j < dim:
            raise cfg.error("ensemble", "initial", f"level {j} outside 0..{dim - 1}")
    checks = {
        "observables": cfg.get("checks", "observables", _CHECKS_DEFAULTS["observables"],
                               str).replace(",", " ").split(),
        "times": cfg.get("checks", "times", [], _floats),
        "slack": cfg.get("checks", "slack", 5.0 * solver["dt"], float),
        "p": cfg.get("checks", "p", _CHECKS_DEFAULTS["p"], int),
        "burn_in": cfg.get("checks", "burn_in", None, float),
        "windows": cfg.get("checks", "windows", [], _windows),
        "kernel_tol": cfg.get("checks", "kernel_tol", _CHECKS_DEFAULTS["kernel_tol"], float),
    }
    for name_ in checks["observables"]:
        if not re.fullmatch(r"N|N2|Q|P|proj\d+", name_):
            raise cfg.error("checks", "observables", f"unknown observable {name_!r}")
    try:
        m = model.preset(name, dim, **params)
        scfg = SolverConfig(dt=solver["dt"], t_final=solver["t_final"], scheme=solver["scheme"],
                            seed=ensemble["seed"], n_traj=ensemble["n_traj"],
                            record_stride=solver["record_stride"],
                            renormalize=solver["renormalize"])
    except (NsseError, ValueError) as exc:
        raise ConfigError(str(exc), cfg.path) from None
    if not checks["times"]:
        checks["times"] = [float(scfg.record_steps()[-1] * scfg.dt)]
    if checks["burn_in"] is None:
        checks["burn_in"] = min(default_burn_in(m), 0.5 * solver["t_final"])
    resolved = {
        "model": {"name": name, "dim": dim, **{k: _jsonable(v) for k, v in params.items()}},
        "solver": solver,
        "ensemble": ensemble,
        "checks": checks,
    }
    return resolved, m, scfg


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _initial_state(dim, levels):
    x = np.zeros(dim, dtype=complex)
    x[levels] = 1.0
    return x / np.linalg.norm(x)


def _observables(names, dim):
    a, ad, N = hilbert.ladder_ops(dim)
    Q, P = hilbert.quadratures(dim)
    ops = {}
    for name in names:
        if name == "N":
            ops[name] = N
        elif name == "N2":
            ops[name] = N @ N
        elif name == "Q":
            ops[name] = Q
        elif name == "P":
            ops[name] = P
        else:
            j = int(name[4:])
            if j >= dim:
                raise ConfigError(f"observable {name} outside the basis")
            ops[name] = hilbert.basis(dim, j)
    return {k: (observable(_projector(v)) if v.ndim == 1 else observable(v))
            for k, v in ops.items()}, ops


def _projector(e):
    return np.outer(e, e.conj())


def _op_matrix(op):
    return _projector(op) if np.ndim(op) == 1 else op.toarray()


def _run_ensemble(m, x0, scfg, method):
    if method == "linear":
        return normalize_and_weight(simulate_linear(m, x0, scfg))
    return simulate_nsse(m, x0, scfg)


def _write_traj_csv(ens, out):
    out.mkdir(parents=True, exist_ok=True)
    width = len(str(len(ens) - 1))
    for i in range(len(ens)):
        with open(out / f"traj_{i:0{width}d}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            header = ["t"]
            for j in range(ens.dim):
                header += [f"re{j}", f"im{j}"]
            w.writerow(header + ["norm", "weight"])
            for r, t in enumerate(ens.times):
                x = ens.states[i, r]
                row = [t]
                for v in x:
                    row += [v.real, v.imag]
                row += [math.sqrt(ens.sq_norm[i, r]), ens.weight[i]]
                w.writerow([f"{float(v):.17g}" for v in row])


def _emit(summary, out, name):
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(text)
    return text


def _table(rows, header):
    rows = [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in rows]
    return "\n".join(lines)


def _fmt(v):
    if isinstance(v, bool):
        return "pass" if v else "FAIL"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def cmd_simulate(cfg, out=None, traj_csv=False):
    resolved, m, scfg = resolve(cfg)
    x0 = _initial_state(m.dim, resolved["ensemble"]["initial"])
    ens = _run_ensemble(m, x0, scfg, resolved["solver"]["method"])
    fns, _ = _observables(resolved["checks"]["observables"], m.dim)
    obs = {}
    for name, f in fns.items():
        vals = [weighted_expectation(ens, f, t) for t in ens.times]
        obs[name] = {"mean": [v[0] for v in vals], "stderr": [v[1] for v in vals]}
    norms = np.linalg.norm(ens.states, axis=2)
    dev = float(np.max(np.abs(norms - 1.0)))
    checks = []
    if resolved["solver"]["method"] == "linear" or resolved["solver"]["renormalize"]:
        checks.append({"name": "unit_norm", "value": dev, "tol": 1e-12, "ok": dev <= 1e-12})
    failures = [c["name"] for c in checks if not c["ok"]]
    summary = {
        "command": "simulate",
        "config": resolved,
        "times": [float(t) for t in ens.times],
        "observables": obs,
        "norm_max_deviation": dev,
        "weight_mean": float(np.mean(ens.weight)),
        "checks": checks,
        "failures": failures,
    }
    if traj_csv:
        _write_traj_csv(ens, (out or Path(".")) / "trajectories")
    rows = []
    for name, d in obs.items():
        rows.append([name, d["mean"][-1], d["stderr"][-1]])
    report = f"t = {ens.times[-1]:g}, n_traj = {len(ens)}\n" + _table(rows, ["observable", "mean", "stderr"])
    report += "\n" + _table([[c["name"], c["value"], c["ok"]] for c in checks], ["check", "value", "status"])
    return summary, report


def cmd_compare(cfg, out=None, traj_csv=False):
    resolved, m, scfg = resolve(cfg)
    x0 = _initial_state(m.dim, resolved["ensemble"]["initial"])
    ck = resolved["checks"]
    slack = ck["slack"]
    checks = []
    rowsum = float(np.max(np.abs(m.G).sum(axis=1)))
    stab = scfg.dt * rowsum
    checks.append({"name": "dt_stability", "value": stab, "tol": 1.0, "ok": stab <= 1.0})
    try:
        direct = _run_ensemble(m, x0, scfg, "nsse")
        weighted = _run_ensemble(m, x0, scfg.replace(seed=scfg.seed + 1), "linear")
    except BlowUpError as exc:
        checks.append({"name": "blow_up", "value": str(exc), "ok": False})
        failures = [c["name"] for c in checks if not c["ok"]]
        summary = {"command": "compare", "config": resolved, "checks": checks,
                   "failures": failures}
        return summary, _table([[c["name"], c["value"], c["ok"]] for c in checks],
                               ["check", "value", "status"])
    fns, _ = _observables(ck["observables"], m.dim)
    table = compare_estimators(direct, weighted, fns, ck["times"], slack=slack)
    for name, t, a, sa, b, sb, diff, tol, ok in table.rows:
        checks.append({"name": f"estimators:{name}@{t:g}", "value": diff, "tol": tol, "ok": ok,
                       "direct": a, "weighted": b})
    rho = lindblad.pure_density(x0)
    t_prev = 0.0
    for t in sorted(ck["times"]):
        rho = lindblad.evolve_density(rho, m, t - t_prev, dt=min(scfg.dt, 1e-3)) if t > t_prev else rho
        t_prev = t
        for label, ens in (("direct", direct), ("weighted", weighted)):
            c = lindblad.compare_mc_density(ens, t, rho)
            tol = 3.0 * c.sigma + slack
            checks.append({"name": f"trace_distance:{label}@{t:g}", "value": c.trace_distance,
                           "tol": tol, "ok": bool(c.within(slack))})
    failures = [c["name"] for c in checks if not c["ok"]]
    summary = {"command": "compare", "config": resolved, "checks": checks, "failures": failures}
    rows = [[c["name"], c["value"], c["tol"], c["ok"]] for c in checks]
    return summary, _table(rows, ["check", "value", "tolerance", "status"])


def cmd_criteria(cfg, out=None, traj_csv=False, enforce=False):
    resolved, m, _ = resolve(cfg)
    if not isinstance(m.params, model.OscillatorParams):
        raise ConfigError("criteria are defined for oscillator-family models", cfg.path)
    p = resolved["checks"]["p"]
    if p < 4:
        raise OutOfScopeError(f"p must be at least 4, got {p}")
    rep = criteria.criteria_report(m.params, p=p, dim=m.dim)
    checks = []
    if enforce:
        for k, v in rep.predicates.items():
            checks.append({"name": k, "value": v, "ok": bool(v)})
    failures = [c["name"] for c in checks if not c["ok"]]
    summary = {
        "command": "criteria",
        "config": resolved,
        "p": p,
        "levels": [int(j) for j in rep.levels],
        "cj": [float(v) for v in rep.cj],
        "leading_slope": rep.leading_slope,
        "alpha": rep.alpha,
        "beta": rep.beta,
        "predicates": rep.predicates,
        "note": rep.note,
        "checks": checks,
        "failures": failures,
    }
    pick = sorted({int(j) for j in np.unique(np.geomspace(1, rep.levels[-1], 8).astype(int))})
    rows = [[j, rep.cj[j], rep.cj[j] / float(j) ** (2 * p + 1)] for j in pick]
    text = _table(rows, ["j", "c_j", f"c_j/j^{2 * p + 1}"])
    text += f"\nleading slope  {rep.leading_slope:.6g}"
    text += f"\nalpha, beta    {rep.alpha}, {rep.beta}"
    for k, v in rep.predicates.items():
        text += f"\n{k:<14} {v}"
    if rep.note:
        text += f"\nnote           {rep.note}"
    return summary, text


def cmd_steady(cfg, out=None, traj_csv=False):
    resolved, m, scfg = resolve(cfg)
    ck = resolved["checks"]
    summary = {"command": "steady", "config": resolved}
    try:
        rho = lindblad.steady_state(m, rtol=ck["kernel_tol"])
    except NonUniqueSteadyStateError as exc:
        summary.update(kernel_dim=exc.kernel_dim, checks=[],
                       failures=[f"non_unique_steady_state:kernel_dim={exc.kernel_dim}"])
        return summary, f"stationary kernel has dimension {exc.kernel_dim}; no unique steady state"
    x0 = _initial_state(m.dim, resolved["ensemble"]["initial"])
    ens = simulate_nsse(m, x0, scfg.replace(store_noise=False))
    fns, ops = _observables(ck["observables"], m.dim)
    checks = []
    for name, f in fns.items():
        ref = float(np.real(np.trace(_op_matrix(ops[name]) @ rho)))
        ta = time_average(ens, f, ck["burn_in"])
        diff = abs(ta.value - ref)
        checks.append({"name": f"time_average:{name}", "value": ta.value, "reference": ref,
                       "stderr": ta.stderr, "tol": 3.0 * ta.stderr, "ok": diff <= 3.0 * ta.stderr})
        if ck["windows"]:
            ok, rows = windows_agree(ens, f, ck["windows"])
            checks.append({"name": f"windows:{name}", "value": [r[2] for r in rows],
                           "stderr": [r[3] for r in rows], "ok": ok})
    failures = [c["name"] for c in checks if not c["ok"]]
    summary.update(kernel_dim=1, checks=checks, failures=failures,
                   steady_state_diagonal=[float(v) for v in np.real(np.diag(rho))])
    rows = [[c["name"], c.get("reference", ""), c["value"] if not isinstance(c["value"], list)
             else " ".join(f"{v:.4g}" for v in c["value"]), c["ok"]] for c in checks]
    return summary, _table(rows, ["check", "oracle", "estimate", "status"])


_COMMANDS = {"simulate": cmd_simulate, "compare": cmd_compare, "criteria": cmd_criteria,
             "steady": cmd_steady}


def build_parser():
    ap = argparse.ArgumentParser(prog="nsselab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI experiment file")
        p.add_argument("--out", type=Path, default=None, help="directory for the JSON summary")
        p.add_argument("--traj-csv", action="store_true", help="write one CSV per trajectory")
        p.add_argument("--enforce", action="store_true",
                       help="criteria: fail when a parameter predicate is false")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        kw = {"out": args.out, "traj_csv": args.traj_csv}
        if args.command == "criteria":
            kw["enforce"] = args.enforce
        summary, report = _COMMANDS[args.command](cfg, **kw)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NsseError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    text = _emit(summary, args.out, args.command)
    print(report)
    if args.out is None:
        print(text, end="")
    for f in summary["failures"]:
        print(f"FAIL {f}", file=sys.stderr)
    return 1 if summary["failures"] else 0


if __name__ == "__main__":
    sys.exit(main())
