"""
Command-line entry point: ``python3 -m singscat {solve,sweep,verify,oracle}``.

Runs are configured by a flat ``key = value`` file (``--config``) with
command-line flags taking precedence.  Exit codes: 0 success, 2 bad
configuration, 3 numerical failure, 4 failed verification.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import asymptotics, localwave, oracle, potentials, series
from .errors import ParameterError, ScatteringError
from .localwave import Region
from .matching import (
    AngularTriad,
    MatchingSolution,
    lambda_triad,
    master_residual,
    matching_solution,
    solve_matching_radius,
    solve_stage,
)
from .potentials import CLASS_TAGS, PotentialClass

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class RunConfig:
    cls: str = "EEE"
    r0: float = 1.0
    r1: float = 1.0
    r2: float = 1.0
    sigma0: float = 5.0
    sigma2: float = 10.0
    k: float = 1.0
    l: int = 0
    R: float | None = None
    g2: float | None = None
    s: float | None = None
    cutoff: tuple = (2, 2)
    aux: tuple = (0.0, 1.0)
    t_far: float | None = None
    R_list: tuple = ()
    R_range: tuple = ()
    p_at: float = 0.5
    sweep_series: bool = True
    sweep_p_values: bool = True
    verify_cutoff: tuple = (30, 30)
    oracle_rtol: float = 1e-10
    oracle_atol: float = 1e-12
    oracle_start_log: float = 30.0
    oracle_r_max: float | None = None
    oracle_method: str = "DOP853"
    corrupt_triad: float = 0.0
    out: str | None = None
    format: str = "json"
    workers: int = 1

    def classes(self):
        if self.cls.upper() == "ALL":
            return list(CLASS_TAGS)
        return [c.strip().upper() for c in self.cls.split(",")]

    def potential(self, tag=None):
        return PotentialClass.from_tag(
            tag or self.classes()[0], r0=self.r0, r1=self.r1, r2=self.r2, sigma0=self.sigma0, sigma2=self.sigma2
        )

    def oracle_config(self):
        return oracle.OracleConfig(
            rtol=self.oracle_rtol, atol=self.oracle_atol, start_log=self.oracle_start_log,
            r_max=self.oracle_r_max, method=self.oracle_method,
        )

    def sweep_values(self):
        if self.R_list:
            vals = [float(x) for x in self.R_list]
        elif self.R_range:
            lo, hi, n = self.R_range
            vals = list(np.geomspace(float(lo), float(hi), int(n)))
        else:
            raise ConfigError("sweep needs R_list or R_range")
        if not vals:
            raise ConfigError("sweep list is empty")
        if any(b <= a for a, b in zip(vals[:-1], vals[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        return vals


# --------------------------------------------------------------------------
# parsing

_TUPLE_INT = {"cutoff", "verify_cutoff"}
_TUPLE_FLOAT = {"aux", "R_list", "R_range"}
_BOOL = {"sweep_series", "sweep_p_values"}
_ALIASES = {"class": "cls", "sweep": "R_list"}


def _convert(key, text):
    text = str(text).strip()
    kinds = {f.name: f.type for f in fields(RunConfig)}
    if key in _TUPLE_INT:
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 2:
            raise ConfigError(f"{key} needs two integers N,M")
        return tuple(int(p) for p in parts)
    if key in _TUPLE_FLOAT:
        sep = ":" if key == "R_range" and ":" in text else ","
        parts = [p for p in text.replace(" ", "").split(sep) if p]
        return tuple(float(p) for p in parts)
    if key in _BOOL:
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key} must be a boolean")
    if text.lower() in ("none", ""):
        return None
    kind = kinds[key]
    if kind.startswith("int"):
        return int(text)
    if kind.startswith("float"):
        return float(text)
    return text


def parse_config_text(text):
    """key = value lines; '#' starts a comment."""
    values = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, val = (x.strip() for x in line.split("=", 1))
        values[key] = val
    return values


def build_config(values):
    known = {f.name for f in fields(RunConfig)}
    kw = {}
    for key, val in values.items():
        key = _ALIASES.get(key, key)
        if key not in known:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            kw[key] = val if not isinstance(val, str) else _convert(key, val)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {val!r}") from exc
    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.R is not None and (cfg.g2 is not None or cfg.s is not None):
        raise ConfigError("give either R or (g2, s), not both")
    if (cfg.g2 is None) != (cfg.s is None):
        raise ConfigError("g2 and s must be given together")
    if not cfg.k > 0:
        raise ConfigError("k must be positive")
    if cfg.l < 0:
        raise ConfigError("l must be nonnegative")
    if cfg.format not in ("json", "csv"):
        raise ConfigError("format must be json or csv")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    if min(cfg.cutoff) < 0 or min(cfg.verify_cutoff) < 0:
        raise ConfigError("cutoff orders must be nonnegative")
    for tag in cfg.classes():
        cfg.potential(tag)  # raises ParameterError on bad laws or exponents
    if cfg.R_list or cfg.R_range:
        cfg.sweep_values()
    return cfg


def solution_for(cfg, tag=None, R=None):
    """MatchingSolution from R, or from (g2, s) with a consistency check."""
    cls = cfg.potential(tag)
    if R is None and cfg.s is not None:
        R = solve_matching_radius(cls, cfg.k, lambda_triad(cfg.l), cfg.s)
        g2 = potentials.coupling(cls, R)
        if not math.isclose(g2, cfg.g2, rel_tol=1e-6):
            raise ConfigError(
                f"g2={cfg.g2!r} is not on the Master surface for s={cfg.s!r}: coupling(R={R:.10g}) = {g2:.10g}"
            )
    if R is None:
        R = cfg.R if cfg.R is not None else 5.0
    sol = matching_solution(cls, cfg.k, cfg.l, R)
    if cfg.corrupt_triad:
        t = sol.triad
        sol = sol.with_triad(AngularTriad(t.l, t.lambda_eps_sq + cfg.corrupt_triad, t.lambda_tau_sq, t.lambda_sq))
    return sol


# --------------------------------------------------------------------------
# serialisation

CSV_UNITS = {
    "class": "", "R": "length", "s": "1", "g2": "length^-2", "P_eps": "1", "P_tau": "1",
    "delta_l": "rad", "branch": "1", "leading_vs_full_deviation": "1", "p_eps_exact": "1",
    "p_eps_asym": "1", "status": "", "t": "1", "r": "length", "u": "arb", "du": "arb/length",
}


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if v is None:
        return ""
    return str(v)


def write_csv(rows, columns, stream):
    """Header ``name[unit]``; numbers with 17 significant digits."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow([f"{c}[{CSV_UNITS.get(c, '')}]" for c in columns])
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])


def read_csv(stream):
    """Inverse of :func:`write_csv`: (columns, rows) with numbers parsed."""
    r = csv.reader(stream)
    header = next(r)
    columns = [h.split("[", 1)[0] for h in header]
    rows = []
    for rec in r:
        row = {}
        for c, v in zip(columns, rec):
            try:
                row[c] = float(v) if c not in ("class", "status") and v != "" else (v if v != "" else None)
            except ValueError:
                row[c] = v
        rows.append(row)
    return columns, rows


def dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text, cfg):
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_text(rows, columns):
    buf = io.StringIO()
    write_csv(rows, columns, buf)
    return buf.getvalue()


# --------------------------------------------------------------------------
# commands


def solve_record(cfg, sol=None):
    sol = sol or solution_for(cfg)
    res = series.solve_series(sol, cfg.cutoff, aux=cfg.aux, t_far=cfg.t_far, with_p_values=True)
    d = res.diagnostics
    return res, {
        "class": sol.cls.tag, "k": sol.k, "l": sol.l, "R": sol.R, "s": sol.s, "g2": sol.g2,
        "C_plus": res.coeffs.c_plus, "S_plus": res.coeffs.s_plus,
        "delta_l": res.phase_shift, "branch": res.branch,
        "P_eps": d["P_eps"], "P_tau": d["P_tau"],
        "term_norms": {"eps": d["eps_norms"], "tau": d["tau_norms"]},
        "residuals": {"match_value": d["match_value"], "match_slope": d["match_slope"],
                      "schrodinger": series.schrodinger_residual(res)},
        "cutoff": list(cfg.cutoff),
    }


def cmd_solve(cfg):
    res, rec = solve_record(cfg)
    if cfg.format == "csv":
        t, u, du = res.samples()
        rows = [{"t": a, "u": b, "du": c} for a, b, c in zip(t, u, du)]
        return _csv_text(rows, ["t", "u", "du"])
    return dump_json(rec)


SWEEP_COLUMNS = ["class", "R", "s", "g2", "P_eps", "P_tau", "delta_l", "leading_vs_full_deviation",
                 "p_eps_exact", "p_eps_asym", "status"]


def sweep_row(args):
    cfg, tag, R = args
    row = {"class": tag, "R": R}
    try:
        sol = solution_for(cfg, tag, R)
        row.update(s=sol.s, g2=sol.g2)
        row["p_eps_exact"] = float(localwave.discriminant(Region.EPS, sol, cfg.p_at))
        try:
            row["p_eps_asym"] = float(asymptotics.asymptotic_discriminant_eps(sol.cls, sol, cfg.p_at))
        except ScatteringError:
            row["p_eps_asym"] = None
        if cfg.sweep_p_values:
            row["P_eps"] = localwave.convergence_integral(Region.EPS, sol, 1.0)
            row["P_tau"] = localwave.convergence_integral(Region.TAU, sol, 50.0)
        if cfg.sweep_series:
            full = series.solve_series(sol, cfg.cutoff, aux=cfg.aux)
            row["delta_l"] = full.phase_shift
            row["leading_vs_full_deviation"] = series.leading_deviation(sol, cfg.cutoff, full=full)
        row["status"] = "ok"
    except (ScatteringError, ValueError) as exc:
        row["status"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return row


def cmd_sweep(cfg):
    jobs = [(cfg, tag, R) for tag in cfg.classes() for R in cfg.sweep_values()]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(sweep_row, jobs))
    else:
        rows = [sweep_row(j) for j in jobs]
    if cfg.format == "json":
        return dump_json({"columns": SWEEP_COLUMNS, "rows": rows})
    return _csv_text(rows, SWEEP_COLUMNS)


def cmd_oracle(cfg):
    sol = solution_for(cfg)
    delta, branch, osol = oracle.phase_shift_oracle(sol, cfg.oracle_config(), return_solution=True)
    if cfg.format == "csv":
        rows = [{"r": a, "u": b, "du": c} for a, b, c in osol.rows()]
        return _csv_text(rows, ["r", "u", "du"])
    return dump_json({
        "class": sol.cls.tag, "k": sol.k, "l": sol.l, "R": sol.R, "s": sol.s, "g2": sol.g2,
        "delta_l": delta, "branch": branch,
        "r_start": osol.r_start, "r_switch": osol.r_switch, "r_max": osol.r_max,
    })


def _wrapped_gap(a, b):
    d = (a - b) % math.pi
    return min(d, math.pi - d)


def verify_checks(cfg):
    """List of (name, passed, measured, expected, tolerance)."""
    out = []
    sol = solution_for(cfg)
    R, k = sol.R, sol.k
    target = 1.0 / (8 * R * R)
    for region in (Region.EPS, Region.TAU):
        v = localwave.k_squared(region, sol, 1.0)
        err = abs(v - target) / target
        out.append((f"matching_point_{region.value}", err <= 1e-12, v, target, 1e-12))
    tri = sol.triad
    gap = max(abs(tri.lambda_eps_sq - tri.lambda_sq - 0.125), abs(tri.lambda_sq - tri.lambda_tau_sq - 0.125))
    out.append(("triad_identities", gap <= 1e-15, gap, 0.0, 1e-15))
    clean = matching_solution(sol.cls, k, sol.l, R)
    R2 = solve_matching_radius(sol.cls, k, sol.triad, clean.s)
    s2 = solve_stage(sol.cls, k, sol.triad, R2)
    rt = abs(s2 - clean.s) / clean.s
    out.append(("master_round_trip", rt <= 1e-9, s2, clean.s, 1e-9))
    mres = abs(master_residual(sol.cls, k, sol.triad, R, clean.s)) / (k * R) ** 2
    out.append(("master_residual", mres <= 1e-12, mres, 0.0, 1e-12))
    ws = [series.wronskian_check(Region.EPS, sol, t=t) for t in (0.35, 0.5, 0.65, 0.8, 0.95)]
    werr = max(abs(w + 2 * k * R) / (2 * k * R) for w in ws)
    out.append(("wronskian_eps", werr <= 1e-8, ws[1], -2 * k * R, 1e-8))
    wt = series.wronskian_check(Region.TAU, sol, (1.0, 0.0) + tuple(cfg.aux), t=1.5)
    d_tau = 1.0 * cfg.aux[1] - 0.0 * cfg.aux[0]
    terr = abs(wt - k * R * d_tau) / abs(k * R * d_tau)
    out.append(("wronskian_tau", terr <= 1e-8, wt, k * R * d_tau, 1e-8))
    derr = derivative_check(sol)
    out.append(("derivative_cross_check", derr <= 1e-6, derr, 0.0, 1e-6))
    res = series.solve_series(clean, cfg.verify_cutoff, aux=cfg.aux)
    ref = series.solve_series(clean, cfg.verify_cutoff)
    inv = _wrapped_gap(res.phase_shift, ref.phase_shift)
    out.append(("aux_pair_invariance", inv <= 1e-10, res.phase_shift, ref.phase_shift, 1e-10))
    d_or, _ = oracle.phase_shift_oracle(clean, cfg.oracle_config())
    gap = _wrapped_gap(res.phase_shift, d_or)
    out.append(("oracle_vs_series", gap <= 1e-2, res.phase_shift, d_or, 1e-2))
    return out


def derivative_samples(sol, n=20):
    """n sample points split between the regions, away from underflow."""
    hi = max(localwave.shaped_range(sol), 1.05)
    return [(Region.EPS, t) for t in np.linspace(0.6, 0.98, n // 2)] + \
        [(Region.TAU, t) for t in np.linspace(1.02, hi, n - n // 2)]


def derivative_check(sol, n=20):
    """Largest relative gap of analytic K² derivatives to finite differences."""
    worst = 0.0
    for region, t in derivative_samples(sol, n):
        worst = max(worst, *localwave.derivative_cross_check(region, sol, t))
    return worst


def cmd_verify(cfg):
    checks = verify_checks(cfg)
    rows = [
        {"check": n, "passed": bool(p), "measured": float(m), "expected": float(e), "tolerance": float(t)}
        for n, p, m, e, t in checks
    ]
    text = dump_json({"checks": rows, "passed": all(r["passed"] for r in rows)})
    return text, all(r["passed"] for r in rows)


COMMANDS = ("solve", "sweep", "verify", "oracle")


def make_parser():
    ap = argparse.ArgumentParser(prog="python3 -m singscat", description=__doc__.split("\n\n")[0].strip())
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="flat key = value configuration file")
    ap.add_argument("--class", dest="cls", help="class tag such as EEE, a comma list, or 'all'")
    for name in ("r0", "r1", "r2", "sigma0", "sigma2", "k", "R", "g2", "s", "t_far"):
        ap.add_argument(f"--{name}")
    ap.add_argument("--l")
    ap.add_argument("--cutoff", help="N,M")
    ap.add_argument("--aux", help="C-,S- auxiliary pair")
    ap.add_argument("--sweep", dest="R_list", help="comma-separated R values")
    ap.add_argument("--R-range", dest="R_range", help="lo:hi:n geometric range")
    ap.add_argument("--out")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--workers")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="any configuration key")
    return ap


def _config_from_args(args):
    values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                values.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        values[key.strip()] = val.strip()
    for name in ("cls", "r0", "r1", "r2", "sigma0", "sigma2", "k", "l", "R", "g2", "s", "t_far",
                 "cutoff", "aux", "R_list", "R_range", "out", "format", "workers"):
        v = getattr(args, name)
        if v is not None:
            values[name] = v
    return build_config(values)


def _error(code, exc):
    obj = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    details = getattr(exc, "details", None)
    if details:
        obj["details"] = {k: repr(v) for k, v in details.items()}
    sys.stderr.write(dump_json(obj))
    return code


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except (ConfigError, ParameterError, ValueError) as exc:
        return _error(EXIT_CONFIG, exc)
    try:
        if args.command == "solve":
            _emit(cmd_solve(cfg), cfg)
        elif args.command == "sweep":
            _emit(cmd_sweep(cfg), cfg)
        elif args.command == "oracle":
            _emit(cmd_oracle(cfg), cfg)
        else:
            text, ok = cmd_verify(cfg)
            _emit(text, cfg)
            if not ok:
                return EXIT_VERIFY
    except ConfigError as exc:
        return _error(EXIT_CONFIG, exc)
    except (ScatteringError, ArithmeticError) as exc:
        return _error(EXIT_NUMERIC, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
