"""Command-line front end: deterministic experiment runs with CSV output.

Subcommands
-----------
gheat solve      solve the nonlinear heat equation, dump the field as CSV
stein identity   the 12-case integral-identity suite
stein bound      seeded randomized remainder-bound suite
stein classical  classical Stein-equation residual (collapsed band)
clt rate         i.i.d. convergence-rate experiment with bound checks
clt noniid       non-identically-distributed rate experiment
reg estimate     empirical interior-regularity scan

Common flags: --config PATH (key = value file), --out DIR, --threads N,
--seed S, and repeatable --set key=value overrides.  Unknown config keys
are errors.  CSV outputs are byte-identical for identical configs and
seeds at any parallelism degree: worker pools only parallelize pure
per-cell computations and assembly order is fixed.

Exit codes: 0 all budgeted checks pass, 1 some check failed, 2 invalid
configuration, 3 computation rejected (unstable grid, degenerate inputs,
no stable exponent, enumeration budget).
"""

from __future__ import annotations

import argparse
import math
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .clt import (
    DomainBudgetError,
    EnumerationBudgetError,
    IidSpec,
    MixedBetaError,
    default_lipschitz_family,
    interpolation_trace,
    noniid_experiment,
    rate_experiment,
)
from .functions import abs_value, affine, cosine, ramp, smoothed_hat, smoothed_ramp
from .gheat import (
    GCoeff,
    NoStableExponentError,
    OutsideGridError,
    SpaceTimeGrid,
    UnstableGridError,
    estimate_regularity,
    field_to_csv,
    make_grid,
    solve_gheat,
)
from .measures import DegenerateVarianceError, parse_sets, variance_bounds
from .stein import (
    CenteringError,
    QuadSpec,
    classical_stein_residual,
    one_sided_derivative_check,
    stein_bound,
    stein_identity,
)
from .suites import (
    classical_rademacher,
    geometric_noniid,
    identity_suite_functions,
    identity_suite_sets,
    rademacher_pair,
    random_smooth_c2,
    random_uncertainty_set,
    regularity_phi_suite,
    two_scale_rademacher,
)

__all__ = ["main", "ConfigError", "DEFAULTS"]


class ConfigError(ValueError):
    """Invalid or unknown configuration."""


DEFAULTS: dict[str, str] = {
    "seed": "42",
    "threads": "1",
    "sigma_bar": "1.0",
    "sigma_under": "0.5",
    "grid.xmin": "-8.0",
    "grid.xmax": "8.0",
    "grid.dx": "0.01",
    "grid.dt": "auto",
    "grid.T": "1.0",
    "phi": "cos",
    "scenario": "two_scale",
    "measures.file": "",
    "quad.eps": "1e-4",
    "quad.levels": "12",
    "quad.points": "16",
    "reg.alpha_grid": "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
    "reg.t_grid": "geom:0.01:1.0:10",
    "reg.dx": "0.01",
    "reg.window": "1.0",
    "reg.halfwidth": "3.0",
    "clt.n_list": "1,2,4,8,16,32,64,128,256",
    "clt.dx": "0.005",
    "clt.budget_atol": "1e-9",
    "clt.trace_n": "16",
    "stein.dx": "0.02",
    "stein.budget_rtol": "1e-2",
    "stein.cases": "500",
    "stein.bound_atol": "1e-9",
    "stein.selftest": "false",
    "classical.sigma": "1.0",
    "classical.dx": "0.005",
    "classical.probes": "-3.0:3.0:25",
    "classical.tol": "1e-3",
    "noniid.ratio": "1.2",
    "noniid.n": "8",
    "noniid.beta": "2.0",
    "noniid.dx": "0.01",
}

_PHI_CATALOG = {
    "cos": lambda: cosine(),
    "ramp": lambda: ramp(0.0),
    "smoothed_ramp": lambda: smoothed_ramp(0.0, 0.3),
    "hat": lambda: smoothed_hat(0.0, 1.5, 0.3),
    "abs": lambda: abs_value(0.0),
    "affine": lambda: affine(0.5, 0.25),
}

_SCENARIOS = {
    "two_scale": two_scale_rademacher,
    "classical": classical_rademacher,
    "pair12": rademacher_pair,
}

_REJECTIONS = (UnstableGridError, OutsideGridError, DegenerateVarianceError,
               CenteringError, NoStableExponentError, EnumerationBudgetError,
               DomainBudgetError, MixedBetaError)


# -- configuration -----------------------------------------------------------

def load_config(path: str | None, overrides: list[str],
                threads: int | None, seed: int | None) -> dict[str, str]:
    cfg = dict(DEFAULTS)

    def apply(key: str, value: str, origin: str):
        key = key.strip()
        if key not in cfg:
            raise ConfigError(f"unknown config key {key!r} ({origin})")
        cfg[key] = value.strip()

    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
        for ln, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected 'key = value'")
            key, value = line.split("=", 1)
            apply(key, value, f"{path}:{ln}")
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        apply(key, value, "--set")
    if threads is not None:
        cfg["threads"] = str(threads)
    if seed is not None:
        cfg["seed"] = str(seed)
    return cfg


def _float(cfg, key, lo=None, hi=None, lo_open=False) -> float:
    try:
        v = float(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key} must be a number, got {cfg[key]!r}") from exc
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(f"{key} = {v} below valid range")
    if hi is not None and v > hi:
        raise ConfigError(f"{key} = {v} above valid range")
    return v


def _int(cfg, key, lo=None) -> int:
    try:
        v = int(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key} must be an integer, got {cfg[key]!r}") from exc
    if lo is not None and v < lo:
        raise ConfigError(f"{key} = {v} below valid range")
    return v


def _bool(cfg, key) -> bool:
    raw = cfg[key].lower()
    if raw in ("true", "1", "yes"):
        return True
    if raw in ("false", "0", "no"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {cfg[key]!r}")


def _float_list(cfg, key) -> list[float]:
    raw = cfg[key]
    if raw.startswith("geom:"):
        try:
            a, b, k = raw[5:].split(":")
            return list(np.geomspace(float(a), float(b), int(k)))
        except ValueError as exc:
            raise ConfigError(f"{key}: expected geom:start:stop:count") from exc
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"{key} must be a comma list of numbers") from exc


def _int_list(cfg, key) -> list[int]:
    try:
        return [int(tok) for tok in cfg[key].split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"{key} must be a comma list of integers") from exc


def _linspace(cfg, key) -> np.ndarray:
    try:
        a, b, k = cfg[key].split(":")
        return np.linspace(float(a), float(b), int(k))
    except ValueError as exc:
        raise ConfigError(f"{key}: expected start:stop:count") from exc


def _coeff(cfg) -> GCoeff:
    bar = _float(cfg, "sigma_bar", lo=0.0, lo_open=True)
    under = _float(cfg, "sigma_under", lo=0.0, lo_open=True)
    if under > bar:
        raise ConfigError("sigma_under must not exceed sigma_bar")
    return GCoeff(sigma_bar=bar, sigma_under=under)


def _phi(cfg):
    name = cfg["phi"]
    if name not in _PHI_CATALOG:
        raise ConfigError(f"phi must be one of {sorted(_PHI_CATALOG)}, got {name!r}")
    return _PHI_CATALOG[name]()


def _scenario(cfg):
    if cfg["measures.file"]:
        try:
            sets = parse_sets(Path(cfg["measures.file"]).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"measures.file: {exc}") from exc
        if len(sets) != 1:
            raise ConfigError("measures.file must contain exactly one uncertainty set")
        return sets[0]
    name = cfg["scenario"]
    if name not in _SCENARIOS:
        raise ConfigError(f"scenario must be one of {sorted(_SCENARIOS)}, got {name!r}")
    return _SCENARIOS[name]()


def _grid(cfg, coeff) -> SpaceTimeGrid:
    xmin = _float(cfg, "grid.xmin")
    xmax = _float(cfg, "grid.xmax")
    dx = _float(cfg, "grid.dx", lo=0.0, lo_open=True)
    t_final = _float(cfg, "grid.T", lo=0.0, lo_open=True)
    if cfg["grid.dt"] == "auto":
        try:
            grid = SpaceTimeGrid.from_bounds(xmin, xmax, dx, t_final, coeff)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    else:
        dt = _float(cfg, "grid.dt", lo=0.0, lo_open=True)
        nx = int(round((xmax - xmin) / dx)) + 1
        try:
            grid = SpaceTimeGrid(x_min=xmin, x_max=xmax, nx=nx, t_final=t_final, dt=dt)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    ratio = grid.cfl_ratio(coeff)
    if ratio > 0.5 + 1e-12:
        raise ConfigError(f"unstable grid: sigma_bar^2*dt/dx^2 = {ratio:.6g} > 0.5")
    return grid


def _quad(cfg) -> QuadSpec:
    try:
        return QuadSpec(eps=_float(cfg, "quad.eps", lo=0.0, lo_open=True),
                        levels=_int(cfg, "quad.levels", lo=1),
                        points=_int(cfg, "quad.points", lo=1))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _executor(cfg):
    threads = _int(cfg, "threads", lo=1)
    # compute-bound numpy cells: oversubscribing physical cores only adds
    # GIL contention, and results are scheduling-independent anyway
    workers = min(threads, os.cpu_count() or 1)
    return ThreadPoolExecutor(max_workers=workers) if workers > 1 else None


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_")


def _write_summary(out: Path, entries: dict) -> None:
    with (out / "run.summary").open("w", encoding="utf-8") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={value}\n")


def _reg_from_cfg(cfg, coeff):
    return estimate_regularity(
        coeff, regularity_phi_suite(),
        alpha_grid=_float_list(cfg, "reg.alpha_grid"),
        t_grid=_float_list(cfg, "reg.t_grid"),
        dx=_float(cfg, "reg.dx", lo=0.0, lo_open=True),
        window_radius=_float(cfg, "reg.window", lo=0.0, lo_open=True),
        est_halfwidth=_float(cfg, "reg.halfwidth", lo=0.0, lo_open=True))


# -- commands ----------------------------------------------------------------

def cmd_gheat_solve(cfg, out: Path):
    coeff = _coeff(cfg)
    grid = _grid(cfg, coeff)
    phi = _phi(cfg)
    if phi.lipschitz is None:
        raise ConfigError(f"datum {cfg['phi']!r} has no Lipschitz constant")
    t0 = time.perf_counter()
    field = solve_gheat(coeff, phi, grid)
    u01 = field.eval(0.0, min(1.0, grid.t_final))
    with (out / "field.csv").open("w", encoding="utf-8") as fh:
        field_to_csv(field, fh)
    return 0, {
        "u01": f"{u01:.17g}",
        "nx": grid.nx, "dx": f"{grid.dx:.17g}", "dt": f"{grid.dt:.17g}",
        "steps": grid.n_steps, "solve_seconds": f"{time.perf_counter() - t0:.3f}",
    }


def cmd_stein_identity(cfg, out: Path):
    dx = _float(cfg, "stein.dx", lo=0.0, lo_open=True)
    rtol = _float(cfg, "stein.budget_rtol", lo=0.0, lo_open=True)
    quad = _quad(cfg)
    cases = [(set_name, theta, coeff, phi)
             for set_name, theta, coeff in identity_suite_sets()
             for phi in identity_suite_functions()]

    def run_case(case):
        set_name, theta, coeff, phi = case
        grid = make_grid(coeff, dx=dx, x_span=theta.support_bound() + 0.5)
        field = solve_gheat(coeff, phi, grid, max_stored_layers=8192)
        report = stein_identity(theta, coeff, phi, field=field, quad=quad)
        # informational spot check of the one-sided derivative at s = 1/2
        deriv = one_sided_derivative_check(theta, coeff, phi, 0.5, field=field)
        budget = rtol * (1.0 + abs(report.lhs))
        ok = report.gap_sup <= budget and report.gap_inf <= budget
        return set_name, phi.name, report, deriv, budget, ok

    executor = _executor(cfg)
    mapper = map if executor is None else executor.map
    results = list(mapper(run_case, cases))
    if executor is not None:
        executor.shutdown()

    with (out / "identity_summary.csv").open("w", encoding="utf-8") as fh:
        fh.write("set,phi,lhs,integral_sup,integral_inf,gap_sup,gap_inf,"
                 "wprime_numeric,wprime_formula,budget,pass\n")
        for set_name, phi_name, rep, deriv, budget, ok in results:
            fh.write(f"{set_name},{_slug(phi_name)},{rep.lhs:.17g},{rep.integral_sup:.17g},"
                     f"{rep.integral_inf:.17g},{rep.gap_sup:.17g},{rep.gap_inf:.17g},"
                     f"{deriv.numeric:.17g},{deriv.formula_sup:.17g},"
                     f"{budget:.17g},{str(ok).lower()}\n")
    for set_name, phi_name, rep, _, _, _ in results:
        with (out / f"identity_{set_name}_{_slug(phi_name)}.csv").open("w", encoding="utf-8") as fh:
            rep.to_csv(fh)
    n_pass = sum(1 for *_, ok in results if ok)
    status = 0 if n_pass == len(results) else 1
    return status, {"cases": len(results), "passed": n_pass}


def cmd_stein_bound(cfg, out: Path):
    rng = np.random.default_rng(_int(cfg, "seed", lo=0))
    n_cases = _int(cfg, "stein.cases", lo=1)
    atol = _float(cfg, "stein.bound_atol", lo=0.0)
    rows = []
    n_pass = 0
    for case in range(n_cases):
        theta = random_uncertainty_set(rng, centered=True)
        phi = random_smooth_c2(rng)
        alpha = float(rng.uniform(0.05, 0.95))
        rep = stein_bound(theta, phi, alpha)
        ok = (rep.lhs <= rep.rhs + atol) and (rep.intermediate <= rep.intermediate_rhs + atol)
        n_pass += ok
        rows.append((case, alpha, rep, ok, False))
    if _bool(cfg, "stein.selftest"):
        # deliberately zeroed right-hand side: the harness must flag it
        theta = random_uncertainty_set(rng, centered=True)
        phi = random_smooth_c2(rng)
        rep = stein_bound(theta, phi, 0.5)
        rows.append(("selftest", 0.5, rep, rep.lhs <= 0.0, True))

    with (out / "bound_cases.csv").open("w", encoding="utf-8") as fh:
        fh.write("case,alpha,lhs,rhs,intermediate,intermediate_rhs,budget,pass,expected_fail\n")
        for case, alpha, rep, ok, expected_fail in rows:
            rhs = 0.0 if expected_fail else rep.rhs
            fh.write(f"{case},{alpha:.17g},{rep.lhs:.17g},{rhs:.17g},{rep.intermediate:.17g},"
                     f"{rep.intermediate_rhs:.17g},{atol:.17g},{str(ok).lower()},"
                     f"{str(expected_fail).lower()}\n")
    selftest_rows = [r for r in rows if r[4]]
    selftest_ok = all(not ok for _, _, _, ok, _ in selftest_rows)
    status = 0 if (n_pass == n_cases and selftest_ok) else 1
    return status, {"cases": n_cases, "passed": n_pass,
                    "selftest_flagged": str(selftest_ok).lower()}


def cmd_stein_classical(cfg, out: Path):
    sigma = _float(cfg, "classical.sigma", lo=0.0, lo_open=True)
    dx = _float(cfg, "classical.dx", lo=0.0, lo_open=True)
    tol = _float(cfg, "classical.tol", lo=0.0, lo_open=True)
    probes = _linspace(cfg, "classical.probes")
    suite = [cosine(), smoothed_ramp(0.0, 0.3)]
    worst = 0.0
    with (out / "classical.csv").open("w", encoding="utf-8") as fh:
        fh.write("phi,x,residual,tol\n")
        for phi in suite:
            rep = classical_stein_residual(sigma, phi, probes, dx=dx)
            worst = max(worst, rep.max_residual)
            for x, r in zip(rep.probes, rep.residuals):
                fh.write(f"{_slug(phi.name)},{x:.17g},{r:.17g},{tol:.17g}\n")
    status = 0 if worst <= tol else 1
    return status, {"max_residual": f"{worst:.17g}", "tol": f"{tol:.17g}"}


def cmd_clt_rate(cfg, out: Path):
    theta = _scenario(cfg)
    under_sq, bar_sq = variance_bounds(theta)
    coeff = GCoeff.from_variance_bounds(under_sq, bar_sq)
    reg = _reg_from_cfg(cfg, coeff)
    family = default_lipschitz_family()
    executor = _executor(cfg)
    try:
        report = rate_experiment(
            theta, _int_list(cfg, "clt.n_list"), family, reg, coeff,
            dx=_float(cfg, "clt.dx", lo=0.0, lo_open=True),
            budget_atol=_float(cfg, "clt.budget_atol", lo=0.0),
            executor=executor)
    finally:
        if executor is not None:
            executor.shutdown()
    with (out / "rate.csv").open("w", encoding="utf-8") as fh:
        report.to_csv(fh)

    # telescoping trace for one (n, datum) cell, with per-step bounds
    trace_n = _int(cfg, "clt.trace_n", lo=1)
    phi = family.members[0]
    spec = IidSpec(theta=theta, n=trace_n)
    span = math.sqrt(trace_n) * theta.support_bound()
    trace_field = solve_gheat(coeff, phi, make_grid(
        coeff, dx=_float(cfg, "clt.dx", lo=0.0, lo_open=True), x_span=span))
    trace = interpolation_trace(spec, coeff, phi, field=trace_field, reg=reg)
    with (out / "trace.csv").open("w", encoding="utf-8") as fh:
        trace.to_csv(fh)

    slope = "n/a" if report.slope is None else f"{report.slope:.17g}"
    status = 0 if report.all_pass else 1
    return status, {"alpha": f"{reg.alpha:.17g}", "c_alpha": f"{reg.c_alpha:.17g}",
                    "c_rate": f"{reg.c_rate:.17g}", "slope": slope,
                    "budget": f"{report.budget:.17g}", "all_pass": str(report.all_pass).lower()}


def cmd_clt_noniid(cfg, out: Path):
    spec = geometric_noniid(ratio=_float(cfg, "noniid.ratio", lo=0.0, lo_open=True),
                            n=_int(cfg, "noniid.n", lo=1),
                            beta=_float(cfg, "noniid.beta", lo=1.0))
    reg = _reg_from_cfg(cfg, spec.gcoeff)
    family = default_lipschitz_family()
    executor = _executor(cfg)
    try:
        report = noniid_experiment(spec, family, reg,
                                   dx=_float(cfg, "noniid.dx", lo=0.0, lo_open=True),
                                   executor=executor)
    finally:
        if executor is not None:
            executor.shutdown()
    with (out / "noniid.csv").open("w", encoding="utf-8") as fh:
        report.to_csv(fh)
    status = 0 if report.all_pass else 1
    return status, {"alpha": f"{reg.alpha:.17g}", "c_rate": f"{reg.c_rate:.17g}",
                    "error": f"{report.errors[0]:.17g}", "bound": f"{report.bounds[0]:.17g}",
                    "all_pass": str(report.all_pass).lower()}


def cmd_reg_estimate(cfg, out: Path):
    coeff = _coeff(cfg)
    reg = _reg_from_cfg(cfg, coeff)
    scan = reg.scan
    with (out / "reg.csv").open("w", encoding="utf-8") as fh:
        fh.write("alpha,m_coarse,m_fine,stable\n")
        for a, mc, mf, st in zip(scan.alphas, scan.m_coarse, scan.m_fine, scan.stable):
            fh.write(f"{a:.17g},{mc:.17g},{mf:.17g},{str(bool(st)).lower()}\n")
    return 0, {"alpha": f"{reg.alpha:.17g}", "c_alpha": f"{reg.c_alpha:.17g}",
               "c_rate": f"{reg.c_rate:.17g}"}


_COMMANDS = {
    ("gheat", "solve"): cmd_gheat_solve,
    ("stein", "identity"): cmd_stein_identity,
    ("stein", "bound"): cmd_stein_bound,
    ("stein", "classical"): cmd_stein_classical,
    ("clt", "rate"): cmd_clt_rate,
    ("clt", "noniid"): cmd_clt_noniid,
    ("reg", "estimate"): cmd_reg_estimate,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gstein", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="group", required=True)
    actions = {"gheat": ["solve"], "stein": ["identity", "bound", "classical"],
               "clt": ["rate", "noniid"], "reg": ["estimate"]}
    for group, names in actions.items():
        gp = sub.add_parser(group)
        gsub = gp.add_subparsers(dest="action", required=True)
        for name in names:
            leaf = gsub.add_parser(name)
            leaf.add_argument("--config", default=None, help="key = value config file")
            leaf.add_argument("--out", default="out", help="output directory")
            leaf.add_argument("--threads", type=int, default=None, help="worker threads")
            leaf.add_argument("--seed", type=int, default=None, help="suite seed")
            leaf.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                              help="override a config key (repeatable)")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config, args.set, args.threads, args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        status, summary = _COMMANDS[(args.group, args.action)](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _REJECTIONS as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return 3
    entries = {"command": f"{args.group} {args.action}", "seed": cfg["seed"],
               "threads": cfg["threads"], "elapsed_seconds": f"{time.perf_counter() - t0:.3f}"}
    entries.update(summary)
    _write_summary(out, entries)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
