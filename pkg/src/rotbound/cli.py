"""Command-line front end: run configuration, solvers, and bundled checks.

Config grammar is flat `key = value` lines with `#` comments; unknown keys are
rejected. Subcommands write CSV/flat-text results plus binary field
checkpoints into the configured output directory. Exit codes: 0 success,
2 bad config, 3 infeasible constraints, 4 not converged, 5 verification
failed.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .constraints import ConstraintInfeasible, two_mode_seed
from .dynamics import (
    BlowUpError,
    OrbitReference,
    _band_limited_noise,
    evolve,
    h1_norm,
    stability_experiment,
)
from .fields import WaveField, inner_product, make_grid, read_field, write_field
from .functionals import (
    Constraints,
    PhysicsParams,
    angular_momentum,
    energy,
    euler_lagrange_apply,
    mass,
)
from .minimize import (
    EnergyCurve,
    MinimizeReport,
    NoFeasibleSeed,
    SolveOptions,
    legendre_check,
    minimize_doubly,
    minimize_mass_only,
    scan_l,
)
from .modes import dominant_mode_fraction


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    pass


_DEFAULTS = {
    "n": 128,
    "extent": 8.0,
    "k": 4.0,
    "lambda": 1.0,
    "sigma": 1.0,
    "m": 1.0,
    "l": 0.0,
    "Omega": 0.0,
    "l_grid": None,
    "step": 1e-2,
    "max_iters": 200_000,
    "tol_grad": 1e-6,
    "tol_energy": 1e-13,
    "n_max": 8,
    "seeds": None,
    "warm": True,
    "T": 10.0,
    "dt": 1e-3,
    "epsilon": 1e-2,
    "record_stride": 100,
    "field": None,
    "output_dir": "out",
    "rng_seed": 42,
}

_INT_KEYS = {"n", "max_iters", "n_max", "record_stride", "rng_seed"}
_BOOL_KEYS = {"warm"}
_STR_KEYS = {"output_dir", "field"}


@dataclass
class RunConfig:
    physics: PhysicsParams
    n: int
    extent: float
    m: float
    l: float
    Omega: float
    l_grid: np.ndarray | None
    solver: SolveOptions
    T: float
    dt: float
    epsilon: float
    record_stride: int
    output_dir: str
    rng_seed: int
    field_path: str | None
    warm: bool
    raw: dict = dc_field(default_factory=dict, repr=False)


def _parse_value(key: str, text: str, lineno: int):
    text = text.strip()
    if key == "l_grid":
        parts = text.split(":")
        if len(parts) != 3:
            raise ParseError(f"line {lineno}: l_grid must be start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad l_grid numbers in {text!r}") from exc
        if step <= 0:
            raise ParseError(f"line {lineno}: l_grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(count)
    if key == "seeds":
        seeds = []
        for chunk in text.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            try:
                seeds.append(tuple(int(x) for x in chunk.split(",")))
            except ValueError as exc:
                raise ParseError(f"line {lineno}: bad seed {chunk!r}") from exc
        return seeds
    if key in _BOOL_KEYS:
        low = text.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ParseError(f"line {lineno}: expected boolean for {key}, got {text!r}")
    if key in _STR_KEYS:
        return text
    try:
        if key in _INT_KEYS:
            return int(text)
        return float(text)
    except ValueError as exc:
        raise ParseError(f"line {lineno}: cannot parse {key} = {text!r}") from exc


def _seed_tail_mass(extent: float) -> float:
    """Mass of the widest default seed envelope beyond 0.9 * extent."""
    r = np.linspace(0.9 * extent, 0.9 * extent + 12.0, 4001)
    integrand = r ** (2 * 3 + 1) * np.exp(-(r**2))  # widest default mode |n| = 3
    return float(2.0 * np.pi * np.trapezoid(integrand, r))


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    values = dict(_DEFAULTS)
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected key = value, got {raw_line!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _DEFAULTS:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, val, lineno)
    for key, val in (overrides or {}).items():
        if key not in _DEFAULTS:
            raise ParseError(f"override: unknown key {key!r}")
        values[key] = _parse_value(key, val, 0) if isinstance(val, str) else val

    try:
        physics = PhysicsParams(lam=values["lambda"], sigma=values["sigma"], k=values["k"])
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    try:
        grid_probe = make_grid(values["n"], values["extent"])
        solver = SolveOptions(
            step=values["step"],
            max_iters=values["max_iters"],
            tol_grad=values["tol_grad"],
            tol_energy=values["tol_energy"],
            n_max=values["n_max"],
            seeds=values["seeds"],
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    if values["m"] <= 0:
        raise ValidationError("mass target m must be positive")
    if solver.n_max > grid_probe.n // 4:
        raise ValidationError(f"n_max must be at most n/4 = {grid_probe.n // 4}")
    tail = _seed_tail_mass(values["extent"])
    if tail > 1e-10:
        raise ValidationError(
            f"extent {values['extent']} too small: seed mass beyond 0.9*extent is {tail:.2e}"
        )
    return RunConfig(
        physics=physics,
        n=values["n"],
        extent=values["extent"],
        m=values["m"],
        l=values["l"],
        Omega=values["Omega"],
        l_grid=values["l_grid"],
        solver=solver,
        T=values["T"],
        dt=values["dt"],
        epsilon=values["epsilon"],
        record_stride=values["record_stride"],
        output_dir=values["output_dir"],
        rng_seed=values["rng_seed"],
        field_path=values["field"],
        warm=values["warm"],
        raw=values,
    )


# -- output writers ---------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_report(path: Path, entries: dict) -> None:
    with open(path, "w") as fh:
        for key, val in entries.items():
            fh.write(f"{key}: {_fmt(val)}\n")


def write_history_csv(path: Path, history) -> None:
    with open(path, "w") as fh:
        fh.write("iter,energy,mass_err,angmom_err,gradnorm\n")
        for row in history:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_curve_csv(path: Path, curve: EnergyCurve) -> None:
    with open(path, "w") as fh:
        fh.write("l,e,converged,omega,Omega\n")
        for i in range(len(curve.l_values)):
            fh.write(
                ",".join(
                    [
                        _fmt(curve.l_values[i]),
                        _fmt(curve.e_values[i]),
                        _fmt(bool(curve.converged[i])),
                        _fmt(curve.omegas[i]),
                        _fmt(curve.Omegas[i]),
                    ]
                )
                + "\n"
            )


def write_trace_csv(path: Path, trace) -> None:
    with open(path, "w") as fh:
        fh.write("t,mass_drift,energy_drift,angmom_drift,orbit_distance\n")
        for i in range(len(trace.times)):
            od = "" if trace.orbit_distance is None else _fmt(trace.orbit_distance[i])
            fh.write(
                ",".join(
                    [
                        _fmt(trace.times[i]),
                        _fmt(trace.mass_drift[i]),
                        _fmt(trace.energy_drift[i]),
                        _fmt(trace.ang_mom_drift[i]),
                    ]
                )
                + f",{od}\n"
            )


def _report_entries(rep: MinimizeReport, c: Constraints | None = None) -> dict:
    entries = {
        "energy": rep.energy_value,
        "plain_energy": rep.plain_energy,
        "converged": rep.converged,
        "iterations": rep.iterations,
        "wall_time_s": rep.wall_time,
        "omega": rep.multipliers.omega,
        "Omega": rep.multipliers.Omega,
        "degenerate": rep.multipliers.degenerate,
        "residual": rep.residual,
        "identity_gap": rep.identity_gap,
        "mass_error": rep.mass_error,
        "angmom_error": rep.angmom_error,
        "achieved_l": rep.achieved_l,
        "gradnorm": rep.gradnorm,
        "seed": str(rep.seed_used),
    }
    if c is not None:
        entries["m"] = c.m
        entries["l"] = c.l
    return entries


# -- subcommands --------------------------------------------------------------------

def cmd_minimize(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = make_grid(cfg.n, cfg.extent)
    c = Constraints(m=cfg.m, l=cfg.l)
    rep = minimize_doubly(cfg.physics, c, cfg.solver, grid=grid)
    write_report(out / "report.txt", _report_entries(rep, c))
    write_history_csv(out / "history.csv", rep.history)
    write_field(rep.field, out / "minimizer.nlsb")
    return 0 if rep.converged else 4


def cmd_groundstate_omega(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = make_grid(cfg.n, cfg.extent)
    rep = minimize_mass_only(cfg.physics, cfg.m, cfg.Omega, cfg.solver, grid=grid)
    entries = _report_entries(rep)
    entries["m"] = cfg.m
    entries["Omega_parameter"] = cfg.Omega
    write_report(out / "report.txt", entries)
    write_history_csv(out / "history.csv", rep.history)
    write_field(rep.field, out / "minimizer.nlsb")
    return 0 if rep.converged else 4


def cmd_scan(cfg: RunConfig) -> int:
    if cfg.l_grid is None:
        raise ValidationError("scan requires l_grid = start:stop:step")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = make_grid(cfg.n, cfg.extent)
    curve = scan_l(cfg.physics, cfg.m, cfg.l_grid, cfg.solver, grid=grid, warm=cfg.warm)
    write_curve_csv(out / "curve.csv", curve)
    write_report(
        out / "report.txt",
        {
            "points": len(curve.l_values),
            "all_converged": bool(curve.converged.all()),
            "min_e": float(np.min(curve.e_values)),
            "argmin_l": float(curve.l_values[int(np.argmin(curve.e_values))]),
        },
    )
    return 0 if curve.converged.all() else 4


def cmd_evolve(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = make_grid(cfg.n, cfg.extent)
    ref = None
    if cfg.field_path:
        f0 = read_field(cfg.field_path)
    else:
        c = Constraints(m=cfg.m, l=cfg.l)
        rep = minimize_doubly(cfg.physics, c, cfg.solver, grid=grid)
        if not rep.converged:
            return 4
        f0 = rep.field
        ref = OrbitReference(rep.field, rep.multipliers, c, cfg.physics)
    trace = evolve(f0, cfg.T, cfg.dt, cfg.physics, ref=ref, record_stride=cfg.record_stride)
    write_trace_csv(out / "trace.csv", trace)
    write_field(trace.final_field, out / "final.nlsb")
    write_report(
        out / "report.txt",
        {
            "T": cfg.T,
            "dt": cfg.dt,
            "max_mass_drift": float(np.max(trace.mass_drift)),
            "max_energy_drift": float(np.max(trace.energy_drift)),
            "max_angmom_drift": float(np.max(trace.ang_mom_drift)),
        },
    )
    return 0


def cmd_stability(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = make_grid(cfg.n, cfg.extent)
    c = Constraints(m=cfg.m, l=cfg.l)
    rep = minimize_doubly(cfg.physics, c, cfg.solver, grid=grid)
    if not rep.converged:
        return 4
    ref = OrbitReference(rep.field, rep.multipliers, c, cfg.physics)
    result = stability_experiment(
        ref, cfg.epsilon, cfg.T, cfg.dt, cfg.physics,
        rng_seed=cfg.rng_seed, record_stride=cfg.record_stride,
    )
    write_trace_csv(out / "trace.csv", result.trace)
    write_report(
        out / "report.txt",
        {
            "epsilon": cfg.epsilon,
            "sup_distance": result.sup_distance,
            "T": cfg.T,
            "dt": cfg.dt,
        },
    )
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    """Bundled structural checks at the configured scale; prints a pass table."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = make_grid(cfg.n, cfg.extent)
    p = cfg.physics
    rows = []

    def check(name, value, tol, ok=None):
        passed = bool(value < tol) if ok is None else bool(ok)
        rows.append((name, value, tol, passed))
        return passed

    l_test = cfg.l if cfg.l != 0 else 1.0
    c = Constraints(m=cfg.m, l=l_test)
    rep = minimize_doubly(p, c, cfg.solver, grid=grid)
    check("minimize-converged", 0.0 if rep.converged else 1.0, 0.5, ok=rep.converged)
    check("constraint-mass", rep.mass_error, 1e-10)
    check("constraint-angmom", rep.angmom_error, 1e-8 * max(1.0, abs(l_test)))
    check("stationarity", rep.residual, 1e-4)
    check("multiplier-identity", rep.identity_gap, 1e-5)

    rep0 = minimize_doubly(p, Constraints(m=cfg.m, l=0.0), cfg.solver, grid=grid)
    frac_out = 1.0 - dominant_mode_fraction(rep0.field, 0, cfg.solver.n_max)
    check("l0-radiality", frac_out, 1e-6)
    rep_sphere = minimize_mass_only(p, cfg.m, 0.0, cfg.solver, grid=grid)
    rel = abs(rep0.energy_value - rep_sphere.energy_value) / max(1.0, abs(rep0.energy_value))
    check("l0-equals-mass-only", rel, 1e-6)

    rep_neg = minimize_doubly(p, Constraints(m=cfg.m, l=-l_test), cfg.solver, grid=grid)
    sym = abs(rep.energy_value - rep_neg.energy_value) / max(1.0, abs(rep.energy_value))
    check("scan-symmetry", sym, 2e-6)

    l_grid = cfg.l_grid if cfg.l_grid is not None else np.arange(0.0, 2.0 + 1e-9, 0.5)
    l_grid = np.asarray(l_grid)
    curve = scan_l(p, cfg.m, l_grid[l_grid >= 0], cfg.solver, grid=grid, warm=cfg.warm)
    omega_run = minimize_mass_only(p, cfg.m, cfg.Omega, cfg.solver, grid=grid)
    lg = legendre_check(curve, omega_run.energy_value, cfg.Omega)
    dl = float(np.min(np.diff(np.sort(curve.l_values)))) if len(curve.l_values) > 1 else 0.0
    check("legendre-violations", float(lg.inequality_violations), 0.5)
    check("legendre-gap", lg.gap, cfg.Omega * dl / 2 + 1e-4)

    ref = OrbitReference(rep0.field, rep0.multipliers, Constraints(m=cfg.m, l=0.0), p)
    trace = evolve(rep0.field, cfg.T, cfg.dt, p, ref=ref, record_stride=cfg.record_stride)
    check("conservation-mass", float(np.max(trace.mass_drift)), 1e-12)
    check("conservation-energy", float(np.max(trace.energy_drift)), 1e-6)
    check("conservation-angmom", float(np.max(trace.ang_mom_drift)), 1e-5)

    # splitting order is measured on a perturbed copy: the stationary state
    # sits at the roundoff floor where the dt^2 term is invisible
    rng = np.random.default_rng(cfg.rng_seed)
    pert = _band_limited_noise(grid, rng)
    pert_field = WaveField(grid, pert)
    u0 = WaveField(
        grid,
        rep0.field.values + 1e-2 / h1_norm(pert_field, p) * pert,
    )
    ed_coarse = float(np.max(evolve(u0, cfg.T, cfg.dt, p).energy_drift))
    ed_half = float(np.max(evolve(u0, cfg.T, cfg.dt / 2, p).energy_drift))
    factor = ed_coarse / max(ed_half, 1e-300)
    check("conservation-dt-order", abs(factor - 4.0), 1.01, ok=3.0 <= factor <= 5.0)

    stab = stability_experiment(
        ref, cfg.epsilon, cfg.T, cfg.dt, p, rng_seed=cfg.rng_seed,
        record_stride=cfg.record_stride,
    )
    check("orbital-stability", stab.sup_distance, 5 * cfg.epsilon)

    rng = np.random.default_rng(cfg.rng_seed + 1)
    worst_pair = 0.0
    drawn = 0
    while drawn < 100:
        mt = float(rng.uniform(0.2, 3.0))
        lt = float(rng.uniform(-3.0, 3.0))
        n1, n2 = sorted(rng.choice(np.arange(-3, 4), size=2, replace=False))
        if (mt * n2 - lt) <= 0 or (lt - mt * n1) <= 0:
            continue
        seed = two_mode_seed(grid, Constraints(m=mt, l=lt), int(n1), int(n2))
        worst_pair = max(
            worst_pair,
            abs(mass(seed) - mt) / max(1.0, mt),
            abs(angular_momentum(seed) - lt) / max(1.0, abs(lt)),
        )
        drawn += 1
    check("two-mode-construction", worst_pair, 1e-8)

    eps_fd = 1e-5
    worst_fd = 0.0
    for probe in range(5):
        fa = WaveField(grid, _band_limited_noise(grid, np.random.default_rng(1000 + probe)))
        ha = WaveField(grid, _band_limited_noise(grid, np.random.default_rng(2000 + probe)))
        fd = (energy(fa + eps_fd * ha, p) - energy(fa - eps_fd * ha, p)) / (2 * eps_fd)
        an = 2.0 * inner_product(ha, euler_lagrange_apply(fa, p)).real
        worst_fd = max(worst_fd, abs(fd - an) / max(1.0, abs(fd), abs(an)))
    check("gradient-consistency", worst_fd, 1e-6)

    oracle_grid = make_grid(256, 8.0)
    gauss = WaveField(oracle_grid, np.exp(-oracle_grid.rsq / 2).astype(complex))
    lin = PhysicsParams(lam=0.0, sigma=1.0, k=4.0)
    cub = PhysicsParams(lam=1.0, sigma=1.0, k=4.0)
    oracle_gap = max(
        abs(mass(gauss) - np.pi),
        abs(energy(gauss, lin) - 2.5 * np.pi),
        abs(energy(gauss, cub) - (2.5 * np.pi + np.pi / 4.0)),
    )
    check("analytic-oracles", oracle_gap, 1e-6)

    width = max(len(r[0]) for r in rows)
    lines = []
    for name, value, tol, passed in rows:
        status = "PASS" if passed else "FAIL"
        lines.append(f"{name:<{width}}  {value:12.4e}  tol {tol:10.3e}  {status}")
    table = "\n".join(lines)
    print(table)
    (out / "verify.txt").write_text(table + "\n")
    return 0 if all(r[3] for r in rows) else 5


_COMMANDS = {
    "minimize": cmd_minimize,
    "groundstate-omega": cmd_groundstate_omega,
    "scan": cmd_scan,
    "evolve": cmd_evolve,
    "stability": cmd_stability,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rotbound",
        description="Doubly constrained Gross-Pitaevskii minimizers and diagnostics",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", type=str, default=None, help="path to key = value config file")
    parser.add_argument("overrides", nargs="*", help="key=value overrides")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text() if args.config else ""
        overrides = {}
        for item in args.overrides:
            if "=" not in item:
                raise ParseError(f"override {item!r} is not key=value")
            key, _, val = item.partition("=")
            overrides[key.strip()] = val.strip()
        cfg = parse_config(text, overrides)
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        return _COMMANDS[args.command](cfg)
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ConstraintInfeasible, NoFeasibleSeed) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except BlowUpError as exc:
        print(f"blow-up detected: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
