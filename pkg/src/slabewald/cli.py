"""Command-line front end: tune, solve, bd and validate workflows.

Configuration is flat ``key = value`` text with dotted section names
(# comments allowed); command-line flags override file entries.  All
floating output is written with 17 significant digits so runs round
trip exactly.  Exit codes: 0 ok, 2 configuration error, 3 constraint
violation, 4 numerical failure.
"""

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .bd import (BdConfig, Observables, StericParams, bd_step, make_state,
                 steric_pair_forces, wall_steric_forces)
from .geometry import ChargeSystem, SlabGeometry, SurfaceCharge, \
    load_charges_csv
from .params import ConstraintError, plan_grid
from .slab import SlabSolver

EXIT_CONFIG = 2
EXIT_CONSTRAINT = 3
EXIT_NUMERICAL = 4

_DEFAULTS = {
    "geometry.eps": 1.0,
    "accuracy.delta": 1e-4,
    "surface.kind": "none",
    "threads": 1,
    "seed": 0,
    "output.dir": ".",
    "bd.mu": 1.0,
    "bd.kT": 1.0,
    "bd.equil_steps": 0,
    "bd.max_retries": 100,
    "bd.sample_every": 50,
    "steric.U0": 1.0,
    "steric.p": 6,
}


class ConfigError(ValueError):
    pass


def parse_config(path):
    """Read dotted-key configuration text into a flat dict."""
    conf = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("%s:%d: expected key = value" % (path, lineno))
        key, val = (part.strip() for part in line.split("=", 1))
        conf[key] = val
    return conf


def _get(conf, key, cast=float, required=False):
    if key in conf:
        try:
            return cast(conf[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError("bad value for %s: %r" % (key, conf[key])) \
                from exc
    if key in _DEFAULTS:
        return cast(_DEFAULTS[key])
    if required:
        raise ConfigError("missing required key %s" % key)
    return None


def _fmt(x):
    return "%.17g" % x


def _build_geometry(conf):
    return SlabGeometry(
        Lx=_get(conf, "geometry.Lx", required=True),
        Ly=_get(conf, "geometry.Ly", required=True),
        H=_get(conf, "geometry.H", required=True),
        eps=_get(conf, "geometry.eps"),
        eps_b=_get(conf, "geometry.eps_b"),
        eps_t=_get(conf, "geometry.eps_t"))


def _build_surface(conf):
    kind = _get(conf, "surface.kind", cast=str)
    if kind == "none":
        return SurfaceCharge.none()
    if kind == "uniform":
        return SurfaceCharge.uniform(
            _get(conf, "surface.sigma_b", required=True),
            _get(conf, "surface.sigma_t", required=True))
    if kind == "gaussian":
        return SurfaceCharge.gaussian(
            _get(conf, "surface.s", required=True),
            _get(conf, "surface.charge_b", required=True),
            _get(conf, "surface.charge_t", required=True))
    raise ConfigError("surface.kind must be none|uniform|gaussian")


def _build_params(conf, geometry, g_w, strict=True):
    delta = _get(conf, "accuracy.delta")
    nxy = _get(conf, "grid.Nxy", cast=int)
    xi = _get(conf, "grid.xi")
    if (nxy is None) == (xi is None):
        raise ConfigError("give exactly one of grid.Nxy and grid.xi")
    h_min = _get(conf, "grid.h_min")
    return plan_grid(geometry, g_w, delta, Nxy=nxy, xi=xi, h_min=h_min,
                     strict=strict)


def _load_system(conf, args):
    geometry = _build_geometry(conf)
    path = args.charges or conf.get("charges")
    if path is None:
        raise ConfigError("no charge file given (--charges or charges=)")
    positions, charges = load_charges_csv(path)
    g_w = _get(conf, "g_w", required=True)
    system = ChargeSystem(geometry, positions, charges, g_w,
                          _build_surface(conf))
    if system.n:
        resid = system.check_electroneutrality()
        scale = max(np.abs(charges).sum(), 1.0)
        if abs(resid) > 1e-12 * scale:
            raise ConfigError("system not electroneutral (residual %.3e)"
                              % resid)
    return system


def cmd_tune(conf, args):
    geometry = _build_geometry(conf)
    g_w = _get(conf, "g_w", required=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = _build_params(conf, geometry, g_w, strict=False)
    report = params.as_dict()
    report["all_constraints_ok"] = all(ok for _, ok, _ in params.constraints)
    print(json.dumps(report, indent=2, default=float))
    return 0 if report["all_constraints_ok"] else EXIT_CONSTRAINT


def cmd_solve(conf, args):
    system = _load_system(conf, args)
    params = _build_params(conf, system.geometry, system.g_w, strict=False)
    solver = SlabSolver(system, params, threads=args.threads)
    result = solver.solve()
    outdir = Path(args.out or _get(conf, "output.dir", cast=str))
    outdir.mkdir(parents=True, exist_ok=True)
    forces = result.forces
    with open(outdir / "results.csv", "w") as fh:
        fh.write("id,phi_bar,Ex,Ey,Ez,Fx,Fy,Fz\n")
        for i in range(system.n):
            row = [result.phi_bar[i]] + list(result.E_bar[i]) \
                + list(forces[i])
            fh.write(str(i) + "," + ",".join(_fmt(v) for v in row) + "\n")
    summary = {"U": result.U,
               "ai_discrepancy": result.diagnostics["ai_discrepancy"],
               "B_i": result.diagnostics["B_i"],
               "params": params.as_dict()}
    (outdir / "summary.json").write_text(
        json.dumps(summary, indent=2, default=float))
    print("wrote %s and %s" % (outdir / "results.csv",
                               outdir / "summary.json"))
    return 0


def cmd_bd(conf, args):
    system = _load_system(conf, args)
    geo = system.geometry
    params = _build_params(conf, geo, system.g_w, strict=False)
    solver = SlabSolver(system, params, threads=args.threads)
    steric = StericParams(
        a=_get(conf, "steric.a", required=True),
        U0=_get(conf, "steric.U0"),
        r_m=_get(conf, "steric.r_m") or 0.0,
        p=_get(conf, "steric.p", cast=int))
    cfg = BdConfig(
        dt=_get(conf, "bd.dt", required=True),
        steps=_get(conf, "bd.steps", cast=int, required=True),
        equil_steps=_get(conf, "bd.equil_steps", cast=int),
        mu=_get(conf, "bd.mu"), kT=_get(conf, "bd.kT"),
        seed=args.seed if args.seed is not None else
        _get(conf, "seed", cast=int),
        max_disp=_get(conf, "bd.max_disp") or steric.a,
        max_retries=_get(conf, "bd.max_retries", cast=int),
        sample_every=_get(conf, "bd.sample_every", cast=int))
    tau0 = steric.a**2 / (cfg.kT * cfg.mu) if cfg.kT > 0 else np.inf
    margin = params.n_sigma * system.g_w
    obs = Observables(H=geo.H, area=geo.area, z_bin=0.25 * steric.a,
                      r_max=0.25 * min(geo.Lx, geo.Ly),
                      r_bin=0.1 * steric.a)
    state = make_state(system.positions, cfg)
    rows = []
    q = system.charges
    total = cfg.equil_steps + cfg.steps
    for step in range(total):
        res = solver.solve(positions=state.positions, need_energy=False)
        f = res.forces \
            + steric_pair_forces(state.positions, steric,
                                 (geo.Lx, geo.Ly, None)) \
            + wall_steric_forces(state.positions, steric, geo.H)
        bd_step(state, f, cfg, z_bounds=(margin, geo.H - margin),
                wrap=(geo.Lx, geo.Ly, None))
        done = step + 1 - cfg.equil_steps
        if done >= 0 and done % cfg.sample_every == 0:
            obs.record_density(state.positions[:, 2])
            u = solver.solve(positions=state.positions).U
            rows.append((step + 1, (step + 1) * cfg.dt / tau0, u))
    outdir = Path(args.out or _get(conf, "output.dir", cast=str))
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "trajectory.csv", "w") as fh:
        fh.write("step,time,U\n")
        for row in rows:
            fh.write("%d,%s,%s\n" % (row[0], _fmt(row[1]), _fmt(row[2])))
    centers, dens = obs.density()
    with open(outdir / "density.csv", "w") as fh:
        fh.write("z,n\n")
        for z, n in zip(centers, dens):
            fh.write("%s,%s\n" % (_fmt(z), _fmt(n)))
    np.save(outdir / "final_positions.npy", state.positions)
    print("wrote %s (%d samples, %d rejected steps)"
          % (outdir / "trajectory.csv", obs.samples, state.rejections))
    return 0


def cmd_validate(conf, args):
    from . import validate as v
    suites = {"freespace": v.check_freespace, "xi": v.check_xi_independence,
              "workcheck": v.check_workcheck, "bvp": v.check_bvp,
              "kernels": v.check_kernels}
    if args.suite not in suites:
        raise ConfigError("unknown suite %r (have %s)"
                          % (args.suite, sorted(suites)))
    results = suites[args.suite]()
    ok = True
    for r in results:
        ok &= r.passed
        print("[%s] %-45s value=%.3e tol=%.3e"
              % ("PASS" if r.passed else "FAIL", r.name, r.value, r.tol))
    return 0 if ok else EXIT_NUMERICAL


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="slabewald",
        description="Electrostatics in doubly periodic dielectric slit "
                    "channels")
    ap.add_argument("command", choices=["tune", "solve", "bd", "validate"])
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--charges", help="CSV charge file (x,y,z,q)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--suite", default="kernels",
                    help="validation suite for the validate command")
    args = ap.parse_args(argv)
    try:
        conf = parse_config(args.config) if args.config else {}
        if args.command == "tune":
            return cmd_tune(conf, args)
        if args.command == "solve":
            return cmd_solve(conf, args)
        if args.command == "bd":
            return cmd_bd(conf, args)
        return cmd_validate(conf, args)
    except (ConfigError, FileNotFoundError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except ConstraintError as exc:
        print("constraint violation: %s" % exc, file=sys.stderr)
        return EXIT_CONSTRAINT
    except (FloatingPointError, np.linalg.LinAlgError, RuntimeError,
            MemoryError, ValueError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
