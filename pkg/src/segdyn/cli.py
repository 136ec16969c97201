"""Command-line front end.

Every pipeline stage is a subcommand working in the dimensionless chart:

    potential    evaluate the potential and force at a point
    circular     circular-orbit family members (by s* or by c)
    propagate    integrate an initial state, write a trajectory CSV
    poincare     compute a Poincare section, write JSON
    fixpoint     refine a return-map fixed point from a guess
    reconstruct  rebuild a 3-D orbit from a reduced initial state

Exit codes: 0 success; 2 usage or domain errors (bad flags, on-segment
points, seeds outside the energy shell); 3 numerical failures (Newton
divergence, no return, step-size underflow, quadrature failure).

When --out is given, the resolved run configuration is echoed to
<out>.config.json so any run can be reproduced from its outputs.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import circular as circ
from . import dynamics as dyn
from . import poincare as poin
from . import reconstruction as rec
from .errors import (
    AxisCrossing,
    AxisSingularity,
    DomainViolation,
    NewtonDiverged,
    NonPositiveDimension,
    NoReturn,
    OnSegment,
    OutsideEnergyShell,
    QuadratureNotConverged,
    SegdynError,
    SlopeOutOfRange,
    StepSizeUnderflow,
    ZeroAngularMomentum,
)
from .params import UNIT_CHOICES, derive_segment, to_scaled, units_length_factor
from .potential import force_scaled, potential_physical, potential_scaled, aux_sd

_USAGE_ERRORS = (
    SlopeOutOfRange,
    NonPositiveDimension,
    DomainViolation,
    OnSegment,
    OutsideEnergyShell,
    ZeroAngularMomentum,
)
_NUMERICAL_ERRORS = (
    NewtonDiverged,
    NoReturn,
    StepSizeUnderflow,
    QuadratureNotConverged,
    AxisSingularity,
    AxisCrossing,
)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _floats(text: str, n: int | None = None) -> list[float]:
    vals = [float(tok) for tok in text.split(",")]
    if n is not None and len(vals) != n:
        raise DomainViolation(f"expected {n} comma-separated values, got {len(vals)}")
    return vals


def _add_model_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--A", type=float, default=None,
                   help="dimensionless density slope, 0 <= A < 1/3")
    g.add_argument("--alpha", type=float, default=None,
                   help="physical density slope (with --M --L --G)")
    g.add_argument("--M", type=float, default=None, help="total segment mass")
    g.add_argument("--L", type=float, default=None, help="segment half-length")
    g.add_argument("--G", type=float, default=1.0, help="gravitational constant")
    g.add_argument("--units", choices=UNIT_CHOICES, default=None,
                   help="length-unit convention for inputs/outputs (default L; "
                        "2L follows the constant-density literature)")
    p.add_argument("--config", default=None,
                   help="JSON config file; explicit flags override its entries")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _resolve_model(args, cfg: dict) -> tuple[float, dict]:
    """Dimensionless A plus the resolved model block for the config echo."""
    model_cfg = dict(cfg.get("model", {}))
    A = args.A if args.A is not None else model_cfg.get("A")
    alpha = args.alpha if args.alpha is not None else model_cfg.get("alpha")
    if A is not None and alpha is not None:
        raise DomainViolation("give exactly one of A or alpha (with M, L, G)")
    if alpha is not None:
        M = args.M if args.M is not None else model_cfg.get("M")
        L = args.L if args.L is not None else model_cfg.get("L")
        G = args.G if args.G is not None else model_cfg.get("G", 1.0)
        if M is None or L is None:
            raise DomainViolation("alpha needs M and L (and optionally G)")
        scaled = to_scaled(derive_segment(alpha, M, L, G))
        return scaled.A, {"alpha": alpha, "M": M, "L": L, "G": G}
    if A is None:
        raise DomainViolation("model underspecified: give --A or --alpha/--M/--L")
    if not 0.0 <= A < 1.0 / 3.0:
        raise DomainViolation(f"A must lie in [0, 1/3), got {A}")
    return float(A), {"A": float(A)}


def _resolve_units(args, cfg: dict) -> str:
    units = args.units if args.units is not None else cfg.get("units", "L")
    units_length_factor(units)  # validates
    return units


def _echo_config(out_path: str, model_block: dict, units: str, command: str,
                 params: dict, outputs: dict) -> None:
    doc = {
        "model": model_block,
        "units": units,
        "command": {"name": command, **params},
        "output": outputs,
    }
    with open(f"{out_path}.config.json", "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


# --- subcommands ---------------------------------------------------------------


def _cmd_potential(args) -> int:
    cfg = _load_config(args.config)
    A, model_block = _resolve_model(args, cfg)
    units = _resolve_units(args, cfg)
    f = units_length_factor(units)
    if args.physical:
        if "alpha" not in model_block:
            raise DomainViolation("--physical needs physical parameters "
                                  "(--alpha --M --L --G)")
        params = derive_segment(model_block["alpha"], model_block["M"],
                                model_block["L"], model_block["G"])
        pos = _floats(args.at, 3)
        V = potential_physical(pos, params)
        print(f"V = {_fmt(V)}")
        return 0
    q = [f * v for v in _floats(args.at, 3)]
    aux = aux_sd(q, A)
    U = potential_scaled(q, A)
    force = f * force_scaled(q, A)
    print(f"s = {_fmt(aux.s)}  d = {_fmt(aux.d)}")
    print(f"U = {_fmt(U)}")
    print(f"force = {_fmt(force[0])}, {_fmt(force[1])}, {_fmt(force[2])}")
    return 0


_FAMILY_COLUMNS = "A,s,d,c,r,x,T,res_F1,res_F2"


def _orbit_row(o: circ.CircularOrbit) -> str:
    vals = [o.A, o.s_star, o.d_star, o.c_star, o.r_star, o.x_star, o.T,
            o.residuals[0], o.residuals[1]]
    return ",".join(_fmt(v) for v in vals)


def _cmd_circular(args) -> int:
    cfg = _load_config(args.config)
    A, model_block = _resolve_model(args, cfg)
    units = _resolve_units(args, cfg)
    if units != "L":
        raise DomainViolation("the circular-orbit chart is defined in L units")
    given = [v is not None for v in (args.s, args.c, args.s_grid)]
    if sum(given) != 1:
        raise DomainViolation("give exactly one of --s, --c or --s-grid")
    if args.s_grid is not None:
        lo, hi, n = args.s_grid.split(":")
        orbits = circ.family_sweep(np.linspace(float(lo), float(hi), int(n)), A)
    elif args.s is not None:
        orbits = [circ.solve_circular(args.s, A)]
    else:
        orbits = [circ.solve_circular_for_c(args.c, A)]
    print(_FAMILY_COLUMNS)
    for o in orbits:
        print(_orbit_row(o))
    if args.out:
        circ.write_family_csv(orbits, args.out)
        _echo_config(args.out, model_block, units, "circular",
                     {"s": args.s, "c": args.c, "s_grid": args.s_grid},
                     {"path": args.out, "format": "csv"})
    return 0


def _cmd_propagate(args) -> int:
    cfg = _load_config(args.config)
    A, model_block = _resolve_model(args, cfg)
    units = _resolve_units(args, cfg)
    f = units_length_factor(units)
    dim = 6
    y0 = np.array(_floats(args.state, dim))
    if args.chart == "cartesian":
        y0[:3] *= f
    else:  # r, theta, x, P_r, P_theta, P_x
        y0[0] *= f
        y0[2] *= f
        y0[4] *= f
    traj = dyn.propagate(
        y0, A, (0.0, f * args.tspan), chart=args.chart,
        rtol=args.rtol, atol=args.atol, max_steps=args.max_steps,
        sample_dt=f * args.sample_dt if args.sample_dt else None,
        escape_radius=args.escape_radius,
    )
    out_traj = traj
    if f != 1.0:
        states = traj.states.copy()
        if args.chart == "cartesian":
            states[:, :3] /= f
        else:
            states[:, 0] /= f
            states[:, 2] /= f
            states[:, 4] /= f
        out_traj = dyn.Trajectory(
            chart=traj.chart, A=traj.A, c=traj.c, t=traj.t / f, states=states,
            energy=traj.energy, termination=traj.termination, nsteps=traj.nsteps,
        )
    closure = float(np.max(np.abs(out_traj.final_state - out_traj.initial_state)))
    drift = float(np.max(np.abs(out_traj.energy - out_traj.energy[0]))
                  / max(1e-300, abs(out_traj.energy[0])))
    print(f"termination = {out_traj.termination}")
    print(f"t_end = {_fmt(out_traj.t[-1])}  steps = {out_traj.nsteps}")
    print(f"final = {','.join(_fmt(v) for v in out_traj.final_state)}")
    print(f"closure = {_fmt(closure)}")
    print(f"energy_drift = {_fmt(drift)}")
    if args.out:
        dyn.write_trajectory_csv(out_traj, args.out)
        _echo_config(args.out, model_block, units, "propagate",
                     {"state": args.state, "chart": args.chart, "tspan": args.tspan,
                      "rtol": args.rtol, "atol": args.atol,
                      "sample_dt": args.sample_dt, "max_steps": args.max_steps,
                      "escape_radius": args.escape_radius},
                     {"path": args.out, "format": "csv"})
    return 0


def _parse_seed_grid(text: str):
    parts = text.split(",")
    rmin, rmax, n = parts[0].split(":")
    if len(parts) == 1:
        return poin.grid_seeds(float(rmin), float(rmax), int(n))
    prmin, prmax, m = parts[1].split(":")
    return poin.grid_seeds(float(rmin), float(rmax), int(n),
                           float(prmin), float(prmax), int(m))


def _section_spec(args, A: float, units: str) -> poin.SectionSpec:
    return poin.SectionSpec(
        A=A, c=args.c, h=args.h, n_crossings=args.crossings,
        rtol=args.rtol, atol=args.atol, max_time=args.max_time, units=units,
    )


def _cmd_poincare(args) -> int:
    cfg = _load_config(args.config)
    A, model_block = _resolve_model(args, cfg)
    units = _resolve_units(args, cfg)
    if (args.seed_grid is None) == (args.seeds is None):
        raise DomainViolation("give exactly one of --seed-grid or --seeds")
    if args.seed_grid is not None:
        seeds = _parse_seed_grid(args.seed_grid)
    else:
        seeds = [tuple(_floats(tok, 2)) for tok in args.seeds.split(";") if tok]
    spec = _section_spec(args, A, units)
    section = poin.compute_section(spec, seeds, jobs=args.jobs)
    text = poin.section_to_json(section, args.out)
    if args.out:
        _echo_config(args.out, model_block, units, "poincare",
                     {"c": args.c, "h": args.h, "crossings": args.crossings,
                      "seed_grid": args.seed_grid, "seeds": args.seeds,
                      "rtol": args.rtol, "atol": args.atol,
                      "max_time": args.max_time, "jobs": args.jobs},
                     {"path": args.out, "format": "json"})
    else:
        print(text)
    total = sum(len(res.crossings) for res in section.seeds)
    print(f"seeds = {len(seeds)}  crossings = {total}", file=sys.stderr)
    return 0


def _cmd_fixpoint(args) -> int:
    cfg = _load_config(args.config)
    A, model_block = _resolve_model(args, cfg)
    units = _resolve_units(args, cfg)
    spec = _section_spec(args, A, units)
    guess = _floats(args.guess, 2)
    fp = poin.find_fixed_point(guess, spec, period_k=args.k, tol=args.tol)
    lam = fp.multipliers[0]
    print(f"r = {_fmt(fp.r)}")
    print(f"P_r = {_fmt(fp.P_r)}")
    print(f"kind = {fp.kind}")
    print(f"multiplier = {_fmt(lam.real)} {'+' if lam.imag >= 0 else '-'} "
          f"{_fmt(abs(lam.imag))} i")
    print(f"residual = {_fmt(fp.residual)}")
    if args.out:
        poin.write_fixed_points_csv([(spec, fp)], args.out)
        _echo_config(args.out, model_block, units, "fixpoint",
                     {"c": args.c, "h": args.h, "guess": args.guess, "k": args.k,
                      "tol": args.tol, "rtol": args.rtol, "atol": args.atol,
                      "crossings": args.crossings, "max_time": args.max_time},
                     {"path": args.out, "format": "csv"})
    return 0


def _cmd_reconstruct(args) -> int:
    cfg = _load_config(args.config)
    A, model_block = _resolve_model(args, cfg)
    units = _resolve_units(args, cfg)
    f = units_length_factor(units)
    y0 = np.array(_floats(args.state, 4))
    y0[0] *= f
    y0[1] *= f
    c = f * args.c
    traj = dyn.propagate(
        y0, A, (0.0, f * args.tspan), chart="reduced", c=c,
        rtol=args.rtol, atol=args.atol,
        sample_dt=f * args.sample_dt if args.sample_dt else None,
        store_dense=True,
    )
    period = f * args.period if args.period else None
    orbit = rec.reconstruct(traj, c, theta0=args.theta0, reduced_period=period)
    if f != 1.0:
        orbit = rec.ReconstructedOrbit(
            t=orbit.t / f, r=orbit.r / f, theta=orbit.theta, x=orbit.x / f,
            xi=orbit.xi / f, eta=orbit.eta / f, zeta=orbit.zeta / f,
            c=args.c, theta0=args.theta0, rotation_number=orbit.rotation_number,
        )
    print(f"termination = {traj.termination}")
    print(f"theta_advance = {_fmt(orbit.theta[-1] - orbit.theta[0])}")
    if orbit.rotation_number is not None:
        print(f"rotation_number = {_fmt(orbit.rotation_number)}")
        comm = rec.commensurability(args.period,
                                    2.0 * np.pi * orbit.rotation_number,
                                    tol=args.comm_tol, max_den=args.max_den)
        if comm.rational:
            print(f"commensurability = {comm.p}/{comm.q} (error {comm.error:.3e})")
        else:
            print(f"commensurability = quasi-periodic "
                  f"(no p/q with q <= {args.max_den} within {args.comm_tol})")
    if args.out:
        rec.write_orbit_csv(orbit, args.out)
        _echo_config(args.out, model_block, units, "reconstruct",
                     {"state": args.state, "c": args.c, "theta0": args.theta0,
                      "tspan": args.tspan, "sample_dt": args.sample_dt,
                      "period": args.period, "rtol": args.rtol, "atol": args.atol},
                     {"path": args.out, "format": "csv"})
    return 0


# --- parser --------------------------------------------------------------------


def _add_tol_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rtol", type=float, default=1e-12,
                   help="integrator relative tolerance in [1e-14, 1e-3] "
                        "(default 1e-12)")
    p.add_argument("--atol", type=float, default=1e-12,
                   help="integrator absolute tolerance in [1e-14, 1e-3] "
                        "(default 1e-12)")


def _add_section_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c", type=float, required=True, help="angular momentum")
    p.add_argument("--h", type=float, required=True,
                   help="energy level of the section (required; crossings are "
                        "located to |x| <= 1e-10 and stay within 1e-8 of h)")
    p.add_argument("--crossings", type=int, default=100,
                   help="upward crossings collected per seed (default 100)")
    p.add_argument("--max-time", type=float, default=1e4,
                   help="time budget per seed (default 1e4)")
    _add_tol_args(p)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="segdyn",
        description="Dynamics around a straight segment with linearly varying "
                    "density. The collision set is handled with a numerical "
                    "threshold of 1e-12 on s-2 for evaluation and 1e-9 for "
                    "propagation termination; escape is declared at s > 1e3.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("potential", help="evaluate potential and force at a point")
    p.add_argument("--at", required=True, help="comma-separated position xi,eta,zeta")
    p.add_argument("--physical", action="store_true",
                   help="evaluate the physical-units potential instead "
                        "(needs --alpha --M --L --G)")
    _add_model_args(p)
    p.set_defaults(fn=_cmd_potential)

    p = sub.add_parser("circular", help="circular-orbit family members")
    p.add_argument("--s", type=float, default=None, help="family parameter s* > 2")
    p.add_argument("--c", type=float, default=None,
                   help="angular momentum (solved for s* by Newton)")
    p.add_argument("--s-grid", default=None, help="sweep grid smin:smax:n")
    p.add_argument("--out", default=None, help="family CSV output path")
    _add_model_args(p)
    p.set_defaults(fn=_cmd_circular)

    p = sub.add_parser("propagate", help="integrate an initial state")
    p.add_argument("--state", required=True,
                   help="6 comma-separated components (cartesian: "
                        "xi,eta,zeta,p_xi,p_eta,p_zeta; cylindrical: "
                        "r,theta,x,P_r,P_theta,P_x)")
    p.add_argument("--chart", choices=("cartesian", "cylindrical"),
                   default="cartesian")
    p.add_argument("--tspan", type=float, required=True, help="integration time")
    p.add_argument("--sample-dt", type=float, default=None,
                   help="output stride (default: every accepted step)")
    p.add_argument("--max-steps", type=int, default=10_000_000,
                   help="step budget (default 1e7)")
    p.add_argument("--escape-radius", type=float, default=1e3,
                   help="escape threshold on s (default 1e3)")
    p.add_argument("--out", default=None, help="trajectory CSV output path")
    _add_tol_args(p)
    _add_model_args(p)
    p.set_defaults(fn=_cmd_propagate)

    p = sub.add_parser("poincare", help="compute a Poincare section")
    p.add_argument("--seed-grid", default=None,
                   help="rmin:rmax:n[,prmin:prmax:m] seed grid in (r, P_r)")
    p.add_argument("--seeds", default=None,
                   help="explicit seeds 'r,pr;r,pr;...'")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers over seeds (default 1; results are "
                        "identical for any value)")
    p.add_argument("--out", default=None, help="section JSON output path")
    _add_section_args(p)
    _add_model_args(p)
    p.set_defaults(fn=_cmd_poincare)

    p = sub.add_parser("fixpoint", help="refine a return-map fixed point")
    p.add_argument("--guess", required=True, help="starting point r,P_r")
    p.add_argument("--k", type=int, default=1,
                   help="return-map iterate (island-chain period, default 1)")
    p.add_argument("--tol", type=float, default=1e-9,
                   help="Newton residual target (default 1e-9; Jacobians use "
                        "central differences with step 1e-7)")
    _add_section_args(p)
    _add_model_args(p)
    p.set_defaults(fn=_cmd_fixpoint)

    p = sub.add_parser("reconstruct", help="rebuild a 3-D orbit from reduced data")
    p.add_argument("--state", required=True, help="reduced state r,x,P_r,P_x")
    p.add_argument("--c", type=float, required=True, help="angular momentum")
    p.add_argument("--theta0", type=float, default=0.0, help="initial azimuth")
    p.add_argument("--tspan", type=float, required=True, help="integration time")
    p.add_argument("--sample-dt", type=float, default=None, help="output stride")
    p.add_argument("--period", type=float, default=None,
                   help="reduced period; enables the rotation-number and "
                        "commensurability report")
    p.add_argument("--comm-tol", type=float, default=1e-9,
                   help="commensurability tolerance (default 1e-9)")
    p.add_argument("--max-den", type=int, default=64,
                   help="largest denominator tested (default 64)")
    p.add_argument("--out", default=None, help="orbit CSV output path")
    _add_tol_args(p)
    _add_model_args(p)
    p.set_defaults(fn=_cmd_reconstruct)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except SegdynError as exc:  # anything else from the library
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
