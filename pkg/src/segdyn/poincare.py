"""Poincare sections of the reduced flow and return-map fixed points.

The section is the surface x = 0 crossed upward (P_x > 0) at fixed energy
h and angular momentum c, projected to the (r, P_r) plane.  A seed
(r, P_r) is lifted onto the energy shell by solving

    P_x = + sqrt(2 (h - U(r, 0)) - P_r^2 - c^2 / r^2),

integrated with the reduced flow, and every upward crossing of x = 0 is
located on the integrator's dense output.

Fixed points of the (k-th iterate of the) first-return map are refined by
Newton with finite-difference Jacobians and classified through the
multipliers of the linearized map: the return map preserves the (r, P_r)
area on the shell, so the multiplier pair has product 1 and a fixed point
is elliptic when |trace| < 2 and hyperbolic when |trace| > 2.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import json
import math

import numpy as np

from .dynamics import EventSpec, propagate
from .errors import NewtonDiverged, NoReturn, OutsideEnergyShell
from .params import units_length_factor
from .potential import _sd_terms, potential_sd

#: Default finite-difference step of the return-map Jacobian.
JACOBIAN_STEP = 1e-7
#: Newton residual target for fixed points.
FIXED_POINT_TOL = 1e-9


@dataclass(frozen=True)
class SectionSpec:
    """Section parameters.  Lengths, times and c are in ``units`` ("L"/"2L")."""

    A: float
    c: float
    h: float
    n_crossings: int = 100
    rtol: float = 1e-12
    atol: float = 1e-12
    max_time: float = 1e4
    max_steps: int = 10_000_000
    units: str = "L"

    def internal(self) -> "SectionSpec":
        """The same spec expressed in the native half-length chart."""
        f = units_length_factor(self.units)
        if f == 1.0:
            return self
        return replace(self, c=f * self.c, max_time=f * self.max_time, units="L")


@dataclass
class SeedResult:
    """Ordered crossings of one seed, in the spec's declared units."""

    seed: tuple[float, float]
    crossings: np.ndarray  # (n, 2) rows of (r, P_r)
    times: np.ndarray
    termination: str


@dataclass
class PoincareSection:
    spec: SectionSpec
    seeds: list[SeedResult] = field(default_factory=list)


@dataclass(frozen=True)
class FixedPoint:
    """Refined fixed point of the k-th return-map iterate."""

    r: float
    P_r: float
    kind: str  # elliptic | hyperbolic
    multipliers: tuple[complex, complex]
    residual: float
    k: int


def _potential_on_section(r: float, A: float) -> float:
    s, d, _, _ = _sd_terms(0.0, r, 0.0, A)
    return potential_sd(s, d, A)


def lift_seed(r: float, P_r: float, spec: SectionSpec) -> np.ndarray:
    """Reduced state (r, 0, P_r, P_x>0) on the shell, native units.

    Raises OutsideEnergyShell when the energy closure has no real P_x.
    """
    ispec = spec.internal()
    f = units_length_factor(spec.units)
    r = f * r
    if r <= 0.0:
        raise OutsideEnergyShell(f"seed radius must be positive, got r = {r}")
    disc = 2.0 * (ispec.h - _potential_on_section(r, ispec.A)) - P_r**2 - ispec.c**2 / r**2
    if disc <= 0.0:
        raise OutsideEnergyShell(
            f"seed (r={r}, P_r={P_r}) has P_x^2 = {disc:.3e} <= 0 at h = {ispec.h}"
        )
    return np.array([r, 0.0, P_r, math.sqrt(disc)])


def _run_seed(seed: tuple[float, float], spec: SectionSpec) -> SeedResult:
    ispec = spec.internal()
    f = units_length_factor(spec.units)
    try:
        y0 = lift_seed(seed[0], seed[1], spec)
    except OutsideEnergyShell:
        return SeedResult(seed=tuple(seed), crossings=np.empty((0, 2)),
                          times=np.empty(0), termination="outside_shell")
    event = EventSpec(lambda t, y: y[1], "section", direction=+1,
                      count=ispec.n_crossings)
    traj = propagate(
        y0, ispec.A, (0.0, ispec.max_time), chart="reduced", c=ispec.c,
        rtol=ispec.rtol, atol=ispec.atol, max_steps=ispec.max_steps,
        sample_dt=ispec.max_time, events=[event],
    )
    times, states = traj.events["section"]
    crossings = states[:, [0, 2]].copy() if len(states) else np.empty((0, 2))
    crossings[:, 0] /= f
    return SeedResult(seed=tuple(seed), crossings=crossings, times=times / f,
                      termination=traj.termination)


def _run_seed_star(args):
    return _run_seed(*args)


def compute_section(spec: SectionSpec, seeds, jobs: int = 1) -> PoincareSection:
    """Section crossings for every seed, gathered in seed order.

    Seeds are independent; ``jobs > 1`` distributes them over processes
    with identical (bit-for-bit) results.
    """
    seeds = [tuple(map(float, s)) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_seed_star, [(s, spec) for s in seeds]))
    else:
        results = [_run_seed(s, spec) for s in seeds]
    return PoincareSection(spec=spec, seeds=results)


def grid_seeds(rmin: float, rmax: float, n: int,
               prmin: float = 0.0, prmax: float = 0.0, m: int = 1):
    """Rectangular seed grid in the (r, P_r) plane."""
    rs = np.linspace(rmin, rmax, n)
    prs = np.linspace(prmin, prmax, m)
    return [(float(r), float(pr)) for r in rs for pr in prs]


def section_to_json(section: PoincareSection, path=None) -> str:
    """Serialize a section per the documented JSON schema."""
    doc = {
        "spec": {
            "A": section.spec.A,
            "c": section.spec.c,
            "h": section.spec.h,
            "units": section.spec.units,
            "tols": {"rtol": section.spec.rtol, "atol": section.spec.atol},
            "n_crossings": section.spec.n_crossings,
        },
        "seeds": [
            {
                "seed": list(res.seed),
                "crossings": res.crossings.tolist(),
                "termination": res.termination,
            }
            for res in section.seeds
        ],
    }
    text = json.dumps(doc, indent=1)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


# --- return map and fixed points ----------------------------------------------

def _return_state(point, spec: SectionSpec, k: int = 1):
    """State and time of the k-th upward crossing started from ``point``.

    Works in native units throughout (callers convert); raises NoReturn if
    the orbit collides, escapes or runs out the time budget first.
    """
    y0 = lift_seed(point[0], point[1], spec)
    ispec = spec.internal()
    event = EventSpec(lambda t, y: y[1], "section", direction=+1, count=k)
    traj = propagate(
        y0, ispec.A, (0.0, ispec.max_time), chart="reduced", c=ispec.c,
        rtol=ispec.rtol, atol=ispec.atol, max_steps=ispec.max_steps,
        sample_dt=ispec.max_time, events=[event],
    )
    times, states = traj.events["section"]
    if len(times) < k:
        raise NoReturn(
            f"orbit from (r={point[0]}, P_r={point[1]}) ended with "
            f"'{traj.termination}' after {len(times)}/{k} crossings"
        )
    return states[k - 1], times[k - 1]


def return_map(point, spec: SectionSpec, k: int = 1) -> tuple[float, float]:
    """k-th iterate of the first-return map on the (r, P_r) section plane.

    ``point`` and the result are in the spec's declared units.
    """
    f = units_length_factor(spec.units)
    y, _ = _return_state((f * point[0], point[1]), spec.internal(), k)
    return y[0] / f, y[2]


def return_map_jacobian(point, spec: SectionSpec, k: int = 1,
                        step: float = JACOBIAN_STEP, order: int = 2) -> np.ndarray:
    """Finite-difference Jacobian of the k-th return-map iterate.

    order 2 is the plain central stencil; order 4 uses the five-point
    stencil and a larger default step, trading truncation error for a much
    smaller amplification of the map's integration noise (used for
    multiplier classification).
    """
    z = np.array([float(point[0]), float(point[1])])
    J = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = step
        if order == 2:
            fp = np.array(return_map(z + e, spec, k))
            fm = np.array(return_map(z - e, spec, k))
            col = (fp - fm) / (2.0 * step)
        elif order == 4:
            f2p = np.array(return_map(z + 2 * e, spec, k))
            f1p = np.array(return_map(z + e, spec, k))
            f1m = np.array(return_map(z - e, spec, k))
            f2m = np.array(return_map(z - 2 * e, spec, k))
            col = (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * step)
        else:
            raise ValueError("order must be 2 or 4")
        J[:, j] = col
    return J


def find_fixed_point(
    guess,
    spec: SectionSpec,
    period_k: int = 1,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = 25,
    classify_step: float = 1e-4,
) -> FixedPoint:
    """Newton-refine a fixed point of the k-th return-map iterate.

    The Newton phase uses the order-2 Jacobian at step 1e-7; once the
    residual |P^k(z) - z| is below ``tol`` the multipliers are recomputed
    with the order-4 stencil at ``classify_step`` for an accurate
    eigenvalue pair (their product, the Jacobian determinant, is 1 up to
    finite-difference noise).
    """
    z = np.array([float(guess[0]), float(guess[1])])

    def G(zz):
        return np.array(return_map(zz, spec, period_k)) - zz

    g = G(z)
    res = float(np.hypot(*g))
    for _ in range(max_iter):
        if res <= tol:
            break
        J = return_map_jacobian(z, spec, period_k) - np.eye(2)
        try:
            step_v = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError as exc:
            raise NewtonDiverged("singular return-map Jacobian") from exc
        scale = 1.0
        for _ in range(25):
            z_new = z + scale * step_v
            try:
                g_new = G(z_new)
            except (OutsideEnergyShell, NoReturn):
                scale *= 0.5
                continue
            res_new = float(np.hypot(*g_new))
            if res_new < res or scale < 1e-4:
                break
            scale *= 0.5
        else:
            raise NewtonDiverged("no admissible Newton step")
        z, g, res = z_new, g_new, res_new
    else:
        raise NewtonDiverged(f"residual {res:.3e} > {tol:.1e} after {max_iter} iterations")

    DP = return_map_jacobian(z, spec, period_k, step=classify_step, order=4)
    eigvals = np.linalg.eigvals(DP)
    kind = "elliptic" if abs(np.trace(DP)) < 2.0 else "hyperbolic"
    return FixedPoint(
        r=float(z[0]), P_r=float(z[1]), kind=kind,
        multipliers=(complex(eigvals[0]), complex(eigvals[1])),
        residual=res, k=period_k,
    )


def write_fixed_points_csv(entries, path) -> None:
    """CSV report: one (spec, FixedPoint) pair per row, 17 significant digits."""
    with open(path, "w") as fh:
        fh.write("A,c,h,k,r,P_r,kind,re_lambda,im_lambda,residual\n")
        for spec, fp in entries:
            lam = fp.multipliers[0]
            nums = [spec.A, spec.c, spec.h]
            row = ",".join(f"{v:.17g}" for v in nums)
            row += f",{fp.k},{fp.r:.17g},{fp.P_r:.17g},{fp.kind}"
            row += f",{lam.real:.17g},{lam.imag:.17g},{fp.residual:.17g}"
            fh.write(row + "\n")
