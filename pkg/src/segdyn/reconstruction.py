"""Rebuild full 3-D orbits from reduced trajectories.

The reduced flow fixes (r(t), x(t)); the azimuth follows by quadrature of
theta' = c / r(t)^2.  The integral is taken per accepted integrator step
on the dense-output interpolant (12-point Gauss-Legendre per step), which
preserves the propagation's order of accuracy instead of degrading it to
trapezoid-on-samples.

An orbit that is periodic in the reduced plane closes in full space only
when its azimuthal advance per reduced period is commensurate with 2*pi;
``commensurability`` performs that test with bounded denominators.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dynamics import Trajectory
from .errors import AxisCrossing

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)

#: Radii below this are treated as an axis crossing for c != 0.
MIN_RADIUS = 1e-10


@dataclass
class ReconstructedOrbit:
    """Cylindrical and Cartesian samples of a reconstructed orbit."""

    t: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    zeta: np.ndarray
    c: float
    theta0: float
    rotation_number: float | None = None


@dataclass(frozen=True)
class CommensurabilityResult:
    ratio: float
    rational: bool
    p: int | None
    q: int | None
    error: float


class _AzimuthIntegrator:
    """Cumulative theta(t) = theta0 + int c / r^2 on a dense solution."""

    def __init__(self, dense, c: float, theta0: float):
        self.dense = dense
        self.c = c
        self.ts = np.asarray(dense.ts)
        increments = [
            self._panel(self.ts[i], self.ts[i + 1]) for i in range(len(self.ts) - 1)
        ]
        self.cum = theta0 + np.concatenate([[0.0], np.cumsum(increments)])

    def _panel(self, a: float, b: float) -> float:
        if b == a:
            return 0.0
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes = mid + half * _GL_NODES
        rvals = self.dense(nodes)[0]
        return self.c * half * float(np.sum(_GL_WEIGHTS / (rvals * rvals)))

    def __call__(self, t: float) -> float:
        i = int(np.searchsorted(self.ts, t, side="right")) - 1
        i = min(max(i, 0), len(self.ts) - 2)
        return self.cum[i] + self._panel(self.ts[i], t)


def reconstruct(
    reduced_traj: Trajectory,
    c: float,
    theta0: float = 0.0,
    reduced_period: float | None = None,
) -> ReconstructedOrbit:
    """Full-space orbit from a reduced trajectory at angular momentum c.

    ``reduced_traj`` must come from ``propagate(..., chart="reduced",
    store_dense=True)`` (dense output is what the quadrature runs on; it
    is not needed for c = 0, where theta stays at theta0).  When
    ``reduced_period`` is given, the rotation number
    rho = (theta advance over one period) / 2 pi is attached.

    Raises AxisCrossing if the trajectory touches r ~ 0 with c != 0.
    """
    if reduced_traj.chart != "reduced":
        raise ValueError(f"expected a reduced-chart trajectory, got {reduced_traj.chart!r}")
    t = reduced_traj.t
    r = reduced_traj.states[:, 0].copy()
    x = reduced_traj.states[:, 1].copy()

    if c == 0.0:
        theta = np.full_like(t, theta0 % (2.0 * np.pi))
        rho = 0.0 if reduced_period is not None else None
    else:
        if np.min(r) <= MIN_RADIUS:
            raise AxisCrossing(f"r reached {np.min(r):.3e}; azimuth undefined")
        if reduced_traj.dense is None:
            raise ValueError("reconstruction needs dense output; "
                             "propagate with store_dense=True")
        integ = _AzimuthIntegrator(reduced_traj.dense, c, theta0)
        theta = np.array([integ(tv) for tv in t])
        rho = None
        if reduced_period is not None:
            t_end = t[0] + reduced_period
            if t_end > integ.ts[-1] * (1 + 1e-12):
                raise ValueError("reduced_period extends past the trajectory span")
            rho = (integ(t_end) - theta0) / (2.0 * np.pi)

    eta = r * np.cos(theta)
    zeta = r * np.sin(theta)
    return ReconstructedOrbit(
        t=t, r=r, theta=theta, x=x, xi=x.copy(), eta=eta, zeta=zeta,
        c=c, theta0=theta0, rotation_number=rho,
    )


def commensurability(
    reduced_period: float,
    theta_advance: float,
    tol: float = 1e-9,
    max_den: int = 64,
) -> CommensurabilityResult:
    """Classify an orbit as periodic or quasi-periodic in full space.

    The ratio theta_advance / 2 pi is rational with denominator <= max_den
    (within tol) for a periodic orbit; otherwise the orbit is reported
    quasi-periodic.  This is an operational test, not a proof of
    irrationality.
    """
    if not reduced_period > 0.0:
        raise ValueError("reduced_period must be positive")
    ratio = theta_advance / (2.0 * np.pi)
    frac = Fraction(ratio).limit_denominator(max_den)
    err = abs(ratio - float(frac))
    if err <= tol:
        return CommensurabilityResult(
            ratio=ratio, rational=True, p=frac.numerator, q=frac.denominator, error=err
        )
    return CommensurabilityResult(ratio=ratio, rational=False, p=None, q=None, error=err)


def write_orbit_csv(orbit: ReconstructedOrbit, path) -> None:
    """CSV export: t, r, theta, x, xi, eta, zeta at 17 significant digits."""
    with open(path, "w") as fh:
        fh.write("t,r,theta,x,xi,eta,zeta\n")
        for row in zip(orbit.t, orbit.r, orbit.theta, orbit.x,
                       orbit.xi, orbit.eta, orbit.zeta):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
