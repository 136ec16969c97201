"""Equations of motion, Hamiltonian, and adaptive propagation.

Three charts of the same flow are supported:

* ``cartesian``   y = (xi, eta, zeta, p_xi, p_eta, p_zeta)
* ``cylindrical`` y = (r, theta, x, P_r, P_theta, P_x)
* ``reduced``     y = (r, x, P_r, P_x) with the angular momentum c = P_theta
  entering as a constant parameter

The cylindrical chart is the canonical lift of eta = r cos(theta),
zeta = r sin(theta): P_r = (eta p_eta + zeta p_zeta)/r and
P_theta = eta p_zeta - zeta p_eta, which keeps the transform symplectic
and gives the kinetic energy (P_r^2 + P_x^2 + P_theta^2/r^2)/2.

Propagation uses an adaptive 8th-order Dormand-Prince pair with dense
output (scipy's DOP853 stepper) driven by a loop that locates events on
the dense interpolant, terminates on collision with the segment or on
escape, and enforces a step budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import DOP853, OdeSolution
from scipy.optimize import brentq

from .errors import AxisSingularity, OnSegment, StepSizeUnderflow
from .potential import _force_terms, _force_terms_cyl, _sd_terms, potential_sd

CHARTS = ("cartesian", "cylindrical", "reduced")

#: Collision is declared when s - 2 falls below this during propagation.
COLLISION_S_TOL = 1e-9
#: Escape is declared when s exceeds this (far beyond any bounded orbit here).
ESCAPE_RADIUS = 1e3
#: Cylindrical chart is treated as singular below this radius.
AXIS_RADIUS = 1e-10

_TWO_PI = 2.0 * math.pi


# --- state containers -------------------------------------------------------

@dataclass(frozen=True)
class CartState:
    xi: float
    eta: float
    zeta: float
    p_xi: float
    p_eta: float
    p_zeta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.xi, self.eta, self.zeta, self.p_xi, self.p_eta, self.p_zeta])

    @classmethod
    def from_array(cls, y) -> "CartState":
        return cls(*(float(v) for v in y))


@dataclass(frozen=True)
class CylState:
    r: float
    theta: float
    x: float
    P_r: float
    P_theta: float
    P_x: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.theta, self.x, self.P_r, self.P_theta, self.P_x])

    @classmethod
    def from_array(cls, y) -> "CylState":
        return cls(*(float(v) for v in y))


@dataclass(frozen=True)
class ReducedState:
    r: float
    x: float
    P_r: float
    P_x: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.x, self.P_r, self.P_x])

    @classmethod
    def from_array(cls, y) -> "ReducedState":
        return cls(*(float(v) for v in y))


def _as_array(state, dim: int) -> np.ndarray:
    y = state.as_array() if hasattr(state, "as_array") else np.asarray(state, dtype=float)
    if y.shape != (dim,):
        raise ValueError(f"expected a {dim}-component state, got shape {y.shape}")
    return y.astype(float)


# --- chart conversions -------------------------------------------------------

def cart_to_cyl(state) -> np.ndarray:
    """Map a Cartesian phase-space point to the cylindrical chart."""
    xi, eta, zeta, p_xi, p_eta, p_zeta = _as_array(state, 6)
    r = math.hypot(eta, zeta)
    if r < 1e-12:
        raise AxisSingularity(f"cylindrical chart undefined at r = {r:.3e}")
    theta = math.atan2(zeta, eta) % _TWO_PI
    P_r = (eta * p_eta + zeta * p_zeta) / r
    P_theta = eta * p_zeta - zeta * p_eta
    return np.array([r, theta, xi, P_r, P_theta, p_xi])


def cyl_to_cart(state) -> np.ndarray:
    """Map a cylindrical phase-space point to the Cartesian chart."""
    r, theta, x, P_r, P_theta, P_x = _as_array(state, 6)
    if r <= 0:
        raise AxisSingularity(f"cylindrical chart requires r > 0, got r = {r}")
    ct, st = math.cos(theta), math.sin(theta)
    return np.array(
        [x, r * ct, r * st, P_x, P_r * ct - P_theta / r * st, P_r * st + P_theta / r * ct]
    )


def reduced_to_cyl(state, c: float, theta: float = 0.0) -> np.ndarray:
    r, x, P_r, P_x = _as_array(state, 4)
    return np.array([r, theta % _TWO_PI, x, P_r, c, P_x])


def cyl_to_reduced(state) -> tuple[np.ndarray, float]:
    """Drop the cyclic pair; returns (reduced state, c)."""
    r, _, x, P_r, P_theta, P_x = _as_array(state, 6)
    return np.array([r, x, P_r, P_x]), P_theta


# --- equations of motion -----------------------------------------------------

def eom_cartesian(state, A: float) -> np.ndarray:
    """Right-hand side of the flow in the Cartesian chart."""
    xi, eta, zeta, p_xi, p_eta, p_zeta = _as_array(state, 6)
    f_xi, f_eta, f_zeta = _force_terms(xi, eta, zeta, A)
    return np.array([p_xi, p_eta, p_zeta, f_xi, f_eta, f_zeta])


def eom_cylindrical(state, A: float) -> np.ndarray:
    """Right-hand side in the cylindrical chart; P_theta is conserved exactly."""
    r, _, x, P_r, P_theta, P_x = _as_array(state, 6)
    if r <= AXIS_RADIUS:
        if P_theta != 0.0:
            raise AxisSingularity(f"r = {r:.3e} with P_theta = {P_theta}")
        if r <= 0.0:
            raise AxisSingularity(f"cylindrical chart requires r > 0, got r = {r}")
    f_r, f_x = _force_terms_cyl(r, x, A)
    return np.array(
        [P_r, P_theta / r**2, P_x, P_theta**2 / r**3 + f_r, 0.0, f_x]
    )


def eom_reduced(state, A: float, c: float) -> np.ndarray:
    """Right-hand side of the reduced (r, x, P_r, P_x) system at fixed c."""
    r, x, P_r, P_x = _as_array(state, 4)
    if r <= AXIS_RADIUS:
        if c != 0.0:
            raise AxisSingularity(f"r = {r:.3e} with c = {c}")
        if r <= 0.0:
            raise AxisSingularity(f"reduced chart requires r > 0, got r = {r}")
    f_r, f_x = _force_terms_cyl(r, x, A)
    return np.array([P_r, P_x, c**2 / r**3 + f_r, f_x])


def energy(state, A: float, chart: str = "cartesian", c: float | None = None) -> float:
    """Hamiltonian (kinetic + potential) of a state in the given chart."""
    if chart == "cartesian":
        xi, eta, zeta, p_xi, p_eta, p_zeta = _as_array(state, 6)
        s, d, _, _ = _sd_terms(xi, eta, zeta, A)
        kinetic = 0.5 * (p_xi**2 + p_eta**2 + p_zeta**2)
    elif chart == "cylindrical":
        r, _, x, P_r, P_theta, P_x = _as_array(state, 6)
        s, d, _, _ = _sd_terms(x, r, 0.0, A)
        centrifugal = 0.0 if P_theta == 0.0 else P_theta**2 / r**2
        kinetic = 0.5 * (P_r**2 + P_x**2 + centrifugal)
    elif chart == "reduced":
        if c is None:
            raise ValueError("reduced-chart energy needs the angular momentum c")
        r, x, P_r, P_x = _as_array(state, 4)
        s, d, _, _ = _sd_terms(x, r, 0.0, A)
        centrifugal = 0.0 if c == 0.0 else c**2 / r**2
        kinetic = 0.5 * (P_r**2 + P_x**2 + centrifugal)
    else:
        raise ValueError(f"chart must be one of {CHARTS}, got {chart!r}")
    if s - 2.0 <= 0.0:
        raise OnSegment(f"state lies on the segment (s - 2 = {s - 2.0:.3e})")
    return kinetic + potential_sd(s, d, A)


# --- propagation -------------------------------------------------------------

@dataclass
class EventSpec:
    """Scalar event g(t, y) located on the dense output when it crosses zero.

    direction: +1 only rising crossings, -1 only falling, 0 both.
    terminal:  stop at the first occurrence.
    count:     stop after this many occurrences (records all of them).
    """

    fn: Callable[[float, np.ndarray], float]
    name: str
    direction: int = 0
    terminal: bool = False
    count: int | None = None


@dataclass
class Trajectory:
    """Propagation result: samples, per-sample energy, and termination cause."""

    chart: str
    A: float
    c: float | None
    t: np.ndarray
    states: np.ndarray
    energy: np.ndarray
    termination: str  # completed | collision | escape | max_steps
    nsteps: int
    events: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    dense: OdeSolution | None = None
    #: chart of `dense`/event states ("planar" when a c = 0 cylindrical or
    #: reduced run was rerouted through the meridian-plane Cartesian chart)
    _internal_chart: str = ""

    @property
    def initial_state(self) -> np.ndarray:
        return self.states[0]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _make_rhs(chart: str, A: float, c: float | None):
    """Fast scalar RHS for the propagator, plus s(y) for collision/escape."""
    if chart == "cartesian":
        def rhs(t, y):
            f_xi, f_eta, f_zeta = _force_terms(y[0], y[1], y[2], A)
            return (y[3], y[4], y[5], f_xi, f_eta, f_zeta)

        def s_of(y):
            return _sd_terms(y[0], y[1], y[2], A)[0]

        return rhs, s_of, 6
    if chart == "cylindrical":
        def rhs(t, y):
            r = y[0]
            f_r, f_x = _force_terms_cyl(r, y[2], A)
            pth = y[4]
            return (y[3], pth / (r * r), y[5], pth * pth / (r * r * r) + f_r, 0.0, f_x)

        def s_of(y):
            return _sd_terms(y[2], y[0], 0.0, A)[0]

        return rhs, s_of, 6
    if chart == "reduced":
        c2 = float(c) ** 2

        def rhs(t, y):
            r = y[0]
            f_r, f_x = _force_terms_cyl(r, y[1], A)
            return (y[2], y[3], c2 / (r * r * r) + f_r, f_x)

        def s_of(y):
            return _sd_terms(y[1], y[0], 0.0, A)[0]

        return rhs, s_of, 4
    if chart == "planar":
        # meridian half-plane pair (x, w) with signed transverse coordinate w;
        # used internally for c = 0 runs so the axis w = 0 is regular
        def rhs(t, y):
            f_x, f_w = _force_terms(y[0], y[1], 0.0, A)[:2]
            return (y[2], y[3], f_x, f_w)

        def s_of(y):
            return _sd_terms(y[0], y[1], 0.0, A)[0]

        return rhs, s_of, 4
    raise ValueError(f"chart must be one of {CHARTS}, got {chart!r}")


def _locate_event(g, t_lo, t_hi):
    """Root of a scalar function bracketed on [t_lo, t_hi]."""
    return brentq(g, t_lo, t_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)


# interior checkpoints per step guard against double crossings inside one step
_CHECK_FRACTIONS = (0.25, 0.5, 0.75)


def propagate(
    state0,
    A: float,
    t_span: tuple[float, float],
    *,
    chart: str = "cartesian",
    c: float | None = None,
    rtol: float = 1e-12,
    atol: float = 1e-12,
    max_steps: int = 10_000_000,
    sample_dt: float | None = None,
    events: Sequence[EventSpec] = (),
    collision_s_tol: float = COLLISION_S_TOL,
    escape_radius: float = ESCAPE_RADIUS,
    store_dense: bool = False,
    first_step: float | None = None,
) -> Trajectory:
    """Propagate an initial state, with event location and termination.

    Parameters
    ----------
    state0 : state dataclass or array
        Initial condition in ``chart`` layout.
    A : float
        Dimensionless density slope.
    t_span : (t0, tf)
        Forward integration window, tf > t0.
    chart : {"cartesian", "cylindrical", "reduced"}
        Chart of the initial condition, samples and events.  ``reduced``
        (and a cylindrical run) needs ``c``; with c = 0 the integration is
        rerouted through the meridian-plane Cartesian chart so that axis
        crossings (r -> 0) stay regular, and mapped back for output.
    rtol, atol : float
        Local error tolerances, in [1e-14, 1e-3].
    max_steps : int
        Step budget; exceeding it terminates with ``max_steps``.
    sample_dt : float or None
        Output stride (dense samples); None stores every accepted step.
    events : sequence of EventSpec
        Extra events; occurrences are recorded in ``Trajectory.events``.
    collision_s_tol, escape_radius : float
        Termination thresholds on s - 2 and s.
    store_dense : bool
        Keep the full dense interpolant (needed for reconstruction).

    Relative energy drift stays below ~1e3 * rtol over the run for bounded
    trajectories; the test suite pins this down empirically.
    """
    if not (1e-14 <= rtol <= 1e-3) or not (1e-14 <= atol <= 1e-3):
        raise ValueError("tolerances must lie in [1e-14, 1e-3]")
    t0, tf = float(t_span[0]), float(t_span[1])
    if not tf > t0:
        raise ValueError("t_span must be increasing")
    if chart not in CHARTS:
        raise ValueError(f"chart must be one of {CHARTS}, got {chart!r}")
    if chart == "reduced" and c is None:
        raise ValueError("reduced chart requires the angular momentum c")

    y0 = _as_array(state0, 4 if chart == "reduced" else 6)
    if chart == "cylindrical":
        c = float(y0[4])

    # c = 0 cylindrical/reduced runs integrate in the signed half-plane pair
    internal_chart = chart
    theta0 = 0.0
    if chart in ("cylindrical", "reduced") and c == 0.0:
        internal_chart = "planar"
        if chart == "cylindrical":
            theta0 = float(y0[1])
            y_int = np.array([y0[2], y0[0], y0[5], y0[3]])  # (x, w, P_x, P_w)
        else:
            y_int = np.array([y0[1], y0[0], y0[3], y0[2]])
    else:
        y_int = y0.copy()

    def to_chart(y):
        """Internal layout back to the requested chart."""
        if internal_chart == chart:
            return np.asarray(y, dtype=float)
        x, w, P_x, P_w = y
        r = abs(w)
        sign = 1.0 if w >= 0 else -1.0
        if chart == "reduced":
            return np.array([r, x, sign * P_w, P_x])
        theta = theta0 if w >= 0 else (theta0 + math.pi) % _TWO_PI
        return np.array([r, theta, x, sign * P_w, 0.0, P_x])

    rhs, s_of, dim = _make_rhs(internal_chart, A, c)
    if s_of(y_int) - 2.0 <= collision_s_tol:
        raise OnSegment("initial state lies on the segment")

    # user event functions always see the requested chart layout
    if internal_chart != chart:
        def _wrap(ev: EventSpec) -> EventSpec:
            fn = ev.fn
            return EventSpec(lambda t, y: fn(t, to_chart(y)), ev.name,
                             direction=ev.direction, terminal=ev.terminal,
                             count=ev.count)
        events = [_wrap(e) for e in events]

    # Built-in terminal events use endpoint sign checks (monotone near their
    # thresholds); user events additionally scan interior checkpoints of the
    # dense output so that pairs of crossings inside one step are not missed.
    all_events: list[EventSpec] = [
        EventSpec(lambda t, y: s_of(y) - 2.0 - collision_s_tol, "collision",
                  direction=-1, terminal=True),
        EventSpec(lambda t, y: s_of(y) - escape_radius, "escape",
                  direction=+1, terminal=True),
        *events,
    ]
    n_builtin = 2
    records: dict[str, list[tuple[float, np.ndarray]]] = {e.name: [] for e in events}
    counts = {e.name: 0 for e in all_events}

    solver = DOP853(rhs, t0, y_int, tf, rtol=rtol, atol=atol,
                    first_step=first_step)
    interpolants: list = []
    dense_ts: list[float] = [t0]

    ts: list[float] = [t0]
    ys: list[np.ndarray] = [to_chart(y_int)]
    next_sample = t0 + sample_dt if sample_dt is not None else None

    g_prev = [e.fn(t0, y_int) for e in all_events]
    termination = "completed"
    nsteps = 0
    t_stop = None
    y_stop = None

    while solver.status == "running":
        if nsteps >= max_steps:
            termination = "max_steps"
            break
        solver.step()
        nsteps += 1
        if solver.status == "failed":
            if s_of(solver.y) - 2.0 < 1e-6:
                termination = "collision"
                t_stop, y_stop = solver.t, solver.y.copy()
                break
            raise StepSizeUnderflow(
                f"step size underflow at t = {solver.t:.6g} away from the segment"
            )
        t_old, t_new = solver.t_old, solver.t
        dense = None
        if len(all_events) > n_builtin or store_dense:
            dense = solver.dense_output()

        g_new = [e.fn(t_new, solver.y) for e in all_events]
        hits: list[tuple[float, int]] = []
        for i, e in enumerate(all_events):
            if i < n_builtin or dense is None:
                grid = [(t_old, g_prev[i]), (t_new, g_new[i])]
            else:
                grid = [(t_old, g_prev[i])]
                for f in _CHECK_FRACTIONS:
                    tc = t_old + f * (t_new - t_old)
                    grid.append((tc, e.fn(tc, dense(tc))))
                grid.append((t_new, g_new[i]))
            for (ta, ga), (tb, gb) in zip(grid, grid[1:]):
                if ga == 0.0 or ga * gb >= 0.0:
                    continue
                rising = gb > ga
                if (e.direction == +1 and not rising) or (e.direction == -1 and rising):
                    continue
                if dense is None:
                    dense = solver.dense_output()
                fn = e.fn
                t_ev = _locate_event(lambda tt: fn(tt, dense(tt)), ta, tb)
                hits.append((t_ev, i))
        hits.sort()

        stop_here = False
        for t_ev, i in hits:
            e = all_events[i]
            y_ev = np.asarray(dense(t_ev))
            counts[e.name] += 1
            if e.name in records:
                records[e.name].append((t_ev, to_chart(y_ev)))
            if e.terminal or (e.count is not None and counts[e.name] >= e.count):
                termination = e.name if e.name in ("collision", "escape") else "completed"
                t_stop, y_stop = t_ev, y_ev
                stop_here = True
                break

        t_limit = t_stop if stop_here else t_new
        if sample_dt is not None:
            while next_sample is not None and next_sample <= t_limit + 1e-15 * abs(t_limit):
                if dense is None:
                    dense = solver.dense_output()
                ts.append(next_sample)
                ys.append(to_chart(dense(next_sample)))
                next_sample += sample_dt
        elif not stop_here:
            ts.append(t_new)
            ys.append(to_chart(solver.y))

        if store_dense:
            interpolants.append(dense)
            dense_ts.append(t_new)

        if stop_here:
            break
        g_prev = g_new

    if t_stop is None:  # step budget, tf reached, or solver finished
        t_stop, y_stop = solver.t, solver.y.copy()

    if not ts or ts[-1] < t_stop - 1e-15 * max(1.0, abs(t_stop)):
        ts.append(t_stop)
        ys.append(to_chart(y_stop))

    t_arr = np.asarray(ts)
    y_arr = np.vstack(ys)
    energies = np.array([energy(y, A, chart, c=c) for y in y_arr])

    dense_sol = None
    if store_dense and interpolants:
        dense_sol = OdeSolution(np.asarray(dense_ts), interpolants)

    ev_out = {
        name: (
            np.array([t for t, _ in recs]),
            np.vstack([y for _, y in recs]) if recs else np.empty((0, y_arr.shape[1])),
        )
        for name, recs in records.items()
    }
    return Trajectory(
        chart=chart,
        A=A,
        c=c,
        t=t_arr,
        states=y_arr,
        energy=energies,
        termination=termination,
        nsteps=nsteps,
        events=ev_out,
        dense=dense_sol,
        _internal_chart=internal_chart,
    )


# --- CSV export ---------------------------------------------------------------

_CSV_HEADERS = {
    "cylindrical": "t,r,theta,x,P_r,P_theta,P_x,energy",
    "cartesian": "t,xi,eta,zeta,p_xi,p_eta,p_zeta,energy",
}


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Write a trajectory as CSV with 17 significant digits."""
    if traj.chart not in _CSV_HEADERS:
        raise ValueError(f"CSV export defined for charts {tuple(_CSV_HEADERS)}, "
                         f"got {traj.chart!r}")
    with open(path, "w") as fh:
        fh.write(_CSV_HEADERS[traj.chart] + "\n")
        for t, y, h in zip(traj.t, traj.states, traj.energy):
            row = [t, *y, h]
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
