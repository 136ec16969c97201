"""Circular-orbit family of the reduced flow.

A circular orbit is a relative equilibrium of the reduced (r, x) system:
the radial and axial force balances written in the (s, d) chart are

    F1(s, d; A, c) = (d^2-4)^2 (s^2-4) (3 A d + s) + 16 c^2 (d^2 - s^2),
    F2(s, d; A)    = 3 A s + d + (3/4) A (d^2 - s^2) ln((s+2)/(s-2)),

whose common roots give the orbit radius r = sqrt((s^2-4)(4-d^2))/4 and
axial offset x = -A - d s / 4.  For A = 0 the root is d = 0 together with
s0(c) = (c^2 + sqrt(c^4 + 16))/2; for A > 0, F2 is quadratic in d and its
admissible branch d_plus(s; A) lies in (0, 2).

Solving F1 = 0 for the angular momentum gives

    |c| = (4 - d^2)/4 * sqrt((s^2-4)(3 A d + s)/(s^2 - d^2)),

with the prefactor (4 - d^2)/4; the test suite pins this against the
A = 0 relation c^2 = (s^2-4)/s and against direct substitution into F1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation, NewtonDiverged, ZeroAngularMomentum

#: Newton stops at this residual unless the natural round-off floor of the
#: residual magnitudes is larger (F1 grows like s^3 c^2).
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


@dataclass(frozen=True)
class CircularOrbit:
    """One member of the circular-orbit family (prograde: c_star > 0)."""

    A: float
    s_star: float
    d_star: float
    c_star: float
    r_star: float
    x_star: float
    T: float
    residuals: tuple[float, float]


def _log_ratio(s: float) -> float:
    """ln((s+2)/(s-2)), stable also for large s."""
    return math.log1p(4.0 / (s - 2.0))


def _check_sd(s: float, d: float) -> None:
    if not s > 2.0:
        raise DomainViolation(f"s must exceed 2, got s = {s}")
    if not -2.0 < d < 2.0:
        raise DomainViolation(f"d must lie in (-2, 2), got d = {d}")


def residuals(s: float, d: float, A: float, c: float) -> tuple[float, float]:
    """Force-balance residuals (F1, F2) at (s, d)."""
    _check_sd(s, d)
    lam = _log_ratio(s)
    F1 = (d * d - 4.0) ** 2 * (s * s - 4.0) * (3.0 * A * d + s) + 16.0 * c * c * (d * d - s * s)
    F2 = 3.0 * A * s + d + 0.75 * A * (d * d - s * s) * lam
    return F1, F2


def residuals_jacobian(s: float, d: float, A: float, c: float) -> np.ndarray:
    """Analytic 2x2 Jacobian d(F1, F2)/d(s, d)."""
    _check_sd(s, d)
    lam = _log_ratio(s)
    d24 = d * d - 4.0
    s24 = s * s - 4.0
    dF1_ds = d24**2 * (2.0 * s * (3.0 * A * d + s) + s24) - 32.0 * c * c * s
    dF1_dd = (
        4.0 * d * d24 * s24 * (3.0 * A * d + s)
        + 3.0 * A * d24**2 * s24
        + 32.0 * c * c * d
    )
    # d(lam)/ds = -4/(s^2-4)
    dF2_ds = 3.0 * A - 1.5 * A * s * lam - 3.0 * A * (d * d - s * s) / s24
    dF2_dd = 1.0 + 1.5 * A * d * lam
    return np.array([[dF1_ds, dF1_dd], [dF2_ds, dF2_dd]])


def s0_for_c(c: float) -> float:
    """Root of s^2 - c^2 s - 4 = 0 above 2: the A = 0 circular-orbit locus."""
    if c == 0.0:
        raise ZeroAngularMomentum("s0 undefined for c = 0 (collision limit)")
    c2 = c * c
    return 0.5 * (c2 + math.sqrt(c2 * c2 + 16.0))


def d_branches(s: float, A: float) -> tuple[float, float]:
    """Both roots of F2 = 0 viewed as a quadratic in d.

    Returns (d_plus, d_minus).  d_plus lies in (0, 2) and is the physical
    branch; d_minus falls below -2.  The plus branch is computed in a
    cancellation-free form, d_plus = 3 A s (s L - 4)/(2 + sqrt(4 + delta))
    with delta = 9 A^2 s L (s L - 4) and L the log ratio, which stays
    accurate as s grows and d_plus -> 0.
    """
    if not s > 2.0:
        raise DomainViolation(f"s must exceed 2, got s = {s}")
    if not 0.0 < A < 1.0 / 3.0:
        raise DomainViolation(f"d branches need 0 < A < 1/3, got A = {A}")
    lam = _log_ratio(s)
    slam = s * lam  # > 4 for every s > 2
    delta = 9.0 * A * A * slam * (slam - 4.0)
    root = math.sqrt(4.0 + delta)
    d_plus = 3.0 * A * s * (slam - 4.0) / (2.0 + root)
    d_minus = -(2.0 + root) / (3.0 * A * lam)
    return d_plus, d_minus


def c_star(s: float, d: float, A: float) -> float:
    """Angular momentum making (s, d) a radial equilibrium (F1 = 0)."""
    _check_sd(s, d)
    return (4.0 - d * d) / 4.0 * math.sqrt(
        (s * s - 4.0) * (3.0 * A * d + s) / (s * s - d * d)
    )


def sd_to_rx(s: float, d: float, A: float) -> tuple[float, float]:
    """Cylindrical (r, x) of an (s, d) pair; inverse of rx_to_sd."""
    _check_sd(s, d)
    r = 0.25 * math.sqrt((s * s - 4.0) * (4.0 - d * d))
    x = -A - d * s / 4.0
    return r, x


def rx_to_sd(r: float, x: float, A: float) -> tuple[float, float]:
    """(s, d) of a point in the meridian half-plane r > 0."""
    if not r > 0.0:
        raise DomainViolation(f"r must be positive, got r = {r}")
    r1 = math.hypot(A + x - 1.0, r)
    r2 = math.hypot(A + x + 1.0, r)
    return r1 + r2, r1 - r2


def _residual_floor(s: float, d: float, A: float, c: float) -> float:
    """Round-off scale of F1 (F2 is O(1) throughout the family domain)."""
    mag = (d * d + 4.0) ** 2 * (s * s + 4.0) * (3.0 * A * abs(d) + s) \
        + 16.0 * c * c * (d * d + s * s)
    return 16.0 * np.finfo(float).eps * mag


def refine_circular(
    s: float, d: float, A: float, c: float,
    tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER,
) -> tuple[float, float, tuple[float, float]]:
    """Newton-polish a circular-orbit root of (F1, F2) at fixed (A, c).

    Uses the analytic Jacobian with step halving to stay inside
    {s > 2, |d| < 2}.  Returns (s, d, (F1, F2)); raises NewtonDiverged if
    the residual cannot be brought to ``tol`` (or its round-off floor).
    """
    fl = max(tol, _residual_floor(s, d, A, c))
    F = residuals(s, d, A, c)
    best = (abs(F[0]) + abs(F[1]), s, d, F)
    for _ in range(max_iter):
        if max(abs(F[0]), abs(F[1])) <= fl:
            return s, d, F
        J = residuals_jacobian(s, d, A, c)
        try:
            step = np.linalg.solve(J, -np.array(F))
        except np.linalg.LinAlgError as exc:
            raise NewtonDiverged(f"singular Jacobian at (s, d) = ({s}, {d})") from exc
        scale = 1.0
        for _ in range(60):
            s_new, d_new = s + scale * step[0], d + scale * step[1]
            if s_new > 2.0 and -2.0 < d_new < 2.0:
                F_new = residuals(s_new, d_new, A, c)
                if abs(F_new[0]) + abs(F_new[1]) < best[0] or scale < 1e-6:
                    break
            scale *= 0.5
        else:
            raise NewtonDiverged("step-halving failed to find an admissible point")
        s, d, F = s_new, d_new, F_new
        if abs(F[0]) + abs(F[1]) < best[0]:
            best = (abs(F[0]) + abs(F[1]), s, d, F)
        fl = max(tol, _residual_floor(s, d, A, c))
    s, d, F = best[1], best[2], best[3]
    if max(abs(F[0]), abs(F[1])) <= max(tol, _residual_floor(s, d, A, c)):
        return s, d, F
    raise NewtonDiverged(
        f"residuals ({F[0]:.3e}, {F[1]:.3e}) above tolerance after {max_iter} iterations"
    )


def solve_circular(s_star: float, A: float) -> CircularOrbit:
    """Family member at fixed s_star.

    d_star is the admissible F2 branch (identically 0 for A = 0), c_star
    solves F1 = 0, and a Newton polish pushes both residuals to round-off
    before the orbit data (r, x, period) is assembled.
    """
    if not s_star > 2.0:
        raise DomainViolation(f"s_star must exceed 2, got {s_star}")
    if not 0.0 <= A < 1.0 / 3.0:
        raise DomainViolation(f"A must lie in [0, 1/3), got {A}")
    if A == 0.0:
        s, d = s_star, 0.0
        c = math.sqrt((s * s - 4.0) / s)
        F = residuals(s, d, A, c)
    else:
        d = d_branches(s_star, A)[0]
        c = c_star(s_star, d, A)
        s, d, F = refine_circular(s_star, d, A, c)
    r, x = sd_to_rx(s, d, A)
    return CircularOrbit(
        A=A, s_star=s, d_star=d, c_star=c, r_star=r, x_star=x,
        T=2.0 * math.pi * r * r / c, residuals=(abs(F[0]), abs(F[1])),
    )


def solve_circular_for_c(c: float, A: float, s_seed: float | None = None) -> CircularOrbit:
    """Family member at fixed angular momentum: 1-D Newton over s_star.

    The iteration solves c_star(s, d_plus(s; A), A) = c with a secant
    derivative, seeded at the A = 0 locus s0(c) unless ``s_seed`` is given.
    """
    if c == 0.0:
        raise ZeroAngularMomentum("no circular orbit for c = 0")
    c = abs(c)
    if A == 0.0:
        orbit = solve_circular(s0_for_c(c), A)
        # replace by the exact requested c (s0 already solves it)
        return orbit
    s = s_seed if s_seed is not None else s0_for_c(c)

    def g(sv: float) -> float:
        return c_star(sv, d_branches(sv, A)[0], A) - c

    h = 1e-7
    for _ in range(100):
        gv = g(s)
        if abs(gv) <= 1e-13 * max(1.0, c):
            break
        dg = (g(s + h * max(1.0, abs(s))) - g(s - h * max(1.0, abs(s)))) / (
            2.0 * h * max(1.0, abs(s))
        )
        step = -gv / dg
        s_new = s + step
        while not s_new > 2.0:
            step *= 0.5
            s_new = s + step
        s = s_new
    else:
        raise NewtonDiverged(f"by-c solve did not converge for c = {c}, A = {A}")
    return solve_circular(s, A)


def d_linear_coeff(c: float) -> float:
    """Leading-order axial-asymmetry coefficient d'(0) of the family at fixed c.

    d(A) = d'(0) A + O(A^2) with
    d'(0) = (3 x / 16) [x ln((x+4)/(x-4)) - 8],  x = sqrt(c^4 + 16) + c^2;
    positive for every c != 0 and decaying to 0 as |c| grows.
    """
    if c == 0.0:
        raise ZeroAngularMomentum("d'(0) undefined for c = 0")
    c2 = c * c
    x = math.sqrt(c2 * c2 + 16.0) + c2
    return 3.0 * x / 16.0 * (x * math.log1p(8.0 / (x - 4.0)) - 8.0)


def family_sweep(s_values, A: float) -> list[CircularOrbit]:
    """Family members over a grid of s_star values, in grid order."""
    return [solve_circular(float(s), A) for s in s_values]


def write_family_csv(orbits, path) -> None:
    """CSV export of a family sweep, 17 significant digits."""
    with open(path, "w") as fh:
        fh.write("A,s,d,c,r,x,T,res_F1,res_F2\n")
        for o in orbits:
            row = [o.A, o.s_star, o.d_star, o.c_star, o.r_star, o.x_star, o.T,
                   o.residuals[0], o.residuals[1]]
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
