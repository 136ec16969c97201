"""Closed-form potential of the linear-density segment and its gradient.

Everything here is expressed through the auxiliary pair

    s = R1 + R2,   d = R1 - R2,

the sum and difference of the distances from the field point to the two
segment end points (R1 to the end at xi = 1 - A, R2 to the end at
xi = -1 - A).  Off the segment s > 2 and |d| <= 2; the segment itself is
the collision set s = 2 where the potential diverges.

The dimensionless potential is

    U(s, d; A) = 3 A d - (3 A d s + 4)/4 * ln((s+2)/(s-2)),

and the force components implemented below are the analytic gradient of
this expression; the test suite cross-checks them against central finite
differences of U and the closed form against direct quadrature of the
defining line integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import OnSegment, QuadratureNotConverged
from .params import SegmentParams

#: Width of the numerical collision set, measured on s - 2.  The log term
#: overflows double precision long before this threshold matters.
COLLISION_EPS = 1e-12


@dataclass(frozen=True)
class AuxSD:
    """End-point distance sum/difference chart at one field point."""

    s: float
    d: float
    r1: float
    r2: float


def _sd_terms(xi: float, eta: float, zeta: float, A: float):
    """(s, d, r1, r2) without validation; hot path for the flow RHS."""
    rho2 = eta * eta + zeta * zeta
    r1 = math.sqrt((xi - 1.0 + A) ** 2 + rho2)
    r2 = math.sqrt((xi + 1.0 + A) ** 2 + rho2)
    return r1 + r2, r1 - r2, r1, r2


def aux_sd(q, A: float, collision_eps: float = COLLISION_EPS) -> AuxSD:
    """Auxiliary (s, d) coordinates of a scaled position.

    Raises OnSegment when the point is within ``collision_eps`` of the
    collision set (s - 2 <= collision_eps).
    """
    xi, eta, zeta = (float(v) for v in q)
    s, d, r1, r2 = _sd_terms(xi, eta, zeta, A)
    if s - 2.0 <= collision_eps:
        raise OnSegment(f"point lies on the segment (s - 2 = {s - 2.0:.3e})")
    return AuxSD(s=s, d=d, r1=r1, r2=r2)


def potential_sd(s: float, d: float, A: float) -> float:
    """Dimensionless potential as a function of (s, d)."""
    return 3.0 * A * d - 0.25 * (3.0 * A * d * s + 4.0) * math.log((s + 2.0) / (s - 2.0))


def potential_scaled(q, A: float, collision_eps: float = COLLISION_EPS) -> float:
    """Dimensionless potential at scaled position q = (xi, eta, zeta)."""
    aux = aux_sd(q, A, collision_eps)
    return potential_sd(aux.s, aux.d, A)


def potential_physical(p, params: SegmentParams, collision_eps: float = COLLISION_EPS) -> float:
    """Physical potential at position p = (u, v, w), center of mass at the origin.

    Closed form with c1 = 2 L alpha and c2 = beta - alpha L:

        V = c1 G/(2L) (r1 - r2)
            - G/(8 L^2) [c1 (4L^2 + r1^2 - r2^2) + 8 c2 L^2]
              * ln((2L + r1 + r2)/(-2L + r1 + r2)),

    where r1, r2 are the distances to the segment end points.  For
    alpha = 0 this is the classical constant-density segment potential.
    """
    u, v, w = (float(x) for x in p)
    L = params.L
    cbar = params.center_of_mass
    rho2 = v * v + w * w
    r1 = math.sqrt((u + cbar - L) ** 2 + rho2)
    r2 = math.sqrt((u + cbar + L) ** 2 + rho2)
    if r1 + r2 - 2.0 * L <= collision_eps * 2.0 * L:
        raise OnSegment(f"point lies on the segment (r1 + r2 - 2L = {r1 + r2 - 2 * L:.3e})")
    c1 = 2.0 * L * params.alpha
    c2 = params.beta - params.alpha * L
    G = params.G
    log_term = math.log((2.0 * L + r1 + r2) / (-2.0 * L + r1 + r2))
    return (
        c1 * G / (2.0 * L) * (r1 - r2)
        - G / (8.0 * L**2) * (c1 * (4.0 * L**2 + r1**2 - r2**2) + 8.0 * c2 * L**2) * log_term
    )


def quadrature_oracle(
    q,
    A: float,
    n_nodes: int = 64,
    error_bound: float = 1e-10,
    collision_eps: float = COLLISION_EPS,
) -> float:
    """Potential by adaptive quadrature of the defining line integral.

    The segment occupies xi' in [-1-A, 1-A]; writing v = xi' + A for the
    offset from the segment midpoint, the dimensionless mass element is
    (1 - 3 A v)/2 per unit of the segment's full length, i.e.

        U(q) = -int_{-1}^{1} (1 - 3 A v) / |q - (v - A) e_xi|  dv.

    Used only as an independent test oracle for ``potential_scaled``;
    ``n_nodes`` is the subdivision budget of the adaptive rule.

    Raises QuadratureNotConverged if the a-posteriori error estimate
    exceeds ``error_bound``.
    """
    if n_nodes < 64:
        raise ValueError("n_nodes must be >= 64")
    xi, eta, zeta = (float(v) for v in q)
    s, _, _, _ = _sd_terms(xi, eta, zeta, A)
    if s - 2.0 <= collision_eps:
        raise OnSegment(f"point lies on the segment (s - 2 = {s - 2.0:.3e})")
    rho2 = eta * eta + zeta * zeta
    axial = xi + A  # midpoint-relative axial offset of the field point

    def integrand(v):
        return (1.0 - 3.0 * A * v) / math.sqrt((axial - v) ** 2 + rho2)

    # A breakpoint under the field point helps when it hovers near the segment.
    points = [axial] if -1.0 < axial < 1.0 else None
    value, abserr = quad(
        integrand, -1.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=int(n_nodes), points=points
    )
    if abserr > error_bound:
        raise QuadratureNotConverged(f"error estimate {abserr:.3e} > {error_bound:.3e}")
    return -value


def _force_terms(xi: float, eta: float, zeta: float, A: float):
    """Cartesian force components (-grad U); hot path, no validation."""
    s, d, _, _ = _sd_terms(xi, eta, zeta, A)
    if s - 2.0 <= 0.0:
        raise OnSegment(f"point lies on the segment (s - 2 = {s - 2.0:.3e})")
    s2d2 = s * s - d * d
    s24 = s * s - 4.0
    lam = math.log((s + 2.0) / (s - 2.0))
    f_xi = 4.0 * (d + 3.0 * A * s) / s2d2 - 3.0 * A * lam
    common = 16.0 * (3.0 * A * d + s) / (s24 * s2d2)
    return f_xi, -eta * common, -zeta * common


def force_scaled(q, A: float, collision_eps: float = COLLISION_EPS) -> np.ndarray:
    """Scaled force -grad U at q = (xi, eta, zeta)."""
    xi, eta, zeta = (float(v) for v in q)
    s, _, _, _ = _sd_terms(xi, eta, zeta, A)
    if s - 2.0 <= collision_eps:
        raise OnSegment(f"point lies on the segment (s - 2 = {s - 2.0:.3e})")
    return np.array(_force_terms(xi, eta, zeta, A))


def _force_terms_cyl(r: float, x: float, A: float):
    """(F_r, F_x) in the meridian half-plane; hot path, no validation.

    F_r = -16 r (3 A d + s) / ((s^2 - d^2)(s^2 - 4)) is strictly negative
    off the segment (the numerator 3 A d + s > 0 since |d| <= 2, s > 2 and
    A < 1/3), so the radial pull is always toward the axis.
    """
    f_x, f_r, _ = _force_terms(x, r, 0.0, A)
    return f_r, f_x
