"""Physical segment parameters and the dimensionless chart.

The body is a straight segment of half-length L and total mass M whose
linear mass density varies affinely along the axis, sigma(x) = alpha*x +
beta for x in [-L, L].  For the density to stay positive, beta = M/(2L) is
forced and |alpha| must stay below M/(2L^2).

All dynamics downstream of this module is computed in a dimensionless
chart with half-length 1 in which only one parameter survives, the slope
number A in [0, 1/3).  The chart places the segment on xi in [-1-A, 1-A];
negative alpha is folded into A >= 0 by reflecting the axial coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveDimension, SlopeOutOfRange

TO_SCALED = "to_scaled"
TO_PHYSICAL = "to_physical"

#: Supported length-unit conventions for user-facing inputs/outputs.
#: "L" is the native chart (half-length = 1 unit).  "2L" takes the full
#: segment length as the unit (half-length = 1/2), the convention common
#: in constant-density studies.  Both share the same momentum and energy
#: scale; lengths, times and angular momenta differ by a factor 2.
UNIT_CHOICES = ("L", "2L")


@dataclass(frozen=True)
class SegmentParams:
    """Physical parameters of the segment (any consistent unit system).

    beta is derived from M and L, never free, so every instance describes
    a realizable density.
    """

    G: float
    M: float
    L: float
    alpha: float

    def __post_init__(self):
        if self.L <= 0 or self.M <= 0 or self.G <= 0:
            raise NonPositiveDimension(
                f"G, M, L must be > 0, got G={self.G}, M={self.M}, L={self.L}"
            )
        bound = self.M / (2.0 * self.L**2)
        if not -bound < self.alpha < bound:
            raise SlopeOutOfRange(
                f"|alpha| must be < M/(2L^2) = {bound}, got alpha={self.alpha}"
            )

    @property
    def beta(self) -> float:
        """Density intercept, fixed by the total mass: beta = M/(2L)."""
        return self.M / (2.0 * self.L)

    @property
    def center_of_mass(self) -> float:
        """Axial offset of the center of mass from the segment midpoint."""
        return 2.0 * self.alpha * self.L**3 / (3.0 * self.M)

    def density(self, x: float) -> float:
        """Linear density at axial position x (midpoint chart)."""
        return self.alpha * x + self.beta


@dataclass(frozen=True)
class ScaledParams:
    """Dimensionless model parameter plus the scale factors to undo it.

    A is the dimensionless density slope; lengths divide by length_scale,
    momenta (per unit particle mass) by momentum_scale and times by
    time_scale when passing to the dimensionless chart.  ``reflected``
    records that the axial coordinate was flipped to make A nonnegative.
    G is kept so the physical parameter set can be recovered exactly.
    """

    A: float
    length_scale: float
    momentum_scale: float
    time_scale: float
    reflected: bool
    G: float


def derive_segment(alpha: float, M: float, L: float, G: float) -> SegmentParams:
    """Validate and build the physical parameter set.

    Raises NonPositiveDimension / SlopeOutOfRange for inadmissible input.
    """
    return SegmentParams(G=G, M=M, L=L, alpha=alpha)


def to_scaled(params: SegmentParams) -> ScaledParams:
    """Dimensionless parameters for a physical segment.

    A = 2|alpha|L^2/(3M) in [0, 1/3); a negative slope is handled by
    reflecting the axial coordinate (recorded in ``reflected``).

    The time scale is sqrt(2 L^3 / (G M)): with lengths divided by L and
    momenta by sqrt(GM/2L) it is the unique reparametrization under which
    the dimensionless equations of motion are again canonical with
    Hamiltonian |P|^2/2 + U.
    """
    A = 2.0 * abs(params.alpha) * params.L**2 / (3.0 * params.M)
    gm = params.G * params.M
    return ScaledParams(
        A=A,
        length_scale=params.L,
        momentum_scale=math.sqrt(gm / (2.0 * params.L)),
        time_scale=math.sqrt(2.0 * params.L**3 / gm),
        reflected=params.alpha < 0,
        G=params.G,
    )


def from_scaled(scaled: ScaledParams) -> SegmentParams:
    """Invert to_scaled (exact up to round-off)."""
    L = scaled.length_scale
    M = 2.0 * L * scaled.momentum_scale**2 / scaled.G
    alpha = 3.0 * M * scaled.A / (2.0 * L**2)
    if scaled.reflected:
        alpha = -alpha
    return SegmentParams(G=scaled.G, M=M, L=L, alpha=alpha)


def map_state(state, scaled: ScaledParams, direction: str) -> np.ndarray:
    """Convert a Cartesian phase-space point between physical and scaled charts.

    ``state`` is (q1, q2, q3, p1, p2, p3); positions divide by the length
    scale and momenta by the momentum scale (to_scaled), or multiply back
    (to_physical).  For reflected parameter sets the axial position and
    momentum change sign, which is an involution, so composing both
    directions is the identity either way.
    """
    s = np.asarray(state, dtype=float)
    if s.shape != (6,):
        raise ValueError(f"expected a 6-component state, got shape {s.shape}")
    out = s.copy()
    if direction == TO_SCALED:
        out[:3] /= scaled.length_scale
        out[3:] /= scaled.momentum_scale
    elif direction == TO_PHYSICAL:
        out[:3] *= scaled.length_scale
        out[3:] *= scaled.momentum_scale
    else:
        raise ValueError(f"direction must be {TO_SCALED!r} or {TO_PHYSICAL!r}")
    if scaled.reflected:
        out[0] = -out[0]
        out[3] = -out[3]
    return out


def map_time(t: float, scaled: ScaledParams, direction: str) -> float:
    """Convert a time (or duration) between physical and scaled charts."""
    if direction == TO_SCALED:
        return t / scaled.time_scale
    if direction == TO_PHYSICAL:
        return t * scaled.time_scale
    raise ValueError(f"direction must be {TO_SCALED!r} or {TO_PHYSICAL!r}")


def units_length_factor(units: str) -> float:
    """Lengths expressed in ``units`` times this factor give native-chart lengths.

    The native chart uses the half-length as length unit ("L"); the "2L"
    convention uses the full segment length.  Times and angular momenta
    carry the same factor; momenta and energies are shared between the
    two charts.
    """
    try:
        return {"L": 1.0, "2L": 2.0}[units]
    except KeyError:
        raise ValueError(f"units must be one of {UNIT_CHOICES}, got {units!r}") from None
