import math

import numpy as np
import pytest

from segdyn.errors import NonPositiveDimension, SlopeOutOfRange
from segdyn.params import (
    TO_PHYSICAL,
    TO_SCALED,
    derive_segment,
    from_scaled,
    map_state,
    map_time,
    to_scaled,
    units_length_factor,
)
from segdyn.potential import force_scaled, potential_physical


def random_params(rng, n):
    """Valid physical parameter draws spanning several orders of magnitude."""
    out = []
    for _ in range(n):
        L = 10.0 ** rng.uniform(-2, 2)
        M = 10.0 ** rng.uniform(-2, 2)
        G = 10.0 ** rng.uniform(-1, 1)
        bound = M / (2 * L * L)
        alpha = rng.uniform(-0.999, 0.999) * bound
        out.append(derive_segment(alpha, M, L, G))
    return out


def test_homogeneous_segment():
    p = derive_segment(alpha=0.0, M=2.0, L=1.0, G=1.0)
    assert p.beta == 1.0
    assert p.center_of_mass == 0.0


def test_sloped_segment_center_of_mass():
    p = derive_segment(alpha=0.5, M=2.0, L=1.0, G=1.0)
    assert p.beta == 1.0
    assert p.center_of_mass == pytest.approx(1.0 / 6.0, rel=1e-15)


def test_slope_bound_is_open():
    # bound is M/(2 L^2) = 1 here
    with pytest.raises(SlopeOutOfRange):
        derive_segment(alpha=1.0, M=2.0, L=1.0, G=1.0)
    with pytest.raises(SlopeOutOfRange):
        derive_segment(alpha=-1.0, M=2.0, L=1.0, G=1.0)
    derive_segment(alpha=0.999, M=2.0, L=1.0, G=1.0)


@pytest.mark.parametrize("kw", [dict(L=0.0), dict(L=-1.0), dict(M=0.0), dict(G=0.0)])
def test_nonpositive_dimensions_rejected(kw):
    base = dict(alpha=0.0, M=2.0, L=1.0, G=1.0)
    base.update(kw)
    with pytest.raises(NonPositiveDimension):
        derive_segment(**base)


def test_dimensionless_slope():
    assert to_scaled(derive_segment(0.0, 2.0, 1.0, 1.0)).A == 0.0
    sc = to_scaled(derive_segment(0.5, 2.0, 1.0, 1.0))
    assert sc.A == pytest.approx(1.0 / 6.0, rel=1e-15)


def test_scaled_segment_interval():
    # the segment occupies xi in [-1-A, 1-A] after scaling
    p = derive_segment(0.5, 2.0, 1.0, 1.0)
    sc = to_scaled(p)
    left = (-p.L - p.center_of_mass) / p.L
    right = (p.L - p.center_of_mass) / p.L
    assert left == pytest.approx(-7.0 / 6.0, rel=1e-15)
    assert right == pytest.approx(5.0 / 6.0, rel=1e-15)
    assert left == pytest.approx(-1.0 - sc.A, rel=1e-14)
    assert right == pytest.approx(1.0 - sc.A, rel=1e-14)


def test_density_positive_at_ends():
    rng = np.random.default_rng(42)
    for p in random_params(rng, 2000):
        assert p.density(p.L) > 0.0
        assert p.density(-p.L) > 0.0


def test_center_of_mass_matches_A():
    rng = np.random.default_rng(7)
    for p in random_params(rng, 500):
        sc = to_scaled(p)
        assert abs(p.center_of_mass) / p.L == pytest.approx(sc.A, rel=1e-13, abs=1e-300)


def test_round_trip_parameters():
    rng = np.random.default_rng(3)
    for p in random_params(rng, 500):
        q = from_scaled(to_scaled(p))
        assert q.alpha == pytest.approx(p.alpha, rel=1e-14, abs=1e-300)
        assert q.M == pytest.approx(p.M, rel=1e-14)
        assert q.L == p.L
        assert q.G == p.G


def test_map_state_position_scaling():
    sc = to_scaled(derive_segment(0.0, 2.0, 2.0, 1.0))
    out = map_state([2.0, 0, 0, 0, 0, 0], sc, TO_SCALED)
    assert out[0] == 1.0


def test_map_state_momentum_scaling():
    # G=1, M=2, L=1 makes the momentum scale exactly 1
    sc = to_scaled(derive_segment(0.0, 2.0, 1.0, 1.0))
    assert sc.momentum_scale == 1.0
    out = map_state([0, 0, 0, 3.0, 0, 0], sc, TO_SCALED)
    assert out[3] == 3.0


def test_map_state_round_trip():
    rng = np.random.default_rng(11)
    for p in random_params(rng, 300):
        sc = to_scaled(p)
        state = rng.normal(size=6) * 10.0 ** rng.uniform(-2, 2)
        back = map_state(map_state(state, sc, TO_SCALED), sc, TO_PHYSICAL)
        np.testing.assert_allclose(back, state, rtol=1e-14, atol=0.0)
        t = rng.normal() * 100
        assert map_time(map_time(t, sc, TO_SCALED), sc, TO_PHYSICAL) == pytest.approx(
            t, rel=1e-14
        )


def test_negative_alpha_reflects_axis():
    p = derive_segment(-0.5, 2.0, 1.0, 1.0)
    sc = to_scaled(p)
    assert sc.A == pytest.approx(1.0 / 6.0, rel=1e-15)
    assert sc.reflected
    out = map_state([2.0, 0.5, 0, 1.0, 0, 0], sc, TO_SCALED)
    assert out[0] == -2.0 and out[3] == -1.0 and out[1] == 0.5
    back = map_state(out, sc, TO_PHYSICAL)
    np.testing.assert_allclose(back, [2.0, 0.5, 0, 1.0, 0, 0], rtol=1e-15)


def test_time_scale_makes_scaling_canonical():
    """The scaled force must equal the physical force under the chain rule.

    dP/dtau = (time_scale / momentum_scale) * dp/dt with dp/dt = -grad V
    evaluated by central differences of the physical potential: this pins
    the time scale sqrt(2 L^3/(G M)) (and the V <-> U consistency).
    """
    rng = np.random.default_rng(19)
    for p in random_params(rng, 25):
        if p.alpha < 0:
            continue
        sc = to_scaled(p)
        Q = rng.normal(size=3) * 2.0
        if np.hypot(Q[1], Q[2]) < 0.3:
            continue
        q = Q * p.L
        h = 1e-6 * p.L
        f_phys = np.empty(3)
        for i in range(3):
            dq = np.zeros(3)
            dq[i] = h
            f_phys[i] = -(potential_physical(q + dq, p) - potential_physical(q - dq, p)) / (2 * h)
        f_scaled = force_scaled(Q, sc.A)
        factor = sc.time_scale / sc.momentum_scale
        np.testing.assert_allclose(f_scaled, factor * f_phys, rtol=1e-6, atol=1e-9)


def test_units_factor():
    assert units_length_factor("L") == 1.0
    assert units_length_factor("2L") == 2.0
    with pytest.raises(ValueError):
        units_length_factor("3L")
