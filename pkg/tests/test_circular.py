import math

import numpy as np
import pytest

from segdyn.circular import (
    CircularOrbit,
    c_star,
    d_branches,
    d_linear_coeff,
    family_sweep,
    refine_circular,
    residuals,
    residuals_jacobian,
    rx_to_sd,
    s0_for_c,
    sd_to_rx,
    solve_circular,
    solve_circular_for_c,
    write_family_csv,
)
from segdyn.dynamics import eom_reduced, propagate
from segdyn.errors import DomainViolation, ZeroAngularMomentum


def random_sd(rng, n, s_max=30.0):
    return [(rng.uniform(2.05, s_max), rng.uniform(-1.9, 1.9)) for _ in range(n)]


# --- residuals and Jacobian --------------------------------------------------------

def test_residuals_vanish_on_constant_density_locus():
    for c in (0.5, 1.0, 2.0, 5.0):
        s0 = s0_for_c(c)
        F1, F2 = residuals(s0, 0.0, 0.0, c)
        # zero up to the round-off floor of F1's O(s^3) terms
        assert abs(F1) <= 1e-12 * max(1.0, 16.0 * s0**3)
        assert F2 == 0.0


def test_residuals_near_reference_orbit():
    F1, F2 = residuals(10.0, 0.101688, 0.25, 3.10233)
    assert abs(F1) < 1e-4 * 16 * 1000  # figure-precision inputs
    assert abs(F2) < 1e-4


def test_residuals_domain_checks():
    with pytest.raises(DomainViolation):
        residuals(1.9, 0.0, 0.1, 1.0)
    with pytest.raises(DomainViolation):
        residuals(3.0, 2.0, 0.1, 1.0)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(31)
    h = 1e-6
    for s, d in random_sd(rng, 200, s_max=15.0):
        A = rng.uniform(0.0, 0.33)
        c = rng.uniform(0.1, 3.0)
        J = residuals_jacobian(s, d, A, c)
        for j, dv in enumerate([(h, 0.0), (0.0, h)]):
            Fp = residuals(s + dv[0], d + dv[1], A, c)
            Fm = residuals(s - dv[0], d - dv[1], A, c)
            fd = (np.array(Fp) - np.array(Fm)) / (2 * h)
            np.testing.assert_allclose(J[:, j], fd, rtol=1e-5, atol=1e-4)


def test_jacobian_diagonal_at_constant_density_root():
    c = 1.0
    J = residuals_jacobian(s0_for_c(c), 0.0, 0.0, c)
    expected = 8.0 * (c**4 + math.sqrt(c**4 + 16.0) * c**2 + 16.0)
    assert J[0, 0] == pytest.approx(expected, rel=1e-8)
    assert J[1, 1] == pytest.approx(1.0, rel=1e-8)
    assert abs(J[0, 1]) < 1e-8 * expected
    assert abs(J[1, 0]) < 1e-8


# --- s0, d branches, c* --------------------------------------------------------------

def test_s0_collision_limit():
    assert s0_for_c(1e-4) - 2.0 == pytest.approx(0.0, abs=1e-7)


def test_s0_value():
    assert s0_for_c(2.0) == pytest.approx(2.0 + 2.0 * math.sqrt(2.0), rel=1e-15)


def test_s0_quadratic_identity():
    for c in (0.3, 1.0, 4.0):
        s0 = s0_for_c(c)
        assert s0 * s0 - c * c * s0 - 4.0 == pytest.approx(0.0, abs=1e-12 * s0 * s0)


def test_s0_zero_angular_momentum():
    with pytest.raises(ZeroAngularMomentum):
        s0_for_c(0.0)


def test_d_plus_reference_value():
    dp, dm = d_branches(10.0, 0.25)
    assert dp == pytest.approx(0.101688, abs=1e-5)
    assert dm < -2.0


def test_d_branch_limits():
    # d+ -> 2 (logarithmically) as s -> 2+, d+ -> 0 as s -> infinity
    A = 0.25
    vals = [d_branches(2.0 + eps, A)[0] for eps in (1e-4, 1e-8, 1e-12)]
    assert vals[0] < vals[1] < vals[2] < 2.0
    assert vals[2] > 1.8
    assert d_branches(1e3, A)[0] == pytest.approx(0.0, abs=1e-2)
    assert d_branches(1e3, A)[0] > 0.0


def test_d_minus_stays_below_minus_two():
    rng = np.random.default_rng(32)
    for _ in range(400):
        s = 10.0 ** rng.uniform(math.log10(2.001), 2)
        A = rng.uniform(1e-3, 0.333)
        dp, dm = d_branches(s, A)
        assert 0.0 < dp < 2.0
        assert dm < -2.0


def test_d_plus_solves_axial_balance():
    rng = np.random.default_rng(33)
    for _ in range(1000):
        s = rng.uniform(2.05, 30.0)
        A = rng.uniform(1e-3, 0.33)
        dp = d_branches(s, A)[0]
        assert abs(residuals(s, dp, A, 1.0)[1]) < 1e-12


def test_d_branches_domain():
    with pytest.raises(DomainViolation):
        d_branches(10.0, 0.0)
    with pytest.raises(DomainViolation):
        d_branches(1.5, 0.1)


def test_c_star_constant_density():
    for s in (3.0, 5.0, 12.0):
        assert c_star(s, 0.0, 0.0) == pytest.approx(math.sqrt((s * s - 4.0) / s), rel=1e-14)
    # at s0(c) the inversion recovers |c|
    for c in (0.5, 1.0, 2.0):
        assert c_star(s0_for_c(c), 0.0, 0.0) == pytest.approx(c, rel=1e-13)


def test_c_star_zeroes_radial_balance():
    rng = np.random.default_rng(34)
    for s, d in random_sd(rng, 1000, s_max=20.0):
        A = rng.uniform(0.0, 0.33)
        c = c_star(s, d, A)
        F1, _ = residuals(s, d, A, c)
        scale = (d * d + 4.0) ** 2 * (s * s + 4.0) * (3 * A * abs(d) + s)
        assert abs(F1) <= 1e-12 * scale


def test_printed_half_prefactor_is_wrong():
    # doubling the implemented |c*| (the other printed prefactor) breaks F1 = 0
    s, A = 10.0, 0.25
    d = d_branches(s, A)[0]
    c_impl = c_star(s, d, A)
    assert abs(residuals(s, d, A, c_impl)[0]) < 1e-6
    assert abs(residuals(s, d, A, 2.0 * c_impl)[0]) > 1.0
    # and the implemented value reproduces the reference orbit's momentum
    assert c_impl == pytest.approx(3.1023, abs=5e-4)


# --- family solver -------------------------------------------------------------------

def test_reference_family_member():
    o = solve_circular(10.0, 0.25)
    assert o.r_star == pytest.approx(4.8926, abs=5e-4)
    assert o.x_star == pytest.approx(-0.5042, abs=5e-4)
    assert o.c_star == pytest.approx(3.1023, abs=5e-4)
    assert o.T == pytest.approx(2.0 * math.pi * o.r_star**2 / o.c_star, rel=1e-15)
    assert max(o.residuals) < 1e-10


def test_constant_density_family_degeneracy():
    for s in np.linspace(2.2, 12.0, 15):
        o = solve_circular(s, 0.0)
        assert o.d_star == 0.0
        assert o.x_star == 0.0


def test_family_orbit_closes_under_propagation():
    o = solve_circular(10.0, 0.25)
    y0 = np.array([o.x_star, o.r_star, 0.0, 0.0, 0.0, o.c_star / o.r_star])
    traj = propagate(y0, 0.25, (0.0, o.T))
    np.testing.assert_allclose(traj.final_state, y0, atol=1e-6)


def test_newton_from_far_seed():
    for c in (0.5, 1.0, 2.0):
        s, d, F = refine_circular(30.0, 0.3, 0.0, c)
        assert s == pytest.approx(s0_for_c(c), abs=1e-10)
        assert abs(d) < 1e-12


def test_solve_by_angular_momentum():
    for A, c in [(0.0, 1.0), (0.25, 0.7), (0.125, 2.0)]:
        o = solve_circular_for_c(c, A)
        assert o.c_star == pytest.approx(c, rel=1e-10)
        assert max(o.residuals) < 1e-9


def test_axial_root_is_unique_in_band():
    # F2 as a function of d changes sign exactly once on (-2, 2)
    rng = np.random.default_rng(35)
    dgrid = np.linspace(-1.9999, 1.9999, 10_000)
    for _ in range(20):
        s = rng.uniform(2.05, 20.0)
        A = rng.uniform(1e-2, 0.33)
        vals = np.array([residuals(s, d, A, 1.0)[1] for d in dgrid])
        signs = np.sign(vals)
        changes = np.count_nonzero(np.diff(signs))
        assert changes == 1


def test_family_continuity():
    orbits = family_sweep(np.arange(9.0, 9.01, 1e-3), 0.25)
    for a, b in zip(orbits, orbits[1:]):
        assert abs(b.s_star - a.s_star) < 5e-3
        assert abs(b.d_star - a.d_star) < 5e-3
        assert abs(b.c_star - a.c_star) < 5e-3
        assert abs(b.r_star - a.r_star) < 5e-3
        assert abs(b.x_star - a.x_star) < 5e-3


def test_family_members_are_equilibria():
    for s in (3.0, 6.0, 10.0):
        for A in (0.05, 0.2, 0.3):
            o = solve_circular(s, A)
            dz = eom_reduced([o.r_star, o.x_star, 0.0, 0.0], A, c=o.c_star)
            assert abs(dz[2]) < 1e-9
            assert abs(dz[3]) < 1e-9


def test_solve_circular_domain():
    with pytest.raises(DomainViolation):
        solve_circular(2.0, 0.1)
    with pytest.raises(DomainViolation):
        solve_circular(5.0, 0.34)


# --- small-A expansion ----------------------------------------------------------------

def test_axial_shift_coefficient_positive():
    for c in (0.1, 0.5, 1.0, 2.0, 10.0):
        assert d_linear_coeff(c) > 0.0


def test_axial_shift_coefficient_decays():
    assert d_linear_coeff(1e3) < 1e-4
    with pytest.raises(ZeroAngularMomentum):
        d_linear_coeff(0.0)


def test_axial_shift_matches_continuation():
    c = 1.0
    A = 1e-3
    o = solve_circular_for_c(c, A)
    slope = o.d_star / A
    assert slope == pytest.approx(d_linear_coeff(c), rel=1e-2)


# --- chart maps -----------------------------------------------------------------------

def test_chart_map_simple_value():
    r, x = sd_to_rx(4.0, 0.0, 0.0)
    assert r == pytest.approx(math.sqrt(3.0), rel=1e-15)
    assert x == 0.0


def test_chart_map_round_trip():
    rng = np.random.default_rng(36)
    for s, d in random_sd(rng, 2000, s_max=50.0):
        A = rng.uniform(0.0, 0.33)
        r, x = sd_to_rx(s, d, A)
        s2, d2 = rx_to_sd(r, x, A)
        assert s2 == pytest.approx(s, rel=1e-13)
        assert d2 == pytest.approx(d, rel=1e-13, abs=1e-13)


def test_chart_map_reference_orbit():
    s, d = rx_to_sd(4.8926, -0.5042, 0.25)
    assert s == pytest.approx(10.000, abs=1e-3)
    assert d == pytest.approx(0.1017, abs=1e-3)


def test_chart_map_domain():
    with pytest.raises(DomainViolation):
        sd_to_rx(1.0, 0.0, 0.0)
    with pytest.raises(DomainViolation):
        rx_to_sd(0.0, 1.0, 0.0)


def test_family_csv(tmp_path):
    orbits = family_sweep([4.0, 6.0, 8.0], 0.125)
    path = tmp_path / "family.csv"
    write_family_csv(orbits, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "A,s,d,c,r,x,T,res_F1,res_F2"
    assert len(lines) == 4
    first = [float(v) for v in lines[1].split(",")]
    assert first[0] == 0.125
    assert first[1] == pytest.approx(orbits[0].s_star, rel=1e-16)
