import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from gammacost.cost import (cost_H_bv, cost_H_eps, cost_H_prime_bv, cost_I_eps, cost_I_projected, dual_flux,
                            dual_pairing, entropy_production, jump_kernel_rho, plateau, tv_positive_part)
from gammacost.errors import RankineHugoniotViolation, SingularWeight, SupportViolation
from gammacost.grid import PiecewiseBVSolution, Shock, SpaceTimeField, SpaceTimeGrid, rasterize, staircase
from gammacost.model import make_model, quadratic_entropy
from gammacost.solvers import ControlField, SolverConfig, solve_controlled, solve_entropic, solve_viscous

unit = st.floats(0.0, 1.0, allow_nan=False)
QUAD = make_model("quadratic")
V = sp.symbols("v")


def sym_jump_density(f, a, b):
    """int rho^+(v, b, a) / |b - a| dv for a jump a -> b with D = sigma = 1, by sympy."""
    a, b = sp.nsimplify(a), sp.nsimplify(b)
    rho = f(a) * (b - V) + f(b) * (V - a) - f(V) * (b - a)
    lo, hi = min(a, b), max(a, b)
    val = sp.integrate(rho, (V, lo, hi)) / abs(b - a)
    return max(float(val), 0.0)


def fq(v):
    return v * (1 - v)


def test_dual_flux_neumann_and_dirichlet_against_laplacian_oracle():
    rng = np.random.default_rng(0)
    nx, dx = 12, 0.1
    sigma = rng.uniform(0.5, 2.0, nx + 1)
    h = np.full(nx + 1, dx)
    h[0] = h[-1] = dx / 2
    r = rng.normal(size=nx)
    # graph Laplacian of the cell chain with conductances sigma / dx on interior interfaces
    Dm = np.zeros((nx - 1, nx))
    Dm[np.arange(nx - 1), np.arange(nx - 1)] = -1
    Dm[np.arange(nx - 1), np.arange(1, nx)] = 1
    Lap = Dm.T @ np.diag(sigma[1:-1] / dx) @ Dm
    rhs = dx * r
    ends = np.zeros(nx)
    ends[0], ends[-1] = sigma[0] / h[0], sigma[-1] / h[-1]
    ref_d = 0.5 * rhs @ np.linalg.solve(Lap + np.diag(ends), rhs)
    val_d, G, _, inf = dual_flux(r, sigma, h, dx, "dirichlet")
    assert not inf and val_d == pytest.approx(ref_d, rel=1e-12)
    assert np.allclose(np.diff(G), -dx * r)
    r0 = r - r.mean()
    ref_n = 0.5 * (dx * r0) @ np.linalg.pinv(Lap) @ (dx * r0)
    val_n, G, _, inf = dual_flux(r0, sigma, h, dx, "neumann")
    assert not inf and val_n == pytest.approx(ref_n, rel=1e-10)
    assert G[0] == 0.0 and abs(G[-1]) < 1e-14
    assert val_d <= val_n + 1e-15
    assert dual_flux(r, sigma, h, dx, "neumann")[3]


def test_dual_pairing_below_cost():
    rng = np.random.default_rng(1)
    g = SpaceTimeGrid(0.3, 1.0, 40, 40)
    u = SpaceTimeField(g, 0.5 + 0.2 * np.sin(3 * g.x)[None, :] * np.cos(2 * g.t)[:, None])
    c = cost_I_eps(QUAD, u, 0.05).value
    for _ in range(5):
        assert dual_pairing(QUAD, u, 0.05, rng.normal(size=(40, 40))) <= c + 1e-12
    # the optimiser attains the cost
    assert dual_pairing(QUAD, u, 0.05, cost_I_eps(QUAD, u, 0.05).potential) == pytest.approx(c, rel=1e-9)


def test_viscous_solution_costs_nothing():
    g = SpaceTimeGrid(0.5, 1.0, 200, 200)
    for cfg in (SolverConfig(), SolverConfig(scheme="engquist-osher", viscous_stepping="explicit")):
        g2 = g if cfg.viscous_stepping != "explicit" else SpaceTimeGrid(0.5, 1.0, 100, 400)
        u = solve_viscous(QUAD, g2, np.where(g2.x < 0, 0.2, 0.8), 0.05, cfg=cfg)
        assert cost_I_eps(QUAD, u, 0.05, cfg).value <= 1e-10
        assert cost_H_eps(QUAD, u, 0.05, cfg).value <= 1e-8


def test_controlled_solution_costs_the_control_energy():
    g = SpaceTimeGrid(0.5, 1.0, 100, 100)
    E = ControlField(np.tile(0.3 * np.sin(np.pi * g.x_faces), (g.nt, 1)))
    m = make_model("quadratic", sigma="quadratic")
    u = solve_controlled(m, g, np.full(100, 0.5), 0.1, E)
    assert cost_I_eps(m, u, 0.1).value == pytest.approx(E.energy, rel=1e-10)


def test_sigma_scaling_halves_the_cost_and_h_is_i_over_eps():
    g = SpaceTimeGrid(0.3, 1.0, 50, 30)
    u = SpaceTimeField(g, 0.5 + 0.3 * np.tanh(4 * g.x)[None, :] * np.ones((31, 1)))
    a = cost_I_eps(make_model("quadratic", sigma=1.0), u, 0.1).value
    b = cost_I_eps(make_model("quadratic", sigma=2.0), u, 0.1).value
    assert b == pytest.approx(0.5 * a, rel=1e-13)
    assert cost_H_eps(QUAD, u, 0.1).value == a / 0.1


def test_vanishing_sigma_gives_infinite_cost():
    m = make_model("quadratic", sigma="quadratic")
    g = SpaceTimeGrid(1.0, 1.0, 10, 1)
    vals = np.zeros((2, 10))
    vals[1, 4] = 0.5
    u = SpaceTimeField(g, vals)
    rep = cost_I_eps(m, u, 0.1)
    assert rep.infinite and rep.value == math.inf
    with pytest.raises(SingularWeight):
        cost_I_eps(m, u, 0.1, singular="raise")


def test_jump_kernel_values():
    assert float(jump_kernel_rho(QUAD, 0.5, 0.2, 0.8)) == pytest.approx(0.054)
    v = np.linspace(0, 1, 11)
    assert np.all(jump_kernel_rho(QUAD, v, 0.3, 0.3) == 0)
    inside = v[(v >= 0.2) & (v <= 0.8)]
    assert np.allclose(jump_kernel_rho(QUAD, inside, 0.2, 0.8), 0.6 * (inside - 0.2) * (0.8 - inside))


@settings(max_examples=80, deadline=None)
@given(v=unit, up=unit, um=unit)
def test_jump_kernel_sign_is_the_secant_condition(v, up, um):
    m = make_model("cubic")
    if not (min(up, um) + 1e-6 < v < max(up, um) - 1e-6):
        return
    rho = float(jump_kernel_rho(m, v, up, um))
    fv, fm, fp = (float(m.f(x)) for x in (v, um, up))
    secant = (fv - fm) / (v - um) >= (fp - fv) / (up - v)
    if abs(rho) > 1e-9:
        assert (rho <= 0) == secant


def single(um, up, speed=0.0, T=1.0):
    return PiecewiseBVSolution([Shock.straight(0.0, T, 0.0, speed, um, up)], um, T, 1.0)


def test_h_bv_single_shocks():
    assert cost_H_bv(QUAD, single(0.2, 0.8)).value == 0.0
    ref = sym_jump_density(fq, 0.8, 0.2)
    assert ref == pytest.approx(0.036, abs=1e-15)
    assert cost_H_bv(QUAD, single(0.8, 0.2)).value == pytest.approx(ref, abs=1e-10)
    with pytest.raises(RankineHugoniotViolation):
        cost_H_bv(QUAD, single(0.8, 0.2, speed=0.3))


def test_h_bv_staircase_against_symbolic_sum():
    b = [0.4 / i for i in range(1, 5)]
    pbv = staircase(b, 3)
    ref = sum((s.times[-1] - s.times[0]) * sym_jump_density(fq, s.u_minus[0], s.u_plus[0]) for s in pbv.shocks)
    assert ref == pytest.approx(sum(x ** 3 for x in b[:3]) / 6, rel=1e-12)
    assert cost_H_bv(QUAD, pbv).value == pytest.approx(ref, abs=1e-10)


def test_h_prime_equals_h_for_concave_flux():
    pbv = PiecewiseBVSolution([Shock([0.0, 0.4, 1.0], [0.0, 0.0, 0.0], [0.8, 0.9], [0.2, 0.1])], 0.8, 1.0, 1.0)
    h = cost_H_bv(QUAD, pbv).value
    hp = cost_H_prime_bv(QUAD, pbv)
    assert hp.value == pytest.approx(h, abs=1e-9)
    assert cost_H_prime_bv(QUAD, single(0.2, 0.8)).value == 0.0


def test_h_prime_below_h_for_cubic_flux():
    m = make_model("cubic")
    for a, b in ((0.9, 0.2), (0.3, 0.8), (0.1, 0.7)):
        speed = float((m.f(b) - m.f(a)) / (b - a))
        pbv = single(a, b, speed)
        h = cost_H_bv(m, pbv).value
        hp = cost_H_prime_bv(m, pbv)
        assert hp.value <= h + hp.diagnostics["error_bar"] + 1e-12


def test_entropy_production_of_godunov_output_is_not_positive():
    pair = quadratic_entropy(QUAD)
    phi = plateau(0.1, 0.9, -0.8, 0.8, 0.1)
    vals = []
    for nx in (100, 200, 400):
        g = SpaceTimeGrid(1.0, 1.0, nx, nx)
        u = solve_entropic(QUAD, g, np.where(g.x < 0, 0.8, 0.2) * 1.0)
        vals.append(entropy_production(QUAD, u, pair, phi))
    assert all(v <= 0.5 / 100 for v in vals)


def test_entropy_production_of_anti_entropic_shock():
    g = SpaceTimeGrid(1.0, 1.0, 400, 400)
    u = rasterize(single(0.8, 0.2), g)
    phi = plateau(0.1, 0.9, -0.5, 0.5, 0.1)
    tau = 0.8 - 0.1  # each ramp contributes half its length
    val = entropy_production(QUAD, u, quadratic_entropy(QUAD), phi)
    assert val == pytest.approx(tau * 2 * 0.036, rel=1e-3)
    with pytest.raises(SupportViolation):
        entropy_production(QUAD, u, quadratic_entropy(QUAD), plateau(-0.5, 0.9, -0.5, 0.5, 0.1))


def test_tv_positive_part():
    pair = quadratic_entropy(QUAD)
    g = SpaceTimeGrid(1.0, 1.0, 800, 800)
    u = rasterize(single(0.8, 0.2), g)
    assert tv_positive_part(QUAD, u, pair) == pytest.approx(2 * 0.036, rel=0.05)
    ent = []
    for nx in (100, 200, 400):
        g = SpaceTimeGrid(1.0, 1.0, nx, nx)
        ent.append(tv_positive_part(QUAD, solve_entropic(QUAD, g, np.where(g.x < 0, 0.2, 0.8)), pair))
    assert max(ent) <= 1e-12


def test_projected_cost_of_stationary_two_valued_field():
    g = SpaceTimeGrid(0.5, 1.0, 40, 5)
    u = SpaceTimeField(g, np.tile(np.where(g.x < 0, 0.2, 0.8), (6, 1)))
    rep = cost_I_projected(QUAD, u)
    assert rep.value <= 1e-10
    assert np.all((rep.potential >= -1e-6) & (rep.potential <= 0.16 + 1e-6))


def test_projected_cost_vanishes_on_weak_solution():
    g = SpaceTimeGrid(0.5, 1.0, 100, 50)
    u = rasterize(single(0.8, 0.2), g)
    assert cost_I_projected(QUAD, u).value <= 1e-10
    moving = SpaceTimeField(g, np.tile(0.5 + 0.3 * np.tanh(5 * g.x), (51, 1))[::-1])
    assert cost_I_projected(QUAD, moving).value >= 0.0
