import math

import numpy as np
import pytest

from gammacost.cli import RECOVERY_CFG, recovery_family
from gammacost.cost import cost_I_eps
from gammacost.grid import SpaceTimeField, SpaceTimeGrid
from gammacost.hj import HJField, cost_J_eps, decompose_J, hj_residual, hj_sweep
from gammacost.model import make_model
from gammacost.solvers import SolverConfig, interface_flux, solve_viscous

QUAD = make_model("quadratic")


def viscous_potential(eps=0.05, gamma=None):
    g = SpaceTimeGrid(0.5, 1.0, 200, 100)
    u = solve_viscous(QUAD, g, 0.5 + 0.3 * np.tanh(6 * g.x), eps)
    return g, HJField.from_field(QUAD, u, eps, gamma=gamma)


def test_viscous_potential_has_zero_cost():
    _, b = viscous_potential()
    assert cost_J_eps(QUAD, b, 0.05).value <= 1e-20


def test_time_perturbation_adds_its_own_cost():
    T, L = 0.5, 1.0
    gam = lambda t: 0.1 * math.sin(2 * math.pi * t / T)
    _, b = viscous_potential(gamma=gam)
    dec = decompose_J(QUAD, b, 0.05)
    assert dec.gamma_part == pytest.approx(0.005 * T * L, abs=1e-10)
    assert dec.i_part <= 1e-10
    assert dec.J == pytest.approx(dec.i_part + dec.gamma_part, abs=1e-12)
    assert dec.i_part == pytest.approx(cost_I_eps(QUAD, b.u, 0.05, bc="dirichlet").value, abs=1e-8)


def test_gaussian_residual_cost():
    # explicit stepping of b_t = -F + A exp(-x^2 / w^2) makes the residual that bump exactly
    A, w, eps = 0.05, 0.1, 0.05
    g = SpaceTimeGrid(0.5, 1.0, 400, 1000)
    cfg = SolverConfig(viscous_stepping="explicit")
    bump = A * np.exp(-g.x_faces ** 2 / w ** 2)
    b = np.empty((g.nt + 1, g.nx + 1))
    b[0] = 0.5 * (g.x_faces + g.L)
    for n in range(g.nt):
        u = np.diff(b[n]) / g.dx
        b[n + 1] = b[n] - g.dt * interface_flux(QUAD, u, None, eps, g.dx, cfg) + g.dt * bump
    field = HJField(g, b)
    R, _ = hj_residual(QUAD, field, eps, cfg)
    assert np.allclose(R, bump[None, :], atol=1e-12)
    exact = 0.5 * A ** 2 * g.T * w * math.sqrt(math.pi / 2)
    assert cost_J_eps(QUAD, field, eps, cfg).value == pytest.approx(exact, rel=1e-6)


@pytest.mark.parametrize("seed", range(6))
def test_decomposition_identity_on_random_potentials(seed):
    rng = np.random.default_rng(seed)
    g = SpaceTimeGrid(0.2, 1.0, 30, 12)
    m = make_model("cubic", sigma="quadratic")
    u = rng.uniform(0.2, 0.8, (g.nt + 1, g.nx))
    left = np.cumsum(rng.normal(size=g.nt + 1))
    b = HJField(g, left[:, None] + g.dx * np.concatenate([np.zeros((g.nt + 1, 1)), np.cumsum(u, axis=1)], axis=1))
    dec = decompose_J(m, b, 0.1)
    assert dec.J == pytest.approx(dec.i_part + dec.gamma_part, rel=1e-10)
    # on a finite window the bound holds for the cost with free edge flux
    assert dec.J >= cost_I_eps(m, b.u, 0.1, bc="dirichlet").value * (1 - 1e-12)


def test_gauge_invariance_and_range_check():
    g, b = viscous_potential()
    shifted = HJField(g, b.b + 3.7)
    assert np.allclose(shifted.b, b.b, atol=1e-14, rtol=0)
    assert cost_J_eps(QUAD, shifted, 0.05).value == pytest.approx(cost_J_eps(QUAD, b, 0.05).value, abs=1e-20)
    g2, c = viscous_potential(gamma=lambda t: 0.1)
    assert cost_J_eps(QUAD, HJField(g2, c.b + 1.0), 0.05).value == pytest.approx(
        cost_J_eps(QUAD, c, 0.05).value, rel=1e-12)
    bad = np.tile(2.0 * g.x_faces, (g.nt + 1, 1))
    with pytest.raises(ValueError):
        HJField(g, bad)


@pytest.fixture(scope="module")
def recovery_grid():
    return SpaceTimeGrid(1.0, 1.0, 800, 10)


def test_entropic_family_costs_nothing(recovery_grid):
    rows = hj_sweep(QUAD, lambda e: recovery_family(QUAD, (0.2, 0.8), e, recovery_grid).u, [0.08, 0.04],
                    RECOVERY_CFG)
    assert max(r[2] for r in rows) <= 1e-10


def test_anti_entropic_family_approaches_h(recovery_grid, tmp_path):
    path = tmp_path / "k.csv"
    rows = hj_sweep(QUAD, lambda e: recovery_family(QUAD, (0.8, 0.2), e, recovery_grid).u, [0.08, 0.04],
                    RECOVERY_CFG, path=path)
    assert rows[-1][2] == pytest.approx(0.036, rel=0.05)
    assert path.read_text().splitlines()[0] == "eps,J,K,i_part,gamma_part"


def test_contaminated_family_diverges(recovery_grid):
    gam = lambda t: 0.1 * math.sin(2 * math.pi * t)
    rows = hj_sweep(QUAD, lambda e: recovery_family(QUAD, (0.8, 0.2), e, recovery_grid).u, [0.08, 0.04, 0.02],
                    RECOVERY_CFG, gamma=gam)
    K = [r[2] for r in rows]
    assert K[0] < K[1] < K[2] and K[2] > 0.2
