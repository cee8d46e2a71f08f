"""Hamilton-Jacobi companion: the cost J_eps(b) of a potential b with b_x = u.

b lives on the nx + 1 interfaces of the grid, so that u = b_x is the
cell-average field. The residual of b_t + f(b_x) - (eps/2) D(b_x) b_xx is
taken with the interface fluxes of the viscous solver, hence its x
increments are exactly dx times the conservation-law residual of u.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .cost import CostReport, cost_I_eps, residual
from .errors import DecompositionDefect, SingularWeight
from .grid import SpaceTimeField, SpaceTimeGrid
from .model import FluxModel
from .solvers import SolverConfig, interface_sigma, interface_weights


@dataclass(frozen=True, eq=False)
class HJField:
    """Potential b of shape (nt + 1, nx + 1), stored with b(0, -L) = 0."""

    grid: SpaceTimeGrid
    b: np.ndarray

    def __post_init__(self):
        b = np.array(self.b, dtype=float)
        if b.shape != (self.grid.nt + 1, self.grid.nx + 1):
            raise ValueError("b must have shape (nt + 1, nx + 1)")
        b = b - b[0, 0]
        b.setflags(write=False)
        object.__setattr__(self, "b", b)
        self.u  # range check of b_x

    @property
    def u(self) -> SpaceTimeField:
        return SpaceTimeField(self.grid, np.diff(self.b, axis=1) / self.grid.dx)

    @classmethod
    def from_field(cls, model: FluxModel, u: SpaceTimeField, eps: float, cfg: SolverConfig = SolverConfig(),
                   gamma: Optional[Callable[[float], float]] = None) -> "HJField":
        """Integrate u in x and move the left edge with the interface flux.

        With ``gamma`` the left edge moves with F_0 + gamma(t), which adds
        gamma at the midpoint of each time step to the residual everywhere.
        """
        g = u.grid
        _, F = residual(model, u, eps, cfg)
        left = np.zeros(g.nt + 1)
        for n in range(g.nt):
            extra = 0.0 if gamma is None else float(gamma(g.t[n] + 0.5 * g.dt))
            left[n + 1] = left[n] - g.dt * (F[n, 0] + extra)
        b = left[:, None] + g.dx * np.concatenate([np.zeros((g.nt + 1, 1)), np.cumsum(u.values, axis=1)], axis=1)
        return cls(g, b)


def hj_residual(model: FluxModel, b: HJField, eps: float, cfg: SolverConfig = SolverConfig()):
    """R on interfaces (nt, nx + 1) together with the interface flux used."""
    g = b.grid
    _, F = residual(model, b.u, eps, cfg)
    R = np.diff(b.b, axis=0) / g.dt + F
    return R, F


def _slice_sigma(model, b):
    g = b.grid
    u = b.u.values
    periodic = g.boundary_mode == "periodic"
    return np.stack([interface_sigma(model, u[n], periodic) for n in range(g.nt)])


def cost_J_eps(model: FluxModel, b: HJField, eps: float, cfg: SolverConfig = SolverConfig(),
               singular: str = "inf") -> CostReport:
    """1/2 sum dt h R^2 / sigma(b_x); infinite where R is nonzero and sigma vanishes."""
    g = b.grid
    R, F = hj_residual(model, b, eps, cfg)
    sig = _slice_sigma(model, b)
    h = interface_weights(g)
    zero = sig <= 0
    tol = 1e-12 * max(1.0, float(np.max(np.abs(R))))
    bad = zero & (np.abs(R) > tol)
    if np.any(bad):
        if singular == "raise":
            raise SingularWeight("nonzero residual where sigma(b_x) vanishes")
        value = math.inf
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = np.where(zero, 0.0, R ** 2 / np.where(zero, 1.0, sig))
        value = 0.5 * g.dt * float(np.sum(dens * h[None, :]))
    rl2 = math.sqrt(g.dt * float(np.sum(R ** 2 * h[None, :])))
    diag = {"functional": "J_eps", "eps": eps, "nx": g.nx, "nt": g.nt, "T": g.T, "L": g.L}
    return CostReport(value, rl2, b.b, F, diag)


@dataclass
class Decomposition:
    i_part: float
    gamma_part: float
    gamma: np.ndarray
    x_variance: float
    J: float


def decompose_J(model: FluxModel, b: HJField, eps: float, cfg: SolverConfig = SolverConfig(),
                tol: float = 1e-8) -> Decomposition:
    """Split J_eps(b) into I_eps(b_x) and the penalty of the x-constant part gamma(t).

    On a finite window the x-constant part is only orthogonal to the
    dual flux when that flux has its minimum-energy constant, so the
    I_eps part uses the Dirichlet option of :func:`cost_I_eps`.
    """
    g = b.grid
    J = cost_J_eps(model, b, eps, cfg)
    if J.infinite:
        raise SingularWeight("decomposition needs a finite J_eps")
    I = cost_I_eps(model, b.u, eps, cfg, bc="dirichlet")
    R, _ = hj_residual(model, b, eps, cfg)
    gam_full = -R - I.flux
    gamma = gam_full.mean(axis=1)
    spread = float(np.max(np.abs(gam_full - gamma[:, None])))
    scale = 1.0 + float(np.max(np.abs(R)))
    if spread > tol * scale:
        raise DecompositionDefect(f"gamma varies in x by {spread:.3g}")
    sig = _slice_sigma(model, b)
    h = interface_weights(g)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(sig > 0, h[None, :] / np.where(sig > 0, sig, 1.0), 0.0)
    gamma_part = 0.5 * g.dt * float(np.sum(gamma ** 2 * inv.sum(axis=1)))
    return Decomposition(I.value, gamma_part, gamma, spread ** 2, J.value)


def hj_sweep(model: FluxModel, family: Callable[[float], SpaceTimeField], eps_list: Iterable[float],
             cfg: SolverConfig = SolverConfig(), gamma: Optional[Callable[[float], float]] = None,
             path=None) -> list:
    """Rows (eps, J, K, i_part, gamma_part) with K = J / eps for b integrated from family(eps)."""
    rows = []
    for eps in eps_list:
        u = family(eps)
        b = HJField.from_field(model, u, eps, cfg, gamma)
        dec = decompose_J(model, b, eps, cfg)
        rows.append((eps, dec.J, dec.J / eps, dec.i_part, dec.gamma_part))
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["eps", "J", "K", "i_part", "gamma_part"])
            for row in rows:
                w.writerow([f"{v:.17g}" for v in row])
    return rows


__all__ = ["HJField", "hj_residual", "cost_J_eps", "Decomposition", "decompose_J", "hj_sweep"]
