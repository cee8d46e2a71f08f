"""Finite volume solvers for the entropic, viscous and controlled equations.

All solvers are conservative: the update of cell i is the difference of
the total fluxes through its two interfaces. :func:`interface_flux`
returns those fluxes and is shared with the cost evaluation, so that a
field produced by a solver has a residual of round-off size.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded
from scipy.sparse import diags
from scipy.sparse.linalg import spsolve

from .errors import CflViolation, NonfiniteValue
from .grid import SpaceTimeField, SpaceTimeGrid
from .model import FluxModel

SCHEMES = ("godunov", "engquist-osher", "central")
STEPPINGS = ("explicit", "semi-implicit")


@dataclass(frozen=True)
class SolverConfig:
    """Discretisation choices.

    ``central`` uses the average of the two point fluxes; it adds no
    numerical viscosity and is only stable together with a resolved
    physical viscosity (cell Peclet number at most 2).
    """

    scheme: str = "godunov"
    viscous_stepping: str = "semi-implicit"
    cfl: float = 0.9
    check_cfl: bool = True
    range_tol: float = 1e-12

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.viscous_stepping not in STEPPINGS:
            raise ValueError(f"viscous_stepping must be one of {STEPPINGS}")
        if not (0 < self.cfl <= 1):
            raise ValueError("cfl must lie in (0, 1]")


@dataclass
class ControlField:
    """Control E at interfaces, one row per time step: shape (nt, nx + 1)."""

    values: np.ndarray
    energy: Optional[float] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("control values must be a 2-d array (nt, nx+1)")
        if not np.all(np.isfinite(self.values)):
            raise NonfiniteValue("control field has non-finite values")

    @classmethod
    def zeros(cls, grid: SpaceTimeGrid) -> "ControlField":
        return cls(np.zeros((grid.nt, grid.nx + 1)))

    def compute_energy(self, model: FluxModel, u: SpaceTimeField) -> float:
        """1/2 sum dt h sigma(u) E^2 with sigma at interfaces from time level n."""
        g = u.grid
        s = interface_sigma(model, u.values[:-1], g.boundary_mode == "periodic")
        h = interface_weights(g)
        self.energy = float(0.5 * g.dt * np.sum(h * s * self.values ** 2))
        return self.energy


# ---------------------------------------------------------------------------
# numerical fluxes


def godunov_flux(model: FluxModel, a, b) -> np.ndarray:
    """min of f over [a, b] if a <= b, max over [b, a] otherwise."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    fa, fb = model.f(a), model.f(b)
    up = a <= b
    lo_val = np.minimum(fa, fb)
    hi_val = np.maximum(fa, fb)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    for c in model.critical_points:
        fc = float(model.f(np.array(c)))
        inside = (lo <= c) & (c <= hi)
        lo_val = np.where(inside, np.minimum(lo_val, fc), lo_val)
        hi_val = np.where(inside, np.maximum(hi_val, fc), hi_val)
    return np.where(up, lo_val, hi_val)


def _monotone_parts(model: FluxModel, u):
    """Increasing and decreasing parts of f: f(u) = f(0) + P(u) + M(u)."""
    u = np.asarray(u, float)
    z = np.concatenate([[0.0], np.asarray(model.critical_points, float), [1.0]])
    P = np.zeros_like(u)
    M = np.zeros_like(u)
    fz = model.f(z)
    for k in range(len(z) - 1):
        top = np.clip(u, z[k], z[k + 1])
        inc = model.f(top) - fz[k]
        P += np.maximum(inc, 0.0)
        M += np.minimum(inc, 0.0)
    return P, M


def engquist_osher_flux(model: FluxModel, a, b) -> np.ndarray:
    Pa, _ = _monotone_parts(model, a)
    _, Mb = _monotone_parts(model, b)
    return float(model.f(np.array(0.0))) + Pa + Mb


def central_flux(model: FluxModel, a, b) -> np.ndarray:
    return 0.5 * (model.f(np.asarray(a, float)) + model.f(np.asarray(b, float)))


_FLUX = {"godunov": godunov_flux, "engquist-osher": engquist_osher_flux, "central": central_flux}


def _neighbours(u: np.ndarray, periodic: bool):
    """Left and right states at the nx + 1 interfaces (ghost cells at the ends)."""
    if periodic:
        ext = np.concatenate([u[..., -1:], u, u[..., :1]], axis=-1)
    else:
        ext = np.concatenate([u[..., :1], u, u[..., -1:]], axis=-1)
    return ext[..., :-1], ext[..., 1:]


def hyperbolic_flux(model: FluxModel, u: np.ndarray, scheme: str, periodic: bool = False) -> np.ndarray:
    a, b = _neighbours(u, periodic)
    return _FLUX[scheme](model, a, b)


def harmonic_D(model: FluxModel, u: np.ndarray, periodic: bool = False) -> np.ndarray:
    """Harmonic average of D at interfaces; zero at the outer ends unless periodic."""
    a, b = _neighbours(u, periodic)
    Da, Db = model.D(a), model.D(b)
    Dh = 2.0 * Da * Db / (Da + Db)
    if not periodic:
        Dh[..., 0] = 0.0
        Dh[..., -1] = 0.0
    return Dh


def interface_sigma(model: FluxModel, u: np.ndarray, periodic: bool = False) -> np.ndarray:
    """Arithmetic average of sigma(u) at interfaces (the edge value at the outer ends)."""
    a, b = _neighbours(u, periodic)
    return 0.5 * (model.sigma(a) + model.sigma(b))


def interface_weights(grid: SpaceTimeGrid) -> np.ndarray:
    """Quadrature weights of the interfaces: dx inside, dx/2 at the two ends."""
    h = np.full(grid.nx + 1, grid.dx)
    # on periodic grids the two ends are one interface, counted half each time
    h[0] = h[-1] = 0.5 * grid.dx
    return h


def gradient(u: np.ndarray, dx: float, periodic: bool = False) -> np.ndarray:
    a, b = _neighbours(u, periodic)
    return (b - a) / dx


def interface_flux(model: FluxModel, u_now: np.ndarray, u_next: Optional[np.ndarray], eps: float,
                   dx: float, cfg: SolverConfig, periodic: bool = False) -> np.ndarray:
    """Total flux f - (eps/2) D u_x at the nx + 1 interfaces for the step u_now -> u_next.

    Semi-implicit stepping differentiates ``u_next`` with D frozen at
    ``u_now``; explicit stepping uses ``u_now`` only.
    """
    F = hyperbolic_flux(model, u_now, cfg.scheme, periodic)
    if eps == 0.0:
        return F
    grad_src = u_now if cfg.viscous_stepping == "explicit" or u_next is None else u_next
    return F - 0.5 * eps * harmonic_D(model, u_now, periodic) * gradient(grad_src, dx, periodic)


# ---------------------------------------------------------------------------
# stability


def _speed(model: FluxModel) -> float:
    return model.max_speed


def check_cfl(model: FluxModel, grid: SpaceTimeGrid, eps: float, cfg: SolverConfig,
              control: Optional[np.ndarray] = None) -> dict:
    """Stability numbers of a run; raises CflViolation when a bound fails."""
    v = np.linspace(0, 1, 1001)
    a = _speed(model)
    if control is not None and control.size:
        a = a + float(np.max(np.abs(model.sigma_prime(v)))) * float(np.max(np.abs(control)))
    dx, dt = grid.dx, grid.dt
    rec = {"hyperbolic": dt * a / dx, "cfl": cfg.cfl}
    problems = []
    if rec["hyperbolic"] > cfg.cfl:
        problems.append(f"dt*max|speed|/dx = {rec['hyperbolic']:.4g} exceeds cfl {cfg.cfl}")
    if eps > 0:
        Dmax = float(np.max(model.D(v)))
        Dmin = float(np.min(model.D(v)))
        rec["diffusion"] = eps * Dmax * dt / dx ** 2
        if cfg.viscous_stepping == "explicit" and rec["diffusion"] > 0.5:
            problems.append(f"eps*maxD*dt/dx^2 = {rec['diffusion']:.4g} exceeds 1/2")
        if cfg.scheme == "central":
            nu = 0.5 * eps * Dmin
            rec["peclet"] = a * dx / nu
            rec["central_dt"] = dt * a * a / (2 * nu) if nu > 0 else np.inf
            if rec["peclet"] > 2.0:
                problems.append(f"cell Peclet number {rec['peclet']:.4g} exceeds 2")
            if rec["central_dt"] > 1.0:
                problems.append(f"dt*a^2/(2 nu) = {rec['central_dt']:.4g} exceeds 1")
    elif cfg.scheme == "central":
        problems.append("the central scheme needs eps > 0")
    grid.cfl.update(rec)
    if problems and cfg.check_cfl:
        raise CflViolation("; ".join(problems))
    return rec


# ---------------------------------------------------------------------------
# time stepping


def _implicit_matrix(Dh: np.ndarray, k: float, periodic: bool):
    """I - k * div(Dh grad) with k = dt eps / (2 dx^2)."""
    left, right = Dh[:-1], Dh[1:]
    n = len(left)
    main = 1.0 + k * (left + right)
    if not periodic:
        ab = np.zeros((3, n))
        ab[1] = main
        ab[0, 1:] = -k * right[:-1]
        ab[2, :-1] = -k * left[1:]
        return ab
    A = diags([main, -k * right[:-1], -k * left[1:]], [0, 1, -1], format="lil")
    A[0, n - 1] = -k * left[0]
    A[n - 1, 0] = -k * right[-1]
    return A.tocsc()


def _march(model: FluxModel, grid: SpaceTimeGrid, u0, eps: float, cfg: SolverConfig,
           control: Optional[np.ndarray]) -> np.ndarray:
    periodic = grid.boundary_mode == "periodic"
    u = np.array(u0, dtype=float)
    if u.shape != (grid.nx,):
        raise ValueError(f"initial slice must have {grid.nx} values")
    out = np.empty((grid.nt + 1, grid.nx))
    out[0] = u
    lam = grid.dt / grid.dx
    k = grid.dt * eps / (2 * grid.dx ** 2)
    lo, hi = float(np.min(u)), float(np.max(u))
    for n in range(grid.nt):
        F = hyperbolic_flux(model, u, cfg.scheme, periodic)
        if control is not None:
            F = F + interface_sigma(model, u, periodic) * control[n]
        if eps > 0:
            Dh = harmonic_D(model, u, periodic)
            if cfg.viscous_stepping == "explicit":
                F = F - 0.5 * eps * Dh * gradient(u, grid.dx, periodic)
                new = u - lam * np.diff(F)
            else:
                rhs = u - lam * np.diff(F)
                A = _implicit_matrix(Dh, k, periodic)
                new = spsolve(A, rhs) if periodic else solve_banded((1, 1), A, rhs)
        else:
            new = u - lam * np.diff(F)
        if not np.all(np.isfinite(new)):
            raise NonfiniteValue(f"non-finite values after step {n + 1}")
        u = new
        out[n + 1] = u
    if control is None:
        # monotone schemes keep the range; clip round-off only
        tol = cfg.range_tol
        if out.min() < lo - 1e-9 or out.max() > hi + 1e-9:
            grid.cfl["range_violation"] = float(max(lo - out.min(), out.max() - hi))
        out = np.where((out < 0) & (out > -tol), 0.0, out)
        out = np.where((out > 1) & (out < 1 + tol), 1.0, out)
    return out


def solve_entropic(model: FluxModel, grid: SpaceTimeGrid, u0, cfg: SolverConfig = SolverConfig()) -> SpaceTimeField:
    """Monotone conservative approximation of the entropic (Kruzkov) solution."""
    if cfg.scheme == "central":
        raise ValueError("the central scheme is not monotone; use godunov or engquist-osher")
    check_cfl(model, grid, 0.0, cfg)
    return SpaceTimeField(grid, _march(model, grid, u0, 0.0, cfg, None))


def solve_viscous(model: FluxModel, grid: SpaceTimeGrid, u0, eps: float, direction: str = "forward",
                  cfg: SolverConfig = SolverConfig()) -> SpaceTimeField:
    """u_t + f(u)_x = (eps/2)(D(u) u_x)_x forward from u0, or its backward counterpart.

    ``direction='backward'`` treats ``u0`` as the datum at time T of
    v_t + f(v)_x = -(eps/2)(D(v) v_x)_x and solves it through the
    reflection (t, x) -> (T - t, -x), which turns it into a forward
    problem of the same kind.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    check_cfl(model, grid, eps, cfg)
    if direction == "forward":
        return SpaceTimeField(grid, _march(model, grid, u0, eps, cfg, None))
    if direction != "backward":
        raise ValueError("direction must be 'forward' or 'backward'")
    w = _march(model, grid, np.asarray(u0, float)[::-1], eps, cfg, None)
    return SpaceTimeField(grid, w[::-1, ::-1])


def solve_controlled(model: FluxModel, grid: SpaceTimeGrid, u0, eps: float, E: ControlField,
                     cfg: SolverConfig = SolverConfig()) -> SpaceTimeField:
    """u_t + f(u)_x = (eps/2)(D(u) u_x)_x - (sigma(u) E)_x with E given at interfaces."""
    if E.values.shape != (grid.nt, grid.nx + 1):
        raise ValueError(f"control must have shape {(grid.nt, grid.nx + 1)}, got {E.values.shape}")
    if eps > 0:
        check_cfl(model, grid, eps, cfg, E.values)
    else:
        check_cfl(model, grid, 0.0, cfg, E.values)
    vals = _march(model, grid, u0, eps, cfg, E.values)
    u = SpaceTimeField(grid, vals, check_range=False)
    E.compute_energy(model, u)
    return u


def boundary_flux_integral(model: FluxModel, u: SpaceTimeField, eps: float, cfg: SolverConfig,
                           control: Optional[ControlField] = None) -> np.ndarray:
    """Cumulative net inflow dt*(F_left - F_right) after each step (zero for periodic grids)."""
    g = u.grid
    if g.boundary_mode == "periodic":
        return np.zeros(g.nt + 1)
    net = np.zeros(g.nt + 1)
    for n in range(g.nt):
        F = interface_flux(model, u.values[n], u.values[n + 1], eps, g.dx, cfg)
        if control is not None:
            F = F + interface_sigma(model, u.values[n]) * control.values[n]
        net[n + 1] = net[n] + g.dt * (F[0] - F[-1])
    return net


__all__ = [
    "SolverConfig", "ControlField", "solve_entropic", "solve_viscous", "solve_controlled",
    "godunov_flux", "engquist_osher_flux", "central_flux", "interface_flux", "hyperbolic_flux",
    "harmonic_D", "interface_sigma", "interface_weights", "check_cfl", "boundary_flux_integral",
]
