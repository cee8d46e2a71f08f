"""Space-time grids, discrete fields, piecewise BV solutions and the metrics.

Cells are ``i = 0..nx-1`` with centres ``x_i = -L + (i + 1/2) dx``; the
``nx + 1`` interfaces include both ends of the window. Row ``n`` of a
field holds cell averages at time ``t_n = n dt``.
"""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import DomainMismatch, GridMismatch, RankineHugoniotViolation, WindowTooSmall

BOUNDARY_MODES = ("constant-extension", "periodic")


@dataclass(frozen=True)
class SpaceTimeGrid:
    T: float
    L: float
    nx: int
    nt: int
    boundary_mode: str = "constant-extension"
    cfl: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.T > 0 and self.L > 0):
            raise ValueError("T and L must be positive")
        if self.nx < 1 or self.nt < 1:
            raise ValueError("nx and nt must be positive")
        if self.boundary_mode not in BOUNDARY_MODES:
            raise ValueError(f"boundary_mode must be one of {BOUNDARY_MODES}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.nx

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def x(self) -> np.ndarray:
        return -self.L + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def x_faces(self) -> np.ndarray:
        return -self.L + np.arange(self.nx + 1) * self.dx

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.nt + 1) * self.dt

    def matches(self, other: "SpaceTimeGrid") -> bool:
        return (self.nx, self.nt, self.boundary_mode) == (other.nx, other.nt, other.boundary_mode) \
            and math.isclose(self.T, other.T) and math.isclose(self.L, other.L)

    def with_nt(self, nt: int) -> "SpaceTimeGrid":
        return SpaceTimeGrid(self.T, self.L, self.nx, nt, self.boundary_mode)


def require_same_grid(a: SpaceTimeGrid, b: SpaceTimeGrid) -> None:
    if not a.matches(b):
        raise GridMismatch(f"grids differ: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    grid: SpaceTimeGrid
    values: np.ndarray
    check_range: bool = True

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        shape = (self.grid.nt + 1, self.grid.nx)
        if v.shape != shape:
            raise GridMismatch(f"values have shape {v.shape}, grid needs {shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        if self.check_range and (v.min() < -1e-12 or v.max() > 1 + 1e-12):
            raise ValueError(f"field leaves [0,1]: range [{v.min():.3g}, {v.max():.3g}]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, n):
        return self.values[n]

    def mass(self) -> np.ndarray:
        """Total mass sum(u) dx of every time row."""
        return self.values.sum(axis=1) * self.grid.dx

    def total_variation(self, n: int) -> float:
        return float(np.abs(np.diff(self.values[n])).sum())

    # -- serialization -----------------------------------------------------

    def to_csv(self, path) -> None:
        g = self.grid
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "u"])
            for n, t in enumerate(g.t):
                for x, u in zip(g.x, self.values[n]):
                    w.writerow([f"{t:.17g}", f"{x:.17g}", f"{u:.17g}"])

    @classmethod
    def from_csv(cls, path, boundary_mode: str = "constant-extension") -> "SpaceTimeField":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        ts = np.unique(data[:, 0])
        xs = np.unique(data[:, 1])
        nt, nx = len(ts) - 1, len(xs)
        dx = xs[1] - xs[0] if nx > 1 else 2 * abs(xs[0])
        grid = SpaceTimeGrid(T=float(ts[-1]), L=float(nx * dx / 2), nx=nx, nt=nt, boundary_mode=boundary_mode)
        return cls(grid, data[:, 2].reshape(nt + 1, nx))

    def to_binary(self, path) -> None:
        g = self.grid
        with open(path, "wb") as fh:
            fh.write(struct.pack("<qqdd", g.nt, g.nx, g.T, g.L))
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def from_binary(cls, path, boundary_mode: str = "constant-extension") -> "SpaceTimeField":
        with open(path, "rb") as fh:
            nt, nx, T, L = struct.unpack("<qqdd", fh.read(32))
            vals = np.frombuffer(fh.read(), dtype="<f8").reshape(nt + 1, nx)
        return cls(SpaceTimeGrid(T, L, nx, nt, boundary_mode), vals.copy())


def field_from_function(grid: SpaceTimeGrid, fn, check_range: bool = True) -> SpaceTimeField:
    """Sample ``fn(t, x)`` at cell centres."""
    T, X = np.meshgrid(grid.t, grid.x, indexing="ij")
    return SpaceTimeField(grid, fn(T, X), check_range=check_range)


def constant_field(grid: SpaceTimeGrid, c: float) -> SpaceTimeField:
    return SpaceTimeField(grid, np.full((grid.nt + 1, grid.nx), float(c)))


# ---------------------------------------------------------------------------
# piecewise constant BV solutions


@dataclass
class Shock:
    """A polygonal jump curve.

    ``times`` and ``positions`` are the vertices (K + 1 of them), and
    ``u_minus``/``u_plus`` the left/right traces on each of the K segments.
    """

    times: np.ndarray
    positions: np.ndarray
    u_minus: np.ndarray
    u_plus: np.ndarray

    def __post_init__(self):
        self.times = np.atleast_1d(np.asarray(self.times, float))
        self.positions = np.atleast_1d(np.asarray(self.positions, float))
        self.u_minus = np.atleast_1d(np.asarray(self.u_minus, float))
        self.u_plus = np.atleast_1d(np.asarray(self.u_plus, float))
        k = len(self.times) - 1
        if k < 1 or len(self.positions) != k + 1 or len(self.u_minus) != k or len(self.u_plus) != k:
            raise ValueError("shock needs K+1 vertices and K trace pairs")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("shock vertex times must increase")

    @classmethod
    def straight(cls, t0, t1, x0, speed, u_minus, u_plus) -> "Shock":
        return cls([t0, t1], [x0, x0 + speed * (t1 - t0)], [u_minus], [u_plus])

    @property
    def n_segments(self) -> int:
        return len(self.times) - 1

    def speeds(self) -> np.ndarray:
        return np.diff(self.positions) / np.diff(self.times)

    def durations(self) -> np.ndarray:
        return np.diff(self.times)

    def active(self, t: float) -> bool:
        return self.times[0] <= t <= self.times[-1]

    def segment(self, t: float) -> int:
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(max(k, 0), self.n_segments - 1)

    def position(self, t: float) -> float:
        return float(np.interp(t, self.times, self.positions))


@dataclass
class PiecewiseBVSolution:
    """Piecewise constant weak solution on [0, T] x [-L, L].

    Left of the first active shock the value is that shock's left trace,
    between two consecutive active shocks it is the right trace of the left
    one, and right of the last it is the last right trace. ``background``
    is used only at times when no shock is active.
    """

    shocks: List[Shock]
    background: float
    T: float
    L: float

    def _active(self, t):
        act = [(s.position(t), s, s.segment(t)) for s in self.shocks if s.active(t)]
        act.sort(key=lambda item: item[0])
        return act

    def breakpoints(self, t: float):
        """Sorted jump positions and the K + 1 constant values between them."""
        act = self._active(t)
        if not act:
            return np.empty(0), np.array([self.background])
        pos = np.array([a[0] for a in act])
        vals = [act[0][1].u_minus[act[0][2]]] + [s.u_plus[k] for _, s, k in act]
        return pos, np.array(vals)

    def __call__(self, t: float, x) -> np.ndarray:
        pos, vals = self.breakpoints(t)
        idx = np.searchsorted(pos, np.asarray(x, float), side="right")
        return vals[idx]

    def validate(self, model, tol: float = 1e-9) -> None:
        """Rankine-Hugoniot on every segment and trace consistency between neighbours."""
        for m, s in enumerate(self.shocks):
            jump = s.u_plus - s.u_minus
            lhs = jump * s.speeds()
            rhs = model.f(s.u_plus) - model.f(s.u_minus)
            bad = np.abs(lhs - rhs) > tol * (1 + np.abs(rhs))
            if np.any(bad):
                k = int(np.argmax(bad))
                raise RankineHugoniotViolation(
                    f"shock {m} segment {k}: (u+ - u-) speed = {lhs[k]:.6g}, f jump = {rhs[k]:.6g}")
        times = sorted({float(t) for s in self.shocks for t in s.times} | {0.0, self.T})
        probes = [0.5 * (a + b) for a, b in zip(times[:-1], times[1:])]
        for t in probes:
            act = self._active(t)
            for (p0, s0, k0), (p1, s1, k1) in zip(act[:-1], act[1:]):
                if p1 - p0 < -tol:
                    raise ValueError(f"shocks cross at t={t}")
                if abs(s0.u_plus[k0] - s1.u_minus[k1]) > tol:
                    raise ValueError(f"inconsistent traces between neighbouring shocks at t={t}")

    def is_entropic(self, model, n_v: int = 401) -> bool:
        from .cost import jump_kernel_rho  # local import, cost builds on grid
        for s in self.shocks:
            for a, b in zip(s.u_minus, s.u_plus):
                v = np.linspace(min(a, b), max(a, b), n_v)
                if np.max(jump_kernel_rho(model, v, b, a)) > 1e-14:
                    return False
        return True


def rasterize(pbv: PiecewiseBVSolution, grid: SpaceTimeGrid) -> SpaceTimeField:
    """Exact cell averages of the piecewise constant solution on each time row."""
    if grid.T > pbv.T * (1 + 1e-12) or grid.L > pbv.L * (1 + 1e-12):
        raise DomainMismatch(f"grid box [0,{grid.T}]x[-{grid.L},{grid.L}] exceeds the "
                             f"solution box [0,{pbv.T}]x[-{pbv.L},{pbv.L}]")
    xf = grid.x_faces
    out = np.empty((grid.nt + 1, grid.nx))
    for n, t in enumerate(grid.t):
        pos, vals = pbv.breakpoints(t)
        # antiderivative from -L of the piecewise constant profile
        U = vals[0] * (xf - xf[0])
        for p, dv in zip(pos, np.diff(vals)):
            U = U + dv * np.maximum(xf - max(p, xf[0]), 0.0)
        out[n] = np.diff(U) / grid.dx
    return SpaceTimeField(grid, np.clip(out, 0.0, 1.0))


def staircase(b: Sequence[float], n: int, T: float = 1.0, L: float = 1.0) -> PiecewiseBVSolution:
    """Staircase for f = u(1-u), truncated after ``n`` bands.

    Band i has value 1/2 + b_i on T(b_1 - b_i) < x + b_i t < T(b_1 - b_{i+1})
    and the background is 1/2, so ``b`` needs at least n + 1 entries.
    Each band is bounded by an increasing (admissible) jump on the left and
    a decreasing (non-admissible) jump on the right, both with speed -b_i.
    """
    b = [float(v) for v in b]
    if len(b) < n + 1:
        raise ValueError("staircase needs b_1..b_{n+1}")
    shocks = []
    for i in range(n):
        shocks.append(Shock.straight(0.0, T, T * (b[0] - b[i]), -b[i], 0.5, 0.5 + b[i]))
        shocks.append(Shock.straight(0.0, T, T * (b[0] - b[i + 1]), -b[i], 0.5 + b[i], 0.5))
    return PiecewiseBVSolution(shocks, 0.5, T, L)


# ---------------------------------------------------------------------------
# negative Sobolev norm and metrics


def _window_cells(grid: SpaceTimeGrid, L_window: float) -> np.ndarray:
    x = grid.x
    return np.nonzero(np.abs(x) <= L_window + 1e-12 * grid.L)[0]


def dirichlet_laplacian_banded(n: int, dx: float) -> np.ndarray:
    """Banded form of the cell-centred Dirichlet stiffness matrix (half cells at both ends)."""
    h = np.full(n + 1, dx)
    h[0] = h[-1] = 0.5 * dx
    w = 1.0 / h
    ab = np.zeros((3, n))
    ab[1] = w[:-1] + w[1:]
    ab[0, 1:] = -w[1:-1]
    ab[2, :-1] = -w[1:-1]
    return ab


def du_norm(u, grid: SpaceTimeGrid, L_window: Optional[float] = None) -> float:
    """The norm ||u||_{-1,L}: sup of <u, phi> over phi vanishing at +-L with ||phi_x||_2 = 1.

    The window is the union of the cells whose centres lie in
    [-L_window, L_window]; the potential psi solves -psi'' = u with zero
    boundary values at the window edges.
    """
    u = np.asarray(u, float)
    if L_window is None:
        L_window = grid.L
    cells = _window_cells(grid, L_window)
    if len(cells) < 3:
        raise WindowTooSmall(f"window [-{L_window}, {L_window}] holds {len(cells)} cells")
    b = u[cells] * grid.dx
    if not np.any(b):
        return 0.0
    psi = solve_banded((1, 1), dirichlet_laplacian_banded(len(cells), grid.dx), b)
    return float(math.sqrt(max(float(b @ psi), 0.0)))


def dist_U(u, v, grid: SpaceTimeGrid) -> float:
    """Truncated dyadic sum of ||u - v||_{-1,N} / (1 + ||u - v||_{-1,N}), N = 1..ceil(L)."""
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    if u.shape != v.shape or u.shape != (grid.nx,):
        raise GridMismatch("slices must match the grid")
    d = u - v
    total = 0.0
    for N in range(1, math.ceil(grid.L) + 1):
        a = du_norm(d, grid, min(float(N), grid.L))
        total += 2.0 ** (-N) * a / (1.0 + a)
    return total


def _fields(u, v):
    if isinstance(u, SpaceTimeField) and isinstance(v, SpaceTimeField):
        require_same_grid(u.grid, v.grid)
        return u.grid, u.values, v.values
    raise GridMismatch("expected two SpaceTimeFields")


def dist_scrU(u: SpaceTimeField, v: SpaceTimeField) -> float:
    """Sup over time rows of dist_U."""
    grid, a, b = _fields(u, v)
    return max(dist_U(a[n], b[n], grid) for n in range(grid.nt + 1))


def dist_X(u: SpaceTimeField, v: SpaceTimeField) -> float:
    """Truncated dyadic sum of space-time L1 distances on [-N, N], plus dist_scrU."""
    grid, a, b = _fields(u, v)
    x = grid.x
    w = np.full(grid.nt + 1, grid.dt)
    w[0] = w[-1] = 0.5 * grid.dt
    total = 0.0
    for N in range(1, math.ceil(grid.L) + 1):
        cells = np.abs(x) <= min(float(N), grid.L) + 1e-12 * grid.L
        l1 = float(w @ np.abs(a[:, cells] - b[:, cells]).sum(axis=1)) * grid.dx
        total += 2.0 ** (-N) * l1
    return total + dist_scrU(u, v)


def truncation_bound(grid: SpaceTimeGrid) -> float:
    """Tail weight 2^-ceil(L) dropped by the truncated dyadic sums."""
    return 2.0 ** (-math.ceil(grid.L))


def box_mollify(values: np.ndarray, k: int, axis: int = -1) -> np.ndarray:
    """Moving average of width ``k`` cells along ``axis`` with constant extension.

    Even widths use k + 1 taps with half weight at both ends, so the
    kernel stays centred.
    """
    if k <= 1:
        return np.array(values, float)
    a = np.moveaxis(np.asarray(values, float), axis, -1)
    half = k // 2
    taps = np.ones(2 * half + 1)
    if k % 2 == 0:
        taps[0] = taps[-1] = 0.5
    taps /= k
    p = np.pad(a, [(0, 0)] * (a.ndim - 1) + [(half, half)], mode="edge")
    n = a.shape[-1]
    out = sum(w * p[..., i:i + n] for i, w in enumerate(taps))
    return np.moveaxis(out, -1, axis)


__all__ = [
    "SpaceTimeGrid", "SpaceTimeField", "Shock", "PiecewiseBVSolution", "rasterize", "staircase",
    "du_norm", "dist_U", "dist_scrU", "dist_X", "truncation_bound", "field_from_function",
    "constant_field", "require_same_grid", "box_mollify",
]
