"""Atomic Young measures, their cost, moment reduction and the strip construction.

An atomic Young measure assigns to each cell of a space-time grid a finite
convex combination of Dirac masses. Only the moments mu(iota), mu(f) and
mu(sigma) enter the cost, so measures with equal moments have equal cost.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import roots_legendre

from .cost import CostReport, _cost_from_residual
from .errors import CurveCrossing, ReductionFailed, SeparationViolated
from .grid import SpaceTimeField, SpaceTimeGrid, require_same_grid
from .model import FluxModel
from .solvers import _neighbours


@dataclass(frozen=True, eq=False)
class AtomicYoungMeasure:
    """Weights and positions of ``n_atoms`` Dirac masses, each of shape (nt + 1, nx)."""

    grid: SpaceTimeGrid
    weights: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        p = np.array(self.positions, dtype=float)
        shape = (self.grid.nt + 1, self.grid.nx)
        if w.ndim == 2:
            w, p = w[None], p[None]
        if w.shape != p.shape or w.shape[1:] != shape:
            raise ValueError(f"weights and positions must have shape (n_atoms, {shape[0]}, {shape[1]})")
        if np.min(w) < -1e-14:
            raise ValueError("negative weight")
        if np.max(np.abs(w.sum(axis=0) - 1.0)) > 1e-12:
            raise ValueError("weights must sum to one in every cell")
        if p.min() < -1e-12 or p.max() > 1 + 1e-12:
            raise ValueError("atom positions must lie in [0, 1]")
        w.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "positions", p)

    @property
    def n_atoms(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def dirac(cls, u: SpaceTimeField) -> "AtomicYoungMeasure":
        return cls(u.grid, np.ones((1,) + u.values.shape), u.values[None])

    @classmethod
    def mixture(cls, beta: np.ndarray, nu1: "AtomicYoungMeasure", nu0: "AtomicYoungMeasure") -> "AtomicYoungMeasure":
        """beta * nu1 + (1 - beta) * nu0."""
        require_same_grid(nu1.grid, nu0.grid)
        beta = np.asarray(beta, float)
        w = np.concatenate([beta[None] * nu1.weights, (1 - beta)[None] * nu0.weights])
        p = np.concatenate([nu1.positions, nu0.positions])
        return cls(nu1.grid, w, p)

    def moment(self, F) -> np.ndarray:
        """mu(F) = sum_i alpha^i F(u^i) on the grid."""
        return np.sum(self.weights * F(self.positions), axis=0)

    def mean(self) -> np.ndarray:
        return self.moment(lambda v: v)

    def to_csv(self, path) -> None:
        """Stacked blocks, one per atom: rows (atom, kind, t, x, value) with kind alpha then u."""
        g = self.grid
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["atom", "kind", "t", "x", "value"])
            for i in range(self.n_atoms):
                for kind, arr in (("alpha", self.weights[i]), ("u", self.positions[i])):
                    for n, t in enumerate(g.t):
                        for x, val in zip(g.x, arr[n]):
                            w.writerow([i, kind, f"{t:.17g}", f"{x:.17g}", f"{val:.17g}"])

    @classmethod
    def from_csv(cls, path, grid: SpaceTimeGrid) -> "AtomicYoungMeasure":
        rows = list(csv.DictReader(open(path)))
        n_atoms = 1 + max(int(r["atom"]) for r in rows)
        shape = (n_atoms, grid.nt + 1, grid.nx)
        w = np.zeros(shape)
        p = np.zeros(shape)
        per = (grid.nt + 1) * grid.nx
        for i in range(n_atoms):
            block = rows[2 * i * per:(2 * i + 2) * per]
            w[i] = np.array([float(r["value"]) for r in block[:per]]).reshape(shape[1:])
            p[i] = np.array([float(r["value"]) for r in block[per:]]).reshape(shape[1:])
        return cls(grid, w, p)


@dataclass
class FluxPotential:
    """G on interfaces, one row per time step (nt, nx + 1)."""

    G: np.ndarray

    def conservation_defect(self, mu: AtomicYoungMeasure, model: FluxModel) -> float:
        """max |mu(iota)_t + mu(f)_x + G_x| in the central discretisation."""
        g = mu.grid
        iota = mu.mean()
        Fm = _central_moment_flux(mu, model)
        r = (iota[1:] - iota[:-1]) / g.dt + np.diff(Fm[:-1] + self.G, axis=1) / g.dx
        return float(np.max(np.abs(r)))


def _central_moment_flux(mu: AtomicYoungMeasure, model: FluxModel) -> np.ndarray:
    a, b = _neighbours(mu.moment(model.f), mu.grid.boundary_mode == "periodic")
    return 0.5 * (a + b)


def cost_mv(model: FluxModel, mu: AtomicYoungMeasure, bc: str = "neumann", atol: float = 1e-12,
            rtol: float = 1e-6) -> CostReport:
    """1/2 sum G^2 / mu(sigma) with mu(iota)_t + mu(f)_x = -G_x.

    Interface values of mu(f) and mu(sigma) are averages of the two
    neighbouring cells, so that for mu = delta_u this is exactly the
    zero-viscosity cost of u with the central flux.
    """
    g = mu.grid
    iota = mu.mean()
    Fm = _central_moment_flux(mu, model)
    r = (iota[1:] - iota[:-1]) / g.dt + np.diff(Fm[:-1], axis=1) / g.dx
    sig = mu.moment(model.sigma)
    return _cost_from_residual(_SigmaPassThrough(model), _Wrap(g, sig), r, bc, atol, rtol, "inf",
                               {"functional": "I_mv", "n_atoms": mu.n_atoms})


class _SigmaPassThrough:
    """Stand-in model whose sigma is the identity, so interface averages act on mu(sigma)."""

    def __init__(self, model):
        self.model = model

    @staticmethod
    def sigma(v):
        return np.asarray(v, float)


@dataclass
class _Wrap:
    grid: SpaceTimeGrid
    values: np.ndarray


# ---------------------------------------------------------------------------
# moment reduction


@dataclass
class DiscreteMeasure:
    positions: np.ndarray
    weights: np.ndarray

    def moments(self, model: FluxModel) -> np.ndarray:
        p, w = self.positions, self.weights
        return np.array([w @ p, w @ model.f(p), w @ model.sigma(p)])


def _moment_map(model: FluxModel, v) -> np.ndarray:
    v = np.asarray(v, float)
    return np.stack([v, model.f(v), model.sigma(v)], axis=-1)


def _caratheodory(P: np.ndarray, w: np.ndarray, tol: float = 1e-14):
    """Drop support points until the rows [1, P] of the survivors are independent."""
    idx = np.nonzero(w > tol)[0]
    w = w.copy()
    while True:
        A = np.vstack([np.ones(len(idx)), P[idx].T])
        if len(idx) <= 1:
            break
        _, s, vt = np.linalg.svd(A)
        rank = int(np.sum(s > 1e-12 * s[0]))
        if rank >= len(idx):
            break
        z = vt[-1]
        if not np.any(z > 1e-15):
            z = -z
        pos = z > 1e-15
        ratios = np.where(pos, w[idx] / np.where(pos, z, 1.0), np.inf)
        drop = int(np.argmin(ratios))
        w[idx] = np.clip(w[idx] - ratios[drop] * z, 0.0, None)
        w[idx[drop]] = 0.0
        idx = idx[w[idx] > tol]
    return idx, w


def reduce_to_atoms(model: FluxModel, values, probs, n_search: int = 101, tol: float = 1e-9) -> DiscreteMeasure:
    """At most three Dirac masses with the same moments of (iota, f, sigma) as ``probs`` on ``values``.

    Support points of the input are eliminated first (Caratheodory). If
    more than three remain, the three-point representation is searched with
    two positions on an ``n_search``-point grid and the third solved for
    continuously, which is where connectedness of [0, 1] is needed.
    """
    v = np.asarray(values, float)
    p = np.asarray(probs, float)
    if v.shape != p.shape or np.any(p < -1e-15) or abs(p.sum() - 1) > 1e-12:
        raise ValueError("probs must be a probability vector over values")
    P = _moment_map(model, v)
    target = p @ P
    idx, w = _caratheodory(P, p)
    if len(idx) <= 3:
        sub = P[idx]
        A = np.vstack([np.ones(len(idx)), sub.T])
        alpha = np.linalg.lstsq(A, np.concatenate([[1.0], target]), rcond=None)[0]
        out = DiscreteMeasure(v[idx], np.clip(alpha, 0.0, None))
        if np.max(np.abs(out.moments(model) - target)) <= tol and np.min(alpha) >= -tol:
            return out
    return _three_point_search(model, target, n_search, tol)


def _three_point_search(model, target, n_search, tol):
    grid = np.linspace(0.0, 1.0, n_search)
    Pg = _moment_map(model, grid) - target
    fine = np.linspace(0.0, 1.0, 4 * n_search + 1)
    Pf = _moment_map(model, fine) - target
    for i in range(n_search):
        a = Pg[i]
        for j in range(i + 1, n_search):
            b = Pg[j]
            nrm = np.cross(a, b)
            d = Pf @ nrm
            s = np.sign(d)
            hits = np.nonzero(s[:-1] * s[1:] <= 0)[0]
            for h_ in hits:
                lo, hi = fine[h_], fine[h_ + 1]
                dlo = d[h_]
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    dm = float((_moment_map(model, mid) - target) @ nrm)
                    if np.sign(dm) == np.sign(dlo):
                        lo, dlo = mid, dm
                    else:
                        hi = mid
                v3 = 0.5 * (lo + hi)
                pts = np.array([grid[i], grid[j], v3])
                A = np.vstack([np.ones(3), _moment_map(model, pts).T])
                alpha = np.linalg.lstsq(A, np.concatenate([[1.0], target]), rcond=None)[0]
                if np.min(alpha) >= -1e-12:
                    out = DiscreteMeasure(pts, np.clip(alpha, 0.0, None) / np.sum(np.clip(alpha, 0.0, None)))
                    if np.max(np.abs(out.moments(model) - target)) <= tol:
                        return out
    raise ReductionFailed("no nonnegative three-point representation found; refine n_search")


# ---------------------------------------------------------------------------
# strip construction


class _Fields:
    """Piecewise linear (in x and in t) interpolants of grid moment fields."""

    def __init__(self, grid: SpaceTimeGrid, **arrays):
        self.grid = grid
        self.x = grid.x
        self.arrays = arrays

    def row(self, name, t):
        g = self.grid
        s = min(max(t / g.dt, 0.0), g.nt)
        n = min(int(math.floor(s)), g.nt - 1)
        th = s - n
        a = self.arrays[name]
        return (1 - th) * a[n] + th * a[n + 1]

    def row_dt(self, name, n):
        a = self.arrays[name]
        g = self.grid
        if n == 0:
            return (a[1] - a[0]) / g.dt
        if n == g.nt:
            return (a[-1] - a[-2]) / g.dt
        return (a[n + 1] - a[n - 1]) / (2 * g.dt)

    def at(self, name, t, x):
        return np.interp(x, self.x, self.row(name, t))


def _cumulative_linear(x, y):
    """Cumulative integral of the linear interpolant at the nodes."""
    return np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))])


def _integral_linear(x, y, C, a, b):
    """Integral of the linear interpolant (constant beyond the ends) from a to b, vectorised."""

    def prim(s):
        s = np.asarray(s, float)
        out = np.empty_like(s)
        left = s <= x[0]
        right = s >= x[-1]
        mid = ~(left | right)
        out[left] = (s[left] - x[0]) * y[0]
        out[right] = C[-1] + (s[right] - x[-1]) * y[-1]
        if np.any(mid):
            k = np.clip(np.searchsorted(x, s[mid], side="right") - 1, 0, len(x) - 2)
            dxk = s[mid] - x[k]
            slope = (y[k + 1] - y[k]) / (x[k + 1] - x[k])
            out[mid] = C[k] + y[k] * dxk + 0.5 * slope * dxk ** 2
        return out

    return prim(b) - prim(a)


def _integral_product(x, y, z, a, b):
    """Integral of the product of two linear interpolants (constant beyond the ends) from a to b."""
    hx = np.diff(x)
    sy = np.diff(y) / hx
    sz = np.diff(z) / hx

    def part(k, d):
        return y[k] * z[k] * d + 0.5 * (y[k] * sz[k] + z[k] * sy[k]) * d ** 2 + sy[k] * sz[k] * d ** 3 / 3

    C = np.concatenate([[0.0], np.cumsum(part(np.arange(len(hx)), hx))])

    def prim(s):
        s = np.atleast_1d(np.asarray(s, float))
        out = np.empty_like(s)
        left = s <= x[0]
        right = s >= x[-1]
        mid = ~(left | right)
        out[left] = (s[left] - x[0]) * y[0] * z[0]
        out[right] = C[-1] + (s[right] - x[-1]) * y[-1] * z[-1]
        if np.any(mid):
            k = np.clip(np.searchsorted(x, s[mid], side="right") - 1, 0, len(x) - 2)
            out[mid] = C[k] + part(k, s[mid] - x[k])
        return out

    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    return prim(b) - prim(a)


class SliceApproximation:
    """Alternating strips of nu1 and nu0 whose curves follow the Rankine-Hugoniot speed.

    Built by :func:`slice_approximation`. ``gamma[n, m]`` is curve
    j = -h k + m at time t_n, ``widths[n, m]`` the width of the nu1 part
    of strip j.
    """

    def __init__(self, model, nu0, nu1, beta, k, h, gamma, widths, fields):
        self.model = model
        self.nu0 = nu0
        self.nu1 = nu1
        self.beta = beta
        self.k = k
        self.h = h
        self.gamma = gamma
        self.widths = widths
        self.fields = fields
        self.grid = nu0.grid

    @property
    def j_range(self):
        return np.arange(-self.h * self.k, self.h * self.k + 1)

    # -- geometry --------------------------------------------------------

    def _speeds(self):
        """Time derivatives of the curves and of the curves plus widths (central differences)."""
        g = self.grid
        gd = np.gradient(self.gamma, g.dt, axis=0, edge_order=2)
        ed = np.gradient(self.gamma[:, :-1] + self.widths, g.dt, axis=0, edge_order=2)
        return gd, ed

    def pieces(self, n):
        """Breakpoints at time t_n and the state (1 for nu1, 0 for nu0) on each piece."""
        g = self.grid
        gam = self.gamma[n]
        mid = gam[:-1] + self.widths[n]
        # [-L, gam_0] nu1, then [gam_j, mid_j] nu1 and [mid_j, gam_{j+1}] nu0, then [gam_last, L] nu1
        bps = [-g.L, gam[0]]
        st = [1]
        for j in range(len(mid)):
            bps += [mid[j], gam[j + 1]]
            st += [1, 0]
        bps.append(g.L)
        st.append(1)
        return np.array(bps), np.array(st)

    # -- moments and flux potential --------------------------------------

    def _moment(self, state, name, t, x):
        key = ("nu1_" if state else "nu0_") + name
        return self.fields.at(key, t, x)

    def flux_potential(self, n, x):
        """G at time t_n and points x, integrating the conservation law from -L."""
        g = self.grid
        t = g.t[n]
        x = np.asarray(x, float)
        bps, st = self.pieces(n)
        gd, ed = self._speeds()
        # speeds of the interior breakpoints: gamma_0, then (mid_j, gamma_{j+1}) pairs
        speeds = np.empty(len(bps) - 2)
        speeds[0] = gd[n, 0]
        speeds[1::2] = ed[n]
        speeds[2::2] = gd[n, 1:]
        s = bps[1:-1]
        fx = self.fields
        f1, f0 = fx.at("nu1_f", t, s), fx.at("nu0_f", t, s)
        i1, i0 = fx.at("nu1_iota", t, s), fx.at("nu0_iota", t, s)
        sign = st[1:] - st[:-1]  # +1 when entering nu1, -1 when leaving it
        jumps = -sign * (f1 - f0) + speeds * sign * (i1 - i0)
        incr = self._piece_increment(st, n, bps[:-1], bps[1:])
        Gleft = np.concatenate([[0.0], np.cumsum(incr[:-1] + jumps)])
        which = np.clip(np.searchsorted(bps, x, side="right") - 1, 0, len(st) - 1)
        return Gleft[which] + self._piece_increment(st[which], n, bps[which], x)

    def _piece_increment(self, state, n, a, b):
        """-[nu(f)(b) - nu(f)(a)] - int_a^b nu(iota)_t dy, with nu = nu1 where state is 1."""
        g = self.grid
        t = g.t[n]
        state = np.asarray(state)
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        out = np.empty(np.broadcast(state, a).shape)
        for flag, pre in ((1, "nu1_"), (0, "nu0_")):
            sel = state == flag
            if not np.any(sel):
                continue
            aa, bb = a[sel], b[sel]
            df = self.fields.at(pre + "f", t, bb) - self.fields.at(pre + "f", t, aa)
            it = self.fields.row_dt(pre + "iota", n)
            C = _cumulative_linear(g.x, it)
            out[sel] = -df - _integral_linear(g.x, it, C, aa, bb)
        return out

    def target_flux_potential(self, n, x):
        """G of the mixture beta nu1 + (1 - beta) nu0 at time t_n."""
        g = self.grid
        t = g.t[n]
        fx = self.fields
        mu_f = lambda s: fx.at("beta", t, s) * fx.at("nu1_f", t, s) + (1 - fx.at("beta", t, s)) * fx.at("nu0_f", t, s)
        x = np.asarray(x, float)
        # d/dt mu(iota) with the product rule on the interpolants
        b_t = fx.row_dt("beta", n)
        i1, i0 = fx.row("nu1_iota", t), fx.row("nu0_iota", t)
        i1t, i0t = fx.row_dt("nu1_iota", n), fx.row_dt("nu0_iota", n)
        bb = fx.row("beta", t)
        integral = (_integral_product(g.x, b_t, i1 - i0, -g.L, x)
                    + _integral_product(g.x, bb, i1t - i0t, -g.L, x)
                    + _integral_linear(g.x, i0t, _cumulative_linear(g.x, i0t), np.full_like(x, -g.L), x))
        return -(mu_f(x) - mu_f(np.array(-g.L))) - integral

    # -- costs -------------------------------------------------------------

    def cost(self, order: int = 6) -> float:
        """1/2 int G^2 / mu(sigma) over [0, T] x [-L, L], Gauss on every piece, trapezoid in time."""
        g = self.grid
        gx, gw = roots_legendre(order)
        tw = np.full(g.nt + 1, g.dt)
        tw[0] = tw[-1] = 0.5 * g.dt
        total = 0.0
        for n in range(g.nt + 1):
            bps, st = self.pieces(n)
            a, b = bps[:-1], bps[1:]
            keep = b > a
            mids = 0.5 * (a + b)
            half = 0.5 * (b - a)
            pts = (mids[:, None] + half[:, None] * gx[None, :])
            ww = half[:, None] * gw[None, :]
            flat = pts[keep].ravel()
            G = self.flux_potential(n, flat)
            stt = np.repeat(st[keep], order)
            sig = np.where(stt == 1, self.fields.at("nu1_sigma", g.t[n], flat),
                           self.fields.at("nu0_sigma", g.t[n], flat))
            total += tw[n] * 0.5 * float(np.sum(ww[keep].ravel() * G ** 2 / sig))
        return total

    def target_cost(self, order: int = 6) -> float:
        g = self.grid
        gx, gw = roots_legendre(order)
        edges = np.concatenate([[-g.L], g.x, [g.L]])
        mids = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * np.diff(edges)
        pts = (mids[:, None] + half[:, None] * gx[None, :]).ravel()
        ww = (half[:, None] * gw[None, :]).ravel()
        tw = np.full(g.nt + 1, g.dt)
        tw[0] = tw[-1] = 0.5 * g.dt
        total = 0.0
        fx = self.fields
        for n in range(g.nt + 1):
            t = g.t[n]
            G = self.target_flux_potential(n, pts)
            b = fx.at("beta", t, pts)
            sig = b * fx.at("nu1_sigma", t, pts) + (1 - b) * fx.at("nu0_sigma", t, pts)
            total += tw[n] * 0.5 * float(ww @ (G ** 2 / sig))
        return total

    def width_deviation(self) -> float:
        """max over strips and times of |beta_j - int_{gamma_j}^{gamma_{j+1}} beta dx|."""
        g = self.grid
        worst = 0.0
        for n in range(g.nt + 1):
            bt = self.fields.row("beta", g.t[n])
            C = _cumulative_linear(g.x, bt)
            gam = self.gamma[n]
            avg = _integral_linear(g.x, bt, C, gam[:-1], gam[1:])
            worst = max(worst, float(np.max(np.abs(self.widths[n] - avg))))
        return worst

    def strip_balance_defect(self) -> float:
        """max |int of mu^{hk}(iota) - int of mu(iota)| over one strip, the balance fixing the widths."""
        g = self.grid
        worst = 0.0
        fx = self.fields
        for n in range(g.nt + 1):
            t = g.t[n]
            i1, i0, bt = fx.row("nu1_iota", t), fx.row("nu0_iota", t), fx.row("beta", t)
            C1, C0 = _cumulative_linear(g.x, i1), _cumulative_linear(g.x, i0)
            gam = self.gamma[n]
            mid = gam[:-1] + self.widths[n]
            strip = _integral_linear(g.x, i1, C1, gam[:-1], mid) + _integral_linear(g.x, i0, C0, mid, gam[1:])
            target = _integral_product(g.x, bt, i1 - i0, gam[:-1], gam[1:]) + _integral_linear(g.x, i0, C0, gam[:-1], gam[1:])
            worst = max(worst, float(np.max(np.abs(strip - target))))
        return worst

    def moment_field(self, F_name: str, grid: Optional[SpaceTimeGrid] = None, sub: int = 8) -> np.ndarray:
        """Cell averages (by ``sub`` midpoint samples per cell) of mu^{hk}(F) for F in iota, f, sigma."""
        g = grid or self.grid
        offs = (np.arange(sub) + 0.5) / sub - 0.5
        pts = (g.x[:, None] + offs[None, :] * g.dx).ravel()
        out = np.empty((g.nt + 1, g.nx))
        for n in range(g.nt + 1):
            bps, st = self.pieces(n)
            which = np.clip(np.searchsorted(bps, pts, side="right") - 1, 0, len(st) - 1)
            s = st[which]
            val = np.where(s == 1, self.fields.at("nu1_" + F_name, g.t[n], pts),
                           self.fields.at("nu0_" + F_name, g.t[n], pts))
            out[n] = val.reshape(g.nx, sub).mean(axis=1)
        return out

    def coverage(self, n: int) -> np.ndarray:
        """Fraction of each cell occupied by nu1 at time t_n."""
        g = self.grid
        bps, st = self.pieces(n)
        cum = np.concatenate([[0.0], np.cumsum(st * np.diff(bps))])
        C = np.interp(g.x_faces, bps, cum)
        return np.clip(np.diff(C) / g.dx, 0.0, 1.0)

    def as_young_measure(self) -> AtomicYoungMeasure:
        """Cell-wise mixture theta nu1 + (1 - theta) nu0 with theta the nu1 coverage of the cell."""
        theta = np.stack([self.coverage(n) for n in range(self.grid.nt + 1)])
        return AtomicYoungMeasure.mixture(theta, self.nu1, self.nu0)

    def target_moment(self, F_name: str) -> np.ndarray:
        a = self.fields.arrays
        return a["beta"] * a["nu1_" + F_name] + (1 - a["beta"]) * a["nu0_" + F_name]


def slice_approximation(model: FluxModel, nu0: AtomicYoungMeasure, nu1: AtomicYoungMeasure, beta,
                        k: int, h: int, r: float = 1e-3, bisect_tol: float = 1e-12) -> SliceApproximation:
    """Strips of width about beta/k (nu1) and (1 - beta)/k (nu0) for |j| <= h k.

    The curves gamma_j start at j/k and move with the Rankine-Hugoniot
    speed between nu0 and nu1 (RK4 with the grid time step); the nu1 width
    of each strip is fixed by bisection so that the strip carries the same
    amount of mu(iota) as the mixture.
    """
    require_same_grid(nu0.grid, nu1.grid)
    g = nu0.grid
    beta = np.asarray(beta, float)
    if beta.shape != (g.nt + 1, g.nx):
        raise ValueError("beta must be a grid field")
    if beta.min() < 0 or beta.max() > 1:
        raise ValueError("beta must take values in [0, 1]")
    arrays = {}
    for pre, nu in (("nu0_", nu0), ("nu1_", nu1)):
        arrays[pre + "iota"] = nu.mean()
        arrays[pre + "f"] = nu.moment(model.f)
        arrays[pre + "sigma"] = nu.moment(model.sigma)
    arrays["beta"] = beta
    sep = arrays["nu1_iota"] - arrays["nu0_iota"]
    if sep.min() < r:
        raise SeparationViolated(f"nu1(iota) - nu0(iota) drops to {sep.min():.3g} < r = {r}")
    fx = _Fields(g, **arrays)

    def speed(t, x):
        num = fx.at("nu1_f", t, x) - fx.at("nu0_f", t, x)
        den = fx.at("nu1_iota", t, x) - fx.at("nu0_iota", t, x)
        return num / den

    js = np.arange(-h * k, h * k + 2)
    gam = np.empty((g.nt + 1, len(js)))
    gam[0] = js / k
    if gam[0, 0] <= -g.L or gam[0, -1] >= g.L:
        raise ValueError("the strips do not fit into the grid window; reduce h or enlarge L")
    dt = g.dt
    for n in range(g.nt):
        t, y = g.t[n], gam[n]
        k1 = speed(t, y)
        k2 = speed(t + dt / 2, y + dt / 2 * k1)
        k3 = speed(t + dt / 2, y + dt / 2 * k2)
        k4 = speed(t + dt, y + dt * k3)
        gam[n + 1] = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if np.any(np.diff(gam[n + 1]) <= 0):
            raise CurveCrossing(f"adjacent curves cross before t = {g.t[n + 1]}")
    widths = np.empty((g.nt + 1, len(js) - 1))
    for n in range(g.nt + 1):
        t = g.t[n]
        d = fx.row("nu1_iota", t) - fx.row("nu0_iota", t)
        bt = fx.row("beta", t)
        C = _cumulative_linear(g.x, d)
        a, b = gam[n, :-1], gam[n, 1:]
        target = _integral_product(g.x, bt, d, a, b)
        lo = np.zeros_like(a)
        hi = b - a
        while np.max(hi - lo) > bisect_tol:
            mid = 0.5 * (lo + hi)
            val = _integral_linear(g.x, d, C, a, a + mid)
            big = val > target
            hi = np.where(big, mid, hi)
            lo = np.where(big, lo, mid)
        widths[n] = 0.5 * (lo + hi)
    return SliceApproximation(model, nu0, nu1, beta, k, h, gam, widths, fx)


__all__ = [
    "AtomicYoungMeasure", "FluxPotential", "cost_mv", "DiscreteMeasure", "reduce_to_atoms",
    "SliceApproximation", "slice_approximation",
]
