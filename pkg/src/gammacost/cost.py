"""Cost functionals on space-time fields and on piecewise constant solutions.

The parabolic cost of a field u at viscosity eps is, slice by slice, the
squared weighted dual norm of the residual

    r = u_t + f(u)_x - (eps/2) (D(u) u_x)_x

in conservation form. In one space dimension the weighted elliptic problem
needs no linear solve: the flux G = sigma Psi_x satisfies G_x = -r, so G is
a running sum of the residual and the cost is 1/2 sum G^2 / sigma.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize
from scipy.special import roots_legendre

from .errors import GridMismatch, SingularConductivity, SingularWeight, SupportViolation
from .grid import PiecewiseBVSolution, SpaceTimeField, box_mollify
from .model import EntropyPair, EntropySampler, FluxModel, RelaxationKernel, envelopes
from .solvers import (SolverConfig, gradient, interface_flux, interface_sigma, interface_weights,
                      _neighbours)


@dataclass
class CostReport:
    """Result of a cost evaluation.

    ``value`` is ``math.inf`` when the cost is infinite; ``infinite`` says
    so explicitly. ``potential`` holds the discrete Psi when it exists.
    """

    value: float
    residual_l2: float = 0.0
    potential: Optional[np.ndarray] = None
    flux: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.value >= 0 or math.isinf(self.value)):
            raise ValueError(f"cost must be nonnegative, got {self.value}")

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)

    def scaled(self, factor: float, **extra) -> "CostReport":
        diag = dict(self.diagnostics, **extra)
        return CostReport(self.value * factor if not self.infinite else math.inf,
                          self.residual_l2, self.potential, self.flux, diag)

    def record(self) -> dict:
        out = {"value": "inf" if self.infinite else self.value, "infinite": int(self.infinite),
               "residual_l2": self.residual_l2}
        out.update(self.diagnostics)
        return out

    def to_text(self) -> str:
        """Flat ``key = value`` record."""
        lines = []
        for k, v in self.record().items():
            lines.append(f"{k} = {_fmt(v)}")
        return "\n".join(lines) + "\n"

    def csv_header(self) -> str:
        return ",".join(self.record().keys())

    def csv_row(self) -> str:
        return ",".join(_fmt(v) for v in self.record().values())


def _fmt(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.17g}"
    return str(v)


# ---------------------------------------------------------------------------
# parabolic cost


def residual(model: FluxModel, u: SpaceTimeField, eps: float, cfg: SolverConfig = SolverConfig()):
    """Conservation-form residual r (nt, nx) and the interface fluxes (nt, nx + 1)."""
    g = u.grid
    periodic = g.boundary_mode == "periodic"
    v = u.values
    F = np.stack([interface_flux(model, v[n], v[n + 1], eps, g.dx, cfg, periodic) for n in range(g.nt)])
    r = (v[1:] - v[:-1]) / g.dt + np.diff(F, axis=1) / g.dx
    return r, F


def dual_flux(r: np.ndarray, sigma: np.ndarray, h: np.ndarray, dx: float, bc: str = "neumann",
              atol: float = 1e-12, rtol: float = 1e-6):
    """Minimal-energy G on the nx + 1 interfaces with G_{j+1} - G_j = -dx r_j.

    Interfaces where sigma vanishes force G = 0 there and split the line
    into blocks. The outer interfaces force G = 0 for ``bc='neumann'`` and
    leave it free for ``bc='dirichlet'`` (test functions vanishing at the
    window edges). A block with both ends forced needs zero total residual;
    a nonzero total beyond ``atol + rtol*|r|_1`` makes the cost infinite.

    Returns ``(value, G, defect, infinite)`` with value = 1/2 sum h G^2/sigma.
    """
    nx = len(r)
    zero = sigma <= 0.0
    forced = zero.copy()
    scale = atol + rtol * dx * float(np.sum(np.abs(r)))
    defect = 0.0
    infinite = False
    if bc == "neumann":
        forced[0] = forced[-1] = True
    elif bc == "periodic":
        # both ends are one interface: G must come back to its start value
        defect = abs(dx * float(np.sum(r)))
        infinite = defect > scale
        r = r - float(np.sum(r)) / nx
    elif bc != "dirichlet":
        raise ValueError("bc must be 'neumann', 'dirichlet' or 'periodic'")
    cuts = [0] + [j for j in range(1, nx) if zero[j]] + [nx]
    G = np.zeros(nx + 1)
    for a, b in zip(cuts[:-1], cuts[1:]):
        # cells a..b-1 between interfaces a and b
        steps = -dx * np.cumsum(r[a:b])
        Gp = np.concatenate([[0.0], steps])
        fa, fb = forced[a], forced[b]
        if fa and fb:
            mis = Gp[-1]
            defect = max(defect, abs(mis))
            if abs(mis) > scale:
                infinite = True
            # spread the admissible round-off so that G vanishes at both ends
            Gp = Gp - mis * np.linspace(0.0, 1.0, b - a + 1)
        elif fa:
            pass
        elif fb:
            Gp = Gp - Gp[-1]
        else:
            w = h[a:b + 1] / sigma[a:b + 1]
            Gp = Gp - float(w @ Gp) / float(w.sum())
        G[a:b + 1] = Gp
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = np.where(zero, 0.0, G ** 2 / np.where(zero, 1.0, sigma))
    value = math.inf if infinite else 0.5 * float(h @ dens)
    return value, G, defect, infinite


def _cost_from_residual(model, u, r, bc, atol, rtol, singular, extra_diag):
    g = u.grid
    h = interface_weights(g)
    periodic = g.boundary_mode == "periodic"
    value = 0.0
    Gs = np.zeros((g.nt, g.nx + 1))
    Psi = np.zeros((g.nt, g.nx))
    defect = 0.0
    singular_hits = 0
    for n in range(g.nt):
        s = interface_sigma(model, u.values[n], periodic)
        bc_n = "periodic" if periodic else bc
        val, G, dfc, inf = dual_flux(r[n], s, h, g.dx, bc_n, atol, rtol)
        if inf and np.any(s <= 0):
            singular_hits += 1
            if singular == "raise":
                raise SingularWeight(f"residual cannot be carried at time step {n}: sigma vanishes")
        defect = max(defect, dfc)
        Gs[n] = G
        with np.errstate(divide="ignore", invalid="ignore"):
            psi_x = np.where(s > 0, G / np.where(s > 0, s, 1.0), 0.0)
        Psi[n] = np.cumsum(psi_x[:-1]) * g.dx
        value += g.dt * val
    diag = {"nx": g.nx, "nt": g.nt, "T": g.T, "L": g.L, "dx": g.dx, "dt": g.dt, "bc": bc,
            "compatibility_defect": defect, "singular_slices": singular_hits}
    diag.update(extra_diag)
    rl2 = float(math.sqrt(g.dt * g.dx * float(np.sum(r ** 2))))
    return CostReport(value, rl2, Psi, Gs, diag)


def cost_I_eps(model: FluxModel, u: SpaceTimeField, eps: float, cfg: SolverConfig = SolverConfig(),
               bc: str = "neumann", atol: float = 1e-12, rtol: float = 1e-6,
               singular: str = "inf") -> CostReport:
    """Parabolic cost of ``u``: sum over time steps of dt * 1/2 sum h G^2 / sigma(u).

    The residual uses the fluxes of ``cfg`` so that solver outputs with the
    same configuration cost only round-off. ``singular='raise'`` turns an
    infinite cost caused by vanishing sigma into :class:`SingularWeight`.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    r, _ = residual(model, u, eps, cfg)
    return _cost_from_residual(model, u, r, bc, atol, rtol, singular,
                               {"eps": eps, "scheme": cfg.scheme, "stepping": cfg.viscous_stepping})


def cost_H_eps(model: FluxModel, u: SpaceTimeField, eps: float, cfg: SolverConfig = SolverConfig(),
               **kw) -> CostReport:
    """The rescaled cost I_eps / eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    rep = cost_I_eps(model, u, eps, cfg, **kw)
    return rep.scaled(1.0 / eps, I_eps=rep.value, functional="H_eps")


def dual_pairing(model: FluxModel, u: SpaceTimeField, eps: float, phi: np.ndarray,
                 cfg: SolverConfig = SolverConfig(), bc: str = "neumann") -> float:
    """l(phi) - 1/2 <<sigma phi_x, phi_x>> for a grid function phi of shape (nt, nx).

    With ``bc='dirichlet'`` phi is extended by zero outside the window.
    """
    g = u.grid
    r, _ = residual(model, u, eps, cfg)
    lin = g.dt * g.dx * float(np.sum(r * phi))
    quad = 0.0
    for n in range(g.nt):
        s = interface_sigma(model, u.values[n])
        dphi = np.diff(phi[n]) / g.dx
        quad += g.dx * float(np.sum(s[1:-1] * dphi ** 2))
        if bc == "dirichlet":
            h0 = 0.5 * g.dx
            quad += h0 * (s[0] * (phi[n, 0] / h0) ** 2 + s[-1] * (phi[n, -1] / h0) ** 2)
    return lin - 0.5 * g.dt * quad


def apriori_ratio(model: FluxModel, u: SpaceTimeField, eps: float, H_value: float) -> float:
    """eps * int u_x^2 / (H_eps + L + 1), the quantity bounded by the a-priori estimate."""
    g = u.grid
    ux = gradient(u.values[:-1], g.dx)[:, 1:-1]
    energy = eps * g.dt * g.dx * float(np.sum(ux ** 2))
    return energy / (H_value + g.L + 1.0)


# ---------------------------------------------------------------------------
# entropy production


@dataclass(frozen=True)
class TestFunction:
    """phi(t, x) with its partial derivatives, as callables on arrays."""

    phi: Callable
    phi_t: Callable
    phi_x: Callable


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (10 - 15 * s + 6 * s * s)


def _smoothstep_d(s):
    inside = (s > 0) & (s < 1)
    return np.where(inside, 30 * s * s * (1 - s) ** 2, 0.0)


def _plateau_1d(lo, hi, ramp):
    def val(y):
        return _smoothstep((y - lo) / ramp) * _smoothstep((hi - y) / ramp)

    def der(y):
        a = (y - lo) / ramp
        b = (hi - y) / ramp
        return (_smoothstep_d(a) * _smoothstep(b) - _smoothstep(a) * _smoothstep_d(b)) / ramp

    return val, der


def plateau(t0: float, t1: float, x0: float, x1: float, ramp: float) -> TestFunction:
    """Product of C^2 plateaus: 1 on [t0+ramp, t1-ramp] x [x0+ramp, x1-ramp], 0 outside the box."""
    pt, dpt = _plateau_1d(t0, t1, ramp)
    px, dpx = _plateau_1d(x0, x1, ramp)
    return TestFunction(phi=lambda t, x: pt(t) * px(x),
                        phi_t=lambda t, x: dpt(t) * px(x),
                        phi_x=lambda t, x: pt(t) * dpx(x))


def _time_weights(grid):
    w = np.full(grid.nt + 1, grid.dt)
    w[0] = w[-1] = 0.5 * grid.dt
    return w


def entropy_production(model: FluxModel, u: SpaceTimeField, pair: EntropyPair, test: TestFunction,
                       tol: float = 1e-14) -> float:
    """-<<eta(u), phi_t>> - <<q(u), phi_x>> by quadrature on the grid nodes."""
    g = u.grid
    T, X = np.meshgrid(g.t, g.x, indexing="ij")
    edge = np.concatenate([test.phi(g.t, np.full_like(g.t, -g.L)), test.phi(g.t, np.full_like(g.t, g.L)),
                           test.phi(np.zeros_like(g.x), g.x), test.phi(np.full_like(g.x, g.T), g.x)])
    if np.max(np.abs(edge)) > tol:
        raise SupportViolation("test function does not vanish on the boundary of the box")
    v = u.values
    dens = pair.eta(v) * test.phi_t(T, X) + pair.q(v) * test.phi_x(T, X)
    return -float(_time_weights(g) @ dens.sum(axis=1)) * g.dx


def sampled_production(model: FluxModel, u: SpaceTimeField, sampler: EntropySampler) -> float:
    """-int [theta_t(u, t, x) + Q_x(u, t, x)] dt dx by quadrature on the grid nodes."""
    g = u.grid
    t0, t1, x0, x1 = sampler.box
    if t0 < 0 or t1 > g.T or x0 < -g.L or x1 > g.L:
        raise SupportViolation("sampler support box leaves the grid")
    T, X = np.meshgrid(g.t, g.x, indexing="ij")
    v = u.values
    dens = sampler.theta_t(v, T, X) + sampler.Q_x(v, T, X)
    return -float(_time_weights(g) @ dens.sum(axis=1)) * g.dx


def upwind_entropy_flux(model: FluxModel, pair: EntropyPair, u: np.ndarray) -> np.ndarray:
    """q taken on the upwind side of each interface, the side given by the jump speed."""
    a, b = _neighbours(u, False)
    fa, fb = model.f(a), model.f(b)
    du = b - a
    with np.errstate(divide="ignore", invalid="ignore"):
        speed = np.where(np.abs(du) > 1e-14, (fb - fa) / np.where(du == 0, 1.0, du),
                         model.f_prime(0.5 * (a + b)))
    return np.where(speed >= 0, pair.q(a), pair.q(b))


def production_density(model: FluxModel, u: SpaceTimeField, pair: EntropyPair) -> np.ndarray:
    """Discrete eta(u)_t + q(u)_x on cells, shape (nt, nx)."""
    g = u.grid
    v = u.values
    Q = np.stack([upwind_entropy_flux(model, pair, v[n]) for n in range(g.nt)])
    return (pair.eta(v[1:]) - pair.eta(v[:-1])) / g.dt + np.diff(Q, axis=1) / g.dx


def tv_positive_part(model: FluxModel, u: SpaceTimeField, pair: EntropyPair,
                     L_window: Optional[float] = None, m: int = 4) -> float:
    """Mass of the positive part of the mollified entropy production on [0,T] x [-L_window, L_window].

    The production density is eta(u)_t + q(u)_x with the entropy flux
    taken upwind at each interface; it is averaged over ``m`` cells in x and
    in t before its positive part is integrated.
    """
    g = u.grid
    dens = production_density(model, u, pair)
    sm = box_mollify(box_mollify(dens, m, axis=1), m, axis=0)
    Lw = g.L if L_window is None else L_window
    cells = np.abs(g.x) <= Lw + 1e-12 * g.L
    return float(np.sum(np.maximum(sm[:, cells], 0.0))) * g.dt * g.dx


# ---------------------------------------------------------------------------
# jump functionals


def jump_kernel_rho(model: FluxModel, v, u_plus, u_minus):
    """rho(v, u+, u-) = [f(u-)(u+ - v) + f(u+)(v - u-) - f(v)(u+ - u-)] on [min, max], zero outside."""
    v = np.asarray(v, float)
    up = np.asarray(u_plus, float)
    um = np.asarray(u_minus, float)
    fm = model.f(um)
    fp = model.f(up)
    val = fm * (up - v) + fp * (v - um) - model.f(v) * (up - um)
    inside = (np.minimum(up, um) <= v) & (v <= np.maximum(up, um))
    return np.where(inside, val, 0.0)


def _rho_scale(model, a, b):
    return abs(b - a) * (abs(float(model.f(np.array(a)))) + abs(float(model.f(np.array(b)))) + 1.0)


def _clip_range(model, a, b, delta):
    lo, hi = min(a, b), max(a, b)
    clipped = 0.0
    s_lo = float(model.sigma(np.array(lo)))
    s_hi = float(model.sigma(np.array(hi)))
    if s_lo <= 0:
        clipped += min(delta, hi - lo)
        lo = lo + delta
    if s_hi <= 0:
        clipped += min(delta, hi - lo)
        hi = hi - delta
    return lo, hi, clipped


def segment_density(model: FluxModel, a: float, b: float, delta: float = 1e-6, rtol: float = 1e-10):
    """int rho^+(v, b, a) / |b - a| * D/sigma dv for one jump from a (left) to b (right).

    Returns ``(value, abserr, clipped_length)``.
    """
    if a == b:
        return 0.0, 0.0, 0.0
    lo, hi, clipped = _clip_range(model, a, b, delta)
    if hi <= lo:
        return 0.0, 0.0, clipped
    tol = 1e-13 * _rho_scale(model, a, b)
    probe = np.linspace(lo, hi, 2001)
    rho = jump_kernel_rho(model, probe, b, a)
    if np.max(rho) <= tol:
        return 0.0, 0.0, clipped
    sig = model.sigma(probe)
    if np.any(sig[1:-1] <= 0):
        raise SingularConductivity(f"sigma vanishes inside the jump range [{lo}, {hi}]")
    sign = np.sign(np.where(np.abs(rho) <= tol, 0.0, rho))
    breaks = [0.5 * (probe[i] + probe[i + 1]) for i in range(len(probe) - 1) if sign[i] != sign[i + 1]]

    def integrand(v):
        r = float(jump_kernel_rho(model, np.array(v), b, a))
        if r <= tol:
            return 0.0
        return r / abs(b - a) * float(model.D(np.array(v))) / float(model.sigma(np.array(v)))

    val, err = integrate.quad(integrand, lo, hi, points=breaks[:50] or None, limit=400,
                              epsabs=1e-13, epsrel=rtol)
    if not math.isfinite(val):
        raise SingularConductivity("non-integrable jump density")
    return val, err, clipped


def _check_rh(model, pbv, tol):
    pbv.validate(model, tol)


def cost_H_bv(model: FluxModel, pbv: PiecewiseBVSolution, delta: float = 1e-6, rh_tol: float = 1e-9) -> CostReport:
    """Entropy cost of a piecewise constant solution: sum over jump segments of duration * density."""
    _check_rh(model, pbv, rh_tol)
    total, err, clipped = 0.0, 0.0, 0.0
    per_shock = []
    for s in pbv.shocks:
        acc = 0.0
        for k in range(s.n_segments):
            val, e, c = segment_density(model, s.u_minus[k], s.u_plus[k], delta)
            dur = s.times[k + 1] - s.times[k]
            acc += dur * val
            err += dur * e
            clipped += c
        per_shock.append(acc)
        total += acc
    diag = {"functional": "H", "quad_error": err, "clipped_length": clipped, "delta": delta,
            "n_shocks": len(pbv.shocks)}
    for i, v in enumerate(per_shock):
        diag[f"shock_{i}"] = v
    return CostReport(total, 0.0, None, None, diag)


def _gauss_table(lo, hi, panels, order=16):
    x, w = roots_legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    nodes = (mids[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _h_prime_table(model, segments, panels, delta):
    """Per-segment weighted densities A[s, v] on a Gauss table, and the table weights."""
    lo = min(min(a, b) for a, b, _ in segments)
    hi = max(max(a, b) for a, b, _ in segments)
    lo = max(lo, delta) if float(model.sigma(np.array(0.0))) <= 0 else lo
    hi = min(hi, 1 - delta) if float(model.sigma(np.array(1.0))) <= 0 else hi
    # panel edges at every trace value so that the indicator jumps fall on edges
    cuts = sorted({lo, hi} | {min(max(v, lo), hi) for a, b, _ in segments for v in (a, b)})
    nodes, weights = [], []
    per = max(1, panels // max(1, len(cuts) - 1))
    for p, q in zip(cuts[:-1], cuts[1:]):
        if q > p:
            n_, w_ = _gauss_table(p, q, per)
            nodes.append(n_)
            weights.append(w_)
    v = np.concatenate(nodes)
    w = np.concatenate(weights)
    ratio = model.D(v) / model.sigma(v)
    A = np.array([dur / abs(b - a) * jump_kernel_rho(model, v, b, a) * ratio for a, b, dur in segments])
    return A, w


def _h_prime_from_table(A, w):
    """max over subsets S of sum_v w (sum_{s in S} A[s])^+, together with the sum of positive parts."""
    h_table = float(np.sum(np.maximum(A, 0.0) @ w))
    pos = np.all(A >= 0, axis=1)
    neg = np.all(A <= 0, axis=1)
    base = A[pos].sum(axis=0) if np.any(pos) else np.zeros(A.shape[1])
    mixed = A[~pos & ~neg]
    if len(mixed) > 20:
        raise ValueError(f"{len(mixed)} sign-changing segments: subset search too large")
    best = float(np.maximum(base, 0.0) @ w)
    best_set = ()
    for k in range(1, len(mixed) + 1):
        for S in itertools.combinations(range(len(mixed)), k):
            val = float(np.maximum(base + mixed[list(S)].sum(axis=0), 0.0) @ w)
            if val > best:
                best, best_set = val, S
    return best, h_table, best_set


def cost_H_prime_bv(model: FluxModel, pbv: PiecewiseBVSolution, panels: int = 64, delta: float = 1e-6,
                    rh_tol: float = 1e-9) -> CostReport:
    """sup over entropies with 0 <= sigma eta'' <= D and over windows of the positive entropy production.

    For a fixed window the best eta'' is D/sigma where the summed jump
    density is positive and 0 elsewhere; the best window collects a subset
    of segments. Both maximisations are exact on a Gauss table in v; the
    reported error bar is the change when the table is doubled.
    """
    _check_rh(model, pbv, rh_tol)
    segments = [(s.u_minus[k], s.u_plus[k], s.times[k + 1] - s.times[k])
                for s in pbv.shocks for k in range(s.n_segments) if s.u_minus[k] != s.u_plus[k]]
    if not segments:
        return CostReport(0.0, 0.0, None, None, {"functional": "H_prime", "error_bar": 0.0})
    A, w = _h_prime_table(model, segments, panels, delta)
    val, h_tab, chosen = _h_prime_from_table(A, w)
    A2, w2 = _h_prime_table(model, segments, 2 * panels, delta)
    val2, h_tab2, _ = _h_prime_from_table(A2, w2)
    diag = {"functional": "H_prime", "error_bar": abs(val2 - val), "H_same_table": h_tab2,
            "H_table_error": abs(h_tab2 - h_tab), "n_segments": len(segments),
            "window_segments": " ".join(str(i) for i in chosen)}
    return CostReport(val2, 0.0, None, None, diag)


# ---------------------------------------------------------------------------
# first order projected functional


def cost_I_projected(model: FluxModel, u: SpaceTimeField, kernel: Optional[RelaxationKernel] = None,
                     xtol: float = 1e-10) -> CostReport:
    """First-order limit on fields: sum over steps of dt * min_c 1/2 sum dx R(w_j, Phi_j(c)).

    Phi_j = c - dx sum_{i<j} u_t(i) lives on interfaces, w_j is the mean of
    the two neighbouring cells, and only interior interfaces enter, which
    matches the zero-flux boundary convention of :func:`cost_I_eps`. For
    each step the convex one-dimensional problem in c is solved by a
    bounded scalar minimisation.
    """
    g = u.grid
    K = kernel or RelaxationKernel(model)
    v = u.values
    lo_env, hi_env = envelopes(model, 2001)
    total = 0.0
    consts = []
    for n in range(g.nt):
        ut = (v[n + 1] - v[n]) / g.dt
        offs = -g.dx * np.cumsum(ut)[:-1]  # Phi at interior interfaces minus c
        w = 0.5 * (v[n][:-1] + v[n][1:])

        def obj(c):
            return 0.5 * g.dx * float(np.sum(K.evaluate(w, c + offs)))

        # any c outside [min lower envelope - max offs, max upper envelope - min offs] is worse
        a = float(np.min(lo_env(w))) - float(np.max(offs)) - 1e-9
        b = float(np.max(hi_env(w))) - float(np.min(offs)) + 1e-9
        res = optimize.minimize_scalar(obj, bounds=(a, b), method="bounded", options={"xatol": xtol})
        res_x, res_f = float(res.x), float(res.fun)
        consts.append(res_x)
        total += g.dt * res_f
    diag = {"functional": "I_projected", "nx": g.nx, "nt": g.nt, "kernel_grid": K.n_grid}
    return CostReport(total, 0.0, np.array(consts), None, diag)


__all__ = [
    "CostReport", "residual", "dual_flux", "cost_I_eps", "cost_H_eps", "dual_pairing", "apriori_ratio",
    "TestFunction", "plateau", "entropy_production", "sampled_production", "production_density",
    "tv_positive_part", "jump_kernel_rho", "segment_density", "cost_H_bv", "cost_H_prime_bv",
    "cost_I_projected",
]
