"""Constitutive functions, entropy pairs, envelopes and the relaxation kernel.

All functions of the state variable act on numpy arrays with values in
[0, 1]. A :class:`FluxModel` bundles the flux ``f``, the diffusion ``D``
and the conductivity ``sigma``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, interpolate, optimize
from scipy.interpolate import CubicSpline
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateConductivity, InvalidModel

Fn = Callable[[np.ndarray], np.ndarray]


def _vectorized(fn: Fn) -> Fn:
    """Wrap ``fn`` so that scalar-valued lambdas broadcast over arrays."""

    def wrapped(v):
        v = np.asarray(v, dtype=float)
        out = np.asarray(fn(v), dtype=float)
        if out.shape != v.shape:
            out = np.broadcast_to(out, v.shape).copy()
        return out

    wrapped.__wrapped__ = fn
    return wrapped


class TabulatedFunction:
    """Piecewise linear function through ``(v, y)`` with strictly increasing ``v``."""

    def __init__(self, v, y):
        v = np.asarray(v, dtype=float)
        y = np.asarray(y, dtype=float)
        if v.ndim != 1 or v.shape != y.shape or v.size < 2:
            raise InvalidModel("table needs two equally long columns with at least 2 rows")
        if np.any(np.diff(v) <= 0):
            raise InvalidModel("table abscissae must be strictly increasing")
        self.v = v
        self.y = y
        # central differences, one-sided at the ends
        self.dy = np.gradient(y, v)

    @classmethod
    def from_file(cls, path) -> "TabulatedFunction":
        data = np.loadtxt(path, ndmin=2)
        if data.shape[1] != 2:
            raise InvalidModel(f"{path}: expected two columns (v, value)")
        return cls(data[:, 0], data[:, 1])

    def __call__(self, v):
        return np.interp(np.asarray(v, dtype=float), self.v, self.y)

    def derivative(self, v):
        return np.interp(np.asarray(v, dtype=float), self.v, self.dy)


def _find_critical_points(f_prime: Fn, n: int = 4001) -> tuple:
    """Interior zeros of f' located by sign changes and refined by brentq."""
    v = np.linspace(0.0, 1.0, n)
    d = f_prime(v)
    scale = max(float(np.max(np.abs(d))), 1.0)
    pts = []
    for i in range(n - 1):
        a, b = d[i], d[i + 1]
        if a == 0.0 and 0 < i:
            pts.append(v[i])
        elif a * b < 0:
            pts.append(optimize.brentq(lambda s: float(f_prime(np.array(s))), v[i], v[i + 1], xtol=1e-14))
        elif abs(a) < 1e-10 * scale and abs(b) < 1e-10 * scale:
            pts.append(v[i])
    # double roots (touching zero) show up as local minima of |f'|
    ad = np.abs(d)
    for i in range(1, n - 1):
        if ad[i] <= ad[i - 1] and ad[i] < ad[i + 1] and ad[i] < 1e-3 * scale:
            res = optimize.minimize_scalar(lambda s: abs(float(f_prime(np.array(s)))),
                                           bounds=(v[i - 1], v[i + 1]), method="bounded",
                                           options={"xatol": 1e-13})
            if abs(res.fun) < 1e-8 * scale:
                pts.append(float(res.x))
    pts = sorted(p for p in pts if 0.0 < p < 1.0)
    merged = []
    for p in pts:
        if not merged or p - merged[-1] > 1e-9:
            merged.append(float(p))
    return tuple(merged)


@dataclass(frozen=True, eq=False)
class FluxModel:
    """The triple (f, D, sigma) on [0, 1].

    ``critical_points`` are the interior zeros of f'; they are computed
    when not supplied and are used by the Godunov and Engquist-Osher
    fluxes. ``sigma_prime`` enters only the CFL bound of the controlled
    solver and falls back to a central difference.
    """

    f: Fn
    f_prime: Fn
    D: Fn
    sigma: Fn
    lipschitz_f: float
    name: str = "custom"
    labels: dict = field(default_factory=dict)
    critical_points: Optional[tuple] = None
    sigma_prime: Optional[Fn] = None

    def __post_init__(self):
        for key in ("f", "f_prime", "D", "sigma"):
            object.__setattr__(self, key, _vectorized(getattr(self, key)))
        if self.sigma_prime is None:
            s = self.sigma
            h = 1e-6
            object.__setattr__(self, "sigma_prime",
                               lambda v: (s(np.clip(np.asarray(v, float) + h, 0, 1))
                                          - s(np.clip(np.asarray(v, float) - h, 0, 1))) / (2 * h))
        else:
            object.__setattr__(self, "sigma_prime", _vectorized(self.sigma_prime))
        if self.critical_points is None:
            object.__setattr__(self, "critical_points", _find_critical_points(self.f_prime))
        else:
            object.__setattr__(self, "critical_points", tuple(sorted(float(c) for c in self.critical_points)))

    @property
    def V_plus(self) -> float:
        v = np.linspace(0, 1, 2001)
        return float(np.max(self.f_prime(v)))

    @property
    def V_minus(self) -> float:
        v = np.linspace(0, 1, 2001)
        return float(np.min(self.f_prime(v)))

    @property
    def max_speed(self) -> float:
        v = np.linspace(0, 1, 2001)
        return float(np.max(np.abs(self.f_prime(v))))

    def validate(self, n: int = 1001, d0: float = 0.0, tol: float = 1e-9) -> None:
        """Check the standing assumptions on an ``n``-point sample."""
        v = np.linspace(0.0, 1.0, n)
        Dv = self.D(v)
        if not np.all(np.isfinite(Dv)) or np.min(Dv) <= d0:
            raise InvalidModel(f"{self.name}: D must be uniformly positive (min {np.min(Dv):.3g})")
        s = self.sigma(v)
        if not np.all(np.isfinite(s)) or np.min(s[1:-1]) <= 0 or np.min(s) < 0:
            raise InvalidModel(f"{self.name}: sigma must be positive on (0,1) and nonnegative at 0, 1")
        fv = self.f(v)
        slopes = np.abs(np.diff(fv)) / np.diff(v)
        if np.max(slopes) > self.lipschitz_f * (1 + tol) + tol:
            raise InvalidModel(f"{self.name}: Lipschitz constant {self.lipschitz_f} too small "
                               f"(sampled slope {np.max(slopes):.6g})")

    def with_flux_shift(self, V: float) -> "FluxModel":
        """The model with flux f - V*id, used to follow a shock moving at speed V."""
        f, fp = self.f, self.f_prime
        return FluxModel(
            f=lambda v: f(v) - V * np.asarray(v, float),
            f_prime=lambda v: fp(v) - V,
            D=self.D, sigma=self.sigma,
            lipschitz_f=self.lipschitz_f + abs(V),
            name=f"{self.name}-shift({V:g})",
            labels=dict(self.labels, shift=V),
            sigma_prime=self.sigma_prime,
        )

    def with_sigma_scaled(self, a: float) -> "FluxModel":
        s, sp = self.sigma, self.sigma_prime
        return FluxModel(f=self.f, f_prime=self.f_prime, D=self.D,
                         sigma=lambda v: a * s(v), sigma_prime=lambda v: a * sp(v),
                         lipschitz_f=self.lipschitz_f, name=f"{self.name}-sigma*{a:g}",
                         labels=self.labels, critical_points=self.critical_points)


# built-in constitutive functions: name -> (f, f', Lipschitz constant, critical points)
_FLUXES = {
    "quadratic": (lambda v: v * (1 - v), lambda v: 1 - 2 * v, 1.0, (0.5,)),
    "burgers": (lambda v: 0.5 * v * v, lambda v: v, 1.0, ()),
    "cubic": (lambda v: 4 * v ** 3 - 6 * v ** 2 + 3 * v, lambda v: 12 * v ** 2 - 12 * v + 3, 3.0, (0.5,)),
    "power3": (lambda v: v ** 3, lambda v: 3 * v ** 2, 3.0, ()),
}


def _constant(c):
    return lambda v: np.full(np.shape(v), float(c))


def _resolve(spec, builtins, what):
    if isinstance(spec, TabulatedFunction):
        return spec, spec.derivative
    if callable(spec):
        return spec, None
    if isinstance(spec, (int, float)):
        return _constant(spec), _constant(0.0)
    if isinstance(spec, str) and spec in builtins:
        return builtins[spec]
    raise InvalidModel(f"unknown {what} '{spec}' (known: {sorted(builtins)})")


def make_model(flux="quadratic", D="one", sigma="one", *, slope: float = 1.0,
               name: Optional[str] = None) -> FluxModel:
    """Build a model from built-in names, constants, tables or callables.

    Flux names: ``linear`` (slope*u), ``quadratic`` u(1-u), ``burgers`` u^2/2,
    ``cubic`` 4u^3-6u^2+3u, ``power3`` u^3. ``D`` and ``sigma`` accept
    ``one``, a number, a :class:`TabulatedFunction` or a callable; ``sigma``
    also accepts ``quadratic`` (u(1-u)) and ``flux`` (sigma = f).
    """
    crit = None
    if flux == "linear":
        f, fp, lip, crit = (lambda v: slope * np.asarray(v, float)), _constant(slope), abs(slope), ()
    elif isinstance(flux, str) and flux in _FLUXES:
        f, fp, lip, crit = _FLUXES[flux]
    elif isinstance(flux, TabulatedFunction):
        f, fp = flux, flux.derivative
        lip = float(np.max(np.abs(np.diff(flux.y) / np.diff(flux.v))))
    else:
        raise InvalidModel(f"unknown flux '{flux}'")
    Dfn, _ = _resolve(D, {"one": (_constant(1.0), _constant(0.0))}, "D")
    sig_builtin = {
        "one": (_constant(1.0), _constant(0.0)),
        "quadratic": (lambda v: v * (1 - v), lambda v: 1 - 2 * v),
        "flux": (f, fp),
    }
    sfn, sfp = _resolve(sigma, sig_builtin, "sigma")
    label = name or f"f={getattr(flux, '__name__', flux) if not isinstance(flux, str) else flux},D={D},sigma={sigma}"
    return FluxModel(f=f, f_prime=fp, D=Dfn, sigma=sfn, lipschitz_f=lip, name=label,
                     labels={"flux": str(flux), "D": str(D), "sigma": str(sigma)},
                     critical_points=crit, sigma_prime=sfp)


# ---------------------------------------------------------------------------
# entropy pairs and samplers


@dataclass(frozen=True, eq=False)
class EntropyPair:
    eta: Fn
    eta_prime: Fn
    eta_second: Fn
    q: Fn
    name: str = "entropy"

    def is_convex(self, n: int = 1001, tol: float = 0.0) -> bool:
        v = np.linspace(0, 1, n)
        return bool(np.all(self.eta_second(v) >= -tol))

    def tabulated(self, lo: float = 0.0, hi: float = 1.0, n: int = 2049) -> "EntropyPair":
        """Cubic-spline copy, for fast evaluation on large fields."""
        v = np.linspace(lo, hi, n)
        splines = [CubicSpline(v, fn(v)) for fn in (self.eta, self.eta_prime, self.eta_second, self.q)]
        clip = lambda s: (lambda x: s(np.clip(np.asarray(x, float), lo, hi)))
        return EntropyPair(*(clip(s) for s in splines), name=self.name + "-tab")


def entropy_pair(model: FluxModel, eta: Fn, eta_prime: Fn, eta_second: Fn,
                 q: Optional[Fn] = None, name: str = "entropy", n_table: int = 20001) -> EntropyPair:
    """Pair (eta, q) with q' = eta' f'; q is tabulated by quadrature when not given."""
    if q is None:
        v = np.linspace(0.0, 1.0, n_table)
        dq = np.asarray(eta_prime(v), float) * model.f_prime(v)
        table = integrate.cumulative_simpson(dq, x=v, initial=0.0)
        # Hermite interpolation with the exact slopes keeps q' = eta' f' to O(h^3)
        q = interpolate.CubicHermiteSpline(v, table, dq)
    return EntropyPair(_vectorized(eta), _vectorized(eta_prime), _vectorized(eta_second),
                       _vectorized(q), name=name)


def quadratic_entropy(model: FluxModel, scale: float = 1.0) -> EntropyPair:
    """eta(v) = scale * v^2, with q built by quadrature."""
    return entropy_pair(model, lambda v: scale * v * v, lambda v: 2 * scale * v,
                        lambda v: np.full(np.shape(v), 2.0 * scale), name=f"{scale:g}v^2")


@dataclass(frozen=True, eq=False)
class EntropySampler:
    """theta(v, t, x) with v-derivatives, t-derivative and conjugated flux Q.

    All callables take ``(v, t, x)`` arrays of a common shape. ``box`` is
    ``(t0, t1, x0, x1)`` and contains the support in (t, x).
    """

    theta: Callable
    theta_prime: Callable
    theta_second: Callable
    theta_t: Callable
    Q: Callable
    Q_x: Callable
    box: tuple


def product_sampler(pair: EntropyPair, phi: Callable, phi_t: Callable, phi_x: Callable,
                    box: tuple) -> EntropySampler:
    """theta = eta(v) phi(t, x), whose conjugated flux is q(v) phi(t, x)."""
    return EntropySampler(
        theta=lambda v, t, x: pair.eta(v) * phi(t, x),
        theta_prime=lambda v, t, x: pair.eta_prime(v) * phi(t, x),
        theta_second=lambda v, t, x: pair.eta_second(v) * phi(t, x),
        theta_t=lambda v, t, x: pair.eta(v) * phi_t(t, x),
        Q=lambda v, t, x: pair.q(v) * phi(t, x),
        Q_x=lambda v, t, x: pair.q(v) * phi_x(t, x),
        box=tuple(box),
    )


def einstein_entropy(model: FluxModel, v0: float = 0.5, delta: float = 1e-6) -> EntropyPair:
    """The pair (h, g) with sigma h'' = D and g' = h' f', pinned by h(v0) = h'(v0) = g(v0) = 0.

    Arguments are clipped to [delta, 1 - delta]; h and g may be unbounded
    at an endpoint where sigma vanishes.
    """
    if not (0.0 < v0 < 1.0):
        raise ValueError("v0 must lie in (0, 1)")
    lo, hi = delta, 1.0 - delta
    grid = np.linspace(lo, hi, 2001)
    if np.min(model.sigma(grid)) <= 0:
        raise DegenerateConductivity("sigma vanishes inside the integration range")
    ratio = lambda s: float(model.D(np.array(s)) / model.sigma(np.array(s)))
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=200)

    def _h(v):
        return integrate.quad(lambda s: (v - s) * ratio(s), v0, v, **opts)[0]

    def _hp(v):
        return integrate.quad(ratio, v0, v, **opts)[0]

    def _g(v):
        fv = float(model.f(np.array(v)))
        return integrate.quad(lambda r: ratio(r) * (fv - float(model.f(np.array(r)))), v0, v, **opts)[0]

    def lift(fn):
        def out(v):
            v = np.clip(np.asarray(v, dtype=float), lo, hi)
            return np.vectorize(fn, otypes=[float])(v)
        return out

    return EntropyPair(eta=lift(_h), eta_prime=lift(_hp),
                       eta_second=lambda v: model.D(np.clip(v, lo, hi)) / model.sigma(np.clip(v, lo, hi)),
                       q=lift(_g), name="einstein")


# ---------------------------------------------------------------------------
# envelopes


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _lower_chain(points):
    hull = []
    for p in points:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return hull


def envelopes(model: FluxModel, n_grid: int = 10001):
    """Convex and concave envelopes of f on [0, 1] from an ``n_grid`` sample.

    Returns two callables (piecewise linear through the hull vertices).
    """
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    v = np.linspace(0.0, 1.0, n_grid)
    fv = model.f(v)
    pts = list(zip(v.tolist(), fv.tolist()))
    lower = np.array(_lower_chain(pts))
    upper = np.array(_lower_chain(pts[::-1]))[::-1]
    lo = lambda w: np.interp(np.asarray(w, float), lower[:, 0], lower[:, 1])
    hi = lambda w: np.interp(np.asarray(w, float), upper[:, 0], upper[:, 1])
    return lo, hi


# ---------------------------------------------------------------------------
# relaxation kernel


def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Vertex indices of the planar hull, counter-clockwise.

    Collinear point sets (constant sigma, or sigma = f) give a segment
    with two vertices; a single repeated point gives one vertex.
    """
    pts = np.asarray(points, dtype=float)
    span = np.ptp(pts, axis=0)
    if len(pts) >= 3 and np.all(span > 0):
        try:
            return ConvexHull(pts).vertices
        except QhullError:
            pass
    # degenerate: extremes along the principal direction
    centred = pts - pts.mean(axis=0)
    if not np.any(centred):
        return np.array([0])
    direction = np.linalg.svd(centred, full_matrices=False)[2][0]
    proj = centred @ direction
    i, j = int(np.argmin(proj)), int(np.argmax(proj))
    return np.array([i]) if i == j else np.array([i, j])


def _segment_min(s0, p0, s1, p1, c):
    """Minimum of (s - c)^2 / p along the segments (s0, p0) -> (s1, p1), vectorised over segments.

    The function is convex in the segment parameter, so its minimum is at
    an end point or at one of the two stationary points.
    """
    s0, p0, s1, p1 = (np.atleast_1d(np.asarray(a, float)) for a in (s0, p0, s1, p1))
    ds, dp = s1 - s0, p1 - p0
    a = s0 - c
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(ds != 0, -a / ds, 0.0)
        t2 = np.where((ds != 0) & (dp != 0), (a * dp - 2 * ds * p0) / (ds * dp), 0.0)
    T = np.clip(np.stack([np.zeros_like(ds), np.ones_like(ds), t1, t2]), 0.0, 1.0)
    s = s0 + T * ds
    p = p0 + T * dp
    num = (s - c) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(p > 0, num / np.where(p > 0, p, 1.0), np.where(num <= 1e-300, 0.0, np.inf))
    return val.min(axis=0)


class RelaxationKernel:
    """R_{f,sigma}(w, c): inf over probability measures with mean w of (nu(f) - c)^2 / nu(sigma).

    For fixed w the set of attainable pairs (nu(f), nu(sigma)) is the
    convex hull of those of two-point measures, so a three-point search
    adds nothing. The hull is built once per w from all two-point
    combinations on an ``n_grid`` value grid and refined near the support
    points that carry the optimum.
    """

    def __init__(self, model: FluxModel, n_grid: int = 401, refine: bool = True):
        self.model = model
        self.n_grid = int(n_grid)
        self.refine = refine
        self.grid = np.linspace(0.0, 1.0, self.n_grid)
        self._cache = {}

    def _pairs(self, w, a, b):
        m = self.model
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        A, B = np.meshgrid(a, b, indexing="ij")
        A, B = A.ravel(), B.ravel()
        span = B - A
        keep = span > 0
        A, B, span = A[keep], B[keep], span[keep]
        lam = (B - w) / span
        s = lam * m.f(A) + (1 - lam) * m.f(B)
        p = lam * m.sigma(A) + (1 - lam) * m.sigma(B)
        return np.column_stack([s, p]), np.column_stack([A, B])

    def _hull(self, w):
        key = round(float(w), 14)
        if key in self._cache:
            return self._cache[key]
        m = self.model
        g = self.grid
        pts, sup = self._pairs(w, g[g <= w], g[g >= w])
        dirac = np.array([[float(m.f(np.array(w))), float(m.sigma(np.array(w)))]])
        pts = np.vstack([dirac, pts])
        sup = np.vstack([[w, w], sup])
        idx = convex_hull_2d(pts)
        hull = (pts[idx], sup[idx])
        self._cache[key] = hull
        return hull

    @staticmethod
    def _min_over_polygon(P, c):
        s = P[:, 0]
        if s.min() <= c <= s.max():
            return 0.0, None
        Q = np.roll(P, -1, axis=0)
        vals = _segment_min(P[:, 0], P[:, 1], Q[:, 0], Q[:, 1], c)
        k = int(np.argmin(vals))
        return float(vals[k]), k

    def __call__(self, w: float, c: float) -> float:
        w = float(np.clip(w, 0.0, 1.0))
        c = float(c)
        P, sup = self._hull(w)
        val, arg = self._min_over_polygon(P, c)
        if val == 0.0 or not self.refine or arg is None or not math.isfinite(val):
            return val
        # refine around the support points of the optimal edge's endpoints
        h = 1.0 / (self.n_grid - 1)
        extra_pts, extra = [P], []
        for k in (arg, (arg + 1) % len(P), (arg - 1) % len(P)):
            a0, b0 = sup[k]
            fa = np.clip(np.linspace(a0 - 2 * h, a0 + 2 * h, 41), 0.0, w)
            fb = np.clip(np.linspace(b0 - 2 * h, b0 + 2 * h, 41), w, 1.0)
            pts, _ = self._pairs(w, fa, fb)
            extra_pts.append(pts)
        Q = np.vstack(extra_pts)
        Q = Q[convex_hull_2d(Q)]
        val2, _ = self._min_over_polygon(Q, c)
        return min(val, val2)

    def evaluate(self, w, c) -> np.ndarray:
        w, c = np.broadcast_arrays(np.asarray(w, float), np.asarray(c, float))
        out = np.empty(w.shape)
        for i in np.ndindex(w.shape):
            out[i] = self(w[i], c[i])
        return out


@functools.lru_cache(maxsize=32)
def _kernel(model: FluxModel, n_grid: int, refine: bool) -> RelaxationKernel:
    return RelaxationKernel(model, n_grid, refine)


def r_fsigma(model: FluxModel, w: float, c: float, n_grid: int = 401, refine: bool = True) -> float:
    """R_{f,sigma}(w, c); returns math.inf when no admissible measure has finite ratio."""
    if not (0.0 <= w <= 1.0):
        raise ValueError("w must lie in [0, 1]")
    return _kernel(model, n_grid, refine)(w, c)


def r_closed_form(model: FluxModel, w, c, kind: str, n_grid: int = 10001):
    """Closed forms of R: ``kind='sigma-one'`` or ``kind='f-equals-sigma'``."""
    lo, hi = envelopes(model, n_grid)
    w = np.asarray(w, float)
    c = np.asarray(c, float)
    fl, fu = lo(w), hi(w)
    if kind == "sigma-one":
        return np.maximum(np.maximum(fl - c, c - fu), 0.0) ** 2
    if kind == "f-equals-sigma":
        ac = np.abs(c)
        with np.errstate(divide="ignore", invalid="ignore"):
            above = np.where(fu > 0, (fu - c) ** 2 / fu, np.where(fu == c, 0.0, np.inf))
            below = np.where(fl > 0, (fl - c) ** 2 / fl, np.where(fl == c, 0.0, np.inf))
            inside = 2.0 * (ac - c)
            return np.where(ac > fu, above, np.where(ac < fl, below, inside))
    raise ValueError(f"unknown closed form '{kind}'")


__all__ = [
    "FluxModel", "TabulatedFunction", "make_model", "EntropyPair", "entropy_pair",
    "quadratic_entropy", "EntropySampler", "product_sampler", "einstein_entropy",
    "envelopes", "convex_hull_2d", "RelaxationKernel", "r_fsigma", "r_closed_form",
]

