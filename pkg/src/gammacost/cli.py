"""Config-driven experiment runner.

A config is an INI file with one section per experiment. Keys shared by
several experiments can go into ``[DEFAULT]``. Every section needs
``kind``; model keys are ``flux``, ``D``, ``sigma`` and grid keys ``T``,
``L``, ``nx``, ``nt``. The remaining keys depend on the kind, see
``gammacost list-kinds``.

Each experiment writes ``<output root>/<output>/<kind>.csv``. The output
root is the directory of the config file unless ``GAMMACOST_OUTPUT_ROOT``
is set. Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.optimize import brentq

from .cost import (apriori_ratio, cost_H_bv, cost_H_eps, cost_H_prime_bv, cost_I_eps)
from .errors import ConfigError, CflViolation, GammaCostError, InvalidModel, ShootingFailed
from .grid import PiecewiseBVSolution, Shock, SpaceTimeField, SpaceTimeGrid, dist_scrU, staircase
from .hj import hj_sweep
from .model import FluxModel, make_model, r_closed_form, r_fsigma
from .solvers import (ControlField, SolverConfig, check_cfl, harmonic_D, hyperbolic_flux,
                      interface_sigma, solve_entropic, solve_viscous)
from .young import AtomicYoungMeasure, slice_approximation

OUTPUT_ENV = "GAMMACOST_OUTPUT_ROOT"

RECOVERY_CFG = SolverConfig(scheme="central", check_cfl=False)


# ---------------------------------------------------------------------------
# recovery family


@dataclass
class RecoveryProfile:
    u: SpaceTimeField
    E: ControlField
    model: FluxModel
    shift: float
    entropic: bool


def _shoot(model: FluxModel, a: float, b: float, eps: float, dx: float, nx: int) -> np.ndarray:
    """Discrete steady profile from a (left) to b (right) of the central viscous scheme.

    Consecutive cells satisfy 1/2 (f(u_l) + f(u_r)) - (eps/2) D_h (u_r - u_l)/dx = f(a),
    marched outward from the two middle cells, which are placed symmetrically
    about (a + b)/2.
    """
    c = float(model.f(np.array(a)))

    def F(ul, ur):
        Dl, Dr = float(model.D(np.array(ul))), float(model.D(np.array(ur)))
        Dh = 2 * Dl * Dr / (Dl + Dr) if Dl + Dr > 0 else 0.0
        return 0.5 * float(model.f(np.array(ul)) + model.f(np.array(ur))) - 0.5 * eps * Dh * (ur - ul) / dx - c

    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    sgn = math.copysign(1.0, half)
    g0 = lambda d: F(mid - sgn * d, mid + sgn * d)
    lo, hi = 1e-15 * abs(half), abs(half) * (1 - 1e-12)
    if g0(lo) * g0(hi) > 0:
        raise ShootingFailed(f"no discrete viscous connection from {a} to {b}: the jump is not entropic")
    d = brentq(g0, lo, hi, xtol=1e-15)
    u = np.empty(nx)
    k = nx // 2
    u[k - 1], u[k] = mid - sgn * d, mid + sgn * d
    for i in range(k, nx - 1):
        ui = u[i]
        if abs(b - ui) < 1e-15:
            u[i + 1] = b
            continue
        gi = lambda x: F(ui, x)
        u[i + 1] = brentq(gi, ui, b, xtol=1e-15) if gi(ui) * gi(b) < 0 else b
    for i in range(k - 1, 0, -1):
        ui = u[i]
        if abs(ui - a) < 1e-15:
            u[i - 1] = a
            continue
        gi = lambda x: F(x, ui)
        u[i - 1] = brentq(gi, a, ui, xtol=1e-15) if gi(a) * gi(ui) < 0 else a
    return u


def recovery_family(model: FluxModel, traces, eps: float, grid: SpaceTimeGrid) -> RecoveryProfile:
    """Steady viscous profile carrying the jump ``traces = (u_minus, u_plus)`` and its control E.

    The flux is shifted by the Rankine-Hugoniot speed so the jump is
    stationary. An entropic jump is the plain viscous profile (E = 0); an
    anti-entropic one is the mirror image of the profile of the reversed
    jump, held in place by E_j = (f(u_minus) - F_j) / sigma_j at every
    interface, where F is the central viscous flux.
    """
    um, up = (float(v) for v in traces)
    if um == up:
        raise ShootingFailed("traces must differ")
    V = float((model.f(np.array(up)) - model.f(np.array(um))) / (up - um))
    if abs(V) < 1e-13:
        V = 0.0
    shifted = model.with_flux_shift(V) if V != 0.0 else model
    try:
        prof = _shoot(shifted, um, up, eps, grid.dx, grid.nx)
        entropic = True
    except ShootingFailed:
        prof = _shoot(shifted, up, um, eps, grid.dx, grid.nx)[::-1].copy()
        entropic = False
    u = SpaceTimeField(grid, np.tile(prof, (grid.nt + 1, 1)))
    if entropic:
        E = ControlField.zeros(grid)
    else:
        F = hyperbolic_flux(shifted, prof, "central") - 0.5 * eps * harmonic_D(shifted, prof) * _grad(prof, grid.dx)
        c = float(shifted.f(np.array(um)))
        sig = interface_sigma(shifted, prof)
        row = np.where(sig > 0, (c - F) / np.where(sig > 0, sig, 1.0), 0.0)
        E = ControlField(np.tile(row, (grid.nt, 1)))
    E.compute_energy(shifted, u)
    return RecoveryProfile(u, E, shifted, V, entropic)


def _grad(v, dx):
    g = np.zeros(len(v) + 1)
    g[1:-1] = np.diff(v) / dx
    return g


def richardson(eps, values) -> float:
    """Linear-in-eps extrapolation from the two smallest eps (2 H(e) - H(2e) for halving)."""
    order = np.argsort(eps)
    e1, e2 = float(eps[order[0]]), float(eps[order[1]])
    h1, h2 = float(values[order[0]]), float(values[order[1]])
    return (e2 * h1 - e1 * h2) / (e2 - e1)


def slice_measures(model: FluxModel, grid: SpaceTimeGrid, level: float = 0.14, u1=(0.775, 0.025),
                   u0=(0.125, 0.025), ramp: float = 1.5):
    """nu0, nu1 and beta with beta nu1(f) + (1 - beta) nu0(f) = level, so the mixture is stationary.

    The atoms vary smoothly in x on [-ramp, ramp] and are constant outside.
    """
    X = np.broadcast_to(grid.x, (grid.nt + 1, grid.nx))
    s = np.clip(X / ramp, -1.0, 1.0)
    s = s * (1.5 - 0.5 * s ** 2)
    a1 = u1[0] + u1[1] * s
    a0 = u0[0] - u0[1] * s
    beta = (level - model.f(a0)) / (model.f(a1) - model.f(a0))
    one = np.ones_like(a1)
    return AtomicYoungMeasure(grid, one, a0), AtomicYoungMeasure(grid, one, a1), beta


# ---------------------------------------------------------------------------
# configuration


def _floats(text: str) -> List[float]:
    return [float(v) for v in re.split(r"[,\s]+", text.strip()) if v]


@dataclass
class ExperimentConfig:
    name: str
    kind: str
    model_spec: Dict[str, str]
    grid_spec: Dict[str, float]
    params: Dict[str, str]
    output: str
    seed: int
    source: Optional[Path] = None
    lines: Dict[str, int] = field(default_factory=dict)

    def model(self) -> FluxModel:
        spec = {}
        for key in ("flux", "D", "sigma"):
            raw = self.model_spec[key]
            try:
                spec[key] = float(raw)
            except ValueError:
                spec[key] = raw
        try:
            return make_model(spec["flux"], spec["D"], spec["sigma"], slope=float(self.params.get("slope", 1.0)))
        except InvalidModel as exc:
            raise ConfigError(str(exc), field="flux", line=self.lines.get("flux")) from exc

    def grid(self) -> SpaceTimeGrid:
        g = self.grid_spec
        return SpaceTimeGrid(T=g["T"], L=g["L"], nx=int(g["nx"]), nt=int(g["nt"]))

    def floats(self, key: str, default=None) -> List[float]:
        if key not in self.params:
            if default is None:
                raise ConfigError("missing key", field=key, line=None)
            return list(default)
        try:
            return _floats(self.params[key])
        except ValueError as exc:
            raise ConfigError(f"not a number list: {self.params[key]!r}", field=key, line=self.lines.get(key)) from exc

    def number(self, key: str, default=None) -> float:
        vals = self.floats(key, None if default is None else [default])
        if len(vals) != 1:
            raise ConfigError("expected one number", field=key, line=self.lines.get(key))
        return vals[0]

    def provenance(self) -> Dict[str, str]:
        out = {"experiment": self.name, "kind": self.kind, "seed": str(self.seed)}
        out.update({k: str(v) for k, v in self.model_spec.items()})
        out.update({k: _fmt(v) for k, v in self.grid_spec.items()})
        return out


def _line_index(text: str) -> Dict[tuple, int]:
    """(section, key) -> line number, for diagnostics."""
    out, section = {}, "DEFAULT"
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            out[(section, "__section__")] = i
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m:
            out[(section, m.group(1).strip().lower())] = i
    return out


_MODEL_KEYS = {"flux": "quadratic", "d": "one", "sigma": "one"}
_GRID_KEYS = ("t", "l", "nx", "nt")


def load_config(path) -> List[ExperimentConfig]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(str(exc), line=getattr(exc, "lineno", None)) from exc
    lines = _line_index(text)
    if not parser.sections():
        raise ConfigError("no experiment sections")
    out = []
    for name in parser.sections():
        sec = parser[name]

        def where(key):
            return lines.get((name, key), lines.get(("DEFAULT", key), lines.get((name, "__section__"))))

        kind = sec.get("kind")
        if kind is None:
            raise ConfigError("missing kind", field="kind", line=where("__section__"))
        if kind not in KINDS:
            raise ConfigError(f"unknown kind {kind!r} (known: {', '.join(sorted(KINDS))})", field="kind",
                              line=where("kind"))
        model_spec = {k if k != "d" else "D": sec.get(k, v) for k, v in _MODEL_KEYS.items()}
        grid_spec = {}
        for key in _GRID_KEYS:
            if key not in sec:
                raise ConfigError("missing grid key", field=key, line=where("__section__"))
            try:
                grid_spec[{"t": "T", "l": "L"}.get(key, key)] = float(sec[key])
            except ValueError as exc:
                raise ConfigError(f"not a number: {sec[key]!r}", field=key, line=where(key)) from exc
        params = {k: v for k, v in sec.items() if k not in _MODEL_KEYS and k not in _GRID_KEYS
                  and k not in ("kind", "output", "seed")}
        try:
            seed = int(sec.get("seed", "0"))
        except ValueError as exc:
            raise ConfigError("seed must be an integer", field="seed", line=where("seed")) from exc
        cfg = ExperimentConfig(name, kind, model_spec, grid_spec, params, sec.get("output", name), seed,
                               path, {k: where(k) for k in list(sec.keys())})
        out.append(cfg)
    return out


def validate(cfg: ExperimentConfig) -> None:
    """Resolve names, check parameter lists and the grid; raises ConfigError."""
    model = cfg.model()
    try:
        grid = cfg.grid()
    except (ValueError, GammaCostError) as exc:
        raise ConfigError(str(exc), field="nx", line=cfg.lines.get("nx")) from exc
    spec = KINDS[cfg.kind]
    for key in spec.required:
        if key not in cfg.params:
            raise ConfigError("missing key", field=key, line=cfg.lines.get("kind"))
    if "eps" in spec.required:
        eps = cfg.floats("eps")
        if not eps:
            raise ConfigError("empty eps list", field="eps", line=cfg.lines.get("eps"))
        if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps[:-1], eps[1:])):
            raise ConfigError("eps list must be positive and strictly decreasing", field="eps",
                              line=cfg.lines.get("eps"))
        if cfg.kind == "viscous-limit":
            for e in eps:
                try:
                    check_cfl(model, grid, e, SolverConfig())
                except CflViolation as exc:
                    raise ConfigError(f"grid is CFL-infeasible at eps={e}: {exc}", field="nt",
                                      line=cfg.lines.get("nt")) from exc
    if spec.validate is not None:
        spec.validate(cfg, model, grid)


# ---------------------------------------------------------------------------
# experiment kinds


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


@dataclass
class Table:
    header: List[str]
    rows: List[list]


def _kind_viscous_limit(cfg, model, grid):
    ul, ur = cfg.number("u_left"), cfg.number("u_right")
    u0 = np.where(grid.x < 0, ul, ur)
    ref = solve_entropic(model, grid, u0)
    rows = []
    for eps in cfg.floats("eps"):
        u = solve_viscous(model, grid, u0, eps)
        I = cost_I_eps(model, u, eps)
        rows.append([eps, dist_scrU(u, ref), I.value, I.value / eps,
                     apriori_ratio(model, u, eps, I.value / eps)])
    return Table(["eps", "dist_scrU_to_entropic", "I_eps", "H_eps", "apriori_ratio"], rows)


def _kind_gamma_sweep(cfg, model, grid):
    traces = (cfg.number("u_minus"), cfg.number("u_plus"))
    eps_list = cfg.floats("eps")
    rows, vals = [], []
    for eps in eps_list:
        prof = recovery_family(model, traces, eps, grid)
        rep = cost_H_eps(prof.model, prof.u, eps, RECOVERY_CFG)
        vals.append(rep.value)
        rows.append([eps, rep.value, prof.E.energy / eps, rep.diagnostics["compatibility_defect"],
                     prof.shift])
    if len(eps_list) >= 2:
        rows.append(["richardson", richardson(eps_list, vals), "", "", ""])
    return Table(["eps", "H_eps", "control_energy_over_eps", "compatibility_defect", "shift"], rows)


def _kind_r_table(cfg, model, grid):
    n_w, n_c = int(cfg.number("n_w", 51)), int(cfg.number("n_c", 51))
    closed = cfg.params.get("closed_form", "sigma-one")
    n_grid = int(cfg.number("n_grid", 401))
    ws = np.linspace(0.0, 1.0, n_w)
    cs = np.linspace(-1.0, 1.0, n_c)
    rows = []
    for w in ws:
        for c in cs:
            rg = r_fsigma(model, w, c, n_grid)
            rc = float(r_closed_form(model, w, c, closed))
            rows.append([w, c, rg, rc, 0.0 if rg == rc else abs(rg - rc)])
    return Table(["w", "c", "R_grid", "R_closed", "abs_diff"], rows)


def _kind_staircase(cfg, model, grid):
    b = cfg.floats("b")
    n = int(cfg.number("n"))
    pbv = staircase(b, n, T=grid.T, L=grid.L)
    H = cost_H_bv(model, pbv)
    Hp = cost_H_prime_bv(model, pbv)
    cube = sum(v ** 3 for v in b[:n])
    return Table(["n", "H", "H_prime", "H_prime_error_bar", "T_over_6_sum_b3", "T_over_12_sum_b3"],
                 [[n, H.value, Hp.value, Hp.diagnostics["error_bar"], grid.T * cube / 6, grid.T * cube / 12]])


def _kind_young_slice(cfg, model, grid):
    ks = [int(k) for k in cfg.floats("k")]
    h = int(cfg.number("h", 2))
    nu0, nu1, beta = slice_measures(model, grid, level=cfg.number("level", 0.14))
    rows = []
    for k in ks:
        S = slice_approximation(model, nu0, nu1, beta, k, h)
        a, b = S.cost(), S.target_cost()
        rows.append([k, a, b, abs(a - b), S.width_deviation(),
                     dist_scrU(SpaceTimeField(grid, S.moment_field("iota")),
                               SpaceTimeField(grid, S.target_moment("iota")))])
    return Table(["k", "I_slices", "I_mixture", "abs_diff", "width_deviation", "dist_scrU_iota"], rows)


def _kind_hj_sweep(cfg, model, grid):
    traces = (cfg.number("u_minus"), cfg.number("u_plus"))
    amp = cfg.number("gamma_amplitude", 0.0)

    def family(eps):
        return recovery_family(model, traces, eps, grid).u

    # the shifted model is the same for every eps
    shift_model = recovery_family(model, traces, cfg.floats("eps")[0], grid).model
    gamma = (lambda t: amp * math.sin(2 * math.pi * t / grid.T)) if amp else None
    rows = hj_sweep(shift_model, family, cfg.floats("eps"), RECOVERY_CFG, gamma)
    return Table(["eps", "J", "K", "i_part", "gamma_part"], [list(r) for r in rows])


def _shock_from_segments(model, segments, T, L):
    times = np.linspace(0.0, T, len(segments) + 1)
    pos = [0.0]
    for (um, up), t0, t1 in zip(segments, times[:-1], times[1:]):
        s = float((model.f(np.array(up)) - model.f(np.array(um))) / (up - um))
        pos.append(pos[-1] + s * (t1 - t0))
    return PiecewiseBVSolution([Shock(times, pos, [s[0] for s in segments], [s[1] for s in segments])],
                               segments[0][0], T, L)


def _kind_h_vs_hprime(cfg, model, grid):
    vals = cfg.floats("segments")
    if len(vals) % 2 or not vals:
        raise ConfigError("segments needs pairs u_minus u_plus", field="segments", line=cfg.lines.get("segments"))
    segs = list(zip(vals[0::2], vals[1::2]))
    pbv = _shock_from_segments(model, segs, grid.T, grid.L)
    panels = int(cfg.number("panels", 64))
    H = cost_H_bv(model, pbv)
    Hp = cost_H_prime_bv(model, pbv, panels=panels)
    return Table(["H", "H_quad_error", "H_prime", "H_prime_error_bar", "gap"],
                 [[H.value, H.diagnostics["quad_error"], Hp.value, Hp.diagnostics["error_bar"], H.value - Hp.value]])


def _check_r_table(cfg, model, grid):
    closed = cfg.params.get("closed_form", "sigma-one")
    if closed not in ("sigma-one", "f-equals-sigma"):
        raise ConfigError(f"unknown closed form {closed!r}", field="closed_form", line=cfg.lines.get("closed_form"))


@dataclass
class KindSpec:
    run: Callable
    required: tuple
    help: str
    validate: Optional[Callable] = None


KINDS: Dict[str, KindSpec] = {
    "viscous-limit": KindSpec(_kind_viscous_limit, ("eps", "u_left", "u_right"),
                              "viscous solutions of a Riemann problem: distance to the entropic solution, cost, a-priori ratio"),
    "gamma-sweep": KindSpec(_kind_gamma_sweep, ("eps", "u_minus", "u_plus"),
                            "H_eps of the recovery profiles of one jump, with the Richardson limit"),
    "r-table": KindSpec(_kind_r_table, (), "grid R_{f,sigma} against a closed form on a (w, c) table "
                        "(n_w, n_c, n_grid, closed_form = sigma-one | f-equals-sigma)", _check_r_table),
    "staircase": KindSpec(_kind_staircase, ("b", "n"), "H and H' of the truncated staircase"),
    "young-slice": KindSpec(_kind_young_slice, ("k",), "strip approximation of a stationary mixture (k list, h, level)"),
    "hj-sweep": KindSpec(_kind_hj_sweep, ("eps", "u_minus", "u_plus"),
                         "K_eps = J_eps/eps of potentials of the recovery profiles (gamma_amplitude optional)"),
    "h-vs-hprime": KindSpec(_kind_h_vs_hprime, ("segments",),
                            "H and H' of one shock whose traces change between equal time segments"),
}


def output_root(cfg: ExperimentConfig) -> Path:
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env)
    return cfg.source.parent if cfg.source is not None else Path.cwd()


def write_table(table: Table, cfg: ExperimentConfig, path: Path) -> None:
    prov = cfg.provenance()
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.header + list(prov))
        for row in table.rows:
            w.writerow([_fmt(v) for v in row] + list(prov.values()))


def run_experiment(cfg: ExperimentConfig) -> Path:
    validate(cfg)
    np.random.seed(cfg.seed)
    table = KINDS[cfg.kind].run(cfg, cfg.model(), cfg.grid())
    path = output_root(cfg) / cfg.output / f"{cfg.kind}.csv"
    write_table(table, cfg, path)
    return path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gammacost", description="Run cost experiments from INI configs.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run every experiment of a config")
    p_run.add_argument("config")
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")
    sub.add_parser("list-kinds", help="list experiment kinds and their keys")
    args = parser.parse_args(argv)

    if args.command == "list-kinds":
        for name, spec in KINDS.items():
            keys = ", ".join(spec.required) or "-"
            print(f"{name}: {spec.help} [required: {keys}]")
        return 0
    try:
        configs = load_config(args.config)
        for cfg in configs:
            validate(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.command == "validate":
        print(f"ok: {len(configs)} experiment(s)")
        return 0
    status = 0
    for cfg in configs:
        try:
            path = run_experiment(cfg)
            print(f"{cfg.name}: wrote {path}")
        except ConfigError as exc:
            print(f"{cfg.name}: config error: {exc}", file=sys.stderr)
            status = max(status, 1)
        except (GammaCostError, ValueError, ArithmeticError) as exc:
            print(f"{cfg.name}: failed: {exc}", file=sys.stderr)
            status = 2
    return status


if __name__ == "__main__":
    sys.exit(main())
