"""Command-line entry points: verify, solve-mu, convergence.

Configuration comes from an optional JSON document (``--config``); individual
flags override config fields. Exit codes: 0 all enabled assertions pass,
2 assertion failure, 3 configuration error, 4 numerical failure.
"""

from __future__ import annotations

import json
import math
import sys

import click
import numpy as np

from . import corpus, mu_solver, report as report_mod
from .ambient import Ambient, euclidean, sphere
from .grid import Grid, build_grid
from .immersion import DegenerateImmersionError

EXIT_ASSERTION = 2
EXIT_CONFIG = 3
EXIT_NUMERICAL = 4


class ConfigError(ValueError):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _parse_grid_size(text: str) -> tuple[int, int]:
    try:
        nu_s, nv_s = text.lower().split("x")
        nu, nv = int(nu_s), int(nv_s)
    except ValueError as exc:
        raise ConfigError(f"bad grid size {text!r}, expected NUxNV") from exc
    if nu < 4 or nv < 4:
        raise ConfigError("grid sizes must be >= 4")
    return nu, nv


def _parse_periodic(text: str) -> tuple[bool, bool]:
    axes = {a.strip() for a in text.split(",") if a.strip()}
    bad = axes - {"u", "v"}
    if bad:
        raise ConfigError(f"unknown periodic axes {sorted(bad)}")
    return "u" in axes, "v" in axes


def _ambient_from_dict(d: dict) -> Ambient:
    kind = d.get("kind", "euclidean")
    dim = int(d.get("dim", 3))
    if kind == "euclidean":
        return euclidean(dim)
    if kind == "sphere":
        if "radius" not in d:
            raise ConfigError("sphere ambient needs a radius")
        return sphere(dim, float(d["radius"]))
    raise ConfigError(f"unknown ambient kind {kind!r}")


def _grid_from_dict(d: dict) -> Grid:
    try:
        u = d["u"]
        v = d["v"]
        return build_grid(
            (float(u[0]), float(u[1])),
            (float(v[0]), float(v[1])),
            int(u[2]),
            int(v[2]),
            bool(u[3]),
            bool(v[3]),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad grid spec: {exc}") from exc


def _load_surface_file(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read surface file {path}: {exc}") from exc
    for key in ("grid", "surface"):
        if key not in doc:
            raise ConfigError(f"surface file missing {key!r}")
    grid = _grid_from_dict(doc["grid"])
    surf = doc["surface"]
    if "builtin" in surf:
        name = surf["builtin"]
        params = surf.get("params", {})
        try:
            jet = corpus.make_builtin(name, grid=grid, **params)
        except (corpus.SurfaceConfigError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        return jet, name
    if "positions" in surf:
        space = _ambient_from_dict(doc.get("ambient", {}))
        pos = np.asarray(surf["positions"], dtype=np.float64)
        try:
            pos = pos.reshape(grid.nu, grid.nv, space.embedding_dim)
        except ValueError as exc:
            raise ConfigError(
                f"positions shape {pos.shape} does not match grid and ambient"
            ) from exc
        jet = corpus.load_tabulated(grid, pos, space)
        return jet, "tabulated"
    raise ConfigError("surface entry needs either 'builtin' or 'positions'")


def _resolve_jet(cfg: dict):
    """Build an immersion jet from merged config; returns (jet, label)."""
    surface = cfg.get("surface")
    if surface is None:
        raise ConfigError("no surface given (use --surface or a config file)")
    if isinstance(surface, str) and surface in corpus.BUILTIN_MAKERS:
        params = dict(cfg.get("params", {}))
        grid = None
        if "grid_size" in cfg:
            nu, nv = cfg["grid_size"]
            grid = corpus.default_grid(surface, n=nu, params=params)
            if (grid.nu, grid.nv) != (nu, nv):
                grid = Grid(
                    grid.u_min, grid.u_max, grid.v_min, grid.v_max,
                    nu, nv, grid.periodic_u, grid.periodic_v,
                )
        if "periodic" in cfg and grid is not None:
            pu, pv = cfg["periodic"]
            grid = Grid(
                grid.u_min, grid.u_max, grid.v_min, grid.v_max,
                grid.nu, grid.nv, pu, pv,
            )
        try:
            jet = corpus.make_builtin(surface, grid=grid, **params)
        except (corpus.SurfaceConfigError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if cfg.get("fd_jets"):
            jet = corpus.tabulate(jet)
        return jet, surface
    if isinstance(surface, str):
        return _load_surface_file(surface)
    raise ConfigError(f"bad surface entry {surface!r}")


def _merge(cfg: dict, **overrides) -> dict:
    merged = dict(cfg)
    for key, val in overrides.items():
        if val is not None and val is not False:
            merged[key] = val
    return merged


def _emit(rep, fmt: str, output: str | None):
    text = report_mod.report_to_json(rep) if fmt == "json" else report_mod.report_to_csv(rep)
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _check_assertions(rep, assert_flags, assert_residuals) -> list[str]:
    failures = []
    for spec in assert_flags:
        try:
            name, want_s = spec.split("=")
            want = {"true": True, "false": False}[want_s.strip().lower()]
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"bad flag assertion {spec!r}") from exc
        got = rep.flags.get(name.strip())
        if got is not want:
            failures.append(f"flag {name.strip()}: expected {want}, got {got}")
    for spec in assert_residuals:
        try:
            name, tol_s = spec.split("<=")
            tol = float(tol_s)
        except ValueError as exc:
            raise ConfigError(f"bad residual assertion {spec!r}") from exc
        try:
            entry = rep.residual(name.strip())
        except KeyError:
            failures.append(f"residual {name.strip()}: not in report")
            continue
        if entry.linf > tol:
            failures.append(f"residual {name.strip()}: linf {entry.linf:.3e} > {tol:.3e}")
    return failures


@click.group()
def main():
    """Numerical verification toolkit for biconservative surface identities."""


@main.command("verify")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--surface", default=None, help="builtin name or surface-file path")
@click.option("--grid", "grid_size", default=None, help="NUxNV")
@click.option("--periodic", default=None, help="comma list of periodic axes, e.g. u,v")
@click.option("--param", "params", multiple=True, help="builtin parameter, e.g. k=1.0")
@click.option("--fd-jets", is_flag=True, help="replace analytic jets by finite differences")
@click.option("--output", default=None, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None)
@click.option("--tol-analytic", type=float, default=None)
@click.option("--tol-fd", type=float, default=None)
@click.option("--dump-fields", is_flag=True)
@click.option("--assert-flag", "assert_flags", multiple=True, help="name=true|false")
@click.option("--assert-residual", "assert_residuals", multiple=True, help="name<=tol")
def verify(config_path, surface, grid_size, periodic, params, fd_jets, output, fmt,
           tol_analytic, tol_fd, dump_fields, assert_flags, assert_residuals):
    """Run the residual suite on a surface and emit a report."""
    try:
        cfg = _load_config(config_path)
        param_map = dict(cfg.get("params", {}))
        for spec in params:
            try:
                key, val = spec.split("=")
                param_map[key.strip()] = float(val)
            except ValueError as exc:
                raise ConfigError(f"bad --param {spec!r}") from exc
        cfg = _merge(
            cfg,
            surface=surface,
            grid_size=_parse_grid_size(grid_size) if grid_size else None,
            periodic=_parse_periodic(periodic) if periodic else None,
            fd_jets=fd_jets or cfg.get("fd_jets", False),
            output=output,
            format=fmt,
            tol_analytic=tol_analytic,
            tol_fd=tol_fd,
            dump_fields=dump_fields or cfg.get("dump_fields", False),
        )
        cfg["params"] = param_map
        jet, label = _resolve_jet(cfg)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    try:
        rep = report_mod.build_geometry_report(
            jet,
            surface_label=label,
            tol_analytic=cfg.get("tol_analytic", 1e-8),
            tol_fd=cfg.get("tol_fd", 1e-3),
            dump_fields=bool(cfg.get("dump_fields", False)),
        )
    except (DegenerateImmersionError, FloatingPointError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)

    _emit(rep, cfg.get("format", "json"), cfg.get("output"))
    try:
        failures = _check_assertions(
            rep, list(assert_flags) + list(cfg.get("assert_flags", [])),
            list(assert_residuals) + list(cfg.get("assert_residuals", [])),
        )
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if failures:
        for f in failures:
            click.echo(f"assertion failed: {f}", err=True)
        sys.exit(EXIT_ASSERTION)


@main.command("solve-mu")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--H", "H", type=float, default=None, help="constant mean curvature norm")
@click.option("--KN", "KN", type=float, default=None, help="constant ambient curvature")
@click.option("--grid", "grid_size", default=None, help="NUxNV, doubly periodic on [0,2pi)^2")
@click.option("--mu0", type=float, default=None, help="constant initial guess")
@click.option("--perturb", type=float, default=None,
              help="relative sin(x)sin(y) perturbation of the initial guess")
@click.option("--tol-newton", type=float, default=None)
@click.option("--max-iter", type=int, default=None)
@click.option("--output", default=None, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None)
@click.option("--dump-fields", is_flag=True)
def solve_mu_cmd(config_path, H, KN, grid_size, mu0, perturb, tol_newton, max_iter,
                 output, fmt, dump_fields):
    """Solve the principal-curvature-gap equation by damped Newton iteration."""
    try:
        cfg = _load_config(config_path)
        cfg = _merge(
            cfg,
            H=H, KN=KN,
            grid_size=_parse_grid_size(grid_size) if grid_size else None,
            mu0=mu0, perturb=perturb,
            tol_newton=tol_newton, max_iter=max_iter,
            output=output, format=fmt,
            dump_fields=dump_fields or cfg.get("dump_fields", False),
        )
        Hval = float(cfg.get("H", 1.0))
        KNval = float(cfg.get("KN", 0.0))
        nu, nv = cfg.get("grid_size", (64, 64))
        grid = build_grid((0.0, 2.0 * math.pi), (0.0, 2.0 * math.pi), nu, nv, True, True)
        if "mu0" in cfg:
            base = float(cfg["mu0"])
        else:
            base = mu_solver.constant_root(Hval, KNval)
        X, Y = grid.mesh()
        amp = float(cfg.get("perturb", 0.0))
        mu0_field = base * (1.0 + amp * np.sin(X) * np.sin(Y))
        problem = mu_solver.MuProblem(grid, Hval, np.full(grid.shape, KNval), mu0_field)
    except (ConfigError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    try:
        sol = mu_solver.solve_mu(
            problem,
            tol_newton=float(cfg.get("tol_newton", 1e-10)),
            max_iter=int(cfg.get("max_iter", 30)),
        )
    except mu_solver.SolverError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)

    rep = report_mod.build_mu_report(sol, dump_fields=bool(cfg.get("dump_fields", False)))
    _emit(rep, cfg.get("format", "json"), cfg.get("output"))
    if not sol.converged:
        click.echo("numerical failure: Newton iteration did not converge", err=True)
        sys.exit(EXIT_NUMERICAL)


# residuals of identities that hold in the continuum; orders estimated on these
CONVERGENCE_RESIDUALS = (
    "stress_divergence",
    "trace_balance",
    "gradient_trace_balance",
    "codazzi_trace_balance",
    "divergence_route_gap",
    "trace_nabla_identity",
    "stress_trace",
    "stress_norm",
    "simons",
    "codazzi_defect",
)

EXACT_FLOOR = 1e-13


def estimate_order(coarse: float, fine: float) -> object:
    """log2 residual decay rate between grid spacings h and h/2."""
    if coarse <= EXACT_FLOOR and fine <= EXACT_FLOOR:
        return "exact"
    if fine <= 0.0:
        return "exact"
    return math.log2(coarse / fine)


@main.command("convergence")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--surface", default=None, help="builtin name")
@click.option("--grid", "grid_size", default=None, help="coarsest level, NUxNV")
@click.option("--levels", type=int, default=None)
@click.option("--param", "params", multiple=True, help="builtin parameter, e.g. k=1.0")
@click.option("--fd-jets", is_flag=True)
@click.option("--output", default=None, type=click.Path())
def convergence(config_path, surface, grid_size, levels, params, fd_jets, output):
    """Refinement study: residual norms and estimated decay orders per level."""
    try:
        cfg = _load_config(config_path)
        param_map = dict(cfg.get("params", {}))
        for spec in params:
            try:
                key, val = spec.split("=")
                param_map[key.strip()] = float(val)
            except ValueError as exc:
                raise ConfigError(f"bad --param {spec!r}") from exc
        cfg = _merge(
            cfg,
            surface=surface,
            grid_size=_parse_grid_size(grid_size) if grid_size else None,
            levels=levels,
            fd_jets=fd_jets or cfg.get("fd_jets", False),
            output=output,
        )
        cfg["params"] = param_map
        nlevels = int(cfg.get("levels", 3))
        if nlevels < 3:
            raise ConfigError("need at least 3 refinement levels")
        name = cfg.get("surface")
        if name not in corpus.BUILTIN_MAKERS:
            raise ConfigError(f"convergence needs a builtin surface, got {name!r}")
        nu0, _ = cfg.get("grid_size", (32, 32))
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    table = run_convergence(name, param_map, nu0, nlevels, bool(cfg.get("fd_jets")))
    text = json.dumps(table, indent=2, sort_keys=False) + "\n"
    if cfg.get("output"):
        with open(cfg["output"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def run_convergence(name: str, params: dict, n0: int, levels: int, fd_jets: bool) -> dict:
    """Residual L-inf per refinement level plus decay-order estimates."""
    per_level = []
    hs = []
    for level in range(levels):
        n = n0 * 2**level
        jet = corpus.make_builtin(name, n=n, **params)
        if fd_jets:
            jet = corpus.tabulate(jet)
        rep = report_mod.build_geometry_report(jet, surface_label=name)
        hs.append(jet.grid.hu)
        per_level.append(
            {r.name: r.linf for r in rep.residuals if r.name in CONVERGENCE_RESIDUALS}
        )
    out = {"surface": name, "fd_jets": fd_jets, "h": hs, "residuals": {}, "orders": {}}
    for key in per_level[0]:
        series = [lvl[key] for lvl in per_level if key in lvl]
        if len(series) < levels:
            continue
        out["residuals"][key] = series
        orders = [estimate_order(series[i], series[i + 1]) for i in range(levels - 1)]
        if all(o == "exact" for o in orders):
            out["orders"][key] = "exact"
        else:
            out["orders"][key] = orders
    return out


if __name__ == "__main__":
    main()
