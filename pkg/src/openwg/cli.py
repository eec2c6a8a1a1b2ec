"""
Command-line driver: ``openwg [scenario] [--config cfg.json] [--out-dir DIR]``.

A run reads one JSON config (see :data:`DEFAULTS`), writes the requested
artifacts into the output directory and prints a JSON manifest (parameters,
condition numbers, residuals, errors, timings) with 17 significant digits.

Exit status: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time

SCENARIOS = ("modes", "greens", "transmit", "matched", "energy", "dirichlet-terminated", "dirichlet-pair")

_GRID = {"x1": [-10.0, 10.0, 21], "x2": [-10.0, 10.0, 21], "exclude": 0.25}

DEFAULTS = {
    "modes": {"k": 1.0, "k1": 2.0, "d": 2.0, "h": None},
    "greens": {"k": 1.0, "k1": 2.0, "d": 2.0, "L": 10.0, "source": [0.0, 1.0],
               "numerics": {"panels": 72}, "grid": _GRID},
    "transmit": {"k": 1.0, "k1": 2.0, "d": 2.0, "L": 10.0,
                 "incoming": {"type": "point", "x0": [0.0, 1.0]},
                 "numerics": {"panels": 72, "truncation": None}, "grid": _GRID},
    "matched": {"k": 1.0, "left": {"k1": 2.0, "d": 2.0}, "right": {"k1": 3.0, "d": 4.0}, "L": 10.0,
                "incoming": {"type": "point", "x0": [10.0, 0.0], "side": "left"},
                "numerics": {"panels": 96, "guide_panels": 72, "skeleton_tol": 1e-10, "order": 20,
                             "order_near": 60, "truncation": None},
                "grid": _GRID},
    "energy": {"k": 1.0, "left": {"k1": 2.0, "d": 2.0}, "right": {"k1": 3.0, "d": 4.0}, "L": 10.0,
               "incoming": {"type": "mode", "side": "left", "index": 0},
               "numerics": {"panels": 96, "guide_panels": 72, "skeleton_tol": 1e-10, "order": 20,
                            "order_near": 60, "truncation": None, "box_half_side": 20.0, "box_nodes": 500},
               "grid": None},
    "dirichlet-terminated": {"k": 2.0, "d": 2.0, "L": 10.0, "end": [-1.0, 1.0],
                             "incoming": {"type": "point", "x0": [-21.0, 0.0]},
                             "numerics": {"line_panels": None, "wall_panels": None, "arc_panels": 4, "arc_levels": 6},
                             "grid": _GRID},
    "dirichlet-pair": {"k": 2.0, "d": 2.0, "L": 10.0, "gap": 6.0, "overhang": 1.0,
                       "incoming": {"type": "point", "x0": [-31.0, 0.0]},
                       "numerics": {"line_panels": None, "wall_panels": None, "arc_panels": 4, "arc_levels": 6},
                       "grid": {"x1": [-10.0, 16.0, 27], "x2": [-10.0, 10.0, 21], "exclude": 0.25}},
}


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (exit status 2)."""


def _merge(base, over):
    out = copy.deepcopy(base)
    for key, val in (over or {}).items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def _positive(cfg, *keys):
    for key in keys:
        v = cfg.get(key)
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
            raise ConfigError(f"'{key}' must be a positive number")


def load_config(scenario: str | None, path: str | None) -> dict:
    """Merge a JSON config over the scenario defaults and validate it."""
    user = {}
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
    name = user.get("scenario", scenario) if scenario is None else scenario
    if not name:
        raise ConfigError("no scenario given; choose one of: " + ", ".join(SCENARIOS))
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario '{name}'; choose one of: " + ", ".join(SCENARIOS))
    cfg = _merge(DEFAULTS[name], {k: v for k, v in user.items() if k != "scenario"})
    cfg["scenario"] = name
    _validate(cfg)
    return cfg


def _validate(cfg):
    name = cfg["scenario"]
    _positive(cfg, "k")
    if name in ("modes", "greens", "transmit"):
        _positive(cfg, "k1", "d")
    if name in ("matched", "energy"):
        for side in ("left", "right"):
            if not isinstance(cfg.get(side), dict):
                raise ConfigError(f"'{side}' must be an object with k1 and d")
            _positive(cfg[side], "k1", "d")
    if name.startswith("dirichlet"):
        _positive(cfg, "d")
    if "L" in cfg:
        _positive(cfg, "L")
    if name == "modes" and cfg.get("h") is not None:
        _positive(cfg, "h")
    if name == "dirichlet-pair":
        _positive(cfg, "gap", "overhang")
    grid = cfg.get("grid")
    if grid is not None:
        for ax in ("x1", "x2"):
            g = grid.get(ax)
            if not (isinstance(g, list) and len(g) == 3):
                raise ConfigError(f"grid.{ax} must be [min, max, count]")
            if not (isinstance(g[2], int) and g[2] >= 2) or not g[0] < g[1]:
                raise ConfigError(f"grid.{ax} needs min < max and count >= 2")
    inc = cfg.get("incoming")
    if inc is not None:
        if inc.get("type") not in ("point", "mode"):
            raise ConfigError("incoming.type must be 'point' or 'mode'")
        if inc["type"] == "point" and not (isinstance(inc.get("x0"), list) and len(inc["x0"]) == 2):
            raise ConfigError("incoming.x0 must be [x1, x2]")
        if inc["type"] == "mode" and name not in ("matched", "energy"):
            raise ConfigError("mode incidence needs a junction scenario")
        if inc.get("side", "left") not in ("left", "right"):
            raise ConfigError("incoming.side must be 'left' or 'right'")


# ---------------------------------------------------------------------------
# scenario runners (heavy imports deferred so --threads can take effect)


def _grid(cfg, keep):
    import numpy as np

    g = cfg["grid"]
    x1 = np.linspace(*g["x1"][:2], g["x1"][2])
    x2 = np.linspace(*g["x2"][:2], g["x2"][2])
    X1, X2 = np.meshgrid(x1, x2)
    x = np.stack([X1.ravel(), X2.ravel()])
    return x[:, keep(x, float(g.get("exclude", 0.25)))]


def _away(values, coords, dist):
    import numpy as np

    m = np.ones(coords.shape, dtype=bool)
    for v in values:
        m &= np.abs(coords - v) >= dist
    return m


def _run_modes(cfg, out, man, cache):
    from . import modes as md

    if cfg.get("h") is None:
        ms = md.find_modes(cfg["k"], cfg["k1"], cfg["d"])
    else:
        ms = md.find_parallel_modes(cfg["k"], cfg["k1"], cfg["d"], cfg["h"])
    path = os.path.join(out, "modes.json")
    md.modes_to_json(ms, path)
    man["modes"] = [m.to_dict() for m in ms]
    man["artifacts"] = ["modes.json"]


def _guide(cfg, truncation=None):
    from . import transmission as tr

    n = cfg["numerics"]
    prob = tr.waveguide_problem(cfg["k"], cfg["k1"], cfg["d"], L=cfg["L"], n_panels=n["panels"],
                                truncation=truncation)
    return prob, tr.assemble_transmission(prob)


def _run_greens(cfg, out, man, cache):
    import numpy as np

    from . import matched as mt
    from . import transmission as tr

    prob, sysm = _guide(cfg)
    d = cfg["d"]
    x = _grid(cfg, lambda x, e: _away((-d, d), x[1], e))
    y = np.asarray(cfg["source"], dtype=complex).reshape(2, 1)
    x = x[:, np.hypot(x[0] - y[0].real, x[1] - y[1].real) > 1e-12]
    u = tr.WaveguideGreens(sysm).matrix(x.astype(complex), y)[:, 0]
    mt.write_field_csv(x, u, os.path.join(out, "field.csv"))
    man.update(cond=sysm.cond, n_nodes=sysm.n, truncation=prob.contour.truncation, artifacts=["field.csv"])


def _run_transmit(cfg, out, man, cache):
    import numpy as np

    from . import matched as mt
    from . import transmission as tr
    from .kernels import HelmholtzKernel

    prob, sysm = _guide(cfg, cfg["numerics"].get("truncation"))
    c = prob.contour
    k, d = cfg["k"], cfg["d"]
    x0 = np.asarray(cfg["incoming"]["x0"], dtype=complex).reshape(2, 1)
    inside0 = abs(x0[1, 0].real) < d
    kk = k if inside0 else cfg["k1"]
    # analytic test: the field of a source in one region is the exact solution in the other
    g = HelmholtzKernel(("S", "Sp"), kk)(c.x, c.normal, x0, np.zeros((2, 1)))
    sgn = -1.0 if inside0 else 1.0
    dens = tr.solve_transmission(sysm, sgn * g[0], sgn * g[1])
    tr.write_density_csv(dens, os.path.join(out, "density.csv"))
    x = _grid(cfg, lambda x, e: _away((-d, d), x[1], e))
    u = tr.evaluate_field(prob, dens, x.astype(complex))
    ins = np.abs(x[1]) < d
    exact_region = ~ins if inside0 else ins
    with np.errstate(divide="ignore", invalid="ignore"):
        ref = HelmholtzKernel(("S",), kk)(x.astype(complex), np.zeros((2, 1)), x0, np.zeros((2, 1)))[0]
    err = float(np.max(np.abs(u - np.where(exact_region, ref, 0.0)))) if x.shape[1] else 0.0
    mt.write_field_csv(x, u, os.path.join(out, "field.csv"))
    man.update(cond=sysm.cond, n_nodes=sysm.n, truncation=c.truncation, analytic_error=err,
               artifacts=["density.csv", "field.csv"])


def _matched(cfg, cache):
    from . import matched as mt

    n = cfg["numerics"]
    prob = mt.matched_problem(cfg["k"], (cfg["left"]["k1"], cfg["left"]["d"]),
                              (cfg["right"]["k1"], cfg["right"]["d"]), L=cfg["L"], n_panels=n["panels"],
                              guide_panels=n["guide_panels"], truncation=n.get("truncation"),
                              tolerance=n["skeleton_tol"], order=n["order"], order_near=n["order_near"],
                              cache_dir=cache)
    return prob, mt.assemble_matched(prob)


def _run_matched(cfg, out, man, cache):
    import numpy as np

    from . import matched as mt
    from . import analysis as an

    prob, system = _matched(cfg, cache)
    inc = cfg["incoming"]
    side = inc.get("side", "left")
    dl, dr = cfg["left"]["d"], cfg["right"]["d"]
    x = _grid(cfg, lambda x, e: _away((0.0,), x[0], e) & _away((-dl, dl), x[1], 1e-9)
              & _away((-dr, dr), x[1], 1e-9))
    xc = x.astype(complex)
    if inc["type"] == "point":
        x0 = np.asarray(inc["x0"], dtype=float)
        g1, g2 = mt.point_source_data(prob, x0, side)
        sol = mt.solve_matched(system, g1, g2)
        u = mt.reconstruct_field(prob, sol, xc)
        src_right = x0[0] > 0
        own = (x[0] < 0) if side == "left" else (x[0] > 0)
        if src_right != (side == "right"):
            # analytic test: the outgoing field equals the side's Green's function
            s = mt._side(prob, side)
            ref = np.zeros(x.shape[1], dtype=complex)
            ref[own] = s.greens_full(xc[:, own], x0.reshape(2, 1).astype(complex))[:, 0]
            man["analytic_error"] = float(np.max(np.abs(u - ref))) if x.shape[1] else 0.0
    else:
        s = mt._side(prob, side)
        modes = s.modes()
        sol = an.solve_mode_incidence(prob, system, side, int(inc.get("index", 0)), modes)
        u = mt.reconstruct_field(prob, sol, xc)
    mt.write_field_csv(x, u, os.path.join(out, "field.csv"))
    man.update(cond=system.cond, diag_block_max=system.diag_block_max, residual=sol.residual,
               n_nodes=prob.contour.n_nodes, truncation=prob.contour.truncation, artifacts=["field.csv"])


def _run_energy(cfg, out, man, cache):
    from . import analysis as an
    from . import matched as mt

    prob, system = _matched(cfg, cache)
    inc = cfg["incoming"]
    if inc["type"] != "mode":
        raise ConfigError("energy needs a mode incidence")
    side = inc.get("side", "left")
    s = mt._side(prob, side)
    modes = s.modes()
    idx = int(inc.get("index", 0))
    if not 0 <= idx < len(modes):
        raise ConfigError(f"mode index {idx} out of range ({len(modes)} modes)")
    sol = an.solve_mode_incidence(prob, system, side, idx, modes)
    n = cfg["numerics"]
    rep = an.power_balance(prob, sol, modes[idx].xi, incoming={"side": side, "index": idx, "xi": modes[idx].xi},
                           half_side=n["box_half_side"], nodes_per_side=n["box_nodes"])
    rep.to_json(os.path.join(out, "report.json"))
    man.update(cond=system.cond, residual=sol.residual, report=rep.to_dict(), artifacts=["report.json"])


def _run_dirichlet(cfg, out, man, cache):
    import numpy as np

    from . import dirichlet as dr
    from . import matched as mt

    n = cfg["numerics"]
    d = cfg["d"]
    common = dict(k=cfg["k"], d=d, L=cfg["L"], line_panels=n["line_panels"], wall_panels=n["wall_panels"],
                  arc_panels=n["arc_panels"], arc_levels=n["arc_levels"])
    if cfg["scenario"] == "dirichlet-terminated":
        junc = dr.terminated_guide(end=tuple(cfg["end"]), **common)
    else:
        junc = dr.guide_pair(gap=cfg["gap"], overhang=cfg["overhang"], **common)
    junc.assemble()
    pos = junc.positions
    x0 = np.asarray(cfg["incoming"]["x0"], dtype=float).reshape(2, 1)
    r0 = int(junc.region_of(x0)[0])
    x = _grid(cfg, lambda x, e: _away(pos, x[0], e) & _away((-d, d), x[1], e))
    # analytic test: a source placed in another region, seen from the last one
    rt = len(junc.regions) - 1 if r0 == 0 else 0
    xa = np.array([[pos[0] + 4.0 if rt == 0 else pos[-1] - 4.0], [0.3]])
    src = [None] * len(junc.regions)
    src[rt] = dr.point_source_incoming(junc.regions[rt], xa, -1.0)
    sa = junc.solve(src)
    own = junc.region_of(x) == rt
    ua = junc.field(sa, x)
    ref = np.zeros(x.shape[1], dtype=complex)
    ref[own] = junc.regions[rt].matrix(x[:, own], xa)[:, 0]
    man["analytic_error"] = float(np.max(np.abs(ua - ref))) if x.shape[1] else 0.0
    inc = [None] * len(junc.regions)
    inc[r0] = dr.point_source_incoming(junc.regions[r0], x0)
    sol = junc.solve(inc)
    keep = np.hypot(x[0] - x0[0], x[1] - x0[1]) > 1e-12
    x = x[:, keep]
    u = junc.field(sol, x, inc)
    mt.write_field_csv(x, u, os.path.join(out, "field.csv"))
    man.update(cond=junc.cond, residual=sol.residual, arc_cond=junc.meta["arc_cond"],
               wall_cond=junc.meta["wall_cond"], n_nodes=sum(c.n_nodes for c in junc.lines),
               artifacts=["field.csv"])


_RUNNERS = {
    "modes": _run_modes,
    "greens": _run_greens,
    "transmit": _run_transmit,
    "matched": _run_matched,
    "energy": _run_energy,
    "dirichlet-terminated": _run_dirichlet,
    "dirichlet-pair": _run_dirichlet,
}


def _set_threads(n: int):
    if n > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def _numerical_errors():
    import numpy as np

    from .compression import CompressionError
    from .dirichlet import DirichletError
    from .modes import ExpansionError
    from .quadrature import QuadratureError
    from .transmission import NumericalFailure
    from .analysis import FluxResolutionError

    return (NumericalFailure, DirichletError, CompressionError, QuadratureError, ExpansionError,
            FluxResolutionError, np.linalg.LinAlgError, FloatingPointError)


def run(cfg: dict, out_dir: str, use_cache: bool = True) -> dict:
    """Run one validated scenario; returns the manifest (also written to ``manifest.json``)."""
    from .analysis import dumps17

    os.makedirs(out_dir, exist_ok=True)
    cache = None
    if use_cache:
        cache = os.environ.get("OPENWG_CACHE_DIR") or os.path.join(out_dir, "cache")
    man = {"scenario": cfg["scenario"], "config": cfg}
    t0 = time.perf_counter()
    _RUNNERS[cfg["scenario"]](cfg, out_dir, man, cache)
    man["timing"] = {"wall_clock": time.perf_counter() - t0}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        fh.write(dumps17(man) + "\n")
    return man


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="openwg", description="Open-waveguide junction solver.")
    parser.add_argument("scenario", nargs="?", default=None, help="one of: " + ", ".join(SCENARIOS))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out-dir", default="openwg-out", help="directory for artifacts")
    parser.add_argument("--threads", type=int, default=0, help="BLAS threads (0 = library default)")
    parser.add_argument("--no-cache", action="store_true", help="do not read or write the compression cache")
    args = parser.parse_args(argv)
    _set_threads(args.threads)
    try:
        if args.scenario is None and args.config is None:
            raise ConfigError("no scenario given; choose one of: " + ", ".join(SCENARIOS))
        cfg = load_config(args.scenario, args.config)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"openwg: error: {exc}", file=sys.stderr)
        return 2
    from .analysis import dumps17

    try:
        man = run(cfg, args.out_dir, not args.no_cache)
    except ConfigError as exc:
        print(f"openwg: error: {exc}", file=sys.stderr)
        return 2
    except _numerical_errors() as exc:
        print(f"openwg: numerical failure: {exc}", file=sys.stderr)
        return 3
    print(dumps17(man))
    return 0


if __name__ == "__main__":
    sys.exit(main())
