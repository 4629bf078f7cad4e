"""Command line front end.

Subcommands::

    grwsurf gallery list
    grwsurf verify   --scene S [--checks a,b] [--grid NxM] [--tol T] --out report.json
    grwsurf capacity --scene S [--r R0] [--R-list v1,v2] [--h H] --out caps.csv
    grwsurf theorem  --scene S --id Thm4.1 --out hyp.json

Exit status is 0 when every requested check passes, 2 when a check fails
and 1 on usage, configuration or I/O errors.  Hypothesis reports are
informational and always exit 0.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__, gallery, identities, parabolic
from .ambient import ChartError, FiberModel, GRWSpacetime, WarpingFunction
from .exprs import ExprDomainError, ExprSyntaxError
from .grids import Grid
from .surface import Disk, DomainError, Immersion, NotSpacelikeError, Rect

__all__ = ["SceneConfig", "ConfigError", "load_scene", "emit_report", "main", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed or inconsistent scene file."""


@dataclass
class SceneConfig:
    instance: gallery.Instance
    grid: Grid
    tolerance: float = identities.DEFAULT_TOL
    checks: List[str] = field(default_factory=lambda: list(identities.DEFAULT_CHECKS))
    alphas: List[float] = field(default_factory=lambda: [0.05, 0.5, 1.0])
    r: float = 1.0
    R_list: List[float] = field(default_factory=lambda: [3.0])
    h: float = 0.05
    growth: Optional[float] = None
    center: tuple = (0.0, 0.0)
    mode: str = "geodesic"
    source: str = ""

    def describe(self) -> dict:
        im = self.instance.immersion
        st = im.spacetime
        return {
            "surface": im.name,
            "components": list(im.components),
            "domain": im.domain.describe(),
            "spacetime": {"warping": st.warping.text, "t_min": st.warping.t_min,
                          "t_max": st.warping.t_max, "fiber": st.fiber.kind,
                          "fiber_dim": st.fiber.dim, "curvature": st.fiber.curvature},
        }


def _floats(text: str, what: str) -> List[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{what}: expected a comma separated list of numbers, got {text!r}")


def _float(sec, key, default):
    if key not in sec:
        return default
    try:
        return float(sec[key])
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key}: not a number: {sec[key]!r}")


def _parse_grid(text: str, base: Grid) -> Grid:
    try:
        nx, ny = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise ConfigError(f"grid must look like NxM, got {text!r}")
    if nx < 1 or ny < 1:
        raise ConfigError("grid sizes must be positive")
    return base.with_shape(nx, ny)


def _parse_domain(text: str):
    parts = text.split()
    try:
        if parts[0] == "rect" and len(parts) == 5:
            return Rect(*(float(v) for v in parts[1:]))
        if parts[0] in ("disk", "open_disk") and len(parts) == 4:
            return Disk(*(float(v) for v in parts[1:]), open=parts[0] == "open_disk")
    except (ValueError, IndexError):
        pass
    raise ConfigError(f"domain must be 'rect x0 x1 y0 y1' or 'disk cx cy r', got {text!r}")


def _spacetime(sec) -> GRWSpacetime:
    w = WarpingFunction(sec.get("warping", "1"), _float(sec, "t_min", -math.inf),
                        _float(sec, "t_max", math.inf))
    fiber = FiberModel(sec.get("fiber", "euclidean"), int(_float(sec, "fiber_dim", 3)),
                       _float(sec, "curvature", 0.0))
    return GRWSpacetime(w, fiber)


def load_scene(path) -> SceneConfig:
    """Read an INI scene file with sections ``[spacetime]``, ``[surface]`` and ``[run]``."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scene {path}: {exc.strerror}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed scene {path}: {exc}")
    unknown = set(cp.sections()) - {"spacetime", "surface", "run"}
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")
    if not cp.has_section("surface"):
        raise ConfigError("scene needs a [surface] section")
    surf = cp["surface"]
    run = cp["run"] if cp.has_section("run") else cp["DEFAULT"]
    try:
        st = _spacetime(cp["spacetime"]) if cp.has_section("spacetime") else None
        if "gallery" in surf:
            name = surf["gallery"]
            params = {k[len("param."):]: v for k, v in surf.items() if k.startswith("param.")}
            params = {k: _coerce(v) for k, v in params.items()}
            if st is not None and name != "slice":
                raise ConfigError(f"gallery surface {name!r} lives in a fixed spacetime; "
                                  "drop the [spacetime] section")
            try:
                inst = gallery.instantiate(name, params, spacetime=st)
            except KeyError as exc:
                raise ConfigError(str(exc.args[0]))
        elif "components" in surf:
            st = st or GRWSpacetime()
            comps = [c.strip() for c in surf["components"].split(";")]
            domain = _parse_domain(surf.get("domain", "rect -1 1 -1 1"))
            im = Immersion(st, comps, domain, name=surf.get("name", "surface"))
            if isinstance(domain, Rect):
                grid = Grid.rect(domain.x0, domain.x1, domain.y0, domain.y1)
            else:
                rad = domain.radius * (0.9 if domain.open else 1.0)
                grid = Grid.disk(domain.cx, domain.cy, rad)
            inst = gallery.Instance(im, grid)
        else:
            raise ConfigError("[surface] needs either 'gallery' or 'components'")
    except (ExprSyntaxError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc))
    grid = inst.grid
    if "grid" in run:
        grid = _parse_grid(run["grid"], grid)
    cfg = SceneConfig(inst, grid, source=str(path))
    cfg.tolerance = _float(run, "tolerance", cfg.tolerance)
    if not cfg.tolerance > 0:
        raise ConfigError("tolerance must be positive")
    if "checks" in run:
        cfg.checks = _check_list(run["checks"])
    if "alphas" in run:
        cfg.alphas = _floats(run["alphas"], "alphas")
    cfg.r = _float(run, "r", cfg.r)
    if "R_list" in run:
        cfg.R_list = _floats(run["R_list"], "R_list")
    cfg.h = _float(run, "h", cfg.h)
    cfg.growth = _float(run, "growth", None)
    if "center" in run:
        c = _floats(run["center"], "center")
        if len(c) != 2:
            raise ConfigError("center needs two numbers")
        cfg.center = (c[0], c[1])
    cfg.mode = run.get("mode", cfg.mode)
    if cfg.mode not in ("geodesic", "parameter"):
        raise ConfigError(f"mode must be geodesic or parameter, got {cfg.mode!r}")
    return cfg


def _coerce(v: str):
    try:
        return float(v)
    except ValueError:
        return v


def _check_list(text: str) -> List[str]:
    names = [c.strip() for c in text.split(",") if c.strip()]
    bad = [c for c in names if c not in identities.CHECKS]
    if bad:
        raise ConfigError(f"unknown checks {bad}; known: {', '.join(identities.CHECKS)}")
    return names


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def emit_report(results, fmt: str, path) -> None:
    """Write ``results`` as versioned JSON or as capacity CSV.

    For JSON ``results`` is a mapping merged under ``schema_version``; for
    CSV it is a sequence of :class:`parabolic.CapacityResult`.
    """
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION}
        doc.update(_jsonable(dict(results or {})))
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    elif fmt == "csv":
        text = parabolic.capacities_to_csv(list(results or []))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if str(path) == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")


# --------------------------------------------------------------- commands
def _cmd_gallery(args) -> int:
    for spec in gallery.list_surfaces():
        params = ", ".join(f"{k}={v}" for k, v in spec.parameters.items())
        print(f"{spec.name}\t{params}\t{spec.description}")
    return 0


def _cmd_verify(args) -> int:
    cfg = load_scene(args.scene)
    if args.checks:
        cfg.checks = _check_list(args.checks)
    if args.grid:
        cfg.grid = _parse_grid(args.grid, cfg.grid)
    tol = cfg.tolerance if args.tol is None else args.tol
    if not tol > 0:
        raise ConfigError("--tol must be positive")
    im = cfg.instance.immersion
    reports = identities.run_checks(im, cfg.grid, cfg.checks, tol, cfg.alphas)
    ok = all(r.passed for r in reports)
    emit_report({"command": "verify", "scene": cfg.describe(), "grid": cfg.grid.describe(),
                 "tolerance": tol, "all_pass": ok,
                 "checks": [r.to_dict() for r in reports]}, "json", args.out)
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.identity_id} "
              f"max residual {r.max_abs_residual:.3e} (tol {r.tolerance:g})", file=sys.stderr)
    return 0 if ok else 2


def _cmd_capacity(args) -> int:
    cfg = load_scene(args.scene)
    r = cfg.r if args.r is None else args.r
    R_list = cfg.R_list if args.R_list is None else _floats(args.R_list, "--R-list")
    h = cfg.h if args.h is None else args.h
    im = cfg.instance.immersion
    if cfg.mode == "parameter":
        mesh = parabolic.build_mesh(im, cfg.center, max(R_list) * 1.02 + 2 * h, h,
                                    growth=cfg.growth, snap=[r] + R_list,
                                    snap_mode="parameter")
        results = [parabolic.capacity(mesh, r, R, mode="parameter") for R in R_list]
        verdict = None
    else:
        scan = parabolic.parabolicity_scan(im, cfg.center, r, R_list, h, growth=cfg.growth)
        results, verdict = scan.results, scan.verdict
    emit_report(results, "csv", args.out)
    if verdict is not None:
        print(f"trend: {verdict}", file=sys.stderr)
    return 0


def _cmd_theorem(args) -> int:
    cfg = load_scene(args.scene)
    if args.grid:
        cfg.grid = _parse_grid(args.grid, cfg.grid)
    rep = identities.hypothesis_report(cfg.instance.immersion, cfg.grid, args.id)
    emit_report({"command": "theorem", "scene": cfg.describe(), "grid": cfg.grid.describe(),
                 "report": rep.to_dict()}, "json", args.out)
    for flag in rep.flags:
        print(flag, file=sys.stderr)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="grwsurf", description="Spacelike surfaces in GRW spacetimes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    g = sub.add_parser("gallery", help="built-in surfaces")
    g.add_argument("action", choices=["list"])
    v = sub.add_parser("verify", help="run identity checks")
    v.add_argument("--scene", required=True)
    v.add_argument("--checks")
    v.add_argument("--grid")
    v.add_argument("--tol", type=float)
    v.add_argument("--out", required=True)
    c = sub.add_parser("capacity", help="capacity scan")
    c.add_argument("--scene", required=True)
    c.add_argument("--r", type=float)
    c.add_argument("--R-list", dest="R_list")
    c.add_argument("--h", type=float)
    c.add_argument("--out", required=True)
    t = sub.add_parser("theorem", help="hypothesis report")
    t.add_argument("--scene", required=True)
    t.add_argument("--id", required=True, choices=list(identities.THEOREMS))
    t.add_argument("--grid")
    t.add_argument("--out", required=True)
    return p


_COMMANDS = {"gallery": _cmd_gallery, "verify": _cmd_verify, "capacity": _cmd_capacity,
             "theorem": _cmd_theorem}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("grwsurf: error: a subcommand is required", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ExprSyntaxError, ExprDomainError, ChartError, DomainError,
            NotSpacelikeError, parabolic.MeshError, parabolic.SolverError, ValueError) as exc:
        print(f"grwsurf: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"grwsurf: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
