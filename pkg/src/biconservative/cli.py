"""Command-line entry point.

Commands::

    catalog                          list seeds with (lambda0, mu0)
    build --seed SPEC --out F.csv    profile CSV plus F.meta (key: value lines)
    verify (--seed SPEC [--profile F.csv] | --chart SPEC | --profile F.csv) [--suite NAME ...]
    graph --expr U [--n N] [--grid lo:hi:k | x,y;x,y] [--param a=1 ...]
    export-svg --profile F.csv --out F.svg

Construction tolerances are overridden with ``--tol.NAME VALUE`` where NAME
is one of ``ode``, ``focal`` or ``max_step``.  Exit codes: 0 pass,
1 verification failure, 2 usage or parse error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import bch_evolve as be
from . import charts as ch
from . import graph_lab as gl
from . import isopar_catalog as ic
from . import verify as vf
from .errors import (
    DegenerateMetricError,
    DomainError,
    FocalError,
    GeometryError,
    IntegrationError,
    MinimalSeedError,
)
from .expr import ExprError

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

TOLERANCE_DEFAULTS = {"ode": be.ODE_TOL, "focal": be.EPS_FOCAL, "max_step": be.MAX_STEP}

SVG_WIDTH, SVG_HEIGHT, SVG_MARGIN = 640, 400, 40


class UsageError(ValueError):
    """Bad command-line input (exit code 2)."""


@dataclass
class RunConfig:
    command: str
    seed_spec: Optional[str] = None
    chart_spec: Optional[str] = None
    profile: Optional[str] = None
    x_max: float = 1.0
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCE_DEFAULTS))
    output_path: Optional[str] = None
    suites: tuple = ()
    perturb: float = 0.0
    expr: Optional[str] = None
    n: int = 2
    grid: str = "-0.5:0.5:5"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.x_max > 0:
            raise UsageError("--xmax must be positive")


# argument parsing --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biconservative", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("catalog", help="list available seeds").add_argument("--out")

    b = sub.add_parser("build", help="integrate the profile of a seed")
    b.add_argument("--seed", required=True)
    b.add_argument("--xmax", type=float, default=1.0)
    b.add_argument("--out", required=True, help="profile CSV path; metadata goes next to it with suffix .meta")

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--seed")
    v.add_argument("--chart", help="chart spec, e.g. sphere:n=2,r=1 or a catalog name")
    v.add_argument("--profile", help="profile CSV written by build")
    v.add_argument("--xmax", type=float, default=1.0)
    v.add_argument("--suite", action="append", default=[], help=f"one of {', '.join(vf.SUITES)}")
    v.add_argument("--perturb", type=float, default=0.0, help="add PERTURB * x1 to the last curvature (codazzi)")
    v.add_argument("--out")

    g = sub.add_parser("graph", help="minimal and biharmonic residuals of a graph")
    g.add_argument("--expr", required=True)
    g.add_argument("--n", type=int, default=2)
    g.add_argument("--grid", default="-0.5:0.5:5", help="lo:hi:count per axis, or points 'x,y;x,y'")
    g.add_argument("--param", action="append", default=[], help="name=value")
    g.add_argument("--out")

    e = sub.add_parser("export-svg", help="plot a profile CSV")
    e.add_argument("--profile", required=True)
    e.add_argument("--out")
    return parser


def parse_tolerances(extra: list[str]) -> dict:
    """Consume ``--tol.NAME VALUE`` and ``--tol.NAME=VALUE`` pairs."""
    tols = dict(TOLERANCE_DEFAULTS)
    i = 0
    while i < len(extra):
        arg = extra[i]
        if not arg.startswith("--tol."):
            raise UsageError(f"unrecognized argument {arg!r}")
        key, eq, value = arg[len("--tol."):].partition("=")
        if not eq:
            if i + 1 >= len(extra):
                raise UsageError(f"{arg} needs a value")
            value = extra[i + 1]
            i += 1
        if key not in TOLERANCE_DEFAULTS:
            raise UsageError(f"unknown tolerance {key!r}; expected one of {', '.join(TOLERANCE_DEFAULTS)}")
        try:
            tols[key] = float(value)
        except ValueError:
            raise UsageError(f"tolerance {key!r} needs a number, got {value!r}") from None
        if not tols[key] > 0:
            raise UsageError(f"tolerance {key!r} must be positive")
        i += 1
    return tols


def config_from_args(argv=None) -> RunConfig:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    tols = parse_tolerances(extra)
    cfg = RunConfig(command=args.command, tolerances=tols, output_path=getattr(args, "out", None))
    for name in ("seed", "chart", "profile", "expr", "n", "grid", "perturb"):
        if hasattr(args, name):
            setattr(cfg, {"seed": "seed_spec", "chart": "chart_spec"}.get(name, name), getattr(args, name))
    if hasattr(args, "xmax"):
        cfg.x_max = args.xmax
        cfg.__post_init__()
    if hasattr(args, "suite"):
        cfg.suites = tuple(args.suite)
    if hasattr(args, "param"):
        cfg.params = parse_params(args.param)
    return cfg


def parse_params(items) -> dict:
    out = {}
    for item in items:
        key, eq, value = item.partition("=")
        if not eq or not key:
            raise UsageError(f"--param needs name=value, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--param {key!r} needs a number, got {value!r}") from None
    return out


# helpers -----------------------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _fmt_list(xs) -> str:
    return "{" + ",".join(f"{float(x):.17g}" for x in xs) + "}"


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def meta_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".meta")


def read_meta(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            key, _, value = line.partition(":")
            out[key.strip()] = value.strip()
    return out


def chart_from_spec(spec: str) -> ch.Chart:
    """``plane:n=2``, ``sphere:n=2,r=1``, ``cylinder:p=1,q=1,r=1``, ``catenoid``, ``torus``,
    ``veronese``, or a name from :func:`charts.catalog`."""
    builders = {
        "plane": (ch.plane, {"n": int, "half": float}),
        "sphere": (ch.sphere, {"n": int, "r": float}),
        "cylinder": (ch.cylinder, {"p": int, "q": int, "r": float, "half": float}),
        "catenoid": (ch.catenoid, {"c": float, "half": float}),
        "torus": (ch.torus, {"big": float, "small": float}),
        "veronese": (ic.veronese_chart, {"margin": float}),
    }
    name, raw = ic.parse_spec(spec)
    if not raw and name in ch.catalog() and name not in builders:
        return ch.catalog()[name]
    if name not in builders:
        known = sorted(set(builders) | set(ch.catalog()))
        raise UsageError(f"unknown chart {name!r}; expected one of {known}")
    fn, types = builders[name]
    unknown = set(raw) - set(types)
    if unknown:
        raise UsageError(f"unknown key(s) {sorted(unknown)} for chart {name!r}")
    try:
        kwargs = {k: types[k](v) for k, v in raw.items()}
    except ValueError as exc:
        raise UsageError(f"bad value in {spec!r}: {exc}") from None
    return fn(**kwargs)


def residual_summary(ev: be.EvolvedChart) -> list:
    """Reports stored in build metadata and reproduced by ``verify --profile``."""
    return vf.eigenframe_suite(ev) + vf.run_suite("codazzi", ev)


# commands ------------------------------------------------------------------------------------------


def cmd_catalog(cfg: RunConfig) -> int:
    rows = []
    for spec in ic.CATALOG_ENTRIES:
        seed = ic.seed_from_spec(spec)
        rows.append(
            f"{seed.name}  n={seed.n}  lam0={_fmt_list(seed.lam0)}  mu0={_fmt_list(seed.mu0)}  "
            f"symmetry={seed.symmetry_tag}"
        )
    rows.append("veronese  n=2  RP^2 -> S^4(1/sqrt(3)) in E^5  embedding and checks only, not evolvable")
    _emit("\n".join(sorted(rows)) + "\n", cfg.output_path)
    return EXIT_PASS


def _build(cfg: RunConfig) -> tuple[ic.IsoparSeed, be.EvolvedChart]:
    seed = ic.seed_from_spec(cfg.seed_spec)
    tols = cfg.tolerances
    profile = be.solve_profile(seed, cfg.x_max, tol=tols["ode"], max_step=tols["max_step"], eps_focal=tols["focal"])
    return seed, be.evolve(seed, profile)


def cmd_build(cfg: RunConfig) -> int:
    seed, ev = _build(cfg)
    out = Path(cfg.output_path)
    be.write_profile_csv(ev.profile, out)
    reports = residual_summary(ev)
    lo, hi = ev.profile.validity
    rows = [
        ("seed", seed.name),
        ("n", str(seed.n)),
        ("lam0", _fmt_list(seed.lam0)),
        ("mu0", _fmt_list(seed.mu0)),
        ("x_max", _fmt(cfg.x_max)),
        ("tol.ode", _fmt(cfg.tolerances["ode"])),
        ("tol.focal", _fmt(cfg.tolerances["focal"])),
        ("tol.max_step", _fmt(cfg.tolerances["max_step"])),
        ("method", ev.profile.method),
        ("validity_lo", _fmt(lo)),
        ("validity_hi", _fmt(hi)),
        ("stop_reason", ev.profile.stop_reason),
        ("nodes", str(len(ev.profile.xs))),
        ("chart", "X = Y + alpha(x_n) N0 + x_n e_n"),
        ("normal_convention", "II_ij = <X_ij, N>, D_i N = -A X_i, h = trace(A)/n, N = N0 at x_n = 0"),
        ("mu_sign", _fmt(be.MU_SIGN)),
    ]
    for r in reports:
        rows.append((f"residual.{r.name}", _fmt(r.max_abs)))
        rows.append((f"verdict.{r.name}", r.verdict))
    meta_path(out).write_text("".join(f"{k}: {v}\n" for k, v in rows))
    sys.stdout.write(f"wrote {out} ({len(ev.profile.xs)} nodes, validity [{lo:.6g}, {hi:.6g}])\n")
    return EXIT_PASS if all(r.verdict != "fail" for r in reports) else EXIT_FAIL


def _verify_target(cfg: RunConfig):
    if cfg.chart_spec:
        if cfg.seed_spec or cfg.profile:
            raise UsageError("--chart excludes --seed and --profile")
        return chart_from_spec(cfg.chart_spec)
    seed_spec = cfg.seed_spec
    if cfg.profile:
        meta = meta_path(cfg.profile)
        if seed_spec is None and meta.exists():
            seed_spec = read_meta(meta).get("seed")
        if seed_spec is None:
            raise UsageError("--profile needs --seed or a .meta file next to it")
        seed = ic.seed_from_spec(seed_spec)
        tol = cfg.tolerances["ode"]
        if meta.exists() and "tol.ode" in read_meta(meta):
            tol = float(read_meta(meta)["tol.ode"])
        return be.evolve(seed, be.read_profile_csv(cfg.profile, seed, tol=tol))
    if seed_spec is None:
        raise UsageError("verify needs --seed, --chart or --profile")
    cfg.seed_spec = seed_spec
    return _build(cfg)[1]


def cmd_verify(cfg: RunConfig) -> int:
    suites = cfg.suites or vf.SUITES
    unknown = [s for s in suites if s not in vf.SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s) {unknown}; expected one of {', '.join(vf.SUITES)}")
    target = _verify_target(cfg)
    reports = []
    for name in suites:
        try:
            reports.extend(vf.run_suite(name, target, perturb=cfg.perturb))
        except (FocalError, IntegrationError, DegenerateMetricError):
            raise
        except GeometryError as exc:
            reports.append(
                vf.ResidualReport(name, 0, float("nan"), float("nan"), 0.0, "fail", (), f"rejected: {exc}")
            )
    _emit(vf.format_reports(reports), cfg.output_path)
    for r in reports:
        sys.stderr.write(r.line() + "\n")
    return EXIT_PASS if vf.aggregate_verdict(reports) else EXIT_FAIL


def parse_grid(spec: str, n: int) -> np.ndarray:
    spec = spec.strip()
    try:
        if ";" in spec or ("," in spec and ":" not in spec):
            pts = np.array([[float(c) for c in item.split(",")] for item in spec.split(";") if item.strip()])
            if pts.ndim != 2 or pts.shape[1] != n:
                raise UsageError(f"grid points need {n} coordinates each")
            return pts
        lo, hi, count = spec.split(":")
        axis = np.linspace(float(lo), float(hi), int(count))
    except (ValueError, TypeError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"malformed grid {spec!r}; use lo:hi:count or 'x,y;x,y'") from None
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def cmd_graph(cfg: RunConfig) -> int:
    if cfg.n < 1:
        raise UsageError("--n must be positive")
    pts = parse_grid(cfg.grid, cfg.n)
    box = np.stack([pts.min(axis=0), pts.max(axis=0)], axis=1)
    gc = gl.GraphChart(cfg.expr, n=cfg.n, box=box, params=cfg.params)
    names = [f"x{i + 1}" for i in range(cfg.n)]
    header = names + ["minimal"] + [f"biharmonic_x{i + 1}" for i in range(cfg.n)] + ["biharmonic_u"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for p in pts:
        r = gl.biharmonic_graph_residuals(gc, p)
        w.writerow([_fmt(v) for v in (*p, gl.minimal_graph_residual(gc, p), *r.horizontal, r.vertical)])
    _emit(buf.getvalue(), cfg.output_path)
    return EXIT_PASS


def profile_svg(cols: dict) -> str:
    """Deterministic SVG of (x_n, alpha): fixed viewBox, axes, one polyline."""
    x, y = np.asarray(cols["x_n"]), np.asarray(cols["alpha"])
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise UsageError("profile contains non-finite values")
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(min(y.min(), 0.0)), float(max(y.max(), 0.0))
    if x1 <= x0:
        raise UsageError("profile needs a nondegenerate x_n range")
    if y1 <= y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    W, H, M = SVG_WIDTH, SVG_HEIGHT, SVG_MARGIN

    def sx(v):
        return M + (v - x0) / (x1 - x0) * (W - 2 * M)

    def sy(v):
        return H - M - (v - y0) / (y1 - y0) * (H - 2 * M)

    pts = " ".join(f"{sx(a):.3f},{sy(b):.3f}" for a, b in zip(x, y))
    ax_y = sy(0.0)
    ax_x = sx(min(max(0.0, x0), x1))
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}">',
        "<title>profile alpha(x_n)</title>",
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{M}" y1="{ax_y:.3f}" x2="{W - M}" y2="{ax_y:.3f}" stroke="gray" stroke-width="1"/>',
        f'<line x1="{ax_x:.3f}" y1="{M}" x2="{ax_x:.3f}" y2="{H - M}" stroke="gray" stroke-width="1"/>',
        f'<text x="{W - M}" y="{ax_y - 6:.3f}" font-size="12" text-anchor="end">x_n</text>',
        f'<text x="{ax_x + 6:.3f}" y="{M - 8}" font-size="12">alpha</text>',
        f'<text x="{M}" y="{H - 10}" font-size="11">x_n in [{x0:.6g}, {x1:.6g}], alpha in [{y0:.6g}, {y1:.6g}]</text>',
        f'<polyline fill="none" stroke="black" stroke-width="1.5" points="{pts}"/>',
        "</svg>",
    ]
    return "\n".join(lines) + "\n"


def cmd_export_svg(cfg: RunConfig) -> int:
    try:
        cols = be.read_profile_table(cfg.profile)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read profile {cfg.profile!r}: {exc}") from None
    out = cfg.output_path or str(Path(cfg.profile).with_suffix(".svg"))
    Path(out).write_text(profile_svg(cols))
    return EXIT_PASS


COMMANDS = {
    "catalog": cmd_catalog,
    "build": cmd_build,
    "verify": cmd_verify,
    "graph": cmd_graph,
    "export-svg": cmd_export_svg,
}


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
        return COMMANDS[cfg.command](cfg)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except (FocalError, IntegrationError, DegenerateMetricError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except DomainError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except MinimalSeedError as exc:
        sys.stderr.write(f"rejected: {exc}\n")
        return EXIT_USAGE
    except (UsageError, ExprError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
