"""Acceptance criteria 1-9, one check function per criterion.

Each ``criterion_k`` returns ``(ok, detail)``.  The pytest wrappers record a
one-line verdict that ``conftest.pytest_terminal_summary`` prints at the end
of the run; ``scripts/run_acceptance.py`` calls the same functions directly.
Tolerances are pinned here, not imported, so a change in library defaults
cannot loosen a criterion silently.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from biconservative import bch_evolve as be
from biconservative import charts
from biconservative import geom_kernel as gk
from biconservative import graph_lab as gl
from biconservative import isopar_catalog as ic
from biconservative import jets as J
from biconservative import verify as vf

GOLDEN_FLOOR = Path(__file__).parent / "golden" / "bhh_floor.txt"
RESULTS: dict[int, str] = {}

KERNEL_CHARTS = ["plane", "graph", "sphere2", "sphere3", "cylinder", "catenoid", "torus"]
CONSTRUCTION_SEEDS = [
    "sphere:n=2,r=1",
    "sphere:n=2,r=2",
    "sphere:n=3,r=1",
    "sphere:n=3,r=2",
    "sphere:n=4,r=1",
    "sphere:n=4,r=2",
    "product:p=1,q=1,r1=1,r2=1",
    "cylinder:p=1,q=1,r=1",
]
CATENOIDAL = [s for s in CONSTRUCTION_SEEDS if s.startswith("sphere")]
AUTONOMOUS = [s for s in ic.CATALOG_ENTRIES if not s.startswith("product")]

_CACHE: dict = {}


def evolved(spec):
    if spec not in _CACHE:
        _CACHE[spec] = be.build(ic.seed_from_spec(spec), 1.0)
    return _CACHE[spec]


def criterion_1():
    rng = np.random.default_rng(1)
    worst_b = worst_n = 0.0
    counts = []
    for name in KERNEL_CHARTS:
        c = charts.catalog()[name]
        pts = c.sample(100, rng, inset=0.05)
        worst_b = max(worst_b, max(gk.beltrami_defect(c, q) for q in pts))
        worst_n = max(worst_n, max(gk.normal_laplacian_defect(c, q) for q in pts))
        counts.append(len(pts))
    ok = worst_b <= 1e-8 and worst_n <= 1e-6 and min(counts) >= 100
    return ok, f"{len(KERNEL_CHARTS)} charts x {min(counts)} pts: |dX - nhN| max {worst_b:.2e} (tol 1e-8), normal-Laplacian defect max {worst_n:.2e} (tol 1e-6)"


def criterion_2():
    worst = 0.0
    for spec in CONSTRUCTION_SEEDS:
        ev = evolved(spec)
        reports = vf.eigenframe_suite(ev, points=vf.eigenframe_grid(ev, coverage=0.8))
        ident = [r for r in reports if r.name == "bch-identity"][0]
        worst = max(worst, ident.max_abs)
    return worst <= 1e-6, f"{len(CONSTRUCTION_SEEDS)} seeds, 80% of validity: max(|nh + 2 lambda_n|, |sum lambda_i + 3 lambda_n|) = {worst:.2e} (tol 1e-6)"


def criterion_3():
    worst_a = worst_fi = 0.0
    for spec in AUTONOMOUS:
        ev = evolved(spec)
        cf = be.closed_form_profile(ev.seed, x_max=1.0)
        half = min(cf.validity[1], ev.profile.validity[1])
        xs = np.linspace(-half, half, 201)
        worst_a = max(worst_a, max(abs(cf.alpha_at(x) - ev.profile.alpha_at(x)) for x in xs))
        worst_fi = max(worst_fi, float(np.max(np.abs(be.first_integral_defect(ev.profile)))))
    ok = worst_a <= 1e-6 and worst_fi <= 1e-8
    return ok, f"{len(AUTONOMOUS)} mu0=0 seeds: max |alpha_cf - alpha_rk| {worst_a:.2e} (tol 1e-6), first integral {worst_fi:.2e} (tol 1e-8)"


def criterion_4():
    worst = {"geodesy": 0.0, "planarity": 0.0, "level sets": 0.0, "congruence": 0.0}
    levels = 0
    for spec in CATENOIDAL:
        ev = evolved(spec)
        lines = vf.xn_line_checks(ev, base_points=10)
        flow = vf.gradient_curve_checks(ev, base_points=10)
        worst["geodesy"] = max(worst["geodesy"], lines[0].max_abs, flow[0].max_abs)
        worst["planarity"] = max(worst["planarity"], lines[1].max_abs, flow[1].max_abs)
        worst["congruence"] = max(worst["congruence"], flow[2].max_abs)
        reps = vf.level_set_suite(ev)
        levels = max(levels, len({r.name.split("]")[0] for r in reps}))
        for r in reps:
            if r.verdict != "skipped" and "seed-curvatures" not in r.name:
                worst["level sets"] = max(worst["level sets"], r.max_abs)
    ok = all(v <= 1e-8 for v in worst.values()) and levels == 5
    detail = ", ".join(f"{k} {v:.2e}" for k, v in worst.items())
    return ok, f"{len(CATENOIDAL)} catenoidal seeds, {levels} levels, 10 base points: {detail} (tol 1e-8)"


def measured_floors() -> dict:
    return {spec: vf.bhh_properness_check(evolved(spec)).min_abs for spec in ic.CATALOG_ENTRIES}


def read_golden_floors() -> dict:
    out = {}
    for line in GOLDEN_FLOOR.read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            spec, value = line.rsplit(": ", 1)
            out[spec] = float(value)
    return out


def criterion_5():
    floors = measured_floors()
    golden = read_golden_floors()
    above = all(v > vf.BHH_FLOOR for v in floors.values())
    same = set(golden) == set(floors) and all(
        abs(floors[k] - golden[k]) <= 1e-9 * max(1.0, abs(golden[k])) for k in floors
    )
    low = min(floors, key=floors.get)
    return above and same, (
        f"{len(floors)} proper BCHs: min |dh - |A|^2 h| = {floors[low]:.4e} ({low}) > floor {vf.BHH_FLOOR:g}; "
        f"golden floors {'reproduced' if same else 'MISMATCH'}"
    )


def criterion_6():
    worst_c = 0.0
    for spec in ic.CATALOG_ENTRIES:
        (r,) = vf.run_suite("codazzi", evolved(spec))
        worst_c = max(worst_c, r.max_abs)
    sphere = charts.sphere(2, 1.0)
    pts = sphere.sample(20, np.random.default_rng(6), inset=0.1)
    control = vf.codazzi_suite(vf.OrthoMetric.from_chart(sphere).perturbed(1e-3), pts).max_abs
    kinds = {}
    worst_leaf = 0.0
    for spec in ["sphere:n=3,r=1", "sphere:n=4,r=2", "product:p=1,q=2,r1=1,r2=1", "cylinder:p=2,q=0,r=1",
                 "cylinder:p=1,q=1,r=1"]:
        ev = evolved(spec)
        q = np.append(ev.seed.box.mean(axis=1), 0.4 * ev.profile.validity[1])
        for block in ev.seed.blocks:
            leaf = vf.leaf_umbilic_check(ev.chart, block, q, min_multiplicity=1)
            if abs(leaf.lam) < 1e-12:
                kinds.setdefault("cylinder flat factor", set()).add(leaf.kind)
            elif leaf.multiplicity >= 2:
                kinds.setdefault(spec.split(":")[0], set()).add(f"{leaf.kind}^{leaf.multiplicity}")
            else:
                continue
            worst_leaf = max(worst_leaf, leaf.fit_rms, leaf.umbilic_defect)
    expected = (
        kinds.get("sphere") == {"sphere^2", "sphere^3"}
        and "sphere^2" in kinds.get("product", set())
        and kinds.get("cylinder flat factor") == {"plane"}
    )
    ok = worst_c <= 1e-7 and control > 1e-4 and worst_leaf <= 1e-5 and expected
    observed = "; ".join(f"{k}: {sorted(v)}" for k, v in sorted(kinds.items()))
    return ok, (
        f"Codazzi max {worst_c:.2e} (tol 1e-7), perturbed control {control:.2e} (> 1e-4), "
        f"leaf defect max {worst_leaf:.2e} (tol 1e-5); leaves {observed}"
    )


def criterion_7():
    rng = np.random.default_rng(7)
    c = ic.veronese_chart()
    pts = c.sample(100, rng)
    norm_err = anti_err = 0.0
    ranks = []
    for theta, phi in pts:
        X = c([theta, phi])
        norm_err = max(norm_err, abs(X @ X - 1.0 / 3.0))
        # (theta, phi) -> (pi - theta, phi + pi) is the antipodal map of S^2
        anti = ic.veronese_rp2(np.pi - theta, phi + np.pi)
        anti_err = max(anti_err, float(np.max(np.abs(anti - X))))
        X1 = gk.jet(c, [theta, phi], 1)
        ranks.append(np.linalg.matrix_rank(np.column_stack([X1.d(0).value, X1.d(1).value]), tol=1e-8))
    ok = norm_err <= 1e-12 and anti_err <= 1e-12 and min(ranks) == 2
    return ok, f"100 samples: | |X|^2 - 1/3 | {norm_err:.2e}, antipodal {anti_err:.2e} (tol 1e-12), Jacobian rank min {min(ranks)}"


def criterion_8():
    rng = np.random.default_rng(8)
    worst = 0.0
    for u in ["x1^3*x2 + 0.3*x2^2", "sin(x1)*cos(x2)", "exp(0.5*x1) - x2^2*x1"]:
        gc = gl.GraphChart(u, n=2, half=0.8)
        for p in gc.chart().sample(10, rng, inset=0.1):
            d = gl.position_bilaplacian_graph(gc, p) - gk.position_bilaplacian(gc.chart(), p)
            worst = max(worst, float(np.max(np.abs(d))))
    gc = gl.scherk()
    pts = gc.chart().sample(30, rng, inset=0.05)
    minimal = max(abs(gl.minimal_graph_residual(gc, p)) for p in pts)
    bih = max(gl.biharmonic_graph_residuals(gc, p).max_abs for p in pts)
    ok = worst <= 1e-6 and minimal <= 1e-10 and bih <= 1e-5
    return ok, f"expansion vs composed Laplacians {worst:.2e} (tol 1e-6); Scherk minimal {minimal:.2e}, biharmonic {bih:.2e} (tol 1e-5)"


def criterion_9():
    worst_id = worst_ratio = 0.0
    for spec in ["sphere:n=2,r=1", "sphere:n=3,r=1"]:
        ev = evolved(spec)
        n = ev.n
        for l in (1, 2):
            ext = ic.extend_cylinder(ev.chart, l)
            for p in vf.eigenframe_grid(ev, coverage=0.8, levels=5, per_level=2):
                q = np.append(p, np.linspace(-0.3, 0.3, l))
                geo = gk.LocalGeometry(ext, q, order=2)
                lam, _ = gk.principal(geo.II.value, geo.g.value)
                lam_n = float(geo.II.value[n - 1, n - 1] / geo.g.value[n - 1, n - 1])
                ht = float(geo.h.value)
                worst_id = max(
                    worst_id,
                    abs((n + l) * ht + 2 * lam_n),
                    abs(lam.sum() - lam_n + 3 * lam_n),
                    float(np.max(gk.eigenframe_condition(ext, q))),
                )
                h = float(gk.LocalGeometry(ev.chart, p, order=2).h.value)
                worst_ratio = max(worst_ratio, abs(ht / h - n / (n + l)))
    ok = worst_id <= 1e-6 and worst_ratio <= 1e-9
    return ok, f"E^l extensions (l = 1, 2) of catenoidal BCHs: identities {worst_id:.2e} (tol 1e-6), |h~/h - n/(n+l)| {worst_ratio:.2e} (tol 1e-9)"


CRITERIA = {
    1: ("kernel identities", criterion_1),
    2: ("construction identities", criterion_2),
    3: ("dual-method profile", criterion_3),
    4: ("structure suite", criterion_4),
    5: ("not biharmonic", criterion_5),
    6: ("appendix suites", criterion_6),
    7: ("Veronese", criterion_7),
    8: ("graph lab", criterion_8),
    9: ("reducibility", criterion_9),
}


def result_line(k: int, ok: bool, detail: str) -> str:
    return f"criterion {k} [{CRITERIA[k][0]}]: {'PASS' if ok else 'FAIL'} - {detail}"


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    ok, detail = CRITERIA[k][1]()
    line = result_line(k, ok, detail)
    RESULTS[k] = line
    print(line)
    assert ok, line
