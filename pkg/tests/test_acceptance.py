"""Acceptance criteria 1-10.

Every criterion is run at its stated tolerance and resolution and prints
one ``C<n> PASS|FAIL`` line (plus one indented line per clause); the lines
are repeated in the terminal summary.  A criterion fails when any of its
clauses fails.  Criterion 9 is slow and runs only with ``--runslow``.
"""

import math
import time
from functools import lru_cache

import numpy as np
import pytest
from scipy.optimize import brentq

from casimir_fdfd.force import compute_force, compute_force_modes
from casimir_fdfd.geometry import Body, Rectangle, Scene, rasterize
from casimir_fdfd.green_stress import default_contour
from casimir_fdfd.grid_operator import OperatorSpec, assemble, point_source
from casimir_fdfd.linear_solver import SolveOptions, solve, solve_dense_oracle
from casimir_fdfd.materials import PERFECT_METAL, ConstantDielectric, drude_gold_preset, epsilon_iw
from casimir_fdfd.pedagogy_1d import discrete_modes, energy_method_integrand, force_energy_difference
from casimir_fdfd.quadrature import QuadratureSpec, integrate_w
from casimir_fdfd.reference_models import (
    force_1d_analytic,
    pfa_2d_squares,
    pfa_3d_blocks,
    pfa_cylinder_plate,
)
from casimir_fdfd.scenes import cylinder_plate, parallel_plates_1d, piston, two_squares
from casimir_fdfd.validation import ring_force_1d, vacuum_null_ratio

from conftest import ACCEPTANCE_LINES

PI24 = math.pi / 24
HS = (0.5, 1.0, 2.0)
DX = 1 / 32
QUAD = QuadratureSpec(rel_tol=1e-3)


def report(num, title, clauses):
    """Record and assert the clauses ``(text, ok, detail)``; ``ok=None`` is informational."""
    ok = all(c[1] is not False for c in clauses)
    lines = [f"C{num} {'PASS' if ok else 'FAIL'}  {title}"]
    for text, c_ok, detail in clauses:
        tag = "info" if c_ok is None else ("ok" if c_ok else "FAIL")
        lines.append(f"    [{tag}] {text}: {detail}")
    ACCEPTANCE_LINES.extend(lines)
    print("\n".join(lines))
    failed = [c[0] for c in clauses if c[1] is False]
    assert not failed, f"C{num}: failed clauses {failed}"


def _rel(x, ref):
    return abs(x - ref) / abs(ref)


def _order(coarse, mid, fine, r1, r2):
    """Observed order p of ``F = F0 + C dx^p`` from three grids with ratios ``r1 = dx_c/dx_m``, ``r2 = dx_m/dx_f``."""
    d1, d2 = coarse - mid, mid - fine
    if d1 * d2 <= 0:
        return float("nan")
    q = d1 / d2
    if r1 == r2:
        return math.log(q) / math.log(r1)
    # d1/d2 = r2^p (r1^p - 1) / (r2^p - 1)
    return brentq(lambda p: r2**p * (r1**p - 1) / (r2**p - 1) - q, 1e-3, 10)


# ---- cached computations shared between criteria ----


@lru_cache(maxsize=None)
def piston_forces(h, material="metal", dx=DX, subtract=True, max_standoff=None):
    mat = {"metal": PERFECT_METAL, "dielectric": ConstantDielectric(4.0), "gold": drude_gold_preset()}[material]
    scene = piston(h=h, material=mat)
    contour = None if max_standoff is None else (lambda sc, dom: default_contour(sc, dom, max_standoff=max_standoff))
    modes = ("2d", "zinv3d") if material == "metal" else ("2d",)
    t0 = time.perf_counter()
    res = compute_force_modes(scene, dx, quad=QUAD, modes=modes, subtract=subtract, contour=contour)
    res["seconds"] = time.perf_counter() - t0
    return res


def _x(res, mode="2d", part=None):
    r = res[mode]
    return float(r.F[0] if part is None else r.parts[part][0])


def _non_monotonic(vals):
    return (vals[1] - vals[0]) * (vals[2] - vals[1]) < 0


def _fmt(vals):
    return ", ".join(f"{v:.6g}" for v in vals)


# ---- criteria ----


def test_c1_eigenmode_sum():
    t0 = time.perf_counter()
    F = force_energy_difference(1.0, 5.0, 0.05)
    dt = time.perf_counter() - t0
    ring = ring_force_1d(1.0, 5.0)
    report(1, "1D plates, eigenmode-sum force (dx=0.05a, L=5a)", [
        ("within 5% of pi/24", _rel(F, PI24) <= 0.05, f"{F:.6f} vs {PI24:.6f}, {_rel(F, PI24):.2%}"),
        ("runtime < 1 s", dt < 1.0, f"{dt:.3f} s"),
        ("vs ring value pi/24 (1 - 1/16) incl. periodic image", None, f"{ring:.6f}, {_rel(F, ring):.2%}"),
    ])


def test_c2_stress_tensor_1d():
    t0 = time.perf_counter()
    res = compute_force(parallel_plates_1d(1.0, 5.0), 0.05, ("TM",), QUAD)
    dt = time.perf_counter() - t0
    F = float(res.F[0])
    ws = np.array(res.w_samples)
    f = res.integrand["TM"][:, 0]
    k = int(np.argmax(f))
    tol = 1e-12 * f.max()
    unimodal = np.all(np.diff(f[: k + 1]) >= -tol) and np.all(np.diff(f[k:]) <= tol)
    tail = (ws > 2.0) & (ws < 12.0) & (f > 0)
    slope, icpt = np.polyfit(ws[tail], np.log(f[tail]), 1)
    resid = np.max(np.abs(np.log(f[tail]) - (slope * ws[tail] + icpt)))
    ring = ring_force_1d(1.0, 5.0)
    w_peak = ws[k]
    report(2, "1D plates, stress-tensor force (dx=0.05a, L=5a, rel_tol 1e-3)", [
        ("within 5% of pi/24", _rel(F, PI24) <= 0.05, f"{F:.6f} vs {PI24:.6f}, {_rel(F, PI24):.2%}"),
        ("integrand positive (to round-off, 1e-12 of the peak)", bool(np.all(f > -tol)),
         f"min {f.min():.1e}, peak {f.max():.3e}"),
        ("integrand unimodal", bool(unimodal), f"peak at sample {k} of {len(f)}"),
        ("integrand decays exponentially", slope < 0 and resid < 0.5,
         f"log-slope {slope:.3f} on 2 < xi < 12, max log residual {resid:.2f}"),
        ("peak within factor 2 of xi = 2 pi", math.pi <= w_peak <= 4 * math.pi, f"peak at xi = {w_peak:.3g}"),
        ("<= 60 frequency evaluations", res.n_evals <= 60, f"{res.n_evals}"),
        ("runtime < 10 s", dt < 10.0, f"{dt:.2f} s"),
        ("vs ring value incl. periodic image", None, f"{ring:.6f}, {_rel(F, ring):.3%}"),
    ])


def _three_methods(dx):
    eig = force_energy_difference(1.0, 5.0, dx)
    energy = integrate_w(lambda w: energy_method_integrand(1.0, 5.0, dx, w), QuadratureSpec(rel_tol=1e-6),
                         w_scale=2 * math.pi).value
    stress = float(compute_force(parallel_plates_1d(1.0, 5.0), dx, ("TM",), QuadratureSpec(rel_tol=1e-6)).F[0])
    return {"eigenmode": eig, "energy density": energy, "stress tensor": stress}


def test_c3_three_method_agreement():
    t0 = time.perf_counter()
    grids = (0.1, 0.05, 0.025)
    vals = {dx: _three_methods(dx) for dx in grids}
    dt = time.perf_counter() - t0
    mid = vals[0.05]
    names = list(mid)
    worst = max(abs(mid[a] - mid[b]) / max(abs(mid[a]), abs(mid[b])) for a in names for b in names)
    clauses = [("pairwise within 5% at dx=0.05a", worst <= 0.05,
                ", ".join(f"{n} {mid[n]:.6f}" for n in names) + f"; max diff {worst:.2%}")]
    for n in names:
        seq = [vals[dx][n] for dx in grids]
        p = _order(*seq, 2.0, 2.0)
        conv = abs(seq[2] - seq[1]) < abs(seq[1] - seq[0])
        clauses.append((f"{n} converging, order >= 1", conv and p >= 1.0, f"{_fmt(seq)}; observed order {p:.3f}"))
    clauses.append(("runtime < 2 min", dt < 120.0, f"{dt:.1f} s"))
    report(3, "three-method 1D agreement and self-convergence (dx = 0.1, 0.05, 0.025 a)", clauses)


def test_c4_vacuum_null_and_newton():
    t0 = time.perf_counter()
    ws = np.geomspace(0.05, 60.0, 10)
    worst = max(vacuum_null_ratio(w, p, n=64, dx=DX) for w in ws for p in ("TM", "TE"))
    sc = two_squares(offset=0.25)
    FA = compute_force(sc, DX, quad=QUAD, subtract=False).F
    FB = compute_force(sc.with_target("B"), DX, quad=QUAD, subtract=False).F
    rel = float(np.linalg.norm(FA + FB) / np.linalg.norm(FA))
    dt = time.perf_counter() - t0
    report(4, "vacuum null and Newton's third law (dx=a/32)", [
        ("vacuum closed-contour integrand <= 1e-6 relative", worst <= 1e-6,
         f"max {worst:.1e} over {len(ws)} frequencies x 2 polarizations"),
        ("|F_A + F_B| <= 2% |F_A|, offset squares", rel <= 0.02, f"F_A = {_fmt(FA)}, ratio {rel:.1e}"),
        ("runtime < 5 min", dt < 300.0, f"{dt:.0f} s"),
    ])


def test_c5_oracles():
    t0 = time.perf_counter()
    bodies = (
        Body(Rectangle((-0.75, 0.0), (1.0, 1.0)), ConstantDielectric(4.0), "A"),
        Body(Rectangle((0.75, 0.25), (1.0, 1.0)), PERFECT_METAL, "B"),
    )
    scene = Scene(bodies, (4.0, 4.0), target="A", margin=0.5)
    worst = 0.0
    for pol in ("TM", "TE"):
        spec = OperatorSpec(rasterize(scene, 4.0 / 64, staggered=pol == "TE"), 2.0, pol)
        for src in ((5, 7), (32, 40)):
            b = point_source(spec, src)
            g = solve(spec, b, SolveOptions(rel_tol=1e-10)).g
            ref = solve_dense_oracle(spec, b)
            worst = max(worst, float(np.linalg.norm(g - ref) / np.linalg.norm(ref)))
    # discrete mode frequencies of a pinned segment vs the dense eigensolver
    spec_err = 0.0
    for d, dx in ((1.0, 0.05), (4.0, 0.05), (3.0, 0.1)):
        n = round(d / dx) - 1
        lap = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / dx**2
        ev = np.sqrt(np.linalg.eigvalsh(lap))
        modes = discrete_modes(d, dx).omegas[0][1:-1]
        spec_err = max(spec_err, float(np.max(np.abs(ev - modes) / modes)))
    dt = time.perf_counter() - t0
    report(5, "oracle equivalence", [
        ("CG vs dense direct on 64x64, relative field error <= 1e-6", worst <= 1e-6, f"{worst:.1e}"),
        ("discrete mode spectrum vs dense eigensolver <= 1e-10", spec_err <= 1e-10, f"{spec_err:.1e}"),
        ("runtime < 30 s", dt < 30.0, f"{dt:.1f} s"),
    ])


def test_c6_metal_piston():
    res = [piston_forces(h) for h in HS]
    tm = [_x(r, part="TM") for r in res]
    te = [_x(r, part="TE") for r in res]
    tot = [_x(r) for r in res]
    pfa = pfa_2d_squares(1.0, 1.0)
    trend_tm, trend_te = tm[2] - tm[0], te[2] - te[0]
    # contour independence at h = a against the change from dx = a/16 to a/32
    alt = _x(piston_forces(1.0, max_standoff=0.25))
    coarse = _x(piston_forces(1.0, dx=1 / 16))
    seconds = sum(r["seconds"] for r in res)
    report(6, "2D metal piston, h = 0.5, 1, 2 a at dx = a/32", [
        ("total force non-monotonic in h", _non_monotonic(tot), f"F_total = {_fmt(tot)}"),
        ("TE and TM trends of opposite sign", trend_tm * trend_te < 0,
         f"TM {_fmt(tm)}; TE {_fmt(te)}"),
        ("F/F_PFA (pfa_2d_squares)", None, _fmt([t / pfa for t in tot])),
        ("contour independence within discretization error", abs(alt - tot[1]) <= abs(coarse - tot[1]),
         f"|F(standoff a/4) - F(default)| = {abs(alt - tot[1]):.2e} vs |F(a/16) - F(a/32)| = "
         f"{abs(coarse - tot[1]):.2e}"),
        ("runtime", None, f"{seconds:.0f} s for the sweep"),
    ])


def test_c7_z_invariant_reduction():
    res = [piston_forces(h) for h in HS]
    f3 = [_x(r, "zinv3d") for r in res]
    extra = sum(r["zinv3d"].errors["fresh_evals"] for r in res)
    t0 = time.perf_counter()
    plates = compute_force(parallel_plates_1d(1.0, 5.0), 0.05, ("TM",), QuadratureSpec(rel_tol=1e-3, mode="zinv3d"))
    dt = time.perf_counter() - t0
    ref = math.pi**2 / 480
    F = float(plates.F[0])
    report(7, "z-invariant 3D reduction", [
        ("3D piston force per length non-monotonic in h", _non_monotonic(f3),
         f"F/F_PFA (pfa_3d_blocks) = {_fmt([v / pfa_3d_blocks(1.0, 1.0) for v in f3])}"),
        ("extra frequency evaluations beyond criterion 6", None, f"{extra}"),
        ("1D plates, weighted path within 5% of pi^2/480 per polarization", _rel(F, ref) <= 0.05,
         f"{F:.6f} vs {ref:.6f}, {_rel(F, ref):.2%}, {dt:.1f} s"),
    ])


def test_c8_dielectric_and_gold_pistons():
    metal = [_x(piston_forces(h)) for h in HS]
    diel = [_x(piston_forces(h, "dielectric")) for h in HS]
    gold = [_x(piston_forces(h, "gold")) for h in HS]
    g = drude_gold_preset()
    ws = np.geomspace(1.0, 1e4, 9)
    eps = np.array([epsilon_iw(g, w) for w in ws])
    drude_tail = np.abs((eps - 1) * ws**2 / g.omega_p**2 - 1)
    report(8, "dielectric (eps=4) and Drude-gold pistons weaker than perfect metal", [
        ("eps=4 weaker at every h", all(abs(d) < abs(m) for d, m in zip(diel, metal)),
         f"{_fmt(diel)} vs metal {_fmt(metal)}"),
        ("gold weaker at every h", all(abs(d) < abs(m) for d, m in zip(gold, metal)), f"{_fmt(gold)}"),
        ("gold eps(iw) decreases to 1 as omega_p^2 / w^2", bool(np.all(np.diff(eps) < 0) and eps[-1] - 1 < 1e-6
                                                                 and drude_tail[-1] < 1e-5),
         f"eps - 1 = {eps[-1] - 1:.2e} at w = 1e4, tail ratio error {drude_tail[-1]:.1e}"),
    ])


@pytest.mark.slow
def test_c9_cylinder_plate():
    rows = []
    for R in (2.0, 1.0, 0.5):
        res = compute_force(cylinder_plate(R), 1 / 16, quad=QuadratureSpec(rel_tol=1e-3, mode="zinv3d"))
        pfa = pfa_cylinder_plate(R, 1.0)
        rows.append((1 / R, res.parts["TM"][0] / pfa, res.parts["TE"][0] / pfa))
    small = rows[0]
    report(9, "cylinder-plate via the z-invariant reduction, a/R = 0.5, 1, 2 (dx = a/16)", [
        ("TM below PFA at small a/R", small[1] < 1, f"TM/PFA = {_fmt([r[1] for r in rows])}"),
        ("TE above PFA at small a/R", small[2] > 1, f"TE/PFA = {_fmt([r[2] for r in rows])}"),
        ("within 10% of the published F/F_PFA curves", False,
         "no machine-readable ordinates in the source; cannot be evaluated"),
    ])


def test_c10_subtraction_benefit():
    sub = {dx: _x(piston_forces(1.0, dx=dx)) for dx in (1 / 32, 1 / 48, 1 / 64)}
    unsub = _x(piston_forces(1.0, subtract=False))
    p = _order(sub[1 / 32], sub[1 / 48], sub[1 / 64], 1.5, 4 / 3)
    p_used = p if math.isfinite(p) else 1.0
    h1, h2 = (1 / 48) ** p_used, (1 / 64) ** p_used
    ref = (sub[1 / 64] * h1 - sub[1 / 48] * h2) / (h1 - h2)
    e_sub, e_unsub = abs(sub[1 / 32] - ref), abs(unsub - ref)
    report(10, "subtraction benefit on the metal piston, h = a, dx = a/32", [
        ("Richardson reference from dx = a/48, a/64", None,
         f"F = {_fmt(list(sub.values()))}, order {p:.2f} -> F_ref = {ref:.6g}"),
        ("subtracted error >= 2x smaller than unsubtracted", e_unsub >= 2 * e_sub,
         f"subtracted {e_sub:.2e} ({e_sub / abs(ref):.2%}), unsubtracted {e_unsub:.2e} "
         f"({e_unsub / abs(ref):.2%}), ratio {e_unsub / max(e_sub, 1e-300):.1f}"),
    ])
