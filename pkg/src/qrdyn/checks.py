"""Verification suites behind ``qrdyn verify``.

Each check returns a dict ``{"check", "passed", "value", "tolerance"}``;
suites are lists of such dicts.
"""
from __future__ import annotations

import math

import numpy as np

from . import dynamics, growth, metrics, zorich
from .maps import GluedMap, NSMap, Ramp, ScalingMap, ZorichMap, ualpha_contains
from .vecgeom.sphere import Cap, E1, E3, Sector, distance_to_caps, hausdorff_sphere, upper_hemisphere


def _result(name, passed, value=None, tolerance=None, **extra):
    d = {"check": name, "passed": bool(passed), "value": value, "tolerance": tolerance}
    d.update(extra)
    return d


def random_points(rng, n, lo=-20.0, hi=20.0, zlo=-10.0, zhi=10.0):
    return np.column_stack([rng.uniform(lo, hi, n), rng.uniform(lo, hi, n), rng.uniform(zlo, zhi, n)])


def ualpha_points(rng, n, alpha=4.0, smax=40.0):
    s = rng.uniform(alpha, smax, n)
    rho = s * s * np.sqrt(rng.uniform(0, 1, n)) * (1 - 1e-9)
    rho = np.minimum(rho, (s - 1e-9) ** 2)
    t = rng.uniform(0, 2 * np.pi, n)
    x = np.column_stack([rho * np.cos(t), rho * np.sin(t), s])
    return x[ualpha_contains(x, alpha)]


def zorich_suite(seed=0, n=10_000):
    rng = np.random.default_rng(seed)
    out = []
    c = zorich.modulus_constants()
    err = max(abs(c.C1 - 1 / math.sqrt(2)), abs(c.C2 - math.sqrt(2)))
    out.append(_result("modulus_constants", err <= 1e-6, err, 1e-6))
    x = random_points(rng, n)
    zx = zorich.zorich_eval(x)
    scale = np.linalg.norm(zx, axis=1)
    for g in zorich.GENERATORS:
        e = np.max(np.linalg.norm(zorich.zorich_eval(zorich.automorphy_group_apply(g, x)) - zx, axis=1) / scale)
        out.append(_result(f"automorphy_{g}", e <= 1e-12, float(e), 1e-12))
    y = random_points(rng, n, zlo=-20, zhi=20)
    e = np.max(np.linalg.norm(zorich.zorich_eval(zorich.zorich_inverse(y)) - y, axis=1) / np.linalg.norm(y, axis=1))
    out.append(_result("inverse_round_trip", e <= 1e-9, float(e), 1e-9))
    r = scale / np.exp(x[:, 2])
    ok = bool(np.all(r >= c.C1 * (1 - 1e-12)) and np.all(r <= c.C2 * (1 + 1e-12)))
    out.append(_result("modulus_bounds", ok, [float(r.min()), float(r.max())]))
    sgn_ok = True
    for m in range(-2, 3):
        for k in range(-2, 3):
            b = np.column_stack([rng.uniform(2 * m - 1, 2 * m + 1, 500), rng.uniform(2 * k - 1, 2 * k + 1, 500), rng.uniform(-10, 10, 500)])
            z3 = zorich.zorich_eval(b)[:, 2]
            sgn_ok &= bool(np.all(z3 >= 0) if (m + k) % 2 == 0 else np.all(z3 <= 0))
    out.append(_result("beam_half_spaces", sgn_ok))
    return out


def metrics_suite(seed=0):
    out = []
    H = metrics.HalfSpace((0, 0, 1), 0.0)
    k = metrics.k_upper_bound(H, [0, 0, 1], [0, 0, math.e**2])
    out.append(_result("k_half_space", 2 - 1e-3 <= k <= 2 + 1e-2, k, [2 - 1e-3, 2 + 1e-2]))
    for eta in (math.pi / 6, math.pi / 4, math.pi / 2):
        U = metrics.SectorDomain(Sector(np.zeros(3), E3, eta))
        val = metrics.k_path_integral(U, [[0, 0, 1], [0, 0, math.e]], tol=1e-10)
        ref = metrics.sector_k_bound(eta, math.e)
        rel = abs(val - ref) / ref
        out.append(_result(f"sector_axis_eta={eta:.6f}", rel <= 1e-6, rel, 1e-6))
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(10):
        x = np.array([rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0.2, 4)])
        y = np.array([rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0.2, 4)])
        worst = min(worst, metrics.k_upper_bound(H, x, y, n_vertices=8, jitters=1) - metrics.j_metric(H, x, y))
    out.append(_result("k_dominates_j", worst >= -1e-9, worst, -1e-9))
    return out


def covering_suite(seed=0, count=20, res=128):
    out = []
    for n, m, s in dynamics.covering_configurations(count, seed):
        rep = dynamics.covering_verification(n, m, s, res=res)
        out.append(_result(f"covering_n={n}_m={m}_s={s:.4f}", rep.passed and rep.translate_error <= 1e-9,
                           {"min_hits": rep.min_hits, "margin_low": rep.margin_low,
                            "margin_high": rep.margin_high, "translate_error": rep.translate_error}))
    return out


def growth_suite(n=10_000):
    out = []
    radii = np.arange(20, 201, 20, dtype=float)
    for name, f in (("F", NSMap()), ("Z", ZorichMap())):
        mu = growth.order_estimate(f, radii, n)
        out.append(_result(f"order_{name}", 1.8 <= mu <= 2.2, mu, [1.8, 2.2]))
    for name, f, expect_fail in (("Z", ZorichMap(), True), ("F", NSMap(), True), ("2id", ScalingMap(2.0), False)):
        rep = growth.min_modulus_condition(f, 2.0, 1e-3, [5.0, 10.0, 20.0], n=n)
        for r in (5.0, 10.0, 20.0):
            failed = r in rep.fails_at
            out.append(_result(f"min_modulus_condition_{name}_r={r:g}", failed == expect_fail,
                               rep.margins[r], "fails" if expect_fail else "holds"))
    return out


def directions_suite(grid_n=20_000, workers=1, R=10.0):
    out = []
    F = NSMap(Ramp(2.0))
    ts = dynamics.threshold_sequence(F, R, 6)
    D = dynamics.limiting_directions(F, [50, 100, 200], grid_n, ts, workers=workers)
    if len(D) == 0:
        out.append(_result("hemisphere", False, "empty"))
    else:
        h = hausdorff_sphere(D, upper_hemisphere())
        below = float(max(0.0, -np.min(np.arcsin(np.clip(D.samples[:, 2], -1, 1)))))
        out.append(_result("hemisphere_hausdorff", h <= 0.15, h, 0.15))
        out.append(_result("hemisphere_below_equator", below <= 1e-3, below, 1e-3))
    caps = [Cap(E1, math.pi / 5), Cap(-E3, math.pi / 7)]
    fE = GluedMap.from_caps(caps, Ramp(2.0))
    ts = dynamics.threshold_sequence(fE, R, 6)
    D = dynamics.limiting_directions(fE, [50, 100, 200], grid_n, ts, workers=workers)
    if len(D) == 0:
        out.append(_result("glued", False, "empty"))
    else:
        h = hausdorff_sphere(D, caps)
        far = float(np.max(distance_to_caps(D.samples, caps)))
        out.append(_result("glued_hausdorff", h <= 0.15, h, 0.15))
        out.append(_result("glued_inside_E", far <= 1e-3, far, 1e-3))
    return out


SUITES = {
    "zorich": zorich_suite,
    "metrics": metrics_suite,
    "covering": covering_suite,
    "growth": growth_suite,
    "directions": directions_suite,
}
