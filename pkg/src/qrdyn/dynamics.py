"""Orbits, fast-escape classification and empirical Julia limiting directions.

The Julia set is approximated by the boundary between points that escape at
the iterated-maximum-modulus rate and points that do not. On a sphere of
directions this boundary is located on Delaunay edges whose endpoints are
classified differently, then refined by bisection along the geodesic.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import ConvexHull

from .errors import DomainError, MapOverflowError
from .growth import max_modulus
from .maps import NSMap, Ramp, ualpha_contains
from .vecgeom.mesh import TriMesh, ray_mesh_hits, voxel_separation
from .vecgeom.sphere import DirectionSet, angular_distance, as_points, fibonacci_sphere, slerp
from .zorich import SquareIndex, modulus_constants, slice_mesh

K_MAX = 24
BAILOUT = 1e300
LEVEL_CAP = 1e300
BISECT_STEPS = 20


@dataclass
class OrbitRecord:
    start: np.ndarray
    points: list
    outcome: str
    k: int | None = None


def orbit(f, x, k_max: int = K_MAX, bailout: float = BAILOUT) -> OrbitRecord:
    """Iterate until |f^k(x)| > bailout, overflow, or ``k_max`` steps."""
    if k_max < 1 or not bailout > 0:
        raise DomainError("need k_max >= 1 and bailout > 0")
    x = np.asarray(x, dtype=float)
    pts = [x.copy()]
    if np.linalg.norm(x) > bailout:
        return OrbitRecord(x, pts, "escaped", 0)
    for k in range(1, k_max + 1):
        x = f(x, strict=False)
        if not np.all(np.isfinite(x)):
            return OrbitRecord(pts[0], pts, "overflow", k)
        pts.append(x.copy())
        if np.linalg.norm(x) > bailout:
            return OrbitRecord(pts[0], pts, "escaped", k)
    return OrbitRecord(pts[0], pts, "bounded")


@dataclass
class ThresholdSequence:
    R: float
    levels: list
    saturated: bool = False

    def to_dict(self):
        return {"R": self.R, "levels": list(self.levels), "saturated": self.saturated}


def threshold_sequence(f, R: float, k: int, n: int = 4000, refine_steps: int = 20,
                       cap: float = LEVEL_CAP) -> ThresholdSequence:
    """R_0 = R, R_{j+1} = M-hat(R_j); stops early once a level reaches ``cap``.

    A level whose evaluation overflows, or exceeds ``cap``, is recorded as
    ``cap`` and ends the sequence (saturation).
    """
    if not R > 0:
        raise DomainError("R must be positive")
    levels = [float(R)]
    saturated = False
    for _ in range(k):
        try:
            nxt = max_modulus(f, levels[-1], n, refine_steps)
        except MapOverflowError:
            nxt = math.inf
        if nxt >= cap:
            levels.append(cap)
            saturated = True
            break
        if not nxt > levels[-1]:
            raise DomainError(f"threshold levels not increasing: {nxt!r} after {levels[-1]!r}")
        levels.append(float(nxt))
    return ThresholdSequence(float(R), levels, saturated)


def classify_fast_escape(f, x, ts: ThresholdSequence, k_max: int = K_MAX):
    """True where |f^k(x)| >= ts.levels[k] for every k up to min(k_max, len - 1).

    Overflow counts as escape. Accepts one point or an ``(N, 3)`` array.
    """
    x = as_points(x)
    single = x.ndim == 1
    cur = x.reshape(-1, 3).copy()
    kk = min(k_max, len(ts.levels) - 1)
    esc = np.ones(len(cur), dtype=bool)
    over = np.zeros(len(cur), dtype=bool)
    for k in range(kk + 1):
        if k > 0:
            act = esc & ~over
            if not act.any():
                break
            cur[act] = f(cur[act], strict=False)
            over |= ~np.all(np.isfinite(cur), axis=1)
        with np.errstate(over="ignore", invalid="ignore"):
            big = np.linalg.norm(np.where(over[:, None], 0.0, cur), axis=1) >= ts.levels[k]
        esc &= over | big
    return bool(esc[0]) if single else esc


def _classify_chunked(f, pts, ts, k_max, workers):
    if workers <= 1 or len(pts) < 2048:
        return classify_fast_escape(f, pts, ts, k_max)
    chunks = np.array_split(pts, workers * 4)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(lambda c: classify_fast_escape(f, c, ts, k_max), chunks))
    return np.concatenate(parts)


@lru_cache(maxsize=8)
def delaunay_edges(n: int) -> np.ndarray:
    """Unique edges of the spherical Delaunay triangulation of fibonacci_sphere(n)."""
    U = fibonacci_sphere(n)
    hull = ConvexHull(U)
    s = hull.simplices
    e = np.vstack([s[:, [0, 1]], s[:, [1, 2]], s[:, [2, 0]]])
    e = np.unique(np.sort(e, axis=1), axis=0)
    e.setflags(write=False)
    return e


def julia_proxy_shell(f, r: float, grid_n: int, ts: ThresholdSequence, k_max: int = K_MAX,
                      bisect_steps: int = BISECT_STEPS, workers: int = 1) -> DirectionSet:
    """Escape/non-escape boundary directions on the sphere of radius ``r``.

    Returns an empty set (status "empty") when every lattice direction gets
    the same classification.
    """
    if not r > 0 or grid_n < 1000:
        raise DomainError("need r > 0 and grid_n >= 1000")
    U = fibonacci_sphere(grid_n)
    cls = _classify_chunked(f, r * U, ts, k_max, workers)
    e = delaunay_edges(grid_n)
    e = e[cls[e[:, 0]] != cls[e[:, 1]]]
    if len(e) == 0:
        return DirectionSet(status="empty")
    first_esc = cls[e[:, 0]]
    p = np.where(first_esc[:, None], U[e[:, 0]], U[e[:, 1]])
    q = np.where(first_esc[:, None], U[e[:, 1]], U[e[:, 0]])
    for _ in range(bisect_steps):
        mid = slerp(p, q, 0.5)
        c = _classify_chunked(f, r * mid, ts, k_max, workers)
        p = np.where(c[:, None], mid, p)
        q = np.where(c[:, None], q, mid)
    out = slerp(p, q, 0.5)
    return DirectionSet.from_samples(out, r, angular_distance(p, q))


def limiting_directions(f, shells, grid_n: int, ts: ThresholdSequence, k_max: int = K_MAX,
                        bisect_steps: int = BISECT_STEPS, workers: int = 1) -> DirectionSet:
    """Julia-proxy directions collected on the outer half of the given shells.

    The largest ceil(len/2) shells are used, since limiting directions are a
    property at infinity. No proxy points at all gives status "empty".
    """
    shells = sorted(float(s) for s in shells)
    if len(shells) < 3 or len(set(shells)) != len(shells):
        raise DomainError("need at least three distinct shells")
    use = shells[len(shells) - math.ceil(len(shells) / 2):]
    acc = DirectionSet(margins=np.zeros(0))
    for r in use:
        part = julia_proxy_shell(f, r, grid_n, ts, k_max, bisect_steps, workers)
        if len(part):
            acc = acc.union(part)
    if len(acc) == 0:
        return DirectionSet(status="empty")
    acc.status = "ok"
    return acc


@dataclass
class CoveringReport:
    n: int
    m: int
    s: float
    modulus_ok: bool
    rays_ok: bool
    separation_ok: bool
    min_hits: int
    margin_low: float
    margin_high: float
    translate_error: float
    mesh: TriMesh = field(repr=False, default=None)

    @property
    def passed(self) -> bool:
        return self.modulus_ok and self.rays_ok and self.separation_ok

    def __bool__(self):
        return self.passed

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n, "m": self.m, "s": self.s, "passed": self.passed,
            "modulus_ok": self.modulus_ok, "rays_ok": self.rays_ok,
            "separation_ok": self.separation_ok, "min_hits": self.min_hits,
            "margin_low": self.margin_low, "margin_high": self.margin_high,
            "translate_error": self.translate_error,
        })


@lru_cache(maxsize=1)
def _constants():
    c = modulus_constants()
    return c.C1, c.C2


def covering_pyramids(n_row: int, m_center: int, s: float, ramp: Ramp = Ramp()):
    F = NSMap(ramp)
    return [slice_mesh(F, SquareIndex(i, n_row), s) for i in (m_center - 1, m_center, m_center + 1)]


def check_covering_preconditions(n_row, m_center, s, ramp, alpha):
    if s < ramp.T:
        raise DomainError(f"slice height s = {s} is below the ramp height T = {ramp.T}")
    for i in (m_center - 1, m_center, m_center + 1):
        for c in SquareIndex(i, n_row).corners():
            p = np.array([c[0], c[1], s])
            if not ualpha_contains(p, alpha):
                raise DomainError(f"corner {p.tolist()} of square ({i}, {n_row}) is not in U_{alpha}")


def covering_verification(n_row: int, m_center: int, s: float, ramp: Ramp = Ramp(), alpha: float = 4.0,
                          n_rays: int = 1000, res: int = 128) -> CoveringReport:
    """Check that the F-images of three neighbouring squares at height s
    form a surface separating 0 from infinity inside the expected ring.

    (a) every vertex satisfies C1 e^s / 2 < |v| < 2 C2 e^s, (b) each of
    ``n_rays`` lattice rays from the origin crosses the surface, (c) a
    ``res``^3 flood fill from the origin cannot leave the surface's ball.
    """
    check_covering_preconditions(n_row, m_center, s, ramp, alpha)
    P = covering_pyramids(n_row, m_center, s, ramp)
    mesh = TriMesh.merge(P)
    C1, C2 = _constants()
    rad = np.linalg.norm(mesh.vertices, axis=1)
    lo, hi = C1 * math.exp(s) / 2, 2 * C2 * math.exp(s)
    margin_low = float(rad.min() / lo - 1)
    margin_high = float(1 - rad.max() / hi)
    hits = ray_mesh_hits(np.zeros(3), fibonacci_sphere(n_rays), mesh)
    sep = voxel_separation(mesh, float(rad.max()) * 1.02, res)
    diff = P[2].vertices - P[0].vertices - np.array([4.0, 0.0, 0.0])
    terr = float(np.max(np.abs(diff)) / np.max(np.abs(P[0].vertices)))
    return CoveringReport(
        n_row, m_center, float(s),
        modulus_ok=bool(margin_low > 0 and margin_high > 0),
        rays_ok=bool(hits.min() >= 1),
        separation_ok=bool(sep),
        min_hits=int(hits.min()),
        margin_low=margin_low,
        margin_high=margin_high,
        translate_error=terr,
        mesh=mesh,
    )


def covering_configurations(count: int = 20, seed: int = 0, s_range=(10.0, 20.0), alpha: float = 4.0,
                            ramp: Ramp = Ramp()):
    """Seeded (n, m, s) triples whose three squares lie in U_alpha."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        s = float(rng.uniform(*s_range))
        lim = int(s * s / 2)
        m = int(rng.integers(-lim, lim + 1))
        n = int(rng.integers(-lim, lim + 1))
        try:
            check_covering_preconditions(n, m, s, ramp, alpha)
        except DomainError:
            continue
        out.append((n, m, s))
    return out
