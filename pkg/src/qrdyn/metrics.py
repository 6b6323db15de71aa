"""Distance-ratio metric j_U, quasihyperbolic path lengths and upper bounds for k_U.

Domains carry an analytic distance to their boundary. k_U itself is an
infimum over paths and is never certified here: a polyline's quasihyperbolic
length is an upper bound, and j_U (which never exceeds k_U) is the lower
bound used as a sanity check.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .vecgeom.sphere import Sector, angular_distance, as_points, sigma, slerp

BOUNDARY_EPS = 1e-14


class DomainDescriptor:
    name = "domain"

    def distance(self, x) -> np.ndarray:
        """Signed-free distance to the boundary, NaN outside the domain."""
        raise NotImplementedError

    def contains(self, x) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class HalfSpace(DomainDescriptor):
    """{x : normal . x > offset}."""

    normal: tuple = (0.0, 0.0, 1.0)
    offset: float = 0.0
    name = "half-space"

    def _n(self):
        n = np.asarray(self.normal, dtype=float)
        return n / np.linalg.norm(n)

    def contains(self, x):
        return as_points(x) @ self._n() > self.offset

    def distance(self, x):
        return as_points(x) @ self._n() - self.offset


@dataclass(frozen=True)
class SectorDomain(DomainDescriptor):
    """The open cone Omega(apex, axis, opening)."""

    sector: Sector
    name = "sector"

    def contains(self, x):
        x = as_points(x)
        v = x - self.sector.apex
        r = np.linalg.norm(v, axis=-1)
        ang = angular_distance(v, self.sector.axis)
        return (r > 0) & (ang < self.sector.opening)

    def distance(self, x):
        # r sin(eta - phi) while the nearest boundary point is on the cone
        # surface, otherwise the apex at distance r
        v = as_points(x) - self.sector.apex
        r = np.linalg.norm(v, axis=-1)
        gap = self.sector.opening - angular_distance(v, self.sector.axis)
        return np.where(gap < math.pi / 2, r * np.sin(gap), r)


def cone_complement(S: Sector) -> SectorDomain:
    """R^3 minus the closed cone over S, itself a cone about -axis."""
    if S.opening >= math.pi:
        raise DomainError("complement of a full-opening sector is empty")
    return SectorDomain(Sector(S.apex, -np.asarray(S.axis), math.pi - S.opening))


def boundary_distance(U: DomainDescriptor, x) -> np.ndarray:
    if not np.all(U.contains(x)):
        raise DomainError("point outside the domain")
    d = U.distance(x)
    return float(d) if np.ndim(d) == 0 else d


def j_metric(U: DomainDescriptor, x, y) -> float:
    """log(1 + |x - y| / min(d(x, dU), d(y, dU)))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = boundary_distance(U, x)
    dy = boundary_distance(U, y)
    return float(np.log1p(np.linalg.norm(x - y) / min(dx, dy)))


class Polyline:
    def __init__(self, vertices):
        self.vertices = as_points(vertices).reshape(-1, 3)
        if len(self.vertices) == 0:
            raise DomainError("empty path")

    def __len__(self):
        return len(self.vertices)


def _density_along(U, a, b, t):
    p = a + np.multiply.outer(t, b - a)
    d = U.distance(p)
    if np.any(~(d > BOUNDARY_EPS)):
        raise DomainError("path touches the domain boundary")
    return 1.0 / d


def _simpson_segment(U, a, b, tol, max_depth=48):
    """Adaptive Simpson for the integral of |b - a| / d over [0, 1].

    An interval is split when the Richardson error estimate exceeds its share
    of ``tol`` or when the density varies by more than 10% across it.
    """
    L = float(np.linalg.norm(b - a))
    if L == 0:
        return 0.0
    f0, fm, f1 = _density_along(U, a, b, np.array([0.0, 0.5, 1.0]))

    def rec(lo, hi, flo, fmid, fhi, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        fl, fr = _density_along(U, a, b, np.array([0.5 * (lo + mid), 0.5 * (mid + hi)]))
        h = hi - lo
        left = h / 12 * (flo + 4 * fl + fmid)
        right = h / 12 * (fmid + 4 * fr + fhi)
        err = left + right - whole
        vals = (flo, fl, fmid, fr, fhi)
        smooth = max(vals) <= 1.1 * min(vals)
        if depth >= max_depth or (abs(err) <= 15 * eps and smooth):
            return left + right + err / 15
        return rec(lo, mid, flo, fl, fmid, left, eps / 2, depth + 1) + rec(
            mid, hi, fmid, fr, fhi, right, eps / 2, depth + 1
        )

    whole = (f0 + 4 * fm + f1) / 6
    return L * rec(0.0, 1.0, f0, fm, f1, whole, tol / L, 0)


def k_path_integral(U: DomainDescriptor, path, tol: float = 1e-6) -> float:
    """Quasihyperbolic length of a polyline: an upper bound for k_U(ends)."""
    path = path if isinstance(path, Polyline) else Polyline(path)
    v = path.vertices
    if not np.all(U.contains(v)):
        raise DomainError("path vertex outside the domain")
    if len(v) < 2:
        return 0.0
    nseg = len(v) - 1
    return float(sum(_simpson_segment(U, v[i], v[i + 1], tol / nseg) for i in range(nseg)))


_GL_T, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_T = 0.5 * (_GL_T + 1.0)
_GL_W = 0.5 * _GL_W


def _segment_costs(U, a, b):
    """Gauss-Legendre quasihyperbolic lengths of segments a[i] -> b[i]."""
    p = a[:, None, :] + _GL_T[None, :, None] * (b - a)[:, None, :]
    d = U.distance(p)
    L = np.linalg.norm(b - a, axis=-1)
    with np.errstate(divide="ignore"):
        val = L * np.sum(_GL_W / np.where(d > 0, d, 0.0), axis=-1)
    return np.where(np.all(d > 0, axis=-1), val, np.inf)


def _initial_path(U, x, y, n):
    t = np.linspace(0.0, 1.0, n + 2)[:, None]
    straight = x + t * (y - x)
    if np.all(U.contains(straight)) and np.isfinite(_segment_costs(U, straight[:-1], straight[1:])).all():
        return straight
    apex = getattr(getattr(U, "sector", None), "apex", np.zeros(3))
    rx, ry = np.linalg.norm(x - apex), np.linalg.norm(y - apex)
    dirs = slerp(sigma(x - apex), sigma(y - apex), t[:, 0])
    radial = apex + (rx ** (1 - t) * ry**t) * dirs
    radial[0], radial[-1] = x, y
    if np.all(U.contains(radial)) and np.isfinite(_segment_costs(U, radial[:-1], radial[1:])).all():
        return radial
    raise DomainError("no admissible starting path between the points")


_MOVES = np.vstack([np.eye(3), -np.eye(3)])


def _descend(U, P, step, min_step, max_sweeps=400):
    """Compass-move coordinate descent on the interior vertices.

    Odd and even vertices are updated in two half-sweeps; vertices of one
    parity share no segment, so each half-sweep is a batch of independent
    single-vertex moves.
    """
    P = P.copy()
    n = len(P) - 2
    for _ in range(max_sweeps):
        improved = False
        for first in (1, 2):
            idx = np.arange(first, n + 1, 2)
            if len(idx) == 0:
                continue
            cand = P[idx][:, None, :] + step * _MOVES[None]
            k6 = len(_MOVES)
            a = np.repeat(P[idx - 1], k6, axis=0)
            b = np.repeat(P[idx + 1], k6, axis=0)
            c = cand.reshape(-1, 3)
            local = _segment_costs(U, a, c) + _segment_costs(U, c, b)
            local = np.where(U.contains(c), local, np.inf).reshape(len(idx), k6)
            now = _segment_costs(U, P[idx - 1], P[idx]) + _segment_costs(U, P[idx], P[idx + 1])
            k = np.argmin(local, axis=1)
            best = local[np.arange(len(idx)), k]
            move = best < now - 1e-15
            if move.any():
                P[idx[move]] = cand[np.flatnonzero(move), k[move]]
                improved = True
        if not improved:
            step /= 2
            if step < min_step:
                break
    return P


def k_upper_bound(U: DomainDescriptor, x, y, n_vertices: int = 16, tol: float = 1e-6,
                  jitters: int = 3, return_path: bool = False):
    """Smallest quasihyperbolic polyline length found between ``x`` and ``y``.

    Coordinate descent on ``n_vertices`` (at most 64) interior vertices,
    started from the straight segment (or a radial arc when the segment
    leaves the domain) and from ``jitters`` seeded perturbations of it. The
    winning path is re-measured with adaptive quadrature.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    boundary_distance(U, x)
    boundary_distance(U, y)
    if np.array_equal(x, y):
        return (0.0, Polyline([x])) if return_path else 0.0
    n = int(min(max(n_vertices, 1), 64))
    P0 = _initial_path(U, x, y, n)
    span = float(np.linalg.norm(y - x))
    scale = min(span, float(min(U.distance(x), U.distance(y))))
    starts = [P0]
    for seed in range(jitters):
        rng = np.random.default_rng(seed)
        Pj = P0.copy()
        Pj[1:-1] += rng.normal(scale=0.05 * scale, size=(n, 3))
        ok = U.contains(Pj)
        Pj[~ok] = P0[~ok]
        starts.append(Pj)
    best, best_cost = None, math.inf
    for P in starts:
        P = _descend(U, P, step=0.25 * scale, min_step=1e-6 * scale)
        c = float(_segment_costs(U, P[:-1], P[1:]).sum())
        if c < best_cost:
            best, best_cost = P, c
    value = k_path_integral(U, best, tol)
    return (value, Polyline(best)) if return_path else value


def sector_k_bound(eta: float, ratio: float) -> float:
    """C(eta) log(ratio) with C = 1 for eta >= pi/2 and 1/sin(eta) below."""
    if not 0 < eta <= math.pi:
        raise DomainError("eta must lie in (0, pi]")
    if ratio < 1:
        raise DomainError("ratio must be at least 1")
    C = 1.0 if eta >= math.pi / 2 else 1.0 / math.sin(eta)
    return C * math.log(ratio)


def report_csv(rows) -> str:
    """CSV with columns domain, x, y, j, k_upper, sector_bound."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["domain", "x", "y", "j", "k_upper", "sector_bound"])
    for r in rows:
        sb = r.get("sector_bound")
        w.writerow([
            r["domain"],
            " ".join(repr(float(c)) for c in r["x"]),
            " ".join(repr(float(c)) for c in r["y"]),
            repr(float(r["j"])),
            repr(float(r["k_upper"])),
            "" if sb is None else repr(float(sb)),
        ])
    return buf.getvalue()
