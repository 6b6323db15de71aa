"""Maximum and minimum modulus on spheres, order of growth, and the
minimum-modulus hypothesis checker.

Sphere extrema are found by sampling a Fibonacci lattice and polishing the
five best samples with a shrinking-step pattern search. The maximum found is
therefore a lower bound for M(r, f) and the minimum an upper bound for
m(r, f); nothing here claims global optimality.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .vecgeom.sphere import fibonacci_sphere, tangent_frame

N_STARTS = 5
START_STEP = 0.2
MOVES_PER_ROUND = 3

_DIAG = 1.0 / math.sqrt(2.0)
_PATTERN = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [_DIAG, _DIAG], [_DIAG, -_DIAG], [-_DIAG, _DIAG], [-_DIAG, -_DIAG]])


def sphere_extremum(f, r: float, n: int = 10_000, refine_steps: int = 20, mode: str = "max"):
    """Best |f| found on the sphere of radius ``r``; returns (value, point)."""
    if not r > 0:
        raise DomainError("radius must be positive")
    if n < 1:
        raise DomainError("need at least one sample")
    sign = 1.0 if mode == "max" else -1.0
    U = fibonacci_sphere(n)
    vals = sign * np.linalg.norm(f(r * U), axis=1)
    order = np.argsort(-vals, kind="stable")[:N_STARTS]
    cur = U[order]
    best = vals[order]
    step = START_STEP
    for _ in range(refine_steps):
        for _ in range(MOVES_PER_ROUND):
            t1, t2 = tangent_frame(cur)
            tang = _PATTERN[:, 0, None, None] * t1[None] + _PATTERN[:, 1, None, None] * t2[None]
            cand = math.cos(step) * cur[None] + math.sin(step) * tang
            cand /= np.linalg.norm(cand, axis=-1, keepdims=True)
            cv = sign * np.linalg.norm(f(r * cand.reshape(-1, 3)), axis=1).reshape(len(_PATTERN), -1)
            k = np.argmax(cv, axis=0)
            gain = cv[k, np.arange(len(cur))]
            better = gain > best
            if not better.any():
                break
            cur = np.where(better[:, None], cand[k, np.arange(len(cur))], cur)
            best = np.where(better, gain, best)
        step /= 2
    i = int(np.argmax(best))
    return float(sign * best[i]), r * cur[i]


def max_modulus(f, r: float, n: int = 10_000, refine_steps: int = 20) -> float:
    return sphere_extremum(f, r, n, refine_steps, "max")[0]


def min_modulus(f, r: float, n: int = 10_000, refine_steps: int = 20) -> float:
    return sphere_extremum(f, r, n, refine_steps, "min")[0]


@dataclass
class GrowthCurve:
    radii: np.ndarray
    Mhat: np.ndarray
    mhat: np.ndarray

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.Mhat = np.asarray(self.Mhat, dtype=float)
        self.mhat = np.asarray(self.mhat, dtype=float)
        if np.any(self.radii <= 0) or np.any(np.diff(self.radii) <= 0):
            raise DomainError("radii must be positive and increasing")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["r", "Mhat", "mhat"])
        for row in zip(self.radii, self.Mhat, self.mhat):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def growth_curve(f, radii, n: int = 10_000, refine_steps: int = 20) -> GrowthCurve:
    radii = np.asarray(radii, dtype=float)
    M = [max_modulus(f, r, n, refine_steps) for r in radii]
    m = [min_modulus(f, r, n, refine_steps) for r in radii]
    return GrowthCurve(radii, M, m)


def order_from_curve(radii, Mhat, dim: int = 3) -> float:
    radii = np.asarray(radii, dtype=float)
    Mhat = np.asarray(Mhat, dtype=float)
    if np.any(Mhat <= math.e):
        raise DomainError("log log M undefined: some M-hat <= e")
    slope = np.polyfit(np.log(radii), np.log(np.log(Mhat)), 1)[0]
    return float((dim - 1) * slope)


def order_estimate(f, radii, n: int = 10_000, refine_steps: int = 20) -> float:
    """(n - 1) times the least-squares slope of log log M-hat against log r."""
    radii = np.asarray(radii, dtype=float)
    if len(radii) < 2 or np.any(np.diff(radii) <= 0):
        raise DomainError("need at least two increasing radii")
    M = np.array([max_modulus(f, r, n, refine_steps) for r in radii])
    return order_from_curve(radii, M)


def order_report(f, radii, n: int = 10_000, refine_steps: int = 20) -> dict:
    radii = np.asarray(radii, dtype=float)
    M = np.array([max_modulus(f, r, n, refine_steps) for r in radii])
    return {"radii": radii.tolist(), "Mhat": M.tolist(), "order": order_from_curve(radii, M)}


@dataclass
class ModulusConditionReport:
    holds_at: list = field(default_factory=list)
    fails_at: list = field(default_factory=list)
    margins: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "holds_at": [[float(r), float(s)] for r, s in self.holds_at],
            "fails_at": [float(r) for r in self.fails_at],
            "margins": {repr(float(k)): float(v) for k, v in self.margins.items()},
        })


def min_modulus_condition(f, alpha: float, delta: float, radii, s_grid: int = 9,
                          n: int = 10_000, refine_steps: int = 20) -> ModulusConditionReport:
    """Test "some s in [r, alpha r] has m(s) >= delta M(r)" at each radius.

    ``margins[r]`` is max over the s-grid of m-hat(s) / (delta M-hat(r)): above 1
    the condition was observed to hold. Because m-hat over-estimates m and
    M-hat under-estimates M, a reported failure is only as conservative as
    that margin is far below 1.
    """
    if not alpha > 1 or not delta > 0:
        raise DomainError("need alpha > 1 and delta > 0")
    rep = ModulusConditionReport()
    for r in radii:
        target = delta * max_modulus(f, r, n, refine_steps)
        best, hit = -math.inf, None
        for s in np.linspace(r, alpha * r, s_grid):
            ratio = min_modulus(f, s, n, refine_steps) / target
            best = max(best, ratio)
            if ratio >= 1 and hit is None:
                hit = float(s)
        rep.margins[float(r)] = best
        if hit is None:
            rep.fails_at.append(float(r))
        else:
            rep.holds_at.append((float(r), hit))
    return rep


def poly_min_modulus_probe(f, m: int, radii, n: int = 10_000, refine_steps: int = 20) -> dict:
    """sup of m-hat(r) / r^m over ``radii`` and its trend over the last three."""
    if m < 1:
        raise DomainError("m must be a positive integer")
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise DomainError("radii must increase")
    ratios = np.array([min_modulus(f, r, n, refine_steps) / r**m for r in radii])
    tail = ratios[-3:]
    d = np.diff(tail)
    tol = 1e-9 * np.max(np.abs(tail))
    if np.all(np.abs(d) <= tol):
        trend = "flat"
    elif np.all(d > 0):
        trend = "increasing"
    elif np.all(d < 0):
        trend = "decreasing"
    else:
        trend = "mixed"
    return {"sup_ratio": float(ratios.max()), "ratios": ratios.tolist(), "trend": trend}
