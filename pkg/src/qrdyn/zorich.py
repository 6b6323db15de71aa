"""The Zorich map Z: R^3 -> R^3 minus the origin.

On the square cylinder [-1,1]^2 x R the map is ``exp(x3) * h(x1, x2)`` where
``h`` lifts the square onto the upper faces of the pyramid with apex
(0,0,1); elsewhere it is continued by reflecting in the cylinder faces
(domain) and in the plane x3 = 0 (range). Folding a coordinate into
[-1,1] records the reflection parity, so the third output component picks
up the sign (-1)^(p1 + p2).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, MapOverflowError
from .vecgeom.mesh import TriMesh
from .vecgeom.sphere import as_points

EXP_LIMIT = 700.0


class FoldResult(NamedTuple):
    folded: float
    parity: int


def fold_array(t):
    """Vectorized fold: (folded values in [-1, 1], parity 0/1)."""
    t = np.asarray(t, dtype=float)
    r = np.mod(t, 4.0)
    r = np.where(r >= 3.0, r - 4.0, r)
    # r == -1 means t = 3 mod 4, a fold line; parity is taken from the left
    parity = ((r > 1.0) | (r == -1.0)).astype(np.int8)
    folded = np.where(r > 1.0, 2.0 - r, r)
    return folded, parity


def fold(t: float) -> FoldResult:
    if not math.isfinite(t):
        raise DomainError("fold needs a finite argument")
    u, p = fold_array(t)
    return FoldResult(float(u), int(p))


def pyramid_h(u1, u2) -> np.ndarray:
    """Square [-1,1]^2 onto the upper pyramid faces: (u1, u2, 1 - max(|u1|,|u2|))."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if np.any(np.abs(u1) > 1) or np.any(np.abs(u2) > 1):
        raise DomainError("pyramid_h is defined on [-1,1]^2 only")
    return np.stack(np.broadcast_arrays(u1, u2, 1.0 - np.maximum(np.abs(u1), np.abs(u2))), axis=-1)


def _check_range(x3, x, strict):
    over = x3 > EXP_LIMIT
    if strict and np.any(over):
        bad = np.asarray(x).reshape(-1, 3)[np.asarray(over).reshape(-1)][0]
        raise MapOverflowError(f"exp overflow guard: x3 = {bad[2]:.6g} > {EXP_LIMIT}", point=bad)
    return over


def zorich_eval(x, strict: bool = True) -> np.ndarray:
    """Evaluate Z at points ``x`` (shape ``(3,)`` or ``(N, 3)``).

    With ``strict=False`` points above the overflow guard give ``inf``
    instead of raising, which the orbit code uses to flag overflow.
    """
    x = as_points(x)
    u1, p1 = fold_array(x[..., 0])
    u2, p2 = fold_array(x[..., 1])
    over = _check_range(x[..., 2], x, strict)
    sign = 1.0 - 2.0 * ((p1 + p2) % 2)
    with np.errstate(over="ignore", invalid="ignore"):
        e = np.exp(np.where(over, 0.0, x[..., 2]))
        out = np.stack([e * u1, e * u2, e * sign * (1.0 - np.maximum(np.abs(u1), np.abs(u2)))], axis=-1)
    if np.any(over):
        out = np.where(over[..., None], np.inf, out)
    return out


def zorich_inverse(y) -> np.ndarray:
    """Branch of Z^-1 onto the beam [-1,3] x [-1,1] x R.

    {y3 >= 0} goes to the square cylinder [-1,1]^2 x R, {y3 < 0} to
    [1,3] x [-1,1] x R.
    """
    y = as_points(y)
    mx = np.maximum(np.abs(y[..., 0]), np.abs(y[..., 1]))
    if np.any((mx == 0) & (y[..., 2] == 0)):
        raise DomainError("Z omits the origin")
    upper = y[..., 2] >= 0
    s = np.abs(y[..., 2]) + mx
    a = y[..., 0] / s
    x1 = np.where(upper, a, 2.0 - a)
    return np.stack([x1, y[..., 1] / s, np.log(s)], axis=-1)


@dataclass(frozen=True)
class ModulusConstants:
    C1: float
    C2: float
    argmin: tuple
    argmax: tuple

    def to_json(self) -> str:
        return json.dumps({"C1": self.C1, "C2": self.C2, "argmin": list(self.argmin), "argmax": list(self.argmax)})


def _hnorm(u1, u2):
    return np.sqrt(u1 * u1 + u2 * u2 + (1.0 - np.maximum(np.abs(u1), np.abs(u2))) ** 2)


def _refine(center, step, sign, tol):
    c = np.array(center, dtype=float)
    while step > tol:
        g = np.linspace(-2 * step, 2 * step, 41)
        u1 = np.clip(c[0] + g[:, None], -1, 1)
        u2 = np.clip(c[1] + g[None, :], -1, 1)
        vals = sign * _hnorm(u1, u2)
        k = np.unravel_index(np.argmin(vals), vals.shape)
        c = np.array([u1[k[0], 0], u2[0, k[1]]])
        step = g[1] - g[0]
    return c, float(_hnorm(c[0], c[1]))


def modulus_constants(n: int = 2001, tol: float = 1e-8) -> ModulusConstants:
    """Extremes of |h| over the square, i.e. C1 e^x3 <= |Z(x)| <= C2 e^x3.

    A uniform ``n x n`` grid followed by repeated local grid refinement
    around the best cell until the spacing drops below ``tol``.
    """
    g = np.linspace(-1.0, 1.0, n)
    vals = _hnorm(g[:, None], g[None, :])
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    amin, c1 = _refine((g[i], g[j]), g[1] - g[0], 1.0, tol)
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    amax, c2 = _refine((g[i], g[j]), g[1] - g[0], -1.0, tol)
    return ModulusConstants(c1, c2, tuple(float(v) for v in amin), tuple(float(v) for v in amax))


class SquareIndex(NamedTuple):
    """Omega_{m,n} = [2m-1, 2m+1] x [2n-1, 2n+1]."""

    m: int
    n: int

    def corners(self) -> np.ndarray:
        """w1..w4: top-left, then anticlockwise."""
        m, n = self.m, self.n
        return np.array(
            [[2 * m - 1, 2 * n + 1], [2 * m - 1, 2 * n - 1], [2 * m + 1, 2 * n - 1], [2 * m + 1, 2 * n + 1]],
            dtype=float,
        )

    def center(self) -> np.ndarray:
        return np.array([2.0 * self.m, 2.0 * self.n])


SLICE_TRIANGLES = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]])


def slice_mesh(f, sq: SquareIndex, s: float) -> TriMesh:
    """Image of the slice Omega_{m,n} x {s} under a map that is PL there.

    The four pieces of linearity are the triangles joining each square edge
    to the center, so the image is exactly the mesh on the five images
    [center, w1, w2, w3, w4].
    """
    if not f.is_pl_on_slice(s):
        raise DomainError(f"map is not piecewise linear on the slice x3 = {s}")
    sq = SquareIndex(*sq)
    pts2 = np.vstack([sq.center(), sq.corners()])
    pts = np.column_stack([pts2, np.full(5, float(s))])
    return TriMesh(f(pts), SLICE_TRIANGLES)


def translate_T1(x):
    return as_points(x) + np.array([4.0, 0.0, 0.0])


def translate_T2(x):
    return as_points(x) + np.array([0.0, 4.0, 0.0])


def half_turn(x):
    """Rotation by pi about the line {(1, 1, t)}."""
    x = as_points(x)
    return np.stack([2.0 - x[..., 0], 2.0 - x[..., 1], x[..., 2]], axis=-1)


GENERATORS = {"T1": translate_T1, "T2": translate_T2, "Rpi": half_turn}


def automorphy_group_apply(g: str, x) -> np.ndarray:
    try:
        return GENERATORS[g](x)
    except KeyError:
        raise DomainError(f"unknown generator {g!r}; expected one of {sorted(GENERATORS)}") from None
