"""Directions, the angular metric on S^2, caps, sectors and sphere sampling.

Points are plain float arrays of shape ``(3,)`` or ``(N, 3)``; every function
here broadcasts over leading axes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from ..errors import DomainError, EmptyEstimateError

UNIT_TOL = 1e-12
DUPLICATE_TOL = 1e-9

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def as_points(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.shape[-1] != 3:
        raise DomainError(f"expected points with 3 coordinates, got shape {a.shape}")
    return a


def norm(x) -> np.ndarray:
    return np.linalg.norm(as_points(x), axis=-1)


def sigma(x) -> np.ndarray:
    """Radial projection x -> x/|x| onto the unit sphere."""
    x = as_points(x)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0.0):
        raise DomainError("sigma is undefined at the origin")
    return x / r[..., None]


def as_direction(u) -> np.ndarray:
    u = as_points(u)
    if np.any(np.abs(np.linalg.norm(u, axis=-1) - 1.0) > UNIT_TOL):
        raise DomainError("direction is not a unit vector")
    return u


def angular_distance(p, q) -> np.ndarray:
    """Angle in [0, pi] between unit vectors ``p`` and ``q``.

    Computed as ``atan2(|p x q|, p.q)``, which agrees with the clamped
    ``acos(p.q)`` but keeps full precision near 0 and pi.
    """
    p = as_points(p)
    q = as_points(q)
    c = np.linalg.norm(np.cross(p, q), axis=-1)
    d = np.sum(p * q, axis=-1)
    return np.arctan2(c, d)


def chord_to_angle(chord):
    return 2.0 * np.arcsin(np.clip(np.asarray(chord) / 2.0, 0.0, 1.0))


def angle_to_chord(angle):
    return 2.0 * np.sin(np.asarray(angle) / 2.0)


@dataclass(frozen=True)
class Cap:
    """Closed spherical cap of directions within ``half_angle`` of ``center``."""

    center: np.ndarray
    half_angle: float

    def __post_init__(self):
        c = np.array(self.center, dtype=float)
        n = np.linalg.norm(c)
        if n == 0:
            raise DomainError("cap center must be nonzero")
        if abs(n - 1.0) > UNIT_TOL:
            c = c / n
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if not 0.0 < self.half_angle < math.pi:
            raise DomainError("cap half-angle must lie in (0, pi)")

    def distance(self, u) -> np.ndarray:
        """Angular distance from directions ``u`` to the closed cap."""
        return np.maximum(0.0, angular_distance(u, self.center) - self.half_angle)

    def contains(self, u, tol: float = 0.0) -> np.ndarray:
        return angular_distance(u, self.center) <= self.half_angle + tol

    def boundary(self, n: int) -> np.ndarray:
        """``n`` equally spaced directions on the cap's boundary circle."""
        R = rotation_to_pole(self.center)
        t = 2 * np.pi * np.arange(n) / n
        s = math.sin(self.half_angle)
        ring = np.column_stack([s * np.cos(t), s * np.sin(t), np.full(n, math.cos(self.half_angle))])
        return ring @ R

    def to_dict(self):
        return {"center": [float(v) for v in self.center], "half_angle": float(self.half_angle)}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["center"], dtype=float), float(d["half_angle"]))


def upper_hemisphere() -> Cap:
    """The closed hemisphere {x3 >= 0} as a cap descriptor.

    ``Cap`` requires ``half_angle < pi``; pi/2 is fine.
    """
    return Cap(E3, math.pi / 2)


@dataclass(frozen=True)
class Sector:
    """Open cone {x : d(sigma(x - apex), axis) < opening}."""

    apex: np.ndarray
    axis: np.ndarray
    opening: float

    def __post_init__(self):
        a = np.array(self.apex, dtype=float)
        a.setflags(write=False)
        object.__setattr__(self, "apex", a)
        ax = np.array(self.axis, dtype=float)
        ax = ax / np.linalg.norm(ax)
        ax.setflags(write=False)
        object.__setattr__(self, "axis", ax)
        if not 0.0 < self.opening <= math.pi:
            raise DomainError("sector opening must lie in (0, pi]")

    def angle(self, x) -> np.ndarray:
        return angular_distance(sigma(as_points(x) - self.apex), self.axis)


def sector_contains(S: Sector, x) -> np.ndarray:
    return S.angle(x) < S.opening


def rotation_to_pole(c) -> np.ndarray:
    """Proper rotation R with R @ c = e3.

    Rotates about c x e3; for c = -e3 uses the half-turn about e1.
    """
    c = np.asarray(c, dtype=float)
    c = c / np.linalg.norm(c)
    axis = np.cross(c, E3)
    s = np.linalg.norm(axis)
    cosang = float(c @ E3)
    if s < 1e-15:
        if cosang > 0:
            return np.eye(3)
        return np.diag([1.0, -1.0, -1.0])
    k = axis / s
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + s * K + (1 - cosang) * (K @ K)


def tangent_frame(u) -> tuple:
    """Two unit vectors spanning the tangent plane at each direction in ``u``."""
    u = as_points(u)
    helper = np.where(np.abs(u[..., 2:3]) < 0.9, E3, E1)
    t1 = np.cross(u, helper)
    t1 /= np.linalg.norm(t1, axis=-1, keepdims=True)
    t2 = np.cross(u, t1)
    return t1, t2


def slerp(p, q, t) -> np.ndarray:
    """Geodesic interpolation between directions; ``t`` broadcasts."""
    p = as_points(p)
    q = as_points(q)
    t = np.asarray(t, dtype=float)[..., None]
    omega = angular_distance(p, q)[..., None]
    so = np.sin(omega)
    small = so < 1e-12
    safe = np.where(small, 1.0, so)
    a = np.where(small, 1.0 - t, np.sin((1.0 - t) * omega) / safe)
    b = np.where(small, t, np.sin(t * omega) / safe)
    out = a * p + b * q
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic near-uniform lattice of ``n`` unit vectors."""
    if n < 1:
        raise DomainError("need at least one sample")
    i = np.arange(n, dtype=float) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = math.pi * (3.0 - math.sqrt(5.0)) * np.arange(n)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def lattice_pitch(n: int) -> float:
    """Typical angular spacing of an ``n``-point equal-area lattice."""
    return math.sqrt(4 * math.pi / n)


@dataclass
class DirectionSet:
    """Finite sample of directions with the shell radius each was found at.

    ``margins`` is optional per-sample bookkeeping (the angular width of the
    final bisection bracket for Julia-proxy samples).
    """

    samples: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    radii: np.ndarray = field(default_factory=lambda: np.zeros(0))
    margins: np.ndarray | None = None
    status: str = "ok"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float).reshape(-1, 3)
        self.radii = np.asarray(self.radii, dtype=float).reshape(-1)
        if len(self.radii) != len(self.samples):
            raise ValueError("one shell radius per sample is required")
        if self.margins is not None:
            self.margins = np.asarray(self.margins, dtype=float).reshape(-1)
        if len(self.samples):
            as_direction(self.samples)
        elif self.status == "ok":
            self.status = "empty"

    def __len__(self):
        return len(self.samples)

    @property
    def shell_radii(self) -> np.ndarray:
        return np.unique(self.radii)

    @classmethod
    def from_samples(cls, samples, radii, margins=None, tol: float = DUPLICATE_TOL):
        """Build a set, dropping samples within ``tol`` radians of an earlier one."""
        samples = np.asarray(samples, dtype=float).reshape(-1, 3)
        radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(samples),))
        if len(samples) == 0:
            return cls(samples, radii, None if margins is None else np.zeros(0))
        keep = np.ones(len(samples), dtype=bool)
        pairs = cKDTree(samples).query_pairs(float(angle_to_chord(tol)), output_type="ndarray")
        if len(pairs):
            pairs = np.sort(pairs, axis=1)
            pairs = pairs[np.lexsort((pairs[:, 0], pairs[:, 1]))]
            for i, j in pairs:
                if keep[i]:
                    keep[j] = False
        m = None if margins is None else np.asarray(margins, dtype=float)[keep]
        return cls(samples[keep], np.array(radii)[keep], m)

    def union(self, other: "DirectionSet") -> "DirectionSet":
        m = None
        if self.margins is not None and other.margins is not None:
            m = np.concatenate([self.margins, other.margins])
        return DirectionSet.from_samples(
            np.vstack([self.samples, other.samples]),
            np.concatenate([self.radii, other.radii]),
            m,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        header = ["ux", "uy", "uz", "shell_radius"]
        if self.margins is not None:
            header.append("margin")
        w.writerow(header)
        for k, (u, r) in enumerate(zip(self.samples, self.radii)):
            row = [repr(float(u[0])), repr(float(u[1])), repr(float(u[2])), repr(float(r))]
            if self.margins is not None:
                row.append(repr(float(self.margins[k])))
            w.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DirectionSet":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            return cls()
        s = np.array([[float(r["ux"]), float(r["uy"]), float(r["uz"])] for r in rows])
        rad = np.array([float(r["shell_radius"]) for r in rows])
        m = np.array([float(r["margin"]) for r in rows]) if "margin" in rows[0] else None
        return cls(s, rad, m)

    def to_json(self) -> str:
        d = {
            "status": self.status,
            "shell_radii": self.shell_radii.tolist(),
            "samples": self.samples.tolist(),
            "radii": self.radii.tolist(),
        }
        if self.margins is not None:
            d["margins"] = self.margins.tolist()
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "DirectionSet":
        d = json.loads(text)
        return cls(np.array(d["samples"], dtype=float).reshape(-1, 3), d["radii"], d.get("margins"), d["status"])


SetDescriptor = Union[Cap, Sequence[Cap], DirectionSet, np.ndarray]


def _caps_of(B) -> list | None:
    if isinstance(B, Cap):
        return [B]
    if isinstance(B, (list, tuple)) and B and all(isinstance(c, Cap) for c in B):
        return list(B)
    return None


def _points_of(B) -> np.ndarray:
    if isinstance(B, DirectionSet):
        return B.samples
    return as_points(B).reshape(-1, 3)


def distance_to_caps(u, caps: Iterable[Cap]) -> np.ndarray:
    return np.min(np.stack([c.distance(u) for c in caps]), axis=0)


def fill_caps(caps: Sequence[Cap], n_fill: int = 200_000, n_ring: int = 2000) -> np.ndarray:
    """Dense sample of a union of closed caps: lattice interior plus boundary rings."""
    u = fibonacci_sphere(n_fill)
    inside = u[distance_to_caps(u, caps) == 0.0]
    rings = [c.boundary(n_ring) for c in caps]
    return np.vstack([inside, *rings])


def directed_hausdorff_points(A: np.ndarray, B: np.ndarray) -> float:
    """sup over a in A of the angular distance from a to the finite set B."""
    chord, _ = cKDTree(B).query(A)
    return float(np.max(chord_to_angle(chord)))


def hausdorff_sphere(A, B, n_fill: int = 200_000) -> float:
    """Symmetric Hausdorff distance on S^2 in the angular metric.

    ``B`` may be a cap, a list of caps (their union), a ``DirectionSet`` or an
    array of directions. For caps the distance from samples of ``A`` to ``B``
    is exact; the reverse direction is evaluated on a dense fill of ``B``
    (``n_fill`` lattice points plus boundary rings), which under-reports the
    true supremum by at most the fill pitch.
    """
    a = _points_of(A)
    if len(a) == 0:
        raise EmptyEstimateError("direction estimate is empty")
    caps = _caps_of(B)
    if caps is not None:
        there = float(np.max(distance_to_caps(a, caps)))
        back = directed_hausdorff_points(fill_caps(caps, n_fill), a)
        return max(there, back)
    b = _points_of(B)
    if len(b) == 0:
        raise EmptyEstimateError("target set is empty")
    return max(directed_hausdorff_points(a, b), directed_hausdorff_points(b, a))
