"""Evaluable maps: identity, scalings, Z, the half-space-identity map F, its
cap conjugates F_D = f_S^-1 o F o f_S, and maps glued from several caps.

Every map is an immutable callable on arrays of points. ``strict=False``
switches overflow from an exception to ``inf`` entries, which is what the
orbit code wants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, OrientationError
from .vecgeom.sphere import Cap, angular_distance, as_points, rotation_to_pole
from .zorich import EXP_LIMIT, MapOverflowError, zorich_eval

CAP_MARGIN = 1e-9


@dataclass(frozen=True)
class Ramp:
    """Smoothstep psi(t) = 3(t/T)^2 - 2(t/T)^3, clamped to [0, 1]."""

    T: float = 2.0

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError("ramp height T must be positive")

    def psi(self, t):
        s = np.clip(np.asarray(t, dtype=float) / self.T, 0.0, 1.0)
        return s * s * (3.0 - 2.0 * s)


class DynMap:
    kind = "abstract"

    def __call__(self, x, strict: bool = True) -> np.ndarray:
        x = as_points(x)
        with np.errstate(over="ignore", invalid="ignore"):
            return self._eval(x, strict)

    def _eval(self, x, strict):
        raise NotImplementedError

    def is_pl_on_slice(self, s: float) -> bool:
        return False

    def to_config(self) -> dict:
        raise NotImplementedError(f"{type(self).__name__} has no JSON form")

    def __repr__(self):
        return f"{type(self).__name__}({self.to_config()})"


class IdentityMap(DynMap):
    kind = "identity"

    def _eval(self, x, strict):
        return x.copy()

    def is_pl_on_slice(self, s):
        return True

    def to_config(self):
        return {"kind": "identity"}


@dataclass(frozen=True, repr=False)
class ScalingMap(DynMap):
    c: float = 2.0
    kind = "scaling"

    def _eval(self, x, strict):
        return self.c * x

    def is_pl_on_slice(self, s):
        return True

    def to_config(self):
        return {"kind": "scaling", "c": self.c}


class ZorichMap(DynMap):
    kind = "zorich"

    def _eval(self, x, strict):
        return zorich_eval(x, strict=strict)

    def is_pl_on_slice(self, s):
        return True

    def to_config(self):
        return {"kind": "zorich"}


@dataclass(frozen=True, repr=False)
class NSMap(DynMap):
    """F(x) = x + psi(x3) Z(x): the identity for x3 <= 0, Z + Id for x3 >= T."""

    ramp: Ramp = field(default_factory=Ramp)
    kind = "ns"

    @property
    def T(self):
        return self.ramp.T

    def _eval(self, x, strict):
        x3 = x[..., 2]
        out = x.copy()
        active = x3 > 0
        if not np.any(active):
            return out
        xa = x[active]
        z = zorich_eval(xa, strict=strict)
        top = xa[:, 2] >= self.ramp.T
        band = xa + self.ramp.psi(xa[:, 2])[:, None] * z
        out[active] = np.where(top[:, None], xa + z, band)
        return out

    def is_pl_on_slice(self, s):
        return s <= 0 or s >= self.ramp.T

    def to_config(self):
        return {"kind": "ns", "T": self.ramp.T}


def ns_eval(x, ramp: Ramp = Ramp()) -> np.ndarray:
    return NSMap(ramp)(x)


def ualpha_contains(x, alpha: float):
    """Membership in U_alpha = {x3 > max(alpha, (x1^2 + x2^2)^(1/4))}."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    x = as_points(x)
    return x[..., 2] > np.maximum(alpha, (x[..., 0] ** 2 + x[..., 1] ** 2) ** 0.25)


class SectorMap:
    """Radial bi-Lipschitz map sending the cone over a cap onto {x3 > 0}.

    After rotating the cap center to the north pole, the polar angle phi is
    reparametrized piecewise linearly: [0, eta] -> [0, pi/2] and
    [eta, pi] -> [pi/2, pi]. Radius and azimuth are kept.
    """

    def __init__(self, cap: Cap):
        self.cap = cap
        self.rotation = rotation_to_pole(cap.center)
        eta = cap.half_angle
        self.lam_in = (math.pi / 2) / eta
        self.lam_out = (math.pi / 2) / (math.pi - eta)

    def angle_map(self, phi):
        eta = self.cap.half_angle
        return np.where(phi <= eta, self.lam_in * phi, math.pi / 2 + self.lam_out * (phi - eta))

    def angle_map_inverse(self, phi):
        eta = self.cap.half_angle
        return np.where(phi <= math.pi / 2, phi / self.lam_in, eta + (phi - math.pi / 2) / self.lam_out)

    @staticmethod
    def _respherize(y, fn):
        rho = np.hypot(y[..., 0], y[..., 1])
        r = np.sqrt(rho * rho + y[..., 2] ** 2)
        phi = fn(np.arctan2(rho, y[..., 2]))
        safe = np.where(rho > 0, rho, 1.0)
        s = np.where(rho > 0, np.sin(phi) / safe, 0.0)
        return np.stack([r * s * y[..., 0], r * s * y[..., 1], r * np.cos(phi)], axis=-1)

    def eval(self, x) -> np.ndarray:
        y = as_points(x) @ self.rotation.T
        return self._respherize(y, self.angle_map)

    def inverse(self, y) -> np.ndarray:
        return self._respherize(as_points(y), self.angle_map_inverse) @ self.rotation

    def __call__(self, x, strict=True):
        return self.eval(x)


def sector_map_eval(sm: SectorMap, x):
    return sm.eval(x)


def sector_map_inverse(sm: SectorMap, y):
    return sm.inverse(y)


class ConjugatedMap(DynMap):
    """F_D = f_S^-1 o inner o f_S; exactly the identity off the open cone."""

    kind = "conjugated"

    def __init__(self, cap: Cap, inner: DynMap | None = None):
        self.cap = cap
        self.inner = inner if inner is not None else NSMap()
        self.sector_map = SectorMap(cap)

    def _eval(self, x, strict):
        out = x.copy()
        r = np.linalg.norm(x, axis=-1)
        inside = (angular_distance(x, self.cap.center) < self.cap.half_angle) & (r > 0)
        if not np.any(inside):
            return out
        y = self.sector_map.eval(x[inside])
        if strict and np.any(y[:, 2] > EXP_LIMIT):
            raise MapOverflowError("conjugated map overflows", point=x[inside][np.argmax(y[:, 2])])
        z = self.sector_map.inverse(self.inner(y, strict=strict))
        bad = ~np.all(np.isfinite(z), axis=-1)
        z[bad] = np.inf
        out[inside] = z
        return out

    def to_config(self):
        cfg = {"kind": "conjugated", "caps": [self.cap.to_dict()]}
        if isinstance(self.inner, NSMap):
            cfg["T"] = self.inner.T
        return cfg


def conjugated_eval(cap: Cap, ramp: Ramp, x) -> np.ndarray:
    return ConjugatedMap(cap, NSMap(ramp))(x)


def check_disjoint(caps: Sequence[Cap], margin: float = CAP_MARGIN):
    for i in range(len(caps)):
        for j in range(i + 1, len(caps)):
            d = float(angular_distance(caps[i].center, caps[j].center))
            if not d > caps[i].half_angle + caps[j].half_angle + margin:
                raise DomainError(f"caps {i} and {j} overlap (closed caps must be disjoint)")


class GluedMap(DynMap):
    """Apply the map attached to the closed cap containing sigma(x), else the identity."""

    kind = "glued"

    def __init__(self, pieces: Sequence[tuple]):
        self.pieces = [(c, m) for c, m in pieces]
        check_disjoint([c for c, _ in self.pieces])

    @classmethod
    def from_caps(cls, caps: Sequence[Cap], ramp: Ramp = Ramp()):
        return cls([(c, ConjugatedMap(c, NSMap(ramp))) for c in caps])

    @property
    def caps(self):
        return [c for c, _ in self.pieces]

    def _eval(self, x, strict):
        out = x.copy()
        r = np.linalg.norm(x, axis=-1)
        for cap, m in self.pieces:
            sel = (angular_distance(x, cap.center) <= cap.half_angle) & (r > 0)
            if np.any(sel):
                out[sel] = m(x[sel], strict=strict)
        return out

    def to_config(self):
        cfg = {"kind": "glued", "caps": [c.to_dict() for c in self.caps]}
        inner = self.pieces[0][1] if self.pieces else None
        if isinstance(inner, ConjugatedMap) and isinstance(inner.inner, NSMap):
            cfg["T"] = inner.inner.T
        return cfg


def glued_eval(caps_maps, x) -> np.ndarray:
    return GluedMap(caps_maps)(x)


class ComposedMap(DynMap):
    """maps[-1] o ... o maps[0]."""

    kind = "composed"

    def __init__(self, maps: Sequence[DynMap]):
        self.maps = list(maps)

    def _eval(self, x, strict):
        for m in self.maps:
            x = m(x, strict=strict)
        return x

    def is_pl_on_slice(self, s):
        return len(self.maps) == 1 and self.maps[0].is_pl_on_slice(s)

    def to_config(self):
        return {"kind": "composed", "maps": [m.to_config() for m in self.maps]}


def map_from_config(cfg: dict) -> DynMap:
    """Build a map from its JSON description ``{kind, T, c, caps}``."""
    kind = cfg.get("kind")
    ramp = Ramp(float(cfg.get("T", 2.0)))
    caps = [Cap.from_dict(c) for c in cfg.get("caps", [])]
    if kind == "identity":
        return IdentityMap()
    if kind == "scaling":
        return ScalingMap(float(cfg.get("c", 2.0)))
    if kind == "zorich":
        return ZorichMap()
    if kind == "ns":
        return NSMap(ramp)
    if kind == "conjugated":
        if len(caps) != 1:
            raise DomainError("conjugated map needs exactly one cap")
        return ConjugatedMap(caps[0], NSMap(ramp))
    if kind == "glued":
        if not caps:
            raise DomainError("glued map needs at least one cap")
        return GluedMap.from_caps(caps, ramp)
    if kind == "composed":
        return ComposedMap([map_from_config(c) for c in cfg["maps"]])
    raise DomainError(f"unknown map kind {kind!r}")


def jacobian_fd(f, points, h: float) -> np.ndarray:
    """Central-difference Jacobians, shape ``(N, 3, 3)``."""
    p = as_points(points).reshape(-1, 3)
    J = np.empty((len(p), 3, 3))
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        J[:, :, k] = (f(p + e) - f(p - e)) / (2 * h)
    return J


def distortion(J) -> np.ndarray:
    """max(|Df|^3 / det Df, det Df / l(Df)^3) for each Jacobian."""
    sv = np.linalg.svd(J, compute_uv=False)
    det = np.linalg.det(J)
    return np.maximum(sv[:, 0] ** 3 / det, det / sv[:, -1] ** 3), det


@dataclass
class DilatationReport:
    max_K: float
    mean_K: float
    K: np.ndarray
    failures: list = field(default_factory=list)


def dilatation_probe(f, points, h: float = 1e-5, raise_on_failure: bool = True) -> DilatationReport:
    """Finite-difference estimate of the maximal dilatation at sample points.

    Points must stay at least 10h away from the creases of ``f``. A
    non-positive Jacobian determinant raises ``OrientationError`` naming the
    point, or is collected in ``failures`` when ``raise_on_failure`` is off.
    """
    p = as_points(points).reshape(-1, 3)
    K, det = distortion(jacobian_fd(f, p, h))
    bad = det <= 0
    failures = [(p[i].copy(), float(det[i])) for i in np.flatnonzero(bad)]
    if failures and raise_on_failure:
        loc, d = failures[0]
        raise OrientationError(f"Jacobian determinant {d:.3g} <= 0 at {loc.tolist()}", location=loc, det=d)
    good = K[~bad]
    if len(good) == 0:
        return DilatationReport(math.inf, math.inf, K, failures)
    return DilatationReport(float(good.max()), float(good.mean()), K, failures)
