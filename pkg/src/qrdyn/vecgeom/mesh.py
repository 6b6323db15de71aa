"""Triangle meshes, ray crossing counts and voxel flood-fill separation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import DomainError, IndeterminateError
from .sphere import as_points, tangent_frame

EDGE_TOL = 1e-12
PERTURB_ANGLE = 1e-9
MAX_RETRIES = 8


@dataclass(frozen=True)
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 3)
        t = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(t) and (t.min() < 0 or t.max() >= len(v)):
            raise DomainError("triangle index out of range")
        if not np.all(np.isfinite(v)):
            raise DomainError("mesh vertices must be finite")
        if len(t):
            a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
            area2 = np.linalg.norm(np.cross(b - a, c - a), axis=1)
            scale = np.max(np.linalg.norm(np.stack([b - a, c - a, c - b]), axis=2), axis=0)
            if np.any(area2 <= 2e-14 * scale**2):
                raise DomainError("degenerate triangle in mesh")
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def corners(self) -> np.ndarray:
        """Array ``(n_tri, 3, 3)`` of triangle vertex coordinates."""
        return self.vertices[self.triangles]

    def translated(self, offset) -> "TriMesh":
        return TriMesh(self.vertices + np.asarray(offset, dtype=float), self.triangles)

    @staticmethod
    def merge(meshes) -> "TriMesh":
        verts, tris, base = [], [], 0
        for m in meshes:
            verts.append(m.vertices)
            tris.append(m.triangles + base)
            base += len(m.vertices)
        return TriMesh(np.vstack(verts), np.vstack(tris))

    def to_ply(self) -> str:
        lines = [
            "ply",
            "format ascii 1.0",
            f"element vertex {len(self.vertices)}",
            "property double x",
            "property double y",
            "property double z",
            f"element face {len(self.triangles)}",
            "property list uchar int vertex_indices",
            "end_header",
        ]
        lines += [" ".join(repr(float(c)) for c in p) for p in self.vertices]
        lines += ["3 " + " ".join(str(int(i)) for i in t) for t in self.triangles]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_ply(cls, text: str) -> "TriMesh":
        lines = text.splitlines()
        nv = nf = 0
        k = 0
        for k, line in enumerate(lines):
            if line.startswith("element vertex"):
                nv = int(line.split()[-1])
            elif line.startswith("element face"):
                nf = int(line.split()[-1])
            elif line.strip() == "end_header":
                break
        body = lines[k + 1:]
        v = np.array([[float(s) for s in body[i].split()] for i in range(nv)]).reshape(-1, 3)
        f = np.array([[int(s) for s in body[nv + i].split()[1:4]] for i in range(nf)]).reshape(-1, 3)
        return cls(v, f)


def _moller_trumbore(origin, dirs, corners):
    """Per (ray, triangle): hit flag and a grazing flag.

    A hit counts when t > 0 and the barycentric point lies in the closed
    triangle; it grazes when any barycentric coordinate is within EDGE_TOL
    of zero.
    """
    v0 = corners[:, 0]
    e1 = corners[:, 1] - v0
    e2 = corners[:, 2] - v0
    d = dirs[:, None, :]
    p = np.cross(d, e2[None])
    det = np.sum(e1[None] * p, axis=-1)
    scale = np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
    parallel = np.abs(det) <= 1e-15 * scale[None]
    inv = np.where(parallel, 0.0, 1.0 / np.where(parallel, 1.0, det))
    s = (origin - v0)[None]
    u = np.sum(s * p, axis=-1) * inv
    q = np.cross(s, e1[None])
    v = np.sum(d * q, axis=-1) * inv
    t = np.sum(e2[None] * q, axis=-1) * inv
    w = 1.0 - u - v
    inside = (u >= -EDGE_TOL) & (v >= -EDGE_TOL) & (w >= -EDGE_TOL)
    front = (t > 0) & ~parallel
    near_edge = (np.abs(u) <= EDGE_TOL) | (np.abs(v) <= EDGE_TOL) | (np.abs(w) <= EDGE_TOL)
    hit = front & inside & (u >= 0) & (v >= 0) & (w >= 0)
    graze = front & inside & near_edge
    return hit, graze


def _perturb(dirs, attempt):
    t1, t2 = tangent_frame(dirs)
    a = PERTURB_ANGLE * (attempt + 1)
    phase = 2.399963229728653 * (attempt + 1)
    tang = np.cos(phase) * t1 + np.sin(phase) * t2
    out = np.cos(a) * dirs + np.sin(a) * tang
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def ray_mesh_hits(origin, direction, mesh: TriMesh):
    """Number of triangles crossed by the ray origin + t*direction, t > 0.

    ``direction`` may be a single vector or an ``(N, 3)`` array; the return
    value is an int or an int array accordingly. Rays passing within
    EDGE_TOL (barycentric) of an edge are re-cast with a deterministic 1e-9
    rad tilt, up to MAX_RETRIES times.
    """
    origin = np.asarray(origin, dtype=float)
    dirs = as_points(direction)
    single = dirs.ndim == 1
    dirs = dirs.reshape(-1, 3)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    corners = mesh.corners
    counts = np.zeros(len(dirs), dtype=np.int64)
    todo = np.arange(len(dirs))
    cur = dirs.copy()
    for attempt in range(MAX_RETRIES + 1):
        hit, graze = _moller_trumbore(origin, cur[todo], corners)
        counts[todo] = hit.sum(axis=1)
        bad = graze.any(axis=1)
        if not bad.any() or attempt == MAX_RETRIES:
            break
        todo = todo[bad]
        cur[todo] = _perturb(dirs[todo], attempt)
    return int(counts[0]) if single else counts


def _tri_box_overlap(centers, half, tri):
    """Separating-axis test of one triangle against many axis-aligned cubes."""
    v = tri[None, :, :] - centers[:, None, :]
    f = [tri[1] - tri[0], tri[2] - tri[1], tri[0] - tri[2]]
    eps = 1e-9 * half
    ok = np.ones(len(centers), dtype=bool)
    for k in range(3):
        lo = v[:, :, k].min(axis=1)
        hi = v[:, :, k].max(axis=1)
        ok &= (lo <= half + eps) & (hi >= -half - eps)
    n = np.cross(f[0], f[1])
    pr = v @ n
    rad = half * np.sum(np.abs(n))
    ok &= (pr.min(axis=1) <= rad + eps * np.abs(n).sum()) & (pr.max(axis=1) >= -rad - eps * np.abs(n).sum())
    for i in range(3):
        for ff in f:
            ax = np.zeros(3)
            ax[i] = 1.0
            a = np.cross(ax, ff)
            an = np.sum(np.abs(a))
            if an == 0:
                continue
            pr = v @ a
            rad = half * an
            ok &= (pr.min(axis=1) <= rad + eps * an) & (pr.max(axis=1) >= -rad - eps * an)
    return ok


def _candidate_voxels(tri, lo, h, res):
    """Voxels whose column slab can meet the triangle's plane, within its bbox."""
    n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    k = int(np.argmax(np.abs(n)))
    i, j = [a for a in range(3) if a != k]
    imin = np.clip(np.floor((tri.min(axis=0) - lo) / h).astype(int) - 1, 0, res - 1)
    imax = np.clip(np.floor((tri.max(axis=0) - lo) / h).astype(int) + 1, 0, res - 1)
    ii, jj = np.meshgrid(np.arange(imin[i], imax[i] + 1), np.arange(imin[j], imax[j] + 1), indexing="ij")
    ii = ii.ravel()
    jj = jj.ravel()
    d = n @ tri[0]
    xs = lo + np.stack([ii, ii + 1]) * h
    ys = lo + np.stack([jj, jj + 1]) * h
    zc = np.stack([(d - n[i] * xs[a] - n[j] * ys[b]) / n[k] for a in range(2) for b in range(2)])
    kmin = np.clip(np.floor((zc.min(axis=0) - lo) / h).astype(int) - 1, imin[k], imax[k])
    kmax = np.clip(np.floor((zc.max(axis=0) - lo) / h).astype(int) + 1, imin[k], imax[k])
    span = int((kmax - kmin).max()) + 1 if len(kmin) else 0
    idx = []
    for off in range(span):
        kk = kmin + off
        m = kk <= kmax
        out = np.empty((int(m.sum()), 3), dtype=np.int64)
        out[:, i] = ii[m]
        out[:, j] = jj[m]
        out[:, k] = kk[m]
        idx.append(out)
    return np.vstack(idx) if idx else np.zeros((0, 3), dtype=np.int64)


def voxelize(mesh: TriMesh, lo: float, h: float, res: int) -> np.ndarray:
    """Boolean grid marking every closed voxel that meets the mesh."""
    blocked = np.zeros((res, res, res), dtype=bool)
    for tri in mesh.corners:
        cand = _candidate_voxels(tri, lo, h, res)
        if not len(cand):
            continue
        centers = lo + (cand + 0.5) * h
        hit = _tri_box_overlap(centers, 0.5 * h, tri)
        c = cand[hit]
        blocked[c[:, 0], c[:, 1], c[:, 2]] = True
    return blocked


def voxel_separation(mesh: TriMesh, r_out: float, res: int = 128) -> bool:
    """Grid check that ``mesh`` separates the origin from the sphere of radius ``r_out``.

    The cube is split into ``res**3`` voxels with the origin at a voxel center
    and a margin of a few voxels beyond ``r_out``. Voxels meeting the mesh are
    blocked (a conservative, hence 6-separating, voxelization). Returns True
    iff the 6-connected component of the origin's voxel contains no voxel
    whose center is farther than ``r_out + h`` from the origin.
    """
    if res < 16:
        raise DomainError("resolution too small")
    if np.max(np.linalg.norm(mesh.vertices, axis=1)) > r_out:
        raise DomainError("mesh is not contained in the ball of radius r_out")
    h = 2.0 * r_out / (res - 8)
    c0 = res // 2
    lo = -(c0 + 0.5) * h
    blocked = voxelize(mesh, lo, h, res)
    if blocked[c0, c0, c0]:
        raise IndeterminateError("origin voxel meets the mesh")
    labels, _ = ndimage.label(~blocked, structure=ndimage.generate_binary_structure(3, 1))
    comp = labels == labels[c0, c0, c0]
    g = lo + (np.arange(res) + 0.5) * h
    r2 = g[:, None, None] ** 2 + g[None, :, None] ** 2 + g[None, None, :] ** 2
    return not bool(np.any(comp & (r2 > (r_out + h) ** 2)))
