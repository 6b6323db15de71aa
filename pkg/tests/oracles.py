"""Independent reference computations shared by the unit and acceptance tests."""
import math

import numpy as np


def brute_force_h_extremes(n=2001):
    """min and max of |h(u)| over an n x n grid of the square, h the pyramid map."""
    g = np.linspace(-1, 1, n)
    u1, u2 = np.meshgrid(g, g, indexing="ij")
    v = np.sqrt(u1**2 + u2**2 + (1 - np.maximum(abs(u1), abs(u2))) ** 2)
    return v.min(), v.max()


def pl_angle_oracle(cap, pts):
    """max(|D|^3/J, J/l^3) from the singular values {1, g'(phi), sin g(phi) / sin phi}."""
    eta = cap.half_angle
    li, lo = (math.pi / 2) / eta, (math.pi / 2) / (math.pi - eta)
    phi = np.arctan2(np.hypot(pts[:, 0], pts[:, 1]), pts[:, 2])
    g = np.where(phi <= eta, li * phi, math.pi / 2 + lo * (phi - eta))
    gp = np.where(phi <= eta, li, lo)
    sv = np.sort(np.column_stack([np.ones_like(phi), gp, np.sin(g) / np.sin(phi)]), axis=1)
    det = sv.prod(axis=1)
    return np.maximum(sv[:, 2] ** 3 / det, det / sv[:, 0] ** 3)


def sphere_points(seed, n, rlo=0.5, rhi=5.0, philo=0.02, phihi=math.pi - 0.02):
    rng = np.random.default_rng(seed)
    r = rng.uniform(rlo, rhi, n)
    phi = rng.uniform(philo, phihi, n)
    th = rng.uniform(0, 2 * np.pi, n)
    return np.column_stack([r * np.sin(phi) * np.cos(th), r * np.sin(phi) * np.sin(th), r * np.cos(phi)])


def ualpha_sample(seed, n, alpha=4.0, smax=40.0):
    """Points of U_alpha with x3 uniform in [alpha, smax]."""
    from qrdyn.maps import ualpha_contains

    rng = np.random.default_rng(seed)
    s = rng.uniform(alpha, smax, 3 * n)
    rho = s * s * np.sqrt(rng.uniform(0, 1, 3 * n))
    t = rng.uniform(0, 2 * np.pi, 3 * n)
    x = np.column_stack([rho * np.cos(t), rho * np.sin(t), s])
    return x[ualpha_contains(x, alpha)][:n]
