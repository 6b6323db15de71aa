import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qrdyn import NSMap, ZorichMap
from qrdyn.errors import DomainError, MapOverflowError
from qrdyn.zorich import (
    EXP_LIMIT, GENERATORS, SquareIndex, automorphy_group_apply, fold, modulus_constants,
    pyramid_h, slice_mesh, zorich_eval, zorich_inverse,
)

from oracles import brute_force_h_extremes

coord = st.floats(-50, 50, allow_nan=False)


def rand_points(seed, n=10_000, zlo=-10.0, zhi=10.0):
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.uniform(-20, 20, n), rng.uniform(-20, 20, n), rng.uniform(zlo, zhi, n)])


# ---- folding and the pyramid ----

def test_fold_examples():
    assert fold(0.5) == (0.5, 0)
    assert fold(2.0) == (0.0, 1)
    assert fold(4.5) == (0.5, 0)


def test_fold_tie_takes_left_parity():
    # t = 1 and t = 3 are fold lines; both sides give the same folded value
    assert fold(1.0) == (1.0, 0)
    assert fold(3.0) == (-1.0, 1)
    assert fold(-1.0) == (-1.0, 1)


@given(st.floats(-1e3, 1e3, allow_nan=False))
def test_fold_range_and_period(t):
    u, p = fold(t)
    assert -1.0 <= u <= 1.0 and p in (0, 1)
    u4, p4 = fold(t + 4.0)
    assert u4 == pytest.approx(u, abs=1e-12)


def test_pyramid_examples():
    assert np.array_equal(pyramid_h(0, 0), [0, 0, 1])
    assert np.array_equal(pyramid_h(1, 1), [1, 1, 0])
    assert np.array_equal(pyramid_h(0.5, 0), [0.5, 0, 0.5])
    with pytest.raises(DomainError):
        pyramid_h(1.5, 0)


# ---- evaluation ----

def test_zorich_examples():
    assert np.array_equal(zorich_eval([0, 0, 0]), [0, 0, 1])
    np.testing.assert_allclose(zorich_eval([0, 0, math.log(3)]), [0, 0, 3], rtol=1e-15)
    np.testing.assert_allclose(zorich_eval([2, 0, 0]), [0, 0, -1], atol=1e-15)
    assert np.array_equal(zorich_eval([0.5, 0, 0]), [0.5, 0, 0.5])


def test_reflection_in_plane_oracle():
    # Z(2, 0, x3) is Z(0, 0, x3) reflected in the plane {y3 = 0}
    for x3 in (-3.0, 0.0, 2.5):
        a = zorich_eval([0, 0, x3])
        assert np.allclose(zorich_eval([2, 0, x3]), a * [1, 1, -1])


def test_overflow_guard():
    with pytest.raises(MapOverflowError) as ei:
        zorich_eval([[0, 0, 1], [0.3, 0, 701]])
    assert ei.value.point[2] == 701
    out = zorich_eval([[0, 0, 1], [0, 0, 701]], strict=False)
    assert np.all(np.isinf(out[1])) and np.all(np.isfinite(out[0]))
    assert np.all(np.isfinite(zorich_eval([0, 0, EXP_LIMIT])))


# ---- inverse branch ----

def test_inverse_examples():
    assert np.array_equal(zorich_inverse([0, 0, 1]), [0, 0, 0])
    np.testing.assert_allclose(zorich_inverse([0, 0, 4]), [0, 0, math.log(4)])
    np.testing.assert_allclose(zorich_inverse([0, 0, -1]), [2, 0, 0])
    np.testing.assert_allclose(zorich_inverse([2, 0, 0]), [1, 0, math.log(2)])
    np.testing.assert_allclose(zorich_eval([1, 0, math.log(2)]), [2, 0, 0])
    with pytest.raises(DomainError):
        zorich_inverse([0, 0, 0])


def test_inverse_branch_ranges():
    y = rand_points(5, zlo=-20, zhi=20)
    x = zorich_inverse(y)
    up = y[:, 2] >= 0
    assert np.all(np.abs(x[up, :2]) <= 1)
    assert np.all((x[~up, 0] >= 1) & (x[~up, 0] <= 3) & (np.abs(x[~up, 1]) <= 1))


def test_round_trip_both_ways():
    y = rand_points(6, zlo=-20, zhi=20)
    rel = np.linalg.norm(zorich_eval(zorich_inverse(y)) - y, axis=1) / np.linalg.norm(y, axis=1)
    assert rel.max() <= 1e-9
    rng = np.random.default_rng(7)
    x = np.column_stack([rng.uniform(-0.999, 2.999, 5000), rng.uniform(-0.999, 0.999, 5000), rng.uniform(-5, 5, 5000)])
    x = x[np.abs(x[:, 0] - 1) > 1e-3]  # the plane x1 = 1 maps to y3 = 0, assigned upstairs
    np.testing.assert_allclose(zorich_inverse(zorich_eval(x)), x, atol=1e-9)


# ---- constants ----

def test_modulus_constants_against_brute_force():
    c = modulus_constants()
    lo, hi = brute_force_h_extremes()
    assert c.C1 == pytest.approx(lo, abs=1e-6)
    assert c.C2 == pytest.approx(hi, abs=1e-6)
    # critical point (1/2, 0) on a face gives sqrt(1/4 + 1/4)
    assert c.C1 == pytest.approx(math.sqrt(0.5), abs=1e-6)
    assert c.C2 == pytest.approx(math.sqrt(2), abs=1e-6)
    assert c.C1 <= np.linalg.norm(zorich_eval([0, 0, 0])) <= c.C2


def test_modulus_bounds_on_samples():
    c = modulus_constants()
    x = rand_points(8)
    r = np.linalg.norm(zorich_eval(x), axis=1) / np.exp(x[:, 2])
    assert np.all(r >= c.C1 * (1 - 1e-12)) and np.all(r <= c.C2 * (1 + 1e-12))


# ---- automorphy ----

def test_generator_examples():
    assert np.array_equal(automorphy_group_apply("T1", [0, 0, 0]), [4, 0, 0])
    assert np.array_equal(automorphy_group_apply("Rpi", [1, 1, 7]), [1, 1, 7])
    assert np.array_equal(automorphy_group_apply("Rpi", [0, 0, 0]), [2, 2, 0])
    with pytest.raises(DomainError):
        automorphy_group_apply("bogus", [0, 0, 0])


@pytest.mark.parametrize("g", sorted(GENERATORS))
def test_automorphy(g):
    x = rand_points(9)
    zx = zorich_eval(x)
    rel = np.linalg.norm(zorich_eval(automorphy_group_apply(g, x)) - zx, axis=1) / np.linalg.norm(zx, axis=1)
    assert rel.max() <= 1e-12


@given(coord, coord, st.floats(-10, 10))
def test_automorphy_property(a, b, c):
    x = np.array([a, b, c])
    z = zorich_eval(x)
    for g in GENERATORS:
        np.testing.assert_allclose(zorich_eval(automorphy_group_apply(g, x)), z, rtol=1e-12, atol=1e-12 * np.linalg.norm(z))


def test_continuity_across_fold_lines():
    rng = np.random.default_rng(10)
    n = 2000
    k = rng.integers(-5, 6, n)
    along = rng.uniform(-3, 3, n)
    x3 = rng.uniform(-5, 5, n)
    line = 2 * k + 1.0
    eps = 1e-7
    for axis in (0, 1):
        a = np.zeros((n, 3))
        a[:, axis] = line - eps / 2
        a[:, 1 - axis] = along
        a[:, 2] = x3
        b = a.copy()
        b[:, axis] += eps
        jump = np.linalg.norm(zorich_eval(a) - zorich_eval(b), axis=1)
        assert np.all(jump <= 8 * np.exp(x3) * eps)


def test_beams_map_to_half_spaces():
    rng = np.random.default_rng(11)
    for m in range(-2, 3):
        for n in range(-2, 3):
            b = np.column_stack([rng.uniform(2 * m - 1, 2 * m + 1, 400), rng.uniform(2 * n - 1, 2 * n + 1, 400),
                                 rng.uniform(-10, 10, 400)])
            z3 = zorich_eval(b)[:, 2]
            assert np.all(z3 >= 0) if (m + n) % 2 == 0 else np.all(z3 <= 0)


# ---- slice meshes ----

def test_slice_mesh_zorich_base():
    m = slice_mesh(ZorichMap(), SquareIndex(0, 0), 0.0)
    assert len(m.triangles) == 4
    assert np.array_equal(m.vertices[0], [0, 0, 1])
    assert {tuple(v) for v in m.vertices[1:]} == {(-1, 1, 0), (-1, -1, 0), (1, -1, 0), (1, 1, 0)}


def test_slice_mesh_F_at_height_10():
    m = slice_mesh(NSMap(), SquareIndex(0, 0), 10.0)
    e = math.exp(10)
    np.testing.assert_allclose(m.vertices[0], [0, 0, 10 + e])
    # w4 = (1, 1) corner
    np.testing.assert_allclose(m.vertices[4], [1 + e, 1 + e, 10])


def test_slice_mesh_neighbour_shares_edge():
    a = slice_mesh(ZorichMap(), SquareIndex(0, 0), 0.0).vertices
    b = slice_mesh(ZorichMap(), SquareIndex(1, 0), 0.0).vertices
    assert np.all(b[:, 2] <= 0)
    edge_a = {tuple(np.round(v, 12)) for v in a[1:] if v[0] == 1}
    edge_b = {tuple(np.round(v, 12)) for v in b[1:] if np.isclose(v[0], 1)}
    assert edge_a == edge_b == {(1.0, 1.0, 0.0), (1.0, -1.0, 0.0)}


def test_slice_mesh_refuses_non_pl_slice():
    with pytest.raises(DomainError):
        slice_mesh(NSMap(), SquareIndex(0, 0), 1.0)
