import math
from collections import defaultdict

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from qrdyn.maps import DynMap
from qrdyn.vecgeom.mesh import TriMesh
from qrdyn.vecgeom.sphere import fibonacci_sphere


class RadialExp(DynMap):
    """x -> e^|x| x/|x|, so that M(r) = m(r) = e^r exactly."""

    kind = "radial-exp"

    def _eval(self, x, strict):
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(r > 0, np.exp(r) * x / np.where(r > 0, r, 1.0), 0.0)


@pytest.fixture
def radial_exp():
    return RadialExp()


def sphere_mesh(n=800, radius=1.0, hole_angle=None):
    """Triangulated sphere; ``hole_angle`` removes the triangles around +e3."""
    U = fibonacci_sphere(n)
    tri = ConvexHull(U).simplices
    if hole_angle is not None:
        c = U[tri].mean(axis=1)
        c /= np.linalg.norm(c, axis=1)[:, None]
        tri = tri[np.arccos(np.clip(c[:, 2], -1, 1)) > hole_angle]
    return TriMesh(radius * U, tri)


# ---- per-criterion summary for the acceptance suite ----

_results = defaultdict(list)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _results[m.args[0]].append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(_results):
        runs = _results[k]
        bad = [name for name, o in runs if o != "passed"]
        verdict = "PASS" if not bad else "FAIL"
        line = f"criterion {k:2d}: {verdict}  ({len(runs) - len(bad)}/{len(runs)} checks)"
        if bad:
            line += "  failing: " + ", ".join(bad)
        tr.write_line(line)
