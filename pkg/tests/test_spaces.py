import math

import numpy as np
import pytest

from renyi.errors import ResolutionError
from renyi.spaces import Axis, Box, FiniteSpace, GriddedSpace


def test_geometric_axis_cells_are_uniform_in_log():
    a = Axis.geometric("lam", 2.0 ** -8, 2.0 ** 8, 64)
    assert np.allclose(np.diff(np.log(a.edges)), math.log(2) / 4)
    assert a.edges[0] == 2.0 ** -8 and a.edges[-1] == 2.0 ** 8
    assert np.all((a.centers > a.edges[:-1]) & (a.centers < a.edges[1:]))


def test_weights_integrate_power_laws_on_log_axis():
    a = Axis.geometric("x", 1.0, 16.0, 64)
    assert math.isclose(np.sum(a.weights / a.centers), math.log(16), rel_tol=1e-12)
    assert math.isclose(np.sum(a.weights * a.centers), (16 ** 2 - 1) / 2, rel_tol=1e-3)


def test_counts_axis():
    a = Axis.counts("k", 5)
    assert list(a.centers) == [0, 1, 2, 3, 4, 5]
    assert np.all(a.weights == 1)
    with pytest.raises(ValueError):
        Axis("k", 0, 5, 4, "counts")


@pytest.mark.parametrize("bad", [
    dict(name="x", lo=1, hi=0, cells=4),
    dict(name="x", lo=0, hi=1, cells=0),
    dict(name="x", lo=0, hi=1, cells=4, scale="log"),
    dict(name="x", lo=0, hi=1, cells=4, scale="logit"),
    dict(name="x", lo=0, hi=1, cells=4, scale="cubic"),
])
def test_axis_validation(bad):
    with pytest.raises(ValueError):
        Axis(**bad)


def test_extension_segments_tile_outward():
    a = Axis.geometric("x", 1.0, 4.0, 8)
    lo = [a.extension_segment("low", k) for k in range(3)]
    assert lo[0].hi == pytest.approx(1.0) and lo[0].lo == pytest.approx(0.5)
    assert lo[2].lo == pytest.approx(0.125)
    hi = a.extension_segment("high", 0)
    assert hi.lo == pytest.approx(4.0) and hi.hi == pytest.approx(8.0)
    assert hi.spacing == pytest.approx(a.spacing)


def test_linear_extension_doubles_bound():
    a = Axis("x", -4, 4, 32, "linear", True, True)
    s0, s1 = a.extension_segment("high", 0), a.extension_segment("high", 1)
    assert (s0.lo, s0.hi) == (4, 8) and (s1.lo, s1.hi) == (8, 16)
    assert a.extension_segment("low", 0).hi == -4


def test_closed_axis_does_not_extend():
    a = Axis("x", 0, 1, 4)
    assert not a.can_extend("low") and not a.can_extend("high")
    with pytest.raises(ResolutionError):
        a.extension_segment("high", 0)


def test_counts_extension_blocks():
    a = Axis.counts("k", 7)
    s = a.extension_segment("high", 0)
    assert (s.lo, s.hi) == (8, 15)
    assert a.extension_segment("high", 1).lo == 16


def test_snap_to_edges():
    a = Axis("x", -4, 4, 8)
    i0, i1, *_ = a.snap(-2, 2)
    assert (i0, i1) == (2, 6)
    with pytest.raises(ResolutionError):
        a.snap(-2.3, 2)


def test_gridded_space_mesh_and_weights():
    s = GriddedSpace((Axis("x", 0, 1, 4), Axis("y", 0, 2, 2)))
    assert s.shape == (4, 2) and s.names == ("x", "y")
    assert s.cell_weights.sum() == pytest.approx(2.0)
    x, y = s.mesh()
    assert np.broadcast_shapes(x.shape, y.shape) == (4, 2)
    assert s.axis_index("y") == 1


def test_finite_space_masks():
    s = FiniteSpace(("a", "b", "c"))
    assert list(s.mask({"a", "c"})) == [True, False, True]
    assert s.labels(s.mask({"b"})) == frozenset({"b"})
    with pytest.raises(ValueError):
        FiniteSpace(("a", "a"))


def test_box_resolves_to_cells():
    s = GriddedSpace((Axis("x", -4, 4, 8), Axis("y", -4, 4, 8)))
    ranges, open_ends = Box(x=(0, 2)).resolve(s)
    assert ranges == [(4, 6), (0, 8)] and open_ends == []
