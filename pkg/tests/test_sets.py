import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from famdyn.sets import CellSet, PointSet, Region, read_pgm
from famdyn.sphere import INF

REGIONS = [
    Region.rect(-1, -1, 1, 1, 0.1),
    Region.disk(0.3j, 0.9, 0.05),
    Region.annulus(0, 0.5, 2, 0.1),
    Region.circle(0, 1, 0.02),
]


@pytest.mark.parametrize("region", REGIONS, ids=lambda r: r.shape)
def test_cells_cover_shape(region):
    assert region.cell_radius <= region.eps + 1e-12
    rng = np.random.default_rng(0)
    x0, y0, x1, y1 = region.bbox()
    z = rng.uniform(x0, x1, 4000) + 1j * rng.uniform(y0, y1, 4000)
    if region.shape == "circle":
        z = region.params[0] + region.params[2] * np.exp(2j * np.pi * rng.random(4000))
    z = z[region.contains(z)]
    d = np.min(np.abs(z[:, None] - region.centers[None, :]), axis=1)
    # every point of the shape lies within a cell radius of some centre
    assert np.all(d <= region.cell_radius + 1e-12)


@pytest.mark.parametrize("region", REGIONS[:3], ids=lambda r: r.shape)
def test_cell_of_centres_is_identity(region):
    assert np.array_equal(region.cell_of(region.centers), np.arange(len(region)))


def test_circle_cell_of():
    c = Region.circle(0, 1, 0.02)
    assert np.array_equal(c.cell_of(c.centers), np.arange(len(c)))
    assert c.cell_of([0.0])[0] == -1


@pytest.mark.parametrize("text,shape", [("rect:-1,-1,1,1", "rect"), ("disk:0,0,0.9", "disk"),
                                        ("annulus:0,0,0.5,2", "annulus"), ("circle:0,0,1", "circle")])
def test_region_parse_round_trip(text, shape):
    r = Region.parse(text, 0.1)
    assert r.shape == shape
    assert Region.parse(r.describe(), 0.1) == r
    assert Region.from_json(r.to_json()) == r


@pytest.mark.parametrize("bad", ["blob:1,2", "rect:1,1,0,0", "disk:0,0", "disk:0,0,-1", "annulus:0,0,2,1"])
def test_region_rejects(bad):
    with pytest.raises(ValueError):
        Region.parse(bad, 0.1)


def test_pointset_merges_close_points():
    s = PointSet([1, 1 + 1e-14, 2, INF, 1e200], ["a", "b", "c", "d", "e"])
    assert len(s) == 3
    assert s.labels == ["a", "c", "d"]
    assert s.to_csv().splitlines() == ["1.0,0.0,a", "2.0,0.0,c", "inf,inf,d"]
    assert s.to_json() == ["1.0+0.0i", "2.0+0.0i", "inf"]


def test_grid_closure_detects_isolated_hole():
    region = Region.rect(0, 0, 1, 1, 0.1)
    marks = np.ones(len(region), bool)
    marks[len(region) // 2 + 3] = False
    cs = CellSet(region, marks)
    assert not cs.is_grid_closed()
    assert cs.closure_violations() == [len(region) // 2 + 3]
    closed = CellSet(region, cs.grid_closure())
    assert closed.is_grid_closed()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_grid_closure_idempotent(seed):
    region = Region.disk(0, 1, 0.15)
    rng = np.random.default_rng(seed)
    cs = CellSet(region, rng.random(len(region)) < 0.7)
    once = CellSet(region, cs.grid_closure())
    assert np.array_equal(once.grid_closure(), once.marks)
    assert np.all(once.marks >= cs.marks)


def test_cellset_shape_checks():
    region = Region.rect(0, 0, 1, 1, 0.2)
    with pytest.raises(ValueError):
        CellSet(region, np.zeros(3, bool))
    with pytest.raises(ValueError):
        CellSet(region, np.zeros(len(region), bool), scalar=np.zeros(2))


def test_pgm_round_trip():
    region = Region.rect(0, 0, 2, 1, 0.1)
    marks = region.centers.imag > 0.5
    cs = CellSet(region, marks)
    img = read_pgm(cs.to_pgm())
    nx, ny = region.shape_px
    assert img.shape == (ny, nx)
    # top rows are the large-imaginary cells
    assert img[0].min() == 255 and img[-1].max() == 0
    j = cs.to_json()
    assert j["marked_count"] == int(marks.sum())
    assert j["cells"] == np.nonzero(marks)[0].tolist()


def test_rasterize_marks_points():
    s = PointSet([0, 0.5, 0.5j])
    cs = s.rasterize(0.05)
    assert cs.marked_count == 3
    assert cs.is_grid_closed()
