import math

import numpy as np
import pytest

from famdyn.family import FamilySpec
from famdyn.orbits import (
    INCONCLUSIVE, NONWANDERING, WANDERING, MemberEvaluationError, forward_invariant_hull,
    is_backward_invariant, is_forward_invariant, is_nonwandering, nonwandering_set, omega_limit,
    orbit_set, orbit_values, universal_points,
)
from famdyn.funcexpr import NotRationalError
from famdyn.sets import CellSet, PointSet, Region
from famdyn.sphere import INF, chordal_distance

from oracles import covering_radius, spiral_lattice

SQ = FamilySpec.iterates("z^2")
PLUS1 = FamilySpec.sequence("z^n + 1")
POW2 = FamilySpec.sequence("z^n", start=2)
ROT = FamilySpec.sequence("exp(2*pi*i*n*t)*z", params={"t": math.sqrt(2) - 1})


def test_orbit_examples():
    assert np.allclose(orbit_set(SQ, 2, 3).points, [4, 16, 256])
    assert np.allclose(orbit_set(PLUS1, 0.5, 4).points, [1.5, 1.25, 1.125, 1.0625])
    s = orbit_set(SQ, 0.5, 20)
    assert s.labels[:3] == ["f^1", "f^2", "f^3"]
    mods = np.abs(s.points)
    assert np.allclose(mods, [0.5 ** (2**m) for m in range(1, len(s) + 1)], rtol=1e-12, atol=0)


def test_orbit_escapes_to_infinity():
    _, vals = orbit_values(SQ, 3, 12)
    assert vals[-1] == INF
    # points near infinity merge chordally in a PointSet
    assert len(orbit_set(SQ, 3, 12)) < 12


def test_orbit_member_error_carries_label():
    with pytest.raises(MemberEvaluationError, match="m1"):
        orbit_set(FamilySpec.list_of(["exp(z)"]), INF, 1)
    with pytest.raises(ValueError):
        orbit_set(SQ, 0.5, 0)


def test_omega_of_shifted_powers_is_one():
    om = omega_limit(PLUS1, 0.5, 128, 1e-6)
    assert len(om) == 1
    assert chordal_distance(om.points[0], 1.0) < 1e-9


def test_omega_of_square_iterates_is_zero():
    om = omega_limit(SQ, 0.5, 32, 1e-6)
    assert len(om) == 1 and abs(om.points[0]) < 1e-12


def test_omega_needs_budget():
    with pytest.raises(ValueError):
        omega_limit(SQ, 0.5, 8, 0.1)


def test_omega_of_irrational_rotation_covers_circle():
    om = omega_limit(ROT, 1, 512, 0.05)
    ang = np.sort(np.angle(om.points))
    # every arc of length 0.15 contains a cluster point
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    assert gaps.max() < 0.15
    assert np.allclose(np.abs(om.points), 1.0, atol=1e-2)


def test_forward_invariance_examples():
    assert is_forward_invariant(SQ, [0], 16, 1e-9) == (True, None)
    ok, wit = is_forward_invariant(PLUS1, [1], 16, 1e-9)
    assert not ok and wit == ("n=1", 1, 2)
    circle = Region.circle(0, 1, 0.05)
    assert is_forward_invariant(SQ, circle, 8, 2 * 0.05)[0]


def test_backward_invariance_examples():
    circle = PointSet(np.exp(2j * np.pi * np.arange(64) / 64))
    assert is_backward_invariant(SQ, circle, 3, 0.1)[0]
    assert is_backward_invariant(SQ, [0], 8, 1e-9) == (True, None)
    ok, wit = is_backward_invariant(FamilySpec.list_of(["z^2 - 1"]), [0], 1, 1e-9)
    assert not ok
    assert sorted(p.real for p in wit[2]) == pytest.approx([-1, 1])
    with pytest.raises(NotRationalError):
        is_backward_invariant(FamilySpec.iterates("exp(z)"), [0], 2, 0.1)


def test_nonwandering_at_zero():
    res = is_nonwandering(FamilySpec.sequence("z^n"), 0, [0.5, 0.1, 0.01], 8)
    assert res.verdict == NONWANDERING
    assert len(res.witnesses) == 3


def test_wandering_at_half():
    radii = [0.2, 0.1, 0.05]
    # oracle: max over |z - 0.5| <= r of |z^n| is (0.5 + r)^n; it must stay below 0.5 - r
    r = radii[-1]
    assert all((0.5 + r) ** n < 0.5 - r for n in range(2, 200))
    res = is_nonwandering(POW2, 0.5, radii, 64)
    assert res.verdict == WANDERING


def test_nonwandering_at_fixed_point():
    assert is_nonwandering(POW2, 1, [0.1, 0.01], 16).verdict == NONWANDERING


def self_hit_oracle(c0, r, powers):
    """Dense polar sampling of D(c0, r): does some z^n land back in the disk?"""
    rho = np.sqrt(np.linspace(0, 1, 60))[:, None]
    z = c0 + r * (rho * np.exp(2j * np.pi * np.arange(120) / 120)[None, :]).ravel()
    return any(np.any(np.abs(z**n - c0) < r) for n in powers)


def test_nonwandering_set_powers():
    region = Region.rect(-1.5, -1.5, 1.5, 1.5, 0.1)
    cells = nonwandering_set(POW2, region, 32)
    c, r = region.centers, region.cell_radius
    expect = np.array([self_hit_oracle(z, r, range(2, 34)) for z in c])
    assert np.array_equal(cells.marks, expect)
    # the marked set hugs {0} and the unit circle
    near = (np.abs(c) <= 3 * r) | (np.abs(np.abs(c) - 1) <= 3 * r)
    assert not np.any(cells.marks & ~near)
    assert cells.marks[np.abs(np.abs(c) - 1) <= 0.5 * r].all()


def test_nonwandering_set_translation_and_identity():
    region = Region.rect(-1, -1, 1, 1, 0.2)
    assert nonwandering_set(FamilySpec.iterates("z + 1"), region, 16).marked_count == 0
    assert nonwandering_set(FamilySpec.list_of(["z"]), region, 1).marks.all()


def test_universal_points_translations():
    h, count = 0.06, 200
    shifts = spiral_lattice(h, count)
    spec = FamilySpec.list_of([f"z + ({s.real!r} + {s.imag!r}*i)" for s in shifts])
    domain = Region.rect(-0.05, -0.05, 0.05, 0.05, 0.02)
    targets = Region.rect(-0.3, -0.3, 0.3, 0.3, 0.1).centers
    eps = 0.1
    # oracle: euclidean covering radius r gives chordal distance at most 2r
    for z0 in domain.centers:
        assert 2 * covering_radius(z0 + np.array(shifts), targets) <= eps
    cells = universal_points(spec, domain, targets, count, eps)
    assert cells.marks.all()


def test_universal_points_bounded_orbit():
    domain = Region.disk(0, 0.9, 0.1)
    cells = universal_points(SQ, domain, [0, 1.5], 64, 0.05)
    assert cells.marked_count == 0


def test_universal_points_identity():
    domain = Region.rect(-1, -1, 1, 1, 0.1)
    net = [0.05, 0.05j]
    cells = universal_points(FamilySpec.list_of(["z"]), domain, net, 1, 0.1)
    c = domain.centers
    expect = np.all(chordal_distance(c[:, None], np.array(net)[None, :]) <= 0.1, axis=1)
    assert np.array_equal(cells.marks, expect)
    assert expect.any()


def test_hull_on_circle_saturates():
    region = Region.circle(0, 1, 2 * math.sin(math.radians(0.5)))
    seed = np.zeros(len(region), bool)
    seed[7] = True
    res = forward_invariant_hull(SQ, CellSet(region, seed), region, 1)
    assert res.saturated and not res.proper and not res.escaped


def test_hull_contracting_is_proper():
    region = Region.disk(0, 1, 0.05)
    seed = np.zeros(len(region), bool)
    seed[region.cell_of([0.1])[0]] = True
    res = forward_invariant_hull(SQ, CellSet(region, seed), region, 4)
    assert res.proper and not res.escaped
    assert res.cells.marks[region.cell_of([0])[0]]
    assert res.cells.marked_count < 10


def test_hull_translation_semigroup_escapes_along_row():
    region = Region.rect(-2, -1, 2, 1, 0.1)
    k = region.cell_of([0.03 + 0.03j])[0]
    seed = np.zeros(len(region), bool)
    seed[k] = True
    res = forward_invariant_hull(FamilySpec.semigroup(["z + 1", "z - 1"]), CellSet(region, seed), region, 2)
    assert res.escaped and "escaped" in res.flags()
    rows = region.cell_ij[res.cells.marks, 1]
    assert np.all(rows == region.cell_ij[k, 1])


def test_hull_empty_seed_rejected():
    region = Region.disk(0, 1, 0.1)
    with pytest.raises(ValueError):
        forward_invariant_hull(SQ, CellSet(region, np.zeros(len(region), bool)), region, 2)


def test_verdict_names():
    assert {NONWANDERING, WANDERING, INCONCLUSIVE} == {
        "nonwandering", "wandering-at-resolution", "inconclusive"}
