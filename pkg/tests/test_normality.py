import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from famdyn.family import FamilySpec
from famdyn.normality import (
    NON_NORMAL, NORMAL, UNDECIDED, classify, fatou_julia, is_normal_at, julia_sidecar, marty_profile,
    montel_consistency, omitted_values, weakly_mixing_equivalence_check,
)
from famdyn.report import HOLDS, PRECONDITION
from famdyn.sets import Region, read_pgm

from oracles import escape_time_julia, marty_sup_powers, marty_sup_square_iterates, unit_circle_distance_px

NZ = FamilySpec.sequence("n*z")
POW = FamilySpec.sequence("z^n")
SQ = FamilySpec.iterates("z^2")
WINDOW = (-1.5, -1.5, 1.5, 1.5)

# frozen oracle values (numerical sup over the closed disk, see oracles.py)
POWERS_SUP_HALF = 1.0  # n = 1 at z = 0; n = 2 peaks at 0.941 on |z| = 0.5


def test_frozen_powers_sup():
    assert marty_sup_powers(0.5, 64) == pytest.approx(POWERS_SUP_HALF, abs=1e-9)


def test_marty_ntimesz():
    p = marty_profile(NZ, 0, 0.1, 64)
    n = np.arange(1, 65)
    assert np.allclose(p.sups, n, rtol=1e-9)
    assert p.slope == pytest.approx(1.0, abs=0.05)


def test_marty_square_iterates_bounded():
    p = marty_profile(SQ, 0, 0.5, 12)
    expect = np.array([marty_sup_square_iterates(0.5, m) for m in range(1, 13)])
    # the 41x41 grid reaches |z| = 0.5 on the axes, where the sup is attained
    assert np.allclose(p.sups, expect, rtol=1e-3, atol=1e-12)
    assert p.sups[-1] < 1e-300 or p.sups[-1] < p.sups[0]


def test_marty_constant_family():
    p = marty_profile(FamilySpec.list_of(["0", "1", "2 + i"]), 0.3, 0.2, 3)
    assert np.all(p.sups == 0)


def test_marty_rejects_radius():
    with pytest.raises(ValueError):
        marty_profile(NZ, 0, 0, 4)


def test_normal_examples():
    r = is_normal_at(NZ, 0, [0.1, 0.05], 64)
    assert r.verdict == NON_NORMAL and "n=64" in r.witnesses
    r = is_normal_at(POW, 0, [0.5], 64)
    assert r.verdict == NORMAL
    assert r.profiles[0].max_sup == pytest.approx(POWERS_SUP_HALF, rel=1e-6)
    r = is_normal_at(POW, 1, [0.1, 0.05], 64)
    assert r.verdict == NON_NORMAL
    # spherical derivative at 1 is n/2
    assert np.all(r.profiles[-1].sups >= np.arange(1, 65) / 2 - 1e-9)


def test_normal_radii_validation():
    with pytest.raises(ValueError):
        is_normal_at(NZ, 0, [0.1, 0.2], 4)
    with pytest.raises(ValueError):
        is_normal_at(NZ, 0, [], 4)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1e9), st.floats(-3, 3), st.floats(1e-4, 1)), min_size=1, max_size=4))
def test_classify_single_valued(rows):
    sups, slopes, radii = zip(*rows)
    v = classify(sups, slopes, radii)
    assert v in (NORMAL, NON_NORMAL, UNDECIDED)
    assert v == classify(sups, slopes, radii)


def test_omitted_powers_band():
    dom, cod = Region.disk(0, 0.9, 0.1), Region.rect(-2, -2, 2, 2, 0.1)
    cells = omitted_values(POW, dom, cod, 64)
    w = cod.centers
    assert cells.marks[np.abs(w) > 0.9 + 0.1].all()
    assert not cells.marks[np.abs(w) < 0.85].any()


def test_exp_omits_zero():
    # |exp(z)| >= e^-2.3 > 0.1 on the domain, so cells of radius 0.02 near 0 stay empty
    dom, cod = Region.disk(-2, 0.3, 0.1), Region.rect(-0.5, -0.5, 0.5, 0.5, 0.02)
    cells = omitted_values(FamilySpec.iterates("exp(z)"), dom, cod, 3)
    assert cells.marks[cod.cell_of([0])[0]]


def test_identity_omits_nothing():
    dom = Region.rect(-1, -1, 1, 1, 0.1)
    assert omitted_values(FamilySpec.list_of(["z"]), dom, dom, 1).marked_count == 0


def test_montel_examples():
    dom, cod = Region.disk(0, 0.9, 0.1), Region.rect(-2, -2, 2, 2, 0.1)
    rep = montel_consistency(POW, dom, cod, 64)
    assert rep.verdict == HOLDS
    assert set(rep.witnesses[0]["verdicts"]) == {NORMAL}
    assert len(rep.witnesses[0]["verdicts"]) == 25
    rep = montel_consistency(NZ, Region.disk(0, 1, 0.1), cod, 64)
    assert rep.verdict == PRECONDITION
    assert rep.witnesses[0]["diagnostic_verdict"] == NON_NORMAL
    rep = montel_consistency(FamilySpec.list_of(["0", "1"]), dom, cod, 2)
    assert rep.verdict == HOLDS


@pytest.mark.parametrize("spec,z0,radii,normal,mixing", [
    (NZ, 0, [0.1, 0.05], NON_NORMAL, HOLDS),
    (POW, 0, [0.1, 0.05], NORMAL, "fails-at-resolution"),
    (POW, 1, [0.1, 0.05], NON_NORMAL, HOLDS),
])
def test_meyrath_examples(spec, z0, radii, normal, mixing):
    rep = weakly_mixing_equivalence_check(spec, z0, radii, [0.5, 0.3j], [2, -1.5], 0.1, budget=64)
    assert rep.verdict == HOLDS
    assert rep.witnesses[0]["normality"] == normal
    assert rep.witnesses[0]["weakly_mixing"] == mixing


def to_image(cells):
    return read_pgm(cells.to_pgm()) > 0


def test_julia_square_near_unit_circle():
    px = 96
    cells = fatou_julia(SQ, WINDOW, px, budget=64)
    img = to_image(cells)
    dist = unit_circle_distance_px(WINDOW, px)
    assert img.any()
    assert dist[img].max() <= 2.0
    assert cells.is_grid_closed()


def test_julia_powers_sequence_same_circle():
    # the band around |z| = 1 narrows like 1/budget for this sequence
    px = 64
    a = to_image(fatou_julia(POW, WINDOW, px, budget=256))
    dist = unit_circle_distance_px(WINDOW, px)
    assert a.any() and dist[a].max() <= 2.0
    assert a[dist <= 0.5].all()


def test_julia_basilica_agrees_with_escape_time_coarse():
    # the 256-pixel, 97% check lives in the acceptance suite; this is the 128-pixel corpus setting
    px = 128
    cells = fatou_julia(FamilySpec.iterates("z^2 - 1"), WINDOW, px, budget=64)
    img = to_image(cells)
    oracle = escape_time_julia(-1, WINDOW, px)
    assert np.mean(img == oracle) >= 0.96
    side = julia_sidecar(cells)
    assert side["marked_count"] == int(img.sum())


def test_julia_needs_pixels():
    with pytest.raises(ValueError):
        fatou_julia(SQ, WINDOW, 8)
