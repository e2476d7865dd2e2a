import math

import numpy as np
import pytest

from famdyn.family import FamilySpec
from famdyn.report import FAILS, HOLDS, PAIRING_FAILED, PRECONDITION
from famdyn.sets import PointSet, Region
from famdyn.sphere import INF, chordal_distance
from famdyn.transitivity import (
    closure_contains, compact_transitive_witness, dense_preimage_test, expanding_implies_transitive_check,
    is_expanding_at, is_minimal, is_transitive, is_transitive_at, is_weakly_mixing_at,
    transitivity_transfer_check,
)

from oracles import covering_radius, spiral_lattice

SQ = FamilySpec.iterates("z^2")
NZ = FamilySpec.sequence("n*z")
POW = FamilySpec.sequence("z^n")
PLUS1 = FamilySpec.sequence("z^n + 1")
ROT = FamilySpec.sequence("exp(2*pi*i*n*t)*z", params={"t": math.sqrt(2) - 1})
CIRCLE = Region.circle(0, 1, 0.1)
D09 = Region.disk(0, 0.9, 0.1)

H, COUNT = 0.06, 200
SHIFTS = spiral_lattice(H, COUNT)
TRANSLATIONS = FamilySpec.list_of([f"z + ({s.real!r} + {s.imag!r}*i)" for s in SHIFTS])
T_DOMAIN = Region.rect(-0.05, -0.05, 0.05, 0.05, 0.02)
T_NET = Region.rect(-0.3, -0.3, 0.3, 0.3, 0.1)


def disk_samples(r, rings=12, per=48):
    """Polar net of the closed disk D(0, r), boundary included."""
    rho = r * np.linspace(0, 1, rings + 1)[1:]
    pts = [0j] + [p * np.exp(2j * np.pi * k / per) for p in rho for k in range(per)]
    return PointSet(pts)


def test_translation_oracle_covers_net():
    for z0 in T_DOMAIN.centers:
        assert 2 * covering_radius(z0 + np.array(SHIFTS), T_NET.centers) <= 0.1


# ---------------------------------------------------------------- transitive at a point


def test_ntimesz_transitive_at_zero():
    net = Region.rect(-10, -10, 10, 10, 0.5)
    radii = [0.5, 0.2]
    rep = is_transitive_at(NZ, 0, radii, net, 0.1, budget=128)
    assert rep.verdict == HOLDS
    # oracle: n = ceil(2|w|/r) maps D(0, r) onto a disk containing w
    w_max = max(abs(w) for w in net.centers)
    assert math.ceil(2 * w_max / radii[-1]) <= 128 + 14


def test_shifted_powers_miss_far_target():
    # images of D(0.5, r) stay within |w - 1| <= 2.2, so w = -5 is out of reach
    rep = is_transitive_at(PLUS1, 0.5, [0.1, 0.05], [-5], 0.05, budget=128)
    assert rep.verdict == FAILS


def test_rotation_transitive_wrt_circle():
    net = Region.rect(-1.5, -1.5, 1.5, 1.5, 0.1)
    rep = is_transitive_at(ROT, 1, [0.1, 0.05], net, 0.1, B=CIRCLE, budget=512)
    assert rep.verdict == HOLDS
    assert rep.params["wrt"] == CIRCLE.describe()
    assert rep.params["targets"] < len(net)


def test_empty_net_after_filter_rejected():
    with pytest.raises(ValueError):
        is_transitive_at(ROT, 1, [0.1], [5], 0.01, B=CIRCLE)
    with pytest.raises(ValueError):
        is_transitive_at(ROT, 1, [], [1], 0.1)


# ---------------------------------------------------------------- transitive, minimal


def test_translations_transitive_and_minimal():
    assert is_transitive(TRANSLATIONS, T_DOMAIN, T_NET, 0.1, budget=COUNT).verdict == HOLDS
    assert is_minimal(TRANSLATIONS, T_DOMAIN, T_NET, COUNT, 0.1).verdict == HOLDS


def test_square_on_disk_not_transitive_nor_minimal():
    net = [0.5, 1.5]
    assert is_transitive(SQ, D09, net, 0.1, budget=64).verdict == FAILS
    rep = is_minimal(SQ, D09, net, 64, 0.1)
    assert rep.verdict == FAILS
    assert abs(rep.witnesses[0]["orbit_tail"]) < 1e-6


def test_square_on_circle_transitive_and_minimal():
    assert is_transitive(SQ, CIRCLE, CIRCLE, 0.1, B=CIRCLE, budget=16).verdict == HOLDS


def test_rotation_minimal_on_circle():
    assert is_minimal(ROT, CIRCLE, CIRCLE, 512, 0.1).verdict == HOLDS


def test_minimal_implies_every_cell_universal():
    from famdyn.orbits import universal_points
    rep = is_minimal(ROT, CIRCLE, CIRCLE, 512, 0.1)
    cells = universal_points(ROT, CIRCLE, CIRCLE.centers, 512, 0.1)
    assert (rep.verdict == HOLDS) == bool(cells.marks.all())


# ---------------------------------------------------------------- dense preimages


def test_dense_preimage_on_circle():
    # roots-of-unity oracle: the 2^n preimages of a unit point are spaced 2*pi/2^n apart
    n = 6
    assert 2 * math.pi / 2**n < CIRCLE.cell_radius * 2
    assert dense_preimage_test(SQ, CIRCLE, CIRCLE, 8, 0.1).verdict == HOLDS


def test_dense_preimage_square_misses_far_ball():
    rep = dense_preimage_test(SQ, [2], D09, 16, 0.1)
    assert rep.verdict == FAILS


# ---------------------------------------------------------------- weak mixing


def test_weakly_mixing_examples():
    n1, n2 = [0.5, 0.3j], [2, -1.5]
    assert is_weakly_mixing_at(NZ, 0, [0.1, 0.05], n1, n2, 0.1, budget=256).verdict == HOLDS
    assert is_weakly_mixing_at(SQ, 0.3, [0.1], [0], [2], 0.05, budget=64).verdict == FAILS
    assert is_weakly_mixing_at(POW, 1, [0.1, 0.05], n1, n2, 0.1, budget=256).verdict == HOLDS


def test_weakly_mixing_needs_nets():
    with pytest.raises(ValueError):
        is_weakly_mixing_at(NZ, 0, [0.1], [], [1], 0.1)


# ---------------------------------------------------------------- expanding


def test_ntimesz_expanding():
    K = Region.disk(0, 10, 2.0).centers
    rep = is_expanding_at(NZ, 0, K, [INF], [0.5, 0.2], budget=128)
    assert rep.verdict == HOLDS
    # n D(0, r) contains D(0, 10 + cell) once n r exceeds the K extent
    kmax = np.abs(K).max()
    for wit in rep.witnesses:
        r = wit["radius"]
        assert all(int(lab.split("=")[1]) * r > kmax for lab in wit["covering_members"])


def test_square_iterates_not_expanding():
    K = Region.disk(0, 1.5, 0.5).centers
    assert is_expanding_at(SQ, 0.5, K, [], [0.1], budget=32).verdict == FAILS


def test_powers_expanding_at_one():
    K = Region.annulus(0, 0.5, 2, 0.3).centers
    assert is_expanding_at(POW, 1, K, [0, INF], [0.3, 0.1], budget=256).verdict == HOLDS


def test_expanding_rejects_K_touching_E():
    with pytest.raises(ValueError):
        is_expanding_at(POW, 1, [0, 1], [0], [0.1])


@pytest.mark.parametrize("spec,z0,K,E,radii,net", [
    (NZ, 0, Region.disk(0, 10, 2.0), [INF], [0.5, 0.2], Region.rect(-10, -10, 10, 10, 0.5)),
    (POW, 1, Region.annulus(0, 0.5, 2, 0.3), [0, INF], [0.3, 0.1], Region.annulus(0, 0.5, 2, 0.3)),
])
def test_expanding_implies_transitive(spec, z0, K, E, radii, net):
    rep = expanding_implies_transitive_check(spec, z0, K.centers, E, radii, net, 0.5, budget=256)
    assert rep.verdict == HOLDS


def test_expanding_implication_precondition():
    rep = expanding_implies_transitive_check(SQ, 0.5, Region.disk(0, 1.5, 0.5).centers, [], [0.1],
                                             [0.5], 0.1, budget=16)
    assert rep.verdict == PRECONDITION


# ---------------------------------------------------------------- compact witnesses


def test_compact_witness_constructed_list():
    z0, V = 0.2 + 0.1j, (1 + 1j, 0.1)
    cs = [complex(V[0] + 0.05 * np.exp(2j * np.pi * k / 5)) for k in range(5)]
    members = [f"({c.real!r}+{c.imag!r}*i) + (z - ({z0.real!r}+{z0.imag!r}*i))*{h}"
               for c, h in zip(cs, [1, 2, 3, 4, 5])]
    lab, val = compact_transitive_witness(FamilySpec.list_of(members), z0, (z0, 0.1), V, 5, 0.0)
    assert lab == "m1" and chordal_distance(val, cs[0]) < 1e-12


def test_compact_witness_square():
    # V = D(0, 0.1) with slack 0.05: chordal(0.5^4, 0) = 0.1248 qualifies, chordal(0.5^2, 0) = 0.485 does not
    lab, val = compact_transitive_witness(SQ, 0.5, (0.5, 0.1), (0, 0.1), 16, 0.05)
    assert lab == "f^2" and val == pytest.approx(0.0625)
    assert compact_transitive_witness(SQ, 0.5, (0.5, 0.1), (5, 0.1), 64, 0.01) is None
    with pytest.raises(ValueError):
        compact_transitive_witness(SQ, 0.5, (0, 0.1), (0, 0.1), 4, 0.0)


# ---------------------------------------------------------------- transfer


def test_transfer_agreement():
    z0 = 0.0
    G = FamilySpec.list_of([f"z + ({s.real!r} + {s.imag!r}*i) + (z - {z0})^2*0.01" for s in SHIFTS])
    rep = transitivity_transfer_check(TRANSLATIONS, G, "agreement", z0, [0.05], T_NET, 0.1, budget=COUNT)
    assert rep.verdict == HOLDS
    assert len(rep.witnesses[0]["pairing"]) == COUNT


def test_transfer_proximity():
    G = FamilySpec.list_of([f"z + ({s.real!r} + {s.imag!r}*i) + 0.000001" for s in SHIFTS])
    rep = transitivity_transfer_check(TRANSLATIONS, G, "proximity", 0, [0.05], T_NET, 0.1,
                                      budget=COUNT, pair_eps=1e-5)
    assert rep.verdict == HOLDS


def test_transfer_pairing_failed():
    G = FamilySpec.list_of(["z + 7"])
    rep = transitivity_transfer_check(TRANSLATIONS, G, "agreement", 0, [0.05], T_NET, 0.1, budget=COUNT)
    assert rep.verdict == PAIRING_FAILED


def test_transfer_precondition_and_mode():
    rep = transitivity_transfer_check(SQ, SQ, "agreement", 0.5, [0.1], [5], 0.05, budget=16)
    assert rep.verdict == PRECONDITION
    with pytest.raises(ValueError):
        transitivity_transfer_check(SQ, SQ, "psychic", 0.5, [0.1], [5], 0.05)
    with pytest.raises(ValueError):
        transitivity_transfer_check(SQ, SQ, "proximity", 0.5, [0.1], [5], 0.05)


# ---------------------------------------------------------------- closure


def test_closure_square_iterates_to_zero():
    samples = disk_samples(0.9)
    ok, lab = closure_contains(SQ, "0", samples, 1e-3, 64)
    # oracle: chordal distance of w from 0 is 2|w|/sqrt(1+|w|^2); first m with 0.9^(2^m) small enough
    m = next(m for m in range(1, 20) if 2 * 0.9 ** (2**m) / math.sqrt(1 + 0.9 ** (2 ** (m + 1))) <= 1e-3)
    assert ok and lab == f"f^{m}" and m == 7


def test_closure_shifted_powers_to_one():
    ok, lab = closure_contains(PLUS1, "1", disk_samples(0.5), 1e-2, 64)
    assert ok and lab == "n=7"


def test_closure_range_bound():
    assert closure_contains(SQ, "5", disk_samples(0.9), 1e-3, 256) == (False, None)


# ---------------------------------------------------------------- budget monotonicity


@pytest.mark.parametrize("check", [
    lambda b, e: is_transitive_at(NZ, 0, [0.2], Region.rect(-5, -5, 5, 5, 0.5), e, budget=b),
    lambda b, e: is_weakly_mixing_at(POW, 1, [0.1], [0.5], [2], e, budget=b),
    lambda b, e: is_minimal(ROT, CIRCLE, CIRCLE, b, e),
    lambda b, e: dense_preimage_test(SQ, CIRCLE, CIRCLE, b // 16, e),
])
def test_holds_survives_doubled_budget(check):
    base = check(128, 0.1)
    assert base.verdict == HOLDS
    assert check(256, 0.1).verdict == HOLDS


def test_nonwandering_survives_doubled_budget():
    from famdyn.orbits import NONWANDERING, is_nonwandering
    for b in (16, 32):
        assert is_nonwandering(POW, 1, [0.1, 0.01], b).verdict == NONWANDERING
