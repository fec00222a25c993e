import dataclasses

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conelab import exactq as q
from conelab import polycone as pc
from conelab import rayclass as rc
from conelab.rayclass import RayRecord

L = (1,) + (0,) * 8


def e(i):
    return tuple(int(k == i) for k in range(9))


def blowups(inst):
    return [r for r in inst.k_negative_rays if r.exceptional_divisor is not None]


def test_exceptional_lines_are_divisorial(quadric):
    assert len(blowups(quadric)) == 8
    for ray in blowups(quadric):
        res = rc.classify_ray(quadric, ray)
        assert res.coarse == "divisorial" and res.consistent
        assert res.k_pairing == -2


def test_covering_lines_are_fibre_type(quadric):
    for ray in quadric.k_negative_rays[8:]:
        res = rc.classify_ray(quadric, ray)
        assert res.coarse == "fibre_type" and res.consistent


def test_frame_classes_are_k_trivial(quadric):
    for c in quadric.seed_frame[:8]:
        res = rc.classify_ray(quadric, RayRecord(c, "k_trivial"))
        assert res.coarse == "k_trivial" and res.consistent and res.k_pairing == 0


def test_declared_types_are_checked(quadric):
    res = rc.classify_ray(quadric, RayRecord(e(1), 3))
    assert not res.consistent and "type 3 requires an exceptional divisor" in res.issues
    res = rc.classify_ray(quadric, RayRecord(quadric.seed_frame[0], 2, e(1)))
    assert not res.consistent
    res = rc.classify_ray(quadric, RayRecord(e(1), "fibre", e(1)))
    assert not res.consistent


def test_k_positive_rays_are_rejected(quadric):
    with pytest.raises(ValueError, match="not a K-negative or K-trivial ray"):
        rc.classify_ray(quadric, RayRecord(q.neg(e(1)), 2, e(1)))
    with pytest.raises(ValueError):
        rc.classify_ray(quadric, RayRecord((0,) * 9, 2))


@given(st.integers(1, 40), st.integers(0, 7))
def test_coarse_class_ignores_scaling(quadric, k, i):
    ray = quadric.k_negative_rays[i]
    scaled = RayRecord(q.scale(k, ray.curve), ray.mori_type, ray.exceptional_divisor)
    assert rc.classify_ray(quadric, scaled).coarse == rc.classify_ray(quadric, ray).coarse
    c = quadric.seed_frame[i]
    assert rc.classify_ray(quadric, RayRecord(q.scale(k, c), "k_trivial")).coarse == "k_trivial"


def test_k_trivial_face_of_quadric(quadric):
    res = rc.k_trivial_face(quadric)
    assert res.verdict == "equal" and res.witness is None
    gens = [q.vector(r.curve) for r in quadric.k_negative_rays] + list(quadric.seed_frame)
    big = pc.from_generators(gens, 9)
    assert pc.contains_cone(big, res.face)
    k = quadric.divisor_functional(quadric.canonical_class)
    assert all(q.dot(k, g) <= 0 for g in gens)
    assert all(q.dot(k, g) == 0 for g in res.face.generators)


def test_extra_k_trivial_generator_is_found(quadric):
    # l - 2 e1 has K-degree -4 + 4 = 0 but is not a sum of fibre components
    extra = RayRecord((1, -2) + (0,) * 7, "k_trivial")
    inst = dataclasses.replace(quadric, k_negative_rays=quadric.k_negative_rays + (extra,))
    res = rc.k_trivial_face(inst)
    assert res.verdict == "unequal" and res.witness is not None
    assert not res.relative_cone.contains(res.witness)


def test_no_k_negative_rays(i2):
    res = rc.k_trivial_face(i2)
    assert res.verdict == "equal"
    assert pc.equal_cones(res.face, pc.from_generators(i2.seed_frame, 2))


def test_finiteness_on_blowup_divisors(quadric):
    rep = rc.type_finiteness_check(quadric, blowups(quadric))
    assert rep.ok and rep.pairs_checked == 28
    assert rep.independent_divisors == 8 and rep.bound == 8


def test_shared_divisor_is_flagged(quadric):
    a, b = quadric.k_negative_rays[:2]
    twin = RayRecord(b.curve, 2, a.exceptional_divisor)
    rep = rc.type_finiteness_check(quadric, [a, twin])
    assert not rep.ok and rep.flagged_pairs[0][:2] == (0, 1)
    assert "share" in rep.flagged_pairs[0][2]


def test_independence_bound(quadric):
    extra = RayRecord(L, 2, L)
    rep = rc.type_finiteness_check(quadric, blowups(quadric) + [extra])
    assert rep.independent_divisors == 9 and not rep.within_bound and not rep.ok


def test_records_need_divisors(quadric):
    with pytest.raises(ValueError):
        rc.type_finiteness_check(quadric, [RayRecord(e(1), 2)])


@given(st.permutations(range(4)))
def test_flags_are_symmetric(quadric, order):
    a, b, c = quadric.k_negative_rays[:3]
    records = [a, b, c, RayRecord(a.curve, 2, b.exceptional_divisor)]
    base = rc.type_finiteness_check(quadric, records)
    perm = [records[i] for i in order]
    rep = rc.type_finiteness_check(quadric, perm)
    flagged = {frozenset((order[i], order[j])) for i, j, _ in rep.flagged_pairs}
    assert flagged == {frozenset((i, j)) for i, j, _ in base.flagged_pairs}


def test_describe(quadric):
    ray = quadric.k_negative_rays[0]
    assert "divisorial" in rc.describe(rc.classify_ray(quadric, ray), ray)
