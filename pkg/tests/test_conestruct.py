import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conelab import chamberwalk as cw
from conelab import conestruct as cs
from conelab import exactq as q
from conelab import groupact as ga
from conelab import polycone as pc
from conelab.varmodel import relative_instance, trivial_subspace
from oracles import in_union_toy


def test_relative_movable_examples(toy, i2, quadric):
    mov = cs.relative_movable_cone(toy)
    assert set(mov.base.facets) == {(1, 0), (0, 1)} and mov.strict == ((1, 1),)
    mov = cs.relative_movable_cone(i2)
    assert mov.base.dimension == 2 and not mov.base.facets and mov.strict == ((1, 0),)
    # no vertical divisors: only the strict F condition survives
    mov = cs.relative_movable_cone(quadric)
    rel = relative_instance(quadric)
    assert mov.base.dimension == rel.rank and not mov.base.facets
    assert mov.strict == (rel.curve_functional(rel.fibre),)


def test_quadric_seed_relative_nef_cone(quadric):
    # the 56 component classes cut the seed chamber in the quotient, and all lie in F^perp-complement
    rel = relative_instance(quadric)
    rows = {q.primitive(rel.curve_functional(q.vector(c))) for c in rel.seed_frame}
    assert len(rel.seed_frame) == 56
    cone = pc.from_inequalities(list(rows), rel.rank)
    assert cone.is_full_dimensional
    assert all(rel.pair(r, rel.fibre) > 0 for r in cone.rays)


@pytest.mark.parametrize("x, ok, tag", [((1, 1), True, "strict"), ((-1, 1), True, "ray"), ((-1, 0), False, None), ((0, 0), True, "zero")])
def test_effective_examples(toy, x, ok, tag):
    assert cs.effective_membership(cs.effective_predicate(toy), x) == (ok, tag)


def test_effective_grid_against_hand_oracle(toy):
    pred = cs.effective_predicate(toy)
    for a in range(-20, 21):
        for b in range(-20, 21):
            assert cs.effective_membership(pred, (a, b))[0] == in_union_toy((a, b))


def test_movable_members_are_effective(toy, i2):
    for inst in (toy, i2):
        mov = cs.relative_movable_cone(inst)
        pred = cs.effective_predicate(inst)
        for r in mov.base.generators:
            if pc.membership(mov, r):
                assert cs.effective_membership(pred, r) == (True, "strict")


def test_pullback_examples(toy, quadric):
    assert cs.pullback_witness(toy, (1, 1)).lambdas == (1,)
    w = cs.pullback_witness(toy, (1, 0))
    assert not w.is_pullback and w.violating_index == 0
    assert cs.pullback_witness(quadric, ()).lambdas == ()


@given(st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=4), min_size=2, max_size=2))
def test_pullback_dichotomy(toy, r):
    w = cs.pullback_witness(toy, r)
    x = q.add(q.scale(r[0], toy.vertical[0]), q.scale(r[1], toy.vertical[1]))
    pairings = [toy.pair(x, f) for f in toy.fibral]
    assert w.is_pullback != (w.violating_index is not None)
    if w.is_pullback:
        assert all(p == 0 for p in pairings)
        assert r == [w.lambdas[0] * m for m in toy.mu]
    else:
        assert pairings[w.violating_index] < 0


def test_lift_of_h(quadric):
    _, quotient = trivial_subspace(quadric)
    h = (1,) + (0,) * 8
    rep = cs.lift_to_absolute(quadric, q.matvec(quotient, h))
    assert rep.m == 1 and rep.nus == (0,)
    assert rep.lifted_class == h


def test_lift_rejects_non_movable(quadric, i2):
    rel = relative_instance(quadric)
    with pytest.raises(cw.PreconditionError):
        cs.lift_to_absolute(quadric, q.neg(rel.curve_functional(rel.fibre)))
    assert cs.lift_to_absolute(i2, (1, 3)).m == 1


def test_lift_properties(quadric):
    rel = relative_instance(quadric)
    _, quotient = trivial_subspace(quadric)
    a = quadric.ample_pullbacks[0]
    rng = random.Random(2)
    for _ in range(6):
        y = tuple(Fraction(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(rel.rank))
        if rel.pair(y, rel.fibre) <= 0:
            continue
        rep = cs.lift_to_absolute(quadric, y)
        assert q.matvec(quotient, rep.lifted_class) == q.scale(rep.m, y)
        assert cw.movable_precheck(quadric, rep.lifted_class)[0]
        nu = rep.nus[0]
        if nu:
            assert not cw.movable_precheck(quadric, q.sub(rep.lifted_class, a))[0]
        base = q.sub(rep.lifted_class, q.scale(nu, a))
        for m in range(1, rep.m):
            assert not q.is_integral(q.scale(Fraction(m, rep.m), base))


def test_build_k_examples(i2, toy):
    k = cs.build_k(i2, [(0,), (1,)])
    assert set(k.cone.rays) == {(1, 0), (1, 1)}
    assert pc.equal_cones(k.cone, cw.nef_cone(i2, cw.seed_chamber(i2)))
    k = cs.build_k(toy)
    assert set(k.cone.rays) == {(1, 0), (0, 1)} and k.cell_kind == "point"
    assert cs.build_k(i2, []).cone.is_trivial


def test_build_k_certificate_and_coverage(i2):
    k = cs.build_k(i2)
    mov = cs.relative_movable_cone(i2)
    for ray, t, _ in k.bounds:
        assert t > 0 and mov.base.contains(ray)
    rep = ga.fundamental_domain_check(i2, k.cone, samples=1000)
    assert rep.covered == 1000


def test_build_k_rejects_wrong_dimension(i2):
    with pytest.raises(q.DimensionError):
        cs.build_k(i2, [(0, 0)])


def test_build_u_i2(i2):
    targets = cs.chain_chambers(i2, 11)
    u = cs.build_u(i2, None, targets)
    assert len(u.covering) == 1 and u.covering_complete
    assert len(u.record) == 11
    for entry in u.record:
        assert u.cone.contains(entry.point)
        image = q.matvec(entry.element.matrix, entry.point)
        assert pc.membership(cw.chamber_cone(i2, entry.chamber), image, "interior")
    assert u.record[7].element.label == "tau^7"


def test_build_u_toy(toy):
    u = cs.build_u(toy, None, cs.chain_chambers(toy, 1))
    assert pc.equal_cones(u.cone, cs.relative_movable_cone(toy).base)
    assert len(u.covering) == 1


def test_partial_covering_is_flagged(i2):
    wide = [(1, -6), (1, 6)]
    u = cs.build_u(i2, wide, (), cap=3, partial=True)
    assert not u.covering_complete
    with pytest.raises(cw.GuardTripped):
        cs.build_u(i2, wide, (), cap=3)


def test_quadric_lifted_k_generators(quadric):
    k = cs.build_k(quadric)
    gens = cs.lift_k_generators(quadric, k.cone.rays)
    _, quotient = trivial_subspace(quadric)
    rel = relative_instance(quadric)
    for r, g in zip(k.cone.rays, gens):
        assert quadric.pair(g, quadric.fibre) > 0
        assert all(q.dot(f, g) > 0 for _, f in cw.ray_functionals(quadric))
        image = q.matvec(quotient, g)
        assert q.rank((q.vector(r), image)) == 1 and rel.pair(image, rel.fibre) > 0
