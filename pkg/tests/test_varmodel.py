import copy
import json
from itertools import combinations

import pytest

from conelab import exactq as q
from conelab import varmodel as vm


def doc(name):
    return json.loads(vm.bundled_path(name).read_text(encoding="utf-8"))


def test_toy_identities(toy):
    assert toy.n == 2 and len(toy.partition) == 1
    assert q.add(toy.fibral[0], toy.fibral[1]) == toy.fibre
    assert toy.multiplicities == (1, 1)
    assert vm.structural_violations(toy) == []


def test_flipped_pairing_is_named():
    d = doc("toy-vertical")
    d["vertical_divisors"][0] = ["1", "1"]
    with pytest.raises(vm.InstanceError) as err:
        vm.load_and_validate(json.dumps(d))
    assert "D_i·F_i < 0 violated at i=1" in err.value.violations


def test_every_violation_is_reported():
    d = doc("toy-vertical")
    d["vertical_divisors"] = [["1", "1"], ["1", "1"]]
    with pytest.raises(vm.InstanceError) as err:
        vm.load_and_validate(json.dumps(d))
    assert len(err.value.violations) >= 2


@pytest.mark.parametrize(
    "edit, path",
    [
        (lambda d: d.update(colour="red"), "colour"),
        (lambda d: d.pop("pairing"), "pairing"),
        (lambda d: d.update(fibre_class=["1", "x"]), "fibre_class[1]"),
        (lambda d: d.update(fibre_class=["1"]), "fibre_class"),
        (lambda d: d["k_negative_rays"].append({"curve": ["1", "0"], "mori_type": 9}), "k_negative_rays[0]"),
    ],
)
def test_schema_errors_carry_a_path(edit, path):
    d = doc("toy-vertical")
    edit(d)
    with pytest.raises(vm.SchemaError) as err:
        vm.parse_instance(json.dumps(d))
    assert path in str(err.value)


def test_rationals_parse_exactly():
    d = doc("toy-vertical")
    d["pullback_coeffs_mu"] = ["3/6", "1/2"]
    inst = vm.parse_instance(json.dumps(d))
    assert inst.mu == (q.Fraction(1, 2), q.Fraction(1, 2))


def test_quadric_from_intersection_theory(quadric):
    # F = (2H - sum E)^2 = 4l - sum e; K = -4H + 2 sum E; H.l = 1, E_i.e_i = -1
    e = lambda i: tuple(1 if k == i else 0 for k in range(9))  # noqa: E731
    assert quadric.fibre == (4,) + (-1,) * 8
    assert quadric.pair(quadric.canonical_class, quadric.fibre) == 0
    for i in range(1, 9):
        assert quadric.pair(e(i), e(i)) == -1
    assert quadric.pair(e(0), e(0)) == 1
    expected = set()
    for i, j in combinations(range(1, 9), 2):
        line = tuple(1 if k == 0 else (-1 if k in (i, j) else 0) for k in range(9))
        cubic = tuple(3 if k == 0 else (0 if k in (i, j) else -1) for k in range(9))
        expected |= {line, cubic}
    assert {tuple(c) for c in quadric.seed_frame} == expected
    assert len(vm.reducible_fibre_pairs(quadric)) == 28


def test_quadric_trivial_subspace(quadric):
    basis, quotient = vm.trivial_subspace(quadric)
    assert len(basis) == 1
    assert q.primitive(basis[0]) in {(2,) + (-1,) * 8, (-2,) + (1,) * 8}
    rows = [quadric.curve_functional(g) for g in quadric.fibral_classes()]
    oracle = q.kernel_basis(rows)
    assert q.rank(tuple(oracle) + tuple(basis)) == 1
    assert q.matvec(quotient, basis[0]) == q.zeros(len(quotient))


def test_toy_trivial_subspace_is_empty(toy):
    basis, quotient = vm.trivial_subspace(toy)
    assert basis == () and quotient == q.identity(2)


def test_single_fibral_class_gives_hyperplane():
    d = doc("i2-chain")
    d["is_relative"] = False
    d["seed_chamber"] = {"wall_frame": [d["fibre_class"]]}
    inst = vm.parse_instance(json.dumps(d))
    basis, _ = vm.trivial_subspace(inst)
    assert len(basis) == inst.rank - 1


def test_relative_instance_pushes_classes(quadric):
    rel = vm.relative_instance(quadric)
    assert rel.is_relative
    assert rel.rank == quadric.rank - len(vm.trivial_subspace(quadric)[0])
    _, quotient = vm.trivial_subspace(quadric)
    for d in (quadric.canonical_class, (1,) + (0,) * 8):
        for c in quadric.seed_frame[:6]:
            assert rel.pair(q.matvec(quotient, d), vm.relative_curve(quadric, c)) == quadric.pair(d, c)


def test_frames_span_the_same_fibral_space(i2):
    from conelab.chamberwalk import cross_wall, seed_chamber

    seed = seed_chamber(i2)
    other = cross_wall(i2, seed, seed.frame[1])
    r = q.rank(tuple(seed.frame))
    assert q.rank(tuple(seed.frame) + tuple(other.frame)) == r


def test_flop_maps_are_involutions_fixing_f(i2, quadric):
    for inst in (i2, quadric):
        for c in inst.seed_frame:
            if inst.is_divisorial_wall(c):
                continue
            t = inst.flop_rule.map_for(c)
            assert q.matvec(t, c) == q.neg(q.vector(c))
            assert q.matvec(t, inst.fibre) == inst.fibre
            assert q.matmul(t, t) == q.identity(inst.rank)


def test_fibral_span_rank_identity(toy, quadric):
    assert vm.fibral_span_rank(toy) == toy.n
    # 56 classes, 28 relations F = a + b, so span is 28 + 1
    assert vm.fibral_span_rank(quadric) == min(29, quadric.rank - 1)


def test_documents_round_trip_through_deepcopy():
    d = doc("quadric-net")
    assert vm.parse_instance(json.dumps(copy.deepcopy(d))) == vm.parse_instance(json.dumps(d))
