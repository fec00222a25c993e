"""Numerical checks on extremal rays: coarse classification and finiteness data.

Fine Mori types are declared, never inferred; lattice numerics cannot tell
some of them apart, so they are only checked for consistency.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from . import exactq as q
from . import polycone as pc
from .varmodel import RayRecord, VarietyInstance, fmt_vec

__all__ = [
    "RayRecord",
    "RayClassification",
    "classify_ray",
    "k_trivial_face",
    "type_finiteness_check",
]

DIVISORIAL_TYPES = (2, 3, 4, 5)


@dataclass(frozen=True)
class RayClassification:
    coarse: str  # "k_trivial", "divisorial" or "fibre_type"
    k_pairing: object
    consistent: bool
    issues: tuple


def classify_ray(inst: VarietyInstance, ray: RayRecord) -> RayClassification:
    c = q.vector(ray.curve)
    if q.is_zero(c):
        raise ValueError("ray class must be nonzero")
    kc = inst.pair(inst.canonical_class, c)
    if kc > 0:
        raise ValueError(f"not a K-negative or K-trivial ray: K.c = {q.format_rational(kc)}")
    d = ray.exceptional_divisor
    dc = inst.pair(d, c) if d is not None else None
    if kc == 0:
        coarse = "k_trivial"
    elif dc is not None and dc < 0:
        coarse = "divisorial"
    else:
        coarse = "fibre_type"
    issues = []
    t = ray.mori_type
    if t == "k_trivial":
        if kc != 0:
            issues.append("declared K-trivial but K.c != 0")
    elif kc == 0:
        issues.append(f"declared type {t} but K.c = 0")
    elif t == "fibre":
        if coarse != "fibre_type":
            issues.append("declared a fibre-type ray but an exceptional divisor is negative on it")
    else:
        if t in DIVISORIAL_TYPES and d is None:
            issues.append(f"type {t} requires an exceptional divisor")
        if d is not None and dc >= 0:
            issues.append(f"type {t} requires D.c < 0, found {q.format_rational(dc)}")
    return RayClassification(coarse, kc, not issues, tuple(issues))


@dataclass(frozen=True)
class FaceComparison:
    face: pc.PolyCone
    relative_cone: pc.PolyCone
    verdict: str  # "equal" or "unequal"
    witness: Optional[tuple]


def k_trivial_face(inst: VarietyInstance, frame: Optional[Sequence] = None) -> FaceComparison:
    """The face K^perp of the curve cone, compared with the relative curve cone."""
    frame = tuple(q.vector(c) for c in (inst.seed_frame if frame is None else frame))
    gens = [q.vector(r.curve) for r in inst.k_negative_rays] + list(frame)
    k = inst.divisor_functional(inst.canonical_class)
    values = [q.dot(k, g) for g in gens]
    if all(v <= 0 for v in values):
        face = pc.from_generators([g for g, v in zip(gens, values) if v == 0], inst.rank)
    else:
        face = pc.from_inequalities(pc.from_generators(gens, inst.rank).inequalities, inst.rank, [k])
    rel = pc.from_generators(frame, inst.rank)
    if pc.equal_cones(face, rel):
        return FaceComparison(face, rel, "equal", None)
    witness = next((g for g in face.generators if not rel.contains(g)), None)
    if witness is None:
        witness = next(g for g in rel.generators if not face.contains(g))
    return FaceComparison(face, rel, "unequal", tuple(witness))


@dataclass(frozen=True)
class FinitenessReport:
    pairs_checked: int
    flagged_pairs: tuple  # ((i, j, reason), ...)
    independent_divisors: int
    bound: int

    @property
    def within_bound(self) -> bool:
        return self.independent_divisors <= self.bound

    @property
    def ok(self) -> bool:
        return not self.flagged_pairs and self.within_bound


def type_finiteness_check(inst: VarietyInstance, records: Sequence[RayRecord]) -> FinitenessReport:
    """Pairwise disjointness and the rank bound for type 2-5 exceptional divisors."""
    for i, r in enumerate(records):
        if r.exceptional_divisor is None:
            raise ValueError(f"record {i} has no exceptional divisor")
    picked = [(i, r) for i, r in enumerate(records) if r.mori_type in DIVISORIAL_TYPES]
    flagged = []
    checked = 0
    for a in range(len(picked)):
        for b in range(a + 1, len(picked)):
            i, ri = picked[a]
            j, rj = picked[b]
            checked += 1
            reasons = []
            if q.vector(ri.exceptional_divisor) == q.vector(rj.exceptional_divisor):
                reasons.append("records share an exceptional divisor")
            x = inst.pair(ri.exceptional_divisor, rj.curve)
            y = inst.pair(rj.exceptional_divisor, ri.curve)
            if x != 0 or y != 0:
                reasons.append(
                    f"D_{i}.c_{j} = {q.format_rational(x)}, D_{j}.c_{i} = {q.format_rational(y)}"
                )
            if reasons:
                flagged.append((i, j, "; ".join(reasons)))
    divisors = tuple(q.vector(r.exceptional_divisor) for _, r in picked)
    independent = q.rank(divisors) if divisors else 0
    return FinitenessReport(checked, tuple(flagged), independent, inst.rank - 1)


def describe(rc: RayClassification, ray: RayRecord) -> str:
    state = "consistent" if rc.consistent else "inconsistent"
    return f"{fmt_vec(ray.curve)}: {rc.coarse}, declared {ray.mori_type}, {state}"
