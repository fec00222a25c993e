"""Chambers of the movable cone and the walks between them.

A chamber is recorded by its wall frame: the fibral curve classes that span
the relative curve cone of the marked model.  Divisor coordinates never
change under a flop, only the frame does, so the nef cone of a chamber is

    {x : x.g >= 0 for g in the frame} ∩ {x : x.r >= 0 for the K-negative rays}
                                      ∩ {x : x.F_i >= 0}.

Flops act group-locally: crossing ``c`` reflects the frame classes of the
fibre group containing ``c`` and leaves the other groups alone.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

from . import exactq as q
from . import polycone as pc
from .varmodel import VarietyInstance, fmt_vec

DEFAULT_FLOP_GUARD = 10_000
DEFAULT_CHAMBER_GUARD = 100_000


class BoundaryWallError(ValueError):
    """The requested wall bounds the movable cone and cannot be crossed."""


class GuardTripped(RuntimeError):
    """A termination guard was exceeded."""

    def __init__(self, message: str, guard: str, limit: int):
        super().__init__(message)
        self.guard = guard
        self.limit = limit


class PreconditionError(ValueError):
    """Input lies outside the region where an operation is defined."""


def flop_guard() -> int:
    return int(os.environ.get("CONELAB_GUARD_FLOPS", DEFAULT_FLOP_GUARD))


def chamber_guard() -> int:
    return int(os.environ.get("CONELAB_GUARD_CHAMBERS", DEFAULT_CHAMBER_GUARD))


@dataclass(frozen=True)
class Chamber:
    frame: tuple
    groups: tuple
    multiplicities: tuple
    path: tuple = field(default=(), compare=False)

    @property
    def key(self) -> tuple:
        """Sorted primitive frame vectors: the chamber's identity."""
        return tuple(sorted(q.primitive(c) for c in self.frame))

    def __eq__(self, other):
        return isinstance(other, Chamber) and self.key == other.key

    def __hash__(self):
        return hash(self.key)


@dataclass(frozen=True)
class FlopStep:
    wall: tuple
    map_on_curves: tuple
    divisor_classes_unchanged: bool = True


def seed_chamber(inst: VarietyInstance) -> Chamber:
    return Chamber(inst.seed_frame, inst.seed_groups, inst.seed_multiplicities)


def movable_functionals(inst: VarietyInstance) -> tuple:
    """Closed constraints of the ambient movable region: K-negative rays and F_i."""
    rows = [inst.curve_functional(r.curve) for r in inst.k_negative_rays]
    rows += [inst.curve_functional(f) for f in inst.fibral]
    return tuple(rows)


def nef_inequalities(inst: VarietyInstance, ch: Chamber) -> tuple:
    rows = [inst.curve_functional(c) for c in ch.frame]
    return tuple(rows) + movable_functionals(inst)


@lru_cache(maxsize=8192)
def _nef_cone(inst: VarietyInstance, frame: tuple) -> pc.PolyCone:
    rows = [inst.curve_functional(c) for c in frame] + list(movable_functionals(inst))
    return pc.from_inequalities(rows, inst.rank)


def nef_cone(inst: VarietyInstance, ch: Chamber) -> pc.PolyCone:
    """Closed nef cone of ``ch``."""
    return _nef_cone(inst, tuple(sorted(ch.frame)))


def chamber_cone(inst: VarietyInstance, ch: Chamber) -> pc.ConeWithOpenFaces:
    """Nef cone with the strict bigness functional x.F > 0."""
    return pc.ConeWithOpenFaces(nef_cone(inst, ch), (inst.curve_functional(inst.fibre),))


def chamber_violations(inst: VarietyInstance, ch: Chamber) -> list[str]:
    from .varmodel import frame_violations

    bad = frame_violations(inst, ch.frame, ch.groups, ch.multiplicities)
    if bad:
        return bad
    cone = nef_cone(inst, ch)
    if not cone.is_full_dimensional:
        return ["chamber nef cone has empty interior"]
    inner = cone.sample_interior_point()
    if inst.pair(inner, inst.fibre) <= 0:
        bad.append("chamber nef cone does not meet the big region x.F > 0")
    return bad


@lru_cache(maxsize=64)
def ray_functionals(inst: VarietyInstance) -> tuple:
    """(curve class, x -> x.c functional) for each K-negative ray."""
    return tuple((r.curve, inst.curve_functional(r.curve)) for r in inst.k_negative_rays)


def movable_precheck(inst: VarietyInstance, d: Sequence) -> tuple[bool, Optional[tuple]]:
    """D.c >= 0 for every listed K-negative ray; witness is the first violating ray."""
    d = q.vector(d)
    for curve, f in ray_functionals(inst):
        if q.dot(f, d) < 0:
            return False, curve
    return True, None


def _frame_index(ch: Chamber, c: Sequence) -> int:
    c = q.vector(c)
    for i, g in enumerate(ch.frame):
        if g == c:
            return i
    raise ValueError(f"{fmt_vec(c)} is not a class of the wall frame")


def is_facet_wall(inst: VarietyInstance, ch: Chamber, c: Sequence) -> bool:
    return q.primitive(inst.curve_functional(c)) in nef_cone(inst, ch).facets


def wall_meets_movable_interior(inst: VarietyInstance, ch: Chamber, c: Sequence) -> bool:
    """No ambient movable constraint vanishes on the whole face {x.c = 0}."""
    face = nef_cone(inst, ch).face(inst.curve_functional(c))
    gens = face.generators
    constraints = movable_functionals(inst) + (inst.curve_functional(inst.fibre),)
    return all(any(q.dot(m, g) != 0 for g in gens) for m in constraints)


def crossable_walls(inst: VarietyInstance, ch: Chamber) -> list[tuple]:
    out = []
    for c in ch.frame:
        if inst.is_divisorial_wall(c):
            continue
        if is_facet_wall(inst, ch, c) and wall_meets_movable_interior(inst, ch, c):
            out.append(c)
    return out


def flop_step(inst: VarietyInstance, c: Sequence) -> FlopStep:
    return FlopStep(q.vector(c), inst.flop_rule.map_for(c))


def _flop(inst: VarietyInstance, ch: Chamber, idx: int) -> Chamber:
    c = ch.frame[idx]
    t = inst.flop_rule.map_for(c)
    group = next(g for g in ch.groups if idx in g)
    frame = list(ch.frame)
    for j in group:
        img = q.matvec(t, frame[j])
        if not q.is_integral(img):
            raise ValueError(f"flop across {fmt_vec(c)} gives a non-integral class {fmt_vec(img)}")
        frame[j] = img
    return Chamber(tuple(frame), ch.groups, ch.multiplicities, ch.path + (c,))


def cross_wall(inst: VarietyInstance, ch: Chamber, c: Sequence) -> Chamber:
    """Flop across the wall {x.c = 0} of ``ch``."""
    idx = _frame_index(ch, c)
    c = ch.frame[idx]
    if inst.is_divisorial_wall(c):
        raise BoundaryWallError(f"boundary wall: {fmt_vec(c)} is a divisorial wall of the movable cone")
    if not is_facet_wall(inst, ch, c):
        raise ValueError(f"{fmt_vec(c)} does not define a facet of the chamber")
    if not wall_meets_movable_interior(inst, ch, c):
        raise BoundaryWallError(f"boundary wall: the facet of {fmt_vec(c)} lies on the movable boundary")
    return _flop(inst, ch, idx)


def make_nef(
    inst: VarietyInstance, d: Sequence, start: Optional[Chamber] = None, guard: Optional[int] = None
) -> tuple[Chamber, tuple]:
    """Flop from the seed until ``d`` is nef; returns the chamber and the walls crossed."""
    d = q.vector(d)
    if len(d) != inst.rank:
        raise q.DimensionError(f"divisor of length {len(d)} for rank {inst.rank}")
    ok, witness = movable_precheck(inst, d)
    if not ok:
        raise PreconditionError(f"D.c < 0 on the K-negative ray {fmt_vec(witness)}")
    if inst.pair(d, inst.fibre) <= 0:
        raise PreconditionError("D.F <= 0: divisor is not big over the base")
    for i, f in enumerate(inst.fibral, start=1):
        if inst.pair(d, f) < 0:
            raise PreconditionError(f"D.F_{i} < 0: divisor is outside the movable cone")
    limit = flop_guard() if guard is None else guard
    ch = start if start is not None else seed_chamber(inst)
    steps = 0
    while True:
        negative = [
            (q.primitive(c), i)
            for i, c in enumerate(ch.frame)
            if inst.pair(d, c) < 0 and not inst.is_divisorial_wall(c)
        ]
        negative = [(p, i) for p, i in negative if is_facet_wall(inst, ch, ch.frame[i])]
        if not negative:
            break
        if steps >= limit:
            raise GuardTripped(f"termination guard tripped after {limit} crossings", "flops", limit)
        _, idx = min(negative)
        ch = _flop(inst, ch, idx)
        steps += 1
    if not nef_cone(inst, ch).contains(d):
        raise PreconditionError("no further crossable wall, yet D is not nef: instance data inconsistent")
    return ch, ch.path[len(start.path) if start else 0 :]


@dataclass(frozen=True)
class _Contact:
    dimension: int
    big: bool


def _contact(inst: VarietyInstance, ch: Chamber, sigma: pc.PolyCone) -> _Contact:
    """Dimension of nef(ch) ∩ sigma and whether it reaches x.F > 0."""
    gens = list(sigma.generators)
    if not gens:
        return _Contact(0, False)
    fdual = inst.curve_functional(inst.fibre)
    if len(gens) > sigma.dim + 4:
        # many generators: intersect in the ambient space instead
        meet = pc.from_inequalities(sigma.inequalities + nef_inequalities(inst, ch), sigma.dim)
        return _Contact(meet.dimension, any(q.dot(fdual, g) > 0 for g in meet.generators))
    from .polycone import _double_description, _idot

    m = len(gens)
    ineqs = nef_inequalities(inst, ch)
    rows = [tuple(_idot(q.primitive(a), g) for g in gens) for a in ineqs]
    rows += [tuple(int(i == j) for j in range(m)) for i in range(m)]
    rays, lin = _double_description(rows, m)
    images = []
    for lam in list(rays) + list(lin):
        x = [0] * sigma.dim
        for c, g in zip(lam, gens):
            if c:
                x = [xi + c * gi for xi, gi in zip(x, g)]
        images.append(q.vector(x))
    dim = q.rank(tuple(images)) if images else 0
    big = any(q.dot(fdual, x) > 0 for x in images)
    return _Contact(dim, big)


def sigma_violations(inst: VarietyInstance, sigma: pc.PolyCone, allow_trivial: bool = False) -> list[str]:
    """Generators of sigma must pair positively with F (or lie in T(X/S) if allowed)."""
    from .varmodel import trivial_subspace

    bad = []
    basis, _ = trivial_subspace(inst)
    for g in sigma.generators:
        if inst.pair(g, inst.fibre) > 0:
            continue
        if allow_trivial and q.in_span(g, basis):
            continue
        bad.append(f"generator {fmt_vec(g)} of Sigma has x.F <= 0")
    return bad


def enumerate_chambers(
    inst: VarietyInstance,
    sigma: pc.PolyCone,
    start: Optional[Chamber] = None,
    cap: Optional[int] = None,
    allow_trivial: bool = False,
) -> list[Chamber]:
    """All chambers whose nef cone meets ``sigma`` in a set of full dimension.

    Breadth-first from the chamber containing an interior point of sigma.
    Chambers that merely touch sigma inside x.F > 0 are walked through but
    not reported; chambers missing it are pruned.
    """
    bad = sigma_violations(inst, sigma, allow_trivial)
    if bad:
        raise PreconditionError("; ".join(bad))
    if sigma.is_trivial:
        return []
    limit = chamber_guard() if cap is None else cap
    if start is None:
        start, _ = make_nef(inst, sigma.sample_interior_point())
    start = Chamber(start.frame, start.groups, start.multiplicities, start.path)
    target = sigma.dimension
    seen = {start.key}
    queue = deque([start])
    found = []
    while queue:
        ch = queue.popleft()
        contact = _contact(inst, ch, sigma)
        if contact.dimension == target:
            found.append(ch)
            if len(found) > limit:
                raise GuardTripped(f"chamber guard tripped after {limit} chambers", "chambers", limit)
        elif ch is not start and not contact.big:
            continue
        for c in crossable_walls(inst, ch):
            nxt = _flop(inst, ch, _frame_index(ch, c))
            if nxt.key not in seen:
                seen.add(nxt.key)
                queue.append(nxt)
        if len(seen) > 4 * limit + 16:
            raise GuardTripped(f"chamber guard tripped after visiting {len(seen)} chambers", "chambers", limit)
    return found


def act_on_chamber(inst: VarietyInstance, g, ch: Chamber) -> Chamber:
    """Image of a chamber under a group element (dual action on its frame)."""
    gs = inst.dual_action(g)
    frame = tuple(q.matvec(gs, c) for c in ch.frame)
    return Chamber(frame, ch.groups, ch.multiplicities, ch.path)


@dataclass(frozen=True)
class QuotientEnumeration:
    representatives: tuple
    assignments: tuple  # ((chamber, element, representative), ...)
    complete: bool
    visited: int
    budget: int
    exact: bool = True


def enumerate_up_to_group(inst: VarietyInstance, budget: Optional[int] = None, word_budget: int = 3) -> QuotientEnumeration:
    """Chambers modulo the group: BFS over crossings, canonicalising every neighbour.

    ``budget`` bounds the number of chambers examined; if it runs out while
    the frontier is open the result is flagged incomplete.
    """
    from .groupact import orbit_reduce

    limit = chamber_guard() if budget is None else budget
    exact = True

    def canon(ch):
        nonlocal exact
        red = orbit_reduce(inst, ch, word_budget=word_budget)
        exact = exact and red.exact
        return red

    first = canon(seed_chamber(inst))
    reps = {first.representative.key: first.representative}
    order = [first.representative]
    assignments = [(seed_chamber(inst), first.element, first.representative)]
    queue = deque([first.representative])
    visited = 1
    complete = True
    while queue:
        if visited >= limit:
            complete = False
            break
        rep = queue.popleft()
        for c in crossable_walls(inst, rep):
            nxt = _flop(inst, rep, _frame_index(rep, c))
            visited += 1
            red = canon(nxt)
            assignments.append((nxt, red.element, red.representative))
            k = red.representative.key
            if k not in reps:
                reps[k] = red.representative
                order.append(red.representative)
                queue.append(red.representative)
    return QuotientEnumeration(tuple(order), tuple(assignments), complete and exact, visited, limit, exact)
