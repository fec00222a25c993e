"""Relative movable and effective cones, the pullback test, lifts, and the cones K and U."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor, lcm
from typing import Optional, Sequence

from . import exactq as q
from . import polycone as pc
from .chamberwalk import (
    Chamber,
    GuardTripped,
    PreconditionError,
    act_on_chamber,
    chamber_cone,
    enumerate_chambers,
    movable_precheck,
    nef_cone,
    ray_functionals,
)
from .groupact import default_cell, orbit_reduce, slice_basis, slice_dimension
from .varmodel import GroupElement, VarietyInstance, fmt_vec, preimage, relative_instance

LIFT_MAX_M = 32
LIFT_MAX_NU = 64
U_LIFT_MAX_NU = 4096


class LiftNotFound(RuntimeError):
    """No lift within the search bounds; not a proof that none exists."""


class BoundednessError(ValueError):
    """The pulled-back polytope is not bounded on the slice."""


def relative_movable_cone(inst: VarietyInstance) -> pc.ConeWithOpenFaces:
    """{x : x.F_i >= 0} with strict functional x.F, on N^1(X/S).

    Zero is not a member; callers that want ``∪ {0}`` add it themselves.
    """
    rel = relative_instance(inst)
    base = pc.from_inequalities([rel.curve_functional(f) for f in rel.fibral], rel.rank)
    return pc.ConeWithOpenFaces(base, (rel.curve_functional(rel.fibre),))


@dataclass(frozen=True)
class RelativeEffectivePredicate:
    strict_piece: pc.ConeWithOpenFaces
    ray_piece: pc.PolyCone
    includes_zero: bool = True


def effective_predicate(inst: VarietyInstance) -> RelativeEffectivePredicate:
    rel = relative_instance(inst)
    strict = pc.ConeWithOpenFaces(pc.whole_space(rel.rank), (rel.curve_functional(rel.fibre),))
    rays = pc.from_generators(rel.vertical, rel.rank)
    return RelativeEffectivePredicate(strict, rays)


def effective_membership(pred: RelativeEffectivePredicate, x: Sequence) -> tuple[bool, Optional[str]]:
    """Membership in the union strict ∪ rays ∪ {0}; the tag names the piece."""
    x = q.vector(x)
    if pred.includes_zero and q.is_zero(x):
        return True, "zero"
    if pc.membership(pred.strict_piece, x):
        return True, "strict"
    if pred.ray_piece.contains(x):
        return True, "ray"
    return False, None


@dataclass(frozen=True)
class PullbackWitness:
    lambdas: Optional[tuple]  # one scalar per partition member
    violating_index: Optional[int]  # 0-based index j with x.F_j < 0

    @property
    def is_pullback(self) -> bool:
        return self.lambdas is not None


def pullback_witness(inst: VarietyInstance, coeffs: Sequence) -> PullbackWitness:
    """Either x = sum r_i D_i is a pullback from the base, or some x.F_j < 0."""
    r = q.vector(coeffs)
    if len(r) != inst.n:
        raise q.DimensionError(f"{len(r)} coefficients for {inst.n} vertical divisors")
    x = q.zeros(inst.rank)
    for ri, d in zip(r, inst.vertical):
        x = q.add(x, q.scale(ri, d))
    for j, f in enumerate(inst.fibral):
        if inst.pair(x, f) < 0:
            return PullbackWitness(None, j)
    lambdas = []
    for member in inst.partition:
        lam = r[member[0]] / inst.mu[member[0]]
        for i in member:
            if r[i] != lam * inst.mu[i]:
                raise ValueError(
                    f"x.F_j >= 0 for all j but r is not proportional to mu on {list(member)}: instance violates the negativity lemma"
                )
        lambdas.append(lam)
    return PullbackWitness(tuple(lambdas), None)


@dataclass(frozen=True)
class LiftReport:
    input_class: tuple
    lifted_class: tuple
    m: int
    nus: tuple


def lift_to_absolute(
    inst: VarietyInstance, rel_class: Sequence, max_m: int = LIFT_MAX_M, max_nu: int = LIFT_MAX_NU
) -> LiftReport:
    """Smallest m, then smallest nu, with m*preimage + sum nu_k f*(A_k) passing the precheck.

    The preimage is the canonical solution of the quotient equations; m is
    the least multiplier making it integral.  Relative instances lift to
    themselves.
    """
    y = q.vector(rel_class)
    if not pc.membership(relative_movable_cone(inst), y):
        raise PreconditionError(f"{fmt_vec(y)} is not in the relative movable cone")
    if inst.is_relative:
        return LiftReport(y, y, 1, ())
    if not inst.ample_pullbacks:
        raise PreconditionError("absolute lift needs at least one ample pullback")
    x0 = preimage(inst, y)
    amples = inst.ample_pullbacks
    for m in range(1, max_m + 1):
        base = q.scale(m, x0)
        if not q.is_integral(base):
            continue
        nu = _precheck_need(inst, base, amples[0])
        if nu is not None and nu <= max_nu:
            x = q.add(base, q.scale(nu, amples[0]))
            assert movable_precheck(inst, x)[0]
            return LiftReport(y, x, m, (nu,) + (0,) * (len(amples) - 1))
    raise LiftNotFound(f"lift not found within bounds m <= {max_m}, nu <= {max_nu}")


# --------------------------------------------------------------------------- K and U


@dataclass(frozen=True)
class KResult:
    cone: pc.PolyCone
    cell: tuple  # vertices of Pi in W
    cell_kind: str
    bounds: tuple  # per ray: (ray, y.F, (y.F_i ...)) normalised to y.F = 1


def _slice_map(inst: VarietyInstance) -> tuple:
    """Rows of y -> (y.F, y.a_1, ..., y.a_w)."""
    rel = relative_instance(inst)
    return tuple(rel.curve_functional(a) for a in slice_basis(inst))


def build_k(inst: VarietyInstance, pi_vertices: Optional[Sequence[Sequence]] = None, base=None) -> KResult:
    """Cone over q^-1(Pi) ∩ relative movable cone, with a boundedness certificate."""
    rel = relative_instance(inst)
    if pi_vertices is None:
        cell, kind = default_cell(inst, base)
    else:
        cell, kind = [q.vector(v) for v in pi_vertices], "given"
    w = slice_dimension(inst)
    if any(len(v) != w for v in cell):
        raise q.DimensionError(f"Pi vertices must have {w} coordinates")
    homog = pc.from_generators([(Fraction(1),) + tuple(v) for v in cell], w + 1)
    phi = _slice_map(inst)
    pull = lambda h: q.vecmat(q.vector(h), phi)  # noqa: E731
    ineqs = [pull(h) for h in homog.facets]
    ineqs += [rel.curve_functional(f) for f in rel.fibral]
    ineqs.append(rel.curve_functional(rel.fibre))
    eqs = [pull(e) for e in homog.equations]
    cone = pc.from_inequalities(ineqs, rel.rank, eqs)
    if cone.lineality or any(rel.pair(r, rel.fibre) <= 0 for r in cone.rays):
        raise BoundednessError("boundedness certificate failed: q^-1(Pi) meets the movable cone unboundedly")
    bounds = []
    for r in cone.rays:
        t = rel.pair(r, rel.fibre)
        bounds.append((r, t, tuple(rel.pair(r, f) / t for f in rel.fibral)))
    return KResult(cone, tuple(tuple(v) for v in cell), kind, tuple(bounds))


def _precheck_need(inst: VarietyInstance, x: Sequence, a: Sequence) -> Optional[int]:
    """Least nu >= 0 with x + nu*a nonnegative on every K-negative ray, or None."""
    need = 0
    for _, f in ray_functionals(inst):
        xc = q.dot(f, x)
        if xc >= 0:
            continue
        ac = q.dot(f, a)
        if ac <= 0:
            return None
        need = max(need, ceil(-xc / ac))
    return need


def _bigness_need(inst: VarietyInstance, x: Sequence) -> int:
    """Least nu >= 0 with x + nu*A strictly positive on every K-negative ray."""
    a = inst.ample_pullbacks[0]
    need = 0
    for curve, f in ray_functionals(inst):
        ac = q.dot(f, a)
        xc = q.dot(f, x)
        if ac <= 0:
            if xc <= 0:
                raise LiftNotFound(f"ample pullback cannot make {fmt_vec(x)} positive on {fmt_vec(curve)}")
            continue
        need = max(need, floor(-xc / ac) + 1)
    return need


def lift_k_generators(inst: VarietyInstance, rays: Sequence[Sequence]) -> list[tuple]:
    """Lift K's rays to the big region of N^1(X) by one linear map.

    Each ray r goes to M*preimage(r) + c*(r.F)*A, with M the lcm of the lift
    multipliers and c the least integer making every image strictly
    positive on the K-negative rays.  Each image is the liftToAbsolute
    output rescaled plus further ample pullbacks, and since the map is
    linear the lifted cone keeps K's face structure.
    """
    rays = [q.vector(r) for r in rays]
    if inst.is_relative:
        return rays
    rel = relative_instance(inst)
    lifts = [lift_to_absolute(inst, r, max_nu=U_LIFT_MAX_NU) for r in rays]
    big_m = 1
    for lift in lifts:
        big_m = lcm(big_m, lift.m)
    a = inst.ample_pullbacks[0]
    c = 0
    bases = []
    for r, lift in zip(rays, lifts):
        t = rel.pair(r, rel.fibre)
        base = q.scale(big_m, preimage(inst, r))
        need = max(_bigness_need(inst, base), (big_m // lift.m) * sum(lift.nus))
        c = max(c, ceil(Fraction(need) / t))
        bases.append((base, t))
    return [q.add(base, q.scale(c * t, a)) for base, t in bases]


def bigness_adjust(inst: VarietyInstance, x: Sequence, max_nu: int = LIFT_MAX_NU) -> tuple:
    """Add ample pullbacks until x is strictly positive on F and every K-negative ray."""
    x = q.vector(x)
    if inst.is_relative or not inst.ample_pullbacks:
        return x
    a = inst.ample_pullbacks[0]
    for _ in range(max_nu + 1):
        if all(q.dot(f, x) > 0 for _, f in ray_functionals(inst)):
            return x
        x = q.add(x, a)
    raise LiftNotFound("bigness adjustment did not terminate within bounds")


@dataclass(frozen=True)
class URecordEntry:
    chamber: Chamber
    element: object  # GroupElement g with g.u in the chamber interior
    point: tuple  # u in U


@dataclass(frozen=True)
class UResult:
    cone: pc.PolyCone
    generators: tuple
    record: tuple  # URecordEntry per target chamber
    covering: tuple  # chambers meeting U
    covering_complete: bool = True




def build_u(
    inst: VarietyInstance,
    k0_generators: Optional[Sequence[Sequence]] = None,
    targets: Sequence[Chamber] = (),
    cap: Optional[int] = None,
    partial: bool = False,
) -> UResult:
    """U = cone(K0 ∪ {f*(A)}), with the two verification properties recorded.

    For each target chamber an interior point is reduced into U by the
    group; the inverse element then carries that point of U back into the
    chamber's interior.  The chambers meeting U are enumerated exactly.
    """
    if k0_generators is None:
        k0_generators = lift_k_generators(inst, build_k(inst).cone.rays)
    gens = [q.vector(g) for g in k0_generators]
    if not inst.is_relative:
        gens += [q.vector(a) for a in inst.ample_pullbacks]
    cone = pc.from_generators(gens, inst.rank)
    record = []
    for ch in targets:
        red = orbit_reduce(inst, nef_cone(inst, ch).sample_interior_point())
        u = red.representative
        # the reduced point may sit below U along T(X/S); ample pullbacks are group-fixed
        if inst.ample_pullbacks and not cone.contains(u):
            u = q.add(u, q.scale(_cone_need(cone, u, inst.ample_pullbacks[0]), inst.ample_pullbacks[0]))
        if not cone.contains(u):
            raise ValueError(f"reduced point {fmt_vec(u)} does not lie in U")
        g = q.inverse(red.element.matrix)
        image = q.matvec(g, u)
        if not pc.membership(chamber_cone(inst, ch), image, "interior"):
            raise ValueError("g.u is not interior to the target chamber")
        label = _invert_label(red.element.label)
        record.append(URecordEntry(ch, GroupElement(g, label, "inverse of the reducing element"), u))
    try:
        covering = enumerate_chambers(inst, cone, cap=cap, allow_trivial=not inst.is_relative)
    except GuardTripped:
        if not partial:
            raise
        return UResult(cone, tuple(gens), tuple(record), (), False)
    return UResult(cone, tuple(gens), tuple(record), tuple(covering))


def _cone_need(cone: pc.PolyCone, x: Sequence, a: Sequence) -> int:
    """Least nu >= 0 with x + nu*a in the cone, or 0 if none exists."""
    need = 0
    for e in cone.equations:
        if q.dot(e, x) != 0:
            return 0
    for f in cone.facets:
        fx, fa = q.dot(f, x), q.dot(f, a)
        if fx >= 0:
            continue
        if fa <= 0:
            return 0
        need = max(need, ceil(-fx / fa))
    return need


def _invert_label(label: str) -> str:
    if label == "id":
        return label
    parts = []
    for part in label.split("*"):
        name, _, exp = part.rpartition("^")
        parts.append(f"{name}^{-int(exp)}")
    return "*".join(parts)


def chain_chambers(inst: VarietyInstance, count: int) -> list[Chamber]:
    """Seed chamber and its images under the first generator, ``count`` in all."""
    from .chamberwalk import seed_chamber

    out = [seed_chamber(inst)]
    g = inst.group_generators[0] if inst.group_generators else None
    while len(out) < count and g is not None:
        out.append(act_on_chamber(inst, g, out[-1]))
    return out
