"""Rational polyhedral cones with synchronized V- and H-descriptions.

A :class:`PolyCone` stores both descriptions in canonical form:

* ``rays``: primitive integer vectors spanning the cone modulo its
  lineality space, each orthogonal to the lineality space;
* ``lineality``: integer basis (from the RREF) of the lineality space;
* ``facets``: primitive inequality normals ``v`` (meaning ``v . x >= 0``),
  orthogonal to ``equations``;
* ``equations``: integer basis of the implicit equalities.

Conversion is the double description method with incremental insertion
and a combinatorial adjacency test; arithmetic is on Python integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Optional, Sequence

from . import exactq as q
from .exactq import DimensionError

IntVec = tuple  # tuple[int, ...]


def _prim(v: Sequence[int]) -> IntVec:
    g = 0
    for x in v:
        g = gcd(g, x)
    if g <= 1:
        return tuple(v)
    return tuple(x // g for x in v)


def _idot(u: Sequence[int], v: Sequence[int]) -> int:
    return sum(a * b for a, b in zip(u, v))


def _double_description(rows: Sequence[IntVec], dim: int) -> tuple[list[IntVec], list[IntVec]]:
    """Generators of ``{x : r . x >= 0 for r in rows}``.

    Returns ``(rays, lineality)``; rays are not yet canonicalized.
    """
    lineality: list[IntVec] = [tuple(int(i == j) for j in range(dim)) for i in range(dim)]
    rays: list[IntVec] = []
    zsets: list[int] = []  # bitmask of processed rows vanishing on each ray
    seen_rows: list[int] = []
    for k, a in enumerate(rows):
        if not any(a):
            continue
        bit = 1 << k
        idx = next((i for i, l in enumerate(lineality) if _idot(a, l) != 0), None)
        if idx is not None:
            l0 = lineality.pop(idx)
            s0 = _idot(a, l0)
            if s0 < 0:
                l0 = tuple(-x for x in l0)
                s0 = -s0
            new_lin = []
            for l in lineality:
                s = _idot(a, l)
                new_lin.append(_prim(tuple(s0 * x - s * y for x, y in zip(l, l0))) if s else l)
            lineality = new_lin
            new_rays = []
            for r, z in zip(rays, zsets):
                s = _idot(a, r)
                if s:
                    r = _prim(tuple(s0 * x - s * y for x, y in zip(r, l0)))
                new_rays.append(r)
            rays = new_rays
            # every previous ray now lies on the new hyperplane; l0 does not
            zsets = [z | bit for z in zsets]
            # l0 vanishes on every processed row (it was lineality)
            lz = 0
            for j in seen_rows:
                lz |= 1 << j
            rays.append(_prim(l0))
            zsets.append(lz)
            seen_rows.append(k)
            continue
        vals = [_idot(a, r) for r in rays]
        pos = [i for i, s in enumerate(vals) if s > 0]
        neg = [i for i, s in enumerate(vals) if s < 0]
        zero = [i for i, s in enumerate(vals) if s == 0]
        seen_rows.append(k)
        if not neg:
            zsets = [z | bit if vals[i] == 0 else z for i, z in enumerate(zsets)]
            continue
        need = dim - len(lineality) - 2
        new_rays = [rays[i] for i in pos] + [rays[i] for i in zero]
        new_z = [zsets[i] for i in pos] + [zsets[i] | bit for i in zero]
        for i in pos:
            zi = zsets[i]
            for j in neg:
                common = zi & zsets[j]
                if bin(common).count("1") < need:
                    continue
                adjacent = True
                for t, zt in enumerate(zsets):
                    if t != i and t != j and (zt & common) == common:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                si, sj = vals[i], vals[j]
                r = _prim(tuple(si * y - sj * x for x, y in zip(rays[i], rays[j])))
                new_rays.append(r)
                new_z.append(common | bit)
        rays, zsets = new_rays, new_z
    return rays, lineality


def _rref_int_basis(vectors: Sequence[Sequence]) -> tuple[IntVec, ...]:
    return tuple(q.primitive_line(r) for r in q.row_space_basis(vectors))


def _project_out(v: Sequence[int], basis: Sequence[IntVec]) -> IntVec:
    """Primitive integer form of the orthogonal projection of v onto basis^perp."""
    if not basis:
        return _prim(tuple(v))
    b = [q.vector(x) for x in basis]
    gram = tuple(tuple(q.dot(x, y) for y in b) for x in b)
    rhs = tuple(q.dot(x, v) for x in b)
    coeffs, _ = q.solve_linear(gram, rhs)
    w = list(q.vector(v))
    for c, x in zip(coeffs, b):
        if c:
            w = [wi - c * xi for wi, xi in zip(w, x)]
    return q.primitive(w)


def _canonical(rays: Iterable[Sequence[int]], lineality: Sequence[Sequence]) -> tuple[tuple[IntVec, ...], tuple[IntVec, ...]]:
    lin = _rref_int_basis(lineality)
    out = set()
    for r in rays:
        p = _project_out(r, lin)
        if any(p):
            out.add(p)
    return tuple(sorted(out)), lin


def _as_int_rows(vectors: Iterable[Sequence], dim: int) -> list[IntVec]:
    rows = []
    for v in vectors:
        if len(v) != dim:
            raise DimensionError(f"vector of length {len(v)} in ambient dimension {dim}")
        rows.append(q.primitive(v))
    return rows


@dataclass(frozen=True)
class PolyCone:
    """Closed rational polyhedral cone in Q^dim."""

    dim: int
    rays: tuple = ()
    lineality: tuple = ()
    facets: tuple = ()
    equations: tuple = ()

    @property
    def inequalities(self) -> tuple:
        """Full H-description, equations expanded into two opposite inequalities."""
        return self.facets + self.equations + tuple(tuple(-x for x in e) for e in self.equations)

    @property
    def generators(self) -> tuple:
        """Full V-description, lineality expanded into two opposite rays."""
        return self.rays + self.lineality + tuple(tuple(-x for x in l) for l in self.lineality)

    @property
    def dimension(self) -> int:
        return self.dim - len(self.equations)

    @property
    def is_full_dimensional(self) -> bool:
        return not self.equations

    @property
    def is_pointed(self) -> bool:
        return not self.lineality

    @property
    def is_trivial(self) -> bool:
        return not self.rays and not self.lineality

    def contains(self, x: Sequence) -> bool:
        if len(x) != self.dim:
            raise DimensionError("point dimension mismatch")
        x = q.vector(x)
        return all(q.dot(f, x) >= 0 for f in self.facets) and all(q.dot(e, x) == 0 for e in self.equations)

    def interior_contains(self, x: Sequence) -> bool:
        """Strict interior; empty unless the cone is full-dimensional."""
        if len(x) != self.dim:
            raise DimensionError("point dimension mismatch")
        if self.equations:
            return False
        if not self.facets:
            return True
        x = q.vector(x)
        return all(q.dot(f, x) > 0 for f in self.facets)

    def relative_interior_contains(self, x: Sequence) -> bool:
        x = q.vector(x)
        return all(q.dot(e, x) == 0 for e in self.equations) and all(q.dot(f, x) > 0 for f in self.facets)

    def dual(self) -> "PolyCone":
        return PolyCone(self.dim, self.facets, self.equations, self.rays, self.lineality)

    def face(self, functional: Sequence) -> "PolyCone":
        """Face cut out by a functional nonnegative on the cone."""
        f = q.primitive(functional)
        gens = [r for r in self.rays if _idot(f, r) == 0]
        if any(_idot(f, r) < 0 for r in self.rays) or any(_idot(f, l) for l in self.lineality):
            raise ValueError("functional is not nonnegative on the cone")
        return build_dual_pair(generators=gens, lineality=self.lineality, dim=self.dim)

    def sample_interior_point(self) -> tuple:
        """Sum of all generators: a relative-interior point."""
        s = [0] * self.dim
        for r in self.rays:
            s = [a + b for a, b in zip(s, r)]
        return q.vector(s)

    def __repr__(self) -> str:
        return f"PolyCone(dim={self.dim}, rays={len(self.rays)}, lineality={len(self.lineality)}, facets={len(self.facets)}, equations={len(self.equations)})"


@lru_cache(maxsize=4096)
def _from_h(rows: tuple, dim: int) -> PolyCone:
    rays, lin = _double_description(rows, dim)
    rays, lin = _canonical(rays, lin)
    dual_rows = list(rays) + list(lin) + [tuple(-x for x in l) for l in lin]
    frays, eqs = _double_description(dual_rows, dim)
    facets, eqs = _canonical(frays, eqs)
    return PolyCone(dim, rays, lin, facets, eqs)


def build_dual_pair(
    generators: Optional[Iterable[Sequence]] = None,
    inequalities: Optional[Iterable[Sequence]] = None,
    dim: Optional[int] = None,
    lineality: Iterable[Sequence] = (),
    equations: Iterable[Sequence] = (),
) -> PolyCone:
    """Build a cone from exactly one of a V- or H-description.

    ``generators`` (plus optional ``lineality``) span the cone;
    ``inequalities`` (plus optional ``equations``) cut it out.  Empty
    generator input yields the trivial cone {0}.
    """
    if (generators is None) == (inequalities is None):
        raise ValueError("give exactly one of generators or inequalities")
    if dim is None:
        raise ValueError("ambient dimension is required")
    if generators is not None:
        gens = _as_int_rows(generators, dim)
        lin = _as_int_rows(lineality, dim)
        dual = _from_h(tuple(gens + lin + [tuple(-x for x in l) for l in lin]), dim)
        return dual.dual()
    rows = _as_int_rows(inequalities, dim)
    eqs = _as_int_rows(equations, dim)
    return _from_h(tuple(rows + eqs + [tuple(-x for x in e) for e in eqs]), dim)


def from_generators(gens: Iterable[Sequence], dim: int, lineality: Iterable[Sequence] = ()) -> PolyCone:
    return build_dual_pair(generators=list(gens), dim=dim, lineality=lineality)


def from_inequalities(ineqs: Iterable[Sequence], dim: int, equations: Iterable[Sequence] = ()) -> PolyCone:
    return build_dual_pair(inequalities=list(ineqs), dim=dim, equations=equations)


def whole_space(dim: int) -> PolyCone:
    return from_inequalities([], dim)


def trivial_cone(dim: int) -> PolyCone:
    return from_generators([], dim)


def intersect(a: PolyCone, b: PolyCone) -> PolyCone:
    if a.dim != b.dim:
        raise DimensionError(f"cannot intersect cones in dimensions {a.dim} and {b.dim}")
    return from_inequalities(a.inequalities + b.inequalities, a.dim)


def map_cone(c: PolyCone, m) -> PolyCone:
    """Image of ``c`` under the invertible linear map ``m``."""
    m = q.matrix(m)
    if q.shape(m) != (c.dim, c.dim):
        raise DimensionError("map size does not match cone dimension")
    if q.determinant(m) == 0:
        raise DimensionError("cannot map a cone through a singular matrix")
    gens = [q.matvec(m, r) for r in c.rays]
    lin = [q.matvec(m, l) for l in c.lineality]
    return from_generators(gens, c.dim, lin)


def intersection_dimension(sigma: PolyCone, inequalities: Sequence[Sequence]) -> int:
    """dim(sigma ∩ {a . x >= 0}), computed in sigma's generator coordinates.

    Cheap when sigma has few generators: the double description runs in
    the space of generator coefficients rather than the ambient space.
    """
    gens = list(sigma.generators)
    if not gens:
        return 0
    m = len(gens)
    rows = [tuple(_idot(q.primitive(a), g) for g in gens) for a in inequalities]
    rows += [tuple(int(i == j) for j in range(m)) for i in range(m)]
    rays, lin = _double_description(rows, m)
    images = []
    for lam in list(rays) + list(lin):
        x = [0] * sigma.dim
        for c, g in zip(lam, gens):
            if c:
                x = [xi + c * gi for xi, gi in zip(x, g)]
        images.append(q.vector(x))
    return q.rank(tuple(images)) if images else 0


def equal_cones(a: PolyCone, b: PolyCone) -> bool:
    return a.dim == b.dim and a.rays == b.rays and a.lineality == b.lineality


def contains_cone(outer: PolyCone, inner: PolyCone) -> bool:
    return all(outer.contains(g) for g in inner.generators)


@dataclass(frozen=True)
class ConeWithOpenFaces:
    """A closed cone together with functionals required to be strictly positive."""

    base: PolyCone
    strict: tuple = field(default=())


def membership(c, x: Sequence, mode: str = "closed") -> bool:
    """Membership of ``x`` in a cone, with optional strict functionals.

    ``mode="closed"`` tests the closed base cone plus every strict
    functional ``> 0``; ``mode="interior"`` tests the topological interior
    (always false for a lower-dimensional base).
    """
    if isinstance(c, PolyCone):
        c = ConeWithOpenFaces(c)
    x = q.vector(x)
    if len(x) != c.base.dim:
        raise DimensionError("point dimension mismatch")
    if mode == "closed":
        ok = c.base.contains(x)
    elif mode == "interior":
        ok = c.base.interior_contains(x)
    else:
        raise ValueError(f"unknown membership mode {mode!r}")
    return ok and all(q.dot(s, x) > 0 for s in c.strict)
