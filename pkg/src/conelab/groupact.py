"""Group elements acting on N^1: validation, translations on W, orbit reduction.

W is the affine slice {y.F = 1} of N^1(X/S)/V(X/S).  Its coordinates are
the pairings of ``y`` with a fixed basis ``a_1..a_w`` of the fibral curve
classes annihilating every vertical divisor, taken after dividing by y.F.
A group element whose induced affine map on W has identity linear part is a
translation, and the translation vectors of the generators span a lattice.
Orbit reduction in that case is a closest-vector problem, solved exactly.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil, floor, lcm
from typing import Optional, Sequence

from . import exactq as q
from . import polycone as pc
from .varmodel import (
    GroupElement,
    VarietyInstance,
    fmt_vec,
    relative_instance,
    relative_matrix,
    trivial_subspace,
)

__all__ = [
    "GroupElement",
    "NotATranslation",
    "TranslationCertificate",
    "ValidationReport",
    "OrbitReduction",
    "validate_group_element",
    "quotient_translation",
    "slice_basis",
    "slice_coordinates",
    "orbit_reduce",
    "enumerate_words",
    "fundamental_domain_check",
    "default_cell",
]


class NotATranslation(ValueError):
    """The induced affine map on W has a nontrivial linear part."""


@dataclass(frozen=True)
class ValidationReport:
    element: GroupElement
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class TranslationCertificate:
    element: GroupElement
    vector: tuple


@dataclass(frozen=True)
class OrbitReduction:
    representative: object
    element: GroupElement
    exponents: Optional[tuple]
    exact: bool


def _as_element(g) -> GroupElement:
    return g if isinstance(g, GroupElement) else GroupElement(q.matrix(g))


def _movable_closure(rel: VarietyInstance) -> pc.PolyCone:
    rows = [rel.curve_functional(f) for f in rel.fibral]
    rows.append(rel.curve_functional(rel.fibre))
    return pc.from_inequalities(rows, rel.rank)


def validate_group_element(inst: VarietyInstance, g) -> ValidationReport:
    """Check every identity a pseudo-automorphism action must satisfy."""
    g = _as_element(g)
    m = q.matrix(g.matrix)
    if q.shape(m) != (inst.rank, inst.rank):
        return ValidationReport(g, (f"matrix size {q.shape(m)} does not match rank {inst.rank}",))
    bad = []
    if not q.is_integral(m):
        bad.append("matrix is not integral")
    det = q.determinant(m)
    if det not in (1, -1):
        bad.append(f"determinant {q.format_rational(det)} is not ±1")
        if det == 0:
            return ValidationReport(g, tuple(bad))
    gs = inst.dual_action(m)
    if q.matvec(gs, inst.fibre) != inst.fibre:
        bad.append("dual action does not fix F")
    if q.matvec(m, inst.canonical_class) != inst.canonical_class:
        bad.append("does not fix K")
    if q.matmul(q.matmul(q.transpose(m), inst.pairing), gs) != inst.pairing:
        bad.append("does not preserve the pairing")
    if not inst.is_relative:
        basis, quotient = trivial_subspace(inst)
        if any(not q.is_zero(q.matvec(quotient, q.matvec(m, t))) for t in basis):
            bad.append("does not preserve T(X/S)")
            return ValidationReport(g, tuple(bad))
    rel = relative_instance(inst)
    gr = relative_matrix(inst, m)
    cone = _movable_closure(rel)
    inv = q.inverse(gr)
    if not all(cone.contains(q.matvec(gr, v)) and cone.contains(q.matvec(inv, v)) for v in cone.generators):
        bad.append("does not preserve movable cone")
    return ValidationReport(g, tuple(bad))


# --------------------------------------------------------------------------- the slice W


@lru_cache(maxsize=64)
def slice_basis(inst: VarietyInstance) -> tuple:
    """Curve classes (F, a_1, ..., a_w) of the relative model spanning V^perp."""
    rel = relative_instance(inst)
    rows = tuple(rel.divisor_functional(d) for d in rel.vertical)
    annihilator = q.kernel_basis(rows, rel.rank) if rows else [q.unit(rel.rank, i) for i in range(rel.rank)]
    chosen = [rel.fibre]
    for v in q.row_space_basis(annihilator):
        if q.rank(tuple(chosen) + (v,)) > len(chosen):
            chosen.append(tuple(q.primitive(v)))
    return tuple(q.vector(c) for c in chosen)


def slice_dimension(inst: VarietyInstance) -> int:
    return len(slice_basis(inst)) - 1


def slice_coordinates(inst: VarietyInstance, y: Sequence) -> tuple:
    """Point of W for a relative class ``y`` with y.F > 0."""
    rel = relative_instance(inst)
    basis = slice_basis(inst)
    t = rel.pair(y, basis[0])
    if t <= 0:
        raise ValueError("slice coordinates need y.F > 0")
    return tuple(rel.pair(y, a) / t for a in basis[1:])


def slice_lift(inst: VarietyInstance, s: Sequence, t=1) -> tuple:
    """A relative class with y.F = t and slice coordinates ``s``."""
    rel = relative_instance(inst)
    basis = slice_basis(inst)
    rows = tuple(rel.curve_functional(a) for a in basis)
    y, _ = q.solve_linear(rows, (q.rational(t),) + tuple(q.rational(t) * q.rational(x) for x in s))
    return y


def quotient_translation(inst: VarietyInstance, g) -> TranslationCertificate:
    g = _as_element(g)
    rel = relative_instance(inst)
    gr = relative_matrix(inst, g.matrix)
    basis = slice_basis(inst)
    cols = q.transpose(basis)
    p_inv = q.inverse(rel.pairing)
    pulled = []
    for b in basis:
        img = q.matvec(p_inv, q.matvec(q.transpose(gr), q.matvec(rel.pairing, b)))
        coeffs, _ = q.solve_linear(cols, img)
        if coeffs is None:
            raise NotATranslation("not a translation on W: the vertical subspace is not preserved")
        pulled.append(coeffs)
    w = len(basis) - 1
    if pulled[0] != q.unit(w + 1, 0):
        raise NotATranslation("not a translation on W: F is not fixed")
    for k in range(1, w + 1):
        if pulled[k][1:] != q.unit(w, k - 1):
            raise NotATranslation("not a translation on W: linear part is not the identity")
    return TranslationCertificate(g, tuple(pulled[k][0] for k in range(1, w + 1)))


# --------------------------------------------------------------------------- lattice reduction


def _gram_schmidt(basis):
    bstar, mu = [], []
    for i, b in enumerate(basis):
        v = list(b)
        row = []
        for j in range(i):
            c = q.dot(b, bstar[j]) / q.dot(bstar[j], bstar[j])
            row.append(c)
            v = [x - c * y for x, y in zip(v, bstar[j])]
        bstar.append(tuple(v))
        mu.append(row)
    return bstar, mu


def lll(basis, delta=Fraction(3, 4)):
    """Exact LLL reduction; returns (reduced basis, unimodular transform)."""
    b = [tuple(v) for v in basis]
    n = len(b)
    u = [tuple(int(i == j) for j in range(n)) for i in range(n)]
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            bstar, mu = _gram_schmidt(b)
            r = round(mu[k][j])
            if r:
                b[k] = tuple(x - r * y for x, y in zip(b[k], b[j]))
                u[k] = tuple(x - r * y for x, y in zip(u[k], u[j]))
        bstar, mu = _gram_schmidt(b)
        lhs = q.dot(bstar[k], bstar[k])
        rhs = (delta - mu[k][k - 1] ** 2) * q.dot(bstar[k - 1], bstar[k - 1])
        if lhs >= rhs:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            u[k], u[k - 1] = u[k - 1], u[k]
            k = max(k - 1, 1)
    return b, u


@dataclass(frozen=True)
class TranslationLattice:
    generators: tuple  # GroupElement per generator
    vectors: tuple  # translation vector per generator
    basis: tuple  # LLL-reduced lattice basis
    coefficients: tuple  # basis[i] = sum_j coefficients[i][j] * vectors[j]
    dim: int

    @property
    def rank(self) -> int:
        return len(self.basis)


@lru_cache(maxsize=64)
def translation_lattice(inst: VarietyInstance) -> Optional[TranslationLattice]:
    """Lattice of translation vectors, or None if some generator is not a translation."""
    try:
        certs = [quotient_translation(inst, g) for g in inst.group_generators]
    except NotATranslation:
        return None
    w = slice_dimension(inst)
    vectors = tuple(c.vector for c in certs)
    nonzero = [v for v in vectors if not q.is_zero(v)]
    if not nonzero:
        return TranslationLattice(tuple(inst.group_generators), vectors, (), (), w)
    den = 1
    for v in vectors:
        for x in v:
            den = lcm(den, x.denominator)
    ints = [tuple(int(x * den) for x in v) for v in vectors]
    hb, transform = q.hermite_basis(ints)
    reduced, u = lll([q.vector(v) for v in hb])
    coeffs = []
    for row in u:
        c = [0] * len(vectors)
        for a, trow in zip(row, transform):
            c = [x + a * y for x, y in zip(c, trow)]
        coeffs.append(tuple(c))
    basis = tuple(tuple(x / den for x in v) for v in reduced)
    return TranslationLattice(tuple(inst.group_generators), vectors, basis, tuple(coeffs), w)


def closest_vectors(lat: TranslationLattice, target: Sequence) -> list[tuple[int, ...]]:
    """All integer coefficient vectors x minimising |target - sum x_i b_i|, exactly."""
    basis = lat.basis
    r = len(basis)
    if r == 0:
        return [()]
    target = q.vector(target)
    bstar, mu = _gram_schmidt(basis)
    norms = [q.dot(b, b) for b in bstar]
    proj = [q.dot(target, b) / nb for b, nb in zip(bstar, norms)]
    # Babai rounding gives the initial radius
    x = [0] * r
    for i in reversed(range(r)):
        c = proj[i] - sum((x[j] * mu[j][i] for j in range(i + 1, r)), Fraction(0))
        x[i] = round(c)
    best = _dist2(basis, target, x)
    found: list[tuple[int, ...]] = []

    def search(i, xs, partial):
        nonlocal best, found
        if i < 0:
            d = partial
            if d < best:
                best, found = d, [tuple(xs)]
            elif d == best:
                found.append(tuple(xs))
            return
        c = proj[i] - sum((xs[j] * mu[j][i] for j in range(i + 1, r)), Fraction(0))
        centre = floor(c)
        for start, step in ((centre, -1), (centre + 1, 1)):
            k = start
            while True:
                d = partial + (k - c) ** 2 * norms[i]
                if d > best:
                    break
                xs[i] = k
                search(i - 1, xs, d)
                k += step
        xs[i] = 0

    search(r - 1, [0] * r, Fraction(0))
    return sorted(set(found))


def _dist2(basis, target, x):
    v = list(target)
    for xi, b in zip(x, basis):
        if xi:
            v = [a - xi * bb for a, bb in zip(v, b)]
    return sum((a * a for a in v), Fraction(0))


def _combine(lat: TranslationLattice, x: Sequence[int]) -> tuple[tuple, tuple[int, ...]]:
    """Lattice vector and generator exponents for basis coordinates ``x``."""
    exps = [0] * len(lat.vectors)
    for xi, row in zip(x, lat.coefficients):
        exps = [e + xi * c for e, c in zip(exps, row)]
    vec = q.zeros(lat.dim)
    for e, v in zip(exps, lat.vectors):
        vec = q.add(vec, q.scale(e, v))
    return vec, tuple(exps)


def element_from_exponents(inst: VarietyInstance, exps: Sequence[int]) -> GroupElement:
    m = q.identity(inst.rank)
    parts = []
    for e, g in zip(exps, inst.group_generators):
        if not e:
            continue
        base = g.matrix if e > 0 else q.inverse(g.matrix)
        for _ in range(abs(e)):
            m = q.matmul(base, m)
        parts.append(f"{g.label or 'g'}^{e}")
    return GroupElement(m, "*".join(parts) or "id", "word in the generators")


def identity_element(inst: VarietyInstance) -> GroupElement:
    return GroupElement(q.identity(inst.rank), "id", "identity")


# --------------------------------------------------------------------------- orbit reduction


def chamber_slice_vertices(inst: VarietyInstance, ch) -> list[tuple]:
    """Vertices of the relative chamber's slice polytope in W."""
    from .varmodel import relative_curve

    rel = relative_instance(inst)
    frame = [relative_curve(inst, c) for c in ch.frame]
    rows = [rel.curve_functional(c) for c in frame] + [rel.curve_functional(f) for f in rel.fibral]
    cone = pc.from_inequalities(rows, rel.rank)
    pts = []
    for r in cone.rays:
        if rel.pair(r, rel.fibre) > 0:
            pts.append(slice_coordinates(inst, r))
    return pts


def chamber_point(inst: VarietyInstance, ch) -> tuple:
    pts = chamber_slice_vertices(inst, ch)
    w = slice_dimension(inst)
    if not pts:
        raise ValueError("chamber does not meet the slice x.F = 1")
    total = q.zeros(w)
    for p in pts:
        total = q.add(total, p)
    return q.scale(Fraction(1, len(pts)), total)


def _base_point(inst: VarietyInstance) -> tuple:
    meta = inst.metadata.get("base_point")
    if meta is not None:
        return q.vector(meta)
    from .chamberwalk import seed_chamber

    return chamber_point(inst, seed_chamber(inst))


def base_point(inst: VarietyInstance) -> tuple:
    return _cached_base(inst)


@lru_cache(maxsize=64)
def _cached_base(inst):
    return _base_point(inst)


def reduce_slice_point(inst: VarietyInstance, s: Sequence, base: Optional[Sequence] = None):
    """Translate ``s`` into the default cell around ``base``.

    Dirichlet cell up to rank 3, the reduced-basis parallelotope above.

    Ties between several closest lattice vectors go to the lexicographically
    smallest reduced point, which makes the result constant on orbits.
    Returns (reduced point, exponents of the reducing element's inverse).
    """
    lat = translation_lattice(inst)
    s = q.vector(s)
    if lat is None or lat.rank == 0:
        return s, (0,) * len(inst.group_generators)
    base = base_point(inst) if base is None else q.vector(base)
    if lat.rank > DIRICHLET_MAX_RANK and lat.rank == lat.dim:
        # match the parallelotope cell: coordinates in (-1/2, 1/2]
        t, _ = q.solve_linear(q.transpose(lat.basis), q.sub(s, base))
        vec, exps = _combine(lat, [ceil(ti - Fraction(1, 2)) for ti in t])
        return q.sub(s, vec), exps
    best = None
    for x in closest_vectors(lat, q.sub(s, base)):
        vec, exps = _combine(lat, x)
        cand = (q.sub(s, vec), exps)
        if best is None or cand[0] < best[0]:
            best = cand
    return best


def enumerate_words(inst: VarietyInstance, budget: int, relative: bool = False) -> list[tuple[str, int, tuple]]:
    """Distinct non-identity elements of word length <= budget: (word, length, matrix)."""
    gens = []
    for g in inst.group_generators:
        m = relative_matrix(inst, g) if relative else q.matrix(g.matrix)
        gens.append((g.label or "g", m))
        gens.append(((g.label or "g") + "^-1", q.inverse(m)))
    ident = q.identity(len(gens[0][1]) if gens else inst.rank)
    seen = {ident: ("id", 0)}
    frontier = [(ident, "")]
    out = []
    for length in range(1, budget + 1):
        nxt = []
        for m, word in frontier:
            for label, gm in gens:
                img = q.matmul(gm, m)
                if img in seen:
                    continue
                w = f"{label}*{word}" if word else label
                seen[img] = (w, length)
                out.append((w, length, img))
                nxt.append((img, w))
        frontier = nxt
    return out


def _reduce_point(inst: VarietyInstance, y: Sequence, word_budget: int) -> OrbitReduction:
    y = q.vector(y)
    ident = identity_element(inst)
    if not inst.group_generators:
        return OrbitReduction(y, ident, (), True)
    lat = translation_lattice(inst)
    if lat is None:
        candidates = [(tuple(y), ident)]
        for word, _, m in enumerate_words(inst, word_budget):
            candidates.append((q.matvec(m, y), GroupElement(m, word, "word in the generators")))
        rep, el = min(candidates, key=lambda c: c[0])
        return OrbitReduction(rep, el, None, False)
    rel = relative_instance(inst)
    _, quotient = trivial_subspace(inst)
    yr = q.matvec(quotient, y)
    if rel.pair(yr, rel.fibre) <= 0:
        return OrbitReduction(y, ident, (0,) * len(inst.group_generators), True)
    _, exps = reduce_slice_point(inst, slice_coordinates(inst, yr))
    el = element_from_exponents(inst, tuple(-e for e in exps))
    return OrbitReduction(q.matvec(el.matrix, y), el, tuple(-e for e in exps), True)


def _reduce_chamber(inst: VarietyInstance, ch, word_budget: int) -> OrbitReduction:
    from .chamberwalk import act_on_chamber

    ident = identity_element(inst)
    if not inst.group_generators:
        return OrbitReduction(ch, ident, (), True)
    lat = translation_lattice(inst)
    if lat is None:
        best = (ch.key, ch, ident)
        for word, _, m in enumerate_words(inst, word_budget):
            img = act_on_chamber(inst, m, ch)
            if img.key < best[0]:
                best = (img.key, img, GroupElement(m, word, "word in the generators"))
        return OrbitReduction(best[1], best[2], None, False)
    _, exps = reduce_slice_point(inst, chamber_point(inst, ch))
    inv = tuple(-e for e in exps)
    el = element_from_exponents(inst, inv)
    return OrbitReduction(act_on_chamber(inst, el, ch), el, inv, True)


def orbit_reduce(inst: VarietyInstance, obj, word_budget: int = 3) -> OrbitReduction:
    """Canonical orbit representative of a chamber or a divisor class.

    Exact for translation groups; otherwise the best image over words up to
    ``word_budget``, flagged inexact.
    """
    from .chamberwalk import Chamber

    if isinstance(obj, Chamber):
        return _reduce_chamber(inst, obj, word_budget)
    return _reduce_point(inst, obj, word_budget)


# --------------------------------------------------------------------------- fundamental domains


def _dirichlet_vertices(lat: TranslationLattice, base: tuple) -> list[tuple]:
    from itertools import product

    r = lat.rank
    span = range(-2, 3)
    vecs = {}
    for x in product(span, repeat=r):
        if any(x):
            v = tuple(sum((xi * b[k] for xi, b in zip(x, lat.basis)), Fraction(0)) for k in range(lat.dim))
            vecs[x] = v
    relevant = []
    for x, v in vecs.items():
        n = q.dot(v, v)
        parity = tuple(xi % 2 for xi in x)
        rivals = [
            u for y, u in vecs.items() if tuple(yi % 2 for yi in y) == parity and u != v and u != q.neg(v)
        ]
        if all(q.dot(u, u) > n for u in rivals):
            relevant.append(v)
    rows = []
    for v in relevant:
        rows.append((q.dot(v, v) + 2 * q.dot(v, base),) + tuple(-2 * x for x in v))
    cone = pc.from_inequalities(rows, lat.dim + 1)
    return [tuple(Fraction(x, r[0]) for x in r[1:]) for r in cone.rays if r[0] > 0]


def _parallelotope_vertices(lat: TranslationLattice, base: tuple) -> list[tuple]:
    from itertools import product

    out = []
    for signs in product((Fraction(-1, 2), Fraction(1, 2)), repeat=lat.rank):
        v = tuple(base)
        for s, b in zip(signs, lat.basis):
            v = q.add(v, q.scale(s, b))
        out.append(v)
    return out


DIRICHLET_MAX_RANK = 3


def default_cell(inst: VarietyInstance, base: Optional[Sequence] = None) -> tuple[list[tuple], str]:
    """Vertices of the default fundamental polytope in W and its kind.

    The Dirichlet cell for lattices of rank <= 3; above that its vertex
    count explodes and the fundamental parallelotope of the reduced basis
    (another exact fundamental domain for the translations) is used.
    """
    w = slice_dimension(inst)
    base = base_point(inst) if base is None else q.vector(base)
    if w == 0:
        return [()], "point"
    lat = translation_lattice(inst)
    if lat is None or lat.rank < w:
        raise ValueError("translation lattice is not of full rank in W; no bounded cell")
    if lat.rank <= DIRICHLET_MAX_RANK:
        return _dirichlet_vertices(lat, base), "dirichlet"
    return _parallelotope_vertices(lat, base), "parallelotope"


def _random_point(rng: random.Random, gens, dim) -> tuple:
    x = q.zeros(dim)
    for g in gens:
        c = Fraction(rng.randint(0, 60), rng.randint(1, 12))
        x = q.add(x, q.scale(c, g))
    return x


@dataclass(frozen=True)
class FundamentalReport:
    samples: int
    covered: int
    coverage_failures: tuple  # sample indices
    word_budget: int
    words_checked: int
    overlaps: tuple  # (word, length)
    first_overlap_length: Optional[int]
    verdict: str

    @property
    def disjoint(self) -> bool:
        return not self.overlaps

    @property
    def ok(self) -> bool:
        return self.disjoint and not self.coverage_failures


def fundamental_domain_check(
    inst: VarietyInstance, pi: pc.PolyCone, samples: int = 1000, word_budget: int = 5, seed: int = 0
) -> FundamentalReport:
    """Sampled coverage and exact word-budgeted disjointness for a candidate domain.

    Runs on the relative model: ``pi`` lives in N^1(X/S).
    """
    rel = relative_instance(inst)
    if pi.dim != rel.rank:
        raise q.DimensionError(f"Pi has dimension {pi.dim}, relative model has rank {rel.rank}")
    target = _movable_closure(rel)
    gens = target.generators
    rng = random.Random(seed)
    words = enumerate_words(rel, word_budget)
    ident = q.identity(rel.rank)
    words = [(w, n, m) for w, n, m in words if m != ident]
    fdual = rel.curve_functional(rel.fibre)
    failures = []
    for i in range(samples):
        y = _random_point(rng, gens, rel.rank)
        while q.dot(fdual, y) <= 0:
            y = _random_point(rng, gens, rel.rank)
        red = orbit_reduce(rel, y, word_budget=word_budget).representative
        if pi.contains(red):
            continue
        if not any(pi.contains(q.matvec(m, red)) for _, _, m in words):
            failures.append(i)
    overlaps = []
    if pi.is_full_dimensional:
        for w, n, m in words:
            image = pc.map_cone(pi, m)
            if pc.intersect(pi, image).is_full_dimensional:
                overlaps.append((w, n))
    first = min((n for _, n in overlaps), default=None)
    ok = not failures and not overlaps
    verdict = (
        f"consistent with fundamental domain up to budget {word_budget}"
        if ok
        else "not a fundamental domain"
    )
    return FundamentalReport(
        samples, samples - len(failures), tuple(failures), word_budget, len(words), tuple(overlaps), first, verdict
    )
