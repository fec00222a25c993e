"""Instance schema: lattices, pairing, fibration data, flop rule, group.

Divisor classes are vectors in the divisor basis of N^1, curve classes are
vectors in the curve basis of N_1, and ``D . C = d^T P c`` for the pairing
matrix ``P``.  An instance is either *absolute* (N^1(X)) or *relative*
(N^1(X/S)); :func:`relative_instance` turns the former into the latter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import exactq as q

BUNDLED = ("toy-vertical", "i2-chain", "quadric-net")
MORI_TYPES = ("fibre", 1, 2, 3, 4, 5)


class SchemaError(ValueError):
    """Instance document does not follow the file schema."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class InstanceError(ValueError):
    """Instance parsed but violates one or more structural identities."""

    def __init__(self, violations: Sequence[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class RayRecord:
    curve: tuple
    mori_type: object  # "fibre", 1..5, or "k_trivial"
    exceptional_divisor: Optional[tuple] = None


@dataclass(frozen=True)
class GroupElement:
    matrix: tuple
    label: str = ""
    provenance: str = ""


@dataclass(frozen=True)
class FlopRule:
    """How curve classes of a fibre change when one of its components is flopped.

    Either a symmetric form ``Q`` on N_1 giving the reflection
    ``t_c(g) = g - 2 <g,c>/<c,c> c``, or explicit per-wall matrices.
    """

    reflection_form: Optional[tuple] = None
    explicit: tuple = ()  # ((wall, matrix), ...)

    def map_for(self, c: Sequence) -> tuple:
        c = q.vector(c)
        if self.reflection_form is not None:
            qc = q.matvec(self.reflection_form, c)
            cqc = q.dot(c, qc)
            if cqc == 0:
                raise ValueError(f"wall {fmt_vec(c)} is isotropic for the reflection form")
            k = Fraction(-2) / cqc
            n = len(c)
            return tuple(
                tuple(Fraction(int(i == j)) + k * c[i] * qc[j] for j in range(n)) for i in range(n)
            )
        for wall, mat in self.explicit:
            if wall == c:
                return mat
        raise KeyError(f"no explicit flop map for wall {fmt_vec(c)}")

    def check(self, c: Sequence, fibre: Sequence) -> list[str]:
        """Violated identities of the map attached to wall ``c``."""
        try:
            t = self.map_for(c)
        except (KeyError, ValueError) as exc:
            return [str(exc)]
        c = q.vector(c)
        bad = []
        if q.matvec(t, c) != q.neg(c):
            bad.append(f"flop map does not send wall {fmt_vec(c)} to its negative")
        if q.matvec(t, fibre) != q.vector(fibre):
            bad.append(f"flop map for wall {fmt_vec(c)} moves the fibre class")
        if q.matmul(t, t) != q.identity(len(c)):
            bad.append(f"flop map for wall {fmt_vec(c)} is not an involution")
        return bad


@dataclass(frozen=True)
class VarietyInstance:
    rank: int
    divisor_basis: tuple
    curve_basis: tuple
    pairing: tuple
    canonical_class: tuple
    iitaka_dim: int
    fibre: tuple
    fibral: tuple
    vertical: tuple
    partition: tuple
    multiplicities: tuple
    mu: tuple
    ample_pullbacks: tuple
    k_negative_rays: tuple
    flop_rule: FlopRule
    seed_frame: tuple
    seed_groups: tuple
    seed_multiplicities: tuple
    group_generators: tuple
    is_relative: bool
    label: str = ""
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def n(self) -> int:
        return len(self.fibral)

    def pair(self, d: Sequence, c: Sequence) -> Fraction:
        """Intersection number D . C."""
        return q.dot(q.vecmat(q.vector(d), self.pairing), q.vector(c))

    def curve_functional(self, c: Sequence) -> tuple:
        """The vector ``P c``: x . c as a linear functional on N^1."""
        return q.matvec(self.pairing, q.vector(c))

    def divisor_functional(self, d: Sequence) -> tuple:
        """The vector ``P^T d``: d . y as a linear functional on N_1."""
        return q.vecmat(q.vector(d), self.pairing)

    def fibral_classes(self) -> tuple:
        """F, F_1..F_n and the seed wall frame, in that order."""
        return (self.fibre,) + self.fibral + self.seed_frame

    def dual_action(self, g) -> tuple:
        """Matrix on N_1 dual to ``g`` on N^1: (g d) . (g_* c) = d . c."""
        mat = g.matrix if isinstance(g, GroupElement) else g
        p = self.pairing
        return q.matmul(q.matmul(q.inverse(p), q.transpose(q.inverse(mat))), p)

    def is_divisorial_wall(self, c: Sequence) -> bool:
        pc = q.primitive(c)
        return any(q.primitive(fi) == pc for fi in self.fibral)


def fmt_vec(v: Sequence) -> str:
    return "(" + ",".join(q.format_rational(x) for x in v) + ")"


# --------------------------------------------------------------------------- parsing

_TOP_KEYS = {
    "rank", "divisor_basis", "curve_basis", "pairing", "canonical_class", "iitaka_dim",
    "fibre_class", "fibral_classes", "vertical_divisors", "partition", "multiplicities_m",
    "pullback_coeffs_mu", "ample_pullbacks", "k_negative_rays", "flop_rule", "seed_chamber",
    "group_generators", "metadata", "is_relative",
}
_REQUIRED = _TOP_KEYS - {"metadata"}


def _rat(x, path):
    if isinstance(x, bool) or not isinstance(x, (str, int)):
        raise SchemaError(path, f"expected a rational as 'p/q' string, got {x!r}")
    try:
        return q.rational(x)
    except (ValueError, ZeroDivisionError):
        raise SchemaError(path, f"malformed rational {x!r}") from None


def _vec(x, path, dim):
    if not isinstance(x, list):
        raise SchemaError(path, "expected an array")
    if len(x) != dim:
        raise SchemaError(path, f"expected {dim} entries, got {len(x)}")
    return tuple(_rat(v, f"{path}[{i}]") for i, v in enumerate(x))


def _vecs(x, path, dim):
    if not isinstance(x, list):
        raise SchemaError(path, "expected an array")
    return tuple(_vec(v, f"{path}[{i}]", dim) for i, v in enumerate(x))


def _mat(x, path, rows, cols):
    if not isinstance(x, list) or len(x) != rows:
        raise SchemaError(path, f"expected a {rows}x{cols} matrix")
    return tuple(_vec(r, f"{path}[{i}]", cols) for i, r in enumerate(x))


def _int(x, path):
    if isinstance(x, bool) or not isinstance(x, int):
        raise SchemaError(path, f"expected an integer, got {x!r}")
    return x


def _index_lists(x, path):
    if not isinstance(x, list):
        raise SchemaError(path, "expected an array of index arrays")
    out = []
    for i, member in enumerate(x):
        if not isinstance(member, list):
            raise SchemaError(f"{path}[{i}]", "expected an array of indices")
        out.append(tuple(_int(v, f"{path}[{i}][{j}]") for j, v in enumerate(member)))
    return tuple(out)


def _check_keys(obj, allowed, path):
    extra = set(obj) - set(allowed)
    if extra:
        raise SchemaError(path, f"unknown keys {sorted(extra)}")


def parse_instance(doc, label: str = "") -> VarietyInstance:
    """Parse an instance document (JSON text or decoded dict) without validating identities."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("$", "top level must be an object")
    _check_keys(doc, _TOP_KEYS, "$")
    missing = sorted(_REQUIRED - set(doc))
    if missing:
        raise SchemaError("$", f"missing keys {missing}")
    rank = _int(doc["rank"], "$.rank")
    if rank <= 0:
        raise SchemaError("$.rank", "rank must be positive")
    dbasis = tuple(doc["divisor_basis"])
    cbasis = tuple(doc["curve_basis"])
    for name, b in (("divisor_basis", dbasis), ("curve_basis", cbasis)):
        if len(b) != rank or not all(isinstance(s, str) for s in b):
            raise SchemaError(f"$.{name}", f"expected {rank} labels")
    pairing = _mat(doc["pairing"], "$.pairing", rank, rank)
    kclass = _vec(doc["canonical_class"], "$.canonical_class", rank)
    iitaka = _int(doc["iitaka_dim"], "$.iitaka_dim")
    fibre = _vec(doc["fibre_class"], "$.fibre_class", rank)
    fibral = _vecs(doc["fibral_classes"], "$.fibral_classes", rank)
    vertical = _vecs(doc["vertical_divisors"], "$.vertical_divisors", rank)
    partition = _index_lists(doc["partition"], "$.partition")
    mult = doc["multiplicities_m"]
    if not isinstance(mult, list):
        raise SchemaError("$.multiplicities_m", "expected an array")
    mult = tuple(_int(v, f"$.multiplicities_m[{i}]") for i, v in enumerate(mult))
    mu = doc["pullback_coeffs_mu"]
    if not isinstance(mu, list):
        raise SchemaError("$.pullback_coeffs_mu", "expected an array")
    mu = tuple(_rat(v, f"$.pullback_coeffs_mu[{i}]") for i, v in enumerate(mu))
    ample = _vecs(doc["ample_pullbacks"], "$.ample_pullbacks", rank)

    rays = []
    if not isinstance(doc["k_negative_rays"], list):
        raise SchemaError("$.k_negative_rays", "expected an array")
    for i, r in enumerate(doc["k_negative_rays"]):
        p = f"$.k_negative_rays[{i}]"
        if not isinstance(r, dict):
            raise SchemaError(p, "expected an object")
        _check_keys(r, {"curve", "mori_type", "exceptional_divisor"}, p)
        if "curve" not in r or "mori_type" not in r:
            raise SchemaError(p, "needs 'curve' and 'mori_type'")
        mt = r["mori_type"]
        if mt not in MORI_TYPES or isinstance(mt, bool):
            raise SchemaError(f"{p}.mori_type", f"expected 1..5 or 'fibre', got {mt!r}")
        exc = r.get("exceptional_divisor")
        rays.append(
            RayRecord(
                _vec(r["curve"], f"{p}.curve", rank),
                mt,
                None if exc is None else _vec(exc, f"{p}.exceptional_divisor", rank),
            )
        )

    fr = doc["flop_rule"]
    if not isinstance(fr, dict) or len(fr) != 1 or next(iter(fr)) not in ("reflection_form", "explicit"):
        raise SchemaError("$.flop_rule", "expected {'reflection_form': ...} or {'explicit': [...]}")
    if "reflection_form" in fr:
        rule = FlopRule(reflection_form=_mat(fr["reflection_form"], "$.flop_rule.reflection_form", rank, rank))
    else:
        entries = fr["explicit"]
        if not isinstance(entries, list):
            raise SchemaError("$.flop_rule.explicit", "expected an array")
        parsed = []
        for i, e in enumerate(entries):
            p = f"$.flop_rule.explicit[{i}]"
            if not isinstance(e, dict):
                raise SchemaError(p, "expected an object")
            _check_keys(e, {"wall", "matrix"}, p)
            parsed.append((_vec(e.get("wall"), f"{p}.wall", rank), _mat(e.get("matrix"), f"{p}.matrix", rank, rank)))
        rule = FlopRule(explicit=tuple(parsed))

    seed = doc["seed_chamber"]
    if not isinstance(seed, dict) or "wall_frame" not in seed:
        raise SchemaError("$.seed_chamber", "expected an object with 'wall_frame'")
    _check_keys(seed, {"wall_frame", "groups", "multiplicities"}, "$.seed_chamber")
    frame = _vecs(seed["wall_frame"], "$.seed_chamber.wall_frame", rank)
    groups = _index_lists(seed["groups"], "$.seed_chamber.groups") if "groups" in seed else (tuple(range(len(frame))),)
    if "multiplicities" in seed:
        fm = seed["multiplicities"]
        if not isinstance(fm, list):
            raise SchemaError("$.seed_chamber.multiplicities", "expected an array")
        fm = tuple(_int(v, f"$.seed_chamber.multiplicities[{i}]") for i, v in enumerate(fm))
    else:
        fm = (1,) * len(frame)

    gens = []
    if not isinstance(doc["group_generators"], list):
        raise SchemaError("$.group_generators", "expected an array")
    for i, g in enumerate(doc["group_generators"]):
        p = f"$.group_generators[{i}]"
        if isinstance(g, dict):
            _check_keys(g, {"matrix", "label", "provenance"}, p)
            gens.append(GroupElement(_mat(g.get("matrix"), f"{p}.matrix", rank, rank), str(g.get("label", f"g{i + 1}")), str(g.get("provenance", ""))))
        else:
            gens.append(GroupElement(_mat(g, p, rank, rank), f"g{i + 1}", ""))

    meta = doc.get("metadata", {})
    if not isinstance(meta, dict):
        raise SchemaError("$.metadata", "expected an object")
    rel = doc["is_relative"]
    if not isinstance(rel, bool):
        raise SchemaError("$.is_relative", "expected a boolean")
    return VarietyInstance(
        rank=rank, divisor_basis=dbasis, curve_basis=cbasis, pairing=pairing, canonical_class=kclass,
        iitaka_dim=iitaka, fibre=fibre, fibral=fibral, vertical=vertical, partition=partition,
        multiplicities=mult, mu=mu, ample_pullbacks=ample, k_negative_rays=tuple(rays), flop_rule=rule,
        seed_frame=frame, seed_groups=groups, seed_multiplicities=fm, group_generators=tuple(gens),
        is_relative=rel, label=label or str(meta.get("name", "")), metadata=meta,
    )


# --------------------------------------------------------------------------- validation


def structural_violations(inst: VarietyInstance) -> list[str]:
    """Every violated fibration identity, in a stable order (1-based indices)."""
    bad: list[str] = []
    n = inst.n
    if inst.iitaka_dim not in (1, 2, 3):
        bad.append(f"iitaka_dim must be 1, 2 or 3, got {inst.iitaka_dim}")
    if q.determinant(inst.pairing) == 0:
        bad.append("pairing is degenerate")
    if len(inst.vertical) != n:
        bad.append(f"{len(inst.vertical)} vertical divisors but {n} fibral classes")
    if len(inst.multiplicities) != n or len(inst.mu) != n:
        bad.append("multiplicities_m and pullback_coeffs_mu must have one entry per fibral class")
    if any(m <= 0 for m in inst.multiplicities):
        bad.append("multiplicities m_i must be positive")
    if any(x <= 0 for x in inst.mu):
        bad.append("pullback coefficients mu_i must be positive")
    flat = sorted(i for member in inst.partition for i in member)
    if flat != list(range(n)):
        bad.append("partition does not split the fibral indices into disjoint members")
    if bad:
        return bad
    F = inst.fibre
    fib = inst.fibral_classes()
    for p, member in enumerate(inst.partition, start=1):
        total = q.zeros(inst.rank)
        for i in member:
            total = q.add(total, q.scale(inst.multiplicities[i], inst.fibral[i]))
        if total != F:
            bad.append(f"Σ m_i F_i ≠ F in partition member {p}")
        pull = q.zeros(inst.rank)
        for i in member:
            pull = q.add(pull, q.scale(inst.mu[i], inst.vertical[i]))
        if any(inst.pair(pull, g) != 0 for g in fib):
            bad.append(f"Σ μ_i D_i ∉ T(X/S) in partition member {p}")
        for i in member:
            for j in member:
                if i != j and inst.pair(inst.vertical[i], inst.fibral[j]) < 0:
                    bad.append(f"D_i·F_j ≥ 0 violated at i={i + 1}, j={j + 1}")
    for i, d in enumerate(inst.vertical):
        if inst.pair(d, F) != 0:
            bad.append(f"D_i·F = 0 violated at i={i + 1}")
        if inst.pair(d, inst.fibral[i]) >= 0:
            bad.append(f"D_i·F_i < 0 violated at i={i + 1}")
    for k, r in enumerate(inst.k_negative_rays, start=1):
        if inst.pair(inst.canonical_class, r.curve) >= 0:
            bad.append(f"K·c < 0 violated for k_negative_ray {k}")
    for a in inst.ample_pullbacks:
        if any(inst.pair(a, g) != 0 for g in fib):
            bad.append(f"ample pullback {fmt_vec(a)} is not relatively trivial")
    if inst.pair(inst.canonical_class, F) != 0:
        bad.append("K·F = 0 violated")
    rf = inst.flop_rule.reflection_form
    if rf is not None and q.transpose(rf) != rf:
        bad.append("reflection form is not symmetric")
    bad.extend(frame_violations(inst, inst.seed_frame, inst.seed_groups, inst.seed_multiplicities))
    return bad


def frame_violations(inst: VarietyInstance, frame, groups, mults) -> list[str]:
    bad = []
    if len(mults) != len(frame):
        return ["frame multiplicities do not match the frame"]
    flat = sorted(i for g in groups for i in g)
    if flat != list(range(len(frame))):
        return ["frame groups do not partition the wall frame"]
    for gi, g in enumerate(groups, start=1):
        total = q.zeros(inst.rank)
        for i in g:
            total = q.add(total, q.scale(mults[i], frame[i]))
        if total != inst.fibre:
            bad.append(f"frame group {gi} does not sum to F")
    for i, c in enumerate(frame, start=1):
        if not q.is_integral(c) or q.primitive(c) != tuple(int(x) for x in c):
            bad.append(f"frame class {i} is not a primitive integral vector")
    for c in frame:
        if inst.is_divisorial_wall(c):
            continue
        for msg in inst.flop_rule.check(c, inst.fibre):
            bad.append(msg)
        if inst.flop_rule.reflection_form is not None:
            t = inst.flop_rule.map_for(c)
            for g in groups:
                if any(frame[j] == q.vector(c) for j in g):
                    for j in g:
                        if not q.is_integral(q.matvec(t, frame[j])):
                            bad.append(f"flop across {fmt_vec(c)} gives a non-integral frame class")
    return bad


def reducible_fibre_pairs(inst: VarietyInstance) -> list[tuple[int, int]]:
    """Unordered pairs of wall-frame classes summing to the fibre class."""
    frame = inst.seed_frame
    out = []
    for i in range(len(frame)):
        for j in range(i + 1, len(frame)):
            if q.add(frame[i], frame[j]) == inst.fibre:
                out.append((i, j))
    return out


def load_and_validate(source, label: str = "") -> VarietyInstance:
    """Parse, then check every identity; raise :class:`InstanceError` listing all failures."""
    inst = parse_instance(source, label)
    bad = structural_violations(inst)
    if not bad:
        from .chamberwalk import chamber_violations, seed_chamber
        from .groupact import validate_group_element

        bad.extend(chamber_violations(inst, seed_chamber(inst)))
        for g in inst.group_generators:
            report = validate_group_element(inst, g)
            bad.extend(f"group generator {g.label}: {v}" for v in report.violations)
    if bad:
        raise InstanceError(bad)
    return inst


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("conelab") / "data" / f"{name}.json"))


def load_instance(name_or_path: str) -> VarietyInstance:
    """Load and validate a bundled instance by name, or an instance file by path."""
    if name_or_path in BUNDLED:
        path = bundled_path(name_or_path)
        label = name_or_path
    else:
        path = Path(name_or_path)
        label = path.stem
    return load_and_validate(path.read_text(encoding="utf-8"), label)


@lru_cache(maxsize=None)
def bundled_instance(name: str) -> VarietyInstance:
    return load_instance(name)


# --------------------------------------------------------------------------- T(X/S)


@lru_cache(maxsize=64)
def trivial_subspace(inst: VarietyInstance) -> tuple[tuple, tuple]:
    """Basis of T(X/S) and the quotient matrix N^1 -> N^1(X/S).

    The quotient coordinates of ``x`` are its intersection numbers with a
    lattice basis of the fibral curve classes, so for a relative instance
    the quotient is the identity.
    """
    if inst.is_relative:
        return (), q.identity(inst.rank)
    rows = tuple(inst.curve_functional(g) for g in inst.fibral_classes())
    basis = tuple(q.kernel_basis(rows))
    lattice = fibral_lattice_basis(inst)
    quotient = tuple(inst.curve_functional(g) for g in lattice)
    return basis, quotient


@lru_cache(maxsize=64)
def fibral_lattice_basis(inst: VarietyInstance) -> tuple:
    classes = [q.integer_scaled(g) for g in inst.fibral_classes()]
    basis, _ = q.hermite_basis(classes)
    return tuple(q.vector(b) for b in basis)


def fibral_span_rank(inst: VarietyInstance) -> int:
    return q.rank(tuple(inst.fibral_classes()))


@lru_cache(maxsize=64)
def relative_instance(inst: VarietyInstance) -> VarietyInstance:
    """The same data pushed to N^1(X/S) (identity for relative instances)."""
    if inst.is_relative:
        return inst
    _, quotient = trivial_subspace(inst)
    lattice = fibral_lattice_basis(inst)
    e = len(lattice)
    gamma_cols = q.transpose(tuple(lattice))  # rank x e

    def curve(c):
        return relative_curve(inst, c)

    def div(d):
        return q.matvec(quotient, d)

    gens = [GroupElement(relative_matrix(inst, g), g.label, g.provenance) for g in inst.group_generators]
    rule = inst.flop_rule
    if rule.reflection_form is not None:
        rel_rule = FlopRule(reflection_form=q.matmul(q.matmul(q.transpose(gamma_cols), rule.reflection_form), gamma_cols))
    else:
        rel_rule = FlopRule(explicit=tuple((curve(w), _restrict(m, gamma_cols)) for w, m in rule.explicit))
    meta = dict(inst.metadata)
    meta["relative_of"] = inst.label
    return replace(
        inst,
        rank=e,
        divisor_basis=tuple(f"y{i + 1}" for i in range(e)),
        curve_basis=tuple(fmt_vec(g) for g in lattice),
        pairing=q.identity(e),
        canonical_class=div(inst.canonical_class),
        fibre=curve(inst.fibre),
        fibral=tuple(curve(c) for c in inst.fibral),
        vertical=tuple(div(d) for d in inst.vertical),
        ample_pullbacks=(),
        k_negative_rays=(),
        flop_rule=rel_rule,
        seed_frame=tuple(curve(c) for c in inst.seed_frame),
        group_generators=tuple(gens),
        is_relative=True,
        label=f"{inst.label}/S",
        metadata=meta,
    )


def relative_curve(inst: VarietyInstance, c: Sequence) -> tuple:
    """Coordinates of a fibral curve class in the lattice basis of N_1(X/S)."""
    if inst.is_relative:
        return q.vector(c)
    gamma_cols = q.transpose(tuple(fibral_lattice_basis(inst)))
    x, _ = q.solve_linear(gamma_cols, c)
    if x is None:
        raise ValueError(f"curve class {fmt_vec(c)} is not fibral")
    return x


def relative_matrix(inst: VarietyInstance, g) -> tuple:
    """Matrix induced on N^1(X/S) by a group element of ``inst``."""
    mat = g.matrix if isinstance(g, GroupElement) else g
    if inst.is_relative:
        return q.matrix(mat)
    _, quotient = trivial_subspace(inst)
    right_inv = q.matmul(q.transpose(quotient), q.inverse(q.matmul(quotient, q.transpose(quotient))))
    return q.matmul(q.matmul(quotient, mat), right_inv)


def _restrict(m, cols):
    images = q.matmul(m, cols)
    out = []
    for col in q.transpose(images):
        x, _ = q.solve_linear(cols, col)
        if x is None:
            raise ValueError("explicit flop map does not preserve the fibral span")
        out.append(x)
    return q.transpose(tuple(out))


def lift_relative_curve(inst: VarietyInstance, c_rel: Sequence) -> tuple:
    """Inverse of the relative curve coordinates: sum a_k gamma_k."""
    if inst.is_relative:
        return q.vector(c_rel)
    lattice = fibral_lattice_basis(inst)
    out = q.zeros(inst.rank)
    for a, g in zip(c_rel, lattice):
        out = q.add(out, q.scale(a, g))
    return out


def preimage(inst: VarietyInstance, y: Sequence) -> tuple:
    """A divisor class of ``inst`` whose quotient is ``y``."""
    _, quotient = trivial_subspace(inst)
    x, _ = q.solve_linear(quotient, y)
    if x is None:
        raise ValueError("class is not in the image of the quotient map")
    return x
