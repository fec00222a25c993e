"""Exact rational scalars, vectors and matrices.

Vectors are tuples of :class:`fractions.Fraction`, matrices are tuples of
such row tuples.  Everything is immutable; every function returns new
values.  Elimination is fraction-free (Bareiss) on integer-scaled copies of
the input, so intermediate entries stay polynomially bounded.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Optional, Sequence

Vec = tuple  # tuple[Fraction, ...]
Mat = tuple  # tuple[Vec, ...]


class DimensionError(ValueError):
    """Raised when operand shapes do not agree."""


def rational(x) -> Fraction:
    """Coerce ``x`` (int, Fraction, or "p/q" string) to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        if not s:
            raise ValueError("empty rational")
        return Fraction(s)
    if isinstance(x, float):
        raise TypeError("floating-point input is not accepted; use 'p/q' strings")
    return Fraction(x)


def format_rational(q) -> str:
    q = rational(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def vector(xs: Iterable) -> Vec:
    return tuple(rational(x) for x in xs)


def matrix(rows: Iterable[Iterable]) -> Mat:
    m = tuple(vector(r) for r in rows)
    if m and any(len(r) != len(m[0]) for r in m):
        raise DimensionError("ragged matrix")
    return m


def zeros(n: int) -> Vec:
    return (Fraction(0),) * n


def unit(n: int, i: int) -> Vec:
    return tuple(Fraction(int(k == i)) for k in range(n))


def identity(n: int) -> Mat:
    return tuple(unit(n, i) for i in range(n))


def shape(a: Mat) -> tuple[int, int]:
    return len(a), (len(a[0]) if a else 0)


def dot(u: Sequence, v: Sequence) -> Fraction:
    if len(u) != len(v):
        raise DimensionError(f"dot of lengths {len(u)} and {len(v)}")
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def add(u: Sequence, v: Sequence) -> Vec:
    if len(u) != len(v):
        raise DimensionError("vector lengths differ")
    return tuple(a + b for a, b in zip(u, v))


def sub(u: Sequence, v: Sequence) -> Vec:
    if len(u) != len(v):
        raise DimensionError("vector lengths differ")
    return tuple(a - b for a, b in zip(u, v))


def scale(c, v: Sequence) -> Vec:
    c = rational(c)
    return tuple(c * a for a in v)


def neg(v: Sequence) -> Vec:
    return tuple(-a for a in v)


def is_zero(v: Sequence) -> bool:
    return all(a == 0 for a in v)


def transpose(a: Mat) -> Mat:
    return tuple(zip(*a)) if a else ()


def matvec(a: Mat, v: Sequence) -> Vec:
    return tuple(dot(row, v) for row in a)


def vecmat(v: Sequence, a: Mat) -> Vec:
    """Row vector times matrix."""
    if len(v) != len(a):
        raise DimensionError("vecmat shape mismatch")
    ncols = len(a[0]) if a else 0
    out = [Fraction(0)] * ncols
    for c, row in zip(v, a):
        if c:
            for j, x in enumerate(row):
                out[j] += c * x
    return tuple(out)


def matmul(a: Mat, b: Mat) -> Mat:
    if a and len(a[0]) != len(b):
        raise DimensionError("matmul shape mismatch")
    bt = transpose(b)
    return tuple(tuple(dot(row, col) for col in bt) for row in a)


def integer_scaled(v: Sequence) -> tuple[int, ...]:
    """Multiply by the lcm of denominators; no gcd reduction."""
    den = 1
    for x in v:
        den = lcm(den, Fraction(x).denominator)
    return tuple(int(Fraction(x) * den) for x in v)


def primitive(v: Sequence) -> tuple[int, ...]:
    """Positive multiple of ``v`` with coprime integer entries."""
    ints = integer_scaled(v)
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        return ints
    return tuple(x // g for x in ints)


def primitive_line(v: Sequence) -> tuple[int, ...]:
    """Primitive generator of the line through ``v``, first nonzero entry positive."""
    p = primitive(v)
    for x in p:
        if x:
            return p if x > 0 else tuple(-y for y in p)
    return p


def _bareiss(rows: list[list[int]], ncols: int) -> tuple[list[list[int]], list[int]]:
    """Fraction-free row echelon form of an integer matrix, in place."""
    m = rows
    pivots: list[int] = []
    r = 0
    prev = 1
    for col in range(ncols):
        if r >= len(m):
            break
        piv = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][col]
        for i in range(r + 1, len(m)):
            a = m[i][col]
            row_i = m[i]
            row_r = m[r]
            for j in range(col, ncols):
                row_i[j] = (p * row_i[j] - a * row_r[j]) // prev
        # columns left of `col` in rows below r are already zero
        prev = p
        pivots.append(col)
        r += 1
    return m, pivots


def _int_rows(a: Sequence[Sequence]) -> list[list[int]]:
    return [list(integer_scaled(row)) for row in a]


def rank(a: Mat) -> int:
    if not a:
        return 0
    _, pivots = _bareiss(_int_rows(a), len(a[0]))
    return len(pivots)


def rref(a: Mat) -> tuple[Mat, tuple[int, ...]]:
    """Reduced row echelon form (nonzero rows only) and pivot columns."""
    if not a:
        return (), ()
    ncols = len(a[0])
    ech, pivots = _bareiss(_int_rows(a), ncols)
    rows = [[Fraction(x) for x in ech[i]] for i in range(len(pivots))]
    for i in reversed(range(len(pivots))):
        c = pivots[i]
        p = rows[i][c]
        rows[i] = [x / p for x in rows[i]]
        for k in range(i):
            f = rows[k][c]
            if f:
                rows[k] = [x - f * y for x, y in zip(rows[k], rows[i])]
    return tuple(tuple(r) for r in rows), tuple(pivots)


def kernel_basis(a: Mat, ncols: Optional[int] = None) -> list[Vec]:
    """Basis of {x : a x = 0}, one vector per free column.

    ``ncols`` is required when ``a`` has no rows.
    """
    if not a:
        if ncols is None:
            raise DimensionError("ncols required for an empty matrix")
        return [unit(ncols, i) for i in range(ncols)]
    n = len(a[0])
    if ncols is not None and ncols != n:
        raise DimensionError("ncols disagrees with matrix")
    r, pivots = rref(a)
    free = [j for j in range(n) if j not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for row, pc in zip(r, pivots):
            v[pc] = -row[f]
        basis.append(tuple(v))
    return basis


def solve_linear(a: Mat, b: Sequence) -> tuple[Optional[Vec], list[Vec]]:
    """One exact solution of ``a x = b`` (or None) plus a basis of ker(a)."""
    b = vector(b)
    if len(a) != len(b):
        raise DimensionError(f"{len(a)} equations but rhs of length {len(b)}")
    if not a:
        raise DimensionError("empty system has no column count")
    n = len(a[0])
    aug = tuple(tuple(row) + (bi,) for row, bi in zip(a, b))
    r, pivots = rref(aug)
    kernel = kernel_basis(a)
    if n in pivots:
        return None, kernel
    x = [Fraction(0)] * n
    for row, pc in zip(r, pivots):
        x[pc] = row[n]
    return tuple(x), kernel


def determinant(a: Mat) -> Fraction:
    n, m = shape(a)
    if n != m:
        raise DimensionError("determinant of a non-square matrix")
    if n == 0:
        return Fraction(1)
    dens = [lcm(*(Fraction(x).denominator for x in row)) for row in a]
    rows = [[int(Fraction(x) * d) for x in row] for row, d in zip(a, dens)]
    sign = 1
    prev = 1
    for k in range(n):
        piv = next((i for i in range(k, n) if rows[i][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            rows[k], rows[piv] = rows[piv], rows[k]
            sign = -sign
        p = rows[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                rows[i][j] = (p * rows[i][j] - rows[i][k] * rows[k][j]) // prev
            rows[i][k] = 0
        prev = p
    total_den = 1
    for d in dens:
        total_den *= d
    return Fraction(sign * rows[n - 1][n - 1], total_den)


def inverse(a: Mat) -> Mat:
    n, m = shape(a)
    if n != m:
        raise DimensionError("inverse of a non-square matrix")
    aug = tuple(tuple(row) + unit(n, i) for i, row in enumerate(a))
    r, pivots = rref(aug)
    if tuple(pivots[:n]) != tuple(range(n)) or len(pivots) < n:
        raise ValueError("matrix is singular")
    return tuple(tuple(row[n:]) for row in r)


def is_integral(a) -> bool:
    if a and isinstance(a[0], tuple):
        return all(Fraction(x).denominator == 1 for row in a for x in row)
    return all(Fraction(x).denominator == 1 for x in a)


def row_space_basis(vectors: Sequence[Sequence]) -> list[Vec]:
    """Canonical basis (RREF rows) of the span of ``vectors``."""
    vs = [v for v in vectors if not is_zero(v)]
    if not vs:
        return []
    r, _ = rref(tuple(tuple(Fraction(x) for x in v) for v in vs))
    return list(r)


def in_span(v: Sequence, vectors: Sequence[Sequence]) -> bool:
    if is_zero(v):
        return True
    if not vectors:
        return False
    return rank(tuple(vector(w) for w in vectors) + (vector(v),)) == rank(
        tuple(vector(w) for w in vectors)
    )


def hermite_basis(rows: Sequence[Sequence[int]]) -> tuple[list[tuple[int, ...]], list[tuple[int, ...]]]:
    """Integer row echelon basis of the lattice spanned by integer ``rows``.

    Returns ``(basis, transform)`` with ``basis[i] = sum_j transform[i][j] * rows[j]``.
    """
    m = [list(r) for r in rows]
    k = len(m)
    if k == 0:
        return [], []
    n = len(m[0])
    u = [[int(i == j) for j in range(k)] for i in range(k)]
    r = 0
    for col in range(n):
        if r >= k:
            break
        while True:
            nz = [i for i in range(r, k) if m[i][col] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(m[i][col]))
            m[r], m[piv] = m[piv], m[r]
            u[r], u[piv] = u[piv], u[r]
            done = True
            for i in range(r + 1, k):
                if m[i][col]:
                    q = m[i][col] // m[r][col]
                    m[i] = [x - q * y for x, y in zip(m[i], m[r])]
                    u[i] = [x - q * y for x, y in zip(u[i], u[r])]
                    if m[i][col]:
                        done = False
            if done:
                break
        if any(m[i][col] for i in range(r, k)):
            if m[r][col] < 0:
                m[r] = [-x for x in m[r]]
                u[r] = [-x for x in u[r]]
            r += 1
    return [tuple(m[i]) for i in range(r)], [tuple(u[i]) for i in range(r)]
