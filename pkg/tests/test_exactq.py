from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conelab import exactq as q
from oracles import leibniz_det

small = st.integers(-6, 6)
rats = st.builds(Fraction, st.integers(-9, 9), st.integers(1, 5))


def mats(rows, cols, elems=rats):
    return st.lists(st.lists(elems, min_size=cols, max_size=cols), min_size=rows, max_size=rows).map(q.matrix)


@st.composite
def any_matrix(draw, max_dim=5):
    r = draw(st.integers(1, max_dim))
    c = draw(st.integers(1, max_dim))
    return draw(mats(r, c))


@st.composite
def square(draw, max_dim=4):
    n = draw(st.integers(1, max_dim))
    return draw(mats(n, n))


def test_rational_parsing():
    assert q.rational("7/2") == Fraction(7, 2)
    assert q.rational(" -3 ") == -3
    with pytest.raises(TypeError):
        q.rational(0.5)
    with pytest.raises(TypeError):
        q.rational(True)
    with pytest.raises(ValueError):
        q.rational("")


def test_format_rational():
    assert q.format_rational(Fraction(-6, 4)) == "-3/2"
    assert q.format_rational(4) == "4"


def test_shape_errors():
    with pytest.raises(q.DimensionError):
        q.dot((1, 2), (1,))
    with pytest.raises(q.DimensionError):
        q.matmul(q.matrix([[1, 2]]), q.matrix([[1, 2]]))
    with pytest.raises(q.DimensionError):
        q.matrix([[1, 2], [3]])


def test_primitive():
    assert q.primitive((Fraction(2, 3), Fraction(-4, 3))) == (1, -2)
    assert q.primitive_line((0, -2, 4)) == (0, 1, -2)
    assert q.primitive((0, 0)) == (0, 0)


@given(any_matrix())
def test_rank_nullity(a):
    kernel = q.kernel_basis(a)
    assert q.rank(a) + len(kernel) == len(a[0])
    for k in kernel:
        assert q.is_zero(q.matvec(a, k))


@given(any_matrix())
def test_rref_is_reduced(a):
    r, pivots = q.rref(a)
    assert len(r) == q.rank(a)
    for row, p in zip(r, pivots):
        assert row[p] == 1
        assert all(other[p] == 0 for other in r if other is not row)


@given(square())
def test_determinant_matches_leibniz(a):
    assert q.determinant(a) == leibniz_det(a)


@given(square())
def test_inverse(a):
    if q.determinant(a) == 0:
        with pytest.raises(ValueError):
            q.inverse(a)
    else:
        assert q.matmul(a, q.inverse(a)) == q.identity(len(a))


@given(any_matrix(), st.data())
def test_solve_linear(a, data):
    x_true = data.draw(st.lists(rats, min_size=len(a[0]), max_size=len(a[0])))
    b = q.matvec(a, x_true)
    x, kernel = q.solve_linear(a, b)
    assert x is not None and q.matvec(a, x) == b
    assert len(kernel) == len(a[0]) - q.rank(a)


def test_solve_inconsistent():
    x, _ = q.solve_linear(q.matrix([[1, 1], [2, 2]]), (1, 3))
    assert x is None


@given(st.lists(st.lists(small, min_size=3, max_size=3), min_size=1, max_size=5))
def test_hermite_basis_spans_same_lattice(rows):
    basis, transform = q.hermite_basis(rows)
    for b, t in zip(basis, transform):
        combo = tuple(sum(c * r[k] for c, r in zip(t, rows)) for k in range(3))
        assert combo == b
    assert len(basis) == q.rank(q.matrix(rows))
    # every input row is an integral combination of the echelon basis
    for r in rows:
        if not basis:
            assert not any(r)
            continue
        x, _ = q.solve_linear(q.transpose(q.matrix(basis)), r)
        assert x is not None and q.is_integral(x)


@given(any_matrix())
def test_row_space_basis_and_span(a):
    basis = q.row_space_basis(a)
    assert len(basis) == q.rank(a)
    for row in a:
        assert q.in_span(row, basis)
