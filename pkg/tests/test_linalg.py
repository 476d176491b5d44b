from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from pwscheme import linalg
from pwscheme.field import FieldElement, canonical, is_prime, is_square, projective_points

small = st.integers(-4, 4)


def matrices(max_rows=5, max_cols=5):
    return st.integers(1, max_rows).flatmap(
        lambda m: st.integers(1, max_cols).flatmap(
            lambda n: st.lists(st.lists(small, min_size=n, max_size=n), min_size=m, max_size=m)))


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_rank_matches_sympy(m):
    assert linalg.rank(m) == sympy.Matrix(m).rank()


@settings(max_examples=60, deadline=None)
@given(matrices(), st.data())
def test_solve_consistent_system(m, data):
    n = len(m[0])
    x = data.draw(st.lists(small, min_size=n, max_size=n))
    b = [sum(Fraction(a) * v for a, v in zip(row, x)) for row in m]
    sol = linalg.solve(linalg.dense_rows(m), b, n)
    assert sol.dimension == n - sympy.Matrix(m).rank()
    for row, rhs in zip(m, b):
        assert sum(Fraction(a) * v for a, v in zip(row, sol.particular)) == rhs
        for vec in sol.basis:
            assert sum(Fraction(a) * v for a, v in zip(row, vec)) == 0


def test_inconsistent_system_raises():
    with pytest.raises(linalg.InconsistentSystem):
        linalg.solve(linalg.dense_rows([[1, 1], [2, 2]]), [Fraction(1), Fraction(3)], 2)


def test_rref_pivots_leftmost():
    ech = linalg.rref(linalg.dense_rows([[0, 2, 4], [1, 1, 1]]), [Fraction(2), Fraction(3)], 3)
    assert ech.rank == 2
    assert ech.free == [2]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.lists(st.lists(small, min_size=n, max_size=n),
                                                      min_size=n, max_size=n)))
def test_inverse(m):
    if sympy.Matrix(m).det() == 0:
        return
    inv = linalg.inverse(m)
    n = len(m)
    assert linalg.matmul(m, inv) == [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


@given(st.fractions())
def test_rational_round_trip(v):
    text = linalg.format_rational(v)
    assert "/" in text
    assert linalg.parse_rational(text) == v


@given(st.integers(0, 2000))
def test_is_prime_matches_sympy(n):
    assert is_prime(n) == sympy.isprime(n)


@given(st.sampled_from([3, 5, 7, 11]), st.data())
def test_field_inverse_and_squares(q, data):
    a = data.draw(st.integers(1, q - 1))
    e = FieldElement(a, q)
    assert (e * e.inverse()).value == 1
    assert is_square(a, q) == any((b * b - a) % q == 0 for b in range(1, q))


def test_projective_point_count():
    for dim, q in ((3, 3), (4, 5), (6, 3)):
        pts = list(projective_points(dim, q))
        assert len(pts) == (q ** dim - 1) // (q - 1)
        assert pts == sorted(set(pts))
        assert all(canonical(p, q) == tuple(p) for p in pts)
