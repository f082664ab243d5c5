from fractions import Fraction
from itertools import product

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from toral_rigidity.errors import NotUnimodular, ParseError
from toral_rigidity.exact_linear_algebra import (ToralMatrix, char_poly, count_periodic_points, determinant,
                                                 format_matrix_text, inverse_unimodular, mat_pow, matmul,
                                                 matrix_power, parse_matrix_text, periodic_points,
                                                 smith_normal_form)

from conftest import companion_of

int_matrices = st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(st.integers(-6, 6), min_size=n, max_size=n), min_size=n, max_size=n))


@settings(max_examples=150, deadline=None)
@given(int_matrices)
def test_determinant_matches_sympy(m):
    assert determinant(m) == sympy.Matrix(m).det()


@settings(max_examples=150, deadline=None)
@given(int_matrices)
def test_char_poly_matches_sympy(m):
    x = sympy.symbols("x")
    expected = sympy.Poly(sympy.Matrix(m).charpoly(x).as_expr(), x).all_coeffs()[::-1]
    assert char_poly(m).to_list() == [int(c) for c in expected]


@settings(max_examples=150, deadline=None)
@given(int_matrices)
def test_smith_form_certifies_itself_and_matches_sympy(m):
    from sympy.matrices.normalforms import smith_normal_form as sympy_snf
    snf = smith_normal_form(m)
    assert snf.verify(m)
    ref = sympy_snf(sympy.Matrix(m), domain=sympy.ZZ)
    assert [abs(d) for d in snf.diagonal] == [abs(int(ref[i, i])) for i in range(len(m))]


def test_toral_matrix_rejects_non_unimodular():
    with pytest.raises(NotUnimodular):
        ToralMatrix(((2, 0), (0, 1)))


def test_inverse_is_exact(cubic):
    inv = inverse_unimodular(cubic.entries)
    assert matmul(inv, cubic.entries) == tuple(tuple(int(i == j) for j in range(3)) for i in range(3))


def _brute_force_periodic(a: ToralMatrix, n: int) -> set:
    """Points k/D of the torus with A^n x = x mod 1, D = |det(A^n - I)|."""
    D = count_periodic_points(a, n)
    An = mat_pow(a.entries, n)
    found = set()
    for k in product(range(D), repeat=a.n):
        x = [Fraction(v, D) for v in k]
        image = [sum(An[i][j] * x[j] for j in range(a.n)) for i in range(a.n)]
        if all((y - xi).denominator == 1 for y, xi in zip(image, x)):
            found.add(tuple(x))
    return found


@pytest.mark.parametrize("entries,n", [(((2, 1), (1, 1)), 1), (((2, 1), (1, 1)), 2), (((2, 1), (1, 1)), 3),
                                       (((2, 1), (1, 1)), 4), (((3, 1), (2, 1)), 2), (((1, 1), (1, 0)), 5)])
def test_periodic_points_match_brute_force(entries, n):
    a = ToralMatrix(entries)
    pts = {p for orb in periodic_points(a, n) for p in orb.points}
    assert pts == _brute_force_periodic(a, n)


def test_cat_map_small_periods(cat):
    assert count_periodic_points(cat, 1) == 1
    assert count_periodic_points(cat, 2) == 5
    assert sum(len(o.points) for o in periodic_points(cat, 2)) == 5


def test_periodic_orbits_are_invariant_and_translations_integral(cubic):
    for n in range(1, 4):
        orbits = periodic_points(cubic, n)
        assert sum(len(o.points) for o in orbits) == count_periodic_points(cubic, n)
        for orb in orbits:
            assert n % orb.period == 0
            assert len(orb.points) == orb.period
            k = orb.translation(cubic)
            assert all(isinstance(v, int) for v in k)
            pts = orb.as_floats()
            img = (pts @ cubic.to_numpy().T) % 1.0
            # the orbit is closed under A
            for p in img:
                assert np.min(np.abs(((pts - p + 0.5) % 1.0) - 0.5).max(axis=1)) < 1e-12


def test_matrix_power_handles_negative_exponents(cubic):
    b = companion_of(-1, -3, 0, 1) ** 2
    m = matrix_power([cubic, b], (3, -1))
    assert m == cubic ** 1


def test_matrix_text_round_trip(cubic):
    text = format_matrix_text(cubic.entries)
    assert parse_matrix_text(text) == cubic.entries


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as err:
        parse_matrix_text("2\n1 1\n1 y\n")
    assert err.value.line == 3
