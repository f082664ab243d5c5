import mpmath as mp
import numpy as np
import pytest
import sympy

from toral_rigidity.centralizer import (GeneratorSet, UnitSearchConfig, dirichlet_rank, find_units,
                                        is_symplectic, multiplicative_independence, product_generators,
                                        symplectic_centralizer_front_end, symplectic_part, symplectic_rank)
from toral_rigidity.errors import HypothesisViolation, OddDimension, RankNotReached
from toral_rigidity.exact_linear_algebra import ToralMatrix
from toral_rigidity.spectral import joint_eigendecomposition

from conftest import CAT, companion_of

SYMPLECTIC_4 = ((3, 1, -1, -1), (1, 2, -1, 0), (-1, -1, 1, 0), (-1, 0, 0, 1))
SYMPLECTIC_4_COMPLEX = ((0, 1, -1, -1), (-1, 1, -1, 0), (1, 0, 1, 0), (0, -1, 0, 1))

POLYS = [(-1, -3, 0, 1), (-1, -1, 0, 1), (1, -3, 0, 1), (1, -2, -1, 1), (1, 0, -4, 0, 1), (-1, 1, 0, 0, 1),
         (-1, 0, 0, 0, 1, 1), (1, -1, 1, -1, 1)]


def _sympy_signature_rank(coeffs):
    x = sympy.symbols("x")
    p = sympy.Poly(list(reversed(coeffs)), x)
    r = len(sympy.real_roots(p))
    return r + (p.degree() - r) // 2 - 1


@pytest.mark.parametrize("coeffs", POLYS)
def test_dirichlet_rank_matches_root_count_oracle(coeffs):
    a = companion_of(*coeffs)
    assert dirichlet_rank(a) == _sympy_signature_rank(coeffs)


@pytest.mark.parametrize("coeffs", [(-1, -3, 0, 1), (1, -3, 0, 1), (1, -2, -1, 1), (1, 0, -4, 0, 1)])
def test_find_units_reaches_rank_with_valid_units(coeffs):
    a = companion_of(*coeffs)
    gs = find_units(a, strict=True)
    assert gs.k == dirichlet_rank(a)
    assert gs.generators[0] == a
    for u in gs.generators:
        assert abs(u.det) == 1 and u.commutes_with(a)
    assert multiplicative_independence(gs).independent


def test_rank_shortfall_raises_in_strict_mode():
    a = companion_of(1, 0, -4, 0, 1)
    with pytest.raises(RankNotReached) as err:
        find_units(a, UnitSearchConfig(coefficient_bound=1), strict=True)
    assert err.value.partial is not None and err.value.found < err.value.expected


def test_dependent_pair_reports_relation(cubic):
    verdict = multiplicative_independence(GeneratorSet((cubic, cubic ** 2)))
    assert not verdict.independent
    rel = verdict.relation
    assert rel is not None and tuple(abs(v) for v in rel) == (2, 1) and rel[0] * rel[1] < 0


def test_torsion_generator_is_dependent():
    minus = ToralMatrix(((-1, 0), (0, -1)))
    assert not multiplicative_independence(GeneratorSet((ToralMatrix(CAT), minus))).independent


def test_generator_set_rejects_non_commuting():
    with pytest.raises(ValueError):
        GeneratorSet((ToralMatrix(CAT), ToralMatrix(((1, 1), (0, 1)))))


def test_generator_set_round_trips(cubic):
    gs = find_units(cubic)
    assert GeneratorSet.from_text(gs.to_text()).generators == gs.generators
    assert GeneratorSet.from_json(gs.to_json()).generators == gs.generators


def test_product_generators_commute_and_rank_adds(cat, cubic):
    gs = product_generators(GeneratorSet((cat,)), find_units(cubic))
    assert gs.n == 5 and gs.k == 3
    assert multiplicative_independence(gs).independent


def test_joint_eigenvectors_at_working_precision(cubic):
    gs = find_units(cubic)
    pairs = joint_eigendecomposition(gs.generators, precision_bits=128)
    assert len(pairs) == 3
    with mp.workprec(128):
        for pair in pairs:
            v = mp.matrix(pair.vector)
            for g, lam in zip(gs.generators, pair.eigenvalues):
                residual = mp.norm(mp.matrix(g.entries) * v - lam * v)
                assert residual < mp.mpf(2) ** -110
        # product of eigenvalues is the determinant
        prod = mp.fprod(p.eigenvalues[0] for p in pairs)
        assert abs(prod - cubic.det) < mp.mpf(2) ** -110


def test_symplectic_checks():
    a = ToralMatrix(SYMPLECTIC_4)
    assert is_symplectic(a) and is_symplectic(ToralMatrix(CAT))
    assert symplectic_rank(a) == 2
    with pytest.raises(OddDimension):
        is_symplectic(((1, 1, 0), (0, 1, 0), (0, 0, 1)))


def test_symplectic_front_end_reaches_rank_with_symplectic_units():
    a = ToralMatrix(SYMPLECTIC_4)
    gs = symplectic_centralizer_front_end(a, strict=True)
    assert gs.k == 2
    assert all(is_symplectic(g) and g.commutes_with(a) for g in gs.generators)
    assert multiplicative_independence(gs).independent


def test_symplectic_part_is_symplectic(cubic):
    a = ToralMatrix(SYMPLECTIC_4)
    for u in find_units(a).generators:
        v = symplectic_part(u)
        assert is_symplectic(v) and v.commutes_with(a)


@pytest.mark.parametrize("entries,clause", [
    (SYMPLECTIC_4_COMPLEX, "real eigenvalue"),
    (((2, 1, 0, 0), (1, 1, 0, 0), (0, 0, 1, -1), (0, 0, -1, 2)), "irreducible"),
    (((1, 0, 0, 1), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)), "symplectic"),
])
def test_symplectic_front_end_violations(entries, clause):
    with pytest.raises(HypothesisViolation) as err:
        symplectic_centralizer_front_end(ToralMatrix(entries))
    assert err.value.clause == clause


def test_log_embedding_zero_sum(cubic):
    gs = find_units(cubic)
    with mp.workprec(128):
        pairs = joint_eigendecomposition(gs.generators, 128)
        for j in range(gs.k):
            total = mp.fsum(mp.log(abs(p.eigenvalues[j])) * (1 if p.is_real else 2) for p in pairs)
            assert abs(total) < mp.mpf(10) ** -30
    assert np.isfinite(float(total))
