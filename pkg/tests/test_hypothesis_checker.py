import numpy as np
import pytest

from toral_rigidity.centralizer import GeneratorSet, find_units
from toral_rigidity.errors import HypothesisViolation
from toral_rigidity.exact_linear_algebra import ToralMatrix, matrix_power
from toral_rigidity.hypothesis_checker import (DENSE, DISCRETE, FAIL, PASS, UNKNOWN, bunching_quantity,
                                               check_i, diagonal_action, run_checks, theorem_1_1_check)
from toral_rigidity.lyapunov_geometry import chamber_of, coarse_spaces, exponent_functionals, weyl_chambers

from conftest import CAT, companion_of

TOTALLY_REAL = [(-1, -3, 0, 1), (1, -3, 0, 1), (1, -2, -1, 1), (-1, -4, 0, 1), (1, 0, -4, 0, 1)]


def numeric_log_moduli(gs, m):
    mat = matrix_power(gs, m).to_numpy()
    return np.sort(np.log(np.abs(np.linalg.eigvals(mat))))


@pytest.fixture(scope="module")
def cubic_report():
    return theorem_1_1_check(companion_of(-1, -3, 0, 1), density_precision=192)


@pytest.mark.parametrize("coeffs", TOTALLY_REAL)
def test_totally_real_examples_pass_all_four(coeffs):
    report = theorem_1_1_check(companion_of(*coeffs), density_precision=192)
    assert [v.status for v in report.verdicts.values()] == [PASS] * 4
    assert all(d["status"] == DENSE for d in report.verdict_ii.witness)


def test_bunching_witnesses_recheck_with_floating_spectrum(cubic_report):
    gs = cubic_report.generators
    cs = coarse_spaces(exponent_functionals(gs))
    chambers = weyl_chambers(cs)
    assert set(cubic_report.witnesses_iv) == set(range(len(chambers)))
    for ci, (m, q) in cubic_report.witnesses_iv.items():
        assert chamber_of(m, cs) == chambers[ci].signs
        logs = numeric_log_moduli(gs, m)
        stable, unstable = logs[logs < 0], logs[logs > 0]
        assert len(stable) + len(unstable) == gs.n
        expected = stable.max() + unstable.max() - unstable.min()
        assert expected < 0 and abs(expected - float(q)) < 1e-9


def test_separation_witnesses_recheck_with_floating_spectrum(cubic_report):
    gs = cubic_report.generators
    cs = coarse_spaces(exponent_functionals(gs))
    fs = cs.functionals
    assert cubic_report.witnesses_iii
    for (ci, e), m in cubic_report.witnesses_iii.items():
        values = np.array([float(f(m)) for f in fs])
        # the functionals evaluated at m are exactly the log moduli of the exact matrix
        assert np.allclose(np.sort(values), numeric_log_moduli(gs, m), atol=1e-9)
        assert values[e] < 0
        chamber = weyl_chambers(cs)[ci]
        others = [i for i, f in enumerate(fs) if i != e and
                  any(i in cs.groups[c] for c, s in enumerate(chamber.signs) if s < 0)]
        assert all(values[i] > 0 for i in others)


def test_cat_map_fails_density():
    report = run_checks(GeneratorSet((ToralMatrix(CAT),)))
    assert report.verdict_i.status == PASS
    assert report.verdict_ii.status == FAIL
    assert report.verdict_ii.witness[0]["status"] == DISCRETE


def test_cat_map_is_rank_one_violation(cat):
    with pytest.raises(HypothesisViolation) as err:
        theorem_1_1_check(cat)
    assert err.value.clause == "rank"


def test_reducible_matrix_violates_irreducibility():
    a = ToralMatrix(((2, 1, 0), (1, 1, 0), (0, 0, 1)))
    with pytest.raises(HypothesisViolation) as err:
        theorem_1_1_check(a)
    assert err.value.clause == "irreducible"


def test_diagonal_embedding_fails_simple_spectrum(cubic):
    gs = find_units(cubic)
    report = run_checks(diagonal_action(gs, gs))
    assert report.verdict_i.status == FAIL
    assert {report.verdict_ii.status, report.verdict_iii.status, report.verdict_iv.status} == {UNKNOWN}


def test_check_i_reports_element_with_squarefree_polynomial(cubic):
    gs = find_units(cubic)
    v = check_i(gs)
    assert v.passed
    p = matrix_power(gs, v.witness).char_poly()
    assert len(set(np.round(np.roots(p.to_list()[::-1]), 8))) == gs.n


def test_bunching_quantity_formula(cat):
    fs = exponent_functionals(GeneratorSet((cat,)))
    lam = np.log((3 + np.sqrt(5)) / 2)
    assert abs(float(bunching_quantity((1,), [fs[0]], [fs[1]])) + lam) < 1e-12


def test_report_json_is_plain(cubic_report):
    import json
    text = json.dumps(cubic_report.to_json(), sort_keys=True)
    back = json.loads(text)
    assert back["verdict_i"]["status"] == PASS
    assert len(back["witnesses_iv"]) == 6
