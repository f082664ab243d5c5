import math

import numpy as np
import pytest
from scipy.optimize import fsolve

from toral_rigidity.conjugacy_solver import GridDisplacement, PerturbedMap, TrigPolynomial, grid_points
from toral_rigidity.errors import NonPeriodic, NotSubadditive, OrbitMismatch
from toral_rigidity.exact_linear_algebra import ToralMatrix, periodic_points
from toral_rigidity.hyperbolicity_certifier import (Certificate, CocycleSpec, CounterexampleProfile,
                                                    NegativityConfig, SubadditiveSequence, bunching_at_periodic,
                                                    certify_expanding, certify_uniform_contraction,
                                                    certify_uniform_expansion, compare_stable_dimensions,
                                                    linear_orbits, orbit_exponent_survey, periodic_exponents,
                                                    transport_seed, uniform_negativity)

from conftest import CAT

LOG_LAMBDA = math.log((3 + math.sqrt(5)) / 2)
WOBBLE = TrigPolynomial.from_terms([((1, 0), (1.0, 0.5)), ((0, 1), (-0.5, 1.0), 0.3)])
FAST = NegativityConfig(resolution=32, spot_triples=200)


def cat_direct(eps=0.05):
    return PerturbedMap(ToralMatrix(CAT), WOBBLE.scaled(eps))


def fd_jacobian(f, x, h=1e-6):
    cols = []
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        cols.append((f(np.atleast_2d(x + e))[0] - f(np.atleast_2d(x - e))[0]) / (2 * h))
    return np.array(cols).T


def brute_force_exponents(f, seed, period, translation):
    """Periodic point by scipy root finding, derivative by finite differences."""
    x = fsolve(lambda x: f.iterate(np.atleast_2d(x), period)[0] - x - translation, seed, xtol=1e-12)
    prod = np.eye(2)
    y = x
    for _ in range(period):
        prod = fd_jacobian(f, y) @ prod
        y = f(np.atleast_2d(y))[0]
    return np.sort(np.log(np.abs(np.linalg.eigvals(prod)))) / period


def test_linear_log_norm_is_subadditive():
    c = CocycleSpec(PerturbedMap(ToralMatrix(CAT)), "stable")
    s = SubadditiveSequence(c.log_norm, c.f, 2)
    assert s.spot_check(200) < 1e-9


def test_one_dimensional_stable_cocycle_is_additive_at_long_horizons():
    # a line-bundle log norm is an additive cocycle; naive forward pushing loses this near n = 10
    f = PerturbedMap(ToralMatrix(CAT), TrigPolynomial.from_terms(
        [((1, 0), (0.05, 0.02)), ((0, 1), (-0.02, 0.05), 0.3)]))
    c = CocycleSpec(f, "stable")
    X = np.random.default_rng(3).random((2000, 2))
    f5 = X
    for _ in range(5):
        f5 = f(f5) % 1.0
    defect = c.log_norm(10, X) - c.log_norm(5, f5) - c.log_norm(5, X)
    assert np.abs(defect).max() < 1e-10
    s = SubadditiveSequence(c.log_norm, c.f, 2)
    assert s.spot_check(1000, tol=1e-9) < 1e-9


def test_superadditive_sequence_is_rejected():
    s = SubadditiveSequence(lambda n, X: np.full(len(X), float(n * n)), lambda X: X, 2)
    with pytest.raises(NotSubadditive):
        s.spot_check(50)


def test_cat_stable_bundle_certified_in_one_step():
    cert = certify_uniform_contraction(CocycleSpec(PerturbedMap(ToralMatrix(CAT)), "stable"), FAST)
    assert isinstance(cert, Certificate) and cert.N == 1
    assert abs(cert.rate + LOG_LAMBDA) < 1e-10


def test_cat_unstable_bundle_expansion():
    cert = certify_uniform_expansion(CocycleSpec(PerturbedMap(ToralMatrix(CAT)), "unstable"), FAST)
    assert isinstance(cert, Certificate) and cert.N == 1
    assert abs(cert.rate + LOG_LAMBDA) < 1e-10


def test_perturbed_certificate_survives_direct_recheck():
    c = CocycleSpec(cat_direct(), "stable")
    cert = certify_uniform_contraction(c, FAST)
    assert isinstance(cert, Certificate)
    # independent re-evaluation on a finer grid
    X = grid_points(2, 48)
    assert c.log_norm(cert.N, X).max() < 0
    assert abs(cert.rate) < 1.5 * LOG_LAMBDA


def test_non_invariant_bundle_is_refused():
    fixed = CocycleSpec(cat_direct(), lambda X: np.tile(np.array([[1.0], [0.0]]), (len(X), 1, 1)))
    with pytest.raises(ValueError):
        certify_uniform_contraction(fixed, FAST)


def test_indifferent_fixed_point_blocks_certificate():
    cat = PerturbedMap(ToralMatrix(CAT))

    def weight(X):
        return -(np.sin(np.pi * X[:, 0]) ** 2 + np.sin(np.pi * X[:, 1]) ** 2)

    def birkhoff(n, X):
        total = np.zeros(len(X))
        y = X
        for _ in range(n):
            total += weight(y)
            y = cat(y) % 1.0
        return total

    out = uniform_negativity(SubadditiveSequence(birkhoff, cat, 2), NegativityConfig(resolution=16, horizon=3))
    assert isinstance(out, CounterexampleProfile)
    # the origin is fixed and the weight vanishes there, so its averages are exactly zero
    assert np.any(np.all(out.points == 0.0, axis=1))
    assert out.averages.max() >= 0


def test_expanding_endomorphism():
    doubling = PerturbedMap(np.array([[2, 0], [0, 3]]), WOBBLE.scaled(0.02))
    cert = certify_expanding(doubling, FAST)
    assert isinstance(cert, Certificate) and cert.N == 1


def test_linear_exponents_at_periodic_orbits(cat):
    f = PerturbedMap(cat)
    reports = orbit_exponent_survey(f, 4)
    assert len(reports) == len(linear_orbits(cat, 4))
    for r in reports:
        assert np.allclose(r.exponents, [-LOG_LAMBDA, LOG_LAMBDA], atol=1e-12)
        assert r.stable_dimension == 1


def test_exponent_sum_equals_mean_log_jacobian():
    f = cat_direct(0.08)
    for r in orbit_exponent_survey(f, 3):
        assert abs(r.exponents.sum() - r.log_det_mean) < 1e-10
        assert r.closing_error < 1e-12


def test_exponents_invariant_under_cyclic_relabeling():
    f = cat_direct()
    orb = next(o for o in periodic_points(f.toral, 3) if o.period == 3)
    base = periodic_exponents(f, orb)
    for start in base.points[1:]:
        k = np.rint(f.iterate(np.atleast_2d(start), 3)[0] - start)
        again = periodic_exponents(f, (start, 3), translation=k)
        assert np.abs(again.exponents - base.exponents).max() < 1e-10


def test_direct_perturbation_exponents_match_brute_force():
    f = cat_direct()
    gaps = []
    for r in orbit_exponent_survey(f, 3):
        k = np.array(r.translation, dtype=float)
        oracle = brute_force_exponents(f, r.points[0], r.period, k)
        assert np.abs(r.exponents - oracle).max() < 1e-6
        gaps.append(np.abs(r.comparison).max())
    assert max(gaps) > 1e-3


def test_conjugated_map_keeps_linear_exponents(cat):
    phi = TrigPolynomial.from_terms([((1, 0), (0.03, 0.0)), ((0, 1), (0.0, 0.03))])
    f = PerturbedMap.conjugate(cat, phi)
    for orb in linear_orbits(cat, 3):
        p = orb.as_floats()[0]
        seed = p + phi(np.atleast_2d(p))[0]
        rep = periodic_exponents(f, (seed, orb.period), translation=orb.translation(cat))
        assert np.abs(rep.comparison).max() < 1e-9


def test_non_periodic_point_without_refinement(cat):
    with pytest.raises(NonPeriodic):
        periodic_exponents(PerturbedMap(cat), (np.array([0.1234, 0.4321]), 2), refine=False)


def test_transport_seed_inverts_id_plus_w():
    w = GridDisplacement.sample(lambda x: 0.02 * np.sin(2 * np.pi * x[:, ::-1]), 2, 64, "cubic")
    p = np.array([0.3, 0.7])
    x = transport_seed(p, w)
    assert np.abs(x + w(np.atleast_2d(x))[0] - p).max() < 1e-12


def test_cat_bunching_threshold_is_two(cat):
    reports = orbit_exponent_survey(PerturbedMap(cat), 2)
    r_star = (LOG_LAMBDA - (-LOG_LAMBDA)) / LOG_LAMBDA
    v = bunching_at_periodic(reports, [0], [1], 1.0)
    assert v.passed and abs(v.margin_second + LOG_LAMBDA) < 1e-12
    assert abs(v.threshold - r_star) < 1e-12
    assert bunching_at_periodic(reports, [0], [1], r_star - 1e-9).passed
    assert not bunching_at_periodic(reports, [0], [1], r_star + 1e-9).passed
    assert not bunching_at_periodic(reports, [1], [0], 1.0).passed


def test_stable_dimensions_through_conjugacy(cat):
    phi = TrigPolynomial.from_terms([((1, 1), (0.02, -0.02))])
    f = PerturbedMap.conjugate(cat, phi)
    g = PerturbedMap(cat)
    reports = []
    for orb in linear_orbits(cat, 3):
        p = orb.as_floats()[0]
        reports.append(periodic_exponents(f, (p + phi(np.atleast_2d(p))[0], orb.period),
                                          translation=orb.translation(cat)))
    h = f.displacement.phi_inverse
    pairs = compare_stable_dimensions(f, g, h, reports)
    assert pairs == [(1, 1)] * len(reports)
    assert compare_stable_dimensions(g, g, lambda x: np.atleast_2d(x), orbit_exponent_survey(g, 2))
    with pytest.raises(OrbitMismatch):
        compare_stable_dimensions(f, g, lambda x: np.atleast_2d(x) + 0.1, reports)
