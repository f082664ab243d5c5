import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toral_rigidity.centralizer import find_units
from toral_rigidity.conjugacy_solver import (GermMap, GridDisplacement, Obstruction, PerturbedMap, SolverConfig,
                                             TrigPolynomial, check_splitting, conjugacy_samples_from_action,
                                             estimate_holder, exponent_relation_defect, fit_complex_form,
                                             fit_power_law_real, format_perturbation_text, grid_points,
                                             hyperbolic_splitting, linearize_germ, parse_perturbation_text,
                                             solve_franks_manning, torus_difference, verify_equivariance)
from toral_rigidity.errors import (BranchAmbiguity, InsufficientSamples, NonInvertible, NotContracting,
                                   NotHyperbolic, ParseError)
from toral_rigidity.exact_linear_algebra import ToralMatrix

from conftest import CAT

PHI_CAT = TrigPolynomial.from_terms([((1, 0), (0.03, 0.0)), ((0, 1), (0.0, 0.03)), ((1, 1), (0.02, -0.01), 0.4)])


@pytest.fixture(scope="module")
def cat_conjugate():
    return PerturbedMap.conjugate(ToralMatrix(CAT), PHI_CAT)


@pytest.fixture(scope="module")
def cat_solution(cat_conjugate):
    return solve_franks_manning(cat_conjugate, SolverConfig(resolution=128))


def phi_inverse_displacement(pm):
    return lambda x: pm.displacement.phi_inverse(x) - x


def test_linear_map_gives_zero_displacement(cat):
    res = solve_franks_manning(PerturbedMap(cat))
    assert res.w.sup_norm() == 0.0 and res.residual == 0.0
    pm = parse_perturbation_text("2\n2 1\n1 1\n")
    assert pm.is_linear


def test_recovered_conjugacy_is_phi_inverse(cat_conjugate, cat_solution):
    exact = phi_inverse_displacement(cat_conjugate)
    R = cat_solution.w.resolution
    interp = GridDisplacement.sample(exact, 2, R).interpolation_error(exact)
    pts = np.random.default_rng(3).random((4096, 2))
    err = np.abs(cat_solution.w(pts) - exact(pts)).max()
    assert err < 5 * interp
    # grid values carry the same bound (the solver interpolates only at off-grid images)
    X = grid_points(2, R)
    assert np.abs(cat_solution.w.flat() - exact(X)).max() < 5 * interp


def test_convergence_ratio_bounded_by_contraction(cat_solution):
    ratios = cat_solution.measured_ratios()
    assert len(ratios) > 3
    assert ratios.max() <= cat_solution.contraction_bound + 0.05
    lam = (3 + np.sqrt(5)) / 2
    assert abs(cat_solution.contraction_bound - 1 / lam) < 1e-12


def test_two_initializations_agree(cat_conjugate, cat_solution):
    start = GridDisplacement.sample(lambda x: 0.05 * np.cos(2 * np.pi * x), 2, 128)
    other = solve_franks_manning(cat_conjugate, SolverConfig(resolution=128), initial=start, holder=False)
    assert np.abs(other.w.samples - cat_solution.w.samples).max() < 10 * 1e-12


def test_fixed_point_and_conjugacy_residuals(cat_conjugate, cat_solution):
    assert cat_solution.residual < 1e-10
    exact = phi_inverse_displacement(cat_conjugate)
    interp = GridDisplacement.sample(exact, 2, 128).interpolation_error(exact)
    assert cat_solution.grid_residual < 10 * interp


def test_hyperbolic_splitting_rejects_elliptic():
    with pytest.raises(NotHyperbolic):
        hyperbolic_splitting(np.array([[0.0, -1.0], [1.0, 0.0]]))


def test_splitting_diagonalizes():
    # companion of x^3 - x - 1: one expanding real root, a contracting complex pair
    a = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    s = hyperbolic_splitting(a)
    assert s.stable_dim == 2
    d = s.inverse @ a @ s.basis
    assert np.abs(d[:s.stable_dim, s.stable_dim:]).max() < 1e-12
    assert np.abs(d[s.stable_dim:, :s.stable_dim]).max() < 1e-12
    assert np.abs(np.linalg.eigvals(s.stable_block)).max() < 1


def test_equivariance_for_conjugated_cartan_action(cubic):
    gs = find_units(cubic)
    phi = TrigPolynomial.from_terms([((1, 0, 0), (0.0, 0.01, 0.0)), ((0, 1, 1), (0.01, 0.0, -0.01))])
    maps = [PerturbedMap.conjugate(g, phi) for g in gs.generators]
    res = solve_franks_manning(maps[0], SolverConfig(resolution=32), holder=False)
    report = verify_equivariance(res.w, gs, maps, resolution=8)
    assert report.precondition_ok
    exact = phi_inverse_displacement(maps[0])
    interp = GridDisplacement.sample(exact, 3, 32).interpolation_error(exact, n_test=512)
    # the other generator is matched by the same conjugacy up to interpolation error amplified by its norm
    assert max(report.residuals) < 20 * interp


def test_non_commuting_maps_are_flagged(cat):
    other = PerturbedMap(cat, TrigPolynomial.from_terms([((1, 0), (0.01, 0.0))]))
    report = verify_equivariance(GridDisplacement.zeros(2, 16), [cat, cat], [PerturbedMap(cat), other],
                                 resolution=16)
    assert not report.precondition_ok and "do not commute" in report.message


def test_holder_of_smooth_and_square_root_profiles():
    smooth = GridDisplacement.sample(lambda x: np.sin(2 * np.pi * x) / 10, 1, 1024)
    assert estimate_holder(smooth).theta > 0.97
    cusp = GridDisplacement.sample(lambda x: np.sqrt(np.abs(x - 0.5)), 1, 1024)
    assert abs(estimate_holder(cusp).theta - 0.5) < 0.02
    flat = GridDisplacement.zeros(2, 64)
    assert estimate_holder(flat).degenerate


def test_holder_needs_enough_scales():
    with pytest.raises(InsufficientSamples):
        estimate_holder(GridDisplacement.zeros(1, 16))


def test_splitting_of_product_and_coupled_maps():
    product_map = lambda x: np.stack([x[:, 0] + 0.1 * np.sin(2 * np.pi * x[:, 0]),
                                      x[:, 1] + 0.1 * np.sin(2 * np.pi * x[:, 1])], axis=1)
    coupled = lambda x: np.stack([x[:, 0] + 0.1 * np.sin(2 * np.pi * x[:, 1]), x[:, 1]], axis=1)
    assert check_splitting(product_map, [(0,), (1,)]).splits
    report = check_splitting(coupled, [(0,), (1,)])
    assert not report.splits and report.couplings[0, 1] > 0.05 and report.couplings[1, 0] == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.booleans())
def test_power_law_round_trip(t, alpha_plus, alpha_minus, reverse):
    x = np.concatenate([np.linspace(0.1, 2.0, 40), -np.linspace(0.1, 2.0, 40)])
    sign = -1.0 if reverse else 1.0
    y = np.where(x > 0, sign * alpha_plus * np.abs(x) ** t, -sign * alpha_minus * np.abs(x) ** t)
    fit = fit_power_law_real(x, y)
    assert abs(fit.t - t) < 1e-9 and fit.rms < 1e-6
    assert abs(fit.alpha_plus - sign * alpha_plus) < 1e-8
    assert fit.orientation == ("reversing" if reverse else "preserving")


@settings(max_examples=50, deadline=None)
@given(st.floats(0.3, 2.5), st.floats(-1.0, 1.0), st.floats(0.2, 3.0), st.floats(-3.0, 3.0), st.booleans())
def test_complex_form_round_trip(t, a, modulus, arg, reverse):
    alpha = modulus * np.exp(1j * arg)
    r = np.geomspace(0.2, 2.0, 60)
    # angles independent of log r; an affine angle profile makes conj(z) mimic a log-spiral
    z = r * np.exp(1j * np.random.default_rng(7).uniform(0, 2 * np.pi, 60))
    zz = np.conj(z) if reverse else z
    hz = alpha * zz * np.abs(z) ** (t - 1) * np.exp(1j * a * np.log(np.abs(z)))
    fit = fit_complex_form(z, hz)
    assert fit.rms < 1e-6
    assert abs(fit.t - t) < 1e-8 and abs(fit.a - a) < 1e-8 and abs(fit.alpha - alpha) < 1e-8


def test_complex_fit_rejects_sparse_phase():
    z = np.array([0.5, 1.0, 2.0, 4.0], dtype=complex)
    hz = z * np.exp(1j * 3.0 * np.log(np.abs(z)))
    with pytest.raises(BranchAmbiguity):
        fit_complex_form(z, hz, orientation="preserving")


def test_fits_need_spread_samples():
    with pytest.raises(InsufficientSamples):
        fit_power_law_real([1.0, -1.0, 1.0], [2.0, 2.0, 2.0])


def test_dense_action_on_half_line_forces_exponent_relation():
    rho = [2.0, 3.0]
    t = 1.7
    rho_star = [v ** t for v in rho]
    xs, ys = conjugacy_samples_from_action(rho, rho_star, base=1.0, base_value=0.8, box=3)
    fit = fit_power_law_real(xs, ys)
    assert abs(fit.t - t) < 1e-9 and abs(fit.alpha_plus - 0.8) < 1e-9
    assert exponent_relation_defect(fit, rho, rho_star) < 1e-9
    assert exponent_relation_defect(fit, rho, [2.0 ** t, 3.0]) > 0.1


LAMBDA = 0.5


def test_non_linearizable_pair_is_obstructed():
    f = GermMap(lambda p: np.stack([LAMBDA ** 2 * p[:, 0], LAMBDA * p[:, 1]], axis=1),
                np.diag([LAMBDA ** 2, LAMBDA]))
    g = GermMap(lambda p: np.stack([p[:, 0] + p[:, 1] ** 2, p[:, 1]], axis=1), np.eye(2))
    # the pair commutes exactly
    pts = np.random.default_rng(0).normal(size=(50, 2)) * 0.3
    assert np.abs(f(g(pts)) - g(f(pts))).max() < 1e-15
    out = linearize_germ([f, g])
    assert isinstance(out, Obstruction) and out.member == 1
    # the obstructed flag is the slow (vertical) direction
    assert abs(abs(out.subspace[1, 0]) - 1) < 1e-12


def test_conjugated_linear_germs_are_linearized():
    d1, d2 = np.diag([0.5, 0.3]), np.diag([0.8, 0.6])
    psi = lambda p: np.stack([p[:, 0], p[:, 1] + p[:, 0] ** 2], axis=1)
    psi_inv = lambda p: np.stack([p[:, 0], p[:, 1] - p[:, 0] ** 2], axis=1)
    f1 = GermMap(lambda p: psi(psi_inv(p) @ d1.T), d1)
    f2 = GermMap(lambda p: psi(psi_inv(p) @ d2.T), d2)
    chart = linearize_germ([f1, f2])
    assert not isinstance(chart, Obstruction)
    assert max(chart.residuals) < 1e-8
    pts = np.random.default_rng(1).uniform(-0.3, 0.3, size=(200, 2))
    assert np.abs(chart(pts) - psi_inv(pts)).max() < 1e-8


def test_germ_needs_a_contraction():
    with pytest.raises(NotContracting):
        linearize_germ([GermMap(lambda p: 2 * p, 2 * np.eye(2))])


def test_perturbation_text_round_trip(cat):
    text = format_perturbation_text(cat, PHI_CAT, mode="conjugate")
    pm = parse_perturbation_text(text)
    pts = np.random.default_rng(2).random((20, 2))
    ref = PerturbedMap.conjugate(cat, PHI_CAT)
    assert np.abs(pm(pts) - ref(pts)).max() < 1e-14
    scaled = parse_perturbation_text(format_perturbation_text(cat, PHI_CAT), epsilon=0.5)
    assert np.allclose(scaled.u(pts), 0.5 * PHI_CAT(pts))


def test_perturbation_parse_error_line():
    with pytest.raises(ParseError) as err:
        parse_perturbation_text("2\n2 1\n1 1\nmode direct\n1 0 : 0.1\n")
    assert err.value.line == 5


def test_inverse_lift_and_diffeomorphism_check(cat):
    pm = PerturbedMap(cat, TrigPolynomial.from_terms([((1, 0), (0.05, 0.02))]))
    pts = np.random.default_rng(4).random((100, 2))
    assert np.abs(torus_difference(pm(pm.inverse(pts)), pts)).max() < 1e-12
    assert pm.check_diffeomorphism(32) > 0
    folded = PerturbedMap(cat, TrigPolynomial.from_terms([((1, 0), (-1.0, 0.0))]))
    with pytest.raises(NonInvertible):
        folded.check_diffeomorphism(32)


def test_grid_interpolation_is_periodic():
    g = GridDisplacement.sample(lambda x: np.sin(2 * np.pi * x), 2, 32, interpolation="cubic")
    pts = np.random.default_rng(5).random((100, 2))
    assert np.abs(g(pts) - g(pts + 1.0)).max() < 1e-12
    assert g.interpolation_error(lambda x: np.sin(2 * np.pi * x)) < 1e-4


def test_coarse_grid_skips_holder_estimate(cat_conjugate):
    res = solve_franks_manning(cat_conjugate, SolverConfig(resolution=32))
    assert res.holder is None and res.residual < 1e-10
