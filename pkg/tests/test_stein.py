"""Stein operator, interpolants, identity, remainder bound, classical case."""

import math

import numpy as np
import pytest

from gstein.functions import affine, constant, cosine, cubic, quadratic, smoothed_ramp
from gstein.gheat import GCoeff, make_grid, solve_gheat
from gstein.measures import DiscreteMeasure, UncertaintySet, sublinear_expect
from gstein.stein import (
    CenteringError,
    QuadSpec,
    QuadratureUnresolvedError,
    classical_stein_residual,
    endpoint_tail_bound,
    gaussian_expect,
    interpolant_phi_s,
    one_sided_derivative_check,
    stein_bound,
    stein_identity,
    stein_operator,
    taylor_remainders,
    w_curve,
)
from gstein.suites import random_smooth_c2, random_uncertainty_set

rad = DiscreteMeasure.rademacher
delta = DiscreteMeasure.point_mass
BAND = GCoeff(sigma_bar=1.0, sigma_under=0.5)
LINEAR = GCoeff(sigma_bar=1.0, sigma_under=1.0)


class TestSteinOperator:
    def test_quadratic(self):
        op = stein_operator(BAND, quadratic(1.0))
        xs = np.linspace(-2, 2, 9)
        assert np.allclose(op(xs), 1.0 - xs**2, atol=1e-12)

    def test_affine(self):
        op = stein_operator(BAND, affine(3.0, 1.0))
        xs = np.linspace(-2, 2, 9)
        assert np.allclose(op(xs), -(xs / 2.0) * 3.0, atol=1e-12)

    def test_negative_quadratic(self):
        op = stein_operator(BAND, quadratic(-1.0))
        xs = np.linspace(-2, 2, 9)
        assert np.allclose(op(xs), -0.25 + xs**2, atol=1e-12)


@pytest.fixture(scope="module")
def field():
    return solve_gheat(BAND, smoothed_ramp(0.0, 0.3),
                       make_grid(BAND, dx=0.02, x_span=2.0), max_stored_layers=8192)


class TestInterpolant:
    def test_s_zero_is_datum_on_nodes(self, field):
        phi0 = interpolant_phi_s(field, 0.0)
        xs = field.xs[::10]
        assert np.allclose(phi0(xs), field.phi(xs), atol=1e-14)

    def test_affine_datum_scales_slope(self):
        fld = solve_gheat(BAND, affine(0.5, 0.25), make_grid(BAND, dx=0.05, x_span=2.0))
        s = 0.36
        phi_s = interpolant_phi_s(fld, s)
        xs = np.linspace(-1.5, 1.5, 11)
        expected = 0.5 * math.sqrt(1 - s) * xs + 0.25
        assert np.allclose(phi_s(xs), expected, atol=1e-9)
        assert np.allclose(phi_s.deriv1(xs), 0.5 * math.sqrt(1 - s), atol=1e-9)

    def test_near_one_flattens_to_gaussian_value(self, field):
        phi_s = interpolant_phi_s(field, 0.999)
        target = field.eval(0.0, 1.0)
        for x in (-2.0, 0.0, 1.5):
            assert phi_s(np.asarray(x)) == pytest.approx(target, abs=5e-2)

    def test_rejects_s_outside_range(self, field):
        with pytest.raises(ValueError):
            interpolant_phi_s(field, 1.0)
        with pytest.raises(ValueError):
            interpolant_phi_s(field, -0.1)


class TestWCurve:
    def test_point_mass_traces_center_line(self):
        theta = UncertaintySet.of(delta(0.0))
        phi = smoothed_ramp(0.0, 0.3)
        fld = solve_gheat(BAND, phi, make_grid(BAND, dx=0.02), max_stored_layers=8192)
        s_grid = [0.0, 0.3, 0.7]
        ws = w_curve(theta, fld, s_grid)
        for w, s in zip(ws, s_grid):
            assert w == pytest.approx(fld.eval(0.0, s), abs=1e-12)
        assert ws[0] == pytest.approx(float(phi(np.asarray(0.0))), abs=1e-12)

    def test_constant_curve(self):
        theta = UncertaintySet.of(rad(1.0))
        fld = solve_gheat(BAND, constant(2.0), make_grid(BAND, dx=0.05, x_span=1.5))
        assert np.allclose(w_curve(theta, fld, [0.0, 0.5, 1.0]), 2.0, atol=1e-12)

    def test_linear_case_closed_form(self):
        # single two-point measure at 1, collapsed band: the solved wave is
        # exp(-s/2) cos(x), so w(s) = exp(-s/2) cos(sqrt(1-s))
        theta = UncertaintySet.of(rad(1.0))
        fld = solve_gheat(LINEAR, cosine(), make_grid(LINEAR, dx=0.01, x_span=1.5),
                          max_stored_layers=8192)
        s_grid = np.array([0.0, 0.25, 0.5, 0.9, 1.0])
        expected = np.exp(-s_grid / 2) * np.cos(np.sqrt(1 - s_grid))
        assert np.allclose(w_curve(theta, fld, s_grid), expected, atol=1e-4)
        assert w_curve(theta, fld, [0.0])[0] == pytest.approx(math.cos(1.0), abs=1e-6)
        assert w_curve(theta, fld, [1.0])[0] == pytest.approx(math.exp(-0.5), abs=1e-5)


class TestQuadSpec:
    def test_nodes_cover_interval(self):
        quad = QuadSpec()
        nodes, weights = quad.nodes()
        assert np.all(np.diff(nodes) > 0)
        assert nodes[0] > quad.eps and nodes[-1] < 1 - quad.eps
        assert np.sum(weights) == pytest.approx(1 - 2 * quad.eps, abs=1e-12)

    def test_refined_halves_eps_and_doubles_points(self):
        quad = QuadSpec()
        fine = quad.refined()
        assert fine.eps == quad.eps / 2
        assert fine.points == 2 * quad.points
        assert fine.levels == quad.levels + 1

    def test_validation(self):
        with pytest.raises(ValueError):
            QuadSpec(eps=0.7)

    def test_tail_bound_shrinks_with_eps(self):
        a = endpoint_tail_bound(0.5, 1.0, 2.0, 1e-4)
        b = endpoint_tail_bound(0.5, 1.0, 2.0, 1e-6)
        assert 0 < b < a


class TestSteinIdentity:
    def test_constant_datum_all_zero(self):
        theta = UncertaintySet.of(rad(1.0))
        rep = stein_identity(theta, BAND, constant(1.5),
                             grid=make_grid(BAND, dx=0.05, x_span=1.5))
        assert rep.lhs == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(rep.integrand_sup, 0.0, atol=1e-9)
        assert rep.integral_sup == pytest.approx(0.0, abs=1e-9)

    def test_point_mass_affine_all_zero(self):
        theta = UncertaintySet.of(delta(0.0))
        rep = stein_identity(theta, BAND, affine(0.5, 0.25),
                             grid=make_grid(BAND, dx=0.05, x_span=0.5))
        assert rep.lhs == pytest.approx(0.0, abs=1e-9)
        assert np.allclose(rep.integrand_sup, 0.0, atol=1e-7)

    def test_sup_dominates_inf_nodewise(self):
        theta = UncertaintySet.of(rad(1.0), rad(2.0))
        coeff = GCoeff(2.0, 1.0)
        rep = stein_identity(theta, coeff, smoothed_ramp(0.0, 0.3),
                             grid=make_grid(coeff, dx=0.04, x_span=2.5))
        assert np.all(rep.integrand_sup >= rep.integrand_inf - 1e-12)
        assert rep.discrepancy_sup_inf >= 0.0

    def test_integrated_discrepancy_within_budget(self):
        # sup and inf may disagree at isolated maximizer switches; their
        # weighted integral must stay within the identity budget
        theta = UncertaintySet.of(rad(1.0), rad(2.0))
        coeff = GCoeff(2.0, 1.0)
        rep = stein_identity(theta, coeff, smoothed_ramp(0.0, 0.3),
                             grid=make_grid(coeff, dx=0.02, x_span=2.5))
        assert rep.discrepancy_integral <= 1e-2 * (1.0 + abs(rep.lhs))

    def test_budget_violation_raises(self):
        theta = UncertaintySet.of(rad(1.0), rad(2.0))
        coeff = GCoeff(2.0, 1.0)
        with pytest.raises(QuadratureUnresolvedError, match="quadrature unresolved"):
            stein_identity(theta, coeff, smoothed_ramp(0.0, 0.3),
                           grid=make_grid(coeff, dx=0.04, x_span=2.5), budget=0.0)

    def test_csv_round_trip(self, tmp_path):
        theta = UncertaintySet.of(rad(1.0))
        rep = stein_identity(theta, LINEAR, cosine(),
                             grid=make_grid(LINEAR, dx=0.05, x_span=1.5))
        path = tmp_path / "identity.csv"
        with path.open("w") as fh:
            rep.to_csv(fh)
        lines = path.read_text().splitlines()
        assert lines[0] == "s,integrand_sup,integrand_inf"
        assert lines[-2] == "lhs,integral_sup,integral_inf,budget"
        lhs = float(lines[-1].split(",")[0])
        assert lhs == pytest.approx(rep.lhs)


class TestOneSidedDerivative:
    def test_constant_both_zero(self):
        theta = UncertaintySet.of(rad(1.0))
        fld = solve_gheat(BAND, constant(3.0), make_grid(BAND, dx=0.05, x_span=1.5))
        chk = one_sided_derivative_check(theta, BAND, constant(3.0), 0.5, field=fld)
        assert chk.numeric == pytest.approx(0.0, abs=1e-10)
        assert chk.formula_sup == pytest.approx(0.0, abs=1e-10)

    def test_linear_case_matches_symbolic_curve(self):
        theta = UncertaintySet.of(rad(1.0))
        fld = solve_gheat(LINEAR, cosine(), make_grid(LINEAR, dx=0.01, x_span=1.5),
                          max_stored_layers=8192)
        s = 0.5
        chk = one_sided_derivative_check(theta, LINEAR, cosine(), s, field=fld)
        r = math.sqrt(1 - s)
        symbolic = math.exp(-s / 2) * (-0.5 * math.cos(r) + math.sin(r) / (2 * r))
        assert chk.formula_sup == pytest.approx(symbolic, abs=1e-3)
        assert chk.numeric == pytest.approx(symbolic, abs=1e-2)

    def test_sup_at_least_inf_across_s(self):
        theta = UncertaintySet.of(rad(1.0), rad(2.0))
        coeff = GCoeff(2.0, 1.0)
        fld = solve_gheat(coeff, smoothed_ramp(0.0, 0.3),
                          make_grid(coeff, dx=0.04, x_span=2.5), max_stored_layers=8192)
        for s in (0.1, 0.35, 0.6, 0.85):
            chk = one_sided_derivative_check(theta, coeff, smoothed_ramp(0.0, 0.3),
                                             s, field=fld)
            assert chk.formula_sup >= chk.formula_inf - 1e-12

    def test_endpoint_margin_enforced(self):
        theta = UncertaintySet.of(rad(1.0))
        fld = solve_gheat(BAND, cosine(), make_grid(BAND, dx=0.05, x_span=1.5))
        with pytest.raises(ValueError):
            one_sided_derivative_check(theta, BAND, cosine(), 0.9995, field=fld)


class TestSteinBound:
    def test_quadratic_lhs_zero(self):
        theta = UncertaintySet.of(rad(1.0), rad(2.0))
        rep = stein_bound(theta, quadratic(1.0), alpha=0.5)
        assert rep.rhs == 0.0
        assert rep.lhs == pytest.approx(0.0, abs=1e-12)
        assert rep.intermediate == pytest.approx(0.0, abs=1e-12)

    def test_affine_lhs_zero_for_symmetric_sets(self):
        theta = UncertaintySet.of(rad(1.0), rad(2.0))
        for slope in (1.0, -2.0):
            rep = stein_bound(theta, affine(slope, 0.7), alpha=0.4)
            assert rep.lhs == pytest.approx(0.0, abs=1e-12)

    def test_non_centered_rejected(self):
        theta = UncertaintySet.of(delta(1.0))
        with pytest.raises(CenteringError):
            stein_bound(theta, quadratic(1.0), alpha=0.5)

    def test_randomized_cases_hold(self):
        rng = np.random.default_rng(123)
        for _ in range(50):
            theta = random_uncertainty_set(rng, centered=True)
            phi = random_smooth_c2(rng)
            alpha = float(rng.uniform(0.05, 0.95))
            rep = stein_bound(theta, phi, alpha)
            assert rep.lhs <= rep.rhs + 1e-9
            assert rep.intermediate <= rep.intermediate_rhs + 1e-9

    def test_holder_fallback_without_metadata(self):
        theta = UncertaintySet.of(rad(1.0))
        phi = cosine(1.0, 1.3, 0.2)
        bare_phi = phi.__class__(f=phi.f, lipschitz=phi.lipschitz, d1=phi.d1, d2=phi.d2)
        rep = stein_bound(theta, bare_phi, alpha=0.5)
        # dense-search estimate is a slight lower bound of the closed form
        assert rep.holder_value <= phi.holder_d2(0.5) + 1e-9
        assert rep.holder_value == pytest.approx(phi.holder_d2(0.5), rel=1e-2)

    def test_g_is_lipschitz_in_curvature(self):
        rng = np.random.default_rng(9)
        a, b = rng.normal(size=(2, 100))
        gap = np.abs(BAND.g(a) - BAND.g(b))
        assert np.all(gap <= 0.5 * BAND.sigma_bar**2 * np.abs(a - b) + 1e-12)


class TestTaylorRemainders:
    def test_quadratic_all_zero(self):
        rem = taylor_remainders(quadratic(2.0, 1.0, 0.5), 0.5, 1.3)
        assert rem.r0 == pytest.approx(0.0, abs=1e-12)
        assert rem.r1 == pytest.approx(0.0, abs=1e-12)
        assert rem.r2 == pytest.approx(0.0, abs=1e-12)

    def test_cubic_at_half(self):
        rem = taylor_remainders(cubic(), 1.0, 0.5)
        assert rem.r0 == pytest.approx(0.125, abs=1e-12)
        assert rem.bound0 == pytest.approx(0.5 * 6.0 * 0.5**3)
        assert abs(rem.r0) <= rem.bound0

    def test_origin_all_zero(self):
        rem = taylor_remainders(cosine(), 0.5, 0.0)
        assert rem.r0 == rem.r1 == rem.r2 == 0.0

    def test_contracts_on_probe_grid(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            phi = random_smooth_c2(rng)
            alpha = float(rng.uniform(0.1, 0.9))
            for x in rng.uniform(-2, 2, size=5):
                rem = taylor_remainders(phi, alpha, float(x))
                assert abs(rem.r0) <= rem.bound0 + 1e-9
                assert abs(rem.r1) <= rem.bound1 + 1e-9
                assert abs(rem.r2) <= rem.bound2 + 1e-9


class TestClassicalStein:
    def test_constant_residual_zero(self):
        rep = classical_stein_residual(1.0, constant(4.0), [0.0, 1.0], dx=0.05)
        assert rep.max_residual <= 1e-9

    def test_identity_function_closed_form(self):
        # phi = x: g' integrates (1-s)^{-1/2} to 2, g'' vanishes, residual 0
        rep = classical_stein_residual(1.0, affine(1.0, 0.0), [-2.0, 0.5, 3.0], dx=0.05)
        assert rep.max_residual <= 1e-3

    def test_gaussian_expect_oracle(self):
        assert gaussian_expect(cosine(), 1.0) == pytest.approx(math.exp(-0.5), abs=1e-10)
        assert gaussian_expect(quadratic(1.0), 2.0) == pytest.approx(4.0, abs=1e-9)

    def test_band_must_collapse(self):
        fld = solve_gheat(BAND, cosine(), make_grid(BAND, dx=0.05, x_span=3.0))
        with pytest.raises(ValueError):
            classical_stein_residual(1.0, cosine(), [0.0], field=fld)
