import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conicgeom import conic_space as cs
from conicgeom import jets, radon
from conicgeom.quantics import DomainError

POINTS = cs.sample_box(20, 4, half_width=0.8)


def _generic_function(x):
    a, b, p, q, r = (x[i] for i in range(5))
    return jets.sin(a - 0.5 * b) * q + p * p * r + jets.exp(0.3 * b) * a


def test_constant_is_annihilated():
    const = lambda x: 0 * x[0] + 2.5  # noqa: E731
    for x in POINTS[:5]:
        assert abs(radon.laplacian(const, x)) <= 1e-14
        assert np.abs(radon.box_op(const, x)).max() <= 1e-14


@pytest.mark.parametrize("F", [_generic_function, radon.trace_conic])
def test_two_operator_routes_agree_off_the_range(F):
    for x in POINTS:
        gen = radon.laplacian_generic(F, x)
        exp = radon.laplacian_explicit(F, x)
        assert abs(gen - exp) <= 1e-8 * (1 + abs(gen))
        bg = radon.box_residual_generic(F, x)
        be = radon.box_residual_explicit(F, x) / radon.EXPLICIT_BOX_FACTOR
        assert np.abs(bg - be).max() <= 1e-8 * (1 + np.abs(bg).max())


def test_single_exponential_member():
    F = radon.family_F1([0, 0, 0, 0, 0, 1, 0, 0])
    for x in POINTS:
        assert F(x) == pytest.approx(np.exp(-2 * x[0]))
        r = radon.range_residuals(F, x)
        assert r.worst <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=8, max_size=8).filter(any),
       st.lists(st.floats(-0.8, 0.8), min_size=5, max_size=5))
def test_eight_parameter_family_is_in_range(gammas, x):
    F = radon.family_F1(gammas)
    assert radon.range_residuals(F, np.array(x)).worst <= 1e-7


def test_zero_function_and_parameter_count():
    with pytest.raises(radon.ZeroFunctionError):
        radon.family_F1([0] * 8)
    with pytest.raises(ValueError):
        radon.family_F1([1, 2, 3])


def test_trace_is_not_in_range():
    worst = max(np.abs(radon.box_op(radon.trace_conic, x)
                       - radon.EIGEN_BOX * jets.jet_of(radon.trace_conic, x, 1).gradient()).max()
                for x in POINTS)
    assert worst > 1e-2
    assert max(radon.range_residuals(radon.trace_conic, x).worst for x in POINTS) > 1e-3


# --- eigenvalue relation --------------------------------------------------

def test_mu_kappa_values():
    assert radon.predicted_mu(1 / 24, -15 / 16) == pytest.approx(-1 / 12, abs=1e-15)
    assert radon.predicted_mu(1 / 3, -60) == pytest.approx(-16 / 3, abs=1e-14)
    assert radon.predicted_mu(0, 0) == 0


def test_mu_kappa_check_on_range_and_off_range():
    F = radon.family_F1([0.3, -1, 0.2, 0.5, 0.1, 1, -0.4, 0.7])
    ok = radon.mu_kappa_check(F, radon.EIGEN_BOX, POINTS[:8])
    assert ok["passed"] and ok["premise_holds"]
    assert ok["mu"] == pytest.approx(radon.EIGEN_LAPLACE)
    bad = radon.mu_kappa_check(radon.trace_conic, radon.EIGEN_BOX, POINTS[:4])
    assert not bad["premise_holds"] and not bad["passed"]


# --- harmonic family ------------------------------------------------------

def test_harmonic_u_reproduces_exponential():
    F = radon.family_harmonic(lambda u, q: u)
    for x in POINTS[:5]:
        assert F(x) == pytest.approx(np.exp(-2 * x[0]), rel=1e-13)


def test_harmonic_family_is_in_range():
    K = lambda u, q: jets.exp(u) * jets.cos(q) + u * q  # noqa: E731
    F = radon.family_harmonic(K, [0.5, 1.0, 0, -0.3, 0.2, 0.1, 0, 0])
    assert radon.certify_range(F, POINTS)["laplace"] <= 1e-7
    assert radon.certify_range(F, POINTS)["box"] <= 1e-7


def test_harmonic_guard_rejects_non_harmonic_kernel():
    with pytest.raises(ValueError, match="harmonic"):
        radon.family_harmonic(lambda u, q: u * u + q * q)
    with pytest.raises(ValueError):
        radon.family_harmonic(lambda u, q: u, [0, 0, 1, 0, 0, 0, 0, 0])


def test_u_squared_minus_q_squared_is_harmonic_and_accepted():
    K = lambda u, q: u * u - q * q  # noqa: E731
    assert radon.check_harmonic(K, [(1.0, 0.3), (2.0, -1.0)]) <= 1e-14
    F = radon.family_harmonic(K)
    assert radon.certify_range(F, POINTS[:6])["laplace"] <= 1e-7


# --- SL(3) orbit ----------------------------------------------------------

def test_sl3_pullback_stays_in_range():
    for x in POINTS[:5]:
        assert radon.r_exp_minus_2a(cs.conic_matrix(x)) == pytest.approx(x[4] * np.exp(-2 * x[0]))
    rng = np.random.default_rng(12)
    for _ in range(3):
        N = radon.random_sl3(rng)
        assert np.linalg.det(N) == pytest.approx(1.0)
        F = radon.sl3_pullback(radon.r_exp_minus_2a, N)
        assert radon.certify_range(F, POINTS[:10])["box"] <= 1e-7
        assert radon.certify_range(F, POINTS[:10])["laplace"] <= 1e-7


# --- residue transform ----------------------------------------------------

def test_section_parsing_and_homogeneity():
    f = radon.section("Z2/(Z1*Z3)")
    assert f.numerator == {(0, 1, 0): 1.0}
    assert f.denominator == {(1, 0, 1): 1.0}
    assert f.homogeneity_residual(np.random.default_rng(0)) <= 1e-10
    assert radon.section("Z3/(Z1^2)").denominator == {(2, 0, 0): 1.0}
    with pytest.raises(ValueError):
        radon.RationalSection({(1, 0, 0): 1.0}, {(1, 0, 0): 1.0})


@pytest.mark.parametrize("name", ["Z2/(Z1*Z3)", "1/Z1", "Z2/(Z1^2)", "Z3/(Z1^2)"])
def test_residue_transform_matches_closed_forms(name):
    f = radon.section(name)
    F = radon.residue_transform(f, radon.PoleSpec(1.0))
    ref = radon.closed_form_residues()[name]
    for x in POINTS[:8]:
        assert F(x) == pytest.approx(ref(x), abs=1e-9 * (1 + abs(ref(x))))
    assert radon.certify_range(F, POINTS[:8])["box"] <= 1e-7


def test_simple_pole_residue_by_derivative_of_denominator():
    # for a simple pole, res = N / D' at the pole; independent of the quadrature
    f = radon.section("Z2/(Z1*Z3)")
    spec = radon.PoleSpec(1.0)
    F = radon.residue_transform(f, spec)
    P = np.polynomial.polynomial
    for x in POINTS[:5]:
        lam, _ = radon.track_pole(f, spec, x)
        C = cs.parametrize_coeffs(x)
        num = P.polyval(lam, C[1])
        dden = P.polyval(lam, P.polyder(f.pole_polynomial(x)))
        assert F.complex_value(x) == pytest.approx(2 * num / dden, rel=1e-10)


def test_bad_pole_spec():
    f = radon.section("Z2/(Z1*Z3)")
    with pytest.raises(radon.BranchTrackingError):
        radon.track_pole(f, radon.PoleSpec(0.123), POINTS[0])


# --- ODE and jet metric ---------------------------------------------------

def test_circle_q_power():
    assert radon.q_power_third_derivative(radon.unit_circle_upper, 0.3) <= 1e-7


def test_line_is_excluded():
    with pytest.raises(DomainError):
        radon.ode_residual(lambda x: x, 0.2)


def test_ode_rhs_vanishes_without_r():
    assert radon.ode_rhs(0.4, -0.2, 1.0, 0.0, 0.0) == 0


def test_random_conic_branches_solve_ode():
    rng = np.random.default_rng(6)
    for _ in range(10):
        coeffs = rng.uniform(-1, 1, 6)
        coeffs[0] = 1 + abs(coeffs[0])
        coeffs[3] = -1 - abs(coeffs[3])
        assert radon.ode_residual(radon.conic_branch(coeffs), 0.0) <= 1e-6


def test_non_conic_fails_ode():
    assert radon.ode_residual(lambda x: jets.exp(x) + x ** 3, 0.1) > 1e-3


def test_jet_metric_package():
    out = radon.ode5_package(6, seed=1)
    assert out["einstein"] <= 1e-6
    assert out["scalar_curvature"] <= 1e-6
    assert out["jet_laplace_eigen"] <= 1e-6
    assert out["ode"] <= 1e-6
