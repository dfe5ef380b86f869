import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conicgeom import conic_space as cs
from conicgeom import jets, tensorlab
from conicgeom.quantics import BinaryForm, transvect

coords = st.lists(st.floats(-1, 1), min_size=5, max_size=5).map(np.array)


def _metric_by_hand(x):
    """Squares of one-forms, expanded independently of the library."""
    a, b, p, q, r = x
    forms = [
        (8.0, np.array([2, 1, 0, 0, 0.0])),
        (24.0, np.array([0, 1, 0, 0, 0.0])),
        (8 * np.exp(2 * a + 4 * b), np.array([0, 0, 1, 0, 0.0])),
        (8 * np.exp(2 * a - 2 * b), np.array([0, 0, 0, 0, 1.0])),
        (8 * np.exp(4 * a + 2 * b), np.array([0, 0, 0, 1, -p])),
    ]
    return sum(c * np.outer(v, v) for c, v in forms)


def test_origin_conic_and_metric_values():
    assert np.allclose(cs.conic_matrix(np.zeros(5)), np.eye(3))
    g = cs.metric(np.zeros(5))
    assert g[0, 0] == 32 and g[2, 2] == 8 and g[3, 3] == 8


@settings(max_examples=40, deadline=None)
@given(coords)
def test_metric_matches_hand_expansion(x):
    assert np.allclose(cs.metric(x), _metric_by_hand(x), rtol=1e-13, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(coords)
def test_conic_matrix_is_unimodular(x):
    A = cs.conic_matrix(x)
    assert np.allclose(A, A.T)
    assert np.linalg.det(A) == pytest.approx(1.0, abs=1e-12 * np.abs(A).max() ** 3)
    assert np.all(np.linalg.eigvalsh(A) > 0)


def test_sl3_action_and_inverse_chart():
    rng = np.random.default_rng(2)
    for _ in range(10):
        x = rng.uniform(-1, 1, 5)
        N = rng.normal(size=(3, 3))
        N /= np.cbrt(np.linalg.det(N))
        A2 = N @ cs.conic_matrix(x) @ N.T
        assert np.linalg.det(A2) == pytest.approx(1.0, rel=1e-10)
        back = cs.point_from_conic(A2)
        assert np.allclose(cs.conic_matrix(back), A2, rtol=1e-10, atol=1e-10)
        assert np.allclose(cs.point_from_conic(cs.conic_matrix(x)).x, x, atol=1e-10)


def test_base_parametrization_at_origin():
    Z = cs.parametrize(np.zeros(5), 1.0, 1.0)
    assert np.allclose(Z, [0, 2, 2j])
    assert abs(Z @ Z) == 0


@settings(max_examples=40, deadline=None)
@given(coords)
def test_parametrization_lies_on_conic(x):
    A = cs.conic_matrix(x)
    C = cs.parametrize_coeffs(x)  # Z^i = sum_k C[i, k] s^(2-k) t^k
    quartic = np.zeros(5, dtype=complex)
    for i in range(3):
        for j in range(3):
            quartic += A[i, j] * np.convolve(C[i], C[j])
    assert np.abs(quartic).max() <= 1e-10 * np.abs(A).max() * np.abs(C).max() ** 2
    s, t = 0.3 + 0.2j, -1.1
    Z = cs.parametrize(x, s, t)
    assert np.allclose(Z, C @ np.array([s * s, s * t, t * t]))


def test_conic_delta_is_eight_i():
    rng = np.random.default_rng(0)
    for x in cs.sample_box(20, 1):
        lam = complex(*rng.normal(size=2))
        assert cs.conic_delta(x, lam) == pytest.approx(8j, abs=1e-9)


# --- metric, coframe and cubic --------------------------------------------

@settings(max_examples=20, deadline=None)
@given(coords)
def test_three_routes_to_the_metric(x):
    g = cs.metric(x)
    assert np.allclose(cs.metric_from_coframe(x), g, rtol=1e-12, atol=1e-10)
    assert np.allclose(2 * cs.metric_from_omega(x), g, rtol=1e-10, atol=1e-10)
    # 4 Tr(A^-1 dA)^2 is a fixed multiple of g; measure it at the origin
    c0 = cs.metric_from_trace(np.zeros(5))[2, 2] / cs.metric(np.zeros(5))[2, 2]
    assert np.allclose(cs.metric_from_trace(x), c0 * g, rtol=1e-10, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(coords, st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False))
def test_quartic_valued_form_two_routes(x, s):
    a = cs.S_from_omega(x, s, 1.0)
    b = cs.S_from_coframe(x, s, 1.0)
    ratio = np.vdot(b, a) / np.vdot(b, b)
    assert np.abs(a - ratio * b).max() <= 1e-9 * np.abs(a).max()


def test_coframe_reality_conditions():
    x = np.array([0.3, -0.2, 0.5, 0.1, -0.7])
    e = cs.coframe(x)
    assert np.allclose(e[4], np.conj(e[0]))
    assert np.allclose(e[3], -np.conj(e[1]))
    assert np.allclose(np.imag(e[2]), 0)
    assert abs(np.linalg.det(e)) > 1e-6


def test_cubic_traces():
    for x in cs.sample_box(20, 3):
        g, G = cs.metric(x), cs.cubic_form(x)
        gi = np.linalg.inv(g)
        assert np.abs(np.einsum("ab,abc->c", gi, G)).max() <= 1e-10 * np.abs(G).max() * np.abs(gi).max()
        full = np.einsum("abc,ad,be,cf,def->", G, gi, gi, gi, G)
        assert full == pytest.approx(35 / 12, rel=1e-10)
        GG = np.einsum("efa,ec,fd,cdb->ab", G, gi, gi, G)
        assert np.allclose(GG, 7 / 12 * g, rtol=1e-9, atol=1e-9 * np.abs(g).max())


def test_so3_certificate():
    rep = cs.so3_certify(20, seed=0, tol=1e-7)
    assert rep["passed"], rep["failures"]


def test_scalar_curvature_is_constant():
    Rs = [tensorlab.curvature(cs.metric, x).scalar for x in cs.sample_box(50, 5)]
    assert np.var(Rs) <= 1e-12
    assert np.mean(Rs) == pytest.approx(-15 / 16, abs=1e-9)


def test_killing_flow_moves_metric_at_second_order():
    rng = np.random.default_rng(8)
    x = rng.uniform(-0.5, 0.5, 5)
    for X in cs.killing_fields():
        errs = []
        for h in (1e-3, 5e-4):
            v = jets.value(X(x))
            y = x + h * v
            # derivative of the Euler step x -> x + h X(x) by central differences
            D = np.eye(5) + h * np.column_stack([
                (jets.value(X(x + 1e-6 * e)) - jets.value(X(x - 1e-6 * e))) / 2e-6 for e in np.eye(5)])
            pulled = D.T @ cs.metric(y) @ D
            errs.append(np.abs(pulled - cs.metric(x)).max())
        # halving h divides an O(h^2) error by about four
        assert errs[1] < 0.35 * errs[0] or errs[0] < 1e-10


# --- null cone ------------------------------------------------------------

def test_null_cone_is_transvectant_null_cone():
    rng = np.random.default_rng(9)
    x0 = rng.uniform(-0.5, 0.5, 5)
    g = cs.metric(x0)
    for _ in range(100):
        h, iota = rng.normal(size=2) + 1j * rng.normal(size=2)
        phi = BinaryForm.from_roots([h, h, h, iota])
        V = cs.vector_of_quartic(x0, phi)
        assert abs(transvect(phi, phi, 4).coeffs[0]) <= 1e-9 * np.abs(phi.coeffs).max() ** 2
        assert abs(V @ g @ V) <= 1e-8 * np.linalg.norm(V) ** 2 * np.abs(g).max()
    c0 = cs.transvectant_metric_constant(np.zeros(5), rng.normal(size=5))
    for _ in range(20):
        V = rng.normal(size=5) + 1j * rng.normal(size=5)
        assert cs.transvectant_metric_constant(x0, V) == pytest.approx(c0, rel=1e-9)
        phi = cs.quartic_of_vector(x0, V)
        assert np.allclose(cs.vector_of_quartic(x0, phi), V)
