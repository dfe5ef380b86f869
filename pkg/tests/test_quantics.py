import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conicgeom.quantics import (
    BinaryForm,
    DomainError,
    SymmetricSpinor,
    from_spinor,
    full_contraction,
    j_invariant,
    roots,
    sl2_act,
    to_spinor,
    transvect,
)

S, T = sp.symbols("s t")


def _poly(coeffs):
    n = len(coeffs) - 1
    return sp.expand(sum(sp.sympify(c) * S ** (n - i) * T ** i for i, c in enumerate(coeffs)))


def _symbolic_transvectant(p, q, k):
    """Brute-force symbolic transvectant, summed over j = 0..k."""
    out = 0
    for j in range(k + 1):
        dp = sp.diff(p, S, k - j, T, j) if j else sp.diff(p, S, k)
        dq = sp.diff(q, S, j, T, k - j) if j else sp.diff(q, T, k)
        out += (-1) ** j * sp.binomial(k, j) * dp * dq
    return sp.expand(out)


def _coeffs_of(expr, degree):
    poly = sp.Poly(expr, S, T) if expr != 0 else None
    out = []
    for i in range(degree + 1):
        out.append(complex(poly.coeff_monomial(S ** (degree - i) * T ** i)) if poly else 0j)
    return np.array(out)


complex_coeff = st.complex_numbers(min_magnitude=0.0, max_magnitude=3.0, allow_nan=False, allow_infinity=False)


def forms(degree):
    return st.lists(complex_coeff, min_size=degree + 1, max_size=degree + 1).map(BinaryForm)


def random_form(rng, n):
    return BinaryForm(rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1))


def random_sl2(rng, bound=2.0):
    while True:
        N = rng.uniform(-bound, bound, (2, 2)) + 1j * rng.uniform(-bound, bound, (2, 2))
        d = np.linalg.det(N)
        if abs(d) > 0.1:
            return N / np.sqrt(d)


# --- transvectants --------------------------------------------------------

def test_middle_term_quartic_matches_symbolic_oracle():
    gamma = sp.Rational(3, 7)
    p = 6 * gamma * S ** 2 * T ** 2
    expected = _symbolic_transvectant(p, p, 4)
    assert sp.simplify(expected - 3456 * gamma ** 2) == 0
    got = transvect(BinaryForm([0, 0, 6 * float(gamma), 0, 0]), BinaryForm([0, 0, 6 * float(gamma), 0, 0]), 4)
    assert got.degree == 0
    assert got.coeffs[0] == pytest.approx(3456 * float(gamma) ** 2, rel=1e-13)


def test_quadruple_root_is_null():
    t4 = BinaryForm([0, 0, 0, 0, 1])
    assert transvect(t4, t4, 4).is_zero


def test_sum_of_cubes_second_transvectant():
    c = BinaryForm([1, 0, 0, 1])  # s^3 + t^3
    h = transvect(c, c, 2)
    assert np.allclose(h.coeffs, [0, 72, 0])
    rs = roots(h)
    assert sorted(abs(s) for s, _ in rs.points) == [0.0, 1.0]


@pytest.mark.parametrize("n1,n2,k", [(4, 4, 4), (3, 3, 2), (4, 4, 2), (3, 2, 1), (2, 4, 2), (5, 3, 3)])
def test_transvectant_matches_symbolic_oracle(n1, n2, k):
    rng = np.random.default_rng(n1 * 31 + n2 * 7 + k)
    c1 = rng.integers(-5, 6, n1 + 1)
    c2 = rng.integers(-5, 6, n2 + 1)
    expected = _coeffs_of(_symbolic_transvectant(_poly(c1), _poly(c2), k), n1 + n2 - 2 * k)
    got = transvect(BinaryForm(c1), BinaryForm(c2), k)
    assert np.allclose(got.coeffs, expected, rtol=1e-12, atol=1e-9)


def test_transvect_order_out_of_range():
    with pytest.raises(DomainError):
        transvect(BinaryForm([1, 0, 1]), BinaryForm([1, 0, 0, 1]), 3)
    with pytest.raises(DomainError):
        transvect(BinaryForm([1, 0, 1]), BinaryForm([1, 0, 1]), -1)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 5), st.integers(0, 5), st.data())
def test_antisymmetry(n1, n2, data):
    k = data.draw(st.integers(0, min(n1, n2)))
    p = data.draw(forms(n1))
    q = data.draw(forms(n2))
    a = transvect(p, q, k).coeffs
    b = ((-1) ** k) * transvect(q, p, k).coeffs
    scale = max(np.abs(a).max(), 1.0)
    assert np.abs(a - b).max() <= 1e-12 * scale


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4), st.data())
def test_degree_bookkeeping(n1, n2, data):
    k = data.draw(st.integers(0, min(n1, n2)))
    r = transvect(data.draw(forms(n1)), data.draw(forms(n2)), k)
    assert r.degree == n1 + n2 - 2 * k


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sl2_equivariance(seed):
    rng = np.random.default_rng(seed)
    N = random_sl2(rng)
    p, q = random_form(rng, 3), random_form(rng, 3)
    lhs = transvect(sl2_act(N, p), sl2_act(N, q), 2)
    rhs = sl2_act(N, transvect(p, q, 2))
    # compare by evaluation at sample points
    pts = rng.normal(size=(10, 2)) + 1j * rng.normal(size=(10, 2))
    a = np.array([lhs(s, t) for s, t in pts])
    b = np.array([rhs(s, t) for s, t in pts])
    assert np.abs(a - b).max() <= 1e-10 * max(np.abs(b).max(), 1.0)


def test_equivariance_needs_the_j0_term():
    rng = np.random.default_rng(3)
    N = random_sl2(rng)
    p, q = random_form(rng, 3), random_form(rng, 3)

    def without_j0(a, b, k):
        pa, pb = _poly(a.coeffs), _poly(b.coeffs)
        full = _symbolic_transvectant(pa, pb, k)
        j0 = sp.expand(sp.diff(pa, S, k) * sp.diff(pb, T, k))
        return BinaryForm(_coeffs_of(full - j0, a.degree + b.degree - 2 * k))

    lhs = without_j0(sl2_act(N, p), sl2_act(N, q), 2)
    rhs = sl2_act(N, without_j0(p, q, 2))
    assert not lhs.allclose(rhs, rtol=1e-6)


def test_nullity_criterion():
    rng = np.random.default_rng(11)
    for _ in range(100):
        a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
        triple = BinaryForm.from_roots([a, a, a, b])
        v = transvect(triple, triple, 4).coeffs[0]
        assert abs(v) <= 1e-10 * np.abs(triple.coeffs).max() ** 2
        generic = BinaryForm.from_roots(rng.normal(size=4) + 1j * rng.normal(size=4))
        assert abs(transvect(generic, generic, 4).coeffs[0]) > 1e-8 * np.abs(generic.coeffs).max() ** 2


# --- J invariant ----------------------------------------------------------

def test_j_invariant_of_quadruple_root():
    assert j_invariant(BinaryForm([0, 0, 0, 0, 1])) == 0


def test_j_invariant_is_composition_of_transvectants():
    psi = BinaryForm([0, 0, 2.5, 0, 0])
    p = _poly([0, 0, sp.Rational(5, 2), 0, 0])
    expected = _symbolic_transvectant(_symbolic_transvectant(p, p, 2), p, 4)
    assert expected != 0
    assert j_invariant(psi) == pytest.approx(complex(expected), rel=1e-13)


def test_j_invariant_needs_quartic():
    with pytest.raises(DomainError):
        j_invariant(BinaryForm([1, 0, 1]))


# --- SL(2) action ---------------------------------------------------------

def test_sl2_identity_and_weight_zero():
    rng = np.random.default_rng(0)
    phi = random_form(rng, 4)
    assert sl2_act(np.eye(2), phi).allclose(phi, rtol=1e-15)
    st_ = BinaryForm([0, 1, 0])
    assert sl2_act(np.diag([2.5, 0.4]), st_).allclose(st_, rtol=1e-14)


def test_sl2_singular_matrix():
    with pytest.raises(DomainError):
        sl2_act([[1, 2], [2, 4]], BinaryForm([1, 0, 1]))


def test_sl2_act_is_substitution():
    rng = np.random.default_rng(4)
    N = rng.normal(size=(2, 2))
    phi = random_form(rng, 3)
    out = sl2_act(N, phi)
    for s, t in rng.normal(size=(5, 2)):
        s2, t2 = np.array([s, t]) @ N
        assert out(s, t) == pytest.approx(phi(s2, t2), rel=1e-12)


# --- roots ----------------------------------------------------------------

def test_roots_of_factored_quartic():
    phi = BinaryForm.from_roots([0.0, None, 1.0, -1.0])
    rs = roots(phi)
    assert rs.count == 4
    aff = rs.affine()
    finite = sorted(np.real(z) for z in aff if not np.isinf(abs(z)))
    assert np.allclose(finite, [-1, 0, 1], atol=1e-12)
    assert sum(np.isinf(abs(z)) for z in aff) == 1


def test_roots_quadratic_formula():
    # s^2 + 3 t^2 with t = lam s gives 3 lam^2 + 1 = 0
    rs = roots(BinaryForm([1, 0, 3]))
    lam = sorted(rs.affine(), key=np.imag)
    a, b, c = 3.0, 0.0, 1.0
    disc = np.sqrt(complex(b * b - 4 * a * c))
    expected = sorted([(-b + disc) / (2 * a), (-b - disc) / (2 * a)], key=np.imag)
    assert np.allclose(lam, expected, atol=1e-12)
    assert np.allclose(lam, [-1j / np.sqrt(3), 1j / np.sqrt(3)], atol=1e-12)


def test_roots_triple():
    phi = BinaryForm.from_roots([0.5, 0.5, 0.5])
    rs = roots(phi)
    assert rs.multiplicities == (3,)
    assert rs.affine()[0] == pytest.approx(0.5, abs=1e-6)


def test_roots_of_zero_form():
    with pytest.raises(DomainError):
        roots(BinaryForm([0, 0, 0]))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_root_count_equals_degree(n, seed):
    rng = np.random.default_rng(seed)
    phi = random_form(rng, n)
    rs = roots(phi)
    assert rs.count == n
    for s, t in rs.points:
        assert abs(phi(s, t)) <= 1e-7 * np.abs(phi.coeffs).max()


# --- spinors --------------------------------------------------------------

def test_t4_spinor():
    sp_ = to_spinor(BinaryForm([0, 0, 0, 0, 1]))
    assert np.allclose(sp_.components, [1, 0, 0, 0, 0])


@settings(max_examples=50, deadline=None)
@given(forms(4))
def test_spinor_round_trip(phi):
    back = from_spinor(to_spinor(phi))
    assert np.allclose(back.coeffs, phi.coeffs, rtol=1e-15, atol=1e-15)


def _brute_contraction(V):
    eps = np.array([[0, 1], [-1, 0]])
    total = 0
    for idx in np.ndindex(*(2,) * 8):
        lower_idx, upper = idx[:4], idx[4:]
        w = 1
        for a, b in zip(lower_idx, upper):
            w *= eps[a, b]
        if w:
            total += w * V[lower_idx] * V[upper]
    return total


def test_quartic_contraction_by_brute_force():
    al, be, ga, de, ep = 1.3, -0.7, 0.4, 2.1, -1.6
    # alpha t^4 + 4 beta t^3 s + 6 gamma t^2 s^2 + 4 delta t s^3 + eps s^4
    V = BinaryForm([ep, 4 * de, 6 * ga, 4 * be, al])
    T4 = to_spinor(V).tensor()
    expected = 2 * al * ep - 8 * be * de + 6 * ga ** 2
    assert _brute_contraction(T4) == pytest.approx(expected, rel=1e-13)
    assert full_contraction(T4, T4) == pytest.approx(expected, rel=1e-13)


def test_contraction_proportional_to_transvectant():
    rng = np.random.default_rng(5)
    ratios = []
    for _ in range(100):
        V = random_form(rng, 4)
        T4 = to_spinor(V).tensor()
        ratios.append(transvect(V, V, 4).coeffs[0] / full_contraction(T4, T4))
    ratios = np.array(ratios)
    assert np.abs(ratios - ratios[0]).max() <= 1e-10 * abs(ratios[0])


def test_spinor_component_count():
    with pytest.raises(DomainError):
        SymmetricSpinor(2, np.zeros(4))
