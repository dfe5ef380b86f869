import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conicgeom import jets, tensorlab
from conicgeom.quantics import DomainError


def _smooth_field(params):
    a, b, c = params

    def f(x):
        lin_a = sum(a[i] * x[i] for i in range(len(a)))
        lin_b = sum(b[i] * x[i] for i in range(len(b)))
        lin_c = sum(c[i] * x[i] for i in range(len(c)))
        return jets.exp(lin_a) * jets.sin(lin_b) + lin_c ** 3 + jets.cos(lin_a * lin_b)

    return f


def _fd_partial(f, x, alpha, h):
    """Central finite difference for a multi-index ``alpha`` (order <= 3)."""
    dirs = [i for i, k in enumerate(alpha) for _ in range(k)]
    total = 0.0
    for signs in itertools.product((-1, 1), repeat=len(dirs)):
        y = np.array(x, dtype=float)
        for i, s in zip(dirs, signs):
            y[i] += s * h
        total += np.prod(signs) * f(y)
    return total / (2 * h) ** len(dirs)


def _richardson(f, x, alpha, h=1e-2):
    a1 = _fd_partial(f, x, alpha, h)
    a2 = _fd_partial(f, x, alpha, h / 2)
    return (4 * a2 - a1) / 3


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_jet_channels_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    d = 3
    f = _smooth_field([rng.uniform(-0.8, 0.8, d) for _ in range(3)])
    x = rng.uniform(-0.5, 0.5, d)
    J = jets.jet_of(f, x, 3)
    for order in (1, 2, 3):
        for alpha in itertools.product(range(order + 1), repeat=d):
            if sum(alpha) != order:
                continue
            ref = _richardson(f, x, alpha)
            got = J.derivative(alpha)
            assert abs(got - ref) <= 1e-5 * (1 + abs(ref)), (alpha, got, ref)


def test_scalar_field_value_channel():
    f = tensorlab.ScalarField(_smooth_field([np.array([0.3, -0.2]), np.array([0.5, 0.1]),
                                             np.array([0.2, 0.2])]), 2)
    x = np.array([0.1, 0.4])
    assert f.jet(x, 2).value == pytest.approx(f(x), rel=1e-14)


# --- curvature ------------------------------------------------------------

def _flat(n):
    return lambda x: np.eye(n) + 0 * x[0]


def _sphere(x):
    s = jets.sin(x[0])
    one, zero = 1.0 + 0 * x[0], 0 * x[0]
    return jets.stack([jets.stack([one, zero]), jets.stack([zero, s * s])])


def _curved4(x):
    # a diagonal metric that is neither conformally flat nor Einstein
    d = [jets.exp(0.3 * x[0] * x[1]), 1.0 + x[2] * x[2], 2.0 + jets.sin(x[0] + x[3]), jets.exp(0.2 * x[1] - 0.1 * x[2])]
    zero = 0 * x[0]
    rows = []
    for i in range(4):
        rows.append(jets.stack([d[i] if i == j else zero for j in range(4)]))
    return jets.stack(rows)


def test_flat_space_has_no_curvature():
    c = tensorlab.curvature(_flat(5), np.array([0.1, 0.2, -0.3, 0.4, 0.5]))
    for arr in (c.christoffel, c.riemann, c.ricci, c.weyl):
        assert np.abs(arr).max() <= 1e-12
    assert abs(c.scalar) <= 1e-12


@pytest.mark.parametrize("theta", [0.4, 1.1, 2.0])
def test_unit_sphere_scalar_curvature(theta):
    c = tensorlab.curvature(_sphere, np.array([theta, 0.3]))
    assert c.scalar == pytest.approx(2.0, abs=1e-9)


def test_metric_field_wrapper_and_degenerate_metric():
    c = tensorlab.curvature(tensorlab.MetricField(_sphere, 2), np.array([0.9, 0.0]))
    assert c.scalar == pytest.approx(2.0, abs=1e-9)
    with pytest.raises(DomainError):
        tensorlab.curvature(_sphere, np.array([0.0, 0.0]))


def test_curvature_symmetries_and_bianchi():
    x = np.array([0.2, -0.4, 0.3, 0.1])
    c = tensorlab.curvature(_curved4, x)
    R = c.riemann
    scale = np.abs(R).max()
    bianchi = R + np.einsum("abcd->acdb", R) + np.einsum("abcd->adbc", R)
    assert np.abs(bianchi).max() <= 1e-7 * scale
    assert np.abs(c.ricci - c.ricci.T).max() <= 1e-12 * scale
    Rd = c.riemann_down
    assert np.abs(Rd + np.einsum("abcd->bacd", Rd)).max() <= 1e-12 * scale
    assert np.abs(Rd - np.einsum("abcd->cdab", Rd)).max() <= 1e-10 * scale
    W = c.weyl
    assert np.abs(np.einsum("abad->bd", W)).max() <= 1e-7 * scale
    assert c.scalar == pytest.approx(np.einsum("ab,ab->", np.linalg.inv(c.metric), c.ricci), rel=1e-12)


def test_metric_compatibility():
    x = np.array([0.2, -0.4, 0.3, 0.1])
    g, dg = tensorlab.MetricField(_curved4, 4).derivatives(x, 1)
    Gam = tensorlab.christoffel_from(g, dg)
    nabla = dg - np.einsum("dca,db->abc", Gam, g) - np.einsum("dcb,ad->abc", Gam, g)
    assert np.abs(nabla).max() <= 1e-12


def test_weyl_split_reconstructs_and_flips():
    x = np.array([0.2, -0.4, 0.3, 0.1])
    c = tensorlab.curvature(_curved4, x)
    cp, cm = tensorlab.weyl_split(c.weyl_down, c.metric, 1)
    assert np.abs(cp + cm - c.weyl_down).max() <= 1e-10 * np.abs(c.weyl_down).max()
    cpp, cpm = tensorlab.weyl_split(cp, c.metric, 1)
    assert np.abs(cpp - cp).max() <= 1e-10 * np.abs(cp).max()
    assert np.abs(cpm).max() <= 1e-10 * np.abs(cp).max()
    np_, nm = tensorlab.weyl_split_norms(_curved4, x, 1)
    fp, fm = tensorlab.weyl_split_norms(_curved4, x, -1)
    assert np_ == pytest.approx(fm, rel=1e-12)
    assert nm == pytest.approx(fp, rel=1e-12)
    assert np_ > 1e-3 and nm > 1e-3


def test_weyl_split_flat_and_dimension():
    assert tensorlab.weyl_split_norms(_flat(4), np.zeros(4)) == (0.0, 0.0)
    with pytest.raises(ValueError):
        tensorlab.weyl_split(np.zeros((5, 5, 5, 5)), np.eye(5))


# --- forms ----------------------------------------------------------------

def test_hodge_star_flat_r4():
    w = tensorlab.wedge(np.eye(4)[0], np.eye(4)[1])
    star = tensorlab.hodge_star(w, np.eye(4))
    assert np.allclose(star, tensorlab.wedge(np.eye(4)[2], np.eye(4)[3]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hodge_star_is_involution_on_two_forms_in_five_dimensions(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(5, 5))
    g = A @ A.T + 5 * np.eye(5)
    w = rng.normal(size=(5, 5))
    w = w - w.T
    ss = tensorlab.hodge_star(tensorlab.hodge_star(w, g), g)
    assert np.abs(ss - w).max() <= 1e-10 * np.abs(w).max()


def test_two_form_norm_of_orthonormal_pair():
    w = tensorlab.wedge(np.eye(4)[0], np.eye(4)[1])
    assert tensorlab.two_form_norm2(w, np.eye(4)) == pytest.approx(1.0)


def test_d_of_exact_form_vanishes():
    f = _smooth_field([np.array([0.3, -0.2, 0.1]), np.array([0.5, 0.1, -0.4]), np.array([0.2, 0.2, 0.3])])

    # df as a first-order jet, read off a second-order jet of f
    x0 = np.array([0.2, -0.1, 0.4])
    J = jets.jet_of(f, x0, 2).d()
    dd = tensorlab.exterior_d_at(J)
    assert np.abs(dd).max() <= 1e-10


def test_d_of_polynomial_one_form():
    def omega(x):
        return jets.stack([0 * x[0], x[0]])  # x^1 dx^2

    dw = tensorlab.exterior_d(omega, np.array([0.3, -0.7]))
    assert np.allclose(dw, [[0, 1], [-1, 0]])
    dwj = tensorlab.exterior_d_jet(jets.jet_of(omega, np.array([0.3, -0.7]), 2))
    assert np.allclose(dwj.value, dw)


def test_wedge_antisymmetry():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(2, 4))
    assert np.allclose(tensorlab.wedge(a, b), -tensorlab.wedge(b, a))
    assert np.allclose(tensorlab.wedge(a, a), 0)


# --- Lie derivatives ------------------------------------------------------

def test_lie_derivative_of_constant_tensor_along_coordinate_field():
    X = lambda x: jets.stack([1.0 + 0 * x[0], 0 * x[0], 0 * x[0]])  # noqa: E731
    T = lambda x: np.arange(9.0).reshape(3, 3) + 0 * x[0]  # noqa: E731
    assert np.abs(tensorlab.lie_derivative(X, T, np.array([0.1, 0.2, 0.3]))).max() == 0


def test_lie_derivative_rotation_and_dilation():
    rot = lambda x: jets.stack([-x[1], x[0]])  # noqa: E731
    dil = lambda x: jets.stack([x[0], x[1]])  # noqa: E731
    x = np.array([0.4, -1.2])
    assert np.abs(tensorlab.lie_derivative(rot, _flat(2), x)).max() <= 1e-14
    assert np.allclose(tensorlab.lie_derivative(dil, _flat(2), x), 2 * np.eye(2))


def test_lie_bracket_of_coordinate_fields():
    X = lambda x: jets.stack([1.0 + 0 * x[0], 0 * x[0]])  # noqa: E731
    Y = lambda x: jets.stack([0 * x[0], x[0]])  # noqa: E731
    assert np.allclose(tensorlab.lie_bracket(X, Y, np.array([0.5, 0.5])), [0, 1])


def test_sample_points_is_reproducible():
    def sampler(rng):
        return rng.uniform(-1, 1, 3)

    def valid(p):
        return p[0] > 0

    a = tensorlab.sample_points(sampler, 5, 3, valid)
    b = tensorlab.sample_points(sampler, 5, 3, valid)
    assert np.array_equal(np.array(a), np.array(b))
    assert all(p[0] > 0 for p in a)
    with pytest.raises(RuntimeError):
        tensorlab.sample_points(sampler, 2, 0, lambda p: False, max_tries=3)
