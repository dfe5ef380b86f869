import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conicgeom import jets
from conicgeom import legendre_flat as lf

IZ, IZB, ITAU, ITAUB, IY = range(5)

RESIDUE_F = lf.ContourTransform(lambda om, zeta: -zeta**2 / om**2)


def _residue_points(n, seed):
    """Level points of the residue potential where the Legendre change is regular."""
    pot = lf.reciprocal_potential()
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        x = lf.level_point(pot, lf.random_real_point(rng, 0.7).coords())
        X, w = lf.legendre_point(pot, x)
        try:
            lf.legendre_solve(pot, X, w)
        except lf.FoldError:
            continue
        out.append((x, X, w))
    return pot, out


def test_point_reality():
    p = lf.random_real_point(np.random.default_rng(0))
    c = p.coords()
    assert c[IZB] == np.conj(c[IZ]) and c[ITAUB] == np.conj(c[ITAU])
    assert c[IY].imag == 0


# --- flat SO(3) structure -------------------------------------------------

def test_flat_structure_identities():
    res = lf.flat_structure_residuals()
    for k, v in res.items():
        assert v <= 1e-12, k


def test_flat_cubic_traces_match_the_curved_constants():
    s = lf.flat_structure()
    gi = np.linalg.inv(s.g)
    G = s.G
    assert np.abs(np.einsum("ab,abc->c", gi, G)).max() <= 1e-12 * np.abs(G).max()
    full = np.einsum("abc,ad,be,cf,def->", G, gi, gi, gi, G)
    assert full == pytest.approx(35 / 12, rel=1e-12)
    GG = np.einsum("efa,ec,fd,cdb->ab", G, gi, gi, G)
    assert np.allclose(GG, 7 / 12 * s.g, atol=1e-12 * np.abs(s.g).max())


# --- the flat range equations ---------------------------------------------

def test_linear_function_solves_the_system():
    r = lf.flat_range_residual(lambda x: x[IY] + 0.0 * x[IZ], np.ones(5))
    assert max(r["explicit"].values()) == 0
    assert r["laplacian"] == 0 and r["box"] == 0


def test_violating_quadratic_is_named():
    r = lf.flat_range_residual(lambda x: x[IZ] * x[IZ], np.ones(5))
    assert r["explicit"]["F_ytau - F_zz"] == pytest.approx(2.0)
    assert r["box"] > 0


def test_explicit_and_structural_systems_agree():
    eq = lf.system_equivalence(40, seed=1)
    assert eq["fit_residual"] <= 1e-10
    # both systems have the same rank, so the transfer is invertible
    assert eq["transfer_condition"] < 1e6


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_explicit_and_structural_vanish_together(seed):
    # kernel of the explicit equations lies in the kernel of Laplacian and box
    rng = np.random.default_rng(seed)
    E = np.array([lf.explicit_residuals(np.eye(5)[i][:, None] * np.eye(5)[j][None, :]
                                         + np.eye(5)[j][:, None] * np.eye(5)[i][None, :])
                  for i in range(5) for j in range(5)]).T
    _, sv, vh = np.linalg.svd(E)
    kernel = vh[np.sum(sv > 1e-12):]
    c = kernel.T @ (rng.normal(size=len(kernel)) + 1j * rng.normal(size=len(kernel)))
    H = sum(c[5 * i + j] * (np.eye(5)[i][:, None] * np.eye(5)[j][None, :]
                            + np.eye(5)[j][:, None] * np.eye(5)[i][None, :])
            for i in range(5) for j in range(5))
    assert np.abs(lf.explicit_residuals(H)).max() <= 1e-12 * np.abs(H).max()
    assert np.abs(lf.structural_residuals(H)).max() <= 1e-10 * np.abs(H).max()


def test_residue_transform_matches_closed_form_and_solves_the_system():
    F = lf.reciprocal_transform()
    rng = np.random.default_rng(2)
    for _ in range(10):
        x = lf.random_real_point(rng, 0.7).coords()
        assert F(x) == pytest.approx(lf.reciprocal_residue(x), rel=1e-9)
        r = lf.flat_range_residual(F, x)
        assert max(r["explicit"].values()) <= 1e-7 * r["hessian_scale"]
        assert r["laplacian"] <= 1e-7 * r["hessian_scale"]
        assert r["box"] <= 1e-7 * r["hessian_scale"]


# --- hyper-Kahler two-forms -----------------------------------------------

def test_sigma_forms_closed_on_solutions():
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = lf.random_real_point(rng, 0.7).coords()
        assert lf.sigma_closedness(RESIDUE_F, x) <= 1e-8
        assert lf.sigma_algebra_on_X(RESIDUE_F, x)["symmetric_part"] <= 1e-8


def test_sigma_forms_not_closed_off_solutions():
    x = lf.random_real_point(np.random.default_rng(4), 0.7).coords()
    F = lambda v: v[IZ] * v[IZ] * v[IY] + jets.exp(v[ITAU])  # noqa: E731
    assert lf.sigma_closedness(F, x) > 1e-3


# --- Legendre transform ---------------------------------------------------

def test_quadratic_potential_gives_flat_space():
    pot = lf.quadratic_potential()
    x = lf.level_point(pot, lf.random_real_point(np.random.default_rng(5)).coords())
    X, w = lf.legendre_point(pot, x)
    res = lf.legendre_ma_check(pot, X, w)
    assert not res["fold"]
    assert res["monge_ampere"] == pytest.approx(1.0, abs=1e-12)
    assert res["riemann"] <= 1e-12


def test_degenerate_potential_reports_a_fold():
    pot = lf.degenerate_potential()
    res = lf.legendre_ma_check(pot, np.array([0.1, 0.1, 0.2, 0.2]), np.zeros(3))
    assert res["fold"]
    with pytest.raises(lf.FoldError):
        lf.legendre_solve(pot, np.array([0.1, 0.1, 0.2, 0.2]), np.zeros(3))


def test_residue_potential_solves_monge_ampere():
    pot, pts = _residue_points(4, seed=6)
    for x, X, w in pts:
        assert abs(lf.flat_range_residual(lambda v: pot.grad(v)[IY], x)["explicit"]["F_ytau - F_zz"]) \
            <= 1e-7 * max(1.0, np.abs(jets.jet_of(pot.H, x, 2).hessian()).max())
        res = lf.legendre_ma_check(pot, X, w)
        assert not res["fold"]
        assert abs(res["monge_ampere"] - 1.0) <= 1e-6
        assert res["ricci"] <= 1e-6


def test_pairing_tau_against_u_does_not_solve_monge_ampere():
    pot, pts = _residue_points(2, seed=7)
    vals = [lf.monge_ampere_tau_pairing(pot, X, w) for _, X, w in pts]
    assert all(abs(v - 1.0) > 1e-2 for v in vals)
    assert abs(vals[0] - vals[1]) > 1e-2


def test_certificate():
    rep = lf.certify_legendre(4, seed=0, curvature_points=2)
    assert rep["monge_ampere"] <= 1e-6
    assert rep["ricci"] <= 1e-6
    assert rep["flat_system"] <= 1e-7
    assert rep["sigma_closed"] <= 1e-8
    assert rep["sigma_algebra"] <= 1e-8
