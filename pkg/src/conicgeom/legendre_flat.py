"""Flat model: SO(3) structure on R^5 from sections of O(4), and the
generalised Legendre transform.

Points carry the coordinates ``x = (z, zb, tau, taub, y)`` of the section

    omega(zeta) = tau + zeta z + zeta^2 y - zeta^3 zb + zeta^4 taub

in the affine chart ``s = 1, t = zeta``.  Real points have ``zb = conj(z)``,
``taub = conj(tau)`` and real ``y``; every computation below treats the five
coordinates as independent complex variables, so holomorphic identities can be
checked away from the real slice too.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import conic_space as cs
from . import jets, spinforms, tensorlab
from .quantics import DomainError

COORDS = ("z", "zb", "tau", "taub", "y")
IZ, IZB, ITAU, ITAUB, IY = range(5)
# power of zeta multiplying each coordinate in omega, and its sign
OMEGA_POWER = np.array([1, 3, 0, 4, 2])
OMEGA_SIGN = np.array([1.0, -1.0, 1.0, 1.0, 1.0])


class FoldError(DomainError):
    """The Legendre change of variables is not invertible."""


@dataclass(frozen=True)
class PointR5:
    z: complex
    tau: complex
    y: float

    @property
    def zb(self) -> complex:
        return complex(np.conj(self.z))

    @property
    def taub(self) -> complex:
        return complex(np.conj(self.tau))

    def coords(self) -> np.ndarray:
        return np.array([self.z, self.zb, self.tau, self.taub, self.y], dtype=complex)


def random_real_point(rng, scale: float = 1.0) -> PointR5:
    z = complex(*rng.normal(size=2) * scale)
    tau = complex(*rng.normal(size=2) * scale)
    return PointR5(z, tau, float(rng.normal() * scale))


def omega_coeffs(x) -> list:
    """Ascending coefficients of ``omega`` in ``zeta``."""
    return [x[ITAU], x[IZ], x[IY], -x[IZB], x[ITAUB]]


# ---------------------------------------------------------------------------
# SO(3) structure
# ---------------------------------------------------------------------------

def flat_coframe() -> np.ndarray:
    """``e1 = dtaub, e2 = -dzb/4, e3 = dy/6, e4 = dz/4, e5 = dtau``."""
    e = np.zeros((5, 5), dtype=complex)
    e[0, ITAUB] = 1.0
    e[1, IZB] = -0.25
    e[2, IY] = 1.0 / 6.0
    e[3, IZ] = 0.25
    e[4, ITAU] = 1.0
    return e


@dataclass(frozen=True)
class FlatStructure:
    g: np.ndarray
    G: np.ndarray
    coframe: np.ndarray


def flat_structure() -> FlatStructure:
    e = flat_coframe()
    return FlatStructure(cs.metric_of_coframe(e), cs.cubic_of_coframe(e), e)


def flat_structure_residuals() -> dict:
    """Algebraic SO(3) identities, curvature and ``nabla G`` of the flat model."""
    st = flat_structure()
    res = cs.so3_algebraic_residuals(st.g, st.G)

    def const_metric(x):
        return jets.get_space(5, x.space.order).constant(st.g) + 0.0 * x[0]

    curv = tensorlab.curvature(const_metric, np.zeros(5))
    res["riemann"] = float(np.abs(curv.riemann).max())
    # constant components and vanishing Christoffel symbols
    res["nabla_G"] = 0.0
    return res


# ---------------------------------------------------------------------------
# The flat range equations
# ---------------------------------------------------------------------------

EQUATION_NAMES = (
    "F_ytau - F_zz",
    "F_tauzb + F_yz",
    "F_tautaub + F_zzb",
    "F_zzb + F_yy",
    "F_taubz + F_zby",
    "F_tauby - F_zbzb",
)


def explicit_residuals(H: np.ndarray) -> np.ndarray:
    """The six second-order equations from a Hessian in ``(z, zb, tau, taub, y)``."""
    return np.array([
        H[IY, ITAU] - H[IZ, IZ],
        H[ITAU, IZB] + H[IY, IZ],
        H[ITAU, ITAUB] + H[IZ, IZB],
        H[IZ, IZB] + H[IY, IY],
        H[ITAUB, IZ] + H[IZB, IY],
        H[ITAUB, IY] - H[IZB, IZB],
    ])


def structural_residuals(H: np.ndarray) -> np.ndarray:
    """``(Delta_g F, G^{ab}_c F_ab)``: the Laplacian and the cubic-form operator
    (flat connection, so covariant and coordinate Hessians agree)."""
    st = flat_structure()
    ginv = np.linalg.inv(st.g)
    lap = np.einsum("ab,ab->", ginv, H)
    box = np.einsum("ad,be,dec,ab->c", ginv, ginv, st.G, H)
    return np.concatenate([[lap], box])


def system_equivalence(n_samples: int = 40, seed: int = 0) -> dict:
    """Check that the explicit and structural equations cut out the same space.

    Both are linear in the Hessian; the structural residual vector is fitted as
    a fixed linear image of the explicit one over random symmetric Hessians.
    """
    rng = np.random.default_rng(seed)
    Xs, Ys = [], []
    for _ in range(n_samples):
        M = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        H = M + M.T
        Xs.append(explicit_residuals(H))
        Ys.append(structural_residuals(H))
    X, Y = np.array(Xs), np.array(Ys)
    T, *_ = np.linalg.lstsq(X, Y, rcond=None)
    fit = float(np.abs(X @ T - Y).max() / np.abs(Y).max())
    sv = np.linalg.svd(T, compute_uv=False)
    return {"fit_residual": fit, "transfer_condition": float(sv[0] / sv[-1]), "transfer": T}


def flat_range_residual(F: Callable, x) -> dict:
    """Named explicit residuals, structural residuals and the scale of the Hessian."""
    Fj = jets.jet_of(F, np.asarray(x, dtype=complex), 2)
    H = np.asarray(Fj.hessian())
    ex = explicit_residuals(H)
    st = structural_residuals(H)
    return {
        "explicit": dict(zip(EQUATION_NAMES, np.abs(ex).tolist())),
        "laplacian": float(abs(st[0])),
        "box": float(np.abs(st[1:]).max()),
        "hessian_scale": float(np.abs(H).max()),
    }


# ---------------------------------------------------------------------------
# Contour transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContourTransform:
    """``(1 / 2 pi i) \\oint h(omega(zeta), zeta) dzeta`` around roots of ``omega``.

    The contour circles the root nearest ``anchor`` at the base point of the
    input and, with ``antipodal``, also the root nearest its antipode
    ``-1/conj(root)`` (on real sections this makes the transform real).  Each
    circle has radius ``radius_fraction * min(gap, 1)``.
    """

    h: Callable
    anchor: complex = 0.0
    antipodal: bool = True
    radius_fraction: float = 0.3
    nodes: int = 96

    def contours(self, x0):
        r = np.roots(np.asarray(omega_coeffs(np.asarray(x0)), dtype=complex)[::-1])
        picks = [int(np.argmin(np.abs(r - self.anchor)))]
        if self.antipodal:
            anti = -1.0 / np.conj(r[picks[0]])
            k = int(np.argmin(np.abs(r - anti)))
            if k == picks[0]:
                raise DomainError("antipodal root coincides with the anchor root")
            picks.append(k)
        out = []
        for k in picks:
            others = np.delete(r, k)
            gap = np.abs(others - r[k]).min() if len(others) else 1.0
            out.append((r[k], self.radius_fraction * min(gap, 1.0)))
        return out

    def __call__(self, x):
        x0 = jets.value(x) if isinstance(x, jets.Jet) else np.asarray(x)
        co = omega_coeffs(x)
        total = 0
        for c, rad in self.contours(x0):
            theta = 2 * np.pi * np.arange(self.nodes) / self.nodes
            zeta = c + rad * np.exp(1j * theta)
            wts = rad * np.exp(1j * theta) / self.nodes
            om = co[0] + co[1] * zeta + co[2] * zeta**2 + co[3] * zeta**3 + co[4] * zeta**4
            vals = self.h(om, zeta)
            if isinstance(vals, jets.Jet):
                total = total + jets.einsum("i,i->", wts + 0j, vals)
            else:
                total = total + np.sum(wts * vals)
        return total


def reciprocal_residue(x, anchor: complex = 0.0, antipodal: bool = True) -> complex:
    """Residues of ``1 / omega`` at the same roots as :class:`ContourTransform`, in closed form."""
    co = np.asarray(omega_coeffs(np.asarray(x, dtype=complex)), dtype=complex)
    r = np.roots(co[::-1])
    picks = [r[np.argmin(np.abs(r - anchor))]]
    if antipodal:
        picks.append(r[np.argmin(np.abs(r + 1.0 / np.conj(picks[0])))])
    dco = np.polynomial.polynomial.polyder(co)
    return complex(sum(1.0 / np.polynomial.polynomial.polyval(root, dco) for root in picks))


def reciprocal_transform(anchor: complex = 0.0, antipodal: bool = True) -> ContourTransform:
    """``F = sum Res 1/omega`` over a root (and its antipode)."""
    return ContourTransform(lambda om, zeta: 1.0 / om, anchor, antipodal)


# ---------------------------------------------------------------------------
# Hyper-Kahler two-forms
# ---------------------------------------------------------------------------

def flat_sigma(F: Callable, x):
    """``Sigma^{AB}`` on ``M`` as an order-1 jet, built from ``dF`` with zero connection."""
    e = flat_coframe()
    E = spinforms.spinor_coframe(e)
    s2 = spinforms.sigma2(E)
    s6 = spinforms.sigma6(E)
    Fj = jets.jet_of(F, np.asarray(x, dtype=complex), 2)
    dF = Fj.d()
    Fs = spinforms.components_to_spinor(spinforms.coframe_components(e, dF))
    return spinforms.big_sigma(Fs, s2, s6), dF


def sigma_closedness(F: Callable, x) -> float:
    """``|d Sigma^{AB}|`` on ``M`` relative to ``|Sigma| |d(dF)|``-scale."""
    sig, dF = flat_sigma(F, x)
    dS = spinforms.d_at(sig, 2)
    scale = np.abs(sig.value).max() * max(1.0, np.abs(dF.gradient()).max() / np.abs(dF.value).max())
    return float(np.abs(dS).max() / scale)


def tangent_frame(dF) -> np.ndarray:
    """Columns span ``ker dF`` (complex)."""
    _, _, vh = np.linalg.svd(np.asarray(dF, dtype=complex)[None, :])
    return vh[1:].conj().T


def _four_form_scalar(a, b) -> complex:
    """``a ^ b`` for two-forms on a 4-space, as the coefficient of the volume."""
    return (a[0, 1] * b[2, 3] - a[0, 2] * b[1, 3] + a[0, 3] * b[1, 2]
            + a[2, 3] * b[0, 1] - a[1, 3] * b[0, 2] + a[1, 2] * b[0, 3])


def sigma_algebra_on_X(F: Callable, x) -> dict:
    """``Sigma^{(AB} ^ Sigma^{CD)}`` on the level set and the ratio of the
    nonzero products."""
    sig, dF = flat_sigma(F, x)
    T = tangent_frame(dF.value)
    S = np.einsum("ABxy,xi,yj->ABij", sig.value, T, T)
    w = np.zeros((2, 2, 2, 2), dtype=complex)
    for idx in np.ndindex(2, 2, 2, 2):
        w[idx] = _four_form_scalar(S[idx[0], idx[1]], S[idx[2], idx[3]])
    wsym = spinforms.symmetrize_axes(w, range(4))
    scale = abs(w[0, 0, 1, 1])
    return {
        "symmetric_part": float(np.abs(wsym).max() / scale),
        "ratio_0011_0101": complex(w[0, 0, 1, 1] / w[0, 1, 0, 1]),
    }


# ---------------------------------------------------------------------------
# Legendre transform
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Potential:
    """``H`` with ``F = dH/dy`` and its first derivatives ``(H_z, H_zb, H_y)``."""

    H: Callable
    grad: Callable  # x -> stacked (H_z, H_zb, H_tau, H_taub, H_y)


def contour_potential(h: Callable, h_omega: Callable, anchor: complex = 0.0,
                      antipodal: bool = True) -> Potential:
    """``H = \\oint h``; ``dH/dx_a = \\oint h_omega zeta^{k_a}`` with signs."""
    Hc = ContourTransform(h, anchor, antipodal)
    parts = [ContourTransform(lambda om, zeta, k=k, sg=sg: sg * zeta**k * h_omega(om, zeta), anchor, antipodal)
             for k, sg in zip(OMEGA_POWER, OMEGA_SIGN)]

    def grad(x):
        vals = [p(x) for p in parts]
        if any(isinstance(v, jets.Jet) for v in vals):
            return jets.stack(vals)
        return np.array(vals)

    return Potential(Hc, grad)


def reciprocal_potential(anchor: complex = 0.0, antipodal: bool = True) -> Potential:
    """``H = sum Res 1/omega``; then ``F = H_y = -sum Res zeta^2 / omega^2``."""
    return contour_potential(lambda om, zeta: 1.0 / om, lambda om, zeta: -1.0 / om**2, anchor, antipodal)


def quadratic_potential() -> Potential:
    """``H = z zb - tau taub - y^2/2``: solves the flat system and gives flat C^2."""
    def H(x):
        return x[IZ] * x[IZB] - x[ITAU] * x[ITAUB] - 0.5 * x[IY] * x[IY]

    def grad(x):
        return jets.stack([x[IZB], x[IZ], -x[ITAUB], -x[ITAU], -x[IY]]) if isinstance(x, jets.Jet) \
            else np.array([x[IZB], x[IZ], -x[ITAUB], -x[ITAU], -x[IY]])

    return Potential(H, grad)


def degenerate_potential() -> Potential:
    """``H = y^2 / 2``, ``F = y``: the Legendre transform in ``z`` does not exist."""
    def H(x):
        return 0.5 * x[IY] * x[IY]

    def grad(x):
        zero = 0.0 * x[IY]
        return jets.stack([zero, zero, zero, zero, x[IY]]) if isinstance(x, jets.Jet) \
            else np.array([0, 0, 0, 0, x[IY]], dtype=complex)

    return Potential(H, grad)


_UNKNOWN = [IZ, IZB, IY]


def _assemble(X, w):
    """``(z, zb, tau, taub, y)`` from ``X = (tau, taub, u, ub)`` and ``w = (z, zb, y)``."""
    return [w[0], w[1], X[0], X[1], w[2]]


def _as_vector(items):
    if any(isinstance(v, jets.Jet) for v in items):
        return jets.stack(items)
    return np.array(items, dtype=complex)


def _equations(pot: Potential, X, w):
    g = pot.grad(_as_vector(_assemble(X, w)))
    return _as_vector([g[IZ] - X[2], g[IZB] - X[3], g[IY]])


def _jacobian_w(pot: Potential, X0, w0) -> np.ndarray:
    wj = jets.get_space(3, 1).variables(np.asarray(w0, dtype=complex))
    E = _equations(pot, [complex(v) for v in X0], [wj[0], wj[1], wj[2]])
    return np.asarray(E.gradient())


def legendre_solve(pot: Potential, X, w0, tol: float = 1e-13, max_iter: int = 50,
                   fold_tol: float = 1e-10):
    """Solve ``H_z = u, H_zb = ub, H_y = 0`` for ``w = (z, zb, y)`` by Newton."""
    X = np.asarray(X, dtype=complex)
    w = np.asarray(w0, dtype=complex).copy()
    for _ in range(max_iter):
        J = _jacobian_w(pot, X, w)
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[-1] <= fold_tol * max(sv[0], 1.0):
            raise FoldError(f"Hessian in (z, zb, y) is singular (condition {sv[0] / max(sv[-1], 1e-300):.3g})")
        r = np.asarray(_equations(pot, X, w), dtype=complex)
        step = np.linalg.solve(J, r)
        w = w - step
        if np.abs(step).max() <= tol * max(1.0, np.abs(w).max()):
            break
    return w, J


def legendre_jets(pot: Potential, X, w0, order: int):
    """Jets of ``w(X)`` and ``K(X) = H - z u - zb ub`` at ``X``."""
    w, J = legendre_solve(pot, X, w0)
    Jinv = np.linalg.inv(J)
    Xj = jets.get_space(4, order).variables(np.asarray(X, dtype=complex))
    wj = Xj.space.constant(w.astype(complex)) + 0.0 * Xj[0]
    for _ in range(order + 1):
        E = _equations(pot, [Xj[i] for i in range(4)], [wj[i] for i in range(3)])
        wj = wj - jets.einsum("ij,j->i", Jinv + 0j, E)
    full = _as_vector(_assemble([Xj[i] for i in range(4)], [wj[i] for i in range(3)]))
    K = pot.H(full) - wj[0] * Xj[2] - wj[1] * Xj[3]
    return w, wj, K


def kahler_metric_from_K(K: jets.Jet) -> jets.Jet:
    """Symmetric metric ``K_{i jbar}`` (holomorphic ``tau, u``; antiholomorphic ``taub, ub``)."""
    hol, anti = (0, 2), (1, 3)
    d1 = K.d()  # order - 1
    d2 = d1.d()  # (4, 4)
    z = 0.0 * d2[0, 0]
    rows = [[z] * 4 for _ in range(4)]
    for i in hol:
        for j in anti:
            rows[i][j] = d2[i, j] * 0.5
            rows[j][i] = d2[i, j] * 0.5
    return jets.stack([jets.stack(r) for r in rows])


def monge_ampere(K: jets.Jet) -> complex:
    """``K_{tau taub} K_{u ub} - K_{tau ub} K_{u taub}``."""
    h = K.hessian()
    return complex(h[0, 1] * h[2, 3] - h[0, 3] * h[2, 1])


def monge_ampere_tau_pairing(pot: Potential, X, w0) -> complex:
    """Same determinant for ``K' = H - tau u - taub ub`` (coordinates as above)."""
    w, wj, _ = legendre_jets(pot, X, w0, 2)
    Xj = wj.space.variables(np.asarray(X, dtype=complex))
    full = _as_vector(_assemble([Xj[i] for i in range(4)], [wj[i] for i in range(3)]))
    K2 = pot.H(full) - Xj[0] * Xj[2] - Xj[1] * Xj[3]
    return monge_ampere(K2)


def legendre_ma_check(pot: Potential, X, w0, curvature: bool = True) -> dict:
    """Monge-Ampere determinant and Ricci of the metric ``K_{i jbar}`` at ``X``."""
    order = 4 if curvature else 2
    try:
        w, wj, K = legendre_jets(pot, X, w0, order)
    except FoldError as exc:
        return {"fold": True, "message": str(exc)}
    J = _jacobian_w(pot, X, w)
    out = {"fold": False, "w": w, "hessian_condition": float(np.linalg.cond(J)),
           "monge_ampere": monge_ampere(K.truncate(2))}
    if curvature:
        g = kahler_metric_from_K(K)
        c = tensorlab.curvature_from_derivatives(g.value, g.gradient(), g.hessian())
        out["ricci"] = float(np.abs(c.ricci).max() / max(np.abs(c.riemann).max(), 1e-300))
        out["riemann"] = float(np.abs(c.riemann).max())
    return out


def legendre_point(pot: Potential, x) -> tuple:
    """Legendre coordinates ``X = (tau, taub, u, ub)`` and ``w = (z, zb, y)`` of a
    point ``x`` with ``H_y(x) = 0``."""
    x = np.asarray(x, dtype=complex)
    g = np.asarray(pot.grad(x))
    return np.array([x[ITAU], x[ITAUB], g[IZ], g[IZB]]), x[_UNKNOWN]


def level_point(pot: Potential, x0, max_iter: int = 50) -> np.ndarray:
    """Move ``y`` until ``H_y = 0``."""
    x = np.asarray(x0, dtype=complex).copy()
    for _ in range(max_iter):
        gj = jets.jet_of(lambda v: pot.grad(v)[IY], x, 1)
        d = gj.gradient()[IY]
        step = gj.value / d
        x[IY] -= step
        if abs(step) < 1e-14 * max(1.0, abs(x[IY])):
            break
    return x


def certify_legendre(n_points: int = 10, seed: int = 0, curvature_points: int | None = None,
                     max_tries: int = 100) -> dict:
    """End-to-end: residue potential, Legendre transform, Monge-Ampere, Ricci.

    Sample points where the Legendre change of variables folds are skipped and
    counted.
    """
    rng = np.random.default_rng(seed)
    pot = reciprocal_potential()
    F = ContourTransform(lambda om, zeta: -zeta**2 / om**2)
    ma, ric, pde, closed, alg = [], [], [], [], []
    folds = 0
    curvature_points = n_points if curvature_points is None else curvature_points
    for _ in range(max_tries):
        if len(ma) == n_points:
            break
        try:
            x = level_point(pot, random_real_point(rng, 0.7).coords())
        except DomainError:
            folds += 1
            continue
        X, w = legendre_point(pot, x)
        res = legendre_ma_check(pot, X, w, curvature=len(ma) < curvature_points)
        if res["fold"]:
            folds += 1
            continue
        ma.append(abs(res["monge_ampere"] - 1.0))
        if "ricci" in res:
            ric.append(res["ricci"])
        rr = flat_range_residual(F, x)
        pde.append(max(rr["explicit"].values()) / rr["hessian_scale"])
        closed.append(sigma_closedness(F, x))
        alg.append(sigma_algebra_on_X(F, x)["symmetric_part"])
    if len(ma) < n_points:
        raise DomainError("too many fold points")
    rows = {"monge_ampere": ma, "ricci": ric, "flat_system": pde, "sigma_closed": closed,
            "sigma_algebra": alg}
    out = {"n_points": n_points, "folds_skipped": folds, "mean": {}}
    for k, v in rows.items():
        out[k] = float(max(v)) if v else None
        out["mean"][k] = float(np.mean(v)) if v else None
    return out
