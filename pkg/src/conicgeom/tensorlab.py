"""Pointwise tensor calculus on coordinate patches.

Fields are Python callables taking a coordinate vector.  When called with a
:class:`~conicgeom.jets.Jet` of coordinates they must return jets, which is
how exact derivatives are obtained; plain ``numpy`` arithmetic plus the
helpers in :mod:`conicgeom.jets` is enough for that.

Index conventions
-----------------
* Derivative axes are appended last: ``dg[a, b, c] = d_c g_ab``.
* ``riemann[a, b, c, d] = R^a_{bcd}`` with
  ``R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb} + Gamma^a_{ce} Gamma^e_{db}
  - Gamma^a_{de} Gamma^e_{cb}``, Ricci ``R_{bd} = R^a_{bad}``.  The round unit
  sphere has scalar curvature ``+2``.
* Differential forms are totally antisymmetric component arrays with
  ``omega = (1/k!) omega_{i..j} dx^i ^ .. ^ dx^j``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import factorial
from typing import Callable

import numpy as np

from . import jets
from .quantics import DomainError

MAX_CONDITION = 1e12


# ---------------------------------------------------------------------------
# Field wrappers
# ---------------------------------------------------------------------------

@dataclass
class ScalarField:
    func: Callable
    dim: int

    def __call__(self, x):
        return self.func(x)

    def jet(self, x, order: int = 2) -> jets.Jet:
        return jets.jet_of(self.func, x, order)


@dataclass
class MetricField:
    """Symmetric rank-2 tensor field ``x -> g_ab(x)``."""

    func: Callable
    dim: int

    def __call__(self, x):
        return self.func(x)

    def derivatives(self, x, order: int = 2):
        """``(g, dg, ddg)`` at ``x``: values, first and second partials."""
        J = jets.jet_of(self.func, x, order)
        out = [J.value]
        if order >= 1:
            out.append(J.gradient())
        if order >= 2:
            out.append(J.hessian())
        return tuple(out)


@dataclass
class FormField:
    """Differential ``degree``-form given by antisymmetric components."""

    func: Callable
    dim: int
    degree: int

    def __call__(self, x):
        return self.func(x)


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------

def christoffel_from(g, dg):
    """``Gamma[a, b, c] = Gamma^a_{bc}``."""
    ginv = np.linalg.inv(g)
    lower = 0.5 * (
        np.einsum("dcb->dbc", dg) + np.einsum("dbc->dbc", dg) - np.einsum("bcd->dbc", dg)
    )
    return np.einsum("ad,dbc->abc", ginv, lower)


def _christoffel_derivative(g, dg, ddg):
    """``dGamma[a, b, c, e] = d_e Gamma^a_{bc}``."""
    ginv = np.linalg.inv(g)
    # d_e g^{ad} = -g^{ap} d_e g_pq g^{qd}
    dginv = -np.einsum("ap,pqe,qd->ade", ginv, dg, ginv)
    lower = 0.5 * (
        np.einsum("dcb->dbc", dg) + np.einsum("dbc->dbc", dg) - np.einsum("bcd->dbc", dg)
    )
    dlower = 0.5 * (
        np.einsum("dcbe->dbce", ddg) + np.einsum("dbce->dbce", ddg) - np.einsum("bcde->dbce", ddg)
    )
    return np.einsum("ade,dbc->abce", dginv, lower) + np.einsum("ad,dbce->abce", ginv, dlower)


@dataclass
class CurvaturePackage:
    metric: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    weyl: np.ndarray | None

    @property
    def weyl_down(self):
        """``C_{abcd}`` with the first index lowered."""
        return np.einsum("ae,ebcd->abcd", self.metric, self.weyl)

    @property
    def riemann_down(self):
        return np.einsum("ae,ebcd->abcd", self.metric, self.riemann)


def curvature_from_derivatives(g, dg, ddg) -> CurvaturePackage:
    g = np.asarray(g)
    Gam = christoffel_from(g, dg)
    dGam = _christoffel_derivative(g, dg, ddg)
    # R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}
    riem = (
        np.einsum("adbc->abcd", dGam)
        - np.einsum("acbd->abcd", dGam)
        + np.einsum("ace,edb->abcd", Gam, Gam)
        - np.einsum("ade,ecb->abcd", Gam, Gam)
    )
    ric = np.einsum("abad->bd", riem)
    ginv = np.linalg.inv(g)
    scal = np.einsum("bd,bd->", ginv, ric)
    n = g.shape[0]
    weyl = None
    if n >= 3:
        # Schouten-based decomposition: C = Rm - P o g
        P = (ric - scal / (2 * (n - 1)) * g) / (n - 2)
        Rdown = np.einsum("ae,ebcd->abcd", g, riem)
        kn = (
            np.einsum("ac,bd->abcd", g, P)
            + np.einsum("bd,ac->abcd", g, P)
            - np.einsum("ad,bc->abcd", g, P)
            - np.einsum("bc,ad->abcd", g, P)
        )
        Cdown = Rdown - kn
        weyl = np.einsum("ae,ebcd->abcd", ginv, Cdown)
    return CurvaturePackage(g, Gam, riem, ric, scal, weyl)


def curvature(metric, x) -> CurvaturePackage:
    """Curvature of a :class:`MetricField` (or plain callable) at ``x``."""
    if not isinstance(metric, MetricField):
        metric = MetricField(metric, len(x))
    g, dg, ddg = metric.derivatives(x, 2)
    if np.iscomplexobj(g) and np.allclose(np.imag(g), 0):
        g, dg, ddg = np.real(g), np.real(dg), np.real(ddg)
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise DomainError(f"metric is degenerate at the point (condition number {cond:.3e})")
    return curvature_from_derivatives(g, dg, ddg)


# ---------------------------------------------------------------------------
# Volume form, Hodge star, Weyl split
# ---------------------------------------------------------------------------

def levi_civita_symbol(n: int) -> np.ndarray:
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        eps[perm] = (-1) ** inv
    return eps


def volume_form(g, orientation: int = 1) -> np.ndarray:
    """``eps_{a..d} = orientation * sqrt|det g| [a..d]``."""
    g = np.asarray(g)
    return orientation * np.sqrt(abs(np.linalg.det(g))) * levi_civita_symbol(g.shape[0])


def hodge_star(omega, g, orientation: int = 1) -> np.ndarray:
    """``(*omega)_{j..} = (1/k!) omega^{i..} eps_{i.. j..}``."""
    omega = np.asarray(omega)
    g = np.asarray(g)
    n = g.shape[0]
    k = omega.ndim
    ginv = np.linalg.inv(g)
    up = omega
    for ax in range(k):
        up = np.moveaxis(np.tensordot(ginv, up, axes=([1], [ax])), 0, ax)
    eps = volume_form(g, orientation)
    return np.tensordot(up, eps, axes=(list(range(k)), list(range(k)))) / factorial(k)


def two_form_norm2(omega, g) -> float:
    """``(1/2) omega_{ab} omega^{ab}``: equals 1 for an orthonormal ``e1 ^ e2``."""
    ginv = np.linalg.inv(g)
    return 0.5 * np.einsum("ab,ac,bd,cd->", omega, ginv, ginv, np.conj(omega)).real


def weyl_split(weyl_down, g, orientation: int = 1):
    """Self-dual / anti-self-dual parts ``(C+, C-)`` of a 4D Weyl tensor.

    ``C_{abcd}`` is treated as a map on 2-forms acting on its first pair;
    ``C± = (C ± *C) / 2`` with ``(*C)_{abcd} = (1/2) eps_ab^{ef} C_{efcd}``.
    """
    g = np.asarray(g)
    if g.shape != (4, 4):
        raise ValueError("the Weyl split needs a four-dimensional metric")
    ginv = np.linalg.inv(g)
    eps = volume_form(g, orientation)
    eps_mixed = np.einsum("abgh,ge,hf->abef", eps, ginv, ginv)
    starC = 0.5 * np.einsum("abef,efcd->abcd", eps_mixed, weyl_down)
    return 0.5 * (weyl_down + starC), 0.5 * (weyl_down - starC)


def weyl_split_norms(metric, x, orientation: int = 1):
    """Norms ``(|C+|, |C-|)`` of the Weyl tensor of a 4D metric field at ``x``."""
    pkg = curvature(metric, x)
    cp, cm = weyl_split(pkg.weyl_down, pkg.metric, orientation)
    return tensor_norm(cp, pkg.metric), tensor_norm(cm, pkg.metric)


def tensor_norm(T, g) -> float:
    """``sqrt(|T_{a..} T^{a..}|)`` for a covariant tensor."""
    ginv = np.linalg.inv(g)
    up = np.asarray(T)
    for ax in range(up.ndim):
        up = np.moveaxis(np.tensordot(ginv, up, axes=([1], [ax])), 0, ax)
    return float(np.sqrt(abs(np.sum(np.asarray(T) * np.conj(up)))))


# ---------------------------------------------------------------------------
# Forms and Lie derivatives
# ---------------------------------------------------------------------------

def _antisymmetrize_last(T, k):
    """Alternating sum over the last ``k`` axes (no 1/k! factor)."""
    n = T.ndim
    lead = n - k
    total = np.zeros_like(T)
    for perm in itertools.permutations(range(k)):
        inv = sum(1 for i in range(k) for j in range(i + 1, k) if perm[i] > perm[j])
        total = total + (-1) ** inv * np.transpose(T, tuple(range(lead)) + tuple(lead + p for p in perm))
    return total


def wedge(alpha, beta) -> np.ndarray:
    """Components of ``alpha ^ beta`` (``(a ^ b)_{ij} = a_i b_j - a_j b_i`` for 1-forms)."""
    alpha, beta = np.asarray(alpha), np.asarray(beta)
    p, q = alpha.ndim, beta.ndim
    prod = np.multiply.outer(alpha, beta)
    return _antisymmetrize_last(prod, p + q) / (factorial(p) * factorial(q))


def exterior_d_at(form_jet: jets.Jet) -> np.ndarray:
    """``d omega`` at the base point of a jet of antisymmetric components."""
    grad = np.moveaxis(form_jet.gradient(), -1, 0)  # d_i omega_{j..}
    k = grad.ndim - 1
    return _antisymmetrize_last(grad, k + 1) / factorial(k)


def exterior_d(form, x, order: int = 1):
    """Exterior derivative of a :class:`FormField` (or callable) at ``x``."""
    func = form.func if isinstance(form, FormField) else form
    return exterior_d_at(jets.jet_of(func, x, max(order, 1)))


def exterior_d_jet(form_jet: jets.Jet) -> jets.Jet:
    """``d omega`` as a jet one order lower."""
    k = form_jet.ndim
    n = form_jet.space.nvars
    grad = jets.stack([form_jet.partial(i) for i in range(n)])
    total = None
    for perm in itertools.permutations(range(k + 1)):
        inv = sum(1 for i in range(k + 1) for j in range(i + 1, k + 1) if perm[i] > perm[j])
        term = grad.transpose(*perm) * float((-1) ** inv)
        total = term if total is None else total + term
    return total / float(factorial(k))


def lie_bracket(X, Y, x) -> np.ndarray:
    """``[X, Y]^a = X^b d_b Y^a - Y^b d_b X^a`` for vector-field callables."""
    JX = jets.jet_of(X, x, 1)
    JY = jets.jet_of(Y, x, 1)
    X0, Y0 = JX.value, JY.value
    return np.einsum("b,ab->a", X0, JY.gradient()) - np.einsum("b,ab->a", Y0, JX.gradient())


def lie_derivative(X, T, x) -> np.ndarray:
    """Lie derivative of a covariant tensor field ``T`` along ``X`` at ``x``.

    ``(L_X T)_{a..} = X^c d_c T_{a..} + sum_slots T_{..c..} d_slot X^c``.
    """
    JX = jets.jet_of(X, x, 1)
    JT = jets.jet_of(T, x, 1)
    X0, dX = JX.value, JX.gradient()  # dX[c, a] = d_a X^c
    T0, dT = JT.value, JT.gradient()
    out = np.tensordot(dT, X0, axes=([-1], [0]))
    for slot in range(T0.ndim):
        contrib = np.tensordot(T0, dX, axes=([slot], [0]))  # moves new index last
        out = out + np.moveaxis(contrib, -1, slot)
    return out


def nabla_two_form(g, dg, omega, domega) -> np.ndarray:
    """``(nabla_a omega)_{bc}`` from values and first derivatives (last axis)."""
    Gam = christoffel_from(g, dg)
    d = np.moveaxis(domega, -1, 0)
    return d - np.einsum("dab,dc->abc", Gam, omega) - np.einsum("dac,bd->abc", Gam, omega)


def cky_residual(g, dg, omega, domega) -> np.ndarray:
    """Conformal Killing-Yano defect of a 2-form in four dimensions.

    ``nabla_a w_bc - (1/3)(nabla_a w_bc + nabla_b w_ca + nabla_c w_ab)
    - (1/3)(g_ab xi_c - g_ac xi_b)`` with ``xi_c = nabla^d w_dc``.
    """
    nab = nabla_two_form(g, dg, omega, domega)
    ginv = np.linalg.inv(g)
    xi = np.einsum("ad,adc->c", ginv, nab)
    cyc = nab + np.einsum("bca->abc", nab) + np.einsum("cab->abc", nab)
    trace = np.einsum("ab,c->abc", g, xi) - np.einsum("ac,b->abc", g, xi)
    return nab - cyc / 3.0 - trace / 3.0


# ---------------------------------------------------------------------------
# Random sampling
# ---------------------------------------------------------------------------

def sample_points(sampler: Callable, n: int, seed: int, valid: Callable | None = None,
                  max_tries: int = 1000):
    """Draw ``n`` points from ``sampler(rng)``; reject draws failing ``valid``.

    Rejected draws are replaced by fresh ones from the same seeded stream, so
    results are reproducible for a given seed.
    """
    rng = np.random.default_rng(seed)
    pts = []
    tries = 0
    while len(pts) < n:
        tries += 1
        if tries > max_tries * max(n, 1):
            raise RuntimeError("could not draw enough valid sample points")
        p = sampler(rng)
        if valid is None or valid(p):
            pts.append(p)
    return pts
