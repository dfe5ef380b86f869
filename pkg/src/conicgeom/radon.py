"""Integral transform on conics and the second-order system cutting out its range.

A function ``F`` on the space of conics lies in the range of the contour
transform exactly when

    Delta_g F = -F / 12,        G_a^{bc} nabla_b nabla_c F = (1/24) d_a F.

Both operators are available through two independent routes: the generic
tensor calculus (Christoffel symbols from jets of ``g``) and closed-form
coordinate expansions.  The coordinate expansion of the second operator is
twelve times the tensor residual, component by component.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import conic_space as cs
from . import jets, tensorlab
from .quantics import DomainError

EIGEN_LAPLACE = -1.0 / 12.0
EIGEN_BOX = 1.0 / 24.0
SCALAR_CURVATURE = -15.0 / 16.0


class ConsistencyError(RuntimeError):
    """Two independent code paths disagree."""


class BranchTrackingError(RuntimeError):
    """Poles collided while tracking the integration contour."""


def _derivs(F, x, order=2):
    J = jets.jet_of(F, np.asarray(x, dtype=float), order)
    return J.value, J.gradient(), J.hessian()


def _hessian_cov(F, x, metric=cs.metric):
    f, df, ddf = _derivs(F, x)
    g, dg = tensorlab.MetricField(metric, len(x)).derivatives(np.asarray(x, dtype=float), 1)
    Gam = tensorlab.christoffel_from(g, dg)
    return f, df, ddf - np.einsum("cab,c->ab", Gam, df), g


# ---------------------------------------------------------------------------
# Laplacian
# ---------------------------------------------------------------------------

def laplacian_generic(F, x, metric=cs.metric) -> float:
    """``g^{ab} nabla_a nabla_b F`` from the Levi-Civita connection."""
    _, _, nn, g = _hessian_cov(F, x, metric)
    return float(np.real(np.einsum("ab,ab->", np.linalg.inv(g), nn)))


def laplacian_explicit(F, x) -> float:
    a, b, p, q, r = np.asarray(x, dtype=float)
    _, d, H = _derivs(F, x)
    A, B, P, Q, R = range(5)
    first = (H[A, A] + H[B, B] - H[A, B] + 3 * d[A]) / 24.0
    second = np.exp(2 * b - 2 * a) / 8.0 * (
        p * p * H[Q, Q] + H[R, R] + 2 * p * H[R, Q]
        + np.exp(-2 * a - 4 * b) * H[Q, Q] + np.exp(-6 * b) * H[P, P]
    )
    return float(np.real(first + second))


def laplacian(F, x, rtol: float = 1e-8) -> float:
    """Laplacian by both routes; raises if they disagree."""
    gen = laplacian_generic(F, x)
    exp = laplacian_explicit(F, x)
    scale = 1.0 + abs(gen) + abs(_derivs(F, x)[0])
    if abs(gen - exp) > rtol * scale:
        raise ConsistencyError(f"Laplacian routes disagree: {gen} vs {exp}")
    return exp


# ---------------------------------------------------------------------------
# Box operator
# ---------------------------------------------------------------------------

def box_generic(F, x) -> np.ndarray:
    """Coordinate components of ``G_a^{bc} nabla_b nabla_c F``."""
    _, _, nn, g = _hessian_cov(F, x)
    gi = np.linalg.inv(g)
    G = cs.cubic_form(np.asarray(x, dtype=float))
    return np.real(np.einsum("ade,db,ec,bc->a", G, gi, gi, nn))


def box_residual_generic(F, x) -> np.ndarray:
    """``G_a^{bc} nabla_b nabla_c F - d_a F / 24``."""
    _, df, _ = _derivs(F, x)
    return box_generic(F, x) - np.real(df) * EIGEN_BOX


def box_residual_explicit(F, x) -> np.ndarray:
    """Closed-form coordinate expansion; equals 12 x :func:`box_residual_generic`."""
    a, b, p, q, r = np.asarray(x, dtype=float)
    _, d, H = _derivs(F, x)
    A, B, P, Q, R = range(5)
    e1 = np.exp(2 * b - 2 * a)
    e2 = np.exp(-2 * a - 4 * b)
    e3 = np.exp(-4 * a - 2 * b)
    comp_a = (-3 * e1 * p * p * H[Q, Q] - 6 * e1 * p * H[R, Q] + 3 * e2 * H[P, P]
              - 3 * e1 * H[R, R] + 2 * H[A, B] - H[A, A] + 3 * d[B] - 2 * d[A])
    comp_b = (-3 * e1 * p * p * H[Q, Q] - 6 * e1 * p * H[R, Q] + 3 * e3 * H[Q, Q]
              - 3 * e1 * H[R, R] - H[B, B] + 2 * H[A, B] + d[B])
    comp_p = -(3 * e1 * p * H[Q, Q] + 3 * e1 * H[R, Q] + H[B, P] - 2 * H[P, A] - d[P])
    comp_q = -(3 * p * H[Q, P] + H[Q, A] - 2 * H[Q, B] + 3 * H[R, P] + 2 * d[Q])
    comp_r = -(-3 * (p * p - e2) * H[Q, P] + 3 * p * H[Q, B] - 3 * p * H[R, P]
               + H[R, B] + H[R, A] + 2 * d[R])
    return np.real(np.array([comp_a, comp_b, comp_p, comp_q, comp_r]))


EXPLICIT_BOX_FACTOR = 12.0


def box_op(F, x, rtol: float = 1e-8) -> np.ndarray:
    """``G_a^{bc} nabla_b nabla_c F`` after cross-checking both routes."""
    gen = box_residual_generic(F, x)
    exp = box_residual_explicit(F, x) / EXPLICIT_BOX_FACTOR
    _, df, H = _derivs(F, x)
    scale = 1.0 + np.abs(H).max() + np.abs(df).max()
    if np.abs(gen - exp).max() > rtol * scale:
        raise ConsistencyError(f"box routes disagree by {np.abs(gen - exp).max():.3e}")
    return gen + np.real(df) * EIGEN_BOX


@dataclass
class RangeResiduals:
    laplace: float
    box: float
    scale: float

    @property
    def worst(self) -> float:
        return max(self.laplace, self.box)


def range_residuals(F, x) -> RangeResiduals:
    """Residuals of both range equations at one point (relative to 1 + |terms|)."""
    f, df, H = _derivs(F, x)
    scale = 1.0 + abs(f) + np.abs(df).max() + np.abs(H).max()
    lap = laplacian(F, x)
    box = box_op(F, x) - np.real(df) * EIGEN_BOX
    return RangeResiduals(abs(lap - EIGEN_LAPLACE * np.real(f)) / scale,
                          float(np.abs(box).max()) / scale, float(scale))


def certify_range(F, points) -> dict:
    worst_l = worst_b = 0.0
    for x in points:
        r = range_residuals(F, x)
        worst_l = max(worst_l, r.laplace)
        worst_b = max(worst_b, r.box)
    return {"laplace": worst_l, "box": worst_b, "n_points": len(points)}


# ---------------------------------------------------------------------------
# Eigenvalue relation
# ---------------------------------------------------------------------------

def predicted_mu(kappa: float, R: float) -> float:
    """Laplace eigenvalue forced by the box equation with constant ``kappa``."""
    return 6.0 * kappa**2 + R / 10.0


def mu_kappa_check(F, kappa: float, points, R: float = SCALAR_CURVATURE,
                   tol: float = 1e-7) -> dict:
    """Check ``Delta F = (6 kappa^2 + R/10) F`` given ``box F = kappa dF``.

    A failing premise is reported, not raised.
    """
    mu = predicted_mu(kappa, R)
    premise, measured = [], []
    for x in points:
        f, df, H = _derivs(F, x)
        scale = 1.0 + abs(f) + np.abs(df).max() + np.abs(H).max()
        premise.append(float(np.abs(box_generic(F, x) - kappa * np.real(df)).max() / scale))
        measured.append(float(abs(laplacian_generic(F, x) - mu * np.real(f)) / scale))
    ok_premise = max(premise) <= tol
    return {
        "kappa": kappa, "R": R, "mu": mu,
        "premise_residual": max(premise),
        "premise_holds": ok_premise,
        "laplace_residual": max(measured),
        "passed": ok_premise and max(measured) <= tol,
    }


# ---------------------------------------------------------------------------
# Closed-form families
# ---------------------------------------------------------------------------

@dataclass
class RangeCandidate:
    func: Callable
    provenance: str
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.func(x)


class ZeroFunctionError(ValueError):
    pass


def family_F1(gammas, allow_zero: bool = False) -> RangeCandidate:
    """Closed-form eight-parameter family; all-zero parameters are rejected."""
    gammas = [float(v) for v in gammas]
    if len(gammas) != 8:
        raise ValueError("family_F1 takes eight parameters")
    if not allow_zero and not any(gammas):
        raise ZeroFunctionError("zero function excluded")
    g1, g2, g3, g4, g5, g6, g7, g8 = gammas

    def F(x):
        a, b, p, q, r = (x[i] for i in range(5))
        return ((g1 + g2 * p + g3 * r + (g4 + g5 * p) * (a + 2 * b)) * jets.exp(-a - b)
                + (g6 + g7 * q + g8 * r) * jets.exp(-2 * a))

    return RangeCandidate(F, "closed-form family", {"gammas": [g1, g2, g3, g4, g5, g6, g7, g8]})


def u_coordinate(x):
    a, b, p = x[0], x[1], x[2]
    return jets.sqrt(p * p * jets.exp(2 * (b - a)) + jets.exp(-2 * (2 * a + b)))


def check_harmonic(K: Callable, samples, tol: float = 1e-8) -> float:
    """Largest ``|K_uu + K_qq|`` (relative) over sample ``(u, q)`` points."""
    worst = 0.0
    for uq in samples:
        J = jets.jet_of(lambda v: K(v[0], v[1]), np.asarray(uq, dtype=float), 2)
        H = J.hessian()
        worst = max(worst, abs(H[0, 0] + H[1, 1]) / (1.0 + np.abs(H).max()))
    return float(worst)


def family_harmonic(K: Callable, gammas_F1=(0, 0, 0, 0, 0, 0, 0, 0), seed: int = 0,
                    tol: float = 1e-8) -> RangeCandidate:
    """``F = e^{-2a} K(u, q) / u + F1(a, b, p)`` for a harmonic ``K(u, q)``.

    Raises ``ValueError`` if ``K`` is not harmonic or the ``F1`` part depends on ``q, r``.
    """
    gam = np.asarray(gammas_F1, dtype=float)
    if gam[2] != 0 or gam[6] != 0 or gam[7] != 0:
        raise ValueError("the F1 part must not depend on q or r")
    rng = np.random.default_rng(seed)
    samples = [(rng.uniform(0.2, 3.0), rng.uniform(-2.0, 2.0)) for _ in range(10)]
    if check_harmonic(K, samples) > tol:
        raise ValueError("K(u, q) is not harmonic")
    F1 = family_F1(gam, allow_zero=True)

    def F(x):
        u = u_coordinate(x)
        return jets.exp(-2 * x[0]) * K(u, x[3]) / u + F1(x)

    return RangeCandidate(F, "harmonic family", {"gammas": list(gam)})


def trace_conic(x):
    """``Tr A``: an SO(3)-invariant function that is not in the range."""
    A = cs.conic_matrix(x)
    return A[0, 0] + A[1, 1] + A[2, 2]


def sl3_pullback(F_of_A: Callable, N) -> RangeCandidate:
    """``m -> F(N A(m) N^T)`` for a function of the conic matrix."""
    N = np.asarray(N, dtype=float)

    def F(x):
        A = cs.conic_matrix(x)
        Ahat = jets.einsum("ij,jk->ik", N, jets.einsum("ij,kj->ik", A, N)) if isinstance(A, jets.Jet) \
            else N @ A @ N.T
        return F_of_A(Ahat)

    return RangeCandidate(F, "SL(3) pullback")


def r_exp_minus_2a(A):
    """``A_23 / A_33^2``, equal to ``r e^{-2a}``."""
    return A[1, 2] / (A[2, 2] * A[2, 2])


def random_sl3(rng, spread: float = 0.4) -> np.ndarray:
    M = rng.normal(scale=spread, size=(3, 3))
    N = np.eye(3) + M
    d = np.linalg.det(N)
    if d < 0:
        N[0] *= -1
        d = -d
    return N / np.cbrt(d)


# ---------------------------------------------------------------------------
# Rational sections and residue transform
# ---------------------------------------------------------------------------

def _poly_eval(terms: dict, Z):
    out = None
    for (i, j, k), c in terms.items():
        term = c * Z[0] ** i * Z[1] ** j * Z[2] ** k
        out = term if out is None else out + term
    return out


def _poly_degree(terms: dict) -> int:
    degs = {sum(e) for e in terms}
    if len(degs) != 1:
        raise ValueError("polynomial in Z must be homogeneous")
    return degs.pop()


@dataclass
class RationalSection:
    """``f = N(Z) / D(Z)`` from dictionaries ``{(i, j, k): coeff}`` of monomials."""

    numerator: dict
    denominator: dict

    def __post_init__(self):
        if _poly_degree(self.numerator) - _poly_degree(self.denominator) != -1:
            raise ValueError("the section must be homogeneous of degree -1")

    def __call__(self, Z):
        return _poly_eval(self.numerator, Z) / _poly_eval(self.denominator, Z)

    def homogeneity_residual(self, rng, n: int = 5) -> float:
        worst = 0.0
        for _ in range(n):
            Z = rng.normal(size=3) + 1j * rng.normal(size=3)
            lam = rng.normal() + 1j * rng.normal()
            lhs = self(lam * Z)
            rhs = self(Z) / lam
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
        return worst

    def pole_polynomial(self, x) -> np.ndarray:
        """Coefficients (increasing powers of lam) of ``D(Z(1, lam))``."""
        C = cs.parametrize_coeffs(np.asarray(x, dtype=float))
        P = np.polynomial.polynomial
        total = None
        for (i, j, k), c in self.denominator.items():
            term = np.array([c], dtype=complex)
            for row, e in zip(C, (i, j, k)):
                for _ in range(e):
                    term = P.polymul(term, row)
            total = term if total is None else P.polyadd(total, term)
        return np.trim_zeros(total, "b")

    def poles(self, x) -> np.ndarray:
        return np.polynomial.polynomial.polyroots(self.pole_polynomial(x))


def section(expr: str) -> RationalSection:
    """Parse ``"Z2/(Z1*Z3)"``-style monomial quotients into a section."""
    def mono(s):
        e = [0, 0, 0]
        s = s.strip().strip("()")
        if s in ("1", ""):
            return tuple(e)
        for factor in s.split("*"):
            factor = factor.strip().strip("()")
            base, _, power = factor.partition("^")
            e[int(base.strip()[1]) - 1] += int(power) if power else 1
        return tuple(e)

    num, _, den = expr.partition("/")
    return RationalSection({mono(num): 1.0}, {mono(den): 1.0})


@dataclass
class PoleSpec:
    """Contour around the pole starting at ``lam0`` when ``m = base``."""

    lam0: complex
    base: tuple = (0.0, 0.0, 0.0, 0.0, 0.0)
    steps: int = 40


def track_pole(f: RationalSection, spec: PoleSpec, x, collide: float = 1e-6):
    """Follow the selected pole along the segment from ``spec.base`` to ``x``.

    Returns ``(lam, distance to nearest other pole)``.
    """
    base = np.asarray(spec.base, dtype=float)
    x = np.asarray(x, dtype=float)
    lam = complex(spec.lam0)
    poles = f.poles(base)
    if np.min(np.abs(poles - lam)) > 1e-6 * (1 + abs(lam)):
        raise BranchTrackingError("lam0 is not a pole at the base point")
    for k in range(1, spec.steps + 1):
        poles = f.poles(base + (x - base) * k / spec.steps)
        dist = np.abs(poles - lam)
        lam = complex(poles[np.argmin(dist)])
    others = poles[np.abs(poles - lam) > collide * (1 + abs(lam))]
    gap = float(np.min(np.abs(others - lam))) if len(others) else np.inf
    if gap < 1e-6:
        raise BranchTrackingError("tracked pole collides with another pole")
    return lam, gap


def contour_integral(f: RationalSection, x, center: complex, radius: float, nodes: int = 64):
    """``oint f(Z(m; 1, lam)) dlam`` on a circle; ``x`` may be a jet."""
    theta = 2 * np.pi * np.arange(nodes) / nodes
    dl = radius * np.exp(1j * theta)
    lam = center + dl
    Z = cs.parametrize(x, np.ones(nodes), lam)
    vals = f(Z)
    w = dl * (2j * np.pi / nodes)
    if isinstance(vals, jets.Jet):
        return jets.einsum("n,n->", vals, w)
    return np.sum(vals * w)


def residue_transform(f: RationalSection, spec: PoleSpec, radius_fraction: float = 0.3,
                      nodes: int = 64) -> RangeCandidate:
    """``m -> oint f dlam / (pi i)`` around the tracked pole; real part returned.

    The circle is centred at the pole of the base point of each evaluation
    and jets pass through the integrand, so derivatives are exact.
    ``.complex_value(m)`` returns the full complex transform.
    """

    def complex_value(x):
        x0 = np.real(x.value) if isinstance(x, jets.Jet) else np.asarray(x, dtype=float)
        lam, gap = track_pole(f, spec, x0)
        r = radius_fraction * min(gap, 1.0) if np.isfinite(gap) else radius_fraction
        return contour_integral(f, x, lam, r, nodes) / (np.pi * 1j)

    def F(x):
        v = complex_value(x)
        return v.real if isinstance(v, jets.Jet) else float(np.real(v))

    cand = RangeCandidate(F, "residue transform", {"lam0": spec.lam0})
    cand.complex_value = complex_value
    return cand


def closed_form_residues():
    """Reference closed forms of the transform around ``lam = 1``."""

    def zz(x):
        a, b, p, q, r = (x[i] for i in range(5))
        return jets.exp(a - b) * r / (jets.exp(2 * b) + r * r * jets.exp(2 * a))

    def inv_z1(x):
        return -jets.exp(-x[0] - x[1])

    def z2_over_z1sq(x):
        return x[2] * jets.exp(-x[0] - x[1])

    def z3_over_z1sq(x):
        return (x[3] - x[2] * x[4]) * jets.exp(-x[0] - x[1])

    return {
        "Z2/(Z1*Z3)": zz,
        "1/Z1": inv_z1,
        "Z2/(Z1^2)": z2_over_z1sq,
        "Z3/(Z1^2)": z3_over_z1sq,
    }


# ---------------------------------------------------------------------------
# Fifth-order ODE and jet-space metric
# ---------------------------------------------------------------------------

def ode_rhs(y, p, q, r, s):
    """Right-hand side of the fifth-order ODE whose solutions are conics."""
    return -40.0 / 9.0 * r**3 / q**2 + 5.0 * r * s / q


def conic_branch(coeffs, sign: float = 1.0) -> Callable:
    """``y(x)`` solving ``A y^2 + (B0 + B1 x) y + (C0 + C1 x + C2 x^2) = 0``."""
    A, B0, B1, C0, C1, C2 = coeffs

    def y(x):
        Bx = B0 + B1 * x
        Cx = C0 + C1 * x + C2 * x * x
        return (-Bx + sign * jets.sqrt(Bx * Bx - 4 * A * Cx)) / (2 * A)

    return y


def derivatives_1d(func: Callable, x0: float, order: int) -> np.ndarray:
    J = jets.jet_of(lambda v: func(v[0]), np.array([float(x0)]), order)
    return np.array([np.real(J.derivative([k])) for k in range(order + 1)])


def _nonflat(q) -> None:
    if abs(q) < 1e-10:
        raise DomainError("second derivative vanishes; the curve is locally a line")


def ode_residual(func: Callable, x0: float) -> float:
    """``|y^(5) - rhs|`` relative to ``1 + |y^(5)|``."""
    y, p, q, r, s, y5 = derivatives_1d(func, x0, 5)
    _nonflat(q)
    return abs(y5 - ode_rhs(y, p, q, r, s)) / (1 + abs(y5))


def q_power_third_derivative(func: Callable, x0: float) -> float:
    """Third derivative of ``q^{-2/3}`` at ``x0`` with ``q = y''``; zero along conics."""
    J = jets.jet_of(lambda v: func(v[0]), np.array([float(x0)]), 5)
    q = J.partial(0).partial(0)
    _nonflat(q.value)
    return float(abs(((q + 0j) ** (-2.0 / 3.0)).derivative([3])))


def unit_circle_upper(x):
    return jets.sqrt(1.0 - x * x)


def jet_metric(X):
    """Metric on the 5-jet chart ``(y, p, q, r, s)`` (Einstein, ``R = -60``)."""
    y, p, q, r, s = (X[i] for i in range(5))
    z = y * 0.0
    g11 = r * r * s / (24 * q**5) - 5 * r**4 / (162 * q**6) - s * s / (72 * q**4)
    g12 = r * s / (72 * q**4) - r**3 / (54 * q**5)
    g13 = 13 * r * r / (72 * q**4) - s / (12 * q**3)
    g14 = -r / (8 * q**3)
    g15 = 1 / (24 * q * q)
    g22 = s / (24 * q**3) - r * r / (18 * q**4)
    g23 = r / (24 * q**3)
    g24 = -1 / (24 * q * q)
    g33 = 1 / (24 * q * q)
    rows = [
        [g11, g12, g13, g14, g15],
        [g12, g22, g23, g24, z],
        [g13, g23, g33, z, z],
        [g14, g24, z, z, z],
        [g15, z, z, z, z],
    ]
    return cs._mat([[v if isinstance(v, jets.Jet) else z + v for v in row] for row in rows])


def jet_range_function(c: float) -> Callable:
    """``q(c)^{1/3}`` for the conic with 4-jet ``X`` at 0, i.e. the transform of a
    simple pole at ``x = c``; uses ``q^{-2/3}`` being quadratic along a conic."""

    def F(X):
        q, r, s = X[2], X[3], X[4]
        w0 = q ** (-2.0 / 3.0)
        w1 = -(2.0 / 3.0) * q ** (-5.0 / 3.0) * r
        w2 = (10.0 / 9.0) * q ** (-8.0 / 3.0) * r * r - (2.0 / 3.0) * q ** (-5.0 / 3.0) * s
        return (w0 + w1 * c + 0.5 * w2 * c * c) ** -0.5

    return F


def sample_jet_points(n: int, seed: int):
    return tensorlab.sample_points(
        lambda rng: np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 1.5),
                              rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)]),
        n, seed, valid=lambda X: abs(X[2]) > 0.1,
    )


def ode5_package(n_points: int = 10, seed: int = 0) -> dict:
    """Einstein certificate for the jet metric plus ODE checks on random conics."""
    rng = np.random.default_rng(seed)
    einstein, scalar, lap = 0.0, 0.0, 0.0
    for X in sample_jet_points(n_points, seed):
        c = tensorlab.curvature(jet_metric, X)
        einstein = max(einstein, float(np.abs(c.ricci - c.scalar / 5 * c.metric).max()
                                       / (1 + np.abs(c.ricci).max())))
        scalar = max(scalar, abs(c.scalar + 60.0) / 60.0)
        F = jet_range_function(0.3)
        lap = max(lap, abs(laplacian_generic(F, X, jet_metric) + 16.0 / 3.0 * F(X)) / (1 + abs(F(X))))
    ode = 0.0
    for _ in range(n_points):
        coeffs = rng.uniform(-1, 1, 6)
        coeffs[0] = 1.0 + abs(coeffs[0])
        coeffs[3] = -1.0 - abs(coeffs[3])  # keeps the discriminant positive near 0
        ode = max(ode, ode_residual(conic_branch(coeffs), 0.0))
    return {"einstein": einstein, "scalar_curvature": scalar,
            "jet_laplace_eigen": lap, "ode": ode}
