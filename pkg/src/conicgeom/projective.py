"""Conics in CP^2 as images of lines in CP^3 under the quadratic map.

Cubics and quadratics are :class:`~conicgeom.quantics.BinaryForm` objects in
the variables ``[x, y]`` (stored as ``[s, t]``), and ``z = x / y`` is the
affine coordinate used for roots, so ``z - alpha`` is the form ``x - alpha y``.

A point of CP^2 is a quadratic ``xi00 x^2 + 2 xi01 x y + xi11 y^2``, with
homogeneous coordinates

    Z = [(xi00 + xi11) / sqrt2, -i (xi00 - xi11) / sqrt2, i sqrt2 xi01]

in which the branch conic (quadratics with a double root) is ``Z . Z = 0``.
A conic is a symmetric matrix ``A`` (``Z A Z = 0``) or a pair ``(Psi, G)`` of a
quartic and a scalar (``R4(Psi, xi^2) / 24 + G R2(xi, xi) / 2 = 0``).  ``R_k``
are the raw transvectants of :mod:`conicgeom.quantics`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import jets
from .quantics import BinaryForm, DomainError, lower, raise_, roots, transvect

SQ2 = np.sqrt(2.0)

# Z = ZETA @ [xi00, xi01, xi11]
ZETA = np.array([[1 / SQ2, 0, 1 / SQ2], [-1j / SQ2, 0, 1j / SQ2], [0, 1j * SQ2, 0]])

# Calibrated once against direct fits; see tests/test_projective.py.
CONIC_G_SCALE = 1.0  # G = CONIC_G_SCALE * R3(p, q)
INVARIANT_FORM_SCALE = 6.0  # I = R4(Psi, Psi) / 6 - G^2
BRYANT_CONSTANT = 12.0  # R4(R1(p,q), Q^2) + 12 R3(p,q) R2(Q,Q) = 0
CAYLEY_TO_I = 1.5  # a2 + 1.5 I = 0
# H_{AB} . Omega = MOMENT_MAP_CONSTANT d xi_{AB} with the conventions of
# :func:`symplectic_matrix` and :func:`hamiltonian_field`.
MOMENT_MAP_CONSTANT = -2.0


class DegeneracyError(DomainError):
    """A projective construction degenerates (collinear data, equianharmonic roots, ...)."""


# ---------------------------------------------------------------------------
# Points of CP^2
# ---------------------------------------------------------------------------

def cubic_from_roots(*zs) -> BinaryForm:
    """``prod (x - z y)``."""
    out = BinaryForm([1.0])
    for z in zs:
        out = out * BinaryForm([1.0, -z])
    return out


def z_roots(phi: BinaryForm) -> list:
    """Affine roots ``z = x / y`` (``inf`` for the root ``y``-axis ``[1, 0]``)."""
    out = []
    for lam in roots(phi).affine():
        out.append(np.inf if lam == 0 else (0.0 if np.isinf(lam) else 1.0 / lam))
    return out


def xi_of(quad: BinaryForm) -> np.ndarray:
    c = quad.coeffs
    return np.array([c[0], c[1] / 2, c[2]])


def quad_of(xi) -> BinaryForm:
    return BinaryForm([xi[0], 2 * xi[1], xi[2]])


def z_coords(quad: BinaryForm) -> np.ndarray:
    return ZETA @ xi_of(quad)


def quad_from_z(Z) -> BinaryForm:
    return quad_of(np.linalg.solve(ZETA, np.asarray(Z, dtype=complex)))


def projective_distance(u, v) -> float:
    """Sine of the Hermitian angle between two complex lines."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    minors = np.outer(u, v) - np.outer(v, u)
    return float(np.linalg.norm(minors) / (np.sqrt(2) * np.linalg.norm(u) * np.linalg.norm(v)))


# ---------------------------------------------------------------------------
# The quadratic map
# ---------------------------------------------------------------------------

def q_map(p: BinaryForm, tol: float = 1e-12) -> BinaryForm:
    """``R2(p, p)``; vanishes exactly on perfect cubes."""
    if p.degree != 3:
        raise DomainError("q_map takes a cubic")
    q = transvect(p, p, 2)
    if np.abs(q.coeffs).max() <= tol * np.abs(p.coeffs).max() ** 2:
        raise DomainError("cubic is a perfect cube (on the rational normal curve)")
    return q


def gergonne_point(alpha, beta, gamma) -> tuple:
    """The two roots of the Gergonne quadric of the triangle with vertices
    ``(z-a)(z-b)`` etc., by the closed formula."""
    a, b, c = complex(alpha), complex(beta), complex(gamma)
    scale = max(abs(a), abs(b), abs(c), 1.0)
    if min(abs(a - b), abs(a - c), abs(b - c)) <= 1e-12 * scale:
        raise DegeneracyError("roots must be distinct")
    den = (a - b) ** 2 + (a - c) ** 2 + (b - c) ** 2
    if abs(den) <= 1e-12 * scale**2:
        raise DegeneracyError("equianharmonic triple: the Gergonne quadric degenerates")
    num = a * a * (b + c) + b * b * (a + c) + c * c * (a + b) - 6 * a * b * c
    disc = np.sqrt(3) * 1j * (a * a * (b - c) + b * b * (c - a) + c * c * (a - b))
    return ((num + disc) / den, (num - disc) / den)


def root_set_distance(r1, r2) -> float:
    """Matching distance between two small root sets on the Riemann sphere (chordal)."""
    def chord(u, v):
        if np.isinf(u) and np.isinf(v):
            return 0.0
        if np.isinf(u):
            return 2 / np.sqrt(1 + abs(v) ** 2)
        if np.isinf(v):
            return 2 / np.sqrt(1 + abs(u) ** 2)
        return 2 * abs(u - v) / np.sqrt((1 + abs(u) ** 2) * (1 + abs(v) ** 2))

    best = np.inf
    for perm in itertools.permutations(range(len(r2))):
        best = min(best, max(chord(r1[i], r2[j]) for i, j in enumerate(perm)))
    return float(best)


# ---------------------------------------------------------------------------
# Conics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConicPair:
    """A conic in both representations, kept in sync."""

    A: np.ndarray

    @classmethod
    def from_forms(cls, psi: BinaryForm, G) -> "ConicPair":
        f = psi.binomial()
        A = np.empty((3, 3), dtype=complex)
        d11m22 = 24 * (f[0] + f[4])
        A12 = -12j * (f[0] - f[4])
        A23 = 24 * (f[1] - f[3])
        A13 = 24j * (f[1] + f[3])
        tr = 6 * G
        # A11 + A22 - 2 A33 = 144 f2
        A33 = (tr - 144 * f[2]) / 3
        s = tr - A33
        A[0, 0] = (s + d11m22) / 2
        A[1, 1] = (s - d11m22) / 2
        A[2, 2] = A33
        A[0, 1] = A[1, 0] = A12
        A[0, 2] = A[2, 0] = A13
        A[1, 2] = A[2, 1] = A23
        return cls(A)

    def forms(self) -> tuple:
        """``(Psi, G)`` with ``Psi`` in binomial coefficients ``f0..f4``."""
        a = self.A
        f = [
            (a[0, 0] - a[1, 1] + 2j * a[0, 1]) / 48,
            (a[1, 2] - 1j * a[0, 2]) / 48,
            (a[0, 0] + a[1, 1] - 2 * a[2, 2]) / 144,
            -(a[1, 2] + 1j * a[0, 2]) / 48,
            (a[0, 0] - a[1, 1] - 2j * a[0, 1]) / 48,
        ]
        return BinaryForm.from_binomial(f), np.trace(a) / 6

    def upper6(self) -> np.ndarray:
        i, j = np.triu_indices(3)
        return self.A[i, j]

    @classmethod
    def from_upper6(cls, v) -> "ConicPair":
        A = np.zeros((3, 3), dtype=complex)
        i, j = np.triu_indices(3)
        A[i, j] = v
        A[j, i] = v
        return cls(A)

    def value(self, Z) -> complex:
        Z = np.asarray(Z)
        return complex(Z @ self.A @ Z)

    def relative_value(self, Z) -> float:
        Z = np.asarray(Z)
        return abs(self.value(Z)) / (np.linalg.norm(self.A) * np.vdot(Z, Z).real)


def forms_conic_value(psi: BinaryForm, G, quad: BinaryForm) -> complex:
    """``R4(Psi, xi^2) / 24 + G R2(xi, xi) / 2`` at the point ``xi``."""
    return complex(transvect(psi, quad * quad, 4).coeffs[0] / 24 + G * transvect(quad, quad, 2).coeffs[0] / 2)


@dataclass(frozen=True)
class LineCP3:
    p: BinaryForm
    q: BinaryForm

    def __post_init__(self):
        if self.p.degree != 3 or self.q.degree != 3:
            raise DomainError("a line is spanned by two cubics")
        M = np.vstack([self.p.coeffs, self.q.coeffs])
        sv = np.linalg.svd(M, compute_uv=False)
        if sv[1] <= 1e-12 * sv[0]:
            raise DegeneracyError("p and q are linearly dependent")

    def at(self, t, s) -> BinaryForm:
        return self.p * t + self.q * s


def conic_of_line(L: LineCP3) -> ConicPair:
    """Gergonne conic ``(R1(p, q), R3(p, q))``."""
    psi = transvect(L.p, L.q, 1)
    G = CONIC_G_SCALE * transvect(L.p, L.q, 3).coeffs[0]
    return ConicPair.from_forms(psi, G)


def parametric_point(L: LineCP3, t, s) -> np.ndarray:
    """``Q(t p + s q)`` in Z coordinates."""
    return z_coords(transvect(L.at(t, s), L.at(t, s), 2))


def parametric_coefficients(L: LineCP3) -> tuple:
    """``(R2(p,p), R2(p,q), R2(q,q))``: ``Q(tp+sq) = t^2 P + 2ts M + s^2 N``."""
    return transvect(L.p, L.p, 2), transvect(L.p, L.q, 2), transvect(L.q, L.q, 2)


def bryant_residual(L: LineCP3, t, s) -> float:
    """Relative size of ``R4(R1(p,q), Q^2) + 12 R3(p,q) R2(Q,Q)``, ``Q = Q(tp+sq)``."""
    Q = transvect(L.at(t, s), L.at(t, s), 2)
    a = transvect(transvect(L.p, L.q, 1), Q * Q, 4).coeffs[0]
    b = BRYANT_CONSTANT * transvect(L.p, L.q, 3).coeffs[0] * transvect(Q, Q, 2).coeffs[0]
    return float(abs(a + b) / max(abs(a), abs(b), 1e-300))


def invariant_I(c: ConicPair) -> complex:
    """``Tr(A^2)/6 - Tr(A)^2/12``."""
    A = c.A
    return complex(np.trace(A @ A) / 6 - np.trace(A) ** 2 / 12)


def invariant_I_forms(psi: BinaryForm, G) -> complex:
    """``R4(Psi, Psi)/6 - G^2``."""
    return complex(transvect(psi, psi, 4).coeffs[0] / INVARIANT_FORM_SCALE - G * G)


def normalized_invariant(c: ConicPair) -> float:
    """``|I| / |A|^2`` (scale-free)."""
    return abs(invariant_I(c)) / np.linalg.norm(c.A) ** 2


def unit_det(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    d = np.linalg.det(A)
    if abs(d) <= 1e-14 * np.linalg.norm(A) ** 3:
        raise DegeneracyError("degenerate conic")
    return A / d ** (1.0 / 3.0)


def cayley_a2(A) -> complex:
    """Second coefficient of ``sqrt(det(sA + I))`` after ``det A = 1``."""
    A = unit_det(A)
    return complex((np.trace(A) ** 2 - 2 * np.trace(A @ A)) / 8)


def cayley_series(A, order: int = 4) -> np.ndarray:
    """Taylor coefficients of ``sqrt(det(sA + I))`` (``det A = 1``) by series arithmetic."""
    A = unit_det(A)
    poly = np.real_if_close(np.poly(-A)[::-1])  # det(sI + A) ascending in s
    # det(sA + I) = s^3 det(A + I/s) = reversed char poly
    c = np.zeros(order + 1, dtype=complex)
    d = np.asarray(poly, dtype=complex)[::-1]
    c[: min(4, order + 1)] = d[: min(4, order + 1)]
    out = np.zeros(order + 1, dtype=complex)
    out[0] = np.sqrt(c[0])
    for n in range(1, order + 1):
        acc = c[n] - sum(out[k] * out[n - k] for k in range(1, n))
        out[n] = acc / (2 * out[0])
    return out


# ---------------------------------------------------------------------------
# Poncelet iteration
# ---------------------------------------------------------------------------

def _null_basis(v):
    """Two vectors ``u`` with ``u . v = 0`` (bilinear)."""
    _, _, vh = np.linalg.svd(np.asarray(v, dtype=complex)[None, :])
    return vh[1].conj(), vh[2].conj()


def tangents_through(P) -> list:
    """Lines ``l`` (covectors) through ``P`` tangent to the base conic ``Z . Z = 0``."""
    u, v = _null_basis(P)
    a, b, c = u @ u, 2 * (u @ v), v @ v
    if abs(b * b - 4 * a * c) <= 1e-12 * (abs(b) ** 2 + abs(4 * a * c)):
        raise DegeneracyError("point on the base conic")
    out = []
    for r in np.roots([c, b, a]) if abs(c) > abs(a) else np.roots([a, b, c]):
        line = u + r * v if abs(c) > abs(a) else r * u + v
        out.append(line / np.linalg.norm(line))
    return out


def second_intersection(A, P, line) -> np.ndarray:
    """The other point where ``line`` meets the conic ``A`` (``P`` on both)."""
    u, v = _null_basis(line)
    # a point on the line independent of P
    R = u if projective_distance(u, P) > projective_distance(v, P) else v
    mu = -2 * (P @ A @ R) / (R @ A @ R)
    Q = P + mu * R
    return Q / np.linalg.norm(Q)


def point_on_conic(A, rng) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    X = rng.normal(size=3) + 1j * rng.normal(size=3)
    Y = rng.normal(size=3) + 1j * rng.normal(size=3)
    lam = np.roots([Y @ A @ Y, 2 * (X @ A @ Y), X @ A @ X])[0]
    P = X + lam * Y
    return P / np.linalg.norm(P)


def poncelet_close(A, steps: int = 3, start=None, rng=None, token: int = 0) -> float:
    """Distance from the start after ``steps`` tangent/chord moves.

    ``token`` picks which of the two tangents leaves the starting point;
    afterwards the iteration always takes the tangent not just used.
    """
    A = np.asarray(A, dtype=complex)
    if start is None:
        start = point_on_conic(A, rng if rng is not None else np.random.default_rng(0))
    P = np.asarray(start, dtype=complex)
    P = P / np.linalg.norm(P)
    prev = None
    for k in range(steps):
        tl = tangents_through(P)
        if prev is None:
            line = tl[token % 2]
        else:
            line = max(tl, key=lambda l: projective_distance(l, prev))
        P = second_intersection(A, P, line)
        prev = line
    return projective_distance(P, start)


# ---------------------------------------------------------------------------
# Branch conic
# ---------------------------------------------------------------------------

def on_branch(quad: BinaryForm) -> complex:
    """Discriminant ``c1^2 - 4 c0 c2`` of the raw coefficients."""
    c = quad.coeffs
    return complex(c[1] ** 2 - 4 * c[0] * c[2])


def branch_point(s, t) -> BinaryForm:
    """``[t^2, 2 s t, s^2]``."""
    return BinaryForm([t * t, 2 * s * t, s * s])


def intersection_quartic(L: LineCP3) -> BinaryForm:
    """``R2(Q(L), Q(L))`` as a quartic in ``[t, s]``."""
    P, M, N = parametric_coefficients(L)
    r = lambda a, b: transvect(a, b, 2).coeffs[0]
    return BinaryForm([r(P, P), 4 * r(P, M), 2 * r(P, N) + 4 * r(M, M), 4 * r(M, N), r(N, N)])


def branch_intersections(L: LineCP3) -> list:
    """Points of the Gergonne conic on the branch conic, with multiplicities."""
    quart = intersection_quartic(L)
    rs = roots(quart)
    out = []
    for (t, s), m in zip(rs.points, rs.multiplicities):
        out.append((transvect(L.at(t, s), L.at(t, s), 2), m))
    return out


def branch_conic_tools():
    return on_branch, branch_point, intersection_quartic


# ---------------------------------------------------------------------------
# Moment map
# ---------------------------------------------------------------------------

_CUBIC_SLOTS = [(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)]


def cubic_tensor(x):
    """Full ``p_{ABC}`` from ``x = (p000, p001, p011, p111)``."""
    ones = np.array([sum(i) for i in itertools.product((0, 1), repeat=3)]).reshape(2, 2, 2)
    if isinstance(x, jets.Jet):
        return x[ones]
    return np.asarray(x)[ones]


def moment_map(x):
    """``xi_{AB} = p_A^{DE} p_{BDE}`` (jet-friendly)."""
    P = cubic_tensor(x)
    Pup = raise_(P, [1, 2])
    if isinstance(P, jets.Jet):
        return jets.einsum("ADE,BDE->AB", Pup, P)
    return np.einsum("ADE,BDE->AB", Pup, P)


def symplectic_matrix() -> np.ndarray:
    """``Omega(U, V) = U_{ABC} V^{ABC} - V_{ABC} U^{ABC}`` on ``(p000, p001, p011, p111)``."""
    E = np.eye(4)
    W = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            U, V = cubic_tensor(E[i]), cubic_tensor(E[j])
            W[i, j] = np.sum(U * raise_(V)) - np.sum(V * raise_(U))
    return W


def hamiltonian_field(x, A: int, B: int) -> np.ndarray:
    """``H_{AB} = 2 p_{(A}^{CD} d/dp^{B)CD}`` in the coordinates ``x``.

    ``d/dp^{BCD}`` moves ``p^{EFG}`` by ``delta^{(E}_B delta^F_C delta^{G)}_D``.
    """
    P = cubic_tensor(np.asarray(x, dtype=complex))
    Pup = raise_(P, [1, 2])  # p_A^{CD}
    out = np.zeros((2, 2, 2), dtype=complex)  # variation of p^{EFG}
    for (a, b) in ((A, B), (B, A)):
        for C, D in itertools.product((0, 1), repeat=2):
            coef = Pup[a, C, D]
            if coef == 0:
                continue
            for perm in itertools.permutations((b, C, D)):
                out[perm] += coef / 6.0
    lowered = lower(out)
    return np.array([lowered[s] for s in _CUBIC_SLOTS])


def moment_map_residual(x) -> float:
    """Max over ``AB`` of ``|H_{AB} . Omega - c d xi_{AB}|`` relative to ``|d xi|``."""
    x = np.asarray(x, dtype=complex)
    W = symplectic_matrix()
    dxi = jets.jet_of(moment_map, x, 1).gradient()  # (2, 2, 4)
    worst = 0.0
    for A, B in ((0, 0), (0, 1), (1, 1)):
        H = hamiltonian_field(x, A, B)
        contracted = H @ W
        worst = max(worst, np.abs(contracted - MOMENT_MAP_CONSTANT * dxi[A, B]).max() / np.abs(dxi[A, B]).max())
    return float(worst)
