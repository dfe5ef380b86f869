"""Geometry of the space of non-degenerate plane conics, SL(3,R)/SO(3).

A point ``m = (a, b, p, q, r)`` labels the conic ``Z A Z^T = 0`` with
``A = B B^T`` and

    B = [[e^(-a-b), p e^b, q e^a],
         [0,        e^b,   r e^a],
         [0,        0,     e^a  ]]

All field functions accept either a plain coordinate array or a
:class:`~conicgeom.jets.Jet` of coordinates, so derivatives come for free.

The quartic-valued one-form is ``S = t^4 e1 + 4 t^3 s e2 + 6 t^2 s^2 e3
+ 4 t s^3 e4 + s^4 e5``; the metric and cubic form are

    g = 2 e1.e5 - 8 e2.e4 + 6 e3.e3
    G = 6 (e1.e5.e3 + 2 e2.e4.e3 - e3.e3.e3 - e1.e4.e4 - e5.e2.e2)

with ``.`` the normalised symmetric product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import jets, tensorlab
from .quantics import BinaryForm, transvect

COORDS = ("a", "b", "p", "q", "r")


@dataclass(frozen=True)
class PointM:
    a: float
    b: float
    p: float
    q: float
    r: float

    @property
    def x(self) -> np.ndarray:
        return np.array([self.a, self.b, self.p, self.q, self.r], dtype=float)

    @classmethod
    def from_array(cls, x) -> "PointM":
        return cls(*(float(v) for v in np.asarray(x, dtype=float)))


def _coords(m):
    if isinstance(m, PointM):
        return m.x
    return m


def _zero_like(x0):
    return x0 * 0.0


def B_matrix(m):
    a, b, p, q, r = (_coords(m)[i] for i in range(5))
    z = _zero_like(a)
    ea, eb = jets.exp(a), jets.exp(b)
    rows = [
        [jets.exp(-a - b), p * eb, q * ea],
        [z, eb, r * ea],
        [z, z, ea],
    ]
    return _mat(rows)


def _mat(rows):
    if any(isinstance(v, jets.Jet) for row in rows for v in row):
        return jets.stack([jets.stack(list(row)) for row in rows])
    return np.array(rows)


def conic_matrix(m):
    """Symmetric matrix ``A = B B^T`` with ``det A = 1``."""
    B = B_matrix(m)
    if isinstance(B, jets.Jet):
        return jets.einsum("ik,jk->ij", B, B)
    return B @ B.T


def point_from_conic(A) -> PointM:
    """Inverse of :func:`conic_matrix` on positive definite det-1 matrices."""
    A = np.asarray(A, dtype=float)
    A = A / np.cbrt(np.linalg.det(A))
    # Upper-triangular factor: flip rows/columns of the Cholesky factor.
    J = np.eye(3)[::-1]
    L = np.linalg.cholesky(J @ A @ J)
    B = J @ L @ J
    a = np.log(B[2, 2])
    b = np.log(B[1, 1])
    r = B[1, 2] / np.exp(a)
    q = B[0, 2] / np.exp(a)
    p = B[0, 1] / np.exp(b)
    return PointM(a, b, p, q, r)


def base_section(s, t):
    """``W = [s^2 - t^2, 2ts, i(s^2 + t^2)]`` on the conic ``W W^T = 0``."""
    return np.array([s**2 - t**2, 2 * t * s, 1j * (s**2 + t**2)])


def parametrize(m, s, t=None):
    """Point ``Z = W B^{-1}`` of the conic ``m`` at ``[s, t]``.

    Written out explicitly so that jets of ``m`` can be passed in.
    """
    if t is None:
        s, t = s
    a, b, p, q, r = (_coords(m)[i] for i in range(5))
    u = s * s - t * t
    v = 2.0 * s * t
    w = s * s + t * t
    eab = jets.exp(a + b)
    emb = jets.exp(-b)
    z1 = eab * u
    z2 = emb * v - eab * p * u
    z3 = eab * (p * r - q) * u - r * emb * v + 1j * jets.exp(-a) * w
    if any(isinstance(z, jets.Jet) for z in (z1, z2, z3)):
        return jets.stack([z1 + 0j, z2 + 0j, z3])
    return np.array([z1, z2, z3], dtype=complex)


def parametrize_coeffs(m):
    """Each ``Z^i`` as a raw quadratic form in ``[s, t]``: array (3, 3)."""
    a, b, p, q, r = (_coords(m)[i] for i in range(5))
    eab = jets.exp(a + b)
    emb = jets.exp(-b)
    ema = jets.exp(-a)
    # coefficients on s^2, s t, t^2
    u = np.array([1.0, 0.0, -1.0])
    v = np.array([0.0, 2.0, 0.0])
    w = np.array([1.0, 0.0, 1.0])
    rows = [
        [eab * u[k] for k in range(3)],
        [emb * v[k] - eab * p * u[k] for k in range(3)],
        [eab * (p * r - q) * u[k] - r * emb * v[k] + 1j * ema * w[k] for k in range(3)],
    ]
    if any(isinstance(v_, jets.Jet) for row in rows for v_ in row):
        return jets.stack([jets.stack([x + 0j for x in row]) for row in rows])
    return np.array(rows, dtype=complex)


def conic_delta(m, lam: complex) -> complex:
    """``Z'' . (Z x Z')`` in the affine chart ``[1, lam]``; constant ``8i``."""
    m = np.asarray(_coords(m), dtype=float)
    C = parametrize_coeffs(m)
    Z = C[:, 0] + C[:, 1] * lam + C[:, 2] * lam**2
    dZ = C[:, 1] + 2 * C[:, 2] * lam
    ddZ = 2 * C[:, 2]
    return complex(ddZ @ np.cross(Z, dZ))


# ---------------------------------------------------------------------------
# Coframe, metric and cubic form
# ---------------------------------------------------------------------------

def coframe(m):
    """Complex one-forms ``e^1..e^5`` as rows of coordinate components.

    ``e5 = conj(e1)``, ``e4 = -conj(e2)``, ``e3`` real.
    """
    a, b, p, q, r = (_coords(m)[i] for i in range(5))
    z = _zero_like(a) + 0j
    E = jets.exp(2 * a + b)
    e1 = [z - 4.0, z - 2.0, z, -2j * E, 2j * p * E]
    e2 = [z, z, -jets.exp(a + 2 * b) + 0j, z, 1j * jets.exp(a - b)]
    e3 = [z, z + 2.0, z, z, z]
    rows = [e1, e2, e3]
    if any(isinstance(v, jets.Jet) for row in rows for v in row):
        e = [jets.stack(row) for row in rows]
        c1, c2 = e[0], e[1]
        return jets.stack([c1, c2, e[2], -c2.conj(), c1.conj()])
    e = np.array(rows, dtype=complex)
    return np.array([e[0], e[1], e[2], -np.conj(e[1]), np.conj(e[0])])


def _sym2(u, v):
    return 0.5 * (jets.einsum("i,j->ij", u, v) + jets.einsum("i,j->ij", v, u))


def _sym3(u, v, w):
    out = None
    for x, y, z in itertools.permutations((u, v, w)):
        term = jets.einsum("ij,k->ijk", jets.einsum("i,j->ij", x, y), z)
        out = term if out is None else out + term
    return out * (1.0 / 6.0)


def metric_of_coframe(e):
    """``2 e1 e5 - 8 e2 e4 + 6 e3^2`` (complex in general)."""
    return 2.0 * _sym2(e[0], e[4]) - 8.0 * _sym2(e[1], e[3]) + 6.0 * _sym2(e[2], e[2])


def cubic_of_coframe(e):
    return 6.0 * (
        _sym3(e[0], e[4], e[2])
        + 2.0 * _sym3(e[1], e[3], e[2])
        - _sym3(e[2], e[2], e[2])
        - _sym3(e[0], e[3], e[3])
        - _sym3(e[4], e[1], e[1])
    )


def metric_from_coframe(m):
    g = metric_of_coframe(coframe(m))
    return g.real if isinstance(g, jets.Jet) else np.real(g)


def cubic_form(m):
    """Components ``G_abc`` of the symmetric cubic form."""
    G = cubic_of_coframe(coframe(m))
    return G.real if isinstance(G, jets.Jet) else np.real(G)


def metric(m):
    """Einstein metric written out in coordinates."""
    a, b, p, q, r = (_coords(m)[i] for i in range(5))
    z = _zero_like(a)
    E1 = jets.exp(2 * a + 4 * b)
    E2 = jets.exp(2 * a - 2 * b)
    E3 = jets.exp(4 * a + 2 * b)
    rows = [
        [z + 32.0, z + 16.0, z, z, z],
        [z + 16.0, z + 32.0, z, z, z],
        [z, z, 8.0 * E1, z, z],
        [z, z, z, 8.0 * E3, -8.0 * E3 * p],
        [z, z, z, -8.0 * E3 * p, 8.0 * (E2 + E3 * p * p)],
    ]
    return _mat(rows)


def maurer_cartan(m):
    """``B^{-1} dB`` as a (3, 3, 5) array of one-form components."""
    x = jets.get_space(5, 1).variables(np.asarray(_coords(m), dtype=float))
    B = B_matrix(x)
    dB = B.gradient()
    Binv = np.linalg.inv(B.value)
    return np.einsum("ij,jkc->ikc", Binv, dB)


def metric_from_omega(m) -> np.ndarray:
    """``4(O12^2+O13^2+O23^2) + (O11-O33)^2 + 3(O11+O33)^2`` with
    ``O = B^{-1}dB + (B^{-1}dB)^T``.  This quadratic form is half of :func:`metric`."""
    mc = maurer_cartan(m)
    O = mc + np.transpose(mc, (1, 0, 2))

    def sq(u, v=None):
        v = u if v is None else v
        return 0.5 * (np.outer(u, v) + np.outer(v, u))

    return (
        4 * (sq(O[0, 1]) + sq(O[0, 2]) + sq(O[1, 2]))
        + sq(O[0, 0] - O[2, 2])
        + 3 * sq(O[0, 0] + O[2, 2])
    )


def metric_from_trace(m) -> np.ndarray:
    """``4 Tr(A^{-1} dA A^{-1} dA)``."""
    x = jets.get_space(5, 1).variables(np.asarray(_coords(m), dtype=float))
    A = conic_matrix(x)
    dA = A.gradient()
    Ainv = np.linalg.inv(A.value)
    M = np.einsum("ij,jkc->ikc", Ainv, dA)
    return 4 * np.einsum("ijc,jid->cd", M, M)


def quartic_of_vector(m, V) -> BinaryForm:
    """``rho(V) = V -| S`` as a raw binary form in ``[s, t]``."""
    e = coframe(np.asarray(_coords(m), dtype=float))
    ev = e @ np.asarray(V)
    # S = t^4 e1 + 4 t^3 s e2 + 6 t^2 s^2 e3 + 4 t s^3 e4 + s^4 e5; index i <-> s^(4-i) t^i
    return BinaryForm([ev[4], 4 * ev[3], 6 * ev[2], 4 * ev[1], ev[0]])


def vector_of_quartic(m, phi: BinaryForm) -> np.ndarray:
    """Inverse of :func:`quartic_of_vector` (complex vector in general)."""
    e = coframe(np.asarray(_coords(m), dtype=float))
    c = phi.coeffs
    target = np.array([c[4], c[3] / 4, c[2] / 6, c[1] / 4, c[0]])
    return np.linalg.solve(e, target)


def S_from_omega(m, s, t) -> np.ndarray:
    """One-form ``W O W^T`` evaluated at ``[s, t]``."""
    mc = maurer_cartan(m)
    O = mc + np.transpose(mc, (1, 0, 2))
    W = base_section(s, t)
    return np.einsum("i,ijc,j->c", W, O, W)


def S_from_coframe(m, s, t) -> np.ndarray:
    e = coframe(np.asarray(_coords(m), dtype=float))
    w = np.array([t**4, 4 * t**3 * s, 6 * t**2 * s**2, 4 * t * s**3, s**4])
    return w @ e


@dataclass
class StructureTensors:
    g: np.ndarray
    G: np.ndarray
    coframe: np.ndarray = field(repr=False)


def structure_tensors(m) -> StructureTensors:
    x = np.asarray(_coords(m), dtype=float)
    return StructureTensors(metric(x), cubic_form(x), coframe(x))


# ---------------------------------------------------------------------------
# Killing fields
# ---------------------------------------------------------------------------

def killing_fields():
    """The eight generators ``X1..X8`` of the isometric SL(3,R) action."""

    def comps(m, vals):
        if any(isinstance(v, jets.Jet) for v in vals):
            z = None
            for v in vals:
                if isinstance(v, jets.Jet):
                    z = v * 0.0
                    break
            return jets.stack([v if isinstance(v, jets.Jet) else z + v for v in vals])
        return np.array(vals, dtype=float)

    def X1(m):
        a, b, p, q, r = (m[i] for i in range(5))
        return comps(m, [0.0, 0.0, 1.0, r, 0.0])

    def X2(m):
        return comps(m, [0.0, 0.0, 0.0, 1.0, 0.0 * m[0]])

    def X3(m):
        return comps(m, [0.0, 0.0, 0.0, 0.0, 1.0 + 0.0 * m[0]])

    def X4(m):
        a, b, p, q, r = (m[i] for i in range(5))
        return comps(m, [1.0, 0.0, -p, -2 * q, -r])

    def X5(m):
        a, b, p, q, r = (m[i] for i in range(5))
        return comps(m, [0.0, 1.0, -2 * p, -q, r])

    def X6(m):
        a, b, p, q, r = (m[i] for i in range(5))
        return comps(m, [0.0 * a, p, -(1 + p * p - jets.exp(-2 * a - 4 * b)), -r, q])

    def X7(m):
        a, b, p, q, r = (m[i] for i in range(5))
        e = jets.exp(2 * b - 2 * a)
        return comps(m, [r, -r, p * r - q, e * p - r * q, -(1 + r * r - e)])

    def X8(m):
        a, b, p, q, r = (m[i] for i in range(5))
        e = jets.exp(2 * b - 2 * a)
        return comps(
            m,
            [
                q,
                -r * p,
                p * p * r - r * jets.exp(-2 * a - 4 * b) - q * p,
                p * p * e + jets.exp(-4 * a - 2 * b) - q * q - 1,
                e * p - r * q,
            ],
        )

    return [X1, X2, X3, X4, X5, X6, X7, X8]


# ---------------------------------------------------------------------------
# Certification
# ---------------------------------------------------------------------------

def sample_box(n: int, seed: int, half_width: float = 1.0):
    return tensorlab.sample_points(
        lambda rng: rng.uniform(-half_width, half_width, 5), n, seed
    )


def covariant_derivative_cubic(m) -> np.ndarray:
    """``nabla_d G_abc`` (derivative index last)."""
    x = np.asarray(_coords(m), dtype=float)
    J = jets.jet_of(cubic_form, x, 1)
    G0, dG = J.value, J.gradient()
    gm = tensorlab.MetricField(metric, 5)
    g, dg = gm.derivatives(x, 1)
    Gam = tensorlab.christoffel_from(g, dg)
    out = dG.copy()
    out -= np.einsum("eda,ebc->abcd", Gam, G0)
    out -= np.einsum("edb,aec->abcd", Gam, G0)
    out -= np.einsum("edc,abe->abcd", Gam, G0)
    return out


def _sym_last4(T):
    out = np.zeros_like(T)
    perms = list(itertools.permutations(range(4)))
    for perm in perms:
        out += np.transpose(T, perm)
    return out / len(perms)


def so3_algebraic_residuals(g, G) -> dict:
    """Pointwise algebraic identities of an SO(3) structure ``(g, G)``."""
    ginv = np.linalg.inv(g)
    Gup1 = np.einsum("ae,ebc->abc", ginv, G)
    quad = 6 * _sym_last4(np.einsum("abc,dea->bcde", Gup1, G))
    gg = _sym_last4(np.einsum("bc,de->bcde", g, g))
    GG = np.einsum("efa,eg,fh,ghb->ab", G, ginv, ginv, G)
    # residuals are relative to the size of the tensors compared, so they do not
    # grow with the exponential coordinate scale of the chart
    return {
        "quadratic_identity": float(np.abs(quad - gg).max() / np.abs(gg).max()),
        "trace_free": float(np.abs(np.einsum("ab,abc->c", ginv, G)).max()
                            / (np.abs(ginv).max() * np.abs(G).max())),
        "GG_seven_twelfths": float(np.abs(GG - 7.0 / 12.0 * g).max() / np.abs(g).max()),
        "GG_full_trace": float(abs(np.einsum("ab,ab->", GG, ginv) - 35.0 / 12.0)),
    }


def so3_residuals(m) -> dict:
    """Residuals of every algebraic and differential identity at one point."""
    x = np.asarray(_coords(m), dtype=float)
    g = metric(x)
    curv = tensorlab.curvature(metric, x)
    res = {
        "nabla_G": float(np.abs(covariant_derivative_cubic(x)).max() / np.abs(cubic_form(x)).max()),
        **so3_algebraic_residuals(g, cubic_form(x)),
        "scalar_curvature": float(abs(curv.scalar + 15.0 / 16.0)),
        "einstein": float(np.abs(curv.ricci - curv.scalar / 5.0 * g).max() / np.abs(g).max()),
    }
    fields = killing_fields()
    for i, X in enumerate(fields, start=1):
        res[f"killing_X{i}"] = float(np.abs(tensorlab.lie_derivative(X, metric, x)).max())
    X6, X7, X8 = fields[5:]
    res["bracket_67"] = float(np.abs(tensorlab.lie_bracket(X6, X7, x) - X8(x)).max())
    res["bracket_68"] = float(np.abs(tensorlab.lie_bracket(X6, X8, x) + X7(x)).max())
    res["bracket_78"] = float(np.abs(tensorlab.lie_bracket(X7, X8, x) - X6(x)).max())
    return res


def so3_certify(n_points: int = 20, seed: int = 0, tol: float = 1e-8) -> dict:
    """Maximum residual of each identity over seeded sample points."""
    worst: dict = {}
    for x in sample_box(n_points, seed):
        for k, v in so3_residuals(x).items():
            worst[k] = max(worst.get(k, 0.0), v)
    failures = [k for k, v in worst.items() if v > tol]
    return {"n_points": n_points, "seed": seed, "tolerance": tol,
            "max_residuals": worst, "failures": failures, "passed": not failures}


def transvectant_metric_constant(m, V) -> complex:
    """Ratio ``R_4(rho V, rho V) / g(V, V)`` for a (complex) tangent vector."""
    phi = quartic_of_vector(m, V)
    gv = V @ metric(np.asarray(_coords(m), dtype=float)) @ V
    return complex(transvect(phi, phi, 4).coeffs[0] / gv)
