"""Binary forms: transvectants, SL(2) action, projective roots, spinors.

A degree-``n`` binary form is stored by its raw monomial coefficients,
``phi(s, t) = sum_i c[i] * s**(n - i) * t**i``.

Transvectants are computed without factorial normalisation::

    R_k(phi, psi) = sum_{j=0..k} (-1)**j C(k, j)
                    d^k phi / ds^(k-j) dt^j  *  d^k psi / ds^j dt^(k-j)

This is ``SL(2)``-equivariant; dropping the ``j = 0`` term is not.

Spinor convention: indices take values 0, 1; ``eps_{01} = 1``; indices are
lowered as ``psi_A = psi^P eps_{PA}`` and raised as ``psi^A = eps^{AB} psi_B``
with ``eps^{01} = 1``.  A form corresponds to a symmetric spinor through
``phi(s, t) = phi_{A...D} pi^A ... pi^D`` with ``pi^A = [t, -s]``.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from . import jets

EPS = np.array([[0.0, 1.0], [-1.0, 0.0]])


class DomainError(ValueError):
    """Input outside the domain of an operation (degree, rank, degeneracy)."""


# ---------------------------------------------------------------------------
# BinaryForm
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BinaryForm:
    """Homogeneous polynomial in ``[s, t]`` with complex coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).copy()
        if c.ndim != 1:
            raise DomainError("coefficients must be one-dimensional")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    @classmethod
    def from_binomial(cls, values) -> "BinaryForm":
        """Form ``sum_k C(n, k) v[k] s**(n-k) t**k``."""
        values = np.asarray(values, dtype=complex)
        n = len(values) - 1
        return cls(values * np.array([comb(n, k) for k in range(n + 1)]))

    def binomial(self) -> np.ndarray:
        """Inverse of :meth:`from_binomial`."""
        n = self.degree
        return self.coeffs / np.array([comb(n, k) for k in range(n + 1)])

    @classmethod
    def from_roots(cls, roots, scale=1.0) -> "BinaryForm":
        """Product of ``(t - lam * s)`` over affine roots ``lam = t/s``;
        ``None``/``inf`` stands for the root ``[0, 1]`` (factor ``s``)."""
        out = cls([scale])
        for lam in roots:
            if lam is None or (np.isscalar(lam) and np.isinf(lam)):
                out = out * cls([1.0, 0.0])
            else:
                out = out * cls([-lam, 1.0])
        return out

    def __call__(self, s, t):
        n = self.degree
        return sum(c * s ** (n - i) * t**i for i, c in enumerate(self.coeffs))

    def __add__(self, other: "BinaryForm") -> "BinaryForm":
        if other.degree != self.degree:
            raise DomainError("cannot add forms of different degree")
        return BinaryForm(self.coeffs + other.coeffs)

    def __sub__(self, other: "BinaryForm") -> "BinaryForm":
        return self + other.scale(-1.0)

    def scale(self, factor) -> "BinaryForm":
        return BinaryForm(self.coeffs * factor)

    def __mul__(self, other):
        if isinstance(other, BinaryForm):
            return BinaryForm(np.convolve(self.coeffs, other.coeffs))
        return self.scale(other)

    __rmul__ = __mul__

    def allclose(self, other: "BinaryForm", rtol=1e-10, atol=0.0) -> bool:
        if other.degree != self.degree:
            return False
        scale = max(np.abs(self.coeffs).max(), np.abs(other.coeffs).max(), 1e-300)
        return bool(np.abs(self.coeffs - other.coeffs).max() <= atol + rtol * scale)


# ---------------------------------------------------------------------------
# Transvectants
# ---------------------------------------------------------------------------

def _mixed_derivative(n: int, i: int, ks: int, kt: int):
    """d^(ks+kt)/ds^ks dt^kt of s^(n-i) t^i: (coefficient, index in degree n-ks-kt)."""
    ps, pt = n - i, i
    if ks > ps or kt > pt:
        return 0, None
    coeff = (factorial(ps) // factorial(ps - ks)) * (factorial(pt) // factorial(pt - kt))
    return coeff, pt - kt


@functools.lru_cache(maxsize=None)
def transvectant_tensor(n1: int, n2: int, k: int) -> np.ndarray:
    """Integer tensor ``T`` with ``R_k(phi, psi) = einsum('i,j,ijm->m', phi, psi, T)``."""
    if k < 0 or k > min(n1, n2):
        raise DomainError(f"transvectant order {k} out of range for degrees {n1}, {n2}")
    nout = n1 + n2 - 2 * k
    T = np.zeros((n1 + 1, n2 + 1, nout + 1))
    for i in range(n1 + 1):
        for l in range(n2 + 1):
            for j in range(k + 1):
                ca, ia = _mixed_derivative(n1, i, k - j, j)
                cb, ib = _mixed_derivative(n2, l, j, k - j)
                if ia is None or ib is None:
                    continue
                T[i, l, ia + ib] += (-1) ** j * comb(k, j) * ca * cb
    T.setflags(write=False)
    return T


def transvect_coeffs(c1, c2, k: int):
    """Transvectant on raw coefficient arrays (numeric or :class:`~conicgeom.jets.Jet`).

    The coefficient index must be the last leading axis of each operand.
    """
    n1 = c1.shape[-1] - 1
    n2 = c2.shape[-1] - 1
    T = transvectant_tensor(n1, n2, k)
    if isinstance(c1, jets.Jet) or isinstance(c2, jets.Jet):
        left = jets.einsum("...i,ijm->...jm", c1, T)
        return jets.einsum("...jm,...j->...m", left, c2)
    return np.einsum("...i,...j,ijm->...m", c1, c2, T)


def transvect(phi: BinaryForm, psi: BinaryForm, k: int) -> BinaryForm:
    """k-th transvectant ``R_k(phi, psi)`` of degree ``deg phi + deg psi - 2k``."""
    if not isinstance(k, (int, np.integer)) or k < 0 or k > min(phi.degree, psi.degree):
        raise DomainError(f"transvectant order {k} out of range")
    return BinaryForm(transvect_coeffs(phi.coeffs, psi.coeffs, k))


def j_invariant(psi: BinaryForm) -> complex:
    """``R_4(R_2(psi, psi), psi)`` of a quartic."""
    if psi.degree != 4:
        raise DomainError("the J-invariant is defined for quartics")
    return complex(transvect(transvect(psi, psi, 2), psi, 4).coeffs[0])


# ---------------------------------------------------------------------------
# SL(2) action
# ---------------------------------------------------------------------------

def sl2_act(N, phi: BinaryForm) -> BinaryForm:
    """The form ``phi((s, t) . N)``: s -> s N00 + t N10, t -> s N01 + t N11."""
    N = np.asarray(N, dtype=complex)
    if N.shape != (2, 2):
        raise DomainError("N must be 2x2")
    if abs(np.linalg.det(N)) < 1e-14 * max(1.0, np.abs(N).max() ** 2):
        raise DomainError("N is singular")
    n = phi.degree
    s_img = np.array([N[0, 0], N[1, 0]])
    t_img = np.array([N[0, 1], N[1, 1]])
    out = np.zeros(n + 1, dtype=complex)
    for i, c in enumerate(phi.coeffs):
        if c == 0:
            continue
        term = np.array([c])
        for _ in range(n - i):
            term = np.convolve(term, s_img)
        for _ in range(i):
            term = np.convolve(term, t_img)
        out += term
    return BinaryForm(out)


# ---------------------------------------------------------------------------
# Roots
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RootSet:
    """Projective roots ``[s, t]`` (``max(|s|, |t|) = 1``) with multiplicities."""

    points: tuple
    multiplicities: tuple

    @property
    def count(self) -> int:
        return int(sum(self.multiplicities))

    def affine(self):
        """Affine values ``lam = t/s`` (``inf`` for ``[0, 1]``), repeated by multiplicity."""
        out = []
        for (s, t), m in zip(self.points, self.multiplicities):
            lam = np.inf if s == 0 else t / s
            out.extend([lam] * m)
        return out


def _normalize(s, t):
    scale = max(abs(s), abs(t))
    return (s / scale, t / scale)


def _cluster(vals, radius):
    clusters = []
    for v in vals:
        for cl in clusters:
            if abs(v - np.mean(cl)) <= radius * max(1.0, abs(np.mean(cl))):
                cl.append(v)
                break
        else:
            clusters.append([v])
    return clusters


def _validated_clusters(vals, p, radius):
    """Cluster eigenvalues; keep a cluster of size m only if the first m - 1
    derivatives of ``p`` also (nearly) vanish at its mean."""
    out = []
    for cl in _cluster(vals, radius):
        m = len(cl)
        if m > 1:
            c = np.mean(cl)
            scale = np.abs(p.coef).max() * max(1.0, abs(c)) ** p.degree()
            q = p
            ok = True
            for j in range(m):
                if abs(q(c)) > 1e-6 * scale * factorial(j + 1):
                    ok = False
                    break
                q = q.deriv()
            if not ok:
                out.extend([[v] for v in cl])
                continue
        out.append(cl)
    return out


def roots(phi: BinaryForm, cluster_radius: float = 1e-4) -> RootSet:
    """Projective roots via companion-matrix eigenvalues of ``phi(1, lam)``.

    Each simple root gets one Newton polish step.  Eigenvalues of a root of
    multiplicity m spread by ~eps**(1/m), so clustering uses a radius
    well above 1e-7 and replaces a cluster by its mean.
    """
    if phi.is_zero:
        raise DomainError("the zero form has no root set")
    c = phi.coeffs
    n = phi.degree
    scale = np.abs(c).max()
    # t = lam s: phi(1, lam) = sum c_i lam^i; vanishing top coefficients -> root at [0, 1].
    top = n
    while top > 0 and abs(c[top]) <= 1e-14 * scale:
        top -= 1
    n_inf = n - top
    finite = []
    if top > 0:
        poly = c[: top + 1] / c[top]
        comp = np.zeros((top, top), dtype=complex)
        comp[1:, :-1] = np.eye(top - 1)
        comp[:, -1] = -poly[:-1]
        finite = list(np.linalg.eigvals(comp))
    points, mults = [], []
    p = np.polynomial.polynomial.Polynomial(c[: top + 1])
    for cl in _validated_clusters(finite, p, cluster_radius):
        lam = complex(np.mean(cl))
        if len(cl) == 1:
            dp = p.deriv()(lam)
            if dp != 0:
                lam = lam - p(lam) / dp
        points.append(_normalize(1.0 + 0j, lam))
        mults.append(len(cl))
    if n_inf:
        points.append((0j, 1.0 + 0j))
        mults.append(n_inf)
    return RootSet(tuple(points), tuple(mults))


# ---------------------------------------------------------------------------
# Symmetric spinors
# ---------------------------------------------------------------------------

def lower(T, axes=None):
    """Lower the given spinor axes (default: all) with ``psi_A = psi^P eps_{PA}``."""
    T = np.asarray(T) if not isinstance(T, jets.Jet) else T
    ndim = T.ndim
    axes = range(ndim) if axes is None else axes
    for ax in axes:
        T = _apply_on_axis(T, EPS.T, ax)
    return T


def raise_(T, axes=None):
    """Raise the given spinor axes with ``psi^A = eps^{AB} psi_B``."""
    ndim = T.ndim
    axes = range(ndim) if axes is None else axes
    for ax in axes:
        T = _apply_on_axis(T, EPS, ax)
    return T


def _apply_on_axis(T, M, ax):
    # new[..., A, ...] = sum_B M[A, B] T[..., B, ...]
    ax = ax % T.ndim
    letters = "abcdefghijklmnopqrstuvw"[: T.ndim]
    src = letters
    dst = letters[:ax] + "Z" + letters[ax + 1 :]
    return jets.einsum(f"Z{letters[ax]},{src}->{dst}", M, T) if isinstance(T, jets.Jet) else np.einsum(
        f"Z{letters[ax]},{src}->{dst}", M, T
    )


def symmetrize(T, axes=None):
    """Symmetrize over a subset of axes (default: all)."""
    ndim = T.ndim
    axes = list(range(ndim)) if axes is None else [a % ndim for a in axes]
    perms = list(itertools.permutations(axes))
    total = None
    for perm in perms:
        order = list(range(ndim))
        for a, b in zip(axes, perm):
            order[a] = b
        term = T.transpose(tuple(order))
        total = term if total is None else total + term
    return total * (1.0 / len(perms))


def _ones_count_table(valence: int):
    return np.array(
        [sum(idx) for idx in itertools.product((0, 1), repeat=valence)]
    ).reshape((2,) * valence)


@dataclass(frozen=True)
class SymmetricSpinor:
    """Totally symmetric spinor of given valence, stored by its ``valence + 1``
    independent entries ``phi_{0..0 1..1}`` (k ones at position k), indices down."""

    valence: int
    components: np.ndarray = field(repr=False)

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=complex)
        if comps.shape != (self.valence + 1,):
            raise DomainError("need valence + 1 components")
        object.__setattr__(self, "components", comps)

    def tensor(self) -> np.ndarray:
        """Full ``(2,)*valence`` array, indices down."""
        return self.components[_ones_count_table(self.valence)]

    @classmethod
    def from_tensor(cls, T) -> "SymmetricSpinor":
        T = np.asarray(T)
        n = T.ndim
        comps = [T[(0,) * (n - k) + (1,) * k] for k in range(n + 1)]
        return cls(n, np.array(comps))

    def raised(self) -> np.ndarray:
        """Full tensor with all indices up."""
        return raise_(self.tensor())


def to_spinor(phi: BinaryForm) -> SymmetricSpinor:
    """Symmetric spinor with ``phi = phi_{A..D} pi^A..pi^D``, ``pi^A = [t, -s]``."""
    n = phi.degree
    comps = [phi.coeffs[n - k] * (-1) ** k / comb(n, k) for k in range(n + 1)]
    return SymmetricSpinor(n, np.array(comps))


def from_spinor(sigma: SymmetricSpinor) -> BinaryForm:
    n = sigma.valence
    c = np.zeros(n + 1, dtype=complex)
    for k in range(n + 1):
        c[n - k] = sigma.components[k] * (-1) ** k * comb(n, k)
    return BinaryForm(c)


def spinor_tensor_from_coeffs(c):
    """Full lower-index spinor tensor from raw form coefficients (numeric or jet)."""
    n = c.shape[-1] - 1
    table = _ones_count_table(n)
    sel = np.array([n - k for k in range(n + 1)])
    signs = np.array([(-1) ** k / comb(n, k) for k in range(n + 1)])
    comps = c[..., sel] * signs
    return comps[..., table] if not isinstance(comps, jets.Jet) else comps[(Ellipsis,) + (table,)]


def full_contraction(T1, T2):
    """``T1_{A..D} T2^{A..D}`` for two lower-index tensors of equal valence."""
    up = raise_(T2)
    n = T1.ndim
    letters = "abcdefgh"[:n]
    return np.einsum(f"{letters},{letters}->", T1, up)
