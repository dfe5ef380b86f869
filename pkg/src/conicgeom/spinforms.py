"""Spinor-valued forms on the space of conics.

Arrays carry spinor axes first (each of length 2) and coordinate (form)
axes last.  Entries may be numbers or :class:`~conicgeom.jets.Jet` values.

``e^{ABCD}`` is the symmetric spinor of one-forms with
``e1 = e^{1111}, e2 = e^{0111}, e3 = e^{0011}, e4 = e^{0001}, e5 = e^{0000}``,
so that ``S = pi_A pi_B pi_C pi_D e^{ABCD}`` with ``pi_A = [s, t]``.
"""

from __future__ import annotations

import itertools
from math import comb

import numpy as np

from . import jets
from .quantics import EPS

_LETTERS = "ABCDEFGHIJKLMN"


def _einsum(spec, a, b):
    return jets.einsum(spec, a, b)


def ones_index(valence: int) -> np.ndarray:
    return np.array([sum(i) for i in itertools.product((0, 1), repeat=valence)]).reshape(
        (2,) * valence
    )


def spinor_coframe(e):
    """``e^{ABCD}`` (upper indices) from coframe rows ``e1..e5``: shape (2,2,2,2,n)."""
    rows = 4 - ones_index(4)
    return e[rows]


def raise_axis(T, ax):
    """``psi^A = eps^{AB} psi_B`` on one axis."""
    return _move(T, EPS, ax)


def lower_axis(T, ax):
    """``psi_A = psi^P eps_{PA}`` on one axis."""
    return _move(T, EPS.T, ax)


def _move(T, M, ax):
    n = T.ndim
    letters = "abcdefghijklmnopqrstuvw"[:n]
    dst = letters[:ax] + "Y" + letters[ax + 1:]
    return _einsum(f"Y{letters[ax]},{letters}->{dst}", M, T)


def lower_axes(T, axes):
    for ax in axes:
        T = lower_axis(T, ax)
    return T


def raise_axes(T, axes):
    for ax in axes:
        T = raise_axis(T, ax)
    return T


def symmetrize_axes(T, axes):
    axes = list(axes)
    perms = list(itertools.permutations(axes))
    out = None
    for perm in perms:
        order = list(range(T.ndim))
        for a, b in zip(axes, perm):
            order[a] = b
        term = T.transpose(tuple(order)) if not isinstance(T, jets.Jet) else T.transpose(*order)
        out = term if out is None else out + term
    return out * (1.0 / len(perms))


def wedge11(alpha, beta):
    """Wedge of one-forms on the last axis (leading spinor axes broadcast as given).

    ``alpha`` has shape ``P + (n,)`` and ``beta`` ``Q + (n,)``; result ``P + Q + (n, n)``.
    """
    pa = alpha.ndim - 1
    qa = beta.ndim - 1
    la = "abcdefgh"[:pa]
    lb = "ijklmnop"[:qa]
    t = _einsum(f"{la}x,{lb}y->{la}{lb}xy", alpha, beta)
    n = t.ndim
    order = list(range(n - 2)) + [n - 1, n - 2]
    tt = t.transpose(*order) if isinstance(t, jets.Jet) else t.transpose(order)
    return t - tt


def sigma2(E):
    """``sigma^{AB} = (1/48) e^{ACDE} ^ e^B_{CDE}``: shape (2,2,n,n)."""
    low = lower_axes(E, [1, 2, 3])  # e^B_{CDE}
    w = wedge11(E, low)  # axes A C D E | B C' D' E' | x y
    # contract C,D,E of the first with the lowered C,D,E of the second
    n = E.shape[-1]
    ws = w
    out = None
    for c, d, e_ in itertools.product((0, 1), repeat=3):
        term = ws[:, c, d, e_, :, c, d, e_]
        out = term if out is None else out + term
    return out * (1.0 / 48.0)


def sigma6(E):
    """``sigma^{ABCDEF} = (1/48) e^{G(ABC} ^ e^{DEF)}_G``: shape (2,)*6 + (n,n).

    The symmetrization is normalized (average over permutations).  With this
    weight the expansion of ``e_{ABCD} ^ sigma`` in the basis ``*sigma`` has
    the constants in :data:`conicgeom.asd4.E_SIGMA6_CONSTANTS`.
    """
    low = lower_axis(E, 3)  # e^{DEF}_G with G last spinor axis
    # e^{GABC}: G first.  Build sum_G e^{GABC} ^ e^{DEF}_G
    w = wedge11(E, low)  # G A B C | D E F G' | x y
    out = None
    for g in (0, 1):
        term = w[g, :, :, :, :, :, :, g]
        out = term if out is None else out + term
    return symmetrize_axes(out, range(6)) * (1.0 / 48.0)


def components_to_spinor(c):
    """Lower-index ``F_{ABCD}`` from coframe components ``dF = sum c_i e^i``.

    ``dF = F_{ABCD} e^{ABCD}``, so ``F_{(k ones)} = c_{row(k)} / C(4, k)``.
    """
    idx = ones_index(4)
    rows = 4 - idx
    weights = np.array([1.0 / comb(4, k) for k in range(5)])[idx]
    return c[rows] * weights


def coframe_components(e, covector):
    """Solve ``covector = sum_i c_i e^i`` for ``c``."""
    if isinstance(e, jets.Jet) or isinstance(covector, jets.Jet):
        einv = jets.inv(e.T if isinstance(e, jets.Jet) else np.asarray(e).T)
        return _einsum("ij,j->i", einv, covector)
    return np.linalg.solve(np.asarray(e).T, covector)


def big_sigma(Fs, s2, s6):
    """``Sigma^{AB} = F^{AB}_{CD} sigma^{CD} + (15/2) F_{CDEF} sigma^{ABCDEF}``."""
    Fup2 = raise_axes(Fs, [0, 1])
    t1 = _einsum("ABCD,CDxy->ABxy", Fup2, s2)
    t2 = _einsum("CDEF,ABCDEFxy->ABxy", Fs, s6)
    return t1 + t2 * 7.5


def full_norm2(Fs):
    """``|F|^2 = F_{ABCD} F^{ABCD}``."""
    return _einsum("ABCD,ABCD->", Fs, raise_axes(Fs, range(4)))


def _antisym_last(T, k):
    from .tensorlab import _antisymmetrize_last

    return _antisymmetrize_last(T, k)


def d_at(form_jet, nspin: int) -> np.ndarray:
    """Exterior derivative at the base point of a jet with ``nspin`` leading spinor axes."""
    grad = form_jet.gradient()
    k = grad.ndim - 1 - nspin
    grad = np.moveaxis(grad, -1, nspin)
    return _antisym_last(grad, k + 1) / _fact(k)


def _fact(k):
    from math import factorial

    return float(factorial(k))


def wedge_at(alpha, beta, nspin_a: int, nspin_b: int) -> np.ndarray:
    """Numeric wedge of spinor-valued forms; spinor axes of alpha then beta first."""
    p = alpha.ndim - nspin_a
    q = beta.ndim - nspin_b
    prod = np.multiply.outer(alpha, beta)
    # reorder: spin_a, spin_b, form_a, form_b
    sa = list(range(nspin_a))
    fa = list(range(nspin_a, nspin_a + p))
    off = nspin_a + p
    sb = [off + i for i in range(nspin_b)]
    fb = [off + nspin_b + i for i in range(q)]
    prod = np.transpose(prod, sa + sb + fa + fb)
    return _antisym_last(prod, p + q) / (_fact(p) * _fact(q))


def spin_connection(E):
    """``Gamma[A, B] = Gamma^A_B`` one-forms (numeric ``E = e^{ABCD}`` at a point)."""
    e1, e2, e4, e5 = E[1, 1, 1, 1], E[0, 1, 1, 1], E[0, 0, 0, 1], E[0, 0, 0, 0]
    g11 = 0.25 * (e5 - e1)
    return np.array([[-g11, -e2], [-e4, g11]])
