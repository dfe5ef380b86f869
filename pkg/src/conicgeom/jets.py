"""Truncated multivariate Taylor arithmetic ("jets").

A :class:`Jet` holds the Taylor coefficients of a function of ``nvars``
variables up to total degree ``order`` at a fixed base point.  The
coefficient array has shape ``(..., M)``: the leading axes index an array of
jets (tensor components, say) and the last axis runs over the ``M``
monomials of the :class:`JetSpace`.  Coefficients may be real or complex.

Mixed partials are exact up to rounding: the coefficient of the monomial
``x**alpha`` is ``d^alpha f / alpha!``.
"""

from __future__ import annotations

import functools
import itertools
import math
from typing import Callable, Sequence

import numpy as np


class JetSpace:
    """Monomial bookkeeping for jets in ``nvars`` variables to ``order``."""

    def __init__(self, nvars: int, order: int):
        if nvars < 1 or order < 0:
            raise ValueError("need nvars >= 1 and order >= 0")
        self.nvars = nvars
        self.order = order
        monos = [
            alpha
            for deg in range(order + 1)
            for alpha in _compositions(deg, nvars)
        ]
        self.monomials = np.array(monos, dtype=int).reshape(-1, nvars)
        self.index = {m: i for i, m in enumerate(monos)}
        self.size = len(monos)
        self.degree = self.monomials.sum(axis=1)
        self.factorial = np.array(
            [math.prod(math.factorial(k) for k in m) for m in monos], dtype=float
        )

        ii, jj, kk = [], [], []
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                if sum(a) + sum(b) <= order:
                    ii.append(i)
                    jj.append(j)
                    kk.append(self.index[tuple(x + y for x, y in zip(a, b))])
        self._ii = np.array(ii)
        self._jj = np.array(jj)
        scatter = np.zeros((len(kk), self.size))
        scatter[np.arange(len(kk)), kk] = 1.0
        self._scatter = scatter
        table = np.zeros((self.size, self.size, self.size))
        table[self._ii, self._jj, kk] = 1.0
        self.table = table

    def __repr__(self):
        return f"JetSpace(nvars={self.nvars}, order={self.order})"

    def variables(self, point) -> "Jet":
        """Jet of shape ``(nvars,)`` holding the coordinate functions at ``point``."""
        point = np.asarray(point)
        if point.shape != (self.nvars,):
            raise ValueError(f"point must have shape ({self.nvars},)")
        c = np.zeros((self.nvars, self.size), dtype=np.result_type(point, float))
        c[:, 0] = point
        for i in range(self.nvars):
            if self.order >= 1:
                e = [0] * self.nvars
                e[i] = 1
                c[i, self.index[tuple(e)]] = 1.0
        return Jet(self, c)

    def constant(self, value) -> "Jet":
        value = np.asarray(value)
        c = np.zeros(value.shape + (self.size,), dtype=np.result_type(value, float))
        c[..., 0] = value
        return Jet(self, c)

    @functools.cached_property
    def lowered(self) -> "JetSpace":
        return get_space(self.nvars, self.order - 1)

    @functools.cached_property
    def _partial_maps(self):
        # For each variable i: (source indices, multipliers) in this space
        # producing the coefficients of d/dx_i in the lowered space.
        low = self.lowered
        maps = []
        for i in range(self.nvars):
            src = np.empty(low.size, dtype=int)
            mult = np.empty(low.size)
            for k, beta in enumerate(low.monomials):
                up = list(beta)
                up[i] += 1
                src[k] = self.index[tuple(up)]
                mult[k] = up[i]
            maps.append((src, mult))
        return maps


def _compositions(total: int, parts: int):
    """Exponent tuples of ``parts`` entries summing to ``total`` (graded-lex order)."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@functools.lru_cache(maxsize=None)
def get_space(nvars: int, order: int) -> JetSpace:
    return JetSpace(nvars, order)


class Jet:
    """Array of truncated Taylor series sharing one :class:`JetSpace`."""

    __slots__ = ("space", "c")
    __array_priority__ = 1000
    __array_ufunc__ = None

    def __init__(self, space: JetSpace, coeffs):
        self.space = space
        self.c = np.asarray(coeffs)
        if self.c.shape[-1] != space.size:
            raise ValueError("coefficient axis does not match the jet space")

    # -- structure -----------------------------------------------------------
    @property
    def shape(self):
        return self.c.shape[:-1]

    @property
    def ndim(self):
        return self.c.ndim - 1

    def __len__(self):
        return self.c.shape[0]

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.space, self.c[key + (slice(None),)])

    def __setitem__(self, key, value):
        if not isinstance(key, tuple):
            key = (key,)
        key = key + (slice(None),)
        if not isinstance(value, Jet):
            value = self.space.constant(value)
        if np.iscomplexobj(value.c) and not np.iscomplexobj(self.c):
            self.c = self.c.astype(complex)
        self.c[key] = value.c

    def __repr__(self):
        return f"Jet(shape={self.shape}, {self.space!r}, value={self.value!r})"

    def copy(self):
        return Jet(self.space, self.c.copy())

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.space, self.c.reshape(tuple(shape) + (self.space.size,)))

    def transpose(self, *axes):
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        elif len(axes) == 1 and isinstance(axes[0], tuple):
            axes = axes[0]
        return Jet(self.space, self.c.transpose(tuple(axes) + (self.ndim,)))

    @property
    def T(self):
        return self.transpose()

    def sum(self, axis=None):
        if axis is None:
            axis = tuple(range(self.ndim))
        axes = np.atleast_1d(axis)
        axes = tuple(int(a) % self.ndim for a in axes)
        return Jet(self.space, self.c.sum(axis=axes))

    # -- channels ------------------------------------------------------------
    @property
    def value(self):
        return self.c[..., 0]

    def derivative(self, alpha: Sequence[int]):
        """``d^alpha f`` at the base point."""
        k = self.space.index[tuple(alpha)]
        return self.c[..., k] * self.space.factorial[k]

    def gradient(self):
        """First partials, new trailing axis of length ``nvars``."""
        n = self.space.nvars
        out = np.empty(self.shape + (n,), dtype=self.c.dtype)
        for i in range(n):
            e = [0] * n
            e[i] = 1
            out[..., i] = self.derivative(e)
        return out

    def hessian(self):
        n = self.space.nvars
        out = np.empty(self.shape + (n, n), dtype=self.c.dtype)
        for i in range(n):
            for j in range(n):
                e = [0] * n
                e[i] += 1
                e[j] += 1
                out[..., i, j] = self.derivative(e)
        return out

    def third(self):
        n = self.space.nvars
        out = np.empty(self.shape + (n, n, n), dtype=self.c.dtype)
        for i, j, k in itertools.product(range(n), repeat=3):
            e = [0] * n
            e[i] += 1
            e[j] += 1
            e[k] += 1
            out[..., i, j, k] = self.derivative(e)
        return out

    def partial(self, i: int) -> "Jet":
        """``d/dx_i`` as a jet one order lower."""
        if self.space.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, mult = self.space._partial_maps[i]
        return Jet(self.space.lowered, self.c[..., src] * mult)

    def d(self) -> "Jet":
        """All first partials as a jet of shape ``shape + (nvars,)``, one order lower."""
        parts = [self.partial(i).c for i in range(self.space.nvars)]
        return Jet(self.space.lowered, np.stack(parts, axis=-2))

    def truncate(self, order: int) -> "Jet":
        if order > self.space.order:
            raise ValueError("cannot raise jet order")
        low = get_space(self.space.nvars, order)
        idx = [self.space.index[tuple(m)] for m in low.monomials]
        return Jet(low, self.c[..., idx])

    def compose(self, subs: Sequence["Jet"]) -> "Jet":
        """Evaluate the Taylor polynomial at displacements ``subs`` (scalar jets)."""
        if len(subs) != self.space.nvars:
            raise ValueError("need one displacement per variable")
        target = subs[0].space
        vals = [None] * self.space.size
        vals[0] = target.constant(1.0)
        for k, alpha in enumerate(self.space.monomials[1:], start=1):
            i = int(np.nonzero(alpha)[0][0])
            prev = list(alpha)
            prev[i] -= 1
            vals[k] = vals[self.space.index[tuple(prev)]] * subs[i]
        table = np.stack([np.broadcast_to(v.c, (target.size,)) for v in vals])
        return Jet(target, np.einsum("...a,am->...m", self.c, table))

    # -- arithmetic ----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError(f"jet space mismatch: {self.space} vs {other.space}")
            return other
        return self.space.constant(other)

    def __add__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other)
            c = self.c + np.zeros(other.shape + (1,), dtype=other.dtype)
            c = c.copy()
            c[..., 0] = c[..., 0] + other
            return Jet(self.space, c)
        return Jet(self.space, self.c + self._coerce(other).c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.c)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.c * np.asarray(other)[..., None])
        other = self._coerce(other)
        sp = self.space
        prod = self.c[..., sp._ii] * other.c[..., sp._jj]
        return Jet(sp, prod @ sp._scatter)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.c / np.asarray(other)[..., None])
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = self.space.constant(np.ones(self.shape, dtype=self.c.dtype))
            base = self
            while p:
                if p & 1:
                    out = out * base
                base = base * base
                p >>= 1
            return out
        return self._power(p)

    def conj(self):
        return Jet(self.space, np.conj(self.c))

    conjugate = conj

    @property
    def real(self):
        return Jet(self.space, self.c.real)

    @property
    def imag(self):
        return Jet(self.space, self.c.imag)

    # -- elementary functions -----------------------------------------------
    def _series(self, taylor: Sequence[np.ndarray]) -> "Jet":
        """Compose with a univariate series ``sum taylor[k] * delta**k``."""
        delta = self.copy()
        delta.c = delta.c.astype(np.result_type(delta.c, *taylor))
        delta.c[..., 0] = 0.0
        out = self.space.constant(taylor[0])
        power = None
        for k in range(1, self.space.order + 1):
            power = delta if power is None else power * delta
            out = out + power * taylor[k]
        return out

    def reciprocal(self):
        x0 = self.value
        n = self.space.order
        return self._series([(-1.0) ** k / x0 ** (k + 1) for k in range(n + 1)])

    def _power(self, p):
        x0 = self.value
        n = self.space.order
        coeffs = []
        binom = 1.0
        for k in range(n + 1):
            coeffs.append(binom * x0 ** (p - k))
            binom = binom * (p - k) / (k + 1)
        return self._series(coeffs)

    def sqrt(self):
        return self._power(0.5)

    def exp(self):
        e0 = np.exp(self.value)
        return self._series([e0 / math.factorial(k) for k in range(self.space.order + 1)])

    def log(self):
        x0 = self.value
        coeffs = [np.log(x0)]
        for k in range(1, self.space.order + 1):
            coeffs.append((-1.0) ** (k + 1) / (k * x0**k))
        return self._series(coeffs)

    def sin(self):
        s0, c0 = np.sin(self.value), np.cos(self.value)
        cyc = [s0, c0, -s0, -c0]
        return self._series([cyc[k % 4] / math.factorial(k) for k in range(self.space.order + 1)])

    def cos(self):
        s0, c0 = np.sin(self.value), np.cos(self.value)
        cyc = [c0, -s0, -c0, s0]
        return self._series([cyc[k % 4] / math.factorial(k) for k in range(self.space.order + 1)])


# -- dispatching helpers used by closed-form evaluators ---------------------

def exp(x):
    return x.exp() if isinstance(x, Jet) else np.exp(x)


def log(x):
    return x.log() if isinstance(x, Jet) else np.log(x)


def sqrt(x):
    return x.sqrt() if isinstance(x, Jet) else np.sqrt(x)


def sin(x):
    return x.sin() if isinstance(x, Jet) else np.sin(x)


def cos(x):
    return x.cos() if isinstance(x, Jet) else np.cos(x)


def conj(x):
    return x.conj() if isinstance(x, Jet) else np.conj(x)


def value(x):
    return x.value if isinstance(x, Jet) else np.asarray(x)


def stack(items, axis=0):
    """Stack jets (or constants) sharing a space along a new leading axis."""
    space = next((x.space for x in items if isinstance(x, Jet)), None)
    if space is None:
        return np.stack([np.asarray(x) for x in items], axis=axis)
    coeffs = []
    for x in items:
        if not isinstance(x, Jet):
            x = space.constant(x)
        coeffs.append(x.c)
    dtype = np.result_type(*coeffs)
    shape = np.broadcast_shapes(*(c.shape for c in coeffs))
    coeffs = [np.broadcast_to(c, shape).astype(dtype) for c in coeffs]
    if axis < 0:
        axis -= 1
    return Jet(space, np.stack(coeffs, axis=axis))


def einsum(spec: str, a, b):
    """Two-operand einsum over the leading axes, multiplying jets elementwise."""
    ins, out = spec.split("->")
    sa, sb = ins.split(",")
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.einsum(spec, a, b)
    free = [ch for ch in "zyxwvutsrqponmlkjihgfedcba" if ch not in spec]
    u, v, w = free[:3]
    if not isinstance(a, Jet):
        return Jet(b.space, np.einsum(f"{sa},{sb}{w}->{out}{w}", a, b.c))
    if not isinstance(b, Jet):
        return Jet(a.space, np.einsum(f"{sa}{v},{sb}->{out}{v}", a.c, b))
    if a.space is not b.space:
        raise ValueError("jet space mismatch")
    return Jet(
        a.space,
        np.einsum(f"{sa}{u},{sb}{v},{u}{v}{w}->{out}{w}", a.c, b.c, a.space.table, optimize=True),
    )


def matmul(a, b):
    return einsum("...ij,...jk->...ik", a, b)


def inv(a: Jet) -> Jet:
    """Inverse of a jet-valued square matrix (trailing two axes)."""
    if not isinstance(a, Jet):
        return np.linalg.inv(a)
    a0inv = np.linalg.inv(a.value)
    nil = a - a.value
    step = einsum("...ij,...jk->...ik", -a0inv, nil)
    term = a.space.constant(np.broadcast_to(np.eye(a.shape[-1]), a.shape).astype(a0inv.dtype))
    total = term
    for _ in range(a.space.order):
        term = matmul(step, term)
        total = total + term
    return matmul(total, a0inv)


def det(a):
    """Determinant via cofactor expansion (small matrices only)."""
    n = a.shape[-1]
    if n == 1:
        return a[..., 0, 0]
    if n == 2:
        return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    total = 0
    for j in range(n):
        rows = list(range(1, n))
        cols = [c for c in range(n) if c != j]
        minor = stack([stack([a[..., r, c] for c in cols], axis=-1) for r in rows], axis=-2)
        total = total + (-1) ** j * a[..., 0, j] * det(minor)
    return total


def jet_of(func: Callable, point, order: int, *args, **kwargs) -> Jet:
    """Jet of ``func`` at ``point``; ``func`` receives a shape-(d,) coordinate jet."""
    point = np.asarray(point)
    space = get_space(point.shape[0], order)
    out = func(space.variables(point), *args, **kwargs)
    if not isinstance(out, Jet):
        out = space.constant(out)
    return out
