"""Truncated multivariate Taylor arithmetic (jets) with a finite-difference oracle.

A :class:`Jet` holds every partial derivative of a (possibly tensor valued)
function up to a fixed total order at one point. Arithmetic on jets follows
the Leibniz rule exactly, so composing the usual operations yields exact
derivatives up to round-off. Coefficients are stored Taylor-normalised
internally; :meth:`Jet.partial` and :meth:`Jet.coeffs` expose raw partials.

Multi-indices are sorted tuples of axes, e.g. ``(0, 0, 1)`` is d^3/dx0^2 dx1.
"""

from __future__ import annotations

import itertools
import math
import string
from collections import Counter
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, SingularMetric

MAX_ORDER = 6


class JetSpace:
    """Monomial bookkeeping for jets in ``dim`` variables truncated at ``order``."""

    def __init__(self, dim: int, order: int):
        if dim < 1 or not 0 <= order <= MAX_ORDER:
            raise ValueError(f"unsupported jet space dim={dim}, order={order}")
        self.dim = dim
        self.order = order
        monos: list[tuple[int, ...]] = []
        self.size_upto: list[int] = []
        for d in range(order + 1):
            monos.extend(itertools.combinations_with_replacement(range(dim), d))
            self.size_upto.append(len(monos))
        self.monomials = monos
        self.index = {m: i for i, m in enumerate(monos)}
        self.size = len(monos)
        self.degree = np.array([len(m) for m in monos])
        self.weight = np.array(
            [math.prod(math.factorial(k) for k in Counter(m).values()) for m in monos],
            dtype=float,
        )
        self._mul = None

    def mul_table(self):
        """Index pairs (ia, ib) grouped by product monomial, with reduceat starts."""
        if self._mul is None:
            ia, ib, ic = [], [], []
            for i, a in enumerate(self.monomials):
                room = self.order - len(a)
                for j in range(self.size_upto[room]):
                    ia.append(i)
                    ib.append(j)
                    ic.append(self.index[tuple(sorted(a + self.monomials[j]))])
            ia, ib, ic = map(np.asarray, (ia, ib, ic))
            perm = np.argsort(ic, kind="stable")
            ic = ic[perm]
            starts = np.flatnonzero(np.r_[True, ic[1:] != ic[:-1]])
            self._mul = (ia[perm], ib[perm], starts)
        return self._mul

    def lower(self) -> "JetSpace":
        return jet_space(self.dim, self.order - 1)

    @property
    def diff_table(self):
        """Source indices and factors for d/dx_v, mapping into the order-1 space."""
        return _diff_table(self.dim, self.order)


@lru_cache(maxsize=None)
def jet_space(dim: int, order: int) -> JetSpace:
    return JetSpace(dim, order)


@lru_cache(maxsize=None)
def _diff_table(dim: int, order: int):
    hi = jet_space(dim, order)
    lo = jet_space(dim, order - 1)
    src = np.empty((lo.size, dim), dtype=int)
    fac = np.empty((lo.size, dim))
    for i, a in enumerate(lo.monomials):
        for v in range(dim):
            src[i, v] = hi.index[tuple(sorted(a + (v,)))]
            fac[i, v] = a.count(v) + 1
    return src, fac


def _pad(arr: np.ndarray, ndim: int) -> np.ndarray:
    """Insert singleton axes after the leading coefficient axis."""
    extra = ndim - (arr.ndim - 1)
    if extra <= 0:
        return arr
    return arr.reshape(arr.shape[:1] + (1,) * extra + arr.shape[1:])


class Jet:
    """Tensor-valued truncated Taylor polynomial.

    ``c`` has shape ``(space.size, *shape)``; ``c[0]`` is the value.
    """

    __slots__ = ("space", "c")
    __array_ufunc__ = None

    def __init__(self, space: JetSpace, c: np.ndarray):
        self.space = space
        self.c = c

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, space: JetSpace, value) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((space.size,) + value.shape)
        c[0] = value
        return cls(space, c)

    @classmethod
    def variables(cls, point, order: int) -> "Jet":
        """The identity map as a vector jet at ``point``."""
        point = np.asarray(point, dtype=float).reshape(-1)
        space = jet_space(point.size, order)
        c = np.zeros((space.size, point.size))
        c[0] = point
        if order >= 1:
            c[1 : 1 + point.size] = np.eye(point.size)
        return cls(space, c)

    # basic properties ---------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.c.shape[1:]

    @property
    def ndim(self) -> int:
        return self.c.ndim - 1

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def __repr__(self) -> str:
        return f"Jet(dim={self.dim}, order={self.order}, shape={self.shape})"

    def __len__(self) -> int:
        return self.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    # derivative access --------------------------------------------------
    def partial(self, idx: Sequence[int] = ()) -> np.ndarray:
        """Raw partial derivative for the multi-index ``idx`` (any order of axes)."""
        key = tuple(sorted(idx))
        if len(key) > self.order:
            raise ValueError(f"multi-index {key} exceeds jet order {self.order}")
        i = self.space.index[key]
        return self.c[i] * self.space.weight[i]

    def coeffs(self) -> dict[tuple[int, ...], np.ndarray]:
        """All raw partials keyed by canonical multi-index."""
        s = self.space
        return {m: self.c[i] * s.weight[i] for i, m in enumerate(s.monomials)}

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return Jet(jet_space(self.dim, order), self.c[: self.space.size_upto[order]])

    def diff(self, v: int) -> "Jet":
        """Partial derivative along variable ``v``; the order drops by one."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = self.space.diff_table
        c = self.c[src[:, v]] * fac[:, v].reshape((-1,) + (1,) * self.ndim)
        return Jet(self.space.lower(), c)

    def jacobian(self) -> "Jet":
        """All first partials stacked along a new trailing axis."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = self.space.diff_table
        c = self.c[src]  # (N_lo, dim, *shape)
        c = c * fac.reshape(fac.shape + (1,) * self.ndim)
        c = np.moveaxis(c, 1, -1)
        return Jet(self.space.lower(), c)

    # shape manipulation -------------------------------------------------
    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.space, self.c[(slice(None),) + key])

    def transpose(self, *axes: int) -> "Jet":
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        return Jet(self.space, self.c.transpose((0,) + tuple(a + 1 for a in axes)))

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.space, self.c.reshape((self.c.shape[0],) + tuple(shape)))

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axes = tuple(range(1, self.c.ndim))
        elif isinstance(axis, int):
            axes = (axis % self.ndim + 1,)
        else:
            axes = tuple(a % self.ndim + 1 for a in axis)
        return Jet(self.space, self.c.sum(axis=axes))

    # arithmetic ---------------------------------------------------------
    def _align(self, other: "Jet") -> tuple["Jet", "Jet"]:
        if other.dim != self.dim:
            raise ValueError("jets live in different variable spaces")
        k = min(self.order, other.order)
        return self.truncate(k), other.truncate(k)

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            nd = max(a.ndim, b.ndim)
            return Jet(a.space, _pad(a.c, nd) + _pad(b.c, nd))
        other = np.asarray(other, dtype=float)
        shape = np.broadcast_shapes(self.shape, other.shape)
        c = np.broadcast_to(_pad(self.c, len(shape)), self.c.shape[:1] + shape).copy()
        c[0] += other
        return Jet(self.space, c)

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
        if isinstance(other, Jet):
            a, b = self._align(other)
            ia, ib, starts = a.space.mul_table()
            nd = max(a.ndim, b.ndim)
            prod = _pad(a.c[ia], nd) * _pad(b.c[ib], nd)
            return Jet(a.space, np.add.reduceat(prod, starts, axis=0))
        other = np.asarray(other, dtype=float)
        nd = max(self.ndim, other.ndim)
        return Jet(self.space, _pad(self.c, nd) * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        other = np.asarray(other, dtype=float)
        if np.any(other == 0):
            raise DomainError("division by zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        other = np.asarray(other, dtype=float)
        if np.any(other <= 0):
            raise DomainError("non-positive base with jet exponent")
        return exp(self * np.log(other))

    def __matmul__(self, other):
        return _matmul(self, other)

    def __rmatmul__(self, other):
        return _matmul(other, self)


def _matmul(a, b):
    na = a.ndim if isinstance(a, Jet) else np.ndim(a)
    nb = b.ndim if isinstance(b, Jet) else np.ndim(b)
    spec = {(2, 2): "ij,jk->ik", (2, 1): "ij,j->i", (1, 2): "i,ij->j", (1, 1): "i,i->"}
    if (na, nb) not in spec:
        raise ValueError("matmul supports vectors and matrices only")
    return einsum(spec[(na, nb)], a, b)


# ---------------------------------------------------------------------------
# tensor contraction
# ---------------------------------------------------------------------------


def _parse_einsum(subscripts: str, nops: int):
    lhs, rhs = subscripts.replace(" ", "").split("->")
    ins = lhs.split(",")
    if len(ins) != nops:
        raise ValueError("operand count does not match subscripts")
    return ins, rhs


def _einsum2(sa: str, a, sb: str, b, out: str):
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    free = next(ch for ch in string.ascii_letters if ch not in sa + sb + out)
    if ja and jb:
        a, b = a._align(b)
        ia, ib, starts = a.space.mul_table()
        prod = np.einsum(f"{free}{sa},{free}{sb}->{free}{out}", a.c[ia], b.c[ib])
        return Jet(a.space, np.add.reduceat(prod, starts, axis=0))
    if ja:
        return Jet(a.space, np.einsum(f"{free}{sa},{sb}->{free}{out}", a.c, np.asarray(b, float)))
    if jb:
        return Jet(b.space, np.einsum(f"{sa},{free}{sb}->{free}{out}", np.asarray(a, float), b.c))
    return np.einsum(f"{sa},{sb}->{out}", a, b)


def einsum(subscripts: str, *operands):
    """``numpy.einsum`` over a mix of jets and arrays (explicit ``->`` required)."""
    ins, out = _parse_einsum(subscripts, len(operands))
    if len(operands) == 1:
        (a,) = operands
        if isinstance(a, Jet):
            return Jet(a.space, np.einsum(f"Z{ins[0]}->Z{out}", a.c))
        return np.einsum(f"{ins[0]}->{out}", a)
    acc, sacc = operands[0], ins[0]
    for k in range(1, len(operands)):
        later = "".join(ins[k + 1 :]) + out
        keep = "".join(dict.fromkeys(ch for ch in sacc + ins[k] if ch in later))
        target = out if k == len(operands) - 1 else keep
        acc = _einsum2(sacc, acc, ins[k], operands[k], target)
        sacc = target
    return acc


# ---------------------------------------------------------------------------
# elementwise functions
# ---------------------------------------------------------------------------


def _compose(x: Jet, derivs: list[np.ndarray]) -> Jet:
    """f(x) from the derivatives of f at x.value (a Taylor series in x - x0)."""
    h = x - x.value
    k = x.order
    res = Jet.constant(x.space, derivs[k] / math.factorial(k))
    for j in range(k - 1, -1, -1):
        res = res * h + derivs[j] / math.factorial(j)
    return res


def _check(value, what: str):
    if not np.all(np.isfinite(value)):
        raise DomainError(f"{what} produced a non-finite value")
    return value


def _pow_derivs(x0: np.ndarray, a: float, k: int) -> list[np.ndarray]:
    out, coef = [], 1.0
    for j in range(k + 1):
        out.append(coef * x0 ** (a - j))
        coef *= a - j
    return out


def power(x, a):
    """x ** a with exact handling of non-negative integer exponents."""
    if isinstance(a, Jet):
        if isinstance(x, Jet):
            return exp(a * log(x))
        return a.__rpow__(x)
    a = float(a)
    if a.is_integer() and a >= 0:
        n = int(a)
        if not isinstance(x, Jet):
            return np.asarray(x, dtype=float) ** n
        result = Jet.constant(x.space, np.ones(x.shape))
        base = x
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result
    if not isinstance(x, Jet):
        x = np.asarray(x, dtype=float)
        if a.is_integer():
            if np.any(x == 0):
                raise DomainError("negative power of zero")
        elif np.any(x <= 0):
            raise DomainError("fractional power of a non-positive number")
        return x**a
    x0 = x.value
    if a.is_integer():
        if np.any(x0 == 0):
            raise DomainError("negative power of zero")
    elif np.any(x0 <= 0):
        raise DomainError("fractional power of a non-positive number")
    return _compose(x, _pow_derivs(x0, a, x.order))


def reciprocal(x):
    return power(x, -1.0)


def sqrt(x):
    if not isinstance(x, Jet):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("sqrt of a negative number")
        return np.sqrt(x)
    return power(x, 0.5)


def exp(x):
    if not isinstance(x, Jet):
        return _check(np.exp(x), "exp")
    e = _check(np.exp(x.value), "exp")
    return _compose(x, [e] * (x.order + 1))


def log(x):
    if not isinstance(x, Jet):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("log of a non-positive number")
        return np.log(x)
    x0 = x.value
    if np.any(x0 <= 0):
        raise DomainError("log of a non-positive number")
    derivs = [np.log(x0)]
    for j in range(1, x.order + 1):
        derivs.append((-1) ** (j - 1) * math.factorial(j - 1) * x0 ** (-j))
    return _compose(x, derivs)


def sin(x):
    if not isinstance(x, Jet):
        return np.sin(x)
    s, c = np.sin(x.value), np.cos(x.value)
    cycle = [s, c, -s, -c]
    return _compose(x, [cycle[j % 4] for j in range(x.order + 1)])


def cos(x):
    if not isinstance(x, Jet):
        return np.cos(x)
    s, c = np.sin(x.value), np.cos(x.value)
    cycle = [c, -s, -c, s]
    return _compose(x, [cycle[j % 4] for j in range(x.order + 1)])


def inv(m):
    """Matrix inverse of a square matrix jet via a terminating Neumann series."""
    if not isinstance(m, Jet):
        try:
            return np.linalg.inv(m)
        except np.linalg.LinAlgError as exc:
            raise SingularMetric(str(exc)) from exc
    try:
        a0 = np.linalg.inv(m.value)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric(str(exc)) from exc
    n = m.shape[0]
    x = -einsum("ij,jk->ik", a0, m - m.value)
    s = Jet.constant(m.space, np.eye(n))
    for _ in range(m.order):
        s = einsum("ij,jk->ik", x, s) + np.eye(n)
    return einsum("ij,jk->ik", s, a0)


def value_of(x) -> np.ndarray:
    """The point value of a jet, or the argument itself for plain numbers."""
    return x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------


def taylor_jet(f: Callable, p, k: int) -> Jet:
    """All partials of ``f`` at ``p`` up to total order ``k`` (k <= 5).

    ``f`` receives a scalar jet when ``p`` is a scalar and a vector jet
    (indexable, supports arithmetic) when ``p`` is a sequence.
    """
    if not 0 <= k <= 5:
        raise ValueError("jet order must be between 0 and 5")
    scalar = np.ndim(p) == 0
    z = Jet.variables(p, k)
    try:
        out = f(z[0] if scalar else z)
    except ZeroDivisionError as exc:
        raise DomainError(str(exc)) from exc
    if not isinstance(out, Jet):
        out = Jet.constant(z.space, out)
    _check(out.c, "jet evaluation")
    return out


# base step per total derivative order; see partial_fd
FD_BASE_STEP = {1: 1e-3, 2: 1e-3, 3: 5e-3, 4: 2e-2}


def fd_steps(p, order: int, h=None) -> np.ndarray:
    """Per-axis step ``base * max(1, |p_i|)``."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    base = FD_BASE_STEP[order] if h is None else float(h)
    return base * np.maximum(1.0, np.abs(p))


def _central(f, p: np.ndarray, counts: dict[int, int], steps: np.ndarray, scalar: bool):
    axes = sorted(counts)
    stencils = []
    for a in axes:
        k = counts[a]
        stencils.append(
            [((k / 2 - j) * steps[a], (-1) ** j * math.comb(k, j)) for j in range(k + 1)]
        )
    terms = []
    for combo in itertools.product(*stencils):
        q = p.copy()
        w = 1.0
        for a, (off, wt) in zip(axes, combo):
            q[a] += off
            w *= wt
        val = f(q[0] if scalar else q)
        val = float(np.asarray(val))
        if not math.isfinite(val):
            raise DomainError("finite-difference stencil left the domain")
        terms.append(w * val)
    scale = math.prod(steps[a] ** counts[a] for a in axes)
    # exact summation keeps cancellation noise out of high-order stencils
    return math.fsum(terms) / scale


def partial_fd(f: Callable, p, idx: Sequence[int], h=None, domain: Callable | None = None) -> float:
    """Central-difference estimate of a partial derivative of order <= 4.

    Tensor product of central k-th differences along each axis, followed by
    one Richardson level (h, h/2), so the error is O(h^4). ``h`` overrides the
    base step; the default depends on the derivative order (``FD_BASE_STEP``).
    ``domain`` is an optional predicate; a stencil point failing it raises
    DomainError, as does any non-finite evaluation.
    """
    idx = tuple(idx)
    if not 1 <= len(idx) <= 4:
        raise ValueError("partial_fd supports derivative orders 1..4")
    scalar = np.ndim(p) == 0
    p = np.atleast_1d(np.asarray(p, dtype=float)).copy()
    counts = Counter(idx)
    steps = fd_steps(p, len(idx), h)

    g = f
    if domain is not None:

        def g(q):
            if not domain(q):
                raise DomainError("finite-difference stencil left the domain")
            return f(q)

    try:
        d1 = _central(g, p, counts, steps, scalar)
        d2 = _central(g, p, counts, steps / 2, scalar)
    except (ZeroDivisionError, FloatingPointError) as exc:
        raise DomainError(str(exc)) from exc
    return (4.0 * d2 - d1) / 3.0


def fd_close(fd: float, exact: float, rel: float = 1e-6, abs_small: float = 1e-8) -> bool:
    """Agreement rule used across the package for FD-vs-jet comparisons."""
    err = abs(fd - exact)
    if abs(exact) < 1.0:
        return err <= max(abs_small, rel * abs(exact))
    return err <= rel * abs(exact)


def asjet(obj, space: JetSpace | None = None):
    """Build a jet from nested lists mixing jets and numbers.

    Returns a plain ndarray when no jet occurs and no space is given.
    """
    flat: list = []
    shape: list[int] = []

    def walk(o, depth):
        if isinstance(o, Jet) and o.ndim == 0 or not isinstance(o, (list, tuple, Jet, np.ndarray)):
            flat.append(o)
            return
        items = list(o)
        if len(shape) <= depth:
            shape.append(len(items))
        for it in items:
            walk(it, depth + 1)

    walk(obj, 0)
    jets = [o for o in flat if isinstance(o, Jet)]
    if space is None:
        if not jets:
            return np.array([float(o) for o in flat]).reshape(shape)
        space = jet_space(jets[0].dim, min(j.order for j in jets))
    cols = []
    for o in flat:
        if isinstance(o, Jet):
            cols.append(o.truncate(space.order).c)
        else:
            col = np.zeros(space.size)
            col[0] = float(o)
            cols.append(col)
    c = np.stack(cols, axis=1).reshape((space.size,) + tuple(shape))
    return Jet(space, c)


def concatenate(parts) -> Jet:
    """Concatenate vector jets (or arrays) along their first tensor axis."""
    jets = [p for p in parts if isinstance(p, Jet)]
    space = jet_space(jets[0].dim, min(j.order for j in jets))
    cs = [
        p.truncate(space.order).c if isinstance(p, Jet) else Jet.constant(space, p).c
        for p in parts
    ]
    return Jet(space, np.concatenate(cs, axis=1))


def block(rows) -> Jet:
    """Assemble a matrix jet from a nested list of matrix jets/arrays."""
    return concatenate_axis([concatenate_axis(r, 1) for r in rows], 0)


def concatenate_axis(parts, axis: int) -> Jet:
    jets = [p for p in parts if isinstance(p, Jet)]
    space = jet_space(jets[0].dim, min(j.order for j in jets))
    cs = [
        p.truncate(space.order).c if isinstance(p, Jet) else Jet.constant(space, p).c
        for p in parts
    ]
    return Jet(space, np.concatenate(cs, axis=axis + 1))
