"""Truncated multivariate Taylor jets.

A :class:`Jet` stores the Taylor coefficients of a scalar function of
``(x, y)`` around a base point, densely, over every multi-index whose
x-order is at most ``order_x`` and whose y-order is at most ``order_y``.
Coefficients are factorial-normalised (``partial / alpha!``) so that
multiplication is a plain truncated convolution.

Slots are numbered ``0 .. dim_x-1`` for x and ``dim_x .. dim_x+dim_y-1``
for y.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from .errors import DomainError

__all__ = [
    "DerivSpec",
    "Jet",
    "jet_variable",
    "jet_constant",
    "jet_arith",
    "jet_func",
    "extract",
    "fd_oracle",
]


@dataclass(frozen=True)
class DerivSpec:
    dim_x: int
    dim_y: int
    order_x: int = 1
    order_y: int = 5

    def __post_init__(self):
        if self.dim_x != self.dim_y:
            raise ValueError("dim_x and dim_y must agree (tangent bundle coordinates)")
        if self.dim_x < 0:
            raise ValueError("dimensions must be non-negative")
        if not 0 <= self.order_x <= 2:
            raise ValueError("order_x must lie in [0, 2]")
        if self.order_y < 0:
            raise ValueError("order_y must be non-negative")

    @property
    def nslots(self) -> int:
        return self.dim_x + self.dim_y

    @property
    def max_degree(self) -> int:
        return self.order_x + self.order_y

    def split(self, idx: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
        idx = tuple(int(i) for i in idx)
        if len(idx) != self.nslots:
            raise IndexError(f"multi-index has length {len(idx)}, expected {self.nslots}")
        if any(i < 0 for i in idx):
            raise IndexError("multi-index entries must be non-negative")
        return idx[: self.dim_x], idx[self.dim_x:]


def _monomials(nvars: int, order: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), deg):
            e = [0] * nvars
            for c in combo:
                e[c] += 1
            out.append(tuple(e))
    # combinations_with_replacement emits each exponent once per degree
    return out


def _mono_factorial(e) -> float:
    return float(math.prod(math.factorial(k) for k in e))


def _pairs(monos, index, order):
    ii, jj, kk = [], [], []
    for i, a in enumerate(monos):
        da = sum(a)
        for j, b in enumerate(monos):
            if da + sum(b) > order:
                continue
            ii.append(i)
            jj.append(j)
            kk.append(index[tuple(p + q for p, q in zip(a, b))])
    return np.array(ii, dtype=np.intp), np.array(jj, dtype=np.intp), np.array(kk, dtype=np.intp)


class _Algebra:
    """Index tables for truncated products under one :class:`DerivSpec`."""

    def __init__(self, spec: DerivSpec):
        self.spec = spec
        self.x_monos = _monomials(spec.dim_x, spec.order_x)
        self.y_monos = _monomials(spec.dim_y, spec.order_y)
        self.x_index = {m: i for i, m in enumerate(self.x_monos)}
        self.y_index = {m: i for i, m in enumerate(self.y_monos)}
        self.nx = len(self.x_monos)
        self.ny = len(self.y_monos)
        self.x_fact = np.array([_mono_factorial(m) for m in self.x_monos])
        self.y_fact = np.array([_mono_factorial(m) for m in self.y_monos])

        xi, xj, xk = _pairs(self.x_monos, self.x_index, spec.order_x)
        yi, yj, yk = _pairs(self.y_monos, self.y_index, spec.order_y)
        self._xi, self._xj = xi, xj
        self._yi, self._yj = yi, yj
        self._x_scatter = np.zeros((self.nx, len(xk)))
        self._x_scatter[xk, np.arange(len(xk))] = 1.0
        self._y_scatter_t = sparse.csr_matrix(
            (np.ones(len(yk)), (yk, np.arange(len(yk)))), shape=(self.ny, len(yk))
        )

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Truncated product of coefficient arrays shaped ``(..., nx, ny)``."""
        a, b = np.broadcast_arrays(a, b)
        lead = a.shape[:-2]
        ta = a[..., self._xi, :][..., self._yi]
        tb = b[..., self._xj, :][..., self._yj]
        t = (ta * tb).reshape(-1, len(self._yi))
        t = (self._y_scatter_t @ t.T).T
        t = t.reshape(lead + (len(self._xi), self.ny))
        if self.nx == 1:
            return t
        return self._x_scatter @ t


@functools.lru_cache(maxsize=None)
def algebra(spec: DerivSpec) -> _Algebra:
    return _Algebra(spec)


class Jet:
    """Immutable truncated Taylor expansion of a scalar at a base point."""

    __slots__ = ("spec", "coeffs")

    def __init__(self, spec: DerivSpec, coeffs: np.ndarray):
        alg = algebra(spec)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (alg.nx, alg.ny):
            raise ValueError(f"coefficient array has shape {coeffs.shape}, expected {(alg.nx, alg.ny)}")
        coeffs.flags.writeable = False
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    @property
    def value(self) -> float:
        return float(self.coeffs[0, 0])

    def __repr__(self):
        return f"Jet(value={self.value!r}, spec={self.spec})"

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.spec != self.spec:
                raise ValueError("jets with different DerivSpecs cannot be combined")
            return other
        return jet_constant(self.spec, float(other))

    def _shifted(self, c: float) -> "Jet":
        out = self.coeffs.copy()
        out[0, 0] = out[0, 0] + c
        return Jet(self.spec, out)

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.spec, self.coeffs + self._coerce(other).coeffs)
        return self._shifted(float(other))

    def __radd__(self, other):
        if isinstance(other, Jet):
            return other.__add__(self)
        out = self.coeffs.copy()
        out[0, 0] = float(other) + out[0, 0]
        return Jet(self.spec, out)

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.spec, self.coeffs - self._coerce(other).coeffs)
        return self._shifted(-float(other))

    def __rsub__(self, other):
        out = -self.coeffs
        out[0, 0] = float(other) - self.coeffs[0, 0]
        return Jet(self.spec, out)

    def __neg__(self):
        return Jet(self.spec, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Jet):
            other = self._coerce(other)
            return Jet(self.spec, algebra(self.spec).mul(self.coeffs, other.coeffs))
        return Jet(self.spec, self.coeffs * float(other))

    def __rmul__(self, other):
        if isinstance(other, Jet):
            return other.__mul__(self)
        return Jet(self.spec, float(other) * self.coeffs)

    def __truediv__(self, other):
        return _div(self, self._coerce(other))

    def __rtruediv__(self, other):
        return _div(self._coerce(other), self)

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)) or (isinstance(n, float) and n.is_integer()):
            return ipow(self, int(n))
        return _pow_real(self, float(n))

    def partial(self, y: Sequence[int] = (), x: Sequence[int] = ()) -> float:
        """Partial derivative w.r.t. the listed coordinates (0-based, repeats allowed)."""
        idx = [0] * self.spec.nslots
        for k in x:
            idx[k] += 1
        for k in y:
            idx[self.spec.dim_x + k] += 1
        return extract(self, tuple(idx))


def jet_constant(spec: DerivSpec, value: float) -> Jet:
    alg = algebra(spec)
    c = np.zeros((alg.nx, alg.ny))
    c[0, 0] = value
    return Jet(spec, c)


def jet_variable(spec: DerivSpec, slot: int, base_value: float) -> Jet:
    """Jet of the coordinate function living in ``slot``."""
    if not 0 <= slot < spec.nslots:
        raise IndexError(f"slot {slot} out of range for {spec.nslots} slots")
    alg = algebra(spec)
    c = np.zeros((alg.nx, alg.ny))
    c[0, 0] = base_value
    if slot < spec.dim_x:
        if spec.order_x >= 1:
            e = [0] * spec.dim_x
            e[slot] = 1
            c[alg.x_index[tuple(e)], 0] = 1.0
    elif spec.order_y >= 1:
        e = [0] * spec.dim_y
        e[slot - spec.dim_x] = 1
        c[0, alg.y_index[tuple(e)]] = 1.0
    return Jet(spec, c)


def extract(j: Jet, idx: Sequence[int]) -> float:
    """True partial derivative ``d^|idx| / d slots^idx`` at the base point."""
    ex, ey = j.spec.split(idx)
    if sum(ex) > j.spec.order_x or sum(ey) > j.spec.order_y:
        raise IndexError(f"multi-index {tuple(idx)} exceeds jet orders")
    alg = algebra(j.spec)
    return float(j.coeffs[alg.x_index[ex], alg.y_index[ey]] * alg.x_fact[alg.x_index[ex]] * alg.y_fact[alg.y_index[ey]])


def ipow(a: Jet, n: int) -> Jet:
    if n < 0:
        return _div(jet_constant(a.spec, 1.0), ipow(a, -n))
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    return jet_constant(a.spec, 1.0) if result is None else result


def _nilpotent(a: Jet) -> np.ndarray:
    t = a.coeffs.copy()
    t[0, 0] = 0.0
    return t


def _compose(a: Jet, c: Sequence[float]) -> Jet:
    """Horner evaluation of ``sum c[k] * (a - a0)**k``; exact since (a - a0) is nilpotent."""
    alg = algebra(a.spec)
    t = _nilpotent(a)
    n = min(len(c) - 1, a.spec.max_degree)
    acc = np.zeros_like(t)
    acc[0, 0] = c[n]
    for k in range(n - 1, -1, -1):
        acc = alg.mul(acc, t)
        acc[0, 0] = c[k]
    return Jet(a.spec, acc)


def _div(a: Jet, b: Jet) -> Jet:
    b0 = b.value
    if b0 == 0.0:
        raise DomainError("division by a jet with zero value")
    alg = algebra(a.spec)
    bt = _nilpotent(b)
    q = a.coeffs / b0
    # q <- (a - q*bt)/b0 gains one correct degree per sweep
    for _ in range(a.spec.max_degree):
        q = (a.coeffs - alg.mul(q, bt)) / b0
    return Jet(a.spec, q)


def _binomial_series(r: float, a0: float, n: int) -> list[float]:
    c = [a0**r]
    for k in range(1, n + 1):
        c.append(c[-1] * (r - k + 1) / (k * a0))
    return c


def _has_slope(a: Jet) -> bool:
    return a.spec.max_degree > 0 and bool(np.any(_nilpotent(a)))


def _sqrt(a: Jet) -> Jet:
    a0 = a.value
    if a0 < 0.0 or (a0 == 0.0 and _has_slope(a)):
        raise DomainError(f"sqrt of non-positive value {a0!r}")
    if a0 == 0.0:
        return jet_constant(a.spec, 0.0)
    n = a.spec.max_degree
    c = _binomial_series(0.5, a0, n)
    c[0] = math.sqrt(a0)
    return _compose(a, c)


def _pow_real(a: Jet, r: float) -> Jet:
    a0 = a.value
    if a0 <= 0.0:
        raise DomainError(f"non-integer power of non-positive value {a0!r}")
    return _compose(a, _binomial_series(r, a0, a.spec.max_degree))


def _exp(a: Jet) -> Jet:
    e0 = math.exp(a.value)
    return _compose(a, [e0 / math.factorial(k) for k in range(a.spec.max_degree + 1)])


def _log(a: Jet) -> Jet:
    a0 = a.value
    if a0 <= 0.0:
        raise DomainError(f"log of non-positive value {a0!r}")
    c = [math.log(a0)]
    for k in range(1, a.spec.max_degree + 1):
        c.append((-1) ** (k + 1) / (k * a0**k))
    return _compose(a, c)


def _sin_cos_series(a0: float, n: int, shift: int) -> list[float]:
    # derivatives of sin cycle sin, cos, -sin, -cos; cos is sin shifted by one
    cyc = [math.sin(a0), math.cos(a0), -math.sin(a0), -math.cos(a0)]
    return [cyc[(k + shift) % 4] / math.factorial(k) for k in range(n + 1)]


def _sin(a: Jet) -> Jet:
    return _compose(a, _sin_cos_series(a.value, a.spec.max_degree, 0))


def _cos(a: Jet) -> Jet:
    return _compose(a, _sin_cos_series(a.value, a.spec.max_degree, 1))


_ARITH = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}

_FUNCS = {
    "sqrt": _sqrt,
    "sin": _sin,
    "cos": _cos,
    "exp": _exp,
    "log": _log,
}


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    try:
        return _ARITH[op](a, b)
    except KeyError:
        raise ValueError(f"unknown arithmetic op {op!r}") from None


def jet_func(a: Jet, op: str, r: float | None = None) -> Jet:
    """Apply ``sqrt | pow | sin | cos | exp | log`` to a jet."""
    if op == "pow":
        if r is None:
            raise ValueError("pow needs an exponent")
        return a**r
    try:
        fn = _FUNCS[op]
    except KeyError:
        raise ValueError(f"unknown function {op!r}") from None
    return fn(a)


sqrt, sin, cos, exp, log = _sqrt, _sin, _cos, _exp, _log


# --- finite-difference oracle (tests only) ---------------------------------

def _stencil(k: int):
    """Central k-th difference nodes (in units of h) and weights, O(h^2) accurate."""
    nodes = [k / 2 - j for j in range(k + 1)]
    weights = [(-1) ** j * math.comb(k, j) for j in range(k + 1)]
    return nodes, weights


def fd_oracle(
    program: Callable[[Sequence], object],
    point: Sequence[float],
    idx: Sequence[int],
    step: float | None = None,
    precision: int | None = None,
) -> float:
    """Central finite-difference estimate of a mixed partial derivative.

    ``program`` maps a coordinate sequence to a scalar.  With ``precision``
    (decimal digits) the program is fed :mod:`mpmath` numbers, which pushes
    round-off far below the truncation error; the default step then uses
    ``10**-precision`` as the working epsilon.
    """
    idx = tuple(int(i) for i in idx)
    if len(idx) != len(point):
        raise IndexError("multi-index length must match the point")
    order = sum(idx)
    if order > 6 or any(i < 0 for i in idx):
        raise ValueError("fd_oracle supports non-negative orders up to 6")
    if step is not None and step <= 0:
        raise ValueError("step must be positive")

    if precision is None:
        num = float
        eps = np.finfo(float).eps
        ctx = None
    else:
        import mpmath

        ctx = mpmath.workdps(precision)
        num = mpmath.mpf
        eps = 10.0 ** (-precision)

    def run():
        pt = [num(p) for p in point]
        if order == 0:
            return program(pt)
        axes = []
        for i, k in enumerate(idx):
            if k == 0:
                continue
            h = num(step) if step is not None else num(eps ** (1.0 / (order + 2)) * max(1.0, abs(point[i])))
            nodes, weights = _stencil(k)
            axes.append([(i, num(n) * h, num(w) / h**k) for n, w in zip(nodes, weights)])
        total = num(0)
        for combo in itertools.product(*axes):
            q = list(pt)
            wt = num(1)
            for i, off, w in combo:
                q[i] = pt[i] + off
                wt = wt * w
            total = total + wt * program(q)
        return total

    if ctx is None:
        return float(run())
    with ctx:
        return float(run())
