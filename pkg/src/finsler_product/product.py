"""Product functions f(s, t) and Minkowskian products F = sqrt(f(F1^2, F2^2))."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import jets, mexpr
from .errors import DimensionError, DomainError, FinslerError
from .jets import DerivSpec, Jet, algebra
from .sampling import SamplePoint, SamplerConfig

__all__ = [
    "ProductFunction",
    "sum_function",
    "pnorm",
    "eps_sqrt",
    "custom_function",
    "FPartials",
    "f_partials",
    "check_product_function",
    "ConditionReport",
    "ProductMetric",
    "minkowski_product",
    "InvalidFactor",
]

# s, t live in the two fiber slots; the base slots are unused (order 0)
_ST_SPEC = DerivSpec(2, 2, 0, 5)


class InvalidFactor(FinslerError, ValueError):
    """A factor metric or the product failed validation."""


@dataclass(frozen=True, eq=False)
class ProductFunction:
    kind: str
    expression: mexpr.Expr
    params: dict = field(default_factory=dict)

    @property
    def text(self) -> str:
        return mexpr.to_text(self.expression)

    @property
    def name(self) -> str:
        if not self.params:
            return self.kind
        args = ",".join(f"{v}" for k, v in self.params.items() if k != "expr")
        return f"{self.kind}({args})"

    def value(self, s: float, t: float) -> float:
        return mexpr.eval_float(self.expression, {"s": s, "t": t})

    def compose(self, K: Jet, H: Jet) -> Jet:
        return mexpr.eval_jet(self.expression, {"s": K, "t": H})

    def to_config(self) -> dict:
        return {"kind": self.kind, **self.params}


def _pf(kind, text, **params) -> ProductFunction:
    return ProductFunction(kind, mexpr.parse(text, mexpr.PRODUCT_VARIABLES), params)


def sum_function() -> ProductFunction:
    return _pf("sum", "s + t")


def pnorm(p: int = 2) -> ProductFunction:
    """``(s^p + t^p)^(1/p)``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1:
        return _pf("pnorm", "s + t", p=p)
    if p == 2:
        return _pf("pnorm", "sqrt(s^2 + t^2)", p=p)
    return _pf("pnorm", f"(s^{p} + t^{p})^{1.0 / p!r}", p=p)


def eps_sqrt(eps: float = 0.5) -> ProductFunction:
    """``s + t + 2 eps sqrt(s t)``; the discriminant equals ``1 - eps^2``."""
    return _pf("eps_sqrt", f"s + t + 2*{float(eps)!r}*sqrt(s*t)", eps=float(eps))


def custom_function(text: str) -> ProductFunction:
    return _pf("custom", text, expr=text)


@dataclass(frozen=True)
class FPartials:
    """Values of f and its first and second partials at (K, H)."""

    K: float
    H: float
    f: float
    f_K: float
    f_H: float
    f_KK: float
    f_KH: float
    f_HH: float

    @property
    def delta(self) -> float:
        return self.f_K * self.f_H - 2.0 * self.f * self.f_KH


def f_jet(f: ProductFunction, s: float, t: float) -> Jet:
    """Jet of f at (s, t) to total order 5."""
    js = jets.jet_variable(_ST_SPEC, 2, s)
    jt = jets.jet_variable(_ST_SPEC, 3, t)
    return f.compose(js, jt)


def f_partials(f: ProductFunction, s: float, t: float) -> FPartials:
    j = f_jet(f, s, t)
    return FPartials(
        K=s, H=t, f=j.value,
        f_K=j.partial(y=(0,)), f_H=j.partial(y=(1,)),
        f_KK=j.partial(y=(0, 0)), f_KH=j.partial(y=(0, 1)), f_HH=j.partial(y=(1, 1)),
    )


HOMOGENEITY_LAMBDAS = (0.5, 2.0, 7.0)


@dataclass
class ConditionReport:
    function: str
    passed: bool
    max_residuals: dict
    deltas: list
    failures: list
    rays: dict

    def as_dict(self) -> dict:
        return {
            "function": self.function,
            "passed": self.passed,
            "max_residuals": self.max_residuals,
            "deltas": self.deltas,
            "failures": self.failures,
            "rays": self.rays,
        }


def check_product_function(
    f: ProductFunction, grid: Iterable[tuple[float, float]], tol: float = 1e-10, floor: float = 1e-12
) -> ConditionReport:
    """Check conditions (a)-(e) and the Euler identities of f on positive samples."""
    res = {k: 0.0 for k in ("homogeneity", "euler1", "euler2_K", "euler2_H", "square", "identity_2_29")}
    failures, deltas = [], []

    def note(name, st, r):
        res[name] = max(res[name], r)
        if not r <= tol:
            failures.append({"check": name, "point": list(st), "residual": r})

    for s, t in grid:
        if not (s > 0 and t > 0):
            raise ValueError("grid points must lie in the open positive quadrant")
        fp = f_partials(f, s, t)
        scale = max(abs(fp.f), 1e-300)
        hom = max(abs(f.value(lam * s, lam * t) - lam * fp.f) / (lam * scale) for lam in HOMOGENEITY_LAMBDAS)
        note("homogeneity", (s, t), hom)
        note("euler1", (s, t), abs(fp.f_K * s + fp.f_H * t - fp.f) / scale)
        d2 = max(abs(fp.f_KK) * s, abs(fp.f_KH) * t, abs(fp.f_HH) * t, abs(fp.f_KH) * s, 1e-300)
        note("euler2_K", (s, t), abs(fp.f_KK * s + fp.f_KH * t) / d2)
        note("euler2_H", (s, t), abs(fp.f_KH * s + fp.f_HH * t) / d2)
        sq = max(fp.f_KH**2, abs(fp.f_KK * fp.f_HH), 1e-300)
        note("square", (s, t), abs(fp.f_KH**2 - fp.f_KK * fp.f_HH) / sq)
        delta = fp.delta
        lhs = fp.f_H * (fp.f_K + 2 * s * fp.f_KK) + 2 * t * fp.f_K * fp.f_HH
        note("identity_2_29", (s, t), abs(lhs - delta) / max(abs(delta), 1e-300))
        deltas.append({"s": s, "t": t, "delta": delta})
        if not (abs(fp.f_K) > floor and abs(fp.f_H) > floor):
            failures.append({"check": "nonzero_gradient", "point": [s, t], "residual": min(abs(fp.f_K), abs(fp.f_H))})
        if not abs(delta) > floor:
            failures.append({"check": "nonzero_delta", "point": [s, t], "residual": abs(delta)})

    # condition (a) on the boundary rays, where the formula extends continuously
    rays = {"origin": None, "s_axis": [], "t_axis": []}
    try:
        rays["origin"] = f.value(0.0, 0.0)
        if rays["origin"] != 0.0:
            failures.append({"check": "zero_at_origin", "point": [0.0, 0.0], "residual": abs(rays["origin"])})
    except (DomainError, ZeroDivisionError):
        rays["origin"] = "undefined"
    for v in (0.5, 1.0, 3.0):
        for key, st in (("s_axis", (v, 0.0)), ("t_axis", (0.0, v))):
            try:
                val = f.value(*st)
            except (DomainError, ZeroDivisionError):
                rays[key].append("undefined")
                continue
            rays[key].append(val)
            if val == 0.0:
                failures.append({"check": "positive_on_rays", "point": list(st), "residual": 0.0})

    return ConditionReport(f.name, not failures, res, deltas, failures, rays)


# --- product metrics --------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _embedding(small: DerivSpec, big: DerivSpec, offset: int):
    """Row/column index arrays placing a factor jet into the product layout."""
    sa, ba = algebra(small), algebra(big)
    m, n = small.dim_x, big.dim_x

    def widen(e):
        out = [0] * n
        out[offset:offset + m] = e
        return tuple(out)

    rows = np.array([ba.x_index[widen(e)] for e in sa.x_monos], dtype=np.intp)
    cols = np.array([ba.y_index[widen(e)] for e in sa.y_monos], dtype=np.intp)
    return rows, cols


def embed_jet(j: Jet, big: DerivSpec, offset: int) -> Jet:
    rows, cols = _embedding(j.spec, big, offset)
    c = np.zeros((algebra(big).nx, algebra(big).ny))
    c[np.ix_(rows, cols)] = j.coeffs
    return Jet(big, c)


class ProductMetric:
    """Minkowskian product of two factor metrics with respect to ``f``.

    Indices ``0..m-1`` belong to the first factor and ``m..m+n-1`` to the
    second.
    """

    kind = "product"

    def __init__(self, factor1, factor2, f: ProductFunction, name: str = ""):
        self.factor1 = factor1
        self.factor2 = factor2
        self.f = f
        self.m = factor1.dim
        self.n = factor2.dim
        self.dim = self.m + self.n
        self.name = name or f"{factor1.name} x {factor2.name} [{f.name}]"
        d1 = getattr(factor1, "domain", None)
        d2 = getattr(factor2, "domain", None)
        if d1 is None and d2 is None:
            self.domain = None
        else:
            box = [(-1.0, 1.0)]
            self.domain = tuple(list(d1 or box * self.m) + list(d2 or box * self.n))

    def __repr__(self):
        return f"ProductMetric({self.name!r})"

    def split(self, p: SamplePoint) -> tuple[SamplePoint, SamplePoint]:
        if p.dim != self.dim:
            raise DimensionError(f"sample of dimension {p.dim} for a product of dimension {self.dim}")
        m = self.m
        y1, y2 = p.y[:m], p.y[m:]
        if not any(y1) or not any(y2):
            raise DomainError("factor norm vanishes (K = 0 or H = 0)")
        return SamplePoint(p.x[:m], y1), SamplePoint(p.x[m:], y2)

    def factor_norms(self, x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
        m = self.m
        return self.factor1.g_value(x[:m], y[:m]), self.factor2.g_value(x[m:], y[m:])

    def g_value(self, x: Sequence[float], y: Sequence[float]) -> float:
        k, h = self.factor_norms(x, y)
        return self.f.value(k, h)

    def factor_jets(self, p: SamplePoint, deriv: DerivSpec) -> tuple[Jet, Jet]:
        """K and H as jets in their own slots."""
        p1, p2 = self.split(p)
        d1 = DerivSpec(self.m, self.m, deriv.order_x, deriv.order_y)
        d2 = DerivSpec(self.n, self.n, deriv.order_x, deriv.order_y)
        return self.factor1.g_jet(p1, d1), self.factor2.g_jet(p2, d2)

    def g_jet(self, p: SamplePoint, deriv: DerivSpec) -> Jet:
        if deriv.dim_x != self.dim:
            raise DimensionError("DerivSpec dimension does not match the product")
        kj, hj = self.factor_jets(p, deriv)
        if kj.value <= 0 or hj.value <= 0:
            raise DomainError("factor norm vanishes (K = 0 or H = 0)")
        K = embed_jet(kj, deriv, 0)
        H = embed_jet(hj, deriv, self.m)
        return self.f.compose(K, H)

    def to_config(self) -> dict:
        return {
            "kind": "product",
            "name": self.name,
            "f": self.f.to_config(),
            "factor1": self.factor1.to_config(),
            "factor2": self.factor2.to_config(),
        }


def minkowski_product(
    m1, m2, f: ProductFunction, sampler: SamplerConfig | None = None, check: bool = True, name: str = ""
) -> ProductMetric:
    """Build the product metric; with ``check`` the factors, f and the product are validated."""
    from .metrics import validate

    for k, m in (("factor1", m1), ("factor2", m2)):
        if getattr(m, "dim", 0) < 1:
            raise DimensionError(f"{k} has no positive dimension")
        if getattr(m, "kind", None) == "product":
            raise DimensionError("products of more than two factors are not supported")
    pm = ProductMetric(m1, m2, f, name)
    if not check:
        return pm
    sampler = sampler or SamplerConfig()
    for label, m in (("factor1", m1), ("factor2", m2)):
        rep = validate(m, sampler)
        if not rep.passed:
            raise InvalidFactor(f"{label} {m.name} failed validation: {rep.checks}")
    rng = np.random.default_rng(sampler.seed)
    grid = [(float(a), float(b)) for a, b in 0.05 + 5 * rng.random((sampler.count, 2))]
    crep = check_product_function(f, grid)
    if not crep.passed:
        raise InvalidFactor(f"product function {f.name} failed: {crep.failures[:3]}")
    rep = validate(pm, sampler)
    if not rep.passed:
        raise InvalidFactor(f"product {pm.name} failed validation: {rep.checks}")
    return pm


def product_quantities(pm: ProductMetric, p: SamplePoint):
    """Factor data at ``p``: K, H, their gradients/Hessians and the f partials."""
    p1, p2 = pm.split(p)
    kj, hj = pm.factor_jets(p, DerivSpec(pm.dim, pm.dim, 0, 2))
    m, n = pm.m, pm.n
    K_i = np.array([kj.partial(y=(a,)) for a in range(m)])
    K_ij = np.array([[kj.partial(y=(a, b)) for b in range(m)] for a in range(m)])
    H_i = np.array([hj.partial(y=(a,)) for a in range(n)])
    H_ij = np.array([[hj.partial(y=(a, b)) for b in range(n)] for a in range(n)])
    fp = f_partials(pm.f, kj.value, hj.value)
    return _Quantities(fp, K_i, K_ij, H_i, H_ij, np.array(p1.y), np.array(p2.y))


@dataclass(frozen=True)
class _Quantities:
    fp: FPartials
    K_i: np.ndarray
    K_ij: np.ndarray
    H_i: np.ndarray
    H_ij: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
