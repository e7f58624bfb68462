"""Catalog of Finsler metrics and sampling-based validation of the axioms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import jets, mexpr
from .errors import DomainError
from .jets import DerivSpec, Jet
from .sampling import SamplePoint, SamplerConfig, sample_points

__all__ = [
    "MetricSpec",
    "euclidean",
    "riemannian",
    "round_sphere",
    "randers",
    "mroot",
    "custom",
    "eval_G",
    "validate",
    "ValidationReport",
    "jacobi_eigenvalues",
    "default_deriv",
]


def default_deriv(dim: int) -> DerivSpec:
    return DerivSpec(dim, dim, 1, 5)


@dataclass(frozen=True, eq=False)
class MetricSpec:
    """A Finsler metric given by an expression for G = F^2 in ``x1.., y1..``.

    Every builtin family expands to such an expression; ``params`` keeps the
    family parameters for serialization.
    """

    dim: int
    kind: str
    expression: mexpr.Expr
    name: str = ""
    params: dict = field(default_factory=dict)
    domain: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.domain is not None:
            if len(self.domain) != self.dim:
                raise ValueError("domain needs one interval per coordinate")
            object.__setattr__(self, "domain", tuple((float(a), float(b)) for a, b in self.domain))
        if not self.name:
            object.__setattr__(self, "name", f"{self.kind}({self.dim})")

    @property
    def text(self) -> str:
        return mexpr.to_text(self.expression)

    def _env(self, x, y):
        env = {f"x{i + 1}": v for i, v in enumerate(x)}
        env.update({f"y{i + 1}": v for i, v in enumerate(y)})
        return env

    def g_jet(self, p: SamplePoint, deriv: DerivSpec) -> Jet:
        env = {}
        for i in range(self.dim):
            env[f"x{i + 1}"] = jets.jet_variable(deriv, i, p.x[i])
            env[f"y{i + 1}"] = jets.jet_variable(deriv, deriv.dim_x + i, p.y[i])
        return mexpr.eval_jet(self.expression, env)

    def g_value(self, x: Sequence[float], y: Sequence[float]) -> float:
        return mexpr.eval_float(self.expression, self._env(x, y))

    def beta_norm(self, x: Sequence[float]) -> float:
        """alpha-norm of the Randers one-form at ``x`` (Randers only)."""
        if self.kind != "randers":
            raise TypeError("beta_norm is only defined for Randers metrics")
        env = {f"x{i + 1}": v for i, v in enumerate(x)}
        a = np.array([[mexpr.eval_float(e, env) for e in row] for row in self.params["a_expr"]])
        b = np.array([mexpr.eval_float(e, env) for e in self.params["b_expr"]])
        return float(math.sqrt(b @ np.linalg.solve(a, b)))

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "dim": self.dim, "name": self.name}
        cfg.update({k: v for k, v in self.params.items() if not k.endswith("_expr")})
        if self.domain is not None:
            cfg["domain"] = [list(b) for b in self.domain]
        return cfg


def eval_G(metric, p: SamplePoint, deriv: DerivSpec | None = None) -> Jet:
    """Jet of G = F^2 at ``p``."""
    if p.dim != metric.dim:
        raise ValueError(f"sample of dimension {p.dim} for a metric of dimension {metric.dim}")
    if deriv is None:
        deriv = default_deriv(metric.dim)
    return metric.g_jet(p, deriv)


# --- builtin families -------------------------------------------------------

def _parse_x(text, dim):
    return mexpr.parse(str(text), [f"x{i}" for i in range(1, dim + 1)])


def _symmetric(matrix, dim, what):
    rows = [list(r) for r in matrix]
    if len(rows) != dim or any(len(r) != dim for r in rows):
        raise ValueError(f"{what} must be a {dim}x{dim} matrix")
    parsed = [[_parse_x(v, dim) for v in r] for r in rows]
    for i in range(dim):
        for j in range(i + 1, dim):
            if parsed[i][j] != parsed[j][i]:
                raise ValueError(f"{what} is not symmetric at ({i + 1},{j + 1})")
    return rows, parsed


def _is_zero(e) -> bool:
    return isinstance(e, mexpr.Num) and e.value == 0.0


def _quadratic_text(parsed, dim) -> str:
    terms = []
    for i in range(dim):
        for j in range(i, dim):
            e = parsed[i][j]
            if _is_zero(e):
                continue
            c = mexpr.to_text(e)
            mono = f"y{i + 1}^2" if i == j else f"y{i + 1}*y{j + 1}"
            coef = c if i == j else f"2*({c})"
            if i == j and isinstance(e, mexpr.Num) and e.value == 1.0:
                terms.append(mono)
            else:
                terms.append(f"({coef})*{mono}" if i == j else f"{coef}*{mono}")
    if not terms:
        raise ValueError("quadratic form is identically zero")
    return " + ".join(terms)


def _identity(dim):
    return [["1" if i == j else "0" for j in range(dim)] for i in range(dim)]


def euclidean(dim: int, name: str = "") -> MetricSpec:
    text = " + ".join(f"y{i}^2" for i in range(1, dim + 1))
    return MetricSpec(dim, "euclidean", mexpr.parse(text, mexpr.metric_variables(dim)), name or f"euclidean({dim})")


def riemannian(g, name: str = "", domain=None) -> MetricSpec:
    """Riemannian metric ``g_ij(x) y^i y^j`` from a symmetric matrix of expressions."""
    dim = len(g)
    rows, parsed = _symmetric(g, dim, "g")
    text = _quadratic_text(parsed, dim)
    return MetricSpec(
        dim, "riemannian", mexpr.parse(text, mexpr.metric_variables(dim)), name,
        {"g": [[str(v) for v in r] for r in rows]}, domain,
    )


def round_sphere(name: str = "sphere") -> MetricSpec:
    """Unit 2-sphere in polar coordinates, x1 kept away from the poles."""
    return riemannian([["1", "0"], ["0", "sin(x1)^2"]], name,
                      domain=((0.3, math.pi - 0.3), (-math.pi, math.pi)))


def randers(b, a=None, name: str = "", domain=None) -> MetricSpec:
    """Randers metric ``F = sqrt(a_ij y^i y^j) + b_i y^i``."""
    dim = len(b)
    if a is None:
        a = _identity(dim)
    rows, a_parsed = _symmetric(a, dim, "a")
    b_parsed = [_parse_x(v, dim) for v in b]
    alpha2 = _quadratic_text(a_parsed, dim)
    beta = " + ".join(
        f"({mexpr.to_text(e)})*y{i + 1}" for i, e in enumerate(b_parsed) if not _is_zero(e)
    )
    text = f"(sqrt({alpha2}) + {beta})^2" if beta else alpha2
    return MetricSpec(
        dim, "randers", mexpr.parse(text, mexpr.metric_variables(dim)), name,
        {"a": [[str(v) for v in r] for r in rows], "b": [str(v) for v in b],
         "a_expr": a_parsed, "b_expr": b_parsed},
        domain,
    )


def mroot(dim: int, r: int = 4, coefficients=None, name: str = "") -> MetricSpec:
    """Diagonal m-th root metric ``F = (sum c_i (y^i)^r)^(1/r)``, r even."""
    if r < 2 or r % 2:
        raise ValueError("root order r must be an even integer >= 2")
    coefficients = [1.0] * dim if coefficients is None else [float(c) for c in coefficients]
    if len(coefficients) != dim or any(c <= 0 for c in coefficients):
        raise ValueError("need one positive coefficient per coordinate")
    inner = " + ".join(
        f"y{i + 1}^{r}" if c == 1.0 else f"{c!r}*y{i + 1}^{r}" for i, c in enumerate(coefficients)
    )
    if r == 2:
        text = inner
    elif r == 4:
        text = f"sqrt({inner})"
    else:
        text = f"({inner})^{2.0 / r!r}"
    return MetricSpec(
        dim, "mroot", mexpr.parse(text, mexpr.metric_variables(dim)), name or f"mroot{r}({dim})",
        {"r": r, "coefficients": coefficients},
    )


def custom(G: str, dim: int, name: str = "", domain=None) -> MetricSpec:
    return MetricSpec(
        dim, "custom", mexpr.parse(G, mexpr.metric_variables(dim)), name, {"G": G}, domain
    )


# --- validation -------------------------------------------------------------

def jacobi_eigenvalues(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations (ascending)."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    a = 0.5 * (a + a.T)
    scale = max(np.abs(a).max(), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.tril(a, -1) ** 2)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


POSITIVE_LAMBDAS = (0.5, 3.0)
NEGATIVE_LAMBDAS = (-2.0, -1.0)


@dataclass
class ValidationReport:
    metric: str
    passed: bool
    sampler: dict
    tolerance: float
    reversibility: str
    checks: dict
    failures: list
    rows: list
    min_eigenvalue: float
    reversible: bool

    def as_dict(self) -> dict:
        return {
            "metric": self.metric,
            "passed": self.passed,
            "sampler": self.sampler,
            "tolerance": self.tolerance,
            "reversibility": self.reversibility,
            "reversible_on_samples": self.reversible,
            "min_eigenvalue": self.min_eigenvalue,
            "checks": self.checks,
            "failures": self.failures,
            "rows": self.rows,
        }


def validate(
    metric,
    sampler: SamplerConfig | None = None,
    tol: float = 1e-10,
    reversibility: str = "positive_only",
) -> ValidationReport:
    """Check positivity, homogeneity, Euler's identity and convexity on samples.

    With ``reversibility="positive_only"`` the negative scalings are still
    evaluated and summarised in ``reversible`` but never count as failures.
    """
    if reversibility not in ("positive_only", "required"):
        raise ValueError("reversibility must be 'positive_only' or 'required'")
    sampler = sampler or SamplerConfig()
    points = sample_points(metric, sampler)
    deriv = DerivSpec(metric.dim, metric.dim, 0, 2)
    names = ["positive", "homogeneity", "euler", "positive_definite", "reversible"]
    if metric.kind == "randers":
        names.append("beta_norm")
    worst = {n: 0.0 for n in names}
    fails = {n: 0 for n in names}
    failures, rows = [], []
    min_eig = math.inf
    reversible = True

    def record(name, k, residual, ok, p, value=None):
        worst[name] = max(worst[name], residual)
        rows.append({"check": name, "sample": k, "residual": residual})
        if not ok:
            fails[name] += 1
            failures.append({"check": name, "sample": k, "point": p.as_dict(), "value": value})

    for k, p in enumerate(points):
        try:
            j = eval_G(metric, p, deriv)
        except DomainError as err:
            record("positive", k, math.inf, False, p, str(err))
            continue
        g = j.value
        record("positive", k, 0.0 if g > 0 else -g, g > 0, p, g)

        hom = 0.0
        for lam in POSITIVE_LAMBDAS:
            gl = metric.g_value(p.x, [lam * v for v in p.y])
            hom = max(hom, abs(gl - lam * lam * g) / abs(lam * lam * g))
        neg = 0.0
        for lam in NEGATIVE_LAMBDAS:
            try:
                gl = metric.g_value(p.x, [lam * v for v in p.y])
                neg = max(neg, abs(gl - lam * lam * g) / abs(lam * lam * g))
            except DomainError:
                neg = math.inf
        rev_ok = neg <= tol
        reversible = reversible and rev_ok
        if reversibility == "required":
            hom = max(hom, neg)
        record("homogeneity", k, hom, hom <= tol, p)
        record("reversible", k, neg, rev_ok or reversibility == "positive_only", p)

        grad = np.array([j.partial(y=(a,)) for a in range(metric.dim)])
        euler = abs(float(grad @ np.array(p.y)) - 2 * g) / abs(2 * g)
        record("euler", k, euler, euler <= tol, p)

        hess = np.array([[j.partial(y=(a, b)) for b in range(metric.dim)] for a in range(metric.dim)])
        lam_min = float(jacobi_eigenvalues(hess)[0])
        min_eig = min(min_eig, lam_min)
        record("positive_definite", k, max(0.0, -lam_min), lam_min > 0, p, lam_min)

        if metric.kind == "randers":
            bn = metric.beta_norm(p.x)
            record("beta_norm", k, bn, bn < 1.0, p, bn)

    checks = {n: {"max_residual": worst[n], "failures": fails[n]} for n in names}
    return ValidationReport(
        metric=metric.name,
        passed=not failures,
        sampler=sampler.as_dict(),
        tolerance=tol,
        reversibility=reversibility,
        checks=checks,
        failures=failures,
        rows=rows,
        min_eigenvalue=min_eig,
        reversible=reversible,
    )

