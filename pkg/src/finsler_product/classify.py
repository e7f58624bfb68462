"""Sampling-based classification and the product verification harness.

"Identically zero" is decided on a finite sample set, so every verdict
reads "holds on the sampled set".  Berwald is tested through B = 0, which
is the fiber-derivative obstruction to y-independence of the Berwald
connection coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .product import ProductMetric, product_quantities
from .sampling import SamplePoint, SamplerConfig, sample_points
from .tensors import (
    TensorFrame,
    compute_frame,
    fundamental_tensor_blocks,
    inverse_product_closed_form,
)

__all__ = [
    "PROPERTIES",
    "ClassificationReport",
    "classify",
    "classify_frames",
    "TheoremReport",
    "verify_product",
    "PRODUCT_CHECKS",
    "DEFAULT_TOLERANCE",
]

DEFAULT_TOLERANCE = 1e-6

# property -> (frame attribute, fiber homogeneity degree)
PROPERTIES = {
    "berwald": ("berwald_curv", -1),
    "weakly_berwald": ("mean_berwald", -1),
    "landsberg": ("landsberg", 0),
    "weakly_landsberg": ("mean_landsberg", 0),
}

GLOSSARY = (
    "Verdicts hold on the sampled set only. berwald: max|B| <= tol (B is the fiber "
    "derivative of the Berwald connection, so B = 0 iff the connection is y-independent); "
    "weakly_berwald: max|E| <= tol; landsberg: max|L| <= tol; weakly_landsberg: max|J| <= tol. "
    "berwald implies weakly_berwald and landsberg; landsberg implies weakly_landsberg."
)


@dataclass
class ClassificationReport:
    metric: str
    verdicts: dict
    tolerance: float
    sampler: dict
    rows: list = field(default_factory=list)

    def holds(self, prop: str) -> bool:
        return self.verdicts[prop]["holds"]

    def as_dict(self) -> dict:
        return {
            "metric": self.metric,
            "tolerance": self.tolerance,
            "sampler": self.sampler,
            "verdicts": self.verdicts,
            "glossary": GLOSSARY,
            "rows": self.rows,
        }


def _verdicts(residuals: dict, points: list, tol: float) -> dict:
    out = {}
    for prop, res in residuals.items():
        k = int(np.argmax(res))
        out[prop] = {
            "holds": bool(res[k] <= tol),
            "max_residual": float(res[k]),
            "worst_sample": {"index": k, **points[k].as_dict()},
            "implied_by": None,
        }
    for strong, weak in (("berwald", "weakly_berwald"), ("berwald", "landsberg"), ("landsberg", "weakly_landsberg")):
        if out[strong]["holds"] and not out[weak]["holds"]:
            out[weak]["holds"] = True
            out[weak]["implied_by"] = strong
    return out


def classify_frames(name: str, frames: list[TensorFrame], tol: float, sampler: dict | None = None,
                    scales: list[float] | None = None) -> ClassificationReport:
    """Classify from precomputed frames.

    ``scales`` rescales each frame to the indicatrix when its fiber vector is
    not normalised: a tensor of degree ``k`` is multiplied by ``F**(-k)``.
    """
    residuals = {prop: np.zeros(len(frames)) for prop in PROPERTIES}
    rows = []
    for i, fr in enumerate(frames):
        F = 1.0 if scales is None else scales[i]
        for prop, (attr, degree) in PROPERTIES.items():
            r = float(np.max(np.abs(getattr(fr, attr)))) * F ** (-degree)
            residuals[prop][i] = r
            rows.append({"check": prop, "sample": i, "residual": r})
    points = [fr.at for fr in frames]
    return ClassificationReport(name, _verdicts(residuals, points, tol), tol, sampler or {}, rows)


def classify(m, s: SamplerConfig | None = None, tol: float = DEFAULT_TOLERANCE) -> ClassificationReport:
    """Decide the four properties from samples on the indicatrix."""
    s = s or SamplerConfig()
    if s.y_mode != "indicatrix":
        raise ValueError("classification samples must lie on the indicatrix")
    points = sample_points(m, s)
    frames = [compute_frame(m, p) for p in points]
    return classify_frames(m.name, frames, tol, s.as_dict())


# --- product verification ---------------------------------------------------

@dataclass(frozen=True)
class _Check:
    id: str
    name: str
    tolerance: float
    description: str


PRODUCT_CHECKS = (
    _Check("1", "hessian_blocks", 1e-9, "fundamental tensor equals the blockwise assembly from K, H and f"),
    _Check("2a", "inverse_identity", 1e-9, "closed-form inverse times fundamental tensor is the identity"),
    _Check("2b", "inverse_match", 1e-9, "closed-form inverse equals the generic inverse"),
    _Check("3", "contractions", 1e-9, "G^{ih}K_h, G^{ih'}H_{h'}, G^{ih'}H_{h'j'} closed forms"),
    _Check("4", "spray_blocks", 1e-8, "spray blocks equal the factor sprays"),
    _Check("5a", "nconn_cross", 1e-7, "nonlinear connection cross blocks vanish"),
    _Check("5b", "nconn_diag", 1e-8, "nonlinear connection diagonal blocks equal factor connections"),
    _Check("6a", "berwald_conn_cross", 1e-7, "mixed Berwald connection coefficients vanish"),
    _Check("6b", "berwald_conn_diag", 1e-8, "pure Berwald connection blocks equal factor coefficients"),
    _Check("7a", "berwald_curv_cross", 1e-7, "mixed Berwald curvature components vanish"),
    _Check("7b", "berwald_curv_diag", 1e-7, "pure Berwald curvature blocks equal factor curvatures"),
    _Check("8a", "mean_berwald_cross", 1e-7, "mean Berwald curvature is block diagonal"),
    _Check("8b", "mean_berwald_diag", 1e-7, "mean Berwald diagonal blocks equal factor tensors"),
    _Check("9a", "landsberg_cross", 1e-7, "mixed Landsberg components vanish"),
    _Check("9b", "landsberg_relation", 1e-7, "L_ijl = f_K L1_ijl and L_i'j'l' = f_H L2_i'j'l'"),
    _Check("10", "mean_landsberg_relation", 1e-7, "J_i = J1_i and J_i' = J2_i'"),
    _Check("11", "theorem_consistency", 0.0, "product verdicts equal the AND of factor verdicts"),
)


def _scaled_diff(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def _mixed_mask(labels: np.ndarray, rank: int) -> np.ndarray:
    grids = np.meshgrid(*([labels] * rank), indexing="ij")
    same = np.ones(grids[0].shape, dtype=bool)
    for g in grids[1:]:
        same &= g == grids[0]
    return ~same


def _max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def _block(t: np.ndarray, sl: slice) -> np.ndarray:
    return t[(sl,) * t.ndim]


def contraction_pairs(q, G_upper: np.ndarray, m: int, mixed_hessian_coeff: float = -1.0) -> list:
    """(lhs, rhs) pairs for the inverse-metric contractions against the factor gradients.

    The third identity follows from G^{ih'} = -(f_KH/Delta) y^i y^{h'} and
    y^{h'} H_{h'j'} = H_{j'}, which gives the coefficient -1/Delta.
    """
    fp = q.fp
    delta = fp.delta
    b1, b2 = slice(0, m), slice(m, G_upper.shape[0])
    return [
        (G_upper[b1, b1] @ q.K_i, (fp.f_H - 2 * fp.K * fp.f_KH) / delta * q.y1),
        (G_upper[b1, b2] @ q.H_i, -2.0 / delta * fp.H * fp.f_KH * q.y1),
        (G_upper[b1, b2] @ q.H_ij, mixed_hessian_coeff / delta * fp.f_KH * np.outer(q.y1, q.H_i)),
    ]


def product_sample_residuals(pm: ProductMetric, p: SamplePoint, fr: TensorFrame,
                             fr1: TensorFrame, fr2: TensorFrame) -> dict:
    """Residuals of checks 1-10 at one sample."""
    m = pm.m
    b1, b2 = slice(0, m), slice(m, pm.dim)
    labels = np.array([0] * m + [1] * pm.n)
    q = product_quantities(pm, p)
    fp = q.fp
    out = {}

    out["hessian_blocks"] = _scaled_diff(fr.G_lower, fundamental_tensor_blocks(pm, p, q))
    cf = inverse_product_closed_form(pm, p, quantities=q)
    out["inverse_identity"] = _max_abs(cf @ fr.G_lower - np.eye(pm.dim))
    out["inverse_match"] = _scaled_diff(cf, fr.G_upper)

    out["contractions"] = max(_scaled_diff(a, b) for a, b in contraction_pairs(q, fr.G_upper, m))

    out["spray_blocks"] = max(_scaled_diff(fr.spray[b1], fr1.spray), _scaled_diff(fr.spray[b2], fr2.spray))

    def split(attr):
        t = getattr(fr, attr)
        cross = _max_abs(t[_mixed_mask(labels, t.ndim)])
        diag = max(_scaled_diff(_block(t, b1), getattr(fr1, attr)),
                   _scaled_diff(_block(t, b2), getattr(fr2, attr)))
        return cross, diag

    out["nconn_cross"], out["nconn_diag"] = split("nconn")
    out["berwald_conn_cross"], out["berwald_conn_diag"] = split("berwald_conn")
    out["berwald_curv_cross"], out["berwald_curv_diag"] = split("berwald_curv")
    out["mean_berwald_cross"], out["mean_berwald_diag"] = split("mean_berwald")

    L = fr.landsberg
    out["landsberg_cross"] = _max_abs(L[_mixed_mask(labels, 3)])
    out["landsberg_relation"] = max(
        _scaled_diff(_block(L, b1), fp.f_K * fr1.landsberg),
        _scaled_diff(_block(L, b2), fp.f_H * fr2.landsberg),
    )
    J = fr.mean_landsberg
    out["mean_landsberg_relation"] = max(
        _scaled_diff(J[b1], fr1.mean_landsberg), _scaled_diff(J[b2], fr2.mean_landsberg)
    )
    return out


@dataclass
class TheoremReport:
    metric: str
    passed: bool
    checks: list
    rows: list
    classification: dict
    tolerance: float
    sampler: dict

    def check(self, name: str) -> dict:
        for c in self.checks:
            if c["name"] == name or c["id"] == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "metric": self.metric,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "sampler": self.sampler,
            "checks": self.checks,
            "classification": self.classification,
            "rows": self.rows,
        }


def verify_product(
    pm: ProductMetric,
    s: SamplerConfig | None = None,
    tol: float = DEFAULT_TOLERANCE,
    tolerances: dict | None = None,
) -> TheoremReport:
    """Run every block-structure and theorem check on sampled points.

    Factor tensors come from running the engine on each factor alone at the
    projected sample, independently of the product computation.  ``tol`` is
    the classification tolerance for the theorem-consistency check;
    ``tolerances`` overrides individual check tolerances by name.
    """
    if not isinstance(pm, ProductMetric):
        raise TypeError("verify_product needs a ProductMetric")
    s = s or SamplerConfig()
    tolerances = dict(tolerances or {})
    unknown = set(tolerances) - {c.name for c in PRODUCT_CHECKS}
    if unknown:
        raise KeyError(f"unknown check names: {sorted(unknown)}")
    points = sample_points(pm, s)

    per_sample = []
    frames, frames1, frames2, scale1, scale2 = [], [], [], [], []
    for p in points:
        p1, p2 = pm.split(p)
        fr, fr1, fr2 = compute_frame(pm, p), compute_frame(pm.factor1, p1), compute_frame(pm.factor2, p2)
        per_sample.append(product_sample_residuals(pm, p, fr, fr1, fr2))
        frames.append(fr)
        frames1.append(fr1)
        frames2.append(fr2)
        scale1.append(math.sqrt(fr1.G_val))
        scale2.append(math.sqrt(fr2.G_val))

    # product samples sit on F = 1; the factor projections are rescaled to their own indicatrices
    cp = classify_frames(pm.name, frames, tol)
    c1 = classify_frames(pm.factor1.name, frames1, tol, scales=scale1)
    c2 = classify_frames(pm.factor2.name, frames2, tol, scales=scale2)
    mismatches = [
        prop for prop in PROPERTIES if cp.holds(prop) != (c1.holds(prop) and c2.holds(prop))
    ]
    classification = {
        "product": cp.verdicts,
        "factor1": c1.verdicts,
        "factor2": c2.verdicts,
        "mismatches": mismatches,
    }

    checks, rows = [], []
    for chk in PRODUCT_CHECKS:
        tol_c = tolerances.get(chk.name, chk.tolerance)
        if chk.name == "theorem_consistency":
            res = [float(len(mismatches))]
            for i, r in enumerate(res):
                rows.append({"check": chk.id, "name": chk.name, "sample": i, "residual": r})
        else:
            res = [r[chk.name] for r in per_sample]
            for i, r in enumerate(res):
                rows.append({"check": chk.id, "name": chk.name, "sample": i, "residual": r})
        k = int(np.argmax(res))
        checks.append({
            "id": chk.id,
            "name": chk.name,
            "description": chk.description,
            "tolerance": tol_c,
            "max_residual": float(res[k]),
            "worst_sample": k,
            "passed": bool(res[k] <= tol_c),
        })
    return TheoremReport(
        metric=pm.name,
        passed=all(c["passed"] for c in checks),
        checks=checks,
        rows=rows,
        classification=classification,
        tolerance=tol,
        sampler=s.as_dict(),
    )
