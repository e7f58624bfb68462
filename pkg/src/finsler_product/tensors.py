"""Fundamental tensor, spray, connections and curvatures at a sample point.

The spray is assembled inside jet arithmetic over the fiber (including the
inverse of the fundamental tensor), so that the nonlinear connection, the
Berwald connection and the Berwald curvature are exact y-derivatives of it.

Array layout: ``nconn[a, b] = Gamma^a_b``, ``berwald_conn[a, b, c] =
Gamma^a_{b;c}``, ``berwald_curv[a, b, c, d] = B^a_{bcd}``, ``cartan_h[a, b, c]
= Gamma^a_{b;c}`` and ``cartan_v[a, b, c] = Gamma^a_{bc}``.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DeltaNearZero, SingularMatrix
from .jets import DerivSpec, Jet, algebra, jet_variable
from .metrics import eval_G
from .product import ProductMetric, product_quantities
from .sampling import SamplePoint

__all__ = [
    "TensorFrame",
    "compute_frame",
    "frame_from_jet",
    "fundamental_tensor",
    "fundamental_tensor_blocks",
    "inverse_generic",
    "inverse_product_closed_form",
    "spray",
    "nonlinear_connection",
    "cartan_coeffs",
    "berwald_connection",
    "berwald_curvature",
    "mean_berwald",
    "landsberg",
    "mean_landsberg",
    "MIN_ORDERS",
]

# (order_x, order_y) of the G jet each quantity needs
MIN_ORDERS = {
    "fundamental_tensor": (0, 2),
    "spray": (1, 2),
    "nonlinear_connection": (1, 3),
    "cartan": (1, 3),
    "berwald_connection": (1, 4),
    "berwald_curvature": (1, 5),
    "frame": (1, 5),
}


@dataclass(frozen=True, eq=False)
class TensorFrame:
    at: SamplePoint
    G_val: float
    G_lower: np.ndarray
    G_upper: np.ndarray
    spray: np.ndarray
    nconn: np.ndarray
    cartan_h: np.ndarray
    cartan_v: np.ndarray
    berwald_conn: np.ndarray
    berwald_curv: np.ndarray
    mean_berwald: np.ndarray
    landsberg: np.ndarray
    mean_landsberg: np.ndarray

    TENSORS = (
        "G_lower", "G_upper", "spray", "nconn", "cartan_h", "cartan_v",
        "berwald_conn", "berwald_curv", "mean_berwald", "landsberg", "mean_landsberg",
    )

    def as_dict(self) -> dict:
        out = {"at": self.at.as_dict(), "G_val": self.G_val}
        for name in self.TENSORS:
            out[name] = getattr(self, name).tolist()
        return out


def _require(spec: DerivSpec, what: str):
    ox, oy = MIN_ORDERS[what]
    if spec.order_x < ox or spec.order_y < oy:
        raise ValueError(
            f"{what} needs a jet of x-order >= {ox} and y-order >= {oy}, got {spec.order_x}/{spec.order_y}"
        )


# --- dense derivative tensors out of a jet ---------------------------------

@functools.lru_cache(maxsize=None)
def _tensor_index(spec: DerivSpec, k: int):
    alg = algebra(spec)
    d = spec.dim_y
    idx = np.empty((d,) * k, dtype=np.intp)
    fac = np.empty((d,) * k)
    for combo in itertools.product(range(d), repeat=k):
        e = [0] * d
        for c in combo:
            e[c] += 1
        i = alg.y_index[tuple(e)]
        idx[combo] = i
        fac[combo] = alg.y_fact[i]
    return idx, fac


def y_tensor(coeffs: np.ndarray, spec: DerivSpec, k: int, x_row: int = 0) -> np.ndarray:
    """All k-th fiber partials (as a symmetric array) from a coefficient row."""
    if k > spec.order_y:
        raise ValueError(f"jet carries y-order {spec.order_y} < {k}")
    if k == 0:
        return np.asarray(coeffs[..., x_row, 0] * 1.0)
    idx, fac = _tensor_index(spec, k)
    return coeffs[..., x_row, idx] * fac


def _x_row(spec: DerivSpec, slot: int) -> int:
    e = [0] * spec.dim_x
    e[slot] = 1
    return algebra(spec).x_index[tuple(e)]


@functools.lru_cache(maxsize=None)
def _shift_table(src: DerivSpec, out: DerivSpec, ydiff: tuple):
    """Map output monomial n to source monomial n + ydiff with weight (n+ydiff)!/n!."""
    sa, oa = algebra(src), algebra(out)
    cols, wts = [], []
    for n in oa.y_monos:
        m = tuple(a + b for a, b in zip(n, ydiff))
        if sum(m) > src.order_y:
            raise ValueError("source jet order too low for the requested derivative")
        cols.append(sa.y_index[m])
        wts.append(math.prod(math.factorial(a) // math.factorial(b) for a, b in zip(m, n)))
    return np.array(cols, dtype=np.intp), np.array(wts, dtype=float)


def _derived(j: Jet, out: DerivSpec, ydiff: tuple, x_slot: int | None = None) -> np.ndarray:
    """Coefficients (shape (1, ny_out)) of d^ydiff d_x G as a fiber polynomial at fixed x."""
    row = 0 if x_slot is None else _x_row(j.spec, x_slot)
    cols, wts = _shift_table(j.spec, out, ydiff)
    return (j.coeffs[row, cols] * wts)[None, :]


def _unit(d, *slots):
    e = [0] * d
    for s in slots:
        e[s] += 1
    return tuple(e)


# --- jet-valued linear algebra ---------------------------------------------

def _matmul(alg, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(d,d,nx,ny) @ (d,d,nx,ny) in jet arithmetic."""
    return alg.mul(a[:, :, None], b[None, :, :]).sum(axis=1)


def _matvec(alg, a: np.ndarray, v: np.ndarray) -> np.ndarray:
    return alg.mul(a, v[None, :]).sum(axis=1)


def _jet_inverse(alg, spec: DerivSpec, mat: np.ndarray) -> np.ndarray:
    """Inverse of a jet-valued SPD matrix by a truncated Neumann series."""
    m0 = mat[:, :, 0, 0]
    m0inv = inverse_generic(m0)
    tail = mat.copy()
    tail[:, :, 0, 0] = 0.0
    x = -np.einsum("ab,bc...->ac...", m0inv, tail)
    const = np.zeros_like(mat)
    const[:, :, 0, 0] = m0inv
    r = const
    for _ in range(spec.max_degree):
        r = const + _matmul(alg, x, r)
    return r


# --- public operations ------------------------------------------------------

def inverse_generic(G_lower: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix through its Cholesky factor."""
    G_lower = np.asarray(G_lower, dtype=float)
    if G_lower.ndim != 2 or G_lower.shape[0] != G_lower.shape[1]:
        raise ValueError("expected a square matrix")
    try:
        c = cho_factor(G_lower)
    except LinAlgError as err:
        raise SingularMatrix(f"fundamental tensor is not positive definite: {err}") from None
    return cho_solve(c, np.eye(G_lower.shape[0]))


def _jet(m, p: SamplePoint, what: str) -> Jet:
    ox, oy = MIN_ORDERS[what]
    return eval_G(m, p, DerivSpec(m.dim, m.dim, ox, oy))


def fundamental_tensor(m, p: SamplePoint) -> tuple[float, np.ndarray]:
    j = _jet(m, p, "fundamental_tensor")
    return j.value, y_tensor(j.coeffs, j.spec, 2)


def fundamental_tensor_blocks(pm: ProductMetric, p: SamplePoint, quantities=None) -> np.ndarray:
    """Product fundamental tensor assembled blockwise from the factor data."""
    q = quantities or product_quantities(pm, p)
    fp = q.fp
    m = pm.m
    G = np.empty((pm.dim, pm.dim))
    G[:m, :m] = fp.f_K * q.K_ij + fp.f_KK * np.outer(q.K_i, q.K_i)
    G[:m, m:] = fp.f_KH * np.outer(q.K_i, q.H_i)
    G[m:, :m] = fp.f_KH * np.outer(q.H_i, q.K_i)
    G[m:, m:] = fp.f_H * q.H_ij + fp.f_HH * np.outer(q.H_i, q.H_i)
    return G


def inverse_product_closed_form(
    pm: ProductMetric, p: SamplePoint, delta_floor: float = 1e-12, quantities=None
) -> np.ndarray:
    """Inverse fundamental tensor of a product from the factor inverses."""
    q = quantities or product_quantities(pm, p)
    fp = q.fp
    delta = fp.delta
    if not abs(delta) > delta_floor:
        raise DeltaNearZero(f"discriminant {delta!r} vanishes at the sample")
    Kinv = inverse_generic(q.K_ij)
    Hinv = inverse_generic(q.H_ij)
    m = pm.m
    out = np.empty((pm.dim, pm.dim))
    out[:m, :m] = (Kinv - fp.f_H * fp.f_KK / delta * np.outer(q.y1, q.y1)) / fp.f_K
    out[:m, m:] = -fp.f_KH / delta * np.outer(q.y1, q.y2)
    out[m:, :m] = out[:m, m:].T
    out[m:, m:] = (Hinv - fp.f_K * fp.f_HH / delta * np.outer(q.y2, q.y2)) / fp.f_H
    return out


def spray_jet(j: Jet, y0) -> tuple[np.ndarray, DerivSpec]:
    """Spray coefficients as fiber jets of order ``order_y - 2`` (shape (d, 1, ny))."""
    _require(j.spec, "spray")
    d = j.spec.dim_y
    q = j.spec.order_y - 2
    out = DerivSpec(d, d, 0, q)
    alg = algebra(out)
    ny = alg.ny
    Gl = np.empty((d, d, 1, ny))
    Gyx = np.empty((d, d, 1, ny))
    Gx = np.empty((d, 1, ny))
    for b in range(d):
        Gx[b] = _derived(j, out, _unit(d), x_slot=b)
        for c in range(d):
            Gl[b, c] = _derived(j, out, _unit(d, b, c))
            Gyx[b, c] = _derived(j, out, _unit(d, b), x_slot=c)
    yv = np.stack([jet_variable(out, d + c, y0[c]).coeffs for c in range(d)])
    v = _matvec(alg, Gyx, yv) - Gx
    Ginv = _jet_inverse(alg, out, Gl)
    return 0.5 * _matvec(alg, Ginv, v), out


def frame_from_jet(j: Jet, p: SamplePoint) -> TensorFrame:
    """Every tensor of the frame from one G jet of orders (1, 5)."""
    _require(j.spec, "frame")
    d = j.spec.dim_y
    y = np.array(p.y)
    G_lower = y_tensor(j.coeffs, j.spec, 2)
    G_upper = inverse_generic(G_lower)
    gs, gspec = spray_jet(j, p.y)
    sp = y_tensor(gs, gspec, 0)
    nconn = y_tensor(gs, gspec, 1)
    bconn = y_tensor(gs, gspec, 2)
    bcurv = y_tensor(gs, gspec, 3)
    cartan_h, cartan_v = _cartan(j, G_upper, nconn)
    E = 0.5 * np.einsum("abca->bc", bcurv)
    L = -0.25 * np.einsum("n,na,abce->bce", y, G_lower, bcurv)
    J = 2.0 * np.einsum("bc,abc->a", G_upper, L)
    return TensorFrame(
        at=p, G_val=j.value, G_lower=G_lower, G_upper=G_upper, spray=sp, nconn=nconn,
        cartan_h=cartan_h, cartan_v=cartan_v, berwald_conn=bconn, berwald_curv=bcurv,
        mean_berwald=E, landsberg=L, mean_landsberg=J,
    )


def _cartan(j: Jet, G_upper, nconn):
    d = j.spec.dim_y
    G3 = y_tensor(j.coeffs, j.spec, 3)
    # dGx[m, b, c] = d/dx^c of G_{mb}
    dGx = np.stack([y_tensor(j.coeffs, j.spec, 2, _x_row(j.spec, c)) for c in range(d)], axis=-1)
    # delta_c(G_{mb}) = d_c G_{mb} - Gamma^a_c dG_{mb}/dy^a
    D = dGx - np.einsum("ac,mba->mbc", nconn, G3)
    h = 0.5 * np.einsum("am,mbc->abc", G_upper, D + D.transpose(0, 2, 1) - D.transpose(2, 0, 1))
    v = 0.5 * np.einsum("am,bcm->abc", G_upper, G3)
    return h, v


def compute_frame(m, p: SamplePoint) -> TensorFrame:
    return frame_from_jet(eval_G(m, p), p)


def _spray_derivative(m, p: SamplePoint, what: str, k: int) -> np.ndarray:
    j = _jet(m, p, what)
    gs, gspec = spray_jet(j, p.y)
    return y_tensor(gs, gspec, k)


def spray(m, p: SamplePoint) -> np.ndarray:
    return _spray_derivative(m, p, "spray", 0)


def nonlinear_connection(m, p: SamplePoint) -> np.ndarray:
    return _spray_derivative(m, p, "nonlinear_connection", 1)


def berwald_connection(m, p: SamplePoint) -> np.ndarray:
    return _spray_derivative(m, p, "berwald_connection", 2)


def berwald_curvature(m, p: SamplePoint) -> np.ndarray:
    return _spray_derivative(m, p, "berwald_curvature", 3)


def cartan_coeffs(m, p: SamplePoint) -> tuple[np.ndarray, np.ndarray]:
    j = _jet(m, p, "cartan")
    G_upper = inverse_generic(y_tensor(j.coeffs, j.spec, 2))
    gs, gspec = spray_jet(j, p.y)
    return _cartan(j, G_upper, y_tensor(gs, gspec, 1))


def mean_berwald(m, p: SamplePoint) -> np.ndarray:
    return compute_frame(m, p).mean_berwald


def landsberg(m, p: SamplePoint) -> np.ndarray:
    return compute_frame(m, p).landsberg


def mean_landsberg(m, p: SamplePoint) -> np.ndarray:
    return compute_frame(m, p).mean_landsberg
