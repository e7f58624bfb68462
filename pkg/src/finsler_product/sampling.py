"""Seeded sampling of points on the slit tangent bundle."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, SamplerExhausted

DEFAULT_BOX = (-1.0, 1.0)


@dataclass(frozen=True)
class SamplePoint:
    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same length")
        if not any(self.y):
            raise ValueError("y must be non-zero (slit tangent bundle)")

    @property
    def dim(self) -> int:
        return len(self.x)

    def scaled(self, lam: float) -> "SamplePoint":
        return SamplePoint(self.x, tuple(lam * v for v in self.y))

    def as_dict(self) -> dict:
        return {"x": list(self.x), "y": list(self.y)}


@dataclass(frozen=True)
class SamplerConfig:
    """How sample points are drawn.

    ``y_mode`` is ``"indicatrix"`` (rescale so that F = 1) or ``"sphere"``
    (keep the Euclidean unit vector).  ``x_box`` falls back to the metric's
    own domain, then to ``[-1, 1]`` per coordinate.
    """

    count: int = 100
    seed: int = 0
    x_box: tuple[tuple[float, float], ...] | None = None
    y_mode: str = "indicatrix"
    f_min: float = 1e-8
    k_min: float = 1e-8
    h_min: float = 1e-8
    max_rejections: int = 1000

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.y_mode not in ("indicatrix", "sphere"):
            raise ValueError(f"unknown y_mode {self.y_mode!r}")
        if self.x_box is not None:
            box = tuple((float(a), float(b)) for a, b in self.x_box)
            if any(not a <= b for a, b in box):
                raise ValueError("x_box intervals must be non-empty")
            object.__setattr__(self, "x_box", box)
        if self.max_rejections < 1:
            raise ValueError("max_rejections must be >= 1")

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "seed": self.seed,
            "x_box": None if self.x_box is None else [list(b) for b in self.x_box],
            "y_mode": self.y_mode,
            "f_min": self.f_min,
            "k_min": self.k_min,
            "h_min": self.h_min,
            "max_rejections": self.max_rejections,
        }


def resolve_box(metric, cfg: SamplerConfig) -> list[tuple[float, float]]:
    box = cfg.x_box if cfg.x_box is not None else getattr(metric, "domain", None)
    if box is None:
        return [DEFAULT_BOX] * metric.dim
    if len(box) != metric.dim:
        raise ValueError(f"x_box has {len(box)} intervals for a metric of dimension {metric.dim}")
    return [tuple(b) for b in box]


def accept(metric, x: Sequence[float], y: Sequence[float], cfg: SamplerConfig) -> float | None:
    """Return F(x, y) if the point passes the rejection rules, else ``None``."""
    try:
        g = metric.g_value(x, y)
        if hasattr(metric, "factor_norms"):
            k, h = metric.factor_norms(x, y)
            if k < cfg.k_min or h < cfg.h_min:
                return None
    except DomainError:
        return None
    if not g > 0:
        return None
    f = math.sqrt(g)
    return f if f > cfg.f_min else None


def sample_points(metric, cfg: SamplerConfig) -> list[SamplePoint]:
    rng = np.random.default_rng(cfg.seed)
    box = resolve_box(metric, cfg)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    out: list[SamplePoint] = []
    rejected = 0
    while len(out) < cfg.count:
        x = lo + (hi - lo) * rng.random(metric.dim)
        y = rng.standard_normal(metric.dim)
        y /= np.linalg.norm(y)
        f = accept(metric, x, y, cfg)
        if f is None:
            rejected += 1
            if rejected >= cfg.max_rejections:
                raise SamplerExhausted(
                    f"{rejected} consecutive rejections after {len(out)} accepted samples"
                )
            continue
        rejected = 0
        if cfg.y_mode == "indicatrix":
            y = y / f
        out.append(SamplePoint(tuple(x), tuple(y)))
    return out
