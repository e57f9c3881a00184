"""van Genuchten-Mualem soil hydraulic closures.

All functions accept scalar or array pressure heads [m] and parameter
containers whose fields may be scalars or per-node arrays, so the same
closures serve single-sample tests and vectorized grid evaluation.
Saturated inputs (h >= 0) are clamped to the saturated values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class VanGenuchtenParams:
    """Soil hydraulic parameter set (alpha [1/m], K_s [m/s], contents [m3/m3])."""

    alpha: float
    n_vg: float
    theta_r: float
    theta_s: float
    k_s: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError("alpha must be > 0")
        if not self.n_vg > 1:
            raise ValidationError("n_vg must be > 1")
        if not self.k_s > 0:
            raise ValidationError("k_s must be > 0")
        if not (0 <= self.theta_r < self.theta_s <= 1):
            raise ValidationError("require 0 <= theta_r < theta_s <= 1")

    @property
    def m_vg(self) -> float:
        return 1.0 - 1.0 / self.n_vg


class SoilField:
    """Per-node parameter arrays expanded from per-zone values.

    Provides the same attribute surface as ``VanGenuchtenParams`` so the
    closures below work unchanged on full grids.
    """

    def __init__(self, alpha, n_vg, theta_r, theta_s, k_s):
        self.alpha = np.asarray(alpha, dtype=float)
        self.n_vg = np.asarray(n_vg, dtype=float)
        self.theta_r = np.asarray(theta_r, dtype=float)
        self.theta_s = np.asarray(theta_s, dtype=float)
        self.k_s = np.asarray(k_s, dtype=float)

    @property
    def m_vg(self):
        return 1.0 - 1.0 / self.n_vg

    @classmethod
    def from_zones(cls, zone_of_node: np.ndarray, zones: "list[VanGenuchtenParams]") -> "SoilField":
        """Build node arrays by looking up each node's zone parameters."""
        z = np.asarray(zone_of_node, dtype=int)
        if z.min() < 0 or z.max() >= len(zones):
            raise ValidationError("zone_of_node references a zone outside soil.zones")
        pick = lambda attr: np.array([getattr(p, attr) for p in zones], dtype=float)[z]
        return cls(pick("alpha"), pick("n_vg"), pick("theta_r"), pick("theta_s"), pick("k_s"))


def effective_saturation(h, p):
    """S_e(h) in [0, 1]; 1 for h >= 0."""
    h = np.asarray(h, dtype=float)
    with np.errstate(over="ignore"):
        a = np.power(p.alpha * np.abs(np.minimum(h, 0.0)), p.n_vg)
        se = np.power(1.0 + a, -p.m_vg)
    return np.where(h >= 0.0, 1.0, se)


def water_content(h, p):
    """Volumetric water content theta(h) [m3/m3]."""
    return p.theta_r + (p.theta_s - p.theta_r) * effective_saturation(h, p)


def capillary_capacity(h, p):
    """Capillary capacity c(h) = d theta / dh [1/m]; 0 at saturation."""
    h = np.asarray(h, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        ah = p.alpha * np.abs(np.minimum(h, 0.0))
        an = np.power(ah, p.n_vg)
        c = (
            (p.theta_s - p.theta_r)
            * p.m_vg
            * p.n_vg
            * p.alpha
            * np.power(ah, p.n_vg - 1.0)
            * np.power(1.0 + an, -(p.m_vg + 1.0))
        )
    # 0/inf limits (h = 0 exactly, or overflowed powers) are dry/saturated ends
    c = np.where(np.isfinite(c), c, 0.0)
    return np.where(h >= 0.0, 0.0, c)


def hydraulic_conductivity(h, p):
    """Unsaturated hydraulic conductivity K(h) [m/s], Mualem form; K(0) = K_s."""
    h = np.asarray(h, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        a = np.power(p.alpha * np.abs(np.minimum(h, 0.0)), p.n_vg)
        se = np.power(1.0 + a, -p.m_vg)
        # se**(1/m) == 1/(1+a); write it that way to avoid pow round-trip error
        inner = 1.0 - np.power(a / (1.0 + a), p.m_vg)
        k = p.k_s * np.sqrt(se) * inner * inner
    k = np.where(np.isfinite(k), k, 0.0)
    return np.where(h >= 0.0, p.k_s * np.ones_like(k), k)
