"""Shared domain types: mass parameter derivation, regimes, comoving frames."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class Regime(Enum):
    UNSTABLE = "unstable"          # |m| < 1/sqrt(5), supercritical bifurcations
    TRANSITIONAL = "transitional"  # 1/sqrt(5) < |m| < 1/sqrt(3), subcritical
    STABLE = "stable"              # |m| > 1/sqrt(3), no spinodal instability


M_UNSTABLE = 1.0 / math.sqrt(5.0)
M_SPINODAL = 1.0 / math.sqrt(3.0)


@dataclass(frozen=True)
class Parameters:
    """Derived parameters of the homogeneous state u = m."""

    m: float
    alpha: float        # 1 - 3 m^2
    k_max: float        # sqrt(alpha) if alpha > 0 else 0
    L_min: float        # 2 pi / k_max (inf when k_max = 0)
    regime: Regime
    boundary: bool = False  # |m| exactly at 1/sqrt(5) or 1/sqrt(3)


@dataclass(frozen=True)
class Frame:
    """Comoving frame (speed s, frequency omega); k = omega/s."""

    s: float
    omega: float

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError("frame speed must be positive")

    @property
    def k(self) -> float:
        return self.omega / self.s


def params_from_mass(m: float) -> Parameters:
    """Classify the homogeneous state u = m.

    Regimes are open intervals; a mass exactly at 1/sqrt(5) or 1/sqrt(3)
    gets boundary=True and is assigned to the larger-|m| side.
    """
    if not math.isfinite(m):
        raise ValueError("mass must be finite")
    alpha = 1.0 - 3.0 * m * m
    k_max = math.sqrt(alpha) if alpha > 0 else 0.0
    L_min = 2.0 * math.pi / k_max if k_max > 0 else math.inf
    am = abs(m)
    boundary = am == M_UNSTABLE or am == M_SPINODAL
    if am < M_UNSTABLE:
        regime = Regime.UNSTABLE
    elif am < M_SPINODAL:
        regime = Regime.TRANSITIONAL
    else:
        regime = Regime.STABLE
    return Parameters(m=m, alpha=alpha, k_max=k_max, L_min=L_min,
                      regime=regime, boundary=boundary)
