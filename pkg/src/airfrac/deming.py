"""Deming (errors-in-variables) slope through the origin."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, EstimationError

__all__ = ["MomentTriple", "moments", "deming_fit", "DELTA_GRID"]

DELTA_GRID = (0.2, 0.5, 1.0, 2.0, 5.0)


@dataclass(frozen=True)
class MomentTriple:
    """Uncentered second moments of G and E."""

    m_gg: float
    m_ee: float
    m_eg: float


def moments(g, e) -> MomentTriple:
    g = np.asarray(getattr(g, "values", g), dtype=float)
    e = np.asarray(getattr(e, "values", e), dtype=float)
    if g.shape != e.shape:
        raise DataError("g and e differ in length")
    T = g.size
    return MomentTriple(float(g @ g) / T, float(e @ e) / T, float(e @ g) / T)


def deming_fit(g, e, delta: float = 1.0) -> float:
    """Deming estimate of alpha in G* = alpha E* given the noise ratio ``delta``.

    ``delta`` is Var(noise in G) / Var(noise in E).  The root of the
    quadratic is evaluated in the cancellation-free form, so very large
    ``delta`` approaches the least-squares slope M_EG / M_EE smoothly.
    """
    if not delta > 0:
        raise DataError(f"delta must be positive, got {delta}")
    m = moments(g, e)
    if m.m_eg == 0.0:
        raise EstimationError("M_EG is zero; Deming slope undefined")
    a = m.m_gg - delta * m.m_ee
    root = math.sqrt(a * a + 4.0 * delta * m.m_eg ** 2)
    if a >= 0:
        num = a + root
    else:
        # a + root == 4 delta M_EG^2 / (root - a), without cancellation
        num = 4.0 * delta * m.m_eg ** 2 / (root - a)
    return num / (2.0 * m.m_eg)
