"""Cumulative airborne fraction, full-sample and trailing-window."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, EstimationError
from .ingest import AnnualSeries

__all__ = ["CafSeries", "caf_full", "caf_window", "GAP_THRESHOLD"]

GAP_THRESHOLD = 1e-9  # GtC; window emission sums smaller than this are gaps


@dataclass(frozen=True)
class CafSeries:
    """Per-year CAF over a trailing window of at most ``window`` years.

    ``gap[i]`` marks years whose window emission sum vanishes; the matching
    entry of ``values`` is NaN and must be read together with the mask.
    """

    start_year: int
    values: np.ndarray
    gap: np.ndarray
    window: int

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.start_year, self.start_year + self.values.size)

    def __len__(self):
        return self.values.size

    def rows(self):
        """(year, value or None) pairs, None at gap markers."""
        return [(int(y), None if gp else float(v)) for y, v, gp in zip(self.years, self.values, self.gap)]


def _pair(g, e):
    if isinstance(g, AnnualSeries) and isinstance(e, AnnualSeries):
        g._check_aligned(e)
        start = g.start_year
    else:
        start = getattr(g, "start_year", 0)
    gv = np.asarray(getattr(g, "values", g), dtype=float)
    ev = np.asarray(getattr(e, "values", e), dtype=float)
    if gv.shape != ev.shape:
        raise DataError("g and e differ in length")
    return start, gv, ev


def caf_full(g, e) -> float:
    """Sum of G over sum of E across the whole aligned range."""
    _, gv, ev = _pair(g, e)
    se = math.fsum(ev)
    if abs(se) < GAP_THRESHOLD:
        raise EstimationError("cumulative emissions are zero; CAF undefined")
    return math.fsum(gv) / se


def caf_window(g, e, w: int) -> CafSeries:
    """Trailing-window CAF: year t uses years max(t-w+1, t0)..t."""
    w = int(w)
    if w < 1:
        raise DataError("window length must be at least 1")
    start, gv, ev = _pair(g, e)
    num = np.empty(gv.size)
    den = np.empty(gv.size)
    for i in range(gv.size):
        lo = max(i - w + 1, 0)
        num[i] = math.fsum(gv[lo : i + 1])
        den[i] = math.fsum(ev[lo : i + 1])
    gap = np.abs(den) < GAP_THRESHOLD
    vals = np.full(gv.size, np.nan)
    vals[~gap] = num[~gap] / den[~gap]
    return CafSeries(start, vals, gap, w)
