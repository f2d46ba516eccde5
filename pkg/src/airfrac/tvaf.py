"""Time-varying airborne fraction from a scalar state-space model.

Observation and state equations::

    G_t       = alpha_t E_t + u_t,              u_t   ~ N(0, sigma_u^2)
    alpha_t+1 = alpha_t + eta_t                 (t+1 != tau)
    alpha_t+1 = 1 - alpha_t + eta_t             (t+1 == tau)

where ``tau`` is the first year with negative emissions.  Reflecting the
state around one at ``tau`` keeps the sink interpretation of alpha when
the sign of E flips.  Variances are fitted by maximum likelihood over the
log-variances with a multi-start Nelder-Mead search; alpha_t is then read
off the fixed-interval smoother.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ._backend import BACKEND, kernels
from .errors import DataError, DegenerateLikelihoodError
from .ingest import AnnualSeries

__all__ = [
    "AUTO",
    "StateSpaceSpec",
    "FilterOutput",
    "TvafEstimate",
    "detect_switch",
    "kalman_filter",
    "kalman_smoother",
    "loglik",
    "fit_tvaf",
    "concat_series",
    "BACKEND",
]

log = logging.getLogger(__name__)

AUTO = "auto"
DEFAULT_PRIOR_MEAN = 0.45
DEFAULT_PRIOR_VAR = 1e7


def detect_switch(e: AnnualSeries) -> int | None:
    """First year with negative emissions, or None."""
    neg = np.flatnonzero(np.asarray(e.values) < 0.0)
    return int(e.start_year + neg[0]) if neg.size else None


@dataclass(frozen=True)
class StateSpaceSpec:
    """Model for one series.  ``switch_year`` is ``"auto"`` (first negative
    E), ``None`` (never reflect) or an explicit year, which must then be the
    first negative-emission year."""

    obs_loadings: AnnualSeries
    obs_variance: float
    state_variance: float
    switch_year: int | None | str = AUTO
    initial_mean: float = DEFAULT_PRIOR_MEAN
    initial_variance: float = DEFAULT_PRIOR_VAR

    def __post_init__(self):
        if not (self.obs_variance >= 0 and self.state_variance >= 0):
            raise DataError("variances must be non-negative")
        if not self.initial_variance > 0:
            raise DataError("initial variance must be positive")
        first = detect_switch(self.obs_loadings)
        if self.switch_year == AUTO:
            object.__setattr__(self, "switch_year", first)
        elif self.switch_year is not None and int(self.switch_year) != first:
            raise DataError(
                f"switch year {self.switch_year} is not the first negative-emission year ({first})"
            )

    def transition(self) -> tuple[np.ndarray, np.ndarray]:
        """(F_t, c_t) for the move from t to t+1, indexed by t."""
        n = len(self.obs_loadings)
        f = np.ones(n)
        c = np.zeros(n)
        if self.switch_year is not None:
            k = int(self.switch_year) - self.obs_loadings.start_year
            if k >= 1:
                f[k - 1] = -1.0
                c[k - 1] = 1.0
        return f, c

    def with_variances(self, obs_variance, state_variance) -> "StateSpaceSpec":
        return StateSpaceSpec(
            self.obs_loadings, float(obs_variance), float(state_variance),
            self.switch_year, self.initial_mean, self.initial_variance,
        )


@dataclass(frozen=True)
class FilterOutput:
    start_year: int
    predicted_mean: np.ndarray
    predicted_variance: np.ndarray
    filtered_mean: np.ndarray
    filtered_variance: np.ndarray
    prediction_errors: np.ndarray
    prediction_variances: np.ndarray
    loglik: float


@dataclass(frozen=True)
class TvafEstimate:
    smoothed_mean: AnnualSeries
    smoothed_variance: AnnualSeries
    band_low: AnnualSeries
    band_high: AnnualSeries
    filtered_mean: AnnualSeries
    filtered_variance: AnnualSeries
    loglik: float
    ml_params: tuple
    switch_year: int | None
    optimizer: dict = field(default_factory=dict)

    @property
    def years(self) -> np.ndarray:
        return self.smoothed_mean.years

    def rows(self):
        return [
            {
                "year": int(y),
                "alpha_smoothed": float(m),
                "var": float(v),
                "lo95": float(lo),
                "hi95": float(hi),
                "alpha_filtered": float(fm),
            }
            for y, m, v, lo, hi, fm in zip(
                self.years, self.smoothed_mean.values, self.smoothed_variance.values,
                self.band_low.values, self.band_high.values, self.filtered_mean.values,
            )
        ]

    def summary(self) -> dict:
        return {
            "sigma_u2": self.ml_params[0],
            "sigma_eta2": self.ml_params[1],
            "loglik": self.loglik,
            "switch_year": self.switch_year,
            "start_year": int(self.years[0]),
            "end_year": int(self.years[-1]),
            "backend": BACKEND,
            "optimizer": self.optimizer,
        }


def _arrays(g: AnnualSeries, spec: StateSpaceSpec):
    e = spec.obs_loadings
    if not isinstance(g, AnnualSeries):
        g = AnnualSeries(e.start_year, g)
    g._check_aligned(e)
    f, c = spec.transition()
    return (
        np.ascontiguousarray(g.values, dtype=float),
        np.ascontiguousarray(e.values, dtype=float),
        f, c,
    )


def loglik(g: AnnualSeries, spec: StateSpaceSpec) -> float:
    """Gaussian log-likelihood by the prediction-error decomposition."""
    gv, ev, f, c = _arrays(g, spec)
    return kernels.kalman_loglik(
        gv, ev, f, c, float(spec.initial_mean), float(spec.initial_variance),
        float(spec.obs_variance), float(spec.state_variance),
    )


def kalman_filter(g: AnnualSeries, spec: StateSpaceSpec) -> FilterOutput:
    gv, ev, f, c = _arrays(g, spec)
    a_pred, p_pred, a_filt, p_filt, v, fv, ll = kernels.kalman_filter(
        gv, ev, f, c, float(spec.initial_mean), float(spec.initial_variance),
        float(spec.obs_variance), float(spec.state_variance),
    )
    if not math.isfinite(ll):
        bad = int(np.flatnonzero(~(np.asarray(fv) > 0))[0])
        raise DegenerateLikelihoodError(
            f"zero prediction-error variance in year {spec.obs_loadings.start_year + bad}"
        )
    return FilterOutput(spec.obs_loadings.start_year, a_pred, p_pred, a_filt, p_filt, v, fv, ll)


def kalman_smoother(filt: FilterOutput, spec: StateSpaceSpec, optimizer: dict | None = None) -> TvafEstimate:
    """Fixed-interval smoother; bands are mean +/- 1.96 sd."""
    f, _ = spec.transition()
    a_s, p_s = kernels.kalman_smooth(
        filt.predicted_mean, filt.predicted_variance,
        filt.filtered_mean, filt.filtered_variance, f,
    )
    p_s = np.maximum(p_s, 0.0)
    sd = np.sqrt(p_s)
    y0 = filt.start_year
    mk = lambda v: AnnualSeries(y0, v, "fraction")  # noqa: E731
    return TvafEstimate(
        smoothed_mean=mk(a_s),
        smoothed_variance=mk(p_s),
        band_low=mk(a_s - 1.96 * sd),
        band_high=mk(a_s + 1.96 * sd),
        filtered_mean=mk(filt.filtered_mean),
        filtered_variance=mk(filt.filtered_variance),
        loglik=filt.loglik,
        ml_params=(spec.obs_variance, spec.state_variance),
        switch_year=spec.switch_year,
        optimizer=optimizer or {},
    )


LOG_VAR_FLOOR = math.log(1e-12)


def _start_points(g: AnnualSeries, e: AnnualSeries, n: int) -> list[tuple[float, float]]:
    ev, gv = e.values, g.values
    sxx = float(ev @ ev)
    slope = float(ev @ gv) / sxx if sxx > 0 else 0.0
    v0 = max(float(np.var(gv - slope * ev)), 1e-8)
    su_grid = (v0, 0.25 * v0)
    se_grid = (1e-6, 1e-4, 1e-3, 1e-2)
    pts = [(math.log(a), math.log(b)) for a in su_grid for b in se_grid]
    return pts[:n] if n <= len(pts) else pts + pts[: n - len(pts)]


def fit_tvaf(
    g: AnnualSeries,
    e: AnnualSeries,
    initial_mean: float = DEFAULT_PRIOR_MEAN,
    initial_variance: float = DEFAULT_PRIOR_VAR,
    switch_year=AUTO,
    starts: int = 8,
    maxfev: int = 2000,
    offset: AnnualSeries | None = None,
) -> TvafEstimate:
    """Maximum-likelihood fit of the two variances followed by smoothing.

    ``offset`` is subtracted from ``g`` before fitting; it carries fixed
    covariate effects such as ``gamma1 * ENSO + gamma2 * VAI``.
    """
    if len(g) < 10:
        raise DataError("fit_tvaf needs at least 10 observations")
    g._check_aligned(e)
    if offset is not None:
        g = g - offset
    base = StateSpaceSpec(e, 1.0, 1.0, switch_year, initial_mean, initial_variance)
    gv, ev, f, c = _arrays(g, base)
    a1, p1 = float(initial_mean), float(initial_variance)
    hi = math.log(max(100.0 * float(np.var(gv)), 1.0))

    def objective(theta):
        su2, se2 = math.exp(theta[0]), math.exp(theta[1])
        ll = kernels.kalman_loglik(gv, ev, f, c, a1, p1, su2, se2)
        return -ll if math.isfinite(ll) else 1e300

    bounds = [(LOG_VAR_FLOOR, hi), (LOG_VAR_FLOOR, hi)]
    best, trace = None, []
    for x0 in _start_points(g, e, starts):
        x0 = np.clip(x0, LOG_VAR_FLOOR, hi)
        res = optimize.minimize(
            objective, x0, method="Nelder-Mead", bounds=bounds,
            options={"maxfev": maxfev, "xatol": 1e-6, "fatol": 1e-9},
        )
        trace.append({"start": [float(x) for x in x0], "nll": float(res.fun),
                      "nfev": int(res.nfev), "success": bool(res.success)})
        if best is None or res.fun < best.fun:
            best = res
    converged = bool(best.success)
    if not converged:
        warnings.warn("variance optimisation did not converge; returning best point", RuntimeWarning)
    su2, se2 = math.exp(best.x[0]), math.exp(best.x[1])
    spec = base.with_variances(su2, se2)
    info = {
        "method": "Nelder-Mead",
        "starts": len(trace),
        "best_nll": float(best.fun),
        "iterations": int(best.nit),
        "evaluations": int(sum(t["nfev"] for t in trace)),
        "converged": converged,
        "trace": trace,
    }
    return kalman_smoother(kalman_filter(g, spec), spec, info)


def concat_series(first: AnnualSeries, second: AnnualSeries) -> AnnualSeries:
    """Join two series that meet without a gap."""
    if second.start_year != first.end_year + 1:
        raise DataError(
            f"cannot join {first.start_year}-{first.end_year} with {second.start_year}-{second.end_year}"
        )
    return AnnualSeries(first.start_year, np.concatenate([first.values, second.values]), first.units)
