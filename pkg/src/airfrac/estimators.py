"""Least-squares estimators of the airborne fraction with HAC inference.

Four models are supported, all fitted by ordinary least squares:

=====  ==========================================  ==========  ===============
model  regression                                  intercept   alpha is
=====  ==========================================  ==========  ===============
M1     G/E on 1                                    yes         the intercept
M2     G on E                                      no          slope on E
M3     G/E on 1, ENSO, VAI                         yes         the intercept
M4     G on E, ENSO, VAI                           no          slope on E
=====  ==========================================  ==========  ===============

Standard errors come from the Newey-West estimator with Bartlett weights.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DivisionHazardError, EstimationError
from .ingest import AnnualSeries, CarbonDataset

__all__ = [
    "ModelId",
    "RegressionFit",
    "default_hac_lag",
    "ols",
    "newey_west",
    "ratio_series",
    "ratio_af",
    "regression_af",
    "ratio_af_cov",
    "fit_all",
]

Z95 = 1.96


class ModelId(str, enum.Enum):
    M1_RATIO = "M1_ratio"
    M2_REGRESSION = "M2_regression"
    M3_RATIO_COV = "M3_ratio_cov"
    M4_REGRESSION_COV = "M4_regression_cov"
    GENERIC = "generic"


@dataclass(frozen=True)
class RegressionFit:
    coefficients: np.ndarray
    names: tuple
    hac_covariance: np.ndarray
    residuals: AnnualSeries
    residual_sd: float
    r_squared: float
    hac_lag: int
    model_id: ModelId = ModelId.GENERIC

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.hac_covariance), 0.0, None))

    @property
    def ci_95(self) -> np.ndarray:
        se = self.standard_errors
        return np.column_stack([self.coefficients - Z95 * se, self.coefficients + Z95 * se])

    @property
    def nobs(self) -> int:
        return len(self.residuals)

    @property
    def alpha(self) -> float:
        return float(self.coefficients[0])

    @property
    def se(self) -> float:
        return float(self.standard_errors[0])

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def to_dict(self, reference_se: float | None = None) -> dict:
        """JSON-ready summary laid out like a column of the results table."""
        lo, hi = self.ci_95[0]
        out = {
            "model": self.model_id.value,
            "alpha": self.alpha,
            "se": self.se,
            "relative_se": (self.se / reference_se) if reference_se else 1.0,
            "ci95": [float(lo), float(hi)],
            "sd_u": self.residual_sd,
            "r2": self.r_squared,
            "gamma1": None,
            "gamma1_se": None,
            "gamma2": None,
            "gamma2_se": None,
            "hac_lag": self.hac_lag,
            "nobs": self.nobs,
            "start_year": self.residuals.start_year,
            "end_year": self.residuals.end_year,
        }
        se = self.standard_errors
        for key, name in (("gamma1", "enso"), ("gamma2", "vai")):
            if name in self.names:
                i = self.names.index(name)
                out[key] = float(self.coefficients[i])
                out[key + "_se"] = float(se[i])
        return out


def default_hac_lag(nobs: int) -> int:
    """Automatic Newey-West truncation ``floor(4 (T/100)^(2/9))``."""
    return int(math.floor(4.0 * (nobs / 100.0) ** (2.0 / 9.0)))


def newey_west(X, residuals, lag: int) -> np.ndarray:
    """Bartlett-kernel HAC covariance of least-squares coefficients.

    Returns ``(X'X)^-1 S (X'X)^-1`` with
    ``S = sum_l w_l sum_t (x_t u_t)(x_{t-l} u_{t-l})'`` (both orders for l>0)
    and ``w_l = 1 - l/(lag+1)``.  With ``lag=0`` this is White's estimator.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    u = np.asarray(residuals, dtype=float).reshape(-1)
    T = X.shape[0]
    if u.size != T:
        raise DataError("residuals and design matrix differ in length")
    lag = int(lag)
    if lag < 0 or lag >= T:
        raise EstimationError(f"HAC lag {lag} out of range [0, {T - 1}]")
    scores = X * u[:, None]
    S = scores.T @ scores
    for ell in range(1, lag + 1):
        w = 1.0 - ell / (lag + 1.0)
        gamma = scores[ell:].T @ scores[:-ell]
        S += w * (gamma + gamma.T)
    bread = np.linalg.inv(X.T @ X)
    cov = bread @ S @ bread
    return 0.5 * (cov + cov.T)


def _as_design(columns) -> tuple[np.ndarray, tuple]:
    if isinstance(columns, dict):
        names = tuple(columns)
        cols = [np.asarray(getattr(v, "values", v), dtype=float) for v in columns.values()]
    else:
        cols = [np.asarray(getattr(v, "values", v), dtype=float) for v in columns]
        names = tuple(f"x{i}" for i in range(len(cols)))
    if not cols:
        return np.empty((0, 0)), names
    return np.column_stack(cols), names


def ols(
    y: AnnualSeries,
    X=None,
    intercept: bool = False,
    hac_lag: int | None = None,
    model_id: ModelId = ModelId.GENERIC,
) -> RegressionFit:
    """Least squares of ``y`` on the columns of ``X``.

    ``X`` is a dict ``{name: series}`` or a sequence of aligned series /
    arrays.  With ``intercept`` a constant column named ``const`` is put
    first.  The HAC lag defaults to :func:`default_hac_lag`.
    """
    yv = np.asarray(y.values, dtype=float)
    T = yv.size
    Xm, names = _as_design(X if X is not None else [])
    if Xm.size and Xm.shape[0] != T:
        raise DataError(f"design has {Xm.shape[0]} rows but y has {T}")
    if intercept:
        Xm = np.column_stack([np.ones(T), Xm]) if Xm.size else np.ones((T, 1))
        names = ("const", *names)
    if Xm.size == 0:
        raise EstimationError("no regressors")
    p = Xm.shape[1]
    if T <= p:
        raise EstimationError(f"sample of {T} too short for {p} regressors")
    coef, _, rank, sv = np.linalg.lstsq(Xm, yv, rcond=None)
    if rank < p or sv[-1] <= sv[0] * 1e-12:
        raise EstimationError("design matrix is rank deficient")
    resid = yv - Xm @ coef
    ssr = float(resid @ resid)
    yc = yv - yv.mean()
    sst = float(yc @ yc)
    if intercept and p == 1:
        r2 = 0.0
    else:
        r2 = 1.0 - ssr / sst if sst > 0 else (1.0 if ssr == 0 else 0.0)
    lag = default_hac_lag(T) if hac_lag is None else int(hac_lag)
    cov = newey_west(Xm, resid, lag)
    return RegressionFit(
        coefficients=coef,
        names=names,
        hac_covariance=cov,
        residuals=y.with_values(resid),
        residual_sd=math.sqrt(ssr / (T - p)),
        r_squared=r2,
        hac_lag=lag,
        model_id=model_id,
    )


def ratio_series(ds: CarbonDataset) -> AnnualSeries:
    """Yearly ratio G_t / E_t; refuses zero emissions."""
    e = ds.e.values
    zero = np.flatnonzero(e == 0.0)
    if zero.size:
        raise DivisionHazardError(ds.start_year + int(zero[0]))
    return ds.g.with_values(ds.g.values / e)


def _covariates(ds: CarbonDataset) -> dict:
    if not ds.has_covariates:
        raise DataError("ENSO and VAI covariates are required for this model")
    return {"enso": ds.enso_for_fit(), "vai": ds.vai}


def ratio_af(ds: CarbonDataset, hac_lag: int | None = None) -> RegressionFit:
    """Model 1: sample mean of G/E with a HAC standard error."""
    return ols(ratio_series(ds), None, intercept=True, hac_lag=hac_lag, model_id=ModelId.M1_RATIO)


def regression_af(ds: CarbonDataset, covariates: bool = False, hac_lag: int | None = None) -> RegressionFit:
    """Models 2 and 4: no-intercept regression of G on E (and ENSO, VAI)."""
    X = {"e": ds.e}
    if covariates:
        X.update(_covariates(ds))
    mid = ModelId.M4_REGRESSION_COV if covariates else ModelId.M2_REGRESSION
    return ols(ds.g, X, intercept=False, hac_lag=hac_lag, model_id=mid)


def ratio_af_cov(ds: CarbonDataset, hac_lag: int | None = None) -> RegressionFit:
    """Model 3: G/E on a constant, ENSO and VAI; alpha is the intercept."""
    X = _covariates(ds)
    return ols(ratio_series(ds), X, intercept=True, hac_lag=hac_lag, model_id=ModelId.M3_RATIO_COV)


def fit_all(ds: CarbonDataset, hac_lag: int | None = None, covariates: bool | None = None) -> list[RegressionFit]:
    """Fit models 1-4 (models 3-4 only when covariates are available)."""
    if covariates is None:
        covariates = ds.has_covariates
    fits = [ratio_af(ds, hac_lag), regression_af(ds, False, hac_lag)]
    if covariates:
        fits += [ratio_af_cov(ds, hac_lag), regression_af(ds, True, hac_lag)]
    return fits
