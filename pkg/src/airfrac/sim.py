"""Monte Carlo machinery for the two airborne-fraction estimators.

Random numbers come from :class:`numpy.random.SeedSequence` substreams
keyed by ``(seed, purpose, block)``.  Replications are processed in fixed
blocks, so results are identical whether blocks run serially or on a
process pool, and block totals are combined with :func:`math.fsum`.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DataError
from .ingest import AnnualSeries, ScenarioSeries
from .stattests import _jb_stat, get_table, interpolate_pvalue

__all__ = [
    "DgpSpec",
    "SimStudyResult",
    "ALPHA_RATIO",
    "SIGMA_U1",
    "SIGMA_U2",
    "E0",
    "DRIFT",
    "SIGMA_XI_FALLBACK",
    "substream",
    "estimate_drift",
    "simulate_emissions",
    "simulate_g",
    "rmse_study",
    "loglog_slope",
    "asymptotic_var_ratio",
    "scaled_errors",
    "clt_diagnostic",
    "perturb_scenario",
]

# Calibration from the 1959-2022 GCP fits.
ALPHA_RATIO = 0.4386
SIGMA_U1 = 0.1258
SIGMA_U2 = 0.9088
E0 = 4.3433
DRIFT = 0.1043
# sd(xi) implied by the reported standard error 0.0241 of the drift over 63 differences
SIGMA_XI_FALLBACK = 0.0241 * math.sqrt(63)

_PURPOSE = {"emissions": 1, "g": 2, "rmse": 3, "clt": 4, "perturb": 5}


def substream(seed: int, purpose: str, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, purpose, *keys)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), _PURPOSE[purpose], *map(int, keys)]))


@dataclass(frozen=True)
class DgpSpec:
    """Random walk with drift for emissions: E_t = E_{t-1} + b + xi_t."""

    alpha: float = ALPHA_RATIO
    sigma_u: float = SIGMA_U2
    e0: float = E0
    drift_b: float = DRIFT
    sigma_xi: float = SIGMA_XI_FALLBACK
    T: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.T < 2:
            raise DataError("T must be at least 2")
        if self.sigma_u < 0 or self.sigma_xi < 0:
            raise DataError("standard deviations must be non-negative")


def estimate_drift(e: AnnualSeries) -> tuple[float, float, float]:
    """Drift, its standard error and sd of xi from first differences of E."""
    d = np.diff(np.asarray(e.values, dtype=float))
    if d.size < 2:
        raise DataError("need at least three emission values")
    b = float(d.mean())
    sd = float(d.std(ddof=1))
    return b, sd / math.sqrt(d.size), sd


def simulate_emissions(spec: DgpSpec, rng: np.random.Generator | None = None, start_year: int = 1) -> AnnualSeries:
    """E_1..E_T with E_0 = ``spec.e0``."""
    rng = rng if rng is not None else substream(spec.seed, "emissions")
    xi = rng.standard_normal(spec.T) * spec.sigma_xi
    steps = spec.drift_b + xi
    e = spec.e0 + np.cumsum(steps)
    return AnnualSeries(start_year, e)


def simulate_g(e: AnnualSeries, alpha: float, sigma_u: float, rng: np.random.Generator) -> AnnualSeries:
    """G_t = alpha E_t + u_t with iid Gaussian u_t."""
    if sigma_u < 0:
        raise DataError("sigma_u must be non-negative")
    u = rng.standard_normal(len(e)) * sigma_u
    return e.with_values(alpha * e.values + u)


# --------------------------------------------------------------------------
# RMSE study


@dataclass(frozen=True)
class SimStudyResult:
    T_grid: np.ndarray
    rmse_ratio_est: np.ndarray
    rmse_regr_est: np.ndarray
    replications: int
    seed: int
    params: dict = field(default_factory=dict)

    @property
    def relative_rmse(self) -> np.ndarray:
        return self.rmse_regr_est / self.rmse_ratio_est

    def rows(self):
        return [
            {"T": int(T), "rmse_ratio": float(a), "rmse_regression": float(b), "relative_rmse": float(b / a)}
            for T, a, b in zip(self.T_grid, self.rmse_ratio_est, self.rmse_regr_est)
        ]

    def metadata(self) -> dict:
        return {"seed": self.seed, "replications": self.replications, **self.params}


def _rmse_block(args):
    (seed, block, m, T_idx, alpha, s1, s2, e0, b, sxi, ratio_dgp) = args
    rng = substream(seed, "rmse", block)
    Tmax = int(T_idx[-1]) + 1
    xi = rng.standard_normal((m, Tmax)) * sxi
    e = e0 + np.cumsum(b + xi, axis=1)
    g = alpha * e + rng.standard_normal((m, Tmax)) * s2
    if ratio_dgp == "direct":
        ratio = alpha + rng.standard_normal((m, Tmax)) * s1
    else:
        ratio = g / e
    n = T_idx + 1.0
    a1 = np.cumsum(ratio, axis=1)[:, T_idx] / n
    a2 = np.cumsum(e * g, axis=1)[:, T_idx] / np.cumsum(e * e, axis=1)[:, T_idx]
    return ((a1 - alpha) ** 2).sum(axis=0), ((a2 - alpha) ** 2).sum(axis=0)


def rmse_study(
    alpha: float = ALPHA_RATIO,
    sigma_u1: float = SIGMA_U1,
    sigma_u2: float = SIGMA_U2,
    emissions: DgpSpec | None = None,
    T_grid=range(64, 143),
    replications: int = 10_000,
    seed: int = 2024,
    block: int = 1000,
    workers: int = 1,
    ratio_dgp: str = "direct",
) -> SimStudyResult:
    """Root-mean-squared errors of the ratio and regression estimators.

    Emissions follow ``emissions`` (random walk with drift from ``e0``) and
    G = alpha E + u with sd ``sigma_u2``.  With ``ratio_dgp="direct"`` the
    ratio estimator is applied to y_t = alpha + eps_t with sd ``sigma_u1``
    simulated on its own; with ``"cointegrated"`` it is the mean of G/E
    from the same draws the regression estimator uses.
    """
    if replications < 1000:
        raise DataError("replications must be at least 1000")
    if ratio_dgp not in ("direct", "cointegrated"):
        raise DataError(f"unknown ratio_dgp {ratio_dgp!r}")
    emissions = emissions or DgpSpec()
    T_grid = np.asarray(sorted(set(int(t) for t in T_grid)))
    T_idx = T_grid - 1
    jobs = []
    done = 0
    k = 0
    while done < replications:
        m = min(block, replications - done)
        jobs.append((seed, k, m, T_idx, alpha, sigma_u1, sigma_u2, emissions.e0,
                     emissions.drift_b, emissions.sigma_xi, ratio_dgp))
        done += m
        k += 1
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_rmse_block, jobs))
    else:
        parts = [_rmse_block(j) for j in jobs]
    se1 = np.array([math.fsum(p[0][i] for p in parts) for i in range(T_grid.size)])
    se2 = np.array([math.fsum(p[1][i] for p in parts) for i in range(T_grid.size)])
    params = {
        "alpha": alpha, "sigma_u1": sigma_u1, "sigma_u2": sigma_u2,
        "e0": emissions.e0, "drift_b": emissions.drift_b, "sigma_xi": emissions.sigma_xi,
        "ratio_dgp": ratio_dgp, "block": block,
    }
    return SimStudyResult(T_grid, np.sqrt(se1 / replications), np.sqrt(se2 / replications),
                          int(replications), int(seed), params)


def loglog_slope(T_grid, rmse) -> float:
    """Least-squares slope of log RMSE on log T."""
    return float(np.polyfit(np.log(np.asarray(T_grid, float)), np.log(np.asarray(rmse, float)), 1)[0])


# --------------------------------------------------------------------------
# Limiting-distribution diagnostics (trend-only emissions)


def asymptotic_var_ratio(sigma_u: float, z0: float, b: float, T: int) -> float:
    """sigma_u^2 * sum_{t=1..T} (z0 + b t)^-2, the variance of T (alpha1_hat - alpha)."""
    t = np.arange(1, int(T) + 1, dtype=float)
    z = z0 + b * t
    if np.any(z == 0.0):
        bad = int(t[np.flatnonzero(z == 0.0)[0]])
        raise DataError(f"z0 + b t vanishes at t = {bad}")
    return sigma_u ** 2 * math.fsum(1.0 / z ** 2)


def _errors(rng, dist, shape, sigma_u):
    if dist == "gaussian":
        return rng.standard_normal(shape) * sigma_u
    if dist == "skewed":
        return (rng.standard_exponential(shape) - 1.0) * sigma_u
    raise DataError(f"unknown error distribution {dist!r}")


def scaled_errors(dist: str, T: int, replications: int, seed: int, alpha: float = ALPHA_RATIO,
                  sigma_u: float = SIGMA_U2, z0: float = E0, b: float = DRIFT,
                  block: int = 10_000) -> tuple[np.ndarray, np.ndarray]:
    """Draws of T (alpha1_hat - alpha) and T^1.5 (alpha2_hat - alpha).

    Emissions are the deterministic trend z0 + b t; G = alpha z + u with
    Gaussian or centred-exponential errors.
    """
    z = z0 + b * np.arange(1, T + 1, dtype=float)
    s1, s2 = [], []
    done, k = 0, 0
    while done < replications:
        m = min(block, replications - done)
        rng = substream(seed, "clt", T, k)
        u = _errors(rng, dist, (m, T), sigma_u)
        g = alpha * z + u
        a1 = (g / z).mean(axis=1)
        a2 = (g @ z) / (z @ z)
        s1.append(T * (a1 - alpha))
        s2.append(T ** 1.5 * (a2 - alpha))
        done += m
        k += 1
    return np.concatenate(s1), np.concatenate(s2)


def _skew(x):
    d = x - x.mean()
    return float((d ** 3).mean() / (d ** 2).mean() ** 1.5)


def clt_diagnostic(distribution: str = "skewed", T: int = 200, replications: int = 100_000,
                   seed: int = 7, batch: int = 100, **dgp) -> dict:
    """Skewness and batch Jarque-Bera rejection rates of both scaled estimators.

    The draws are cut into consecutive batches of ``batch`` values; each
    batch is standardised and tested with the finite-sample Jarque-Bera
    table, and the share of rejections at 5% is reported.
    """
    r1, r2 = scaled_errors(distribution, T, replications, seed, **dgp)
    table = get_table("JB", "normal")
    out = {"distribution": distribution, "T": T, "replications": replications, "seed": seed, "batch": batch}
    for name, x in (("ratio", r1), ("regression", r2)):
        nb = x.size // batch
        jb = _jb_stat(x[: nb * batch].reshape(nb, batch))[0]
        pv = np.array([interpolate_pvalue(float(s), table, batch) for s in jb])
        out[name] = {
            "variance": float(x.var()),
            "skewness": _skew(x),
            "jb_reject_rate": float((pv < 0.05).mean()),
        }
    return out


# --------------------------------------------------------------------------
# Scenario perturbation


def perturb_scenario(s: ScenarioSeries, sigma_g: float = SIGMA_U2, sigma_e: float = SIGMA_XI_FALLBACK,
                     seed: int = 0) -> tuple[AnnualSeries, AnnualSeries]:
    """Add independent Gaussian noise to the scenario's G and E paths."""
    if sigma_g < 0 or sigma_e < 0:
        raise DataError("noise standard deviations must be non-negative")
    rng = substream(seed, "perturb")
    n = len(s)
    ng = rng.standard_normal(n) * sigma_g
    ne = rng.standard_normal(n) * sigma_e
    return s.g_det.with_values(s.g_det.values + ng), s.e_det.with_values(s.e_det.values + ne)
