"""Unit-root, cointegration and normality tests.

p-values for the Dickey-Fuller type tests are read off Monte Carlo quantile
tables (``data/critical_values.json``) that ship with the package and can be
rebuilt bit-identically with ``airfrac tables``.  Within a table the
p-value is linear in probability between bracketing quantiles and clamped
to ``[0.001, 0.999]`` outside the grid.

ADF variants, all with ``L`` lagged differences:

``AR``   dy_t = rho y_{t-1} + ...                      (no deterministic terms)
``ARD``  dy_t = b + rho y_{t-1} + ...                  (constant)
``TS``   dy_t = b + c t + rho y_{t-1} + ...            (constant and trend)
"""
from __future__ import annotations

import enum
import functools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import DataError, EstimationError
from .ingest import AnnualSeries

__all__ = [
    "TestId",
    "TestResult",
    "CriticalValueTable",
    "PROB_GRID",
    "export_tables_csv",
    "adf_statistic",
    "adf_test",
    "engle_granger",
    "jarque_bera",
    "interpolate_pvalue",
    "simulate_critical_values",
    "load_tables",
    "get_table",
    "build_default_tables",
    "save_tables",
    "TABLE_PATH",
]

TABLE_PATH = Path(__file__).with_name("data") / "critical_values.json"

PROB_GRID = (
    0.001, 0.005, 0.01, 0.025, 0.05, 0.10, 0.20, 0.30, 0.40, 0.50,
    0.60, 0.70, 0.80, 0.90, 0.95, 0.975, 0.99, 0.995, 0.999,
)
P_MIN, P_MAX = 0.001, 0.999

_VARIANT_TERMS = {"AR": 0, "ARD": 1, "TS": 2}


class TestId(str, enum.Enum):
    __test__ = False

    ADF_AR = "ADF_AR"
    ADF_ARD = "ADF_ARD"
    ADF_TS = "ADF_TS"
    ENGLE_GRANGER = "ENGLE_GRANGER"
    JARQUE_BERA = "JARQUE_BERA"


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    test_id: TestId
    statistic: float
    lags: int
    p_value: float
    sample_size: int
    extra: dict = field(default_factory=dict)

    @property
    def reject_at_5pct(self) -> bool:
        return self.p_value < 0.05

    def to_dict(self) -> dict:
        return {
            "test": self.test_id.value,
            "statistic": self.statistic,
            "lags": self.lags,
            "p_value": self.p_value,
            "reject_5pct": self.reject_at_5pct,
            "sample_size": self.sample_size,
            **self.extra,
        }


@dataclass(frozen=True)
class CriticalValueTable:
    """Quantiles of a null distribution on a grid of sample sizes.

    ``quantiles[i, j]`` is the ``probs[j]`` quantile at sample size
    ``sizes[i]``.  ``tail`` says which tail the test rejects in.
    """

    family: str
    variant: str
    sizes: tuple
    probs: tuple
    quantiles: np.ndarray
    replications: int
    seed: int
    tail: str = "lower"

    @property
    def key(self) -> str:
        return f"{self.family}/{self.variant}"

    def at_size(self, T: int) -> np.ndarray:
        """Quantile vector at sample size ``T`` (linear in T, clamped)."""
        sizes = np.asarray(self.sizes, dtype=float)
        if T <= sizes[0]:
            return self.quantiles[0]
        if T >= sizes[-1]:
            return self.quantiles[-1]
        i = int(np.searchsorted(sizes, T, side="right")) - 1
        w = (T - sizes[i]) / (sizes[i + 1] - sizes[i])
        return (1.0 - w) * self.quantiles[i] + w * self.quantiles[i + 1]

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "variant": self.variant,
            "tail": self.tail,
            "sizes": list(self.sizes),
            "probs": list(self.probs),
            "quantiles": [[float(f"{q:.10g}") for q in row] for row in self.quantiles],
            "replications": self.replications,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, d: dict) -> "CriticalValueTable":
        return cls(
            family=d["family"],
            variant=d["variant"],
            sizes=tuple(d["sizes"]),
            probs=tuple(d["probs"]),
            quantiles=np.asarray(d["quantiles"], dtype=float),
            replications=int(d["replications"]),
            seed=int(d["seed"]),
            tail=d.get("tail", "lower"),
        )


def interpolate_pvalue(statistic: float, table: CriticalValueTable, T: int) -> float:
    """p-value of ``statistic`` at sample size ``T`` from a quantile table."""
    if table is None:
        raise DataError("no critical-value table supplied")
    q = table.at_size(T)
    probs = np.asarray(table.probs, dtype=float)
    cdf = float(np.interp(statistic, q, probs, left=P_MIN, right=P_MAX))
    if statistic < q[0]:
        cdf = P_MIN
    elif statistic > q[-1]:
        cdf = P_MAX
    p = cdf if table.tail == "lower" else 1.0 - cdf
    return min(max(p, P_MIN), P_MAX)


# --------------------------------------------------------------------------
# ADF / Engle-Granger


def _values(y) -> np.ndarray:
    return np.asarray(getattr(y, "values", y), dtype=float).reshape(-1)


def adf_statistic(y, variant: str = "AR", lags: int = 0) -> tuple[float, int]:
    """t-ratio on ``y_{t-1}`` in the ADF regression and the number of rows used."""
    variant = variant.upper()
    if variant not in _VARIANT_TERMS:
        raise DataError(f"unknown ADF variant {variant!r}")
    y = _values(y)
    T = y.size
    L = int(lags)
    if L < 0:
        raise EstimationError("lag order must be non-negative")
    k = _VARIANT_TERMS[variant] + 1 + L
    n = T - L - 1
    if T - L - 2 <= k or n <= k:
        raise EstimationError(f"series of length {T} too short for {variant} ADF with {L} lags")
    dy = np.diff(y)
    rows = np.arange(L + 1, T)  # index t of y_t, t = L+1..T-1
    cols = []
    if variant in ("ARD", "TS"):
        cols.append(np.ones(n))
    if variant == "TS":
        cols.append(rows.astype(float) + 1.0)
    cols.append(y[rows - 1])
    for ell in range(1, L + 1):
        cols.append(dy[rows - 1 - ell])
    X = np.column_stack(cols)
    target = dy[rows - 1]
    coef, _, rank, _ = np.linalg.lstsq(X, target, rcond=None)
    if rank < X.shape[1]:
        raise EstimationError("ADF regression is rank deficient")
    resid = target - X @ coef
    s2 = float(resid @ resid) / (n - X.shape[1])
    j = _VARIANT_TERMS[variant]
    xtx_inv = np.linalg.inv(X.T @ X)
    se = math.sqrt(s2 * xtx_inv[j, j])
    if se == 0.0:
        raise EstimationError("zero residual variance in ADF regression")
    return float(coef[j] / se), n


def adf_test(y, variant: str = "AR", lags: int = 0, table: CriticalValueTable | None = None) -> TestResult:
    """Augmented Dickey-Fuller test of a unit root against stationarity."""
    variant = variant.upper()
    stat, n = adf_statistic(y, variant, lags)
    table = table or get_table("ADF", variant)
    T = _values(y).size
    p = interpolate_pvalue(stat, table, T - int(lags))
    return TestResult(TestId("ADF_" + variant), stat, int(lags), p, T, {"variant": variant, "nobs": n})


def engle_granger(y, x, lags: int = 0, intercept: bool = False,
                  table: CriticalValueTable | None = None) -> TestResult:
    """Residual-based test of no cointegration between ``y`` and ``x``.

    Step 1 regresses ``y`` on ``x`` (without a constant unless
    ``intercept``); step 2 runs the AR-variant ADF regression on the
    residuals and compares with Engle-Granger critical values.
    """
    yv, xv = _values(y), _values(x)
    if yv.size != xv.size:
        raise DataError("y and x differ in length")
    if intercept:
        X = np.column_stack([np.ones_like(xv), xv])
        coef = np.linalg.lstsq(X, yv, rcond=None)[0]
        resid = yv - X @ coef
        slope, const = float(coef[1]), float(coef[0])
    else:
        sxx = float(xv @ xv)
        if sxx == 0.0:
            raise EstimationError("regressor is identically zero")
        slope, const = float(xv @ yv) / sxx, 0.0
        resid = yv - slope * xv
    stat, n = adf_statistic(resid, "AR", lags)
    variant = "c" if intercept else "nc"
    table = table or get_table("EG", variant)
    p = interpolate_pvalue(stat, table, yv.size - int(lags))
    return TestResult(
        TestId.ENGLE_GRANGER, stat, int(lags), p, yv.size,
        {"slope": slope, "intercept": const, "variant": variant, "nobs": n},
    )


# --------------------------------------------------------------------------
# Jarque-Bera


def _jb_stat(x: np.ndarray) -> tuple[float, float, float]:
    n = x.shape[-1]
    d = x - x.mean(axis=-1, keepdims=True)
    m2 = (d * d).mean(axis=-1)
    m3 = (d ** 3).mean(axis=-1)
    m4 = (d ** 4).mean(axis=-1)
    skew = m3 / m2 ** 1.5
    kurt = m4 / m2 ** 2
    return n / 6.0 * (skew ** 2 + (kurt - 3.0) ** 2 / 4.0), skew, kurt


def jarque_bera(x, finite_sample: bool = False, table: CriticalValueTable | None = None) -> TestResult:
    """Jarque-Bera test of normality.

    The p-value is the chi-square(2) upper tail unless ``finite_sample`` is
    set, in which case it is read from the simulated small-sample table.
    """
    x = _values(x)
    n = x.size
    if n < 8:
        raise DataError("Jarque-Bera needs at least 8 observations")
    if np.ptp(x) == 0.0:
        raise EstimationError("zero-variance input to Jarque-Bera")
    jb, skew, kurt = _jb_stat(x)
    jb, skew, kurt = float(jb), float(skew), float(kurt)
    if finite_sample:
        table = table or get_table("JB", "normal")
        p = interpolate_pvalue(jb, table, n)
    else:
        p = float(stats.chi2.sf(jb, 2))
    return TestResult(
        TestId.JARQUE_BERA, jb, 0, p, n,
        {"skewness": skew, "kurtosis": kurt, "finite_sample": finite_sample},
    )


# --------------------------------------------------------------------------
# Critical-value simulation

_FAMILY_CODE = {"ADF": 1, "EG": 2, "JB": 3}
_VARIANT_CODE = {"AR": 0, "ARD": 1, "TS": 2, "nc": 10, "c": 11, "normal": 20}


def _projector_resid(Y: np.ndarray, D: np.ndarray | None) -> np.ndarray:
    """Residualise rows of Y against the columns of D."""
    if D is None:
        return Y
    beta = np.linalg.solve(D.T @ D, D.T @ Y.T)
    return Y - (D @ beta).T


def _df_tstats(levels: np.ndarray, terms: int) -> np.ndarray:
    """Dickey-Fuller (L=0) t-ratios for each row of ``levels`` (reps x T)."""
    T = levels.shape[1]
    n = T - 1
    dy = np.diff(levels, axis=1)
    ylag = levels[:, :-1]
    if terms == 0:
        D = None
    elif terms == 1:
        D = np.ones((n, 1))
    else:
        D = np.column_stack([np.ones(n), np.arange(2, T + 1, dtype=float)])
    dy_r = _projector_resid(dy, D)
    yl_r = _projector_resid(ylag, D)
    sxx = np.einsum("ij,ij->i", yl_r, yl_r)
    rho = np.einsum("ij,ij->i", yl_r, dy_r) / sxx
    resid = dy_r - rho[:, None] * yl_r
    s2 = np.einsum("ij,ij->i", resid, resid) / (n - terms - 1)
    return rho / np.sqrt(s2 / sxx)


def _eg_tstats(y: np.ndarray, x: np.ndarray, intercept: bool) -> np.ndarray:
    if intercept:
        xc = x - x.mean(axis=1, keepdims=True)
        yc = y - y.mean(axis=1, keepdims=True)
        slope = np.einsum("ij,ij->i", xc, yc) / np.einsum("ij,ij->i", xc, xc)
        resid = yc - slope[:, None] * xc
    else:
        slope = np.einsum("ij,ij->i", x, y) / np.einsum("ij,ij->i", x, x)
        resid = y - slope[:, None] * x
    return _df_tstats(resid, 0)


def _null_draws(family: str, variant: str, T: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    if family == "ADF":
        levels = np.cumsum(rng.standard_normal((reps, T)), axis=1)
        return _df_tstats(levels, _VARIANT_TERMS[variant])
    if family == "EG":
        y = np.cumsum(rng.standard_normal((reps, T)), axis=1)
        x = np.cumsum(rng.standard_normal((reps, T)), axis=1)
        return _eg_tstats(y, x, variant == "c")
    if family == "JB":
        return _jb_stat(rng.standard_normal((reps, T)))[0]
    raise DataError(f"unknown test family {family!r}")


def simulate_critical_values(family: str, variant: str, T_grid, replications: int = 100_000,
                             seed: int = 20240617, chunk: int = 10_000) -> CriticalValueTable:
    """Monte Carlo quantile table for one test family and variant.

    Each sample size gets its own generator seeded from
    ``(seed, family, variant, T)``, so any single cell can be regenerated
    on its own and reproduces the shipped numbers exactly.
    """
    family = family.upper()
    if family not in _FAMILY_CODE:
        raise DataError(f"unknown test family {family!r}")
    if family == "ADF":
        variant = variant.upper()
    rows = []
    for T in T_grid:
        ss = np.random.SeedSequence([seed, _FAMILY_CODE[family], _VARIANT_CODE[variant], int(T)])
        rng = np.random.default_rng(ss)
        draws = []
        left = replications
        while left > 0:
            m = min(chunk, left)
            draws.append(_null_draws(family, variant, int(T), m, rng))
            left -= m
        rows.append(np.quantile(np.concatenate(draws), PROB_GRID))
    return CriticalValueTable(
        family=family,
        variant=variant,
        sizes=tuple(int(t) for t in T_grid),
        probs=PROB_GRID,
        quantiles=np.asarray(rows),
        replications=int(replications),
        seed=int(seed),
        tail="upper" if family == "JB" else "lower",
    )


DEFAULT_SIZES = (20, 25, 30, 40, 50, 60, 70, 80, 100, 125, 150, 200, 300, 500)
DEFAULT_SPECS = (
    ("ADF", "AR"), ("ADF", "ARD"), ("ADF", "TS"),
    ("EG", "nc"), ("EG", "c"),
    ("JB", "normal"),
)


def build_default_tables(replications: int = 100_000, seed: int = 20240617, sizes=DEFAULT_SIZES,
                         progress=None) -> list[CriticalValueTable]:
    out = []
    for family, variant in DEFAULT_SPECS:
        if progress:
            progress(f"{family}/{variant}")
        out.append(simulate_critical_values(family, variant, sizes, replications, seed))
    return out


def save_tables(tables, path=TABLE_PATH):
    doc = {
        "generator": "airfrac.stattests.simulate_critical_values",
        "prob_grid": list(PROB_GRID),
        "tables": [t.to_json() for t in tables],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def export_tables_csv(tables, csv_path):
    """Write tables as long-form CSV ``family,variant,T,prob,quantile`` plus a
    JSON metadata sidecar next to it."""
    csv_path = Path(csv_path)
    lines = ["family,variant,T,prob,quantile"]
    meta = []
    for t in tables:
        for i, T in enumerate(t.sizes):
            for j, p in enumerate(t.probs):
                lines.append(f"{t.family},{t.variant},{T},{p!r},{t.quantiles[i, j]!r}")
        meta.append({"family": t.family, "variant": t.variant, "tail": t.tail,
                     "replications": t.replications, "seed": t.seed})
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    sidecar = csv_path.with_name(csv_path.stem + ".meta.json")
    sidecar.write_text(json.dumps({"generator": "airfrac.stattests.simulate_critical_values",
                                   "tables": meta}, indent=1) + "\n", encoding="utf-8")
    return sidecar


@functools.lru_cache(maxsize=4)
def load_tables(path=TABLE_PATH) -> dict:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"critical-value tables not found at {path}; run `airfrac tables`")
    doc = json.loads(path.read_text(encoding="utf-8"))
    tables = [CriticalValueTable.from_json(d) for d in doc["tables"]]
    return {t.key: t for t in tables}


def get_table(family: str, variant: str, path=TABLE_PATH) -> CriticalValueTable:
    family = family.upper()
    if family == "ADF":
        variant = variant.upper()
    key = f"{family}/{variant}"
    tables = load_tables(path)
    if key not in tables:
        raise DataError(f"no critical-value table for {key}")
    return tables[key]
