import numpy as np
import pytest

from airfrac.ingest import AnnualSeries, CarbonDataset, write_carbon_csv, write_covariates_csv


def synthetic_dataset(T=64, start=1959, seed=11, alpha=0.45):
    """Random-walk emissions with a proportional sink response."""
    rng = np.random.default_rng(seed)
    e_ff = 2.5 + np.cumsum(0.13 + 0.15 * rng.standard_normal(T))
    lulcc = 1.5 + 0.2 * rng.standard_normal(T)
    e = e_ff + lulcc
    enso = rng.standard_normal(T)
    vai = np.where(rng.random(T) < 0.1, rng.random(T), 0.0)
    g = alpha * e + 0.5 * enso - 1.0 * vai + 0.6 * rng.standard_normal(T)
    ds = CarbonDataset(
        AnnualSeries(start, g), AnnualSeries(start, e_ff), AnnualSeries(start, lulcc),
        "gcp", AnnualSeries(start, enso), AnnualSeries(start, vai),
    )
    extra = {"hc": AnnualSeries(start, lulcc * 0.8), "vma": AnnualSeries(start, lulcc * 0.6)}
    return ds, extra


@pytest.fixture
def dataset():
    return synthetic_dataset()[0]


@pytest.fixture
def data_files(tmp_path):
    ds, extra = synthetic_dataset()
    carbon = tmp_path / "carbon.csv"
    cov = tmp_path / "covariates.csv"
    write_carbon_csv(carbon, ds, extra)
    write_covariates_csv(cov, ds.enso, ds.vai)
    return carbon, cov, ds


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
