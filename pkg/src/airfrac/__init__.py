"""Estimation of the airborne fraction of anthropogenic CO2 emissions.

Submodules
----------
ingest      annual series containers and CSV loaders
estimators  ratio and regression estimators with Newey-West standard errors
stattests   unit-root, cointegration and normality tests
deming      errors-in-variables slope
caf         cumulative airborne fraction
tvaf        time-varying airborne fraction via Kalman filtering
sim         Monte Carlo studies
"""
from .errors import AirfracError, DataError, DegenerateLikelihoodError, DivisionHazardError, EstimationError
from .ingest import AnnualSeries, CarbonDataset, LulccSource, ScenarioSeries, load_carbon_csv

__version__ = "0.1.0"

__all__ = [
    "AirfracError",
    "DataError",
    "DegenerateLikelihoodError",
    "DivisionHazardError",
    "EstimationError",
    "AnnualSeries",
    "CarbonDataset",
    "LulccSource",
    "ScenarioSeries",
    "load_carbon_csv",
    "__version__",
]
