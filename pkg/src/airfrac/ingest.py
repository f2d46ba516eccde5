"""Loading, validation, alignment and windowing of annual input data.

File schemas (comma separated, one header row, UTF-8, LF or CRLF):

* ``carbon.csv``        ``year,g,e_ff,e_lulcc_gcp,e_lulcc_hc,e_lulcc_vma``
* ``covariates.csv``    ``year,enso,vai``
* ``enso_monthly.csv``  ``year,month,value``
* ``scenario_<id>.csv`` ``year,g,e``

Carbon quantities are in GtC/yr.  Only the LULCC column that is actually
requested has to be present in ``carbon.csv``.
"""
from __future__ import annotations

import csv
import enum
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "AnnualSeries",
    "LulccSource",
    "CarbonDataset",
    "ScenarioSeries",
    "load_carbon_csv",
    "write_carbon_csv",
    "load_covariates_csv",
    "write_covariates_csv",
    "load_enso_monthly_csv",
    "annualize_enso",
    "detrend",
    "window",
    "load_scenario_csv",
    "write_scenario_csv",
]


@dataclass(frozen=True)
class AnnualSeries:
    """Contiguous, year-indexed sequence of finite values."""

    start_year: int
    values: np.ndarray
    units: str = "GtC/yr"

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).reshape(-1)
        if arr.size == 0:
            raise DataError("AnnualSeries needs at least one value")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise DataError(f"non-finite value in year {self.start_year + bad}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "start_year", int(self.start_year))

    def __len__(self):
        return self.values.size

    @property
    def end_year(self) -> int:
        return self.start_year + len(self) - 1

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.start_year, self.end_year + 1)

    def sel(self, start: int, end: int) -> "AnnualSeries":
        """Inclusive year slice."""
        if start < self.start_year or end > self.end_year or start > end:
            raise DataError(
                f"window {start}-{end} outside series range {self.start_year}-{self.end_year}"
            )
        i0 = start - self.start_year
        return AnnualSeries(start, self.values[i0 : i0 + end - start + 1], self.units)

    def with_values(self, values) -> "AnnualSeries":
        return AnnualSeries(self.start_year, values, self.units)

    def _check_aligned(self, other: "AnnualSeries"):
        if other.start_year != self.start_year or len(other) != len(self):
            raise DataError(
                f"series not aligned: {self.start_year}-{self.end_year} vs "
                f"{other.start_year}-{other.end_year}"
            )

    def __add__(self, other):
        if isinstance(other, AnnualSeries):
            self._check_aligned(other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __sub__(self, other):
        if isinstance(other, AnnualSeries):
            self._check_aligned(other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, c):
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, AnnualSeries):
            return NotImplemented
        return (
            self.start_year == other.start_year
            and self.units == other.units
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


class LulccSource(str, enum.Enum):
    GCP = "gcp"
    HC = "hc"
    VMA = "vma"

    @property
    def column(self) -> str:
        return f"e_lulcc_{self.value}"

    @property
    def label(self) -> str:
        return {"gcp": "GCP", "hc": "H&C", "vma": "vMa"}[self.value]

    @classmethod
    def parse(cls, value) -> "LulccSource":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().replace("&", ""))
        except ValueError:
            raise DataError(f"unknown LULCC source {value!r}; expected gcp, hc or vma") from None


@dataclass(frozen=True)
class CarbonDataset:
    """Aligned bundle of the carbon-budget series and optional covariates.

    ``enso`` is stored as loaded.  When ``detrend_enso`` is set the
    covariate handed to the estimators is detrended over exactly the years
    the dataset covers, so windowing first and detrending second is the
    natural order.
    """

    g: AnnualSeries
    e_ff: AnnualSeries
    e_lulcc: AnnualSeries
    lulcc_source: LulccSource = LulccSource.GCP
    enso: AnnualSeries | None = None
    vai: AnnualSeries | None = None
    detrend_enso: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lulcc_source", LulccSource.parse(self.lulcc_source))
        for s in (self.e_ff, self.e_lulcc, self.enso, self.vai):
            if s is not None:
                self.g._check_aligned(s)

    @property
    def start_year(self) -> int:
        return self.g.start_year

    @property
    def end_year(self) -> int:
        return self.g.end_year

    @property
    def years(self) -> np.ndarray:
        return self.g.years

    def __len__(self):
        return len(self.g)

    @property
    def e(self) -> AnnualSeries:
        """Total anthropogenic emissions E_FF + E_LULCC."""
        return self.e_ff + self.e_lulcc

    @property
    def has_covariates(self) -> bool:
        return self.enso is not None and self.vai is not None

    def enso_for_fit(self) -> AnnualSeries:
        if self.enso is None:
            raise DataError("dataset has no ENSO covariate")
        if self.detrend_enso and len(self.enso) >= 2:
            return detrend(self.enso)
        return self.enso

    def with_covariates(self, enso: AnnualSeries, vai: AnnualSeries, detrend_enso=True):
        """Attach covariates, slicing them to the dataset's year range."""
        try:
            enso = enso.sel(self.start_year, self.end_year)
            vai = vai.sel(self.start_year, self.end_year)
        except DataError as exc:
            raise DataError(f"covariates do not cover {self.start_year}-{self.end_year}: {exc}") from None
        return replace(self, enso=enso, vai=vai, detrend_enso=detrend_enso)


@dataclass(frozen=True)
class ScenarioSeries:
    """Deterministic scenario trajectories of G and E."""

    g_det: AnnualSeries
    e_det: AnnualSeries
    scenario_id: str = ""

    def __post_init__(self):
        self.g_det._check_aligned(self.e_det)

    @property
    def years(self) -> np.ndarray:
        return self.g_det.years

    def __len__(self):
        return len(self.g_det)


# --------------------------------------------------------------------------
# CSV plumbing


def _read_table(path, required: Sequence[str], optional: Sequence[str] = ()):
    """Read a header-row CSV; return {column: list of (lineno, raw)}."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(missing)}; header is {','.join(header)}")
        idx = {c: header.index(c) for c in list(required) + [c for c in optional if c in header]}
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                row = row + [""] * (len(header) - len(row))
            rows.append((lineno, {c: row[i].strip() for c, i in idx.items()}))
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rows


def _to_float(path, lineno, column, raw) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise DataError(f"{path}: row {lineno}, column {column!r}: cannot parse {raw!r} as a number") from None
    if not math.isfinite(value):
        raise DataError(f"{path}: row {lineno}, column {column!r}: non-finite value {raw!r}")
    return value


def _to_year(path, lineno, raw) -> int:
    try:
        y = float(raw)
    except ValueError:
        raise DataError(f"{path}: row {lineno}, column 'year': cannot parse {raw!r} as a year") from None
    if not y.is_integer():
        raise DataError(f"{path}: row {lineno}, column 'year': {raw!r} is not an integer year")
    return int(y)


def _contiguous_years(path, years: list[int]):
    for prev, cur in zip(years, years[1:]):
        if cur != prev + 1:
            if cur <= prev:
                raise DataError(f"{path}: years not increasing ({prev} followed by {cur})")
            raise DataError(f"{path}: missing year {prev + 1} (non-contiguous years)")


def _columns(path, required, optional=()):
    rows = _read_table(path, ["year", *required], optional)
    years = [_to_year(path, ln, r["year"]) for ln, r in rows]
    _contiguous_years(path, years)
    cols = {}
    for c in list(required) + [o for o in optional if o in rows[0][1]]:
        cols[c] = [_to_float(path, ln, c, r[c]) for ln, r in rows]
    return years[0], cols


def load_carbon_csv(path, lulcc_source="gcp") -> CarbonDataset:
    """Load ``carbon.csv`` selecting one LULCC emission series."""
    src = LulccSource.parse(lulcc_source)
    start, cols = _columns(path, ["g", "e_ff", src.column])
    return CarbonDataset(
        g=AnnualSeries(start, cols["g"]),
        e_ff=AnnualSeries(start, cols["e_ff"]),
        e_lulcc=AnnualSeries(start, cols[src.column]),
        lulcc_source=src,
    )


def write_carbon_csv(path, ds: CarbonDataset, extra_lulcc: dict | None = None):
    """Write a dataset in the ``carbon.csv`` schema.

    ``extra_lulcc`` maps further sources to aligned series so that a full
    three-source file can be produced.
    """
    lulcc = {ds.lulcc_source: ds.e_lulcc}
    for k, v in (extra_lulcc or {}).items():
        ds.g._check_aligned(v)
        lulcc[LulccSource.parse(k)] = v
    order = [s for s in LulccSource if s in lulcc]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["year", "g", "e_ff", *[s.column for s in order]])
        for i, year in enumerate(ds.years):
            w.writerow(
                [int(year), repr(float(ds.g.values[i])), repr(float(ds.e_ff.values[i]))]
                + [repr(float(lulcc[s].values[i])) for s in order]
            )


def load_covariates_csv(path) -> tuple[AnnualSeries, AnnualSeries]:
    """Load ``covariates.csv`` and return ``(enso, vai)``."""
    start, cols = _columns(path, ["enso", "vai"])
    return AnnualSeries(start, cols["enso"], "index"), AnnualSeries(start, cols["vai"], "index")


def write_covariates_csv(path, enso: AnnualSeries, vai: AnnualSeries):
    enso._check_aligned(vai)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["year", "enso", "vai"])
        for i, year in enumerate(enso.years):
            w.writerow([int(year), repr(float(enso.values[i])), repr(float(vai.values[i]))])


def load_enso_monthly_csv(path) -> list[tuple[int, int, float]]:
    rows = _read_table(path, ["year", "month", "value"])
    out = []
    for ln, r in rows:
        year = _to_year(path, ln, r["year"])
        month = _to_year(path, ln, r["month"])
        if not 1 <= month <= 12:
            raise DataError(f"{path}: row {ln}, column 'month': {month} not in 1..12")
        out.append((year, month, _to_float(path, ln, "value", r["value"])))
    return out


def annualize_enso(monthly: Iterable[tuple[int, int, float]], start: int, end: int) -> AnnualSeries:
    """September(t-1) to August(t) means for t in ``start..end``."""
    table = {}
    for year, month, value in monthly:
        table[(int(year), int(month))] = float(value)
    out = []
    for t in range(start, end + 1):
        keys = [(t - 1, m) for m in range(9, 13)] + [(t, m) for m in range(1, 9)]
        missing = [k for k in keys if k not in table]
        if missing:
            y, m = missing[0]
            raise DataError(f"ENSO window for {t} is missing month {y}-{m:02d}")
        out.append(math.fsum(table[k] for k in keys) / 12.0)
    return AnnualSeries(start, out, "index")


def detrend(series: AnnualSeries) -> AnnualSeries:
    """Residuals of the least-squares fit of the values on ``{1, t}``."""
    n = len(series)
    if n < 2:
        raise DataError("detrend needs at least two values")
    y = series.values
    t = np.arange(n, dtype=float)
    t -= t.mean()
    yc = y - y.mean()
    slope = np.dot(t, yc) / np.dot(t, t)
    resid = yc - slope * t
    # second pass removes the O(eps) mean left by the first
    resid = resid - resid.mean()
    return series.with_values(resid)


def window(ds: CarbonDataset, start: int, end: int) -> CarbonDataset:
    """Slice every series of ``ds`` to ``start..end`` inclusive."""
    if start > end:
        raise DataError(f"window start {start} after end {end}")
    if start < ds.start_year or end > ds.end_year:
        raise DataError(f"window {start}-{end} outside dataset range {ds.start_year}-{ds.end_year}")

    def cut(s):
        return None if s is None else s.sel(start, end)

    return replace(
        ds,
        g=cut(ds.g),
        e_ff=cut(ds.e_ff),
        e_lulcc=cut(ds.e_lulcc),
        enso=cut(ds.enso),
        vai=cut(ds.vai),
    )


_SCENARIO_RE = re.compile(r"scenario_(.+)\.csv$", re.IGNORECASE)


def load_scenario_csv(path, scenario_id: str | None = None) -> ScenarioSeries:
    """Load ``scenario_<id>.csv``; the id defaults to the filename stem."""
    start, cols = _columns(path, ["g", "e"])
    if scenario_id is None:
        m = _SCENARIO_RE.search(Path(path).name)
        scenario_id = m.group(1) if m else Path(path).stem
    return ScenarioSeries(AnnualSeries(start, cols["g"]), AnnualSeries(start, cols["e"]), scenario_id)


def write_scenario_csv(path, s: ScenarioSeries):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["year", "g", "e"])
        for i, year in enumerate(s.years):
            w.writerow([int(year), repr(float(s.g_det.values[i])), repr(float(s.e_det.values[i]))])
