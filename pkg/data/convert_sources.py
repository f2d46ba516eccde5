"""Build the CSV inputs under data/ from the original source files.

The package reads three small files:

  carbon.csv              year,g,e_ff,e_lulcc_gcp,e_lulcc_hc,e_lulcc_vma   (GtC/yr)
  covariates.csv          year,enso,vai
  scenario_<id>.csv       year,g,e                                         (GtC/yr)

This script assembles them from CSV exports of the source tables.  Column
names differ between releases, so they are passed on the command line.

Examples
--------
Carbon budget (sheet exported to CSV; the LULCC columns may come from
separate exports that share a year column)::

    python data/convert_sources.py carbon --budget gcb_global.csv \\
        --year-col Year --g-col "atmospheric growth" --eff-col "fossil emissions excluding carbonation" \\
        --gcp-col "land-use change emissions" \\
        --lulcc hc=luc_models.csv:"H&C2023" --lulcc vma=luc_models.csv:"vMa" \\
        --from 1959 --to 2022 --out data/carbon.csv

Covariates (NOAA PSL monthly Nino-3 text file plus a year,value VAI CSV)::

    python data/convert_sources.py covariates --enso nino3.long.anom.data.txt \\
        --vai vai.csv --from 1959 --to 2022 --out data/covariates.csv

Scenario (year,g,e already in GtC/yr, e.g. from a MAGICC run)::

    python data/convert_sources.py scenario --source ssp126.csv --year-col year \\
        --g-col g --e-col e --out data/scenario_SSP1-2.6.csv
"""
import argparse
import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from airfrac.ingest import (  # noqa: E402
    AnnualSeries,
    CarbonDataset,
    ScenarioSeries,
    annualize_enso,
    write_carbon_csv,
    write_covariates_csv,
    write_scenario_csv,
)


def read_columns(path, year_col, cols, start, end):
    """Return {col: AnnualSeries} for ``start..end`` from a header-row CSV."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        sys.exit(f"{path}: no rows")
    for c in (year_col, *cols):
        if c not in rows[0]:
            sys.exit(f"{path}: column {c!r} not found; have {list(rows[0])}")
    table = {}
    for r in rows:
        try:
            table[int(float(r[year_col]))] = r
        except ValueError:
            continue
    out = {}
    for c in cols:
        vals = []
        for y in range(start, end + 1):
            if y not in table or table[y][c].strip() == "":
                sys.exit(f"{path}: no value for {c!r} in {y}")
            vals.append(float(table[y][c]))
        out[c] = AnnualSeries(start, vals)
    return out


def read_psl_monthly(path):
    """NOAA PSL gridded-index text format: header 'y0 y1', rows 'year m1..m12'."""
    lines = Path(path).read_text().split("\n")
    y0, y1 = (int(v) for v in lines[0].split()[:2])
    missing = float(lines[y1 - y0 + 2].split()[0]) if len(lines) > y1 - y0 + 2 else None
    out = []
    for line in lines[1 : y1 - y0 + 2]:
        parts = line.split()
        year = int(parts[0])
        for m, v in enumerate(parts[1:13], start=1):
            v = float(v)
            if missing is None or v != missing:
                out.append((year, m, v))
    return out


def cmd_carbon(a):
    cols = read_columns(a.budget, a.year_col, [a.g_col, a.eff_col, a.gcp_col], a.start, a.end)
    ds = CarbonDataset(cols[a.g_col], cols[a.eff_col], cols[a.gcp_col], "gcp")
    extra = {}
    for spec in a.lulcc:
        key, _, rest = spec.partition("=")
        path, _, col = rest.rpartition(":")
        extra[key] = read_columns(path, a.year_col, [col], a.start, a.end)[col]
    write_carbon_csv(a.out, ds, extra)


def cmd_covariates(a):
    enso = annualize_enso(read_psl_monthly(a.enso), a.start, a.end)
    vai = read_columns(a.vai, a.year_col, [a.vai_col], a.start, a.end)[a.vai_col]
    write_covariates_csv(a.out, enso, vai)


def cmd_scenario(a):
    with open(a.source, newline="", encoding="utf-8-sig") as fh:
        years = [int(float(r[a.year_col])) for r in csv.DictReader(fh)]
    start = a.start if a.start is not None else min(years)
    end = a.end if a.end is not None else max(years)
    cols = read_columns(a.source, a.year_col, [a.g_col, a.e_col], start, end)
    write_scenario_csv(a.out, ScenarioSeries(cols[a.g_col], cols[a.e_col]))


def main():
    p = argparse.ArgumentParser(description="Convert source tables to the airfrac CSV inputs")
    sub = p.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("carbon")
    c.add_argument("--budget", required=True)
    c.add_argument("--year-col", default="Year")
    c.add_argument("--g-col", required=True)
    c.add_argument("--eff-col", required=True)
    c.add_argument("--gcp-col", required=True)
    c.add_argument("--lulcc", action="append", default=[], help="SOURCE=FILE:COLUMN for hc or vma")
    c.add_argument("--from", dest="start", type=int, default=1959)
    c.add_argument("--to", dest="end", type=int, default=2022)
    c.add_argument("--out", default="data/carbon.csv")
    c.set_defaults(func=cmd_carbon)

    v = sub.add_parser("covariates")
    v.add_argument("--enso", required=True)
    v.add_argument("--vai", required=True)
    v.add_argument("--year-col", default="year")
    v.add_argument("--vai-col", default="value")
    v.add_argument("--from", dest="start", type=int, default=1959)
    v.add_argument("--to", dest="end", type=int, default=2022)
    v.add_argument("--out", default="data/covariates.csv")
    v.set_defaults(func=cmd_covariates)

    s = sub.add_parser("scenario")
    s.add_argument("--source", required=True)
    s.add_argument("--year-col", default="year")
    s.add_argument("--g-col", default="g")
    s.add_argument("--e-col", default="e")
    s.add_argument("--from", dest="start", type=int)
    s.add_argument("--to", dest="end", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_scenario)

    a = p.parse_args()
    a.func(a)


if __name__ == "__main__":
    main()
