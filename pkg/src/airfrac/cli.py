"""Command-line front end: ``airfrac <subcommand> [options]``.

Every subcommand writes tidy CSV files plus a JSON summary that records the
resolved configuration.  Exit status is 0 when all artifacts were written,
2 for input problems (missing or malformed files, bad flags) and 1 for
estimation failures.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import caf as caf_mod
from . import deming as deming_mod
from . import estimators, ingest, sim, stattests, tvaf
from .errors import AirfracError, DataError

DEFAULT_DATA = "data/carbon.csv"
DEFAULT_COVARIATES = "data/covariates.csv"
SCENARIO_CAF_WINDOWS = (78, 50, 20, 10, 5, 1)
DEMING_WINDOWS = ((1959, 2022), (1992, 2022))


# --------------------------------------------------------------------------
# output helpers


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, Path):
        return str(x)
    return x


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(_jsonable(obj), indent=2) + "\n", encoding="utf-8")
    return path


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                        for v in r])
    return path


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _finish(args, summary: dict, written: list) -> dict:
    summary = {"config": _config(args), **summary}
    written.append(_write_json(args.out / f"{args.command}.json", summary))
    summary["artifacts"] = [str(p) for p in written]
    if args.json:
        print(json.dumps(_jsonable(summary), indent=2))
    else:
        for p in written:
            print(p)
    return summary


# --------------------------------------------------------------------------
# data loading


def _load(args, covariates: bool = False) -> ingest.CarbonDataset:
    ds = ingest.load_carbon_csv(args.data, args.lulcc)
    if covariates:
        enso, vai = ingest.load_covariates_csv(args.covariates)
        ds = ds.with_covariates(enso, vai, getattr(args, "detrend_enso", True))
    start = args.start if args.start is not None else ds.start_year
    end = args.end if args.end is not None else ds.end_year
    return ingest.window(ds, start, end)


def _check_files(*paths):
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise DataError(f"file not found: {p}")


# --------------------------------------------------------------------------
# subcommands


def cmd_estimate(args) -> dict:
    use_cov = not args.no_covariates
    _check_files(args.data, args.covariates if use_cov else None)
    ds = _load(args, covariates=use_cov)
    fits = estimators.fit_all(ds, args.hac_lag, covariates=use_cov)
    ref = fits[0].se
    cols = [f.to_dict(ref) for f in fits]
    names = [c["model"] for c in cols]
    rows = [
        ("alpha", [c["alpha"] for c in cols]),
        ("se_alpha", [c["se"] for c in cols]),
        ("relative_se", [c["relative_se"] for c in cols]),
        ("ci95_low", [c["ci95"][0] for c in cols]),
        ("ci95_high", [c["ci95"][1] for c in cols]),
        ("sd_u", [c["sd_u"] for c in cols]),
        ("r2", [c["r2"] for c in cols]),
        ("gamma1", [c["gamma1"] for c in cols]),
        ("se_gamma1", [c["gamma1_se"] for c in cols]),
        ("gamma2", [c["gamma2"] for c in cols]),
        ("se_gamma2", [c["gamma2_se"] for c in cols]),
        ("enso_included", ["yes" if "M3" in n or "M4" in n else "no" for n in names]),
        ("vai_included", ["yes" if "M3" in n or "M4" in n else "no" for n in names]),
    ]
    written = [_write_csv(args.out / "estimate.csv", ["quantity", *names], [(k, *v) for k, v in rows])]
    return _finish(args, {
        "dataset": ds.lulcc_source.label,
        "start_year": ds.start_year,
        "end_year": ds.end_year,
        "models": cols,
    }, written)


ADF_ROWS = (("G", "AR"), ("G", "ARD"), ("G", "TS"), ("E", "AR"), ("E", "ARD"), ("E", "TS"))


def cmd_tests(args) -> dict:
    _check_files(args.data)
    ds = _load(args)
    lags = range(args.max_lag + 1)
    series = {"G": ds.g, "E": ds.e}
    grid, detail = [], []
    for name, variant in ADF_ROWS:
        row = [f"{name} ({variant})"]
        for L in lags:
            r = stattests.adf_test(series[name], variant, L)
            row.append(r.p_value)
            detail.append({"series": name, **r.to_dict()})
        grid.append(row)
    eg_row = ["Engle-Granger"]
    for L in lags:
        r = stattests.engle_granger(ds.g, ds.e, L, intercept=args.eg_intercept)
        eg_row.append(r.p_value)
        detail.append({"series": "G,E", **r.to_dict()})
    grid.append(eg_row)

    fit = estimators.regression_af(ds, covariates=False, hac_lag=args.hac_lag)
    jb_coint = stattests.jarque_bera(fit.residuals, finite_sample=args.finite_sample)
    b, b_se, sd_xi = sim.estimate_drift(ds.e)
    xi = np.diff(ds.e.values) - b
    jb_xi = stattests.jarque_bera(xi, finite_sample=args.finite_sample)
    written = [_write_csv(args.out / "tests.csv", ["test", *[f"L={L}" for L in lags]], grid)]
    return _finish(args, {
        "dataset": ds.lulcc_source.label,
        "start_year": ds.start_year,
        "end_year": ds.end_year,
        "grid": [{"test": r[0], "p_values": r[1:]} for r in grid],
        "detail": detail,
        "jarque_bera": {
            "cointegration_residuals": jb_coint.to_dict(),
            "emission_increments": jb_xi.to_dict(),
        },
        "drift": {"b": b, "se": b_se, "sd_xi": sd_xi},
    }, written)


def _windows(text):
    out = []
    for part in text.split(","):
        a, _, b = part.partition("-")
        out.append((int(a), int(b)))
    return out


def cmd_deming(args) -> dict:
    _check_files(args.data)
    deltas = [float(d) for d in args.deltas.split(",")]
    windows = _windows(args.windows) if args.windows else (
        [(args.start, args.end)] if args.start is not None and args.end is not None else list(DEMING_WINDOWS))
    rows, cells = [], []
    for src in ingest.LulccSource:
        full = ingest.load_carbon_csv(args.data, src)
        for a, b in windows:
            ds = ingest.window(full, a, b)
            vals = [deming_mod.deming_fit(ds.g, ds.e, d) for d in deltas]
            rows.append([src.label, a, b, *vals])
            cells += [{"dataset": src.label, "start_year": a, "end_year": b, "delta": d, "alpha": v}
                      for d, v in zip(deltas, vals)]
    header = ["dataset", "start_year", "end_year", *[f"delta={d:g}" for d in deltas]]
    written = [_write_csv(args.out / "deming.csv", header, rows)]
    return _finish(args, {"cells": cells}, written)


def _caf_csv(path, cs: caf_mod.CafSeries):
    return _write_csv(path, ["year", "caf"], cs.rows())


def _plot(path, x, series, **kw):
    from .plotting import line_chart

    line_chart(path, x, series, **kw)
    return path


def cmd_caf(args) -> dict:
    written = []
    summary = {}
    if args.scenario:
        _check_files(args.scenario)
        s = ingest.load_scenario_csv(args.scenario)
        g, e = s.g_det, s.e_det
        if args.start is not None or args.end is not None:
            g = g.sel(args.start or g.start_year, args.end or g.end_year)
            e = e.sel(args.start or e.start_year, args.end or e.end_year)
        summary["scenario"] = s.scenario_id
        default_w = SCENARIO_CAF_WINDOWS
    else:
        _check_files(args.data)
        ds = _load(args)
        g, e = ds.g, ds.e
        summary["dataset"] = ds.lulcc_source.label
        default_w = ()
    windows = [int(w) for w in args.windows.split(",")] if args.windows else list(default_w)
    summary.update(start_year=g.start_year, end_year=g.end_year, caf=caf_mod.caf_full(g, e))
    running = caf_mod.caf_window(g, e, len(g))
    written.append(_caf_csv(args.out / "caf.csv", running))
    per_w = {}
    for w in windows:
        cs = caf_mod.caf_window(g, e, w)
        written.append(_caf_csv(args.out / f"caf_w{w}.csv", cs))
        per_w[f"w={w}"] = cs
        summary.setdefault("gap_years", {})[str(w)] = [int(y) for y, gp in zip(cs.years, cs.gap) if gp]
    if not args.no_plots:
        series = {"running": running.values, **{k: v.values for k, v in per_w.items()}}
        written.append(_plot(args.out / "caf.svg", running.years, series, ylabel="CAF", title="Cumulative airborne fraction"))
    summary["windows"] = windows
    return _finish(args, summary, written)


def cmd_tvaf(args) -> dict:
    need_hist = args.scenario is None or args.history or args.with_covariates
    _check_files(args.data if need_hist else None, args.scenario,
                 args.covariates if args.with_covariates else None)
    have_hist = need_hist or Path(args.data).is_file()
    notes = {}
    hist = _load(args, covariates=args.with_covariates) if have_hist else None
    if hist is not None:
        m2 = estimators.regression_af(hist, hac_lag=args.hac_lag)
        sigma_g = m2.residual_sd
        sigma_e = sim.estimate_drift(hist.e)[2]
        prior_mean = m2.alpha
    else:
        sigma_g, sigma_e, prior_mean = sim.SIGMA_U2, sim.SIGMA_XI_FALLBACK, tvaf.DEFAULT_PRIOR_MEAN
        notes["calibration"] = "historical data not found; built-in noise levels used"
    sigma_g = args.sigma_g if args.sigma_g is not None else sigma_g
    sigma_e = args.sigma_e if args.sigma_e is not None else sigma_e
    prior_mean = args.prior_mean if args.prior_mean is not None else prior_mean

    offset = None
    if args.scenario:
        s = ingest.load_scenario_csv(args.scenario)
        if args.perturb:
            seed = 0 if args.seed is None else args.seed
            g, e = sim.perturb_scenario(s, sigma_g, sigma_e, seed)
        else:
            g, e = s.g_det, s.e_det
        if args.history:
            g = tvaf.concat_series(hist.g, g)
            e = tvaf.concat_series(hist.e, e)
        notes.update(scenario=s.scenario_id, perturbed=bool(args.perturb),
                     sigma_g=sigma_g, sigma_e=sigma_e)
    else:
        g, e = hist.g, hist.e
    if args.with_covariates:
        if args.scenario:
            raise DataError("--with-covariates applies to historical data only")
        m4 = estimators.regression_af(hist, covariates=True, hac_lag=args.hac_lag)
        enso = hist.enso_for_fit()
        offset = enso * m4.coef("enso") + hist.vai * m4.coef("vai")
        notes["covariate_offset"] = {"gamma1": m4.coef("enso"), "gamma2": m4.coef("vai")}

    switch = tvaf.AUTO if not args.no_switch else None
    if args.state_variance is not None:
        obs_var = args.obs_variance
        if obs_var is None:
            obs_var = estimators.ols(g - offset if offset is not None else g, {"e": e}, hac_lag=0).residual_sd ** 2
        spec = tvaf.StateSpaceSpec(e, obs_var, args.state_variance, switch, prior_mean, args.prior_variance)
        gg = g - offset if offset is not None else g
        est = tvaf.kalman_smoother(tvaf.kalman_filter(gg, spec), spec, {"method": "fixed"})
    else:
        est = tvaf.fit_tvaf(g, e, prior_mean, args.prior_variance, switch, offset=offset)

    written = [_write_csv(args.out / "tvaf.csv",
                          ["year", "alpha_smoothed", "var", "lo95", "hi95", "alpha_filtered"],
                          [list(r.values()) for r in est.rows()])]
    ratio = [(int(y), None if ev == 0 else gv / ev) for y, gv, ev in zip(g.years, g.values, e.values)]
    written.append(_write_csv(args.out / "ratio.csv", ["year", "ratio"], ratio))
    if not args.no_plots:
        written.append(_plot(
            args.out / "tvaf.svg", est.years, {"smoothed": est.smoothed_mean.values},
            band=(est.band_low.values, est.band_high.values), ylabel="airborne fraction",
            title="Time-varying airborne fraction", hline=0.0,
        ))
    summary = est.summary()
    summary["prior_mean"] = prior_mean
    summary["prior_variance"] = args.prior_variance
    summary.update(notes)
    return _finish(args, summary, written)


def cmd_simstudy(args) -> dict:
    if args.sigma_xi is not None:
        sigma_xi, src = args.sigma_xi, "flag"
    elif Path(args.data).is_file():
        ds = _load(args)
        sigma_xi, src = sim.estimate_drift(ds.e)[2], str(args.data)
    else:
        sigma_xi, src = sim.SIGMA_XI_FALLBACK, "built-in fallback"
    seed = 2024 if args.seed is None else args.seed
    grid = range(args.t_min, args.t_max + 1, args.t_step)
    t0 = time.perf_counter()
    res = sim.rmse_study(
        emissions=sim.DgpSpec(sigma_xi=sigma_xi), T_grid=grid, replications=args.reps, seed=seed,
        workers=args.workers, ratio_dgp=args.ratio_dgp,
    )
    elapsed = time.perf_counter() - t0
    rows = res.rows()
    written = [_write_csv(args.out / "simstudy.csv", ["T", "rmse_ratio", "rmse_regression", "relative_rmse"],
                          [list(r.values()) for r in rows])]
    if not args.no_plots:
        written.append(_plot(args.out / "simstudy.svg", res.T_grid,
                             {"ratio": res.rmse_ratio_est, "regression": res.rmse_regr_est},
                             xlabel="T", ylabel="RMSE", title="Estimator RMSE by sample size"))
    meta = res.metadata()
    meta.update(sigma_xi_source=src, seconds=elapsed,
                loglog_slope_ratio=sim.loglog_slope(res.T_grid, res.rmse_ratio_est),
                loglog_slope_regression=sim.loglog_slope(res.T_grid, res.rmse_regr_est))
    return _finish(args, meta, written)


def cmd_tables(args) -> dict:
    seed = 20240617 if args.seed is None else args.seed
    sizes = tuple(int(s) for s in args.sizes.split(",")) if args.sizes else stattests.DEFAULT_SIZES
    specs = stattests.DEFAULT_SPECS
    if args.family:
        specs = [s for s in specs if s[0] == args.family.upper() and (args.variant is None or s[1] == args.variant)]
        if not specs:
            raise DataError(f"no table family/variant {args.family}/{args.variant}")
    tables, timing = [], {}
    for fam, var in specs:
        t0 = time.perf_counter()
        tables.append(stattests.simulate_critical_values(fam, var, sizes, args.reps, seed))
        timing[f"{fam}/{var}"] = time.perf_counter() - t0
    target = stattests.TABLE_PATH if args.install else args.out / "critical_values.json"
    stattests.save_tables(tables, target)
    written = [Path(target)]
    csv_path = args.out / "critical_values.csv"
    written += [csv_path, stattests.export_tables_csv(tables, csv_path)]
    if args.install:
        stattests.load_tables.cache_clear()
    return _finish(args, {"seed": seed, "replications": args.reps, "sizes": sizes, "seconds": timing}, written)


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", type=Path, default=Path(DEFAULT_DATA), help="carbon budget CSV")
    common.add_argument("--covariates", type=Path, default=Path(DEFAULT_COVARIATES), help="ENSO/VAI CSV")
    common.add_argument("--from", dest="start", type=int, help="first year of the window")
    common.add_argument("--to", dest="end", type=int, help="last year of the window")
    common.add_argument("--lulcc", choices=[s.value for s in ingest.LulccSource], default="gcp")
    common.add_argument("--hac-lag", type=int, help="Newey-West truncation lag (default: automatic)")
    common.add_argument("--seed", type=int, help="random seed (subcommand-specific default)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--json", action="store_true", help="print the JSON summary on stdout")

    p = argparse.ArgumentParser(prog="airfrac", description="Airborne fraction estimation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("estimate", parents=[common], help="ratio and regression estimates with HAC SEs")
    s.add_argument("--no-covariates", action="store_true", help="fit models 1-2 only")
    s.add_argument("--raw-enso", dest="detrend_enso", action="store_false",
                   help="use ENSO as loaded instead of detrending it over the window")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("tests", parents=[common], help="ADF, Engle-Granger and Jarque-Bera tests")
    s.add_argument("--max-lag", type=int, default=5)
    s.add_argument("--eg-intercept", action="store_true", help="include a constant in the cointegrating regression")
    s.add_argument("--finite-sample", action="store_true", help="Jarque-Bera p-values from the simulated table")
    s.set_defaults(func=cmd_tests)

    s = sub.add_parser("deming", parents=[common], help="Deming estimates over datasets, windows and deltas")
    s.add_argument("--deltas", default=",".join(f"{d:g}" for d in deming_mod.DELTA_GRID))
    s.add_argument("--windows", help="comma list of START-END windows (default 1959-2022,1992-2022)")
    s.set_defaults(func=cmd_deming)

    s = sub.add_parser("caf", parents=[common], help="cumulative airborne fraction")
    s.add_argument("--scenario", type=Path, help="scenario CSV to use instead of the historical data")
    s.add_argument("--windows", help="comma list of trailing window lengths")
    s.add_argument("--no-plots", action="store_true")
    s.set_defaults(func=cmd_caf)

    s = sub.add_parser("tvaf", parents=[common], help="time-varying airborne fraction (state-space model)")
    s.add_argument("--scenario", type=Path, help="scenario CSV (default: historical data only)")
    s.add_argument("--history", action="store_true", help="prepend the historical data to the scenario")
    s.add_argument("--no-perturb", dest="perturb", action="store_false", help="use the scenario paths without noise")
    s.add_argument("--sigma-g", type=float, help="noise sd added to scenario G")
    s.add_argument("--sigma-e", type=float, help="noise sd added to scenario E")
    s.add_argument("--prior-mean", type=float)
    s.add_argument("--prior-variance", type=float, default=tvaf.DEFAULT_PRIOR_VAR)
    s.add_argument("--state-variance", type=float, help="fix sigma_eta^2 instead of estimating it")
    s.add_argument("--obs-variance", type=float, help="fix sigma_u^2 (with --state-variance)")
    s.add_argument("--no-switch", action="store_true", help="never reflect the state")
    s.add_argument("--with-covariates", action="store_true", help="remove fitted ENSO/VAI effects first")
    s.add_argument("--no-plots", action="store_true")
    s.set_defaults(func=cmd_tvaf)

    s = sub.add_parser("simstudy", parents=[common], help="RMSE of both estimators by sample size")
    s.add_argument("--reps", type=int, default=10_000)
    s.add_argument("--t-min", type=int, default=64)
    s.add_argument("--t-max", type=int, default=142)
    s.add_argument("--t-step", type=int, default=1)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--sigma-xi", type=float, help="emission shock sd (default: estimated from --data)")
    s.add_argument("--ratio-dgp", choices=["direct", "cointegrated"], default="direct")
    s.add_argument("--no-plots", action="store_true")
    s.set_defaults(func=cmd_simstudy)

    s = sub.add_parser("tables", parents=[common], help="regenerate critical-value tables")
    s.add_argument("--reps", type=int, default=100_000)
    s.add_argument("--sizes", help="comma list of sample sizes")
    s.add_argument("--family", choices=["ADF", "EG", "JB", "adf", "eg", "jb"])
    s.add_argument("--variant")
    s.add_argument("--install", action="store_true", help="overwrite the packaged tables")
    s.set_defaults(func=cmd_tables)
    return p


def _validate(args):
    if args.start is not None and args.end is not None and args.start > args.end:
        raise DataError(f"--from {args.start} is after --to {args.end}")
    if args.hac_lag is not None and args.hac_lag < 0:
        raise DataError("--hac-lag must be non-negative")
    if getattr(args, "max_lag", 0) < 0:
        raise DataError("--max-lag must be non-negative")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
        args.out.mkdir(parents=True, exist_ok=True)
        args.func(args)
    except DataError as exc:
        print(f"airfrac: error: {exc}", file=sys.stderr)
        return 2
    except (AirfracError, OSError) as exc:
        print(f"airfrac: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
