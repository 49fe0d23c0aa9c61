"""Command-line front end.

Subcommands emit analytic tables (``channel-corr``, ``eigen-stats``,
``imi-stats``, ``table1``) or run the simulation check (``validate``).
Tables go to stdout by default, each preceded by a ``## <table>`` line, or
to ``<out>/<table>.<format>`` when ``--out`` names a directory.

Exit status: 0 on success, 1 if a validation entry fails, 2 on invalid
arguments or scenario files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import MimoConfig, corr_coeff_h, corr_mag
from .config import ConfigError, Scenario, bundled_scenarios, load_scenario
from .eigenstats import EigenPdfContext, eigen_corr, level_stats
from .imistats import REGIMES, SnrConfig, imi_corr, imi_corr_maxgap, imi_corr_taylor, imi_level_stats, regime_moments

__all__ = ["main", "build_parser", "TABLE_COLUMNS", "TABLE1_CONFIGS"]

TABLE1_CONFIGS = ((1, 1), (2, 2), (3, 3), (4, 4), (4, 8), (4, 12), (4, 16))

TABLE_COLUMNS = {
    "channel_corr": ("lag", "normalized_time", "re_rho_h", "im_rho_h", "rho_mag"),
    "eigen_corr": ("lag", "normalized_time", "rho_mag", "same_mode_corr_coeff", "cross_mode_corr_coeff", "same_mode_nacf"),
    "eigen_level": ("threshold", "exceed_prob", "joint_exceed_prob", "lcr_per_s", "afd_s", "series_terms"),
    "imi_corr": ("snr_db", "regime", "lag", "normalized_time", "rho_mag", "acf", "nacf", "corr_coeff"),
    "imi_level": ("snr_db", "regime", "k_sigma", "threshold_nats", "normalized_threshold", "exceed_prob", "lcr_per_s", "aod_s"),
    "table1": ("M", "N", "taylor_rho2", "taylor_rho4", "max_gap"),
    "validation": ("quantity", "analytic", "empirical", "tolerance", "std_error", "passed", "asserted", "note"),
}


# ---------------------------------------------------------------------------
# Table builders
# ---------------------------------------------------------------------------


def _normalized_time(sc: Scenario, lag: int) -> float:
    return sc.doppler_hz * lag * sc.symbol_time_s


def channel_corr_table(sc: Scenario) -> list[list]:
    model = sc.scattering
    vals = corr_coeff_h(model, list(sc.lags))
    return [
        [lag, _normalized_time(sc, lag), float(v.real), float(v.imag), float(abs(v))]
        for lag, v in zip(sc.lags, vals)
    ]


def eigen_corr_table(sc: Scenario) -> list[list]:
    model, mimo = sc.scattering, sc.mimo
    rows = []
    for lag in sc.lags:
        rho = float(corr_mag(model, lag))
        same = eigen_corr(mimo, lag, rho, True)
        cross = eigen_corr(mimo, lag, rho, False).corr_coeff if mimo.m > 1 else math.nan
        rows.append([lag, _normalized_time(sc, lag), rho, same.corr_coeff, cross, same.normalized_corr])
    return rows


def eigen_level_table(sc: Scenario) -> list[list]:
    ctx = EigenPdfContext(sc.mimo)
    rho1 = float(corr_mag(sc.scattering, 1))
    rows = []
    for th in sc.eigen_thresholds:
        st = level_stats(ctx, th, rho1, sc.symbol_time_s)
        rows.append([th, st.exceed_prob, st.joint_exceed, st.lcr, st.afd, st.terms])
    return rows


def imi_corr_table(sc: Scenario) -> list[list]:
    model, mimo = sc.scattering, sc.mimo
    rows = []
    for db in sc.snr_db:
        snr = SnrConfig.from_db(db, mimo)
        for regime in REGIMES:
            for lag in sc.lags:
                rho = float(corr_mag(model, lag))
                r = imi_corr(snr, rho, regime, lag=lag)
                rows.append([db, regime, lag, _normalized_time(sc, lag), rho, r.acf, r.nacf, r.coeff])
    return rows


def imi_level_table(sc: Scenario, units: str = "nats") -> list[list]:
    """Gaussian-approximation LCR and AOD on a ``mean + k sigma`` grid.

    ``units="bits"`` converts the threshold column for display only.
    """
    scale = 1.0 / math.log(2.0) if units == "bits" else 1.0
    mimo = sc.mimo
    rho1 = float(corr_mag(sc.scattering, 1))
    rows = []
    for db in sc.snr_db:
        snr = SnrConfig.from_db(db, mimo)
        for regime in REGIMES:
            mom = regime_moments(snr, regime)
            sd = math.sqrt(mom.variance)
            for k in sc.imi_threshold_sigmas:
                th = mom.mean + k * sd
                st = imi_level_stats(snr, th, rho1, sc.symbol_time_s, regime, "gaussian")
                rows.append([db, regime, k, th * scale, st.normalized_threshold, st.exceed, st.lcr, st.aod])
    return rows


def table1_rows() -> list[list]:
    rows = []
    for m, n in TABLE1_CONFIGS:
        mimo = MimoConfig(m, n)
        c2, c4 = imi_corr_taylor(mimo)
        rows.append([m, n, c2, c4, imi_corr_maxgap(mimo)])
    return rows


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def _cell(v):
    v = _plain(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_value(v):
    v = _plain(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def table_columns(name: str, units: str = "nats") -> tuple[str, ...]:
    cols = TABLE_COLUMNS[name]
    if units == "bits":
        cols = tuple("threshold_bits" if c == "threshold_nats" else c for c in cols)
    return cols


def render(name: str, rows: list[list], fmt: str, units: str = "nats") -> str:
    cols = table_columns(name, units)
    if fmt == "json":
        doc = {"table": name, "columns": list(cols), "rows": [[_json_value(v) for v in r] for r in rows]}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def emit(tables: Sequence[tuple[str, list[list]]], out: str, fmt: str, units: str = "nats") -> None:
    if out == "-":
        many = len(tables) > 1
        for name, rows in tables:
            if many:
                sys.stdout.write(f"## {name}\n")
            sys.stdout.write(render(name, rows, fmt, units))
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    for name, rows in tables:
        (d / f"{name}.{fmt}").write_text(render(name, rows, fmt, units), encoding="utf-8")


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mimostats", description="Second-order statistics of MIMO Rayleigh fading channels.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="-", help="output directory, or '-' for stdout (default)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    scen = argparse.ArgumentParser(add_help=False)
    scen.add_argument(
        "--scenario", required=True,
        help=f"scenario file or bundled name ({', '.join(bundled_scenarios())})",
    )
    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--seed", type=int, default=None, help="override the scenario seed (unsigned 64-bit)")
    sim.add_argument("--samples", type=int, default=None, help="override the simulated length L")

    sub.add_parser("channel-corr", parents=[common, scen, sim], help="channel correlation coefficient per lag")
    sub.add_parser("eigen-stats", parents=[common, scen, sim], help="eigen-channel correlation and level crossings")
    imi = sub.add_parser("imi-stats", parents=[common, scen, sim], help="IMI correlation and Gaussian-approximation LCR/AOD")
    imi.add_argument("--units", choices=("nats", "bits"), default="nats", help="display unit of the IMI threshold column")
    sub.add_parser("table1", parents=[common], help="Taylor coefficients and maximum gap of the high-SNR coefficient")
    v = sub.add_parser("validate", parents=[common, scen, sim], help="simulate and compare with the analytic results")
    v.add_argument("--mc-trials", type=int, default=1 << 19, help="Monte Carlo pairs for exact IMI crossings when M > 2")
    return p


def _scenario(args) -> Scenario:
    sc = load_scenario(args.scenario)
    if args.seed is not None and not 0 <= args.seed < 1 << 64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    if args.samples is not None and not 2 <= args.samples <= 1 << 26:
        raise ConfigError("--samples must lie in [2, 2**26]")
    return sc.with_overrides(args.samples, args.seed)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "table1":
            emit([("table1", table1_rows())], args.out, args.format)
            return 0
        sc = _scenario(args)
    except ConfigError as exc:
        print(f"mimostats: error: {exc}", file=sys.stderr)
        return 2
    if args.command == "channel-corr":
        emit([("channel_corr", channel_corr_table(sc))], args.out, args.format)
    elif args.command == "eigen-stats":
        emit([("eigen_corr", eigen_corr_table(sc)), ("eigen_level", eigen_level_table(sc))], args.out, args.format)
    elif args.command == "imi-stats":
        tables = [("imi_corr", imi_corr_table(sc)), ("imi_level", imi_level_table(sc, args.units))]
        emit(tables, args.out, args.format, args.units)
    elif args.command == "validate":
        from .montecarlo import run_validation

        report = run_validation(sc, mc_trials=args.mc_trials)
        if args.format == "json":
            text = report.to_json()
        else:
            text = render("validation", report.rows(), "csv")
        if args.out == "-":
            sys.stdout.write(text)
        else:
            d = Path(args.out)
            d.mkdir(parents=True, exist_ok=True)
            (d / f"validation_{sc.name}.{args.format}").write_text(text, encoding="utf-8")
            (d / f"timing_{sc.name}.json").write_text(json.dumps(report.timing, indent=1) + "\n", encoding="utf-8")
        for e in report.failures:
            print(
                f"FAIL {e.quantity}: analytic {e.analytic!r} empirical {e.empirical!r} tolerance {e.tolerance!r}",
                file=sys.stderr,
            )
        print(
            f"{sc.name}: {len(report.entries) - len(report.failures)}/{len(report.entries)} entries pass",
            file=sys.stderr,
        )
        return 0 if report.passed else 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
