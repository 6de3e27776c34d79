"""``authsim`` command line.

    authsim run <cfg> [--set key=value]... [--out DIR]
    authsim sweep <cfg> --param m_c --values 1,10,100 [--methods chi_square,gaussian]
    authsim presets

``<cfg>`` is a path or the name of a shipped preset (``fig3`` ... ``fig7``).
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import csv
import datetime
import json
import os
import sys
from pathlib import Path

from . import __version__
from . import config as cfgmod
from .errors import ConfigError, NumericalError
from .sim import empirical_cdf, run, summarize, sweep

INSTANT_COLUMNS = (
    "t", "sensor", "eta_P", "eta_C",
    "p_tn_analytic", "p_fn1_analytic", "p_fn2_analytic",
    "p_tn_emp", "p_fn1_emp", "p_fn2_emp",
    "opt_iters", "opt_flags", "replication",
)
SUMMARY_KEYS = tuple(
    f"{name}_{kind}_{stat}"
    for kind in ("analytic", "empirical")
    for name in ("p_tn", "p_fn_1", "p_fn_2")
    for stat in ("mean", "std")
) + ("n_instants",)
SWEEP_COLUMNS = ("param", "value", "method") + SUMMARY_KEYS


def _fmt(v):
    # repr keeps 17 significant digits, so floats round-trip exactly
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def instant_row(rec):
    a, e = rec.analytic, rec.empirical
    return (
        rec.t, rec.sensor, float(rec.thresholds.eta_P), float(rec.thresholds.eta_C),
        float(a.p_tn), float(a.p_fn_1), float(a.p_fn_2),
        float(e.p_tn), float(e.p_fn_1), float(e.p_fn_2),
        rec.opt_iters, ";".join(rec.opt_flags), rec.replication,
    )


def write_instants(path, records):
    _write_csv(path, INSTANT_COLUMNS, (instant_row(r) for r in records))


def write_cdf(path, records, metric):
    col = INSTANT_COLUMNS.index(metric)
    values = [instant_row(r)[col] for r in records]
    _write_csv(path, ("x", "F"), empirical_cdf(values))


def write_sweep(path, rows):
    _write_csv(path, SWEEP_COLUMNS, ([r[k] for k in SWEEP_COLUMNS] for r in rows))


def worker_count(replications):
    n = os.cpu_count() or 1
    cap = os.environ.get("AUTHSIM_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"AUTHSIM_THREADS must be an integer, got {cap!r}") from None
    return min(n, replications)


def _resolve_config(name):
    p = Path(name)
    if p.is_file() or p.suffix or os.sep in name:
        return p
    return cfgmod.preset_path(name)


def write_manifest(path, rc, outputs):
    manifest = {
        "config_digest": rc.digest(),
        "seed": rc.scenario.seed,
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": sorted(str(p) for p in outputs),
        "config": rc.effective(),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=cfgmod._json_default)
        fh.write("\n")


def _sweep_values(param, values):
    try:
        return [int(v) if param == "m_c" else float(v) for v in values]
    except ValueError as exc:
        raise ConfigError(f"bad sweep value: {exc}") from None


def cmd_run(config, overrides=(), out_dir="."):
    rc = cfgmod.load(_resolve_config(config), overrides)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = run(rc.scenario, workers=worker_count(rc.scenario.replications))
    outputs = [out / "instants.csv"]
    write_instants(outputs[0], records)
    if records:
        for metric in rc.cdf_metrics:
            outputs.append(out / f"cdf_{metric}.csv")
            write_cdf(outputs[-1], records, metric)
    if rc.sweep_param:
        outputs.append(out / "sweep.csv")
        rows = sweep(rc.scenario, rc.sweep_param, _sweep_values(rc.sweep_param, rc.sweep_values),
                     rc.sweep_methods, workers=worker_count(rc.scenario.replications))
        write_sweep(outputs[-1], rows)
    write_manifest(out / "manifest.json", rc, outputs)
    return 0


def cmd_sweep(config, param, values, methods=None, overrides=(), out_dir="."):
    rc = cfgmod.load(_resolve_config(config), overrides)
    if param not in ("m_c", "eta"):
        raise ConfigError(f"--param must be m_c or eta, got {param!r}")
    rc.sweep_param = param
    rc.sweep_values = list(values)
    if methods:
        rc.sweep_methods = list(methods)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = sweep(rc.scenario, param, _sweep_values(param, values), rc.sweep_methods,
                 workers=worker_count(rc.scenario.replications))
    path = out / "sweep.csv"
    write_sweep(path, rows)
    write_manifest(out / "manifest.json", rc, [path])
    return 0


def _split(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser():
    p = argparse.ArgumentParser(prog="authsim", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"authsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario and write per-instant CSVs")
    r.add_argument("config")
    r.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    r.add_argument("--out", default=".")

    s = sub.add_parser("sweep", help="aggregate metrics over M_C or a fixed threshold")
    s.add_argument("config")
    s.add_argument("--param", required=True, choices=("m_c", "eta"))
    s.add_argument("--values", required=True, type=_split)
    s.add_argument("--methods", type=_split, default=None)
    s.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--out", default=".")

    sub.add_parser("presets", help="list shipped preset configs")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config, args.overrides, args.out)
        if args.command == "sweep":
            return cmd_sweep(args.config, args.param, args.values, args.methods,
                             args.overrides, args.out)
        for name in cfgmod.list_presets():
            print(name)
        return 0
    except ConfigError as exc:
        print(f"authsim: config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"authsim: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
