"""Command-line front end: ``simirs run|convergence|sweep``.

Every subcommand writes ``manifest.json`` into the output directory before
any result file, then the CSVs, and finally rewrites the manifest with the
per-stage wall-clock times. Floats in CSVs carry 9 significant digits.

Exit codes: 0 success, 2 config or usage error, 3 numerical failure,
4 I/O error.
"""

import argparse
import csv
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import PROFILES, ConfigError, ScenarioConfig
from .engine import METHODS, SWEEP_PARAMS, run_alternating, sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_IO = 4

TRACE_COLUMNS = ("iter", "sum_rate_bps", "f6")
SUMMARY_COLUMNS = ("user", "bs", "sinr", "rate_bps", "energy_efficiency_bps_per_w")
CONVERGENCE_COLUMNS = ("variant", "iter", "sum_rate_bps")
SWEEP_COLUMNS = (
    "param", "value", "algorithm", "mean_sum_rate_bps", "std_sum_rate_bps", "mean_ee_bps_per_w",
)


def fmt(x):
    """CSV float format: 9 significant digits."""
    return format(float(x), ".9g")


# config loading ------------------------------------------------------------
def load_config(source):
    """Return ``(ScenarioConfig, variants)`` from a profile name or a JSON file.

    The JSON document holds ScenarioConfig fields and optionally
    ``"variants"``, a list of field overrides for convergence runs. A
    ``manifest.json`` written by this tool is accepted too (its ``"config"``
    entry is used).
    """
    if source in PROFILES:
        return PROFILES[source]().validate(), []
    try:
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{source} is not valid JSON ({exc.msg}, line {exc.lineno})")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {source}: {exc.strerror}")
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a JSON object")
    if "config" in data and isinstance(data["config"], dict):
        variants = data.get("variants", [])
        data = dict(data["config"])
    else:
        data = dict(data)
        variants = data.pop("variants", [])
    cfg = ScenarioConfig.from_dict(data)
    if not isinstance(variants, list) or not all(isinstance(v, dict) for v in variants):
        raise ConfigError("variants", "must be a list of objects with config overrides")
    for v in variants:
        cfg.replace(**_check_override(v)).validate()
    return cfg, variants


def _check_override(override):
    names = set(ScenarioConfig.__dataclass_fields__)
    unknown = sorted(set(override) - names)
    if unknown:
        raise ConfigError(unknown[0], "unknown field in variant")
    return override


def variant_label(override):
    return " ".join(f"{k}={override[k]}" for k in sorted(override)) or "base"


# output helpers --------------------------------------------------------------
class Manifest:
    def __init__(self, out, command, cfg, seeds, variants=None, extra=None):
        self.path = out / "manifest.json"
        self.data = {
            "tool": "simirs",
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "command": command,
            "config": cfg.to_dict(),
            "variants": variants or [],
            "seeds": list(seeds),
            "artifacts": [],
            "stage_seconds": {},
        }
        self.data.update(extra or {})
        self.write()

    def stage(self, name, seconds):
        self.data["stage_seconds"][name] = round(seconds, 6)

    def artifact(self, path):
        self.data["artifacts"].append(path.name)

    def write(self):
        with open(self.path, "w", encoding="utf-8") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _prepare_out(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# subcommands ---------------------------------------------------------------
def cmd_run(cfg, seed, out, svg=False):
    out = _prepare_out(out)
    manifest = Manifest(out, "run", cfg, [seed])
    t0 = time.perf_counter()
    report, trace = run_alternating(cfg, seed)
    manifest.stage("optimize", time.perf_counter() - t0)

    t0 = time.perf_counter()
    rows = [
        (r.iteration, fmt(r.best_sum_rate), fmt(r.f6_final)) for r in trace.all_records()
    ]
    manifest.artifact(write_csv(out / "trace.csv", TRACE_COLUMNS, rows))
    assignment = trace.best.assoc.assignment
    rows = [
        (k, assignment[k], fmt(report.sinr[k]), fmt(report.rate[k]), "")
        for k in range(len(assignment))
    ]
    rows.append(("all", "", "", fmt(report.sum_rate), fmt(report.energy_efficiency)))
    manifest.artifact(write_csv(out / "summary.csv", SUMMARY_COLUMNS, rows))
    if svg:
        _plot_lines(
            out / "trace.svg",
            {"proposed": [r.best_sum_rate for r in trace.all_records()]},
            xlabel="outer iteration",
            ylabel="sum rate (bit/s)",
        )
        manifest.artifact(out / "trace.svg")
    manifest.stage("write", time.perf_counter() - t0)
    manifest.write()
    return EXIT_OK


def cmd_convergence(cfg, variants, seeds, out, svg=False):
    out = _prepare_out(out)
    variants = variants or [{}]
    manifest = Manifest(out, "convergence", cfg, seeds, variants)
    rows = []
    curves = {}
    t0 = time.perf_counter()
    for override in variants:
        label = variant_label(override)
        derived = cfg.replace(**override).validate()
        per_seed = []
        for seed in seeds:
            _, trace = run_alternating(derived, seed)
            rates = trace.sum_rates
            per_seed.append(rates)
            rows.extend((label, i, fmt(rate)) for i, rate in enumerate(rates))
        curves[label] = _mean_padded(per_seed)
    manifest.stage("optimize", time.perf_counter() - t0)
    t0 = time.perf_counter()
    manifest.artifact(write_csv(out / "convergence.csv", CONVERGENCE_COLUMNS, rows))
    if svg:
        _plot_lines(out / "convergence.svg", curves, "outer iteration", "mean sum rate (bit/s)")
        manifest.artifact(out / "convergence.svg")
    manifest.stage("write", time.perf_counter() - t0)
    manifest.write()
    return EXIT_OK


def _mean_padded(traces):
    """Average traces of unequal length, holding each at its final value."""
    n = max(len(t) for t in traces)
    padded = np.array([np.concatenate([t, np.full(n - len(t), t[-1])]) for t in traces])
    return padded.mean(axis=0)


def cmd_sweep(cfg, param, values, trials, seed, out, svg=False):
    out = _prepare_out(out)
    seeds = [seed + t for t in range(trials)]
    manifest = Manifest(
        out, "sweep", cfg, seeds, extra={"param": param, "values": list(values), "trials": trials}
    )
    t0 = time.perf_counter()
    result = sweep(cfg, param, values, trials, METHODS, base_seed=seed)
    manifest.stage("simulate", time.perf_counter() - t0)
    for value, message in result.errors.items():
        print(f"warning: {param}={value} skipped: {message}", file=sys.stderr)
    if not result.rows:
        raise ConfigError(SWEEP_PARAMS[param], "no sweep value produced a valid config")

    t0 = time.perf_counter()
    rows = []
    for value, stats in result.rows:
        for method in result.methods:
            st = stats[method]
            rows.append(
                (param, _fmt_value(value), method,
                 fmt(st.mean_sum_rate), fmt(st.std_sum_rate), fmt(st.mean_ee))
            )
    manifest.artifact(write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows))
    if svg:
        stat = "mean_ee" if SWEEP_PARAMS[param] == "P_s" else "mean_sum_rate"
        ylabel = "energy efficiency (bit/s/W)" if stat == "mean_ee" else "sum rate (bit/s)"
        curves = {m: result.curve(m, stat) for m in result.methods}
        _plot_lines(out / "sweep.svg", curves, param, ylabel, x=result.values())
        manifest.artifact(out / "sweep.svg")
    manifest.stage("write", time.perf_counter() - t0)
    manifest.write()
    return EXIT_OK


def _fmt_value(value):
    return str(value) if isinstance(value, int) else fmt(value)


def _plot_lines(path, curves, xlabel, ylabel, x=None):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("warning: matplotlib not installed, skipping SVG output", file=sys.stderr)
        return
    # fixed metadata keeps the SVG reproducible too
    plt.rcParams["svg.hashsalt"] = "simirs"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, y in curves.items():
        xs = x if x is not None else np.arange(len(y))
        ax.plot(xs, y, marker="o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# entry point ---------------------------------------------------------------
def _parse_values(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("need at least one value")
    return values


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="simirs", description="IRS-assisted multi-BS downlink simulator"
    )
    parser.add_argument("--version", action="version", version=f"simirs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument(
            "--config", required=True,
            help="JSON config file, a manifest.json, or a profile name (%s)" % ", ".join(PROFILES),
        )
        p.add_argument("--seed", type=_seed, default=0, help="seed (first seed for multi-seed runs)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--svg", action="store_true", help="also write an SVG plot")

    p = sub.add_parser("run", help="one alternating-optimization run")
    common(p)
    p = sub.add_parser("convergence", help="outer-loop traces per config variant")
    common(p)
    p.add_argument("--trials", type=_positive, default=5, help="number of seeds")
    p = sub.add_parser("sweep", help="Monte-Carlo sweep over one parameter")
    common(p)
    p.add_argument("--param", required=True, choices=["M", "N", "Ps", "K", "b"])
    p.add_argument("--values", required=True, type=_parse_values)
    p.add_argument("--trials", type=_positive, default=50)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg, variants = load_config(args.config)
        if args.command == "run":
            return cmd_run(cfg, args.seed, args.out, args.svg)
        if args.command == "convergence":
            seeds = [args.seed + t for t in range(args.trials)]
            return cmd_convergence(cfg, variants, seeds, args.out, args.svg)
        values = args.values
        if args.param != "Ps":
            if any(not float(v).is_integer() for v in values):
                raise ConfigError(args.param, "sweep values must be integers")
            values = [int(v) for v in values]
        return cmd_sweep(cfg, args.param, values, args.trials, args.seed, args.out, args.svg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
