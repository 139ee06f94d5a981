"""Command-line driver: data simulation, runs, benchmarks, diagnostics.

Subcommands
-----------
simulate-data   write generator output as one CSV per group
run             execute a configured experiment into a fresh directory
benchmark       time both sampler variants on the configured data
diagnostics     batched goodness-of-fit tests over a predictive trace

Configuration is a flat JSON document (see ``CONFIG_KEYS``); unknown keys
are rejected so typos fail loudly. Every run writes into a fresh
timestamped directory under ``--out``, the ``CAPDDP_OUT`` environment
variable, or the working directory, in that order of preference.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import os
import subprocess
import sys

import numpy as np

from .benchmark import benchmark_delta_t
from .config import Variant
from .experiments import (
    ExperimentSpec,
    ad_one_sample_normal,
    ad_two_sample,
    batch_pvalues,
    build_config,
    build_dataset,
    generate_example1,
    generate_example2,
    run_experiment,
)

OUT_ENV_VAR = "CAPDDP_OUT"

# key -> (type check, default). A None default means "optional, absent ok".
CONFIG_KEYS = {
    "generator": str,
    "sizes": list,
    "variant": str,
    "sweeps": int,
    "burn_in": int,
    "thinning": int,
    "c": (int, float),
    "s": (int, float),
    "eps": (int, float),
    "dirichlet_hyper": list,
    "seed": int,
    "predictive_per_sweep": int,
    "predictive_tail": str,
    "data_file": str,
    "status_groups": list,
    "benchmark_sweeps": int,
    "out_dir": str,
}


class ConfigError(ValueError):
    pass


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc)) from None
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            "%s: line %d column %d: %s" % (path, exc.lineno, exc.colno, exc.msg)
        ) from None
    if not isinstance(doc, dict):
        raise ConfigError("%s: top level must be an object" % path)
    for key, value in doc.items():
        if key not in CONFIG_KEYS:
            raise ConfigError("%s: unknown config key %r" % (path, key))
        if value is not None and not isinstance(value, CONFIG_KEYS[key]):
            raise ConfigError(
                "%s: key %r should be %s, got %r"
                % (path, key, CONFIG_KEYS[key], type(value).__name__)
            )
    return doc


def spec_from_config(doc: dict, overrides: dict) -> ExperimentSpec:
    merged = dict(doc)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    merged.pop("out_dir", None)
    merged.pop("benchmark_sweeps", None)
    if "sizes" in merged and merged["sizes"] is not None:
        merged["sizes"] = tuple(int(v) for v in merged["sizes"])
    if "status_groups" in merged and merged["status_groups"] is not None:
        merged["status_groups"] = tuple(tuple(int(c) for c in g) for g in merged["status_groups"])
    if "dirichlet_hyper" in merged and merged["dirichlet_hyper"] is not None:
        merged["dirichlet_hyper"] = np.asarray(merged["dirichlet_hyper"], dtype=float)
    try:
        return ExperimentSpec(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _out_root(cli_out) -> str:
    return cli_out or os.environ.get(OUT_ENV_VAR) or os.getcwd()


def fresh_run_dir(root: str, seed: int) -> str:
    stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S-%f")
    path = os.path.join(root, "run-%s-seed%d" % (stamp, seed))
    os.makedirs(path, exist_ok=False)
    return path


def _build_id() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
        )
        return out.stdout.strip() if out.returncode == 0 else ""
    except OSError:
        return ""


def _config_hash(doc: dict) -> str:
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_simulate_data(args) -> int:
    sizes = tuple(int(v) for v in args.sizes.split(","))
    rng = np.random.default_rng(args.seed)
    if args.generator == "example1":
        data = generate_example1(sizes, rng)
    else:
        data = generate_example2(sizes, rng)
    os.makedirs(args.out, exist_ok=True)
    paths = []
    for j, values in enumerate(data.groups):
        path = os.path.join(args.out, "group%d.csv" % (j + 1))
        _write_csv(
            path,
            ["group", "index", "value"],
            [[j + 1, i + 1, _fmt(v)] for i, v in enumerate(values)],
        )
        paths.append(path)
    print("\n".join(paths))
    return 0


def cmd_run(args) -> int:
    doc = load_config(args.config)
    spec = spec_from_config(doc, {"seed": args.seed, "variant": args.variant})
    arts = run_experiment(spec)
    out_dir = fresh_run_dir(_out_root(args.out or doc.get("out_dir")), spec.seed)

    if arts.distance_trace is not None and len(arts.distance_trace):
        trace = arts.distance_trace
        l2 = trace.l2_matrix()
        l2_run = trace.l2_running_mean()
        rows = []
        for r, t in enumerate(arts.recorded_sweeps):
            for q, (j, i) in enumerate(trace.pairs):
                rows.append(
                    [int(t), "%d-%d" % (j + 1, i + 1), _fmt(l2[r, q]), _fmt(l2_run[r, q])]
                )
        _write_csv(
            os.path.join(out_dir, "trace_distances.csv"),
            ["sweep", "pair", "value", "running_mean"],
            rows,
        )

    rows = []
    for r, t in enumerate(arts.recorded_sweeps):
        for j in range(arts.config.m):
            for v in arts.predictive[r, j]:
                rows.append([int(t), j + 1, _fmt(v)])
    _write_csv(
        os.path.join(out_dir, "trace_predictive.csv"),
        ["sweep", "group", "value"],
        rows,
    )

    _write_csv(
        os.path.join(out_dir, "trace_clusters.csv"),
        ["sweep", "count"],
        [[int(t), int(c)] for t, c in zip(arts.recorded_sweeps, arts.clusters)],
    )

    summary = dict(arts.summary)
    summary["config"] = doc
    summary["config_hash"] = _config_hash(doc)
    summary["build_id"] = _build_id()
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(out_dir)
    return 0


def cmd_benchmark(args) -> int:
    doc = load_config(args.config)
    spec = spec_from_config(doc, {"seed": args.seed})
    sweeps = args.sweeps or doc.get("benchmark_sweeps") or 500
    rng = np.random.default_rng(spec.seed)
    data = build_dataset(spec, rng)
    cfg = build_config(spec, data.m)
    report = benchmark_delta_t(cfg, data, sweeps).to_dict()
    report["seed"] = spec.seed
    out_dir = fresh_run_dir(_out_root(args.out or doc.get("out_dir")), spec.seed)
    path = os.path.join(out_dir, "benchmark.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _read_trace_group(path, group):
    values = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"group", "value"} <= set(reader.fieldnames):
            raise ConfigError("%s: expected columns sweep,group,value" % path)
        for row in reader:
            if int(row["group"]) == group:
                values.append(float(row["value"]))
    return np.asarray(values)


def cmd_diagnostics(args) -> int:
    draws = _read_trace_group(args.trace, args.group)
    if draws.size < args.batch_size:
        print(
            "insufficient samples: %d draws for batch size %d" % (draws.size, args.batch_size),
            file=sys.stderr,
        )
        return 1
    if args.reference == "normal":
        pvals = batch_pvalues(
            draws,
            args.batch_size,
            lambda b: ad_one_sample_normal(b, args.mean, args.variance),
        )
        reference = {"kind": "normal", "mean": args.mean, "variance": args.variance}
    else:
        other = _read_trace_group(args.other, args.other_group or args.group)
        n_batches = min(draws.size, other.size) // args.batch_size
        if n_batches == 0:
            print("insufficient samples in the comparison trace", file=sys.stderr)
            return 1
        pvals = np.array(
            [
                ad_two_sample(
                    draws[b * args.batch_size:(b + 1) * args.batch_size],
                    other[b * args.batch_size:(b + 1) * args.batch_size],
                )[1]
                for b in range(n_batches)
            ]
        )
        reference = {"kind": "two-sample", "other": args.other}
    report = {
        "trace": args.trace,
        "group": args.group,
        "reference": reference,
        "batch_size": args.batch_size,
        "n_batches": int(pvals.size),
        "rejections_at_0.05": int(np.sum(pvals < 0.05)),
        "rejection_rate_at_0.05": float(np.mean(pvals < 0.05)),
        "p_values": [float(p) for p in pvals],
    }
    print(json.dumps(report, indent=2))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capddp",
        description="Dependent mixture sampling with shared atoms: runs, benchmarks, diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-data", help="write generator output as CSV files")
    p.add_argument("generator", choices=["example1", "example2"])
    p.add_argument("--sizes", default="80,30,80", help="comma-separated group sizes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_simulate_data)

    p = sub.add_parser("run", help="run a configured experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--variant", choices=[v.value for v in Variant], default=None)
    p.add_argument("--out", default=None, help="output root (default $%s or cwd)" % OUT_ENV_VAR)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("benchmark", help="time both variants on the configured data")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sweeps", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("diagnostics", help="batched AD tests over a predictive trace")
    p.add_argument("--trace", required=True, help="trace_predictive.csv path")
    p.add_argument("--group", type=int, required=True, help="1-based group column value")
    p.add_argument("--reference", choices=["normal", "two-sample"], default="normal")
    p.add_argument("--mean", type=float, default=0.0)
    p.add_argument("--variance", type=float, default=1.0)
    p.add_argument("--other", default=None, help="second trace for two-sample mode")
    p.add_argument("--other-group", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=100)
    p.set_defaults(func=cmd_diagnostics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "diagnostics" and args.reference == "two-sample" and not args.other:
        parser.error("two-sample diagnostics require --other")
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("i/o error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
