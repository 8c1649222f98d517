"""Command-line front end.

Exit codes: 0 success (all assertions pass), 1 assertion failure,
2 resource cap exceeded, 3 numeric/singular failure, 4 bad config.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .convergence_lab import DRIVERS, ExperimentConfig
from .errors import (
    ConfigError,
    DisconnectedNetworkError,
    NelError,
    NumericError,
    ResourceCapError,
)
from .index_space import WeightAssignment
from .io import RunManifest, Stopwatch, fmt17, fraction_str, parse_fraction, write_csv, write_gnuplot, write_json
from .network import (
    KernelSpec,
    all_pairs_resistance,
    build_network,
    effective_resistance,
    load_network_json,
    matching_weights,
    reduce_to_pair,
)

EXIT_PASS = 0
EXIT_ASSERTION = 1
EXIT_CAP = 2
EXIT_NUMERIC = 3
EXIT_CONFIG = 4


# ---------------------------------------------------------------------------
# Config parsing

_BOOLS = {"true": True, "false": False, "1": True, "0": False}


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


_SCHEMA = {
    "i": int,
    "s": float,
    "n": int,
    "n_values": _int_list,
    "i_values": _int_list,
    "function": str,
    "kernel": str,
    "scale": str,
    "convention": str,
    "tol": float,
    "l2_tol": float,
    "quad_tol": float,
    "decreasing_from": int,
    "r": float,
    "trials": int,
    "seed": int,
    "threads": int,
}


def parse_config_text(text: str) -> dict:
    """Parse the flat key = value format with # comments."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _SCHEMA[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return values


def load_config(path: str | None, overrides: list[str]) -> ExperimentConfig:
    values: dict = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text()))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _SCHEMA[key](value.strip())
    if values.get("convention") not in (None, "ordered", "path"):
        raise ConfigError("convention must be 'ordered' or 'path'")
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Sources from flags

def _source_from_args(args) -> WeightAssignment | KernelSpec:
    if args.source == "kernel":
        if args.kernel == "frac":
            return KernelSpec.fractional(args.s, args.scale)
        if args.kernel == "perturbed":
            return KernelSpec.perturbed_fractional(args.s, scale=args.scale)
        raise ConfigError(f"unknown kernel family {args.kernel!r}")
    if args.weights == "matching":
        return matching_weights(args.alpha, args.beta)
    if args.weights == "constant":
        return WeightAssignment.constant(args.r)
    raise ConfigError(f"unknown weight family {args.weights!r}")


def _add_source_flags(parser) -> None:
    parser.add_argument("--source", choices=("kernel", "weights"), default="kernel")
    parser.add_argument("--kernel", default="frac", help="kernel family: frac | perturbed")
    parser.add_argument("--s", type=float, default=0.25, help="fractional exponent in (0,1)")
    parser.add_argument("--scale", default="one", help="kernel scale: one | isq | a number")
    parser.add_argument("--weights", default="matching", help="weight family: matching | constant")
    parser.add_argument("--alpha", type=float, default=1.0)
    parser.add_argument("--beta", type=float, default=1.0)
    parser.add_argument("--r", type=float, default=2.0, help="constant weight value")


# ---------------------------------------------------------------------------
# Commands

def cmd_build(args) -> int:
    net = build_network(args.i, args.n, _source_from_args(args))
    print(f"nodes={net.node_count} wires={net.wire_count}")
    if args.out:
        net.save_json(args.out)
        print(f"wrote {args.out}")
    return EXIT_PASS


def _resistance_network(args):
    if args.net:
        return load_network_json(args.net)
    return build_network(args.i, args.n, _source_from_args(args))


def cmd_resistance(args) -> int:
    net = _resistance_network(args)
    rows = []
    header = ["x", "y", "resistance"]
    if args.all_pairs:
        R = all_pairs_resistance(net)
        nodes = net.nodes
        for a in range(len(nodes)):
            for b in range(a + 1, len(nodes)):
                rows.append([fraction_str(nodes[a]), fraction_str(nodes[b]), float(R[a, b])])
    else:
        if args.x is None or args.y is None:
            raise ConfigError("need --x and --y (or --all-pairs)")
        x, y = parse_fraction(args.x), parse_fraction(args.y)
        if args.reduce == "starmesh":
            value = reduce_to_pair(net, x, y)
        else:
            value = effective_resistance(net, x, y)
        rows.append([fraction_str(x), fraction_str(y), float(value)])

    if args.check:
        cn = net.conductance_network()
        deviation = 0.0
        R = all_pairs_resistance(net)
        labels = cn.labels
        pairs = min(len(labels) - 1, 12)
        for k in range(pairs):
            direct = reduce_to_pair(cn, labels[k], labels[k + 1])
            deviation = max(deviation, abs(direct - float(R[k, k + 1])))
        print(f"star-mesh vs solve max deviation: {fmt17(deviation)}")

    if args.out:
        write_csv(args.out, header, rows)
        print(f"wrote {args.out}")
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(fmt17(c) if isinstance(c, float) else str(c) for c in row))
    return EXIT_PASS


def cmd_experiment(args) -> int:
    cfg = load_config(args.config, args.set or [])
    if args.threads is not None:
        cfg = ExperimentConfig(**{**cfg.__dict__, "threads": args.threads})
    if args.seed is not None:
        cfg = ExperimentConfig(**{**cfg.__dict__, "seed": args.seed})
    driver = DRIVERS.get(args.name)
    if driver is None:
        raise ConfigError(f"unknown experiment {args.name!r}; pick from {sorted(DRIVERS)}")

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    with Stopwatch() as watch:
        report = driver(cfg)

    json_path = outdir / f"{args.name}_report.json"
    csv_path = outdir / f"{args.name}_report.csv"
    dat_path = outdir / f"{args.name}_sequence.dat"
    write_json(json_path, report.to_json_dict())
    write_csv(csv_path, ["grid", "value", "target", "passed"], report.csv_rows())
    try:
        write_gnuplot(dat_path, f"{args.name}: grid value", report.gnuplot_pairs())
        outputs = [str(json_path), str(csv_path), str(dat_path)]
    except (TypeError, ValueError):
        outputs = [str(json_path), str(csv_path)]
    manifest = RunManifest(
        command=f"experiment {args.name}",
        config=dict(cfg.__dict__),
        outputs=outputs,
        seed=cfg.seed,
        wall_clock_s=watch.elapsed,
    )
    manifest_path = outdir / f"{args.name}_manifest.json"
    manifest.config["n_values"] = list(cfg.n_values)
    manifest.config["i_values"] = list(cfg.i_values)
    manifest.write(manifest_path)

    status = "PASS" if report.passed else "FAIL"
    print(f"{args.name}: {status} (target={report.target}, last={report.values[-1] if report.values else None})")
    if not report.passed:
        json.dump(report.details, sys.stderr, indent=1, default=str)
        sys.stderr.write("\n")
        return EXIT_ASSERTION
    return EXIT_PASS


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nel",
        description=(
            "Nonlocal electrical networks on dyadic grids: build stage "
            "networks, compute effective resistances, run convergence "
            "experiments."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build a stage network and export JSON")
    p_build.add_argument("--i", type=int, required=True)
    p_build.add_argument("--n", type=int, required=True)
    _add_source_flags(p_build)
    p_build.add_argument("--out", default=None)
    p_build.set_defaults(func=cmd_build)

    p_res = sub.add_parser("resistance", help="effective resistances of a network")
    p_res.add_argument("--net", default=None, help="network JSON file")
    p_res.add_argument("--i", type=int, default=1)
    p_res.add_argument("--n", type=int, default=1)
    _add_source_flags(p_res)
    p_res.add_argument("--x", default=None, help="node as num/den")
    p_res.add_argument("--y", default=None, help="node as num/den")
    p_res.add_argument("--all-pairs", action="store_true")
    p_res.add_argument("--reduce", choices=("solve", "starmesh"), default="solve")
    p_res.add_argument("--check", action="store_true",
                       help="cross-validate star-mesh reduction against the solver")
    p_res.add_argument("--out", default=None)
    p_res.set_defaults(func=cmd_resistance)

    p_exp = sub.add_parser("experiment", help="run a convergence/bound experiment")
    p_exp.add_argument("name", choices=sorted(DRIVERS))
    p_exp.add_argument("--config", default=None, help="flat key = value config file")
    p_exp.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key")
    p_exp.add_argument("--out", default="nel-out")
    p_exp.add_argument("--threads", type=int, default=None)
    p_exp.add_argument("--seed", type=int, default=None)
    p_exp.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (DisconnectedNetworkError, NumericError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ASSERTION


if __name__ == "__main__":
    sys.exit(main())
