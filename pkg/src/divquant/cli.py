"""Command line interface: rule design, benchmarks, and RDP file tooling."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .distributions import DistributionSpec, sample
from .flynn_gray import FGConfig, run
from .grid import GridSpec, bin_samples, kt_probabilities, read_samples_csv
from .experiments import (
    RateExperimentConfig,
    rate_rows_to_csv,
    best_in_class,
    run_rate_experiment,
)
from .rdp import (
    MalformedRdpError,
    build_minimal_rdp,
    deserialize,
    leaf_count,
    quantize_batch,
    serialize,
    to_labeling,
)

__all__ = ["cli_main", "main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage problems exit with 1; argparse's default of 2 is reserved for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_atomic(path: str, data) -> None:
    mode = "wb" if isinstance(data, bytes) else "w"
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _add_grid_args(parser):
    parser.add_argument("--d", type=int, default=1, help="number of axes (default 1)")
    parser.add_argument("--J", type=int, default=6,
                        help="dyadic depth, 2**J cells per axis (default 6)")
    parser.add_argument("--box", type=float, nargs=2, default=[-5.0, 5.0],
                        metavar=("LOW", "HIGH"),
                        help="domain interval applied to every axis (default -5 5)")


def _add_dist_args(parser):
    parser.add_argument("--dist-p", choices=["gaussian", "laplace"],
                        help="first hypothesis distribution")
    parser.add_argument("--dist-q", choices=["gaussian", "laplace"],
                        help="second hypothesis distribution")
    parser.add_argument("--mean-p", type=float, default=0.0)
    parser.add_argument("--var-p", type=float, default=1.0)
    parser.add_argument("--mean-q", type=float, default=0.0)
    parser.add_argument("--var-q", type=float, default=1.0)


def _add_fg_args(parser):
    parser.add_argument("--L", type=int, default=8, help="quantization levels (default 8)")
    parser.add_argument("--epsilon", type=float, default=1e-6,
                        help="relative improvement stopping threshold")
    parser.add_argument("--max-iterations", type=int, default=100)
    parser.add_argument("--restarts", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--bounds", type=float, nargs=2, default=None,
                        metavar=("M_LOW", "M_HIGH"),
                        help="optional clamp range for the per-level values")


def _grid_from_args(args) -> GridSpec:
    return GridSpec.cube(args.d, args.J, args.box[0], args.box[1])


def _fg_from_args(args) -> FGConfig:
    bounds = tuple(args.bounds) if args.bounds is not None else None
    return FGConfig(levels=args.L, epsilon=args.epsilon,
                    max_iterations=args.max_iterations, restarts=args.restarts,
                    seed=args.seed, bounds=bounds)


def _dist_from_args(args, side: str) -> DistributionSpec:
    kind = getattr(args, f"dist_{side}")
    return DistributionSpec(kind, args.d, getattr(args, f"mean_{side}"),
                            getattr(args, f"var_{side}"))


def _cmd_design(args) -> int:
    grid = _grid_from_args(args)
    use_files = args.samples_p is not None or args.samples_q is not None
    use_dists = args.dist_p is not None or args.dist_q is not None
    if use_files == use_dists:
        raise _UsageError("give either --samples-p/--samples-q or --dist-p/--dist-q")
    if use_files:
        if args.samples_p is None or args.samples_q is None:
            raise _UsageError("--samples-p and --samples-q are both required")
        points_p = read_samples_csv(args.samples_p, args.d)
        points_q = read_samples_csv(args.samples_q, args.d)
    else:
        if args.dist_p is None or args.dist_q is None:
            raise _UsageError("--dist-p and --dist-q are both required")
        if args.n is None:
            raise _UsageError("--n is required when sampling from distributions")
        points_p = sample(_dist_from_args(args, "p"), args.n,
                          np.random.SeedSequence([args.seed, 0]))
        points_q = sample(_dist_from_args(args, "q"), args.n,
                          np.random.SeedSequence([args.seed, 1]))
    counts_p, kept_p = bin_samples(grid, points_p)
    counts_q, kept_q = bin_samples(grid, points_q)
    result = run(kt_probabilities(counts_p, kept_p), kt_probabilities(counts_q, kept_q),
                 _fg_from_args(args), grid)
    tree = build_minimal_rdp(grid, result.rule.labels, levels=args.L)
    _write_atomic(args.output, serialize(tree))
    print(f"cells={grid.cell_count} levels={args.L} n_p={kept_p} n_q={kept_q}")
    print(f"divergence={result.divergence!r}")
    print(f"iterations={result.iterations} restart={result.restart_index}")
    print("phi=" + ",".join(repr(v) for v in result.rule.phi))
    print(f"leaves={leaf_count(tree)} output={args.output}")
    return 0


def _cmd_best_in_class(args) -> int:
    if args.dist_p is None or args.dist_q is None:
        raise _UsageError("--dist-p and --dist-q are required")
    grid = _grid_from_args(args)
    result = best_in_class(_dist_from_args(args, "p"), _dist_from_args(args, "q"),
                           grid, _fg_from_args(args))
    if args.output:
        tree = build_minimal_rdp(grid, result.rule.labels, levels=args.L)
        _write_atomic(args.output, serialize(tree))
        print(f"leaves={leaf_count(tree)} output={args.output}")
    print(f"cells={grid.cell_count} levels={args.L}")
    print(f"divergence={result.divergence!r}")
    print(f"iterations={result.iterations} restart={result.restart_index}")
    return 0


def _cmd_rate_experiment(args) -> int:
    if args.dist_p is None or args.dist_q is None:
        raise _UsageError("--dist-p and --dist-q are required")
    try:
        sizes = tuple(int(tok) for tok in args.n_values.split(",") if tok.strip())
    except ValueError as exc:
        raise _UsageError(f"bad --n-values list: {exc}")
    config = RateExperimentConfig(
        dist_p=_dist_from_args(args, "p"), dist_q=_dist_from_args(args, "q"),
        grid=_grid_from_args(args), sample_sizes=sizes, trials=args.trials,
        fg=_fg_from_args(args), seed=args.seed,
    )
    rows = run_rate_experiment(config, workers=args.workers)
    _write_atomic(args.output, rate_rows_to_csv(rows))
    print(f"rows={len(rows)} output={args.output}")
    return 0


def _read_tree(path):
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def _cmd_rdp_export(args) -> int:
    tree = _read_tree(args.input)
    grid = GridSpec.cube(tree.dimension, tree.max_depth, 0.0, 1.0)
    labels = to_labeling(tree, grid)
    lines = [f"# d={tree.dimension} J={tree.max_depth} L={tree.levels}"]
    lines.extend(str(int(v)) for v in labels)
    _write_atomic(args.output, "\n".join(lines) + "\n")
    print(f"cells={labels.size} output={args.output}")
    return 0


def _parse_labels_file(path):
    meta = {}
    labels = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if "=" in token:
                        key, value = token.split("=", 1)
                        meta[key.strip()] = value.strip()
                continue
            labels.append(int(line))
    return meta, np.asarray(labels, dtype=np.int64)


def _cmd_rdp_import(args) -> int:
    meta, labels = _parse_labels_file(args.input)
    d = args.d if args.d is not None else int(meta.get("d", 0))
    J = args.J if args.J is not None else int(meta.get("J", -1))
    if d < 1 or J < 0:
        raise _UsageError("give --d and --J or a '# d=... J=...' header line")
    levels = args.L if args.L is not None else (
        int(meta["L"]) if "L" in meta else int(labels.max()) + 1 if labels.size else 1
    )
    grid = GridSpec.cube(d, J, 0.0, 1.0)
    tree = build_minimal_rdp(grid, labels, levels=levels)
    _write_atomic(args.output, serialize(tree))
    print(f"cells={labels.size} leaves={leaf_count(tree)} output={args.output}")
    return 0


def _cmd_quantize(args) -> int:
    tree = _read_tree(args.rules)
    grid = GridSpec.cube(tree.dimension, tree.max_depth, args.box[0], args.box[1])
    points = read_samples_csv(args.samples, tree.dimension)
    labels = quantize_batch(tree, grid, points)
    _write_atomic(args.output, "\n".join(str(int(v)) for v in labels) + "\n")
    print(f"points={labels.size} outside={int(np.count_nonzero(labels < 0))} "
          f"output={args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="divquant",
                     description="Design and apply divergence-maximizing quantization rules.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("design", help="fit a rule from samples or sampled distributions")
    _add_grid_args(p)
    _add_dist_args(p)
    _add_fg_args(p)
    p.add_argument("--samples-p", help="CSV of training points for the first hypothesis")
    p.add_argument("--samples-q", help="CSV of training points for the second hypothesis")
    p.add_argument("--n", type=int, default=None,
                   help="training set size per hypothesis when sampling")
    p.add_argument("--output", "-o", required=True, help="RDP file to write")
    p.set_defaults(handler=_cmd_design)

    p = sub.add_parser("best-in-class", help="fit a rule from exact cell probabilities")
    _add_grid_args(p)
    _add_dist_args(p)
    _add_fg_args(p)
    p.add_argument("--output", "-o", default=None, help="optional RDP file to write")
    p.set_defaults(handler=_cmd_best_in_class)

    p = sub.add_parser("rate-experiment",
                       help="loss of learned rules vs the best-in-class rule, as CSV")
    _add_grid_args(p)
    _add_dist_args(p)
    _add_fg_args(p)
    p.add_argument("--n-values", default="1000,10000,100000",
                   help="comma-separated increasing sample sizes")
    p.add_argument("--trials", type=int, default=20, help="trials per sample size")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel trial processes (output is identical for any value)")
    p.add_argument("--output", "-o", required=True, help="CSV file to write")
    p.set_defaults(handler=_cmd_rate_experiment)

    p = sub.add_parser("rdp-export", help="expand an RDP file into a cell label listing")
    p.add_argument("--input", "-i", required=True, help="RDP file to read")
    p.add_argument("--output", "-o", required=True, help="label listing to write")
    p.set_defaults(handler=_cmd_rdp_export)

    p = sub.add_parser("rdp-import", help="build an RDP file from a cell label listing")
    p.add_argument("--input", "-i", required=True, help="label listing to read")
    p.add_argument("--output", "-o", required=True, help="RDP file to write")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--J", type=int, default=None)
    p.add_argument("--L", type=int, default=None)
    p.set_defaults(handler=_cmd_rdp_import)

    p = sub.add_parser("quantize", help="map sample rows to labels with an RDP file")
    p.add_argument("--rules", required=True, help="RDP file with the quantization rule")
    p.add_argument("--samples", required=True, help="CSV of points to quantize")
    p.add_argument("--box", type=float, nargs=2, default=[-5.0, 5.0],
                   metavar=("LOW", "HIGH"),
                   help="domain interval the rule was designed on (default -5 5)")
    p.add_argument("--output", "-o", required=True,
                   help="label per row; -1 marks points outside the box")
    p.set_defaults(handler=_cmd_quantize)

    return parser


def _config_argv(path: str) -> list[str]:
    """Turn 'key = value' lines into CLI tokens (later flags still win)."""
    out = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line {raw.rstrip()!r} in {path}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key or not value:
                raise ValueError(f"bad config line {raw.rstrip()!r} in {path}")
            out.append("--" + key.replace("_", "-"))
            out.extend(value.split())
    return out


def _inject_config(argv: list[str]) -> list[str]:
    out = []
    config_path = None
    i = 0
    while i < len(argv):
        token = argv[i]
        if token == "--config":
            if i + 1 >= len(argv):
                raise ValueError("--config needs a file path")
            config_path = argv[i + 1]
            i += 2
            continue
        if token.startswith("--config="):
            config_path = token.split("=", 1)[1]
            i += 1
            continue
        out.append(token)
        i += 1
    if config_path is None:
        return out
    if not out:
        raise ValueError("--config requires a subcommand")
    return [out[0]] + _config_argv(config_path) + out[1:]


def cli_main(argv=None) -> int:
    """Entry point; returns 0 on success, 1 on usage errors, 2 on data errors."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _inject_config(argv)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.handler(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MalformedRdpError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(cli_main())
