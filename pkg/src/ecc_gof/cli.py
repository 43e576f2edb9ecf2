"""Command-line interface.

Subcommands::

    ecc         Euler characteristic curve of a point-cloud CSV
    prepare     calibrate and save a one-sample null model
    test1       one-sample test of a sample against a saved model
    test2       two-sample permutation test of two samples
    power       Monte-Carlo power of one (null, alternative) pair
    matrix      all-to-all power matrix over a battery of distributions
    power-vs-n  power sweep over sample sizes
    nulldist    calibration-statistic distributions for histogramming

Rules shared by all commands: outputs are written atomically (temp file +
rename into place); every stochastic command requires --seed (there is no
wall-clock default) and writes a JSON manifest capturing the seed and the
full configuration next to its output; errors exit with status 1 and a
single ``error: <Kind>: <message>`` line on stderr; with --exit-status the
test commands exit 2 when the null hypothesis is rejected.  Worker threads
(--threads or ECC_GOF_THREADS) never change any output byte.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .curves import euler_curve, rescale_cloud
from .distributions import apply_transform, parse_spec, parse_transform
from .errors import EccGofError
from .experiments import (
    ModelCache,
    cells_to_csv_text,
    default_specs,
    estimate_power,
    null_statistic_distribution,
    nulldist_to_csv_text,
    power_matrix,
    power_vs_n,
)
from .fileio import atomic_write_json, atomic_write_text, dump_json
from .geometry import PointCloud
from .gof import (
    ReferenceModel,
    build_filtration,
    one_sample_test,
    prepare_reference,
    two_sample_test,
)

MANIFEST_SCHEMA = "ecc-gof-run-v1"


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors follow the CLI error contract
    (single stderr line, exit status 1; status 2 is reserved for 'reject')."""

    def error(self, message):
        print(f"error: UsageError: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_threads(p: _Parser) -> None:
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: ECC_GOF_THREADS or 1); "
                        "never affects results")


def _add_seed(p: _Parser) -> None:
    p.add_argument("--seed", type=int, required=True,
                   help="master seed (required; no wall-clock default)")


def _manifest(args, fields, outputs) -> dict:
    """Reproduction manifest: command, seed and every result-affecting
    option.  Thread count is deliberately excluded — it cannot change
    results."""
    config = {name: getattr(args, name.replace("-", "_")) for name in fields}
    return {
        "version": MANIFEST_SCHEMA,
        "package_version": __version__,
        "command": args.command,
        "config": config,
        "outputs": list(outputs),
    }


def _write_manifest(args, fields, outputs) -> None:
    atomic_write_json(args.out + ".manifest.json",
                      _manifest(args, fields, outputs))


def _methods_list(text: str) -> list:
    return [m.strip() for m in text.split(",") if m.strip()]


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma list of integers: {text!r}")


def build_parser() -> _Parser:
    parser = _Parser(prog="ecc-gof",
                     description="Goodness-of-fit testing with Euler "
                                 "characteristic curves.")
    parser.add_argument("--version", action="version",
                        version=f"ecc-gof {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("ecc", help="Euler characteristic curve of a cloud")
    p.add_argument("--input", required=True, help="point-cloud CSV")
    p.add_argument("--complex", default="alpha",
                   choices=["alpha", "rips", "cech"])
    p.add_argument("--maxdim", type=int, default=None,
                   help="max simplex dimension (rips/cech)")
    p.add_argument("--transform", default=None,
                   help="support transform, e.g. arctan(0.2) or "
                        "copula(normal(0,1))")
    p.add_argument("--rescale", action="store_true",
                   help="rescale coordinates by n^(1/d) first (the "
                        "normalisation used by the tests)")
    p.add_argument("--format", default="csv", choices=["csv", "json"])
    p.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("prepare", help="calibrate a one-sample null model")
    p.add_argument("--null", required=True, help="null distribution grammar")
    p.add_argument("--n", type=int, required=True, help="sample size")
    p.add_argument("--M", type=int, default=1000,
                   help="draws for the expected curve")
    p.add_argument("--m", type=int, default=1000,
                   help="draws for the null statistic distribution")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--complex", default="alpha",
                   choices=["alpha", "rips", "cech"])
    p.add_argument("--transform", default=None)
    _add_seed(p)
    _add_threads(p)
    p.add_argument("--out", required=True, help="model JSON path")

    p = sub.add_parser("test1", help="one-sample test against a saved model")
    p.add_argument("--model", required=True, help="model JSON from 'prepare'")
    p.add_argument("--input", required=True, help="sample CSV")
    p.add_argument("--alpha", type=float, default=None,
                   help="significance level (default: the model's)")
    p.add_argument("--out", default=None,
                   help="report JSON path (default stdout)")
    p.add_argument("--exit-status", action="store_true",
                   help="exit 2 when the null is rejected")

    p = sub.add_parser("test2", help="two-sample permutation test")
    p.add_argument("--x", required=True, help="first sample CSV")
    p.add_argument("--y", required=True, help="second sample CSV")
    p.add_argument("--K", type=int, default=1000,
                   help="number of permutations")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--complex", default="alpha",
                   choices=["alpha", "rips", "cech"])
    p.add_argument("--conservative", action="store_true",
                   help="use the (c+1)/(K+1) p-value")
    _add_seed(p)
    _add_threads(p)
    p.add_argument("--out", default=None,
                   help="report JSON path (default stdout)")
    p.add_argument("--exit-status", action="store_true",
                   help="exit 2 when the null is rejected")

    def add_power_common(p, with_method=True):
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--K", type=int, required=True,
                       help="Monte-Carlo trials per estimate")
        p.add_argument("--alpha", type=float, default=0.05)
        if with_method:
            p.add_argument("--method", default="topotest",
                           help="topotest | ks | cvm | ks_multivariate | "
                                "topotest2 | ks2")
        p.add_argument("--M", type=int, default=1000)
        p.add_argument("--m", type=int, default=1000)
        p.add_argument("--complex", default="alpha",
                       choices=["alpha", "rips", "cech"])
        p.add_argument("--n-cal", type=int, default=1000,
                       help="calibration draws for ks_multivariate")
        p.add_argument("--n-ref", type=int, default=100_000,
                       help="reference-sample size for ks_multivariate")
        p.add_argument("--n-permutations", type=int, default=1000,
                       help="permutations per two-sample trial")
        _add_seed(p)
        _add_threads(p)
        p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("power", help="power of one null/alternative pair")
    p.add_argument("--null", required=True)
    p.add_argument("--alt", required=True)
    add_power_common(p)

    p = sub.add_parser("matrix", help="all-to-all power matrix")
    p.add_argument("--spec", action="append", default=None,
                   help="battery member (repeatable); default: the shipped "
                        "battery for --dim")
    p.add_argument("--dim", type=int, default=1, choices=[1, 2, 3],
                   help="dimension of the default battery")
    p.add_argument("--methods", type=_methods_list, default=["topotest"],
                   help="comma list, e.g. topotest,ks")
    add_power_common(p, with_method=False)

    p = sub.add_parser("power-vs-n", help="power sweep over sample sizes")
    p.add_argument("--null", required=True)
    p.add_argument("--alt", required=True)
    p.add_argument("--n-list", type=_int_list, required=True,
                   help="ascending comma list, e.g. 50,100,250")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--methods", type=_methods_list, default=["topotest"])
    p.add_argument("--M", type=int, default=1000)
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--complex", default="alpha",
                   choices=["alpha", "rips", "cech"])
    p.add_argument("--n-cal", type=int, default=1000)
    p.add_argument("--n-ref", type=int, default=100_000)
    p.add_argument("--n-permutations", type=int, default=1000)
    _add_seed(p)
    _add_threads(p)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("nulldist",
                       help="null statistic distributions per sample size")
    p.add_argument("--null", required=True)
    p.add_argument("--n-list", type=_int_list, required=True)
    p.add_argument("--m", type=int, default=1000,
                   help="statistics per sample size (minimum 500)")
    p.add_argument("--M", type=int, default=None,
                   help="draws for the expected curve (default: m)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--complex", default="alpha",
                   choices=["alpha", "rips", "cech"])
    _add_seed(p)
    _add_threads(p)
    p.add_argument("--out", required=True, help="output CSV path")

    return parser


def _emit(text: str, out_path) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(out_path, text)


def _check_alpha(alpha) -> None:
    if alpha is not None and not 0.0 < alpha < 1.0:
        raise EccGofError(f"alpha must lie in (0, 1), got {alpha}")


def cmd_ecc(args) -> int:
    cloud = PointCloud.from_csv(args.input)
    if args.transform:
        cloud = apply_transform(parse_transform(args.transform), cloud)
    if args.rescale:
        cloud = rescale_cloud(cloud)
    curve = euler_curve(build_filtration(cloud, complex_type=args.complex,
                                         maxdim=args.maxdim))
    if args.format == "csv":
        _emit(curve.to_csv_text(), args.out)
    else:
        _emit(dump_json(curve.to_json_dict()) + "\n", args.out)
    return 0


def cmd_prepare(args) -> int:
    _check_alpha(args.alpha)
    transform = parse_transform(args.transform) if args.transform else None
    model = prepare_reference(
        parse_spec(args.null), args.n, M=args.M, m=args.m, alpha=args.alpha,
        seed=args.seed, complex_type=args.complex, transform=transform,
        threads=args.threads)
    model.save(args.out)
    _write_manifest(args, ["null", "n", "M", "m", "alpha", "complex",
                           "transform", "seed"], [args.out])
    print(f"model saved to {args.out} (n={model.n}, dim={model.dim}, "
          f"threshold={model.threshold!r})")
    return 0


def cmd_test1(args) -> int:
    _check_alpha(args.alpha)
    model = ReferenceModel.load(args.model)
    sample = PointCloud.from_csv(args.input)
    report = one_sample_test(sample, model, alpha=args.alpha)
    _emit(dump_json(report.to_json_dict()) + "\n", args.out)
    return 2 if (args.exit_status and report.reject) else 0


def cmd_test2(args) -> int:
    _check_alpha(args.alpha)
    x = PointCloud.from_csv(args.x)
    y = PointCloud.from_csv(args.y)
    report = two_sample_test(x, y, n_permutations=args.K, alpha=args.alpha,
                             seed=args.seed, conservative=args.conservative,
                             complex_type=args.complex, threads=args.threads)
    _emit(dump_json(report.to_json_dict()) + "\n", args.out)
    if args.out is not None:
        _write_manifest(args, ["x", "y", "K", "alpha", "complex",
                               "conservative", "seed"], [args.out])
    return 2 if (args.exit_status and report.reject) else 0


def _power_knobs(args) -> dict:
    return dict(M=args.M, m=args.m, complex_type=getattr(args, "complex"),
                n_cal=args.n_cal, n_ref=args.n_ref,
                n_permutations=args.n_permutations, threads=args.threads)


def cmd_power(args) -> int:
    _check_alpha(args.alpha)
    cell = estimate_power(parse_spec(args.null), parse_spec(args.alt),
                          args.n, args.K, alpha=args.alpha,
                          method=args.method, seed=args.seed,
                          **_power_knobs(args))
    atomic_write_text(args.out, cells_to_csv_text([cell]))
    _write_manifest(args, ["null", "alt", "n", "K", "alpha", "method", "M",
                           "m", "complex", "n_cal", "n_ref",
                           "n_permutations", "seed"], [args.out])
    print(f"power={cell.power!r} ci=±{cell.ci_halfwidth!r} -> {args.out}")
    return 0


def cmd_matrix(args) -> int:
    _check_alpha(args.alpha)
    specs = (tuple(args.spec) if args.spec
             else tuple(default_specs(args.dim)))
    matrix = power_matrix(specs, args.n, args.K, alpha=args.alpha,
                          methods=args.methods, seed=args.seed,
                          cache=ModelCache(), **_power_knobs(args))
    outputs = [args.out]
    atomic_write_text(args.out, cells_to_csv_text(matrix.all_cells()))
    base = args.out[:-4] if args.out.endswith(".csv") else args.out
    for method in matrix.methods:
        path = f"{base}.matrix.{method}.csv"
        atomic_write_text(path, matrix.matrix_csv_text(method))
        outputs.append(path)
    baseline = next((m for m in ("ks", "ks_multivariate", "ks2")
                     if m in matrix.methods), None)
    topo = next((m for m in ("topotest", "topotest2")
                 if m in matrix.methods), None)
    if topo and baseline:
        path = f"{base}.matrix.diff.csv"
        atomic_write_text(path, matrix.difference_csv_text(topo, baseline))
        outputs.append(path)
    _write_manifest(args, ["spec", "dim", "n", "K", "alpha", "methods", "M",
                           "m", "complex", "n_cal", "n_ref",
                           "n_permutations", "seed"], outputs)
    for method in matrix.methods:
        print(f"average power ({method}): {matrix.average_power(method)!r}")
    return 0


def cmd_power_vs_n(args) -> int:
    _check_alpha(args.alpha)
    cells = power_vs_n(parse_spec(args.null), parse_spec(args.alt),
                       args.n_list, args.K, alpha=args.alpha,
                       methods=args.methods, seed=args.seed,
                       **_power_knobs(args))
    atomic_write_text(args.out, cells_to_csv_text(cells))
    _write_manifest(args, ["null", "alt", "n_list", "K", "alpha", "methods",
                           "M", "m", "complex", "n_cal", "n_ref",
                           "n_permutations", "seed"], [args.out])
    print(f"{len(cells)} power cells -> {args.out}")
    return 0


def cmd_nulldist(args) -> int:
    _check_alpha(args.alpha)
    results = null_statistic_distribution(
        parse_spec(args.null), args.n_list, args.m, seed=args.seed,
        M=args.M, alpha=args.alpha, complex_type=args.complex,
        threads=args.threads)
    atomic_write_text(args.out, nulldist_to_csv_text(results))
    _write_manifest(args, ["null", "n_list", "m", "M", "alpha", "complex",
                           "seed"], [args.out])
    print(f"{sum(len(d) for _, d in results)} statistics -> {args.out}")
    return 0


_COMMANDS = {
    "ecc": cmd_ecc,
    "prepare": cmd_prepare,
    "test1": cmd_test1,
    "test2": cmd_test2,
    "power": cmd_power,
    "matrix": cmd_matrix,
    "power-vs-n": cmd_power_vs_n,
    "nulldist": cmd_nulldist,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit:
        raise
    except EccGofError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: FileNotFound: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
