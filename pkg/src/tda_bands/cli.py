"""Command-line front end: ``tda-bands <command> [flags]``.

Exit status is 0 on success, 1 on invalid input or usage, 2 on I/O failure.
Every output embeds the tool name, version, command and resolved
configuration; the thread count is deliberately left out so outputs do not
depend on it.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .diagram import parse_diagram, read_pair_rows, write_diagram
from .exceptions import ValidationError
from .landscape import Grid, landscape_on_grid, read_summary, write_summary
from .pipeline import GENERATORS, CoverageConfig, SubsampleConfig, coverage_experiment, subsample_summaries
from .rips import build_rips, persistence, read_point_cloud
from .silhouette import check_power, silhouette_on_grid
from .stats import BAND_KINDS, BootstrapConfig, Sample, band_to_csv, band_to_dict, confidence_band, mean_summary

TOOL = "tda-bands"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _power(text):
    try:
        return check_power(text)
    except (ValidationError, ValueError):
        raise argparse.ArgumentTypeError(f"invalid power {text!r}") from None


# -- metadata ----------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(_fmt(x) for x in v)
    return str(v)


def _json_safe(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    return v


def _comments(command: str, config: dict) -> list[str]:
    lines = [f"tool={TOOL}", f"version={__version__}", f"command={command}"]
    lines += [f"config.{k}={_fmt(v)}" for k, v in config.items()]
    return lines


def _header(command: str, config: dict) -> dict:
    return {"tool": TOOL, "version": __version__, "command": command, "config": _json_safe(config)}


# -- I/O ---------------------------------------------------------------------


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _write(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_text(text)


def _summary_paths(inputs: list[str]) -> list[str]:
    paths = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            found = sorted(str(f) for f in p.glob("*.csv"))
            if not found:
                raise ValidationError(f"directory {item} holds no .csv files")
            paths.extend(found)
        elif p.exists() or item == "-":
            paths.append(item)
        else:
            raise FileNotFoundError(f"no such file or directory: {item}")
    return paths


def _read_sample(inputs: list[str]) -> tuple[Sample, list[str]]:
    paths = _summary_paths(inputs)
    functions = []
    for path in paths:
        try:
            functions.append(read_summary(_read(path)))
        except ValidationError as exc:
            raise ValidationError(f"{path}: {exc}") from exc
    return Sample(tuple(functions)), paths


# -- commands ----------------------------------------------------------------


def _cmd_rips(args) -> str:
    points = read_point_cloud(_read(args.input))
    t_bound = float(args.max_scale) if args.t_bound is None else args.t_bound
    cx = build_rips(points, args.max_scale, max_dim=2 if args.dim == 1 else 1)
    essential = "truncate" if args.truncate_essential else "reject"
    diagram = persistence(cx, t_bound, essential=essential, dims=(args.dim,))[args.dim]
    config = {
        "input": args.input,
        "n_points": int(points.shape[0]),
        "max_scale": float(args.max_scale),
        "dim": args.dim,
        "t_bound": t_bound,
        "truncate_essential": args.truncate_essential,
    }
    return write_diagram(diagram, _comments("rips", config))


def _resolve_diagram_bound(text: str, args) -> float:
    if args.t_bound is not None:
        return args.t_bound
    deaths = [d for _, dim, _, d in read_pair_rows(text) if dim == args.dim and math.isfinite(d)]
    if not deaths or max(deaths) <= 0:
        raise ValidationError("cannot infer --t-bound from the input; pass it explicitly")
    return max(deaths)


def _cmd_summary(args, kind: str) -> str:
    text = _read(args.input)
    t_bound = _resolve_diagram_bound(text, args)
    diagram = parse_diagram(text, t_bound, args.dim, args.truncate_essential)
    grid = Grid(args.t_min, t_bound if args.t_max is None else args.t_max, args.grid)
    config = {"input": args.input, "dim": args.dim}
    if kind == "landscape":
        f = landscape_on_grid(diagram, args.k, grid)
        config["k"] = args.k
    else:
        f = silhouette_on_grid(diagram, args.p, grid)
        config["p"] = args.p
    config.update(
        t_min=grid.t_min, t_max=grid.t_max, grid=grid.resolution, t_bound=t_bound,
        truncate_essential=args.truncate_essential,
    )
    return write_summary(f, _comments(kind, config))


def _cmd_mean(args) -> str:
    sample, paths = _read_sample(args.inputs)
    config = {"inputs": paths, "n": sample.n}
    return write_summary(mean_summary(sample), _comments("mean", config))


def _boot_config(args) -> BootstrapConfig:
    return BootstrapConfig(args.alpha, args.B, args.seed, args.band, args.variance_floor)


def _band_config(args) -> dict:
    return {
        "alpha": args.alpha, "B": args.B, "seed": args.seed, "band": args.band,
        "variance_floor": args.variance_floor, "clamp_zero": args.clamp_zero, "format": args.format,
    }


def _emit_band(res, command, config, args) -> str:
    if args.format == "json":
        out = _header(command, config)
        out.update(band_to_dict(res, clamp_zero=args.clamp_zero))
        return json.dumps(out, indent=1) + "\n"
    return band_to_csv(res, clamp_zero=args.clamp_zero, comments=_comments(command, config))


def _cmd_band(args) -> str:
    cfg = _boot_config(args)
    sample, paths = _read_sample(args.inputs)
    res = confidence_band(sample, cfg, n_jobs=args.threads)
    config = {"inputs": paths, "n": sample.n, "t_bound": sample.t_bound, **_band_config(args)}
    return _emit_band(res, "band", config, args)


def _cmd_subsample(args) -> str:
    boot = _boot_config(args)
    points = read_point_cloud(_read(args.input))
    cfg = SubsampleConfig(
        m=args.m, n=args.n, max_scale=args.max_scale, seed=args.seed, dim=args.dim,
        summary=args.summary, k=args.k, p=args.p, t_min=args.t_min, t_max=args.t_max,
        resolution=args.grid, t_bound=args.t_bound, with_replacement=args.with_replacement,
        essential="truncate" if args.truncate_essential else "reject",
    )
    grid = cfg.grid
    sample = subsample_summaries(points, cfg, n_jobs=args.threads)
    res = confidence_band(sample, boot, n_jobs=args.threads)
    config = {
        "input": args.input, "n_points": int(points.shape[0]), "m": cfg.m, "n": cfg.n,
        "max_scale": float(cfg.max_scale), "dim": cfg.dim, "summary": cfg.summary,
        ("k" if cfg.summary == "landscape" else "p"): cfg.k if cfg.summary == "landscape" else check_power(cfg.p),
        "t_min": grid.t_min, "t_max": grid.t_max, "grid": grid.resolution, "t_bound": cfg.bound,
        "with_replacement": cfg.with_replacement, "truncate_essential": args.truncate_essential,
        **_band_config(args),
    }
    return _emit_band(res, "subsample", config, args)


def _cmd_coverage(args) -> str:
    bands = BAND_KINDS if args.band == "both" else (args.band,)
    cfg = CoverageConfig(
        generator=args.generator, n=tuple(args.n), n_bootstrap=args.B, alpha=args.alpha,
        rounds=args.R, mu_draws=args.M, seed=args.seed, bands=bands, summary=args.summary,
        k=args.k, p=args.p, resolution=args.grid, region_fraction=args.region_fraction,
    )
    report = coverage_experiment(cfg, n_jobs=args.threads)
    out = _header("coverage", cfg.to_dict())
    out.update(_json_safe(report.to_dict()))
    return json.dumps(out, indent=1) + "\n"


# -- parser ------------------------------------------------------------------


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--output", "-o", default=None, help="output path (default: stdout)")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads (default: $TDA_BANDS_THREADS or all cores)")

    diagram_in = _Parser(add_help=False)
    diagram_in.add_argument("--input", required=True, help="diagram CSV (dim,birth,death)")
    diagram_in.add_argument("--dim", type=int, default=1, help="homology dimension to read")
    diagram_in.add_argument("--t-bound", type=float, default=None,
                            help="diagram bound T (default: largest finite death)")
    diagram_in.add_argument("--truncate-essential", action="store_true",
                            help="replace infinite deaths by T instead of rejecting them")

    grid = _Parser(add_help=False)
    grid.add_argument("--grid", type=int, default=1000, help="number of grid nodes")
    grid.add_argument("--t-min", type=float, default=0.0)
    grid.add_argument("--t-max", type=float, default=None, help="default: T")

    band = _Parser(add_help=False)
    band.add_argument("--alpha", type=float, default=0.05)
    band.add_argument("--B", type=_positive_int, default=1000, help="bootstrap replicates")
    band.add_argument("--seed", type=int, default=0)
    band.add_argument("--band", choices=BAND_KINDS, default="uniform")
    band.add_argument("--variance-floor", type=float, default=None,
                      help="adaptive band: exclude nodes with sigma_hat at or below this")
    band.add_argument("--clamp-zero", action="store_true", help="display lower band clamped at 0")
    band.add_argument("--format", choices=("json", "csv"), default="json")

    parser = _Parser(prog=TOOL, description="Persistence landscapes, silhouettes and confidence bands.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rips", parents=[common], help="point cloud -> Rips persistence diagram")
    p.add_argument("--input", required=True, help="point cloud CSV")
    p.add_argument("--max-scale", type=float, required=True)
    p.add_argument("--dim", type=int, choices=(0, 1), default=1)
    p.add_argument("--t-bound", type=float, default=None, help="default: --max-scale")
    p.add_argument("--truncate-essential", action="store_true")

    p = sub.add_parser("landscape", parents=[common, diagram_in, grid], help="diagram -> landscape")
    p.add_argument("--k", type=_positive_int, default=1)

    p = sub.add_parser("silhouette", parents=[common, diagram_in, grid], help="diagram -> silhouette")
    p.add_argument("--p", type=_power, default=1.0, help="weight power; 'inf' accepted")

    p = sub.add_parser("mean", parents=[common], help="summary CSVs -> mean summary")
    p.add_argument("inputs", nargs="+", help="summary CSV files or directories")

    p = sub.add_parser("band", parents=[common, band], help="summary CSVs -> confidence band")
    p.add_argument("inputs", nargs="+", help="summary CSV files or directories")

    p = sub.add_parser("subsample", parents=[common, band, grid], help="point cloud -> band via subsampling")
    p.add_argument("--input", required=True, help="point cloud CSV")
    p.add_argument("--m", type=_positive_int, required=True, help="subsample size")
    p.add_argument("--n", type=_positive_int, required=True, help="number of subsamples")
    p.add_argument("--max-scale", type=float, required=True)
    p.add_argument("--dim", type=int, choices=(0, 1), default=1)
    p.add_argument("--summary", choices=("landscape", "silhouette"), default="landscape")
    p.add_argument("--k", type=_positive_int, default=1)
    p.add_argument("--p", type=_power, default=1.0)
    p.add_argument("--t-bound", type=float, default=None, help="default: --max-scale")
    p.add_argument("--with-replacement", action="store_true")
    p.add_argument("--truncate-essential", action="store_true")

    p = sub.add_parser("coverage", parents=[common], help="Monte Carlo coverage of the bands")
    p.add_argument("--generator", choices=sorted(GENERATORS), default="single-pair")
    p.add_argument("--R", type=_positive_int, default=200, help="rounds")
    p.add_argument("--M", type=_positive_int, default=100_000, help="draws used to estimate the mean")
    p.add_argument("--n", type=_positive_int, nargs="+", default=[30], help="sample size(s)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--B", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--band", choices=BAND_KINDS + ("both",), default="both")
    p.add_argument("--summary", choices=("landscape", "silhouette"), default="landscape")
    p.add_argument("--k", type=_positive_int, default=1)
    p.add_argument("--p", type=_power, default=1.0)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--region-fraction", type=float, default=0.5,
                   help="check coverage where sigma exceeds this fraction of its maximum")
    return parser


COMMANDS = {
    "rips": _cmd_rips,
    "landscape": lambda a: _cmd_summary(a, "landscape"),
    "silhouette": lambda a: _cmd_summary(a, "silhouette"),
    "mean": _cmd_mean,
    "band": _cmd_band,
    "subsample": _cmd_subsample,
    "coverage": _cmd_coverage,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    if args.threads is None and os.environ.get("TDA_BANDS_THREADS"):
        try:
            args.threads = _positive_int(os.environ["TDA_BANDS_THREADS"])
        except argparse.ArgumentTypeError as exc:
            print(f"{TOOL}: error: TDA_BANDS_THREADS: {exc}", file=sys.stderr)
            return 1
    try:
        text = COMMANDS[args.command](args)
        _write(text, args.output)
    except ValidationError as exc:
        print(f"{TOOL} {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{TOOL} {args.command}: I/O error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
