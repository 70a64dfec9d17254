"""Command-line front end: ``qrsearch {sample,audit,bench,bo}``.

Every file written starts with a ``# config: {...}`` line (or a ``config``
field for JSON) holding the fully resolved settings, seed included. Exit
codes: 0 success, 2 usage or validation error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from qrsearch.errors import ValidationError

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [v for v in text.replace(",", " ").split() if v]


def _write(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _config_line(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True) + "\n"


# -- sample ---------------------------------------------------------------------


def cmd_sample(args) -> int:
    from qrsearch.sampler import SamplerSpec, generate
    from qrsearch.space import ParamSpace, map_point, sampler_for_space

    extra = dict(mirror3d=args.mirror3d, candidate_count=args.candidates,
                 random_start=args.random_start, skip_origin=not args.keep_origin)
    space = None
    if args.space:
        space = ParamSpace.load(args.space)
        if args.dim is not None and args.dim != space.dimension:
            raise ValidationError(f"--dim {args.dim} disagrees with the space ({space.dimension})")
        spec = sampler_for_space(space, args.alg, seed=args.seed, **extra)
        if args.bases:
            spec = spec.replace(bases=tuple(args.bases))
    else:
        if args.dim is None:
            raise ValidationError("--dim is required without --space")
        spec = SamplerSpec(args.alg, args.dim, seed=args.seed,
                           bases=tuple(args.bases) if args.bases else None, **extra)
    if args.n < 0:
        raise ValidationError("--n must be >= 0")
    points = generate(spec, args.n)
    if space is not None and spec.n_bases != space.dimension:
        order = np.argsort(space.ranks)
        reordered = np.empty_like(points)
        reordered[:, order] = points
        points = reordered
    config = {"command": "sample", "n": args.n, "sampler": spec.to_dict()}
    if space is not None:
        config["space"] = space.to_dict()

    if args.format == "json":
        body = {"config": config, "points": points.tolist()}
        if space is not None:
            body["configurations"] = [map_point(space, p) for p in points]
        text = json.dumps(body, indent=1) + "\n"
    else:
        buf = io.StringIO()
        buf.write(_config_line(config))
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(spec.dimension)])
        for p in points:
            w.writerow([repr(float(v)) for v in p])
        if space is not None:
            buf.write("# mapped\n")
            w.writerow(space.names)
            for p in points:
                w.writerow(list(map_point(space, p).values()))
        text = buf.getvalue()
    _write(text, args.out)
    if args.figures:
        from qrsearch.plotting import plot_points

        plot_points(points, Path(args.figures) / "points.png", title=spec.algorithm.value)
    return EXIT_OK


# -- audit ----------------------------------------------------------------------


def read_points(path) -> np.ndarray:
    """Load a point set from CSV (``#`` comments, optional header) or JSON.

    Stops at a ``# mapped`` marker so files written by ``sample --space``
    can be audited directly.
    """
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
            pts = np.asarray(data["points"], dtype=float)
        except (ValueError, KeyError, TypeError) as exc:
            raise ValidationError(f"{path}: malformed JSON point set ({exc})") from None
        if pts.size == 0:
            raise ValidationError(f"{path}: no points")
        return _check_unit(np.atleast_2d(pts), path)
    rows: list[list[float]] = []
    width = None
    seen_header = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("# mapped"):
            break
        if not stripped or stripped.startswith("#"):
            continue
        cells = [c.strip() for c in stripped.split(",")]
        try:
            values = [float(c) for c in cells]
        except ValueError:
            if not rows and not seen_header:
                seen_header = True
                width = len(cells)
                continue
            raise ValidationError(f"{path}: line {lineno}: non-numeric value in {stripped!r}") \
                from None
        if width is None:
            width = len(values)
        if len(values) != width:
            raise ValidationError(
                f"{path}: line {lineno}: expected {width} values, found {len(values)}")
        if not all(0.0 <= v <= 1.0 for v in values):
            raise ValidationError(f"{path}: line {lineno}: coordinates must lie in [0, 1]")
        rows.append(values)
    if not rows:
        raise ValidationError(f"{path}: no points")
    return np.asarray(rows, dtype=float)


def _check_unit(pts: np.ndarray, path) -> np.ndarray:
    bad = np.flatnonzero(~np.all((pts >= 0) & (pts <= 1), axis=1))
    if bad.size:
        raise ValidationError(f"{path}: point {bad[0]} lies outside [0, 1]^d")
    return pts


def cmd_audit(args) -> int:
    from qrsearch.quality import spread_report

    points = read_points(args.points)
    report = spread_report(points, seed=args.seed, metric=args.metric, probes=args.probes,
                           samples=args.samples, trials=args.trials)
    config = {"command": "audit", "input": str(args.points), "seed": args.seed,
              "metric": args.metric, "probes": args.probes, "samples": args.samples,
              "trials": args.trials}
    _write(json.dumps({"config": config, "report": report.to_dict()}, indent=1) + "\n",
           args.out)
    if args.figures:
        from qrsearch.plotting import plot_points

        plot_points(points, Path(args.figures) / "audit_points.png", title=Path(args.points).name)
    return EXIT_OK


# -- bench ----------------------------------------------------------------------


def cmd_bench(args) -> int:
    from qrsearch.harness import CampaignConfig, campaign

    try:
        data = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{args.config}: invalid JSON ({exc})") from None
    if args.seed is not None:
        data["seed"] = args.seed
    cfg = CampaignConfig.from_dict(data)
    report = campaign(cfg, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "runs.csv").write_text(report.records_csv())
    (out / "stats.csv").write_text(report.stats_csv())
    (out / "stats.json").write_text(json.dumps(report.summary(), indent=1, sort_keys=True) + "\n")
    if args.figures:
        from qrsearch.plotting import plot_bench

        plot_bench(report, args.figures)
    print(f"{len(report.records)} runs, {len(report.stats)} stats rows -> {out}")
    return EXIT_OK


# -- bo ---------------------------------------------------------------------------


def cmd_bo(args) -> int:
    from qrsearch.bo import bo_compare

    table = bo_compare(functions=args.functions, strategies=args.strategies,
                       batch_counts=args.t, runs=args.runs, dimension=args.dim,
                       batch_size=args.batch_size, seed=args.seed, kappa=args.kappa,
                       pool_size=args.pool_size, threads=args.threads)
    _write(table.to_csv(), args.out)
    if args.json:
        _write(json.dumps(table.to_dict(), indent=1, sort_keys=True) + "\n", args.json)
    if args.figures:
        from qrsearch.plotting import plot_ratios

        plot_ratios(table, args.figures)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    from qrsearch.bo import INIT_STRATEGIES
    from qrsearch.objectives import BO_SUITE
    from qrsearch.sampler import Algorithm

    parser = argparse.ArgumentParser(prog="qrsearch",
                                     description="Quasi-random hyperparameter search toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="generate a point set")
    p.add_argument("--alg", required=True, help=", ".join(a.value for a in Algorithm))
    p.add_argument("--dim", type=int)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bases", type=_int_list, help="comma-separated coprime bases")
    p.add_argument("--space", help="JSON space file; also writes mapped configurations")
    p.add_argument("--mirror3d", action="store_true")
    p.add_argument("--random-start", action="store_true")
    p.add_argument("--keep-origin", action="store_true", help="keep the Sobol origin point")
    p.add_argument("--candidates", type=int, default=11, help="naive-doe candidate count")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--figures", help="directory for a PNG scatter of the first two axes")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("audit", help="spread metrics of a point-set file")
    p.add_argument("points")
    p.add_argument("--metric", choices=("euclidean", "torus"), default="euclidean")
    p.add_argument("--probes", type=int, default=4096)
    p.add_argument("--samples", type=int, default=8192)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--figures")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("bench", help="run a one-shot benchmark campaign")
    p.add_argument("--config", required=True, help="campaign JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--figures")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("bo", help="compare first-batch strategies for batch BO")
    p.add_argument("--functions", type=_str_list, default=list(BO_SUITE))
    p.add_argument("--strategies", type=_str_list, default=list(INIT_STRATEGIES))
    p.add_argument("--t", type=_int_list, default=[1, 3, 5], help="batch counts")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--dim", type=int, default=12)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--kappa", type=float, default=2.0)
    p.add_argument("--pool-size", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="ratio CSV (default stdout)")
    p.add_argument("--json", help="also write mean losses and ratios as JSON")
    p.add_argument("--figures")
    p.set_defaults(func=cmd_bo)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
