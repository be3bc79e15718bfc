"""Command-line entry point.

Subcommands: ``constants`` (closed-form constant tables), ``cover`` (one
threshold estimate for a cloud file), ``weak`` / ``interior`` / ``slln``
(experiment runs from a JSON config), ``selftest`` (fast invariant sweep).
Exit codes: 0 success, 1 usage or error, 2 configuration refused.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import geometry as geo
from .coverage import coverage_threshold
from .grids import build_grid
from .harness import (ConfigError, ConfigRefused, ExperimentConfig, RunMode,
                      run_experiment)
from .limits import (boundary_coefficient, interior_coefficient,
                     unit_ball_volume)
from .sampling import load_cloud_csv


def _parse_range(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(v) for v in text.split(",") if v]


def _parse_spec(token: str) -> geo.ManifoldSpec:
    tok = token.strip().lower()
    if tok.startswith("{"):
        return geo.ManifoldSpec.from_json(json.loads(token))
    if tok in ("square", "unit_square"):
        return geo.unit_square(2)
    if tok.startswith("square:"):
        return geo.unit_square(int(tok.split(":", 1)[1]))
    if tok in ("disk", "unit_disk"):
        return geo.unit_disk()
    if tok in ("ball", "solid_ball"):
        return geo.solid_ball()
    if tok in ("sphere", "unit_sphere"):
        return geo.unit_sphere()
    if tok.startswith("cap:"):
        return geo.spherical_cap(float(tok.split(":", 1)[1]))
    raise ConfigError(f"unknown spec {token!r}; try disk, square, square:3, "
                      "ball, sphere, cap:ALPHA or a JSON object")


def _cmd_constants(args) -> int:
    dims = _parse_range(args.d)
    ks = _parse_range(args.k)
    table = {
        "theta_d": {str(d): unit_ball_volume(d) for d in dims},
        "c_d": {str(d): interior_coefficient(d) for d in dims if d >= 1},
        "c_dk": {f"{d},{k}": boundary_coefficient(d, k)
                 for d in dims if d >= 2 for k in ks},
    }
    text = json.dumps(table, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _cmd_cover(args) -> int:
    spec = _parse_spec(args.spec)
    region = (geo.RegionSpec.from_json(json.loads(args.region))
              if args.region else geo.REGION_ALL)
    cloud = load_cloud_csv(args.cloud, spec)
    metric = geo.Metric(args.metric)
    grid = build_grid(spec, region, args.h)
    est = coverage_threshold(cloud, grid, args.k, metric,
                             refine_to=args.refine_to)
    print(json.dumps(est.to_json(), indent=2, sort_keys=True))
    return 0


def _load_config(args, mode: RunMode) -> ExperimentConfig:
    with open(args.config) as fh:
        obj = json.load(fh)
    obj["mode"] = mode.value
    if args.seed is not None:
        obj["base_seed"] = args.seed
    if args.reps is not None:
        obj["replications"] = args.reps
    if args.sizes is not None:
        obj["sizes"] = [int(s) for s in args.sizes.split(",") if s]
    if args.metric is not None:
        obj["metric"] = args.metric
    return ExperimentConfig.from_json(obj)


def _cmd_run(args, mode: RunMode) -> int:
    config = _load_config(args, mode)
    result = run_experiment(config)
    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    result.write_rows_csv(os.path.join(outdir, "rows.csv"))
    result.write_summary_json(os.path.join(outdir, "summary.json"))
    result.write_meta_json(os.path.join(outdir, "run_meta.json"))
    print(f"wrote rows.csv, summary.json, run_meta.json to {outdir} "
          f"({result.wall_clock:.1f}s)")
    return 0


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest
    return run_selftest(fast=args.fast)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="covlab",
                                description="coverage-threshold laboratory")
    sub = p.add_subparsers(dest="command")

    c = sub.add_parser("constants", help="print closed-form constant tables")
    c.add_argument("--d", default="2..5", help="dimension range, e.g. 2..5")
    c.add_argument("--k", default="1..4", help="multiplicity range, e.g. 1..4")
    c.add_argument("--out", default=None)

    cv = sub.add_parser("cover", help="threshold estimate for a cloud CSV")
    cv.add_argument("--cloud", required=True)
    cv.add_argument("--spec", required=True)
    cv.add_argument("--region", default=None, help="region JSON")
    cv.add_argument("--k", type=int, default=1)
    cv.add_argument("--h", type=float, required=True)
    cv.add_argument("--metric", choices=["geodesic", "euclidean"],
                    default="geodesic")
    cv.add_argument("--refine-to", type=float, default=None, dest="refine_to")

    for name, mode in (("weak", RunMode.WEAK_BOUNDARY),
                       ("interior", RunMode.WEAK_INTERIOR),
                       ("slln", RunMode.SLLN_TRACE)):
        r = sub.add_parser(name, help=f"run a {mode.value} experiment")
        r.add_argument("--config", required=True)
        r.add_argument("--out", default=None)
        r.add_argument("--seed", type=int, default=None)
        r.add_argument("--reps", type=int, default=None)
        r.add_argument("--sizes", default=None, help="comma separated")
        r.add_argument("--metric", choices=["geodesic", "euclidean"],
                       default=None)
        r.set_defaults(mode=mode)

    st = sub.add_parser("selftest", help="run the invariant suites")
    st.add_argument("--fast", action="store_true")
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad usage; report 1
        return 0 if exc.code in (0, None) else 1
    if args.command is None:
        parser.print_usage()
        return 1
    try:
        if args.command == "constants":
            return _cmd_constants(args)
        if args.command == "cover":
            return _cmd_cover(args)
        if args.command in ("weak", "interior", "slln"):
            return _cmd_run(args, args.mode)
        if args.command == "selftest":
            return _cmd_selftest(args)
        parser.print_usage()
        return 1
    except ConfigRefused as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
