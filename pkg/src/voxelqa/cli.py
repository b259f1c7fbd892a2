"""Command-line entry points: synth, ingest, run, report, render, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


def _cmd_synth(args):
    from .dataset import materialize_synthetic_dataset

    entries = materialize_synthetic_dataset(
        args.out,
        n_cases=args.cases,
        dims=tuple(args.dims),
        spacing_mm=tuple(args.spacing),
        member_count=args.members,
        noise_sigma=args.noise,
        bernoulli_labels=args.bernoulli_labels,
        seed=args.seed,
    )
    print(f"wrote {len(entries)} synthetic cases to {args.out}")


def _cmd_ingest(args):
    from .dataset import validate_root

    problems = validate_root(args.root)
    if problems:
        for p in problems:
            print(f"PROBLEM: {p}")
        sys.exit(1)
    print(f"{args.root}: manifest and volumes validate cleanly")


def _cmd_run(args):
    from .pipeline import RunConfig, run_pipeline, standard_method_grid

    if args.config:
        cfg = RunConfig.from_file(args.config)
        if args.out:
            cfg.output_dir = args.out
        if args.threads:
            cfg.threads = args.threads
    else:
        cfg = RunConfig(
            data_root=args.root,
            output_dir=args.out,
            methods=standard_method_grid(),
            global_seed=args.seed,
            threads=args.threads or 1,
            cache_entropy=args.cache_entropy,
        )
    out = run_pipeline(cfg)
    print(f"report bundle written to {out}")


def _cmd_report(args):
    bundle = Path(args.bundle)
    print((bundle / "summary.csv").read_text())
    for stats_file in sorted((bundle / "stats").glob("*.json")):
        payload = json.loads(stats_file.read_text())
        print(
            f"{stats_file.stem}: friedman p={payload['friedman_p']:.4g} "
            f"best={payload['best_method']}"
        )


def _cmd_render(args):
    from .service import Bundle
    from .overlay import render_overlay

    bundle = Bundle(args.bundle, args.root)
    unc, gt, pred, ct = bundle.volumes(args.case, args.method)
    img = render_overlay(
        unc, args.budget, args.axis, args.index, ct=ct, gt=gt, pred=pred,
        layers=tuple(args.layers.split(",")),
    )
    img.save(args.out)
    print(f"wrote {args.out}")


def _cmd_serve(args):
    from .service import serve

    serve(args.bundle, args.root, port=args.port, host=args.host)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voxelqa")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="materialize a synthetic phantom data root")
    p.add_argument("out")
    p.add_argument("--cases", type=int, default=2)
    p.add_argument("--dims", type=int, nargs=3, default=[20, 28, 28])
    p.add_argument("--spacing", type=float, nargs=3, default=[5.0, 1.171875, 1.171875])
    p.add_argument("--members", type=int, default=5)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--bernoulli-labels", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="validate a data root against its manifest")
    p.add_argument("root")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("run", help="run the full evaluation pipeline")
    p.add_argument("--root", help="data root (used when no --config)")
    p.add_argument("--config", help="JSON run config file")
    p.add_argument("--out", help="output bundle directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--cache-entropy", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="print the summary table of a bundle")
    p.add_argument("bundle")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("render", help="render one overlay slice to a PNG")
    p.add_argument("bundle")
    p.add_argument("--root", default=None)
    p.add_argument("--case", required=True)
    p.add_argument("--method", required=True)
    p.add_argument("--axis", default="z", choices=["z", "y", "x"])
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--budget", type=float, default=1.0)
    p.add_argument("--layers", default="gt,pred,unc")
    p.add_argument("--out", default="overlay.png")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("serve", help="serve the review HTTP API")
    p.add_argument("bundle")
    p.add_argument("--root", default=None)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
