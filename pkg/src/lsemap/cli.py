"""Command-line interface.

  lsemap run    batch benchmark against a pre-measured or synthetic grid
  lsemap serve  start the live measurement-session HTTP service
  lsemap synth  generate a synthetic ground-truth grid CSV

`run` outputs are fully determined by config + seeds (no timestamps), so a
rerun with the same inputs is byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__, backend
from . import data as data_mod
from . import metrics as metrics_mod
from .engine import run_batch
from .errors import LsemapError
from .grid import GridDomain
from .runconfig import SCHEMA_VERSION, load_run_spec

LABEL_CHARS = {metrics_mod.LABEL_UPPER: "U", metrics_mod.LABEL_LOWER: "L",
               metrics_mod.LABEL_UNDETERMINED: "C"}


def write_label_grid(domain: GridDomain, labels, path) -> None:
    """Label grid CSV: x_mm,y_mm,label with label in {U, L, C}."""
    points = domain.all_points()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x_mm,y_mm,label\n")
        for (x, y), v in zip(points, labels):
            fh.write(f"{float(x)!r},{float(y)!r},{LABEL_CHARS[int(v)]}\n")


def read_label_grid(path) -> list[str]:
    """Labels in index order from a label grid CSV."""
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "x_mm,y_mm,label":
            raise LsemapError(f"{path}: not a label grid file")
        for line in fh:
            line = line.strip()
            if line:
                labels.append(line.rsplit(",", 1)[1])
    return labels


def cmd_run(args) -> int:
    spec = load_run_spec(args.config)
    overrides = {}
    if args.strategy:
        overrides["strategy"] = args.strategy
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.budget is not None:
        overrides["budget"] = args.budget
    if args.snapshot_steps:
        overrides["snapshot_steps"] = args.snapshot_steps
    if overrides:
        from .runconfig import FlatConfig, build_run_spec
        flat = FlatConfig.load(args.config)
        mapping = flat.to_mapping()
        mapping.update({k: str(v) for k, v in overrides.items()})
        spec = build_run_spec(mapping, origin=str(args.config), lines=flat)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    session = spec.new_session()
    oracle = spec.new_oracle()
    truth = spec.truth.truth_positive(spec.session_config.theta)
    budget = spec.effective_budget()

    trajectory = run_batch(session, oracle, budget, truth=truth)

    rows = [snap.metrics for snap in trajectory if snap.metrics is not None]
    metrics_mod.write_metrics_csv(rows, out_dir / "metrics.csv")

    wanted = set(spec.snapshot_steps)
    written_snapshots = []
    for snap in trajectory:
        if snap.n_measured in wanted:
            wanted.discard(snap.n_measured)
            name = f"labels_step{snap.n_measured:04d}.csv"
            write_label_grid(spec.domain, snap.labels, out_dir / name)
            written_snapshots.append(name)
    write_label_grid(spec.domain, trajectory[-1].labels, out_dir / "labels_final.csv")

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "kernel_backend": backend.backend_name(),
        "config": spec.resolved,
        "budget_used": trajectory[-1].n_measured,
        "final_status": session.status,
        "final_counts": {
            "upper": trajectory[-1].counts[0],
            "lower": trajectory[-1].counts[1],
            "undetermined": trajectory[-1].counts[2],
        },
        "outputs": ["metrics.csv", *written_snapshots, "labels_final.csv"],
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{session.status}: {trajectory[-1].n_measured} measurements, "
          f"counts U/L/C = {trajectory[-1].counts}, outputs in {out_dir}")
    return 0


def cmd_serve(args) -> int:
    from .service import main as serve_main

    serve_main(port=args.port, data_dir=args.data_dir, host=args.host)
    return 0


def cmd_synth(args) -> int:
    domain = GridDomain(origin=(args.origin_x, args.origin_y),
                        spacing=(args.spacing_mm, args.spacing_mm),
                        counts=(args.nx, args.ny))
    params = {}
    for item in args.param or []:
        if "=" not in item:
            raise LsemapError(f"--param expects name=value, got {item!r}")
        name, value = item.split("=", 1)
        params[name] = float(value)
    grid_map = data_mod.synth_map(args.kind, domain, params, seed=args.seed)
    data_mod.write_grid_csv(grid_map, args.out)
    print(f"wrote {domain.n_points} points to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lsemap",
                                     description="Adaptive level-set defect mapping")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="batch benchmark run from a config file")
    run.add_argument("--config", required=True, help="flat key=value config file")
    run.add_argument("--out-dir", required=True)
    run.add_argument("--strategy",
                     choices=["al", "atl", "lss-atl", "random", "non-adaptive"])
    run.add_argument("--seed", type=int)
    run.add_argument("--budget", type=int)
    run.add_argument("--snapshot-steps", dest="snapshot_steps",
                     help="comma-separated measurement counts, e.g. 10,25,75")
    run.set_defaults(func=cmd_run)

    serve = sub.add_parser("serve", help="start the HTTP session service")
    serve.add_argument("--port", type=int,
                       default=int(os.environ.get("LSEMAP_PORT", 8787)))
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--data-dir",
                       default=os.environ.get("LSEMAP_DATA_DIR", "lsemap-sessions"))
    serve.set_defaults(func=cmd_serve)

    synth = sub.add_parser("synth", help="write a synthetic ground-truth grid CSV")
    synth.add_argument("--kind", required=True, choices=list(data_mod.SYNTH_KINDS))
    synth.add_argument("--nx", type=int, required=True)
    synth.add_argument("--ny", type=int, required=True)
    synth.add_argument("--spacing-mm", dest="spacing_mm", type=float, default=2.0)
    synth.add_argument("--origin-x", dest="origin_x", type=float, default=0.0)
    synth.add_argument("--origin-y", dest="origin_y", type=float, default=0.0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--param", action="append",
                       help="synthetic parameter, name=value (repeatable)")
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LsemapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
