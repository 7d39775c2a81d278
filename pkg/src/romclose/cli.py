"""``romclose`` command line.

Stages share one config file and one output directory::

    romclose fom      --config cfg.json   # snapshots.{json,bin}
    romclose pod      --config cfg.json   # basis.{json,bin}
    romclose train    --config cfg.json   # ops_R, ops_r, closure
    romclose simulate --config cfg.json [--variant grom|irom|d2vms]
    romclose report   --config cfg.json [--format csv|json]
    romclose toy      --config cfg.json

Exit codes: 0 success, 2 invalid config, 3 missing upstream artifact,
4 numerical failure, 5 I/O failure.
"""

import argparse
import logging
import os
import sys
import warnings
from pathlib import Path

from . import io, pipeline
from .config import load_config
from .diagnostics import emit
from .errors import IllConditionedWarning, RomCloseError, UpstreamMissing

log = logging.getLogger("romclose")

_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO,
           "debug": logging.DEBUG}


def _setup_logging():
    level = _LEVELS.get(os.environ.get("ROMCLOSE_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    logging.captureWarnings(True)


def _out_dir(args, cfg):
    return Path(args.out or cfg.output.directory)


def _provenance(cfg, stage):
    return {"config_digest": cfg.digest(), "stage": stage}


def _require(*stems):
    for stem in stems:
        if not io.artifact_exists(stem):
            raise UpstreamMissing(f"required artifact {stem}.json/.bin is missing")


def cmd_fom(cfg, out, args):
    snaps = pipeline.run_fom(cfg)
    io.save_snapshots(out / "snapshots", snaps, _provenance(cfg, "fom"))


def cmd_pod(cfg, out, args):
    _require(out / "snapshots")
    snaps = io.load_snapshots(out / "snapshots")
    basis = pipeline.run_pod(cfg, snaps)
    io.save_basis(out / "basis", basis, _provenance(cfg, "pod"))


def cmd_train(cfg, out, args):
    _require(out / "snapshots", out / "basis")
    snaps = io.load_snapshots(out / "snapshots")
    basis = io.load_basis(out / "basis")
    trained = pipeline.run_train(cfg, basis, snaps)
    prov = _provenance(cfg, "train")
    io.save_operators(out / "ops_R", trained.ops_R, prov)
    io.save_operators(out / "ops_r", trained.ops_r, prov)
    io.save_closure(out / "closure", trained.closure, prov)


def cmd_simulate(cfg, out, args):
    variants = [args.variant] if args.variant else list(pipeline.VARIANTS)
    needed = [out / "snapshots", out / "basis", out / "ops_R"]
    if "d2vms" in variants:
        needed.append(out / "closure")
    _require(*needed)
    snaps = io.load_snapshots(out / "snapshots")
    basis = io.load_basis(out / "basis")
    ops_R = io.load_operators(out / "ops_R")
    closure = io.load_closure(out / "closure") if "d2vms" in variants else None
    trajs = {v: pipeline.run_simulate(cfg, v, basis, snaps, ops_R, closure) for v in variants}
    for v, traj in trajs.items():
        io.save_trajectory(out / f"traj_{v}", traj, _provenance(cfg, f"simulate:{v}"))


def cmd_report(cfg, out, args):
    _require(out / "snapshots", out / "basis")
    present = [v for v in pipeline.VARIANTS if io.artifact_exists(out / f"traj_{v}")]
    if not present:
        raise UpstreamMissing(f"no trajectories (traj_*.json) found in {out}")
    snaps = io.load_snapshots(out / "snapshots")
    basis = io.load_basis(out / "basis")
    closure = io.load_closure(out / "closure") if io.artifact_exists(out / "closure") else None
    trajs = [io.load_trajectory(out / f"traj_{v}") for v in present]
    report = pipeline.run_report(cfg, trajs, snaps, basis,
                                 against_projection=args.against_projection, closure=closure)
    for fmt in _formats(args, cfg):
        emit(report, fmt, out / f"report.{fmt}")
    _summarize(report)


def cmd_toy(cfg, out, args):
    run = pipeline.run_toy(cfg)
    out.mkdir(parents=True, exist_ok=True)
    for fmt in _formats(args, cfg):
        emit(run.report, fmt, out / f"toy_report.{fmt}")
    _summarize(run.report)


def _formats(args, cfg):
    return [args.format] if args.format else list(cfg.output.formats)


def _summarize(report):
    for label, avg in report.time_average.items():
        print(f"{label:6s} time-averaged error {avg:.6e}")
    for name, value in report.ratios.items():
        print(f"{name:12s} {value:.4f}")


COMMANDS = {"fom": cmd_fom, "pod": cmd_pod, "train": cmd_train, "simulate": cmd_simulate,
            "report": cmd_report, "toy": cmd_toy}


def build_parser():
    parser = argparse.ArgumentParser(prog="romclose",
                                     description="POD Galerkin ROMs with data-driven closure")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="pipeline config (JSON)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field, e.g. rom.r=4 (repeatable)")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        if name == "simulate":
            p.add_argument("--variant", choices=pipeline.VARIANTS)
        if name in ("report", "toy"):
            p.add_argument("--format", choices=("csv", "json"))
        if name == "report":
            p.add_argument("--against-projection", action="store_true",
                           help="measure error against projected snapshots")
    return parser


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        out = _out_dir(args, cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("always", IllConditionedWarning)
            COMMANDS[args.command](cfg, out, args)
    except RomCloseError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
