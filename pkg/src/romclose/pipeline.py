"""Offline and online stages, wired from a :class:`PipelineConfig`."""

import logging
from dataclasses import dataclass

import numpy as np

from .closure import (UnresolvedInterpolant, extract_closure_samples, fit_closure,
                      fit_toy_closure, integrate_d2vms, integrate_irom)
from .config import PipelineConfig, ToySection
from .diagnostics import coefficient_error_series, compare, field_error_series
from .errors import ConfigInvalid
from .fom import FomConfig, Grid1D, ToySystem, default_toy, solve_burgers, solve_toy
from .galerkin import RomOperators, assemble_operators, integrate_grom
from .pod import compute_pod, project, project_series
from .timestepping import Variant, integrate_rom

log = logging.getLogger(__name__)

VARIANTS = ("grom", "irom", "d2vms")


def grid_from(cfg):
    return Grid1D(cfg.fom.n_points, cfg.fom.domain_length, cfg.fom.boundary)


def fom_config_from(cfg):
    f = cfg.fom
    return FomConfig(f.viscosity, f.dt, f.n_steps, f.snapshot_stride,
                     f.initial_condition.kind, dict(f.initial_condition.params))


def run_fom(cfg):
    snaps = solve_burgers(fom_config_from(cfg), grid_from(cfg))
    log.info("FOM: %d snapshots on %d nodes", snaps.M, snaps.grid.n_points)
    return snaps


def run_pod(cfg, snaps):
    basis = compute_pod(snaps, cfg.pod.R, centering=cfg.pod.centering)
    if basis.R < cfg.pod.R:
        log.warning("POD rank deflated from %d to %d", cfg.pod.R, basis.R)
    return basis


@dataclass(frozen=True)
class Trained:
    ops_R: RomOperators
    ops_r: RomOperators
    samples: object
    closure: object


def run_train(cfg, basis, snaps):
    r = cfg.rom.r
    ops_R = assemble_operators(basis, basis.R, cfg.fom.viscosity)
    ops_r = ops_R.truncate(r)
    samples = extract_closure_samples(basis, snaps, r, cfg.fom.viscosity, ops_R=ops_R)
    closure = fit_closure(samples, cfg.closure.ridge_lambda)
    log.info("closure fit: lambda=%.3g residual_rel=%.3g", closure.ridge_lambda,
             closure.residual_rel)
    return Trained(ops_R, ops_r, samples, closure)


def _check_horizon(cfg, snaps, variant):
    horizon = cfg.rom.dt * cfg.rom.n_steps
    t_end = snaps.times[-1]
    if variant == "irom" and horizon > t_end * (1 + 1e-12):
        raise ConfigInvalid(f"I-ROM horizon {horizon} exceeds snapshot range {t_end}",
                            path="rom.n_steps")


def run_simulate(cfg, variant, basis, snaps, ops_R, closure=None):
    """Integrate one ROM variant from the projected first snapshot."""
    variant = variant.lower()
    if variant not in VARIANTS:
        raise ConfigInvalid(f"unknown variant {variant!r}", path="--variant")
    _check_horizon(cfg, snaps, variant)
    r = cfg.rom.r
    a0 = project(basis, snaps.fields[:, 0], r)
    t0 = float(snaps.times[0])
    dt, n = cfg.rom.dt, cfg.rom.n_steps
    if variant == "grom":
        return integrate_grom(ops_R.truncate(r), a0, dt, n, t0)
    if variant == "d2vms":
        return integrate_d2vms(ops_R.truncate(r), closure, a0, dt, n, t0)
    series = project_series(basis, snaps, ops_R.r)
    unresolved = UnresolvedInterpolant(series.times, series.coeffs[:, r:])
    return integrate_irom(ops_R, r, unresolved, a0, dt, n, t0)


def report_metadata(cfg, closure=None):
    meta = {"r": cfg.rom.r, "R": cfg.pod.R, "viscosity": cfg.fom.viscosity,
            "dt": cfg.rom.dt, "n_steps": cfg.rom.n_steps,
            "config_digest": cfg.digest()}
    if closure is not None:
        meta["ridge_lambda"] = closure.ridge_lambda
    return meta


def run_report(cfg, trajectories, snaps, basis, against_projection=False, closure=None):
    entries = {}
    for traj in trajectories:
        errs = field_error_series(basis, traj, snaps, against_projection=against_projection)
        entries[traj.label.value] = (snaps.times, errs)
    meta = report_metadata(cfg, closure)
    meta["against_projection"] = bool(against_projection)
    return compare(entries, meta)


@dataclass(frozen=True)
class BenchmarkRun:
    snapshots: object
    basis: object
    trained: Trained
    trajectories: dict
    report: object


def run_benchmark(cfg=None, variants=VARIANTS):
    """Every Burgers stage in memory: FOM, POD, training, ROMs, report."""
    cfg = cfg or PipelineConfig()
    snaps = run_fom(cfg)
    basis = run_pod(cfg, snaps)
    trained = run_train(cfg, basis, snaps)
    trajs = {v: run_simulate(cfg, v, basis, snaps, trained.ops_R, trained.closure)
             for v in variants}
    report = run_report(cfg, trajs.values(), snaps, basis, closure=trained.closure)
    return BenchmarkRun(snaps, basis, trained, trajs, report)


def toy_system_from(cfg):
    toy = cfg.toy
    base = default_toy()
    if toy is None:
        return base
    try:
        return ToySystem(base.A3 if toy.A3 is None else np.array(toy.A3),
                         base.B3 if toy.B3 is None else np.array(toy.B3),
                         base.a0 if toy.a0 is None else np.array(toy.a0))
    except ValueError as exc:
        raise ConfigInvalid(str(exc), path="toy") from None


@dataclass(frozen=True)
class ToyRun:
    system: ToySystem
    reference: object
    truncated: object
    ideal: object
    closed: object
    closure: object
    report: object


def run_toy(cfg=None, keep=2, report_points=1000):
    """Three-mode reference, its 2-mode truncation, the 2-mode ROM driven by the
    reference third mode, and the 2-mode ROM with a fitted closure."""
    cfg = cfg or PipelineConfig()
    toy = cfg.toy or ToySection()
    dt, n_steps, lam = toy.dt, toy.n_steps, toy.ridge_lambda
    system = toy_system_from(cfg)

    reference = solve_toy(system, dt, n_steps)
    full_ops = RomOperators(system.A3, system.B3, 0.0)
    trunc_ops = full_ops.truncate(keep)
    a0 = system.a0[:keep]
    truncated = integrate_grom(trunc_ops, a0, dt, n_steps)
    unresolved = UnresolvedInterpolant(reference.times, reference.coeffs[:, keep:])
    ideal = integrate_irom(full_ops, keep, unresolved, a0, dt, n_steps)
    closure = fit_toy_closure(reference, system, keep, lam)
    closed = integrate_d2vms(trunc_ops, closure, a0, dt, n_steps)

    stride = max(1, n_steps // report_points)
    times = reference.times[::stride]
    ref = reference.coeffs[::stride, :keep]
    entries = {t.label.value: (times, coefficient_error_series(t, times, ref))
               for t in (truncated, ideal, closed)}
    meta = {"r": keep, "R": 3, "viscosity": 0.0, "dt": dt, "n_steps": n_steps,
            "ridge_lambda": closure.ridge_lambda, "config_digest": cfg.digest(),
            "problem": "toy"}
    report = compare(entries, meta)
    return ToyRun(system, reference, truncated, ideal, closed, closure, report)


__all__ = ["VARIANTS", "run_fom", "run_pod", "run_train", "run_simulate", "run_report",
           "run_benchmark", "run_toy", "Trained", "BenchmarkRun", "ToyRun", "integrate_rom",
           "Variant"]
