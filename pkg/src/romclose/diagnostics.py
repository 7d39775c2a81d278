"""Error metrics of ROM trajectories and the comparison report."""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, IoFailure, MisalignedTimes, TimeOutOfRange
from .pod import project, reconstruct

REPORT_SCHEMA = "romclose-report-v1"
_ORDER = ("GROM", "IROM", "D2VMS")


def _label(v):
    return getattr(v, "value", v)


def _coeffs_at(traj, times):
    slack = 1e-9 * max(abs(traj.times[-1]), 1.0)
    if times[0] < traj.times[0] - slack or times[-1] > traj.times[-1] + slack:
        raise TimeOutOfRange(
            f"trajectory covers [{traj.times[0]}, {traj.times[-1]}], "
            f"snapshots need [{times[0]}, {times[-1]}]")
    return traj.at(times)


def field_error_series(basis, traj, snapshots, against_projection=False):
    """Weighted L2 error of the reconstructed ROM field at every snapshot time.

    By default the reference is the raw snapshot, so the error contains the
    projection residual of the basis. With ``against_projection`` the
    reference is the snapshot's own rank-r projection (the in-space error).
    """
    if traj.r > basis.R:
        raise DimensionMismatch(f"trajectory rank {traj.r} exceeds basis rank {basis.R}")
    if snapshots.grid.n_points != basis.grid.n_points:
        raise DimensionMismatch("snapshot grid does not match basis grid")
    a = _coeffs_at(traj, snapshots.times)
    approx = reconstruct(basis, a.T)
    reference = snapshots.fields
    if against_projection:
        reference = reconstruct(basis, project(basis, reference, traj.r))
    return basis.grid.norm(reference - approx)


def coefficient_error_series(traj, times, reference):
    """Euclidean distance between trajectory and reference coefficients.

    ``reference`` is an ``(len(times), k)`` array with ``k >= traj.r``; only
    its first ``traj.r`` columns are compared.
    """
    times = np.asarray(times, dtype=float)
    reference = np.asarray(reference, dtype=float)
    a = _coeffs_at(traj, times)
    if reference.shape[0] != times.size or reference.shape[1] < traj.r:
        raise DimensionMismatch("reference must be (len(times), >= r)")
    return np.linalg.norm(a - reference[:, :traj.r], axis=1)


@dataclass(frozen=True)
class ErrorReport:
    """Aligned error time series of several ROM variants."""

    times: np.ndarray
    series: dict
    metadata: dict = field(default_factory=dict)

    @property
    def variants(self):
        return tuple(self.series)

    @property
    def time_average(self):
        return {k: float(np.mean(v)) for k, v in self.series.items()}

    @property
    def terminal(self):
        return {k: float(v[-1]) for k, v in self.series.items()}

    @property
    def ratios(self):
        avg = self.time_average
        out = {}
        for num, den in (("D2VMS", "GROM"), ("IROM", "GROM"), ("D2VMS", "IROM")):
            if num in avg and den in avg:
                out[f"{num}/{den}"] = avg[num] / avg[den] if avg[den] != 0 else float("nan")
        return out


def _canonical(labels):
    known = [k for k in _ORDER if k in labels]
    return known + sorted(k for k in labels if k not in _ORDER)


def compare(entries, metadata=None):
    """Assemble per-variant error series into an :class:`ErrorReport`.

    Parameters
    ----------
    entries : mapping or iterable
        ``{label: (times, errors)}`` or an iterable of ``(label, times,
        errors)`` triples. Input order does not matter.
    metadata : dict, optional

    Raises
    ------
    MisalignedTimes
        If the variants do not share one time axis.
    """
    if hasattr(entries, "items"):
        triples = [(k, t, e) for k, (t, e) in entries.items()]
    else:
        triples = list(entries)
    by_label = {}
    times = None
    for label, t, e in triples:
        label = _label(label)
        t = np.asarray(t, dtype=float)
        e = np.asarray(e, dtype=float)
        if t.shape != e.shape:
            raise MisalignedTimes(f"{label}: {t.size} times but {e.size} errors")
        if np.any(e < 0) or not np.all(np.isfinite(e)):
            raise ValueError(f"{label}: errors must be finite and non-negative")
        if times is None:
            times = t
        elif t.shape != times.shape or not np.array_equal(t, times):
            raise MisalignedTimes(f"{label} does not share the report's time axis")
        if label in by_label:
            raise ValueError(f"duplicate variant {label}")
        by_label[label] = e
    series = {k: by_label[k] for k in _canonical(by_label)}
    return ErrorReport(np.empty(0) if times is None else times, series, dict(metadata or {}))


def _fmt(x):
    return format(float(x), ".17g")


def _report_payload(report):
    return {
        "schema": REPORT_SCHEMA,
        "metadata": report.metadata,
        "times": [float(t) for t in report.times],
        "variants": {
            k: {
                "l2_error": [float(x) for x in v],
                "time_average": report.time_average[k],
                "terminal": report.terminal[k],
            }
            for k, v in report.series.items()
        },
        "ratios": report.ratios,
    }


def emit(report, fmt, path):
    """Write the report as CSV (``time,variant,l2_error``) or JSON.

    Floats are written so that parsing them back gives the same doubles.
    """
    fmt = str(fmt).lower()
    path = Path(path)
    try:
        if fmt == "csv":
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["time", "variant", "l2_error"])
                for label, errs in report.series.items():
                    for t, e in zip(report.times, errs):
                        writer.writerow([_fmt(t), label, _fmt(e)])
        elif fmt == "json":
            text = json.dumps(_report_payload(report), indent=2, sort_keys=True,
                              allow_nan=True)
            path.write_text(text + "\n", encoding="utf-8")
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise IoFailure(f"cannot write report {path}: {exc}") from exc
    return path


def read_report_json(path):
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read report {path}: {exc}") from exc
    if payload.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"{path} is not a {REPORT_SCHEMA} document")
    times = np.array(payload["times"], dtype=float)
    variants = payload["variants"]
    series = {k: np.array(variants[k]["l2_error"], dtype=float) for k in _canonical(variants)}
    return ErrorReport(times, series, payload["metadata"])
