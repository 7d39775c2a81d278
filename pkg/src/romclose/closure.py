"""Ideal closure extraction and the data-driven variational multiscale closure.

The ideal closure on the resolved modes is

    tau_i = [F_R(a_1..a_R)]_i - [F_r(a_1..a_r)]_i,   i = 1..r,

evaluated on projected full-order data. The data-driven closure replaces it
by ``A_tilde a + a^T B_tilde a`` with operators fitted by (ridge) least
squares, row by row.
"""

import bisect
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (DimensionMismatch, IllConditionedWarning, InsufficientSamples,
                     RankNotStrictlySmaller, RankTooLarge, TimeOutOfRange)
from .galerkin import RomOperators, assemble_operators, grom_rhs
from .pod import project
from .timestepping import RomTrajectory, Variant, integrate_rom

log = logging.getLogger(__name__)

#: Default ridge weight relative to the largest squared feature singular value.
AUTO_RIDGE_FACTOR = 1e-6
#: Condition estimate above which a fit warns.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class ClosureSamples:
    """Ideal closure values and the full coefficients they came from.

    Attributes
    ----------
    times : (M,) ndarray
    tau : (M, r) ndarray
    a_full : (M, R) ndarray
    r : int
    """

    times: np.ndarray
    tau: np.ndarray
    a_full: np.ndarray
    r: int

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        a_full = np.asarray(self.a_full, dtype=float)
        M = np.asarray(self.times).size
        if tau.shape != (M, self.r) or a_full.shape[0] != M:
            raise DimensionMismatch("tau must be (M, r) and a_full (M, R)")
        if self.r >= a_full.shape[1]:
            raise RankNotStrictlySmaller(f"r={self.r} must be < R={a_full.shape[1]}")
        if not np.all(np.isfinite(tau)):
            raise ValueError("closure samples contain non-finite values")
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "a_full", a_full)

    @property
    def R(self):
        return self.a_full.shape[1]

    @property
    def a_resolved(self):
        return self.a_full[:, :self.r]


@dataclass(frozen=True)
class ClosureOperators:
    """Fitted closure ``A_tilde a + a^T B_tilde a``.

    ``B_tilde`` is stored symmetrized in its last two indices; the closure
    term it produces is unchanged by that.
    """

    A_tilde: np.ndarray
    B_tilde: np.ndarray
    ridge_lambda: float = 0.0
    residual_rel: float = 0.0
    condition: float = 1.0

    def __post_init__(self):
        A = np.asarray(self.A_tilde, dtype=float)
        B = np.asarray(self.B_tilde, dtype=float)
        r = A.shape[0]
        if A.shape != (r, r) or B.shape != (r, r, r):
            raise DimensionMismatch("A_tilde must be (r,r) and B_tilde (r,r,r)")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValueError("closure operators must be finite")
        object.__setattr__(self, "A_tilde", A)
        object.__setattr__(self, "B_tilde", B)

    @property
    def r(self):
        return self.A_tilde.shape[0]

    @classmethod
    def zeros(cls, r):
        return cls(np.zeros((r, r)), np.zeros((r, r, r)))

    def __call__(self, a):
        return self.A_tilde @ a + (self.B_tilde @ a) @ a


def no_constraints(A_tilde, B_tilde):
    """Identity hook for constrained fits; returns the operators unchanged."""
    return A_tilde, B_tilde


def extract_closure_samples(basis, snapshots, r, viscosity, ops_R=None):
    """Ideal closure term at every snapshot, computed in coefficient space.

    Parameters
    ----------
    basis : PodBasis
        Basis of rank R > r.
    snapshots : SnapshotSet
    r : int
        Number of resolved modes.
    viscosity : float
    ops_R : RomOperators, optional
        Pre-assembled rank-R operators (assembled here when omitted).

    Returns
    -------
    ClosureSamples
    """
    R = basis.R
    if r > R:
        raise RankTooLarge(f"r={r} exceeds basis rank {R}")
    if r >= R:
        raise RankNotStrictlySmaller(f"r={r} must be strictly smaller than R={R}")
    if ops_R is None:
        ops_R = assemble_operators(basis, R, viscosity)
    ops_r = ops_R.truncate(r)
    a_full = project(basis, snapshots.fields, R).T
    tau = np.empty((a_full.shape[0], r))
    for j, a in enumerate(a_full):
        tau[j] = grom_rhs(ops_R, a)[:r] - grom_rhs(ops_r, a[:r])
    return ClosureSamples(snapshots.times.copy(), tau, np.ascontiguousarray(a_full), r)


def quadratic_features(a):
    """Rows ``(a, vec(a a^T))`` for each sample; ``vec`` is row-major (m, n)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    M, r = a.shape
    quad = (a[:, :, None] * a[:, None, :]).reshape(M, r * r)
    return np.hstack([a, quad])


def auto_ridge_lambda(samples):
    """``1e-6`` times the largest squared singular value of the feature matrix."""
    s = np.linalg.svd(quadratic_features(samples.a_resolved), compute_uv=False)
    return AUTO_RIDGE_FACTOR * float(s[0]) ** 2


def _condition_estimate(a, lam):
    # Full a (x) a features repeat every off-diagonal product, which makes the
    # normal matrix exactly singular at lam = 0. Estimate on the distinct
    # products so the warning tracks real ill-conditioning.
    r = a.shape[1]
    iu = np.triu_indices(r)
    compact = np.hstack([a, (a[:, :, None] * a[:, None, :])[:, iu[0], iu[1]]])
    s = np.linalg.svd(compact, compute_uv=False)
    if s.size < compact.shape[1]:
        return np.inf
    smin2 = s[-1] ** 2 + lam
    return np.inf if smin2 == 0 else (s[0] ** 2 + lam) / smin2


def _solve_row(U, s, Vt, rhs, cutoff):
    keep = s > cutoff
    return Vt[keep].T @ ((U[:, keep].T @ rhs) / s[keep])


def fit_closure(samples, ridge_lambda=0.0, n_jobs=1, constrain=no_constraints):
    """Fit ``tau ~ A_tilde a + a^T B_tilde a`` by ridge least squares.

    Each closure component ``i`` is its own linear least-squares problem in
    the ``r + r**2`` unknowns ``(A_tilde[i, :], B_tilde[i, :, :])`` with
    features ``(a, a (x) a)``. The regularized system
    ``[Phi; sqrt(lam) I] x = [tau_i; 0]`` is solved through its singular
    value decomposition, discarding singular values below the usual rank
    tolerance, which yields the minimum-norm solution when ``lam = 0`` and
    the system is rank deficient.

    Parameters
    ----------
    samples : ClosureSamples
    ridge_lambda : float or "auto"
        Ridge weight; ``"auto"`` uses :func:`auto_ridge_lambda`.
    n_jobs : int
        Threads used for the independent row solves.
    constrain : callable
        ``constrain(A_tilde, B_tilde) -> (A_tilde, B_tilde)`` applied after
        the fit; the default leaves them unchanged.

    Returns
    -------
    ClosureOperators
    """
    a = samples.a_resolved
    tau = samples.tau
    M, r = a.shape
    if M < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {M}")
    lam = auto_ridge_lambda(samples) if ridge_lambda == "auto" else float(ridge_lambda)
    if lam < 0:
        raise ValueError("ridge_lambda must be non-negative")
    n_feat = r + r * r
    if M < n_feat:
        log.info("closure fit: %d samples for %d unknowns per row", M, n_feat)

    Phi = quadratic_features(a)
    system = Phi if lam == 0 else np.vstack([Phi, np.sqrt(lam) * np.eye(n_feat)])
    U, s, Vt = np.linalg.svd(system, full_matrices=False)
    cutoff = s[0] * max(system.shape) * np.finfo(float).eps if s.size else 0.0
    pad = system.shape[0] - M

    def solve(i):
        rhs = np.concatenate([tau[:, i], np.zeros(pad)])
        return _solve_row(U, s, Vt, rhs, cutoff)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(solve, range(r)))
    else:
        rows = [solve(i) for i in range(r)]
    X = np.array(rows) if rows else np.zeros((0, n_feat))

    cond = _condition_estimate(a, lam)
    if cond > CONDITION_LIMIT:
        warnings.warn(f"closure normal system condition estimate {cond:.3g} exceeds "
                      f"{CONDITION_LIMIT:.0e}", IllConditionedWarning, stacklevel=2)

    A_tilde = X[:, :r]
    B_raw = X[:, r:].reshape(r, r, r)
    A_tilde, B_raw = constrain(A_tilde, B_raw)
    B_tilde = 0.5 * (B_raw + B_raw.transpose(0, 2, 1))

    fit = Phi @ X.T
    tau_norm = np.linalg.norm(tau)
    residual_rel = 0.0 if tau_norm == 0 else float(np.linalg.norm(tau - fit) / tau_norm)
    return ClosureOperators(A_tilde, B_tilde, lam, residual_rel, float(cond))


def closed_operators(ops, closure):
    """Galerkin operators with the closure folded in: ``A + A_tilde``, ``B + B_tilde``."""
    if closure.r != ops.r:
        raise DimensionMismatch(f"closure rank {closure.r} != operator rank {ops.r}")
    return RomOperators(ops.A + closure.A_tilde, ops.B + closure.B_tilde, ops.viscosity,
                        ops.constant, ops.A_affine, ops.centered)


def d2vms_rhs(ops, closure, a):
    """``c + (A + A_affine + A_tilde) a + a^T (B + B_tilde) a``."""
    return grom_rhs(closed_operators(ops, closure), a)


def integrate_d2vms(ops, closure, a0, dt, n_steps, t0=0.0):
    closed = closed_operators(ops, closure)
    return integrate_rom(lambda t, a: grom_rhs(closed, a), a0, dt, n_steps, t0, Variant.D2VMS)


class UnresolvedInterpolant:
    """Piecewise-linear-in-time values of the unresolved coefficients.

    Called with a time ``t``, returns ``a_{r+1..R}(t)``. Times outside the
    sample range (beyond a round-off slack) raise :class:`TimeOutOfRange`.
    """

    def __init__(self, times, a_unresolved):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(a_unresolved, dtype=float)
        if self.values.shape[0] != self.times.size:
            raise DimensionMismatch("one row of unresolved coefficients per time needed")
        if self.times.size < 2:
            raise DimensionMismatch("need at least two sample times to interpolate")
        # Plain floats: this is evaluated four times per ROM step.
        self._grid = self.times.tolist()
        span = self.times[-1] - self.times[0]
        self._slack = 1e-9 * max(span, 1.0)

    @classmethod
    def from_samples(cls, samples):
        return cls(samples.times, samples.a_full[:, samples.r:])

    def __call__(self, t):
        grid = self._grid
        t0, t1 = grid[0], grid[-1]
        if t < t0 - self._slack or t > t1 + self._slack:
            raise TimeOutOfRange(f"t={t} outside [{t0}, {t1}]")
        t = min(max(float(t), t0), t1)
        k = min(max(bisect.bisect_right(grid, t) - 1, 0), len(grid) - 2)
        theta = (t - grid[k]) / (grid[k + 1] - grid[k])
        return (1.0 - theta) * self.values[k] + theta * self.values[k + 1]


def irom_rhs(ops_R, r, a_resolved, unresolved_at, t):
    """First ``r`` components of ``F_R`` at ``(a_resolved, unresolved_at(t))``."""
    a_resolved = np.asarray(a_resolved, dtype=float)
    if a_resolved.shape != (r,):
        raise DimensionMismatch(f"expected {r} resolved coefficients")
    a = np.concatenate([a_resolved, unresolved_at(t)])
    return grom_rhs(ops_R, a)[:r]


def integrate_irom(ops_R, r, unresolved_at, a0, dt, n_steps, t0=0.0):
    return integrate_rom(lambda t, a: irom_rhs(ops_R, r, a, unresolved_at, t),
                         a0, dt, n_steps, t0, Variant.IROM)


def toy_closure_samples(reference, system, keep=2):
    """Toy ideal closure ``tau_i = F_i(a) - F_i(a_1..a_keep, 0..)`` along a
    reference trajectory of the full toy system."""
    a = reference.coeffs
    truncated = np.zeros_like(a)
    truncated[:, :keep] = a[:, :keep]

    def F(x):
        return x @ system.A3.T + np.einsum("imn,jm,jn->ji", system.B3, x, x)

    tau = (F(a) - F(truncated))[:, :keep]
    return ClosureSamples(reference.times, tau, a, keep)


def fit_toy_closure(reference, system, keep=2, ridge_lambda="auto"):
    """Fit the closure of the ``keep``-mode truncation of the toy system.

    Parameters
    ----------
    reference : RomTrajectory
        Trajectory of the full toy system (from :func:`solve_toy`).
    system : ToySystem
    keep : int
    ridge_lambda : float or "auto"

    Returns
    -------
    ClosureOperators
    """
    return fit_closure(toy_closure_samples(reference, system, keep), ridge_lambda)


def toy_truncated_operators(system, keep=2):
    """The toy system restricted to its first ``keep`` modes (a_3 set to 0)."""
    return RomOperators(system.A3[:keep, :keep], system.B3[:keep, :keep, :keep], 0.0)


__all__ = [
    "ClosureSamples", "ClosureOperators", "extract_closure_samples", "quadratic_features",
    "auto_ridge_lambda", "fit_closure", "closed_operators", "d2vms_rhs", "integrate_d2vms",
    "UnresolvedInterpolant", "irom_rhs", "integrate_irom", "toy_closure_samples",
    "fit_toy_closure", "toy_truncated_operators", "no_constraints", "RomTrajectory",
]
