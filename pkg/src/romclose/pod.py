"""Proper orthogonal decomposition in the quadrature-weighted L2 inner product."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateSnapshots, DimensionMismatch, RankTooLarge
from .fom import Grid1D, SnapshotSet

#: Trailing singular values below this fraction of the largest are dropped.
DEFLATION_TOL = 1e-12


@dataclass(frozen=True)
class PodBasis:
    """Weighted-orthonormal modes ``phi_1 .. phi_R`` (columns of ``modes``).

    ``mean_field`` is None when the snapshots were not centered. A subspace
    ``X^r`` is represented by this basis together with a rank ``r <= R``.
    """

    grid: Grid1D
    modes: np.ndarray
    singular_values: np.ndarray
    mean_field: Optional[np.ndarray] = None

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=float)
        sv = np.asarray(self.singular_values, dtype=float)
        if modes.ndim != 2 or modes.shape[0] != self.grid.n_points:
            raise DimensionMismatch("modes must be (n_points, R)")
        if sv.shape != (modes.shape[1],):
            raise DimensionMismatch("need one singular value per mode")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "singular_values", sv)
        if self.mean_field is not None:
            mean = np.asarray(self.mean_field, dtype=float)
            if mean.shape != (self.grid.n_points,):
                raise DimensionMismatch("mean_field must have one value per node")
            object.__setattr__(self, "mean_field", mean)

    @property
    def R(self):
        return self.modes.shape[1]

    @property
    def centered(self):
        return self.mean_field is not None

    @property
    def offset(self):
        """The centering field, or zeros when uncentered."""
        if self.mean_field is None:
            return np.zeros(self.grid.n_points)
        return self.mean_field

    def _check_rank(self, r):
        if r is None:
            return self.R
        if int(r) != r or r < 0 or r > self.R:
            raise RankTooLarge(f"rank {r} outside 0..{self.R}")
        return int(r)


@dataclass(frozen=True)
class CoefficientSeries:
    times: np.ndarray
    coeffs: np.ndarray


def compute_pod(snapshots, R, centering=True):
    """Build the POD basis of a snapshot set.

    The snapshot matrix ``S`` (optionally minus its time mean) is scaled by
    ``W**0.5`` with ``W = diag(quad_weights)``; the left singular vectors of
    that matrix, mapped back by ``W**-0.5``, are orthonormal in the weighted
    inner product. Singular values are returned unsquared.

    Parameters
    ----------
    snapshots : SnapshotSet
    R : int
        Requested rank. Fewer modes are returned when trailing singular
        values fall below ``1e-12 * sigma_1``.
    centering : bool
        Subtract (and store) the time-mean field first.

    Returns
    -------
    PodBasis
    """
    grid = snapshots.grid
    n, M = snapshots.fields.shape
    if int(R) != R or R < 1 or R > min(n, M):
        raise RankTooLarge(f"R={R} must lie in 1..min(n_points, M)={min(n, M)}")
    S = snapshots.fields
    mean = None
    if centering:
        mean = S.mean(axis=1)
        S = S - mean[:, None]
    sqrt_w = np.sqrt(grid.quad_weights)
    U, s, _ = np.linalg.svd(sqrt_w[:, None] * S, full_matrices=False)
    if s[0] == 0.0:
        raise DegenerateSnapshots("snapshot matrix is zero (identical snapshots with centering?)")
    keep = min(int(R), int(np.sum(s > DEFLATION_TOL * s[0])))
    modes = U[:, :keep] / sqrt_w[:, None]
    # SVD signs are arbitrary; pin them so the largest-magnitude entry is positive.
    pivot = np.argmax(np.abs(modes), axis=0)
    signs = np.sign(modes[pivot, np.arange(keep)])
    modes = modes * signs
    return PodBasis(grid, modes, s[:keep].copy(), mean)


def _as_field(basis, field):
    f = np.asarray(field, dtype=float)
    if f.shape[0] != basis.grid.n_points:
        raise DimensionMismatch(
            f"field has {f.shape[0]} values, grid has {basis.grid.n_points}")
    return f


def project(basis, field, r=None):
    """Weighted inner products of ``field - mean_field`` with ``phi_1..phi_r``.

    ``field`` may also be an ``(n_points, k)`` stack of fields, in which case
    an ``(r, k)`` array is returned.
    """
    r = basis._check_rank(r)
    f = _as_field(basis, field)
    w = basis.grid.quad_weights
    centered = f - (basis.offset if f.ndim == 1 else basis.offset[:, None])
    return (basis.modes[:, :r].T * w) @ centered


def reconstruct(basis, coeffs):
    """``mean_field + sum_j coeffs[j] * phi_j``."""
    a = np.asarray(coeffs, dtype=float)
    r = a.shape[0]
    if r > basis.R:
        raise DimensionMismatch(f"{r} coefficients for a rank-{basis.R} basis")
    field = basis.modes[:, :r] @ a
    return field + (basis.offset if a.ndim == 1 else basis.offset[:, None])


def project_series(basis, snapshots, r=None):
    if snapshots.grid.n_points != basis.grid.n_points:
        raise DimensionMismatch("snapshot grid does not match the basis grid")
    coeffs = project(basis, snapshots.fields, r).T
    return CoefficientSeries(snapshots.times.copy(), np.ascontiguousarray(coeffs))


def projection_error_series(basis, snapshots, r=None):
    """Weighted L2 norm of each snapshot's residual after rank-r projection."""
    r = basis._check_rank(r)
    S = _as_field(basis, snapshots.fields)
    residual = S - reconstruct(basis, project(basis, S, r))
    return basis.grid.norm(residual)


def projection_error(basis, snapshots, r=None):
    """Root-mean-square over snapshots of the rank-r projection residual norm."""
    e = projection_error_series(basis, snapshots, r)
    return float(np.sqrt(np.mean(e**2)))
