"""Galerkin ROM operators for ``u_t = nu u_xx - u u_x`` and their evaluation."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, RankTooLarge
from .timestepping import RomTrajectory, Variant, integrate_rom


@dataclass(frozen=True)
class RomOperators:
    """Operators of ``da/dt = c + (A + A_affine) a + a^T B a``.

    ``A`` is the diffusion matrix ``-nu (phi_m', phi_i')`` and ``B`` the
    convection tensor ``-(phi_m phi_n', phi_i)``. ``constant`` and
    ``A_affine`` are the extra terms generated by a nonzero centering field
    and are zero for an uncentered basis.
    """

    A: np.ndarray
    B: np.ndarray
    viscosity: float
    constant: np.ndarray = None
    A_affine: np.ndarray = None
    centered: bool = False

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        r = A.shape[0]
        if A.shape != (r, r) or B.shape != (r, r, r):
            raise DimensionMismatch(f"A must be (r,r) and B (r,r,r); got {A.shape}, {B.shape}")
        c = np.zeros(r) if self.constant is None else np.asarray(self.constant, dtype=float)
        Aa = np.zeros((r, r)) if self.A_affine is None else np.asarray(self.A_affine, dtype=float)
        if c.shape != (r,) or Aa.shape != (r, r):
            raise DimensionMismatch("affine terms do not match r")
        for name, val in (("A", A), ("B", B), ("constant", c), ("A_affine", Aa)):
            object.__setattr__(self, name, val)

    @property
    def r(self):
        return self.A.shape[0]

    @cached_property
    def linear(self):
        return self.A + self.A_affine

    def truncate(self, r):
        """Leading ``r``-dimensional blocks of every operator."""
        if r > self.r:
            raise RankTooLarge(f"cannot truncate rank-{self.r} operators to {r}")
        return RomOperators(self.A[:r, :r], self.B[:r, :r, :r], self.viscosity,
                            self.constant[:r], self.A_affine[:r, :r], self.centered)

    def rhs(self, t, a):
        return grom_rhs(self, a)


def assemble_operators(basis, r=None, viscosity=1.0):
    """Project Burgers onto the first ``r`` POD modes.

    Mode derivatives use the grid's central difference; every integral is
    the quadrature-weighted sum over nodes. Each entry is a plain ordered
    sum over nodes, so ``assemble_operators(basis, r)`` equals the leading
    blocks of ``assemble_operators(basis, R)`` bit for bit.

    With ``u = mean + sum_j a_j phi_j`` the projection also produces

        constant_i = -nu (mean', phi_i') - (mean mean', phi_i)
        A_affine_im = -(mean phi_m' + phi_m mean', phi_i)

    Parameters
    ----------
    basis : PodBasis
    r : int, optional
        Number of modes (default all).
    viscosity : float

    Returns
    -------
    RomOperators
    """
    r = basis._check_rank(r)
    grid = basis.grid
    w = grid.quad_weights
    P = basis.modes[:, :r]
    dP = grid.derivative(P)
    nu = float(viscosity)

    A = -nu * np.einsum("k,km,ki->im", w, dP, dP, optimize=False)
    B = -np.einsum("k,ki,km,kn->imn", w, P, P, dP, optimize=False)
    constant = A_affine = None
    if basis.centered:
        mean = basis.mean_field
        dmean = grid.derivative(mean)
        constant = (-nu * np.einsum("k,k,ki->i", w, dmean, dP, optimize=False)
                    - np.einsum("k,k,ki->i", w, mean * dmean, P, optimize=False))
        A_affine = -np.einsum("k,km,ki->im", w, mean[:, None] * dP + P * dmean[:, None], P,
                              optimize=False)
    return RomOperators(A, B, nu, constant, A_affine, basis.centered)


def _check_state(ops, a):
    a = np.asarray(a, dtype=float)
    if a.shape != (ops.r,):
        raise DimensionMismatch(f"state has shape {a.shape}, operators are rank {ops.r}")
    return a


def grom_rhs(ops, a):
    """``c + (A + A_affine) a + a^T B a``; component i of the quadratic part
    is ``sum_mn B[i,m,n] a_m a_n``."""
    a = _check_state(ops, a)
    return ops.constant + ops.linear @ a + (ops.B @ a) @ a


def integrate_grom(ops, a0, dt, n_steps, t0=0.0):
    return integrate_rom(lambda t, a: grom_rhs(ops, a), a0, dt, n_steps, t0, Variant.GROM)


__all__ = ["RomOperators", "assemble_operators", "grom_rhs", "integrate_rom",
           "integrate_grom", "RomTrajectory"]
