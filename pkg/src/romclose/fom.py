"""Full-order models: 1D viscous Burgers by finite differences, and the
three-mode quadratic toy system."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import CflViolation, NonFiniteState
from .timestepping import RomTrajectory, Variant, integrate_rom, rk4_step


class Boundary(str, Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D grid with its quadrature rule.

    Periodic grids hold ``n_points`` nodes ``x_k = k * L / n`` (the right
    endpoint is the image of ``x_0``) and equal weights. Homogeneous
    Dirichlet grids include both endpoints and use trapezoid weights.
    """

    n_points: int
    domain_length: float
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise ValueError("n_points must be an integer >= 3")
        if not self.domain_length > 0:
            raise ValueError("domain_length must be positive")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "domain_length", float(self.domain_length))

    @property
    def spacing(self):
        if self.boundary is Boundary.PERIODIC:
            return self.domain_length / self.n_points
        return self.domain_length / (self.n_points - 1)

    @property
    def x(self):
        return self.spacing * np.arange(self.n_points)

    @property
    def quad_weights(self):
        w = np.full(self.n_points, self.spacing)
        if self.boundary is Boundary.DIRICHLET:
            w[0] = w[-1] = 0.5 * self.spacing
        return w

    def derivative(self, f):
        """Second-order central difference along axis 0.

        Periodic grids wrap around; Dirichlet grids use second-order
        one-sided differences at the two end nodes.
        """
        f = np.asarray(f, dtype=float)
        h = self.spacing
        if self.boundary is Boundary.PERIODIC:
            return (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * h)
        return np.gradient(f, h, axis=0, edge_order=2)

    def inner(self, f, g):
        """Quadrature-weighted inner product over axis 0."""
        return np.tensordot(self.quad_weights, np.asarray(f) * np.asarray(g), axes=(0, 0))

    def norm(self, f):
        return np.sqrt(self.inner(f, f))


class InitialCondition(str, Enum):
    SIN_BUMP = "sin_bump"
    STEP_PROFILE = "step_profile"
    CUSTOM = "custom"


@dataclass(frozen=True)
class FomConfig:
    """Time-stepping setup of a Burgers run.

    ``initial_condition`` selects the profile; ``ic_params`` carries its
    parameters. ``sin_bump`` is ``offset + amplitude * sin(2 pi k x / L)``
    (defaults 1, 0.5, k=1); ``step_profile`` is ``high`` left of
    ``position`` (default L/2) and ``low`` right of it; ``custom`` reads
    ``samples`` (one value per grid node).
    """

    viscosity: float
    dt: float
    n_steps: int
    snapshot_stride: int = 1
    initial_condition: InitialCondition = InitialCondition.SIN_BUMP
    ic_params: dict = field(default_factory=dict)
    advection: bool = True

    def __post_init__(self):
        object.__setattr__(self, "initial_condition", InitialCondition(self.initial_condition))
        if not self.viscosity > 0:
            raise ValueError("viscosity must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        if self.n_snapshots < 2:
            raise ValueError("n_steps // snapshot_stride + 1 must be >= 2")

    @property
    def n_snapshots(self):
        return self.n_steps // self.snapshot_stride + 1

    def initial_field(self, grid):
        x = grid.x
        p = self.ic_params
        L = grid.domain_length
        if self.initial_condition is InitialCondition.SIN_BUMP:
            k = p.get("wavenumber", 1)
            u0 = p.get("offset", 1.0) + p.get("amplitude", 0.5) * np.sin(2.0 * np.pi * k * x / L)
        elif self.initial_condition is InitialCondition.STEP_PROFILE:
            pos = p.get("position", 0.5 * L)
            u0 = np.where(x < pos, p.get("high", 1.0), p.get("low", 0.0))
        else:
            u0 = np.asarray(p["samples"], dtype=float)
            if u0.shape != (grid.n_points,):
                raise ValueError(f"custom initial condition needs {grid.n_points} samples")
        u0 = np.array(u0, dtype=float)
        if grid.boundary is Boundary.DIRICHLET:
            u0[0] = u0[-1] = 0.0
        return u0


@dataclass(frozen=True)
class SnapshotSet:
    """Full-order fields sampled at increasing times; column j is time j."""

    grid: Grid1D
    times: np.ndarray
    fields: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        fields = np.asarray(self.fields, dtype=float)
        if times.ndim != 1 or np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if fields.shape != (self.grid.n_points, times.size):
            raise ValueError(
                f"fields must be ({self.grid.n_points}, {times.size}), got {fields.shape}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "fields", fields)

    @property
    def M(self):
        return self.times.size


def burgers_rhs(grid, viscosity, advection=True):
    """Semi-discrete right-hand side ``nu u_xx - (u^2 / 2)_x``."""
    h = grid.spacing
    nu = viscosity
    if grid.boundary is Boundary.PERIODIC:
        def rhs(t, u):
            up = np.roll(u, -1)
            um = np.roll(u, 1)
            du = nu * (up - 2.0 * u + um) / (h * h)
            if advection:
                du -= (0.5 * up * up - 0.5 * um * um) / (2.0 * h)
            return du
    else:
        def rhs(t, u):
            du = np.zeros_like(u)
            du[1:-1] = nu * (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (h * h)
            if advection:
                du[1:-1] -= (0.5 * u[2:] ** 2 - 0.5 * u[:-2] ** 2) / (2.0 * h)
            return du
    return rhs


def solve_burgers(config, grid):
    """Integrate viscous Burgers and return every ``snapshot_stride``-th state.

    Second-order central differences in space (conservative advection
    form), classical RK4 in time. The initial state is always the first
    snapshot.

    Raises
    ------
    CflViolation
        If ``dt * max|u0| / h > 1`` or ``dt * nu / h**2 > 0.5``.
    NonFiniteState
        If the state stops being finite.
    """
    u = config.initial_field(grid)
    h = grid.spacing
    courant = config.dt * np.max(np.abs(u)) / h if config.advection else 0.0
    diffusion_number = config.dt * config.viscosity / h**2
    if courant > 1.0 or diffusion_number > 0.5:
        raise CflViolation(
            f"unstable step: courant={courant:.3g} (max 1), "
            f"diffusion number={diffusion_number:.3g} (max 0.5)")

    rhs = burgers_rhs(grid, config.viscosity, config.advection)
    stride = config.snapshot_stride
    n_snap = config.n_snapshots
    fields = np.empty((grid.n_points, n_snap), order="F")
    fields[:, 0] = u
    steps = np.arange(n_snap) * stride
    for k in range(1, steps[-1] + 1):
        u = rk4_step(rhs, (k - 1) * config.dt, u, config.dt)
        if k % stride == 0:
            if not np.all(np.isfinite(u)):
                raise NonFiniteState(f"Burgers state blew up by step {k}", step=k,
                                     time=k * config.dt)
            fields[:, k // stride] = u
    return SnapshotSet(grid, steps * config.dt, fields)


@dataclass(frozen=True)
class ToySystem:
    """Three-mode quadratic system ``da/dt = A3 a + a^T B3 a``."""

    A3: np.ndarray
    B3: np.ndarray
    a0: np.ndarray

    def __post_init__(self):
        A3 = np.asarray(self.A3, dtype=float)
        B3 = np.asarray(self.B3, dtype=float)
        a0 = np.asarray(self.a0, dtype=float)
        if A3.shape != (3, 3) or B3.shape != (3, 3, 3) or a0.shape != (3,):
            raise ValueError("toy system needs A3 (3,3), B3 (3,3,3), a0 (3,)")
        if not (np.all(np.isfinite(A3)) and np.all(np.isfinite(B3)) and np.all(np.isfinite(a0))):
            raise ValueError("toy system entries must be finite")
        for name, val in (("A3", A3), ("B3", B3), ("a0", a0)):
            object.__setattr__(self, name, val)

    dim = 3

    def rhs(self, t, a):
        return self.A3 @ a + (self.B3 @ a) @ a


def default_toy():
    """Shipped toy: two slow modes coupled through a fast-decaying third.

    Dropping mode 3 leaves a1, a2 decaying freely, while the full system
    transfers energy between them through a3 ~ 0.3 a1 a2.
    """
    A3 = np.diag([-0.01, -0.02, -1.0])
    B3 = np.zeros((3, 3, 3))
    B3[0, 1, 2] = 1.0
    B3[1, 0, 2] = -1.0
    B3[2, 0, 1] = 0.3
    return ToySystem(A3, B3, np.array([1.0, 1.0, 0.0]))


def solve_toy(system, dt, n_steps):
    """RK4 trajectory of the full three-mode toy system."""
    return integrate_rom(system.rhs, system.a0, dt, n_steps, label=Variant.TOY)


__all__ = [
    "Boundary", "Grid1D", "InitialCondition", "FomConfig", "SnapshotSet",
    "ToySystem", "burgers_rhs", "solve_burgers", "default_toy", "solve_toy",
    "RomTrajectory",
]
