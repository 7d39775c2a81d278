"""Fixed-step classical Runge-Kutta integration of coefficient systems."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NonFiniteState


class Variant(str, Enum):
    GROM = "GROM"
    IROM = "IROM"
    D2VMS = "D2VMS"
    TOY = "Toy"


@dataclass(frozen=True)
class RomTrajectory:
    """Coefficient vectors a(t) on a uniform time grid.

    Attributes
    ----------
    times : (n_steps + 1,) ndarray
    coeffs : (n_steps + 1, r) ndarray
        Row ``k`` holds the coefficients at ``times[k]``.
    label : Variant
    """

    times: np.ndarray
    coeffs: np.ndarray
    label: Variant = Variant.GROM

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[0] != times.shape[0]:
            raise ValueError("coeffs must be (len(times), r)")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "label", Variant(self.label))

    @property
    def r(self):
        return self.coeffs.shape[1]

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def at(self, t):
        """Linearly interpolate the coefficients to the times ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t.size, self.r))
        for j in range(self.r):
            out[:, j] = np.interp(t, self.times, self.coeffs[:, j])
        return out


def rk4_step(rhs, t, a, dt):
    k1 = rhs(t, a)
    k2 = rhs(t + 0.5 * dt, a + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, a + 0.5 * dt * k2)
    k4 = rhs(t + dt, a + dt * k3)
    return a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_rom(rhs, a0, dt, n_steps, t0=0.0, label=Variant.GROM):
    """Integrate ``da/dt = rhs(t, a)`` with classical RK4 and a fixed step.

    The state is stored at every step. Any non-finite value aborts the run
    with :class:`NonFiniteState`, since a blown-up ROM is a result to
    report rather than hide.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, a) -> ndarray`` of the same length as ``a``.
    a0 : (r,) array_like
        Initial coefficients.
    dt : float
        Positive time step.
    n_steps : int
        Number of steps.
    t0 : float
        Initial time.
    label : Variant
        Tag stored on the returned trajectory.

    Returns
    -------
    RomTrajectory
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    n_steps = int(n_steps)
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    a = np.array(a0, dtype=float)
    if a.ndim != 1:
        raise ValueError("a0 must be a vector")
    coeffs = np.empty((n_steps + 1, a.size))
    coeffs[0] = a
    # Times are computed from the step index so the grid is exactly uniform.
    times = t0 + dt * np.arange(n_steps + 1)
    # Overflow on the way to a blow-up is reported below, not as a warning.
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            a = rk4_step(rhs, times[k], a, dt)
            if not np.isfinite(a).all():
                raise NonFiniteState(
                    f"non-finite state at step {k + 1} (t={times[k + 1]:.6g})",
                    step=k + 1, time=float(times[k + 1]))
            coeffs[k + 1] = a
    return RomTrajectory(times, coeffs, label)
