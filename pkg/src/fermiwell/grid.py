"""Sine-DVR discretization of a 1D double well with hard walls.

The grid carries particle-in-a-box (sine) DVR nodes, a uniform quadrature
weight and the analytic kinetic-energy matrix. Local potentials are diagonal
in this representation, which keeps the contact interaction diagonal as well
(see :mod:`fermiwell.spbasis`). All quantities are expressed in rescaled
transverse harmonic-oscillator units; mass enters only as a 1/M prefactor on
the kinetic matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class TrapParams:
    """Double-well parameters: harmonic trap plus a centered Gaussian barrier.

    Parameters
    ----------
    omega : float
        Harmonic-oscillator frequency of the overall trap.
    barrier_height : float
        Amplitude V0 of the Gaussian barrier (>= 0; 0 gives a plain trap).
    barrier_width : float
        Width w of the Gaussian barrier.
    mass : float
        Particle mass in rescaled units (1 by default).
    """

    omega: float = 0.1
    barrier_height: float = 2.0
    barrier_width: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ConfigurationError(f"omega must be positive, got {self.omega}")
        if not self.barrier_width > 0:
            raise ConfigurationError(
                f"barrier_width must be positive, got {self.barrier_width}"
            )
        if self.barrier_height < 0:
            raise ConfigurationError(
                f"barrier_height must be nonnegative, got {self.barrier_height}"
            )
        if not self.mass > 0:
            raise ConfigurationError(f"mass must be positive, got {self.mass}")


@dataclass(frozen=True)
class GridSpec:
    """Sine-DVR grid: interior nodes, uniform weight and kinetic matrix.

    The kinetic matrix is built for unit mass; divide by the particle mass
    where it is applied. Nodes exclude the hard-wall endpoints.
    """

    n_points: int
    x_min: float
    x_max: float
    points: np.ndarray
    weight: float
    kinetic: np.ndarray

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def mode_energies(self, mass: float = 1.0) -> np.ndarray:
        """Kinetic energies k_m^2/(2 M) of the box modes, k_m = m*pi/L."""
        m = np.arange(1, self.n_points + 1)
        k = m * np.pi / self.length
        return 0.5 * k**2 / mass


def build_grid(n_points: int, x_min: float = -40.0, x_max: float = 40.0) -> GridSpec:
    """Build the sine-DVR grid on (x_min, x_max) with hard walls.

    Nodes are x_j = x_min + j*L/(n+1), j = 1..n. The kinetic matrix is
    assembled exactly from the box-mode spectrum through the orthogonal sine
    transform, so its eigenvalues are k_m^2/2 to machine precision.
    """
    if n_points < 2:
        raise ConfigurationError(f"n_points must be >= 2, got {n_points}")
    if not x_min < x_max:
        raise ConfigurationError(f"need x_min < x_max, got [{x_min}, {x_max}]")
    length = x_max - x_min
    j = np.arange(1, n_points + 1)
    points = x_min + j * (length / (n_points + 1))
    weight = length / (n_points + 1)

    # Orthogonal, symmetric, involutory sine transform (DST-I).
    u = np.sqrt(2.0 / (n_points + 1)) * np.sin(np.outer(j, j) * (np.pi / (n_points + 1)))
    k = j * np.pi / length
    kinetic = (u * (0.5 * k**2)) @ u
    kinetic = 0.5 * (kinetic + kinetic.T)  # exact symmetry under roundoff

    points.setflags(write=False)
    kinetic.setflags(write=False)
    return GridSpec(
        n_points=n_points,
        x_min=float(x_min),
        x_max=float(x_max),
        points=points,
        weight=float(weight),
        kinetic=kinetic,
    )


def potential_at(x, trap: TrapParams):
    """Double-well potential 0.5*M*omega^2*x^2 + V0/(w*sqrt(2*pi))*exp(-x^2/2w^2).

    Accepts scalars or arrays; even in x.
    """
    xa = np.asarray(x, dtype=float)
    w = trap.barrier_width
    barrier = trap.barrier_height / (w * np.sqrt(2.0 * np.pi)) * np.exp(
        -(xa**2) / (2.0 * w**2)
    )
    value = 0.5 * trap.mass * trap.omega**2 * xa**2 + barrier
    if np.isscalar(x):
        return float(value)
    return value


def one_body_hamiltonian(grid: GridSpec, trap: TrapParams) -> np.ndarray:
    """Real symmetric one-body Hamiltonian h = T/M + diag(V) on the grid."""
    h = grid.kinetic / trap.mass + np.diag(potential_at(grid.points, trap))
    return h
