"""Truncated single-particle eigenbasis of the double well.

Holds the lowest M eigenfunctions of the one-body Hamiltonian together with
their energies and the rank-4 contact-interaction tensor per unit coupling.
Also provides the quasi-1D (confinement-induced) coupling-strength converter
from 3D scattering parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericalError, ResonanceError
from .grid import GridSpec, TrapParams, one_body_hamiltonian

# |zeta(1/2)|, zeta the Riemann zeta function.
ZETA_HALF_MAGNITUDE = 1.4603545088095868


@dataclass(frozen=True)
class OrbitalBasis:
    """Lowest-M one-body eigenpairs plus the contact-interaction tensor.

    ``orbitals[:, i]`` is the i-th eigenfunction on the grid, orthonormal
    under the DVR weight: weight * sum_x phi_i phi_j = delta_ij. The tensor
    ``interaction[i, j, k, l] = weight * sum_x phi_i phi_j phi_k phi_l`` is
    the two-body matrix element of a unit-strength contact interaction in
    the diagonal DVR approximation; the coupling g multiplies it at use time.
    """

    grid: GridSpec
    size: int
    orbitals: np.ndarray
    energies: np.ndarray
    interaction: np.ndarray

    @property
    def pair_matrix(self) -> np.ndarray:
        """Interaction tensor viewed as an (M^2, M^2) matrix over index pairs."""
        m = self.size
        return self.interaction.reshape(m * m, m * m)


def solve_one_body(grid: GridSpec, trap: TrapParams, m_orbitals: int) -> OrbitalBasis:
    """Diagonalize h = T/M + V and keep the lowest ``m_orbitals`` eigenpairs.

    The global sign of each orbital is fixed by making its largest-magnitude
    grid value positive, so results are reproducible across eigensolver
    backends.
    """
    if not 1 <= m_orbitals <= grid.n_points:
        raise ConfigurationError(
            f"m_orbitals must be in [1, n_points={grid.n_points}], got {m_orbitals}"
        )
    h = one_body_hamiltonian(grid, trap)
    try:
        energies, vectors = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh rarely fails
        raise NumericalError(f"one-body eigensolver failed: {exc}") from exc
    energies = energies[:m_orbitals].copy()
    vectors = vectors[:, :m_orbitals]

    residual = np.max(np.abs(h @ vectors - vectors * energies))
    if residual > 1e-8 * max(1.0, float(np.max(np.abs(energies)))):
        raise NumericalError(
            "one-body eigensolver residual too large", diagnostic=residual
        )

    # DVR-weight normalization and deterministic sign convention.
    orbitals = vectors / np.sqrt(grid.weight)
    for i in range(m_orbitals):
        peak = np.argmax(np.abs(orbitals[:, i]))
        if orbitals[peak, i] < 0:
            orbitals[:, i] = -orbitals[:, i]

    pair = np.einsum("xi,xj->xij", orbitals, orbitals).reshape(
        grid.n_points, m_orbitals * m_orbitals
    )
    interaction = (grid.weight * (pair.T @ pair)).reshape(
        m_orbitals, m_orbitals, m_orbitals, m_orbitals
    )

    orbitals.setflags(write=False)
    energies.setflags(write=False)
    interaction.setflags(write=False)
    return OrbitalBasis(
        grid=grid,
        size=m_orbitals,
        orbitals=orbitals,
        energies=energies,
        interaction=interaction,
    )


def coupling_from_3d(a_s: float, a_perp: float, hbar: float = 1.0, mu: float = 0.5) -> float:
    """Effective 1D interspecies coupling from 3D scattering parameters.

    g = (2 hbar^2 a_s / (mu a_perp^2)) / (1 - |zeta(1/2)| a_s / (sqrt(2) a_perp))

    ``mu`` is the reduced mass (M/2 = 1/2 for equal unit masses in rescaled
    units). This is a convenience converter; production runs normally set the
    coupling directly.
    """
    if not a_perp > 0:
        raise ConfigurationError(f"a_perp must be positive, got {a_perp}")
    if not mu > 0:
        raise ConfigurationError(f"mu must be positive, got {mu}")
    denominator = 1.0 - ZETA_HALF_MAGNITUDE * a_s / (np.sqrt(2.0) * a_perp)
    if abs(denominator) < 1e-9:
        raise ResonanceError(
            "requested scattering length sits on the confinement-induced "
            f"resonance (denominator {denominator:.3e})"
        )
    return float(2.0 * hbar**2 * a_s / (mu * a_perp**2) / denominator)


def orbitals_to_csv(basis: OrbitalBasis, path) -> None:
    """Export grid, energies and orbital amplitudes as CSV for plotting."""
    header = ["x"] + [f"phi_{i}" for i in range(basis.size)]
    data = np.column_stack([basis.grid.points, basis.orbitals])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        fh.write("# energies," + ",".join(f"{e:.17g}" for e in basis.energies) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
