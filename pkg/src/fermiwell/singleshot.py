"""Simulated in-situ absorption imaging with sequential state collapse.

One shot draws particle positions species by species: each accepted position
applies the field operator at that point to the many-body state (reducing
the particle number and reshaping all remaining conditional densities), and
the collected positions are convolved with a Gaussian point-spread function.
Averaging many shots reproduces the PSF-blurred one-body density.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, SamplingError
from .fockspace import CIState, apply_annihilation, determinant_basis
from .observables import orbital_rdm
from .spbasis import OrbitalBasis

_MAX_PROPOSALS = 1_000_000


@dataclass
class ShotConfig:
    """Imaging parameters: PSF width, image grid, ordering, RNG seed."""

    psf_width: float = 1.0
    image_grid: np.ndarray | None = None
    species_order: str = "a_then_b"
    rng_seed: int = 0
    n_shots: int = 1

    def __post_init__(self):
        if not self.psf_width > 0:
            raise ConfigurationError(f"psf_width must be positive, got {self.psf_width}")
        if self.species_order not in ("a_then_b", "b_then_a"):
            raise ConfigurationError(
                f"species_order must be a_then_b|b_then_a, got {self.species_order!r}"
            )
        if self.n_shots < 1:
            raise ConfigurationError(f"n_shots must be >= 1, got {self.n_shots}")

    def order(self):
        return ("A", "B") if self.species_order == "a_then_b" else ("B", "A")

    def resolve_grid(self, basis: OrbitalBasis) -> np.ndarray:
        if self.image_grid is not None:
            return np.asarray(self.image_grid, dtype=float)
        return basis.grid.points


@dataclass
class ShotImage:
    """Sampled positions plus PSF-convolved intensity profiles."""

    positions_a: np.ndarray
    positions_b: np.ndarray
    intensity_a: np.ndarray
    intensity_b: np.ndarray
    image_grid: np.ndarray
    time: float = 0.0


@dataclass
class ShotAverage:
    """Mean and sample variance over shots, plus the analytic target."""

    image_grid: np.ndarray
    mean_a: np.ndarray
    mean_b: np.ndarray
    variance_a: np.ndarray
    variance_b: np.ndarray
    target_a: np.ndarray
    target_b: np.ndarray
    n_shots: int
    images: list = field(default_factory=list)


def _density_in_orbitals(state: CIState, species: str) -> np.ndarray:
    rho = orbital_rdm(state, species)
    nrm2 = np.vdot(state.coeff, state.coeff).real
    return rho / nrm2


def species_density_on_grid(state: CIState, species: str, basis: OrbitalBasis) -> np.ndarray:
    """One-body density of a species on the simulation grid (trace N)."""
    rho = _density_in_orbitals(state, species)
    return np.real(np.einsum("xp,pq,xq->x", basis.orbitals, rho, basis.orbitals))


def annihilate_at(state: CIState, species: str, x: float, basis: OrbitalBasis) -> CIState:
    """Apply the species field operator at position x and renormalize.

    The position must be (close to) a grid node; orbital amplitudes are taken
    at the nearest node. Particle number of the species drops by one. The
    input state is never modified.
    """
    if species not in ("A", "B"):
        raise ConfigurationError(f"species must be 'A' or 'B', got {species!r}")
    number = state.n_a if species == "A" else state.n_b
    if number < 1:
        raise ConfigurationError(f"species {species} has no particle to annihilate")
    index = int(np.argmin(np.abs(basis.grid.points - x)))
    amplitudes = basis.orbitals[index, :]
    axis = 0 if species == "A" else 1
    m = basis.size
    coeff = apply_annihilation(state.coeff, amplitudes, m, number, axis)
    norm = np.linalg.norm(coeff)
    if norm < 1e-14:
        raise SamplingError(
            f"annihilation at x={x:.4f} produced a numerically null state"
        )
    if species == "A":
        ba = determinant_basis(m, number - 1)
        return CIState(ba, state.basis_b, coeff / norm, state.time)
    bb = determinant_basis(m, number - 1)
    return CIState(state.basis_a, bb, coeff / norm, state.time)


def _draw_node(rng, density: np.ndarray) -> int:
    """Rejection sampling: uniform node, uniform threshold below the maximum."""
    top = float(density.max())
    if top <= 0:
        raise SamplingError("cannot sample from a nonpositive density")
    for _ in range(_MAX_PROPOSALS):
        index = int(rng.integers(density.size))
        if density[index] > rng.uniform(0.0, top):
            return index
    raise SamplingError(f"rejection sampling exceeded {_MAX_PROPOSALS} proposals")


def gaussian_image(positions, image_grid, psf_width: float) -> np.ndarray:
    """Sum of unit-area Gaussians centered on the sampled positions."""
    positions = np.asarray(positions, dtype=float)
    if positions.size == 0:
        return np.zeros(len(image_grid))
    prefactor = 1.0 / (np.sqrt(2.0 * np.pi) * psf_width)
    diff = image_grid[None, :] - positions[:, None]
    return prefactor * np.exp(-(diff**2) / (2.0 * psf_width**2)).sum(axis=0)


def sample_shot(state: CIState, cfg: ShotConfig, basis: OrbitalBasis,
                rng=None) -> ShotImage:
    """Draw one full shot: all particles of the first species, then the rest.

    Every accepted position collapses the state before the next draw, so all
    correlations enter the sampled configuration. Operates on a private copy.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    work = state.normalized()
    points = basis.grid.points
    positions = {"A": [], "B": []}
    for species in cfg.order():
        count = work.n_a if species == "A" else work.n_b
        for _ in range(count):
            density = species_density_on_grid(work, species, basis)
            index = _draw_node(rng, density)
            positions[species].append(float(points[index]))
            work = annihilate_at(work, species, points[index], basis)
    image_grid = cfg.resolve_grid(basis)
    return ShotImage(
        positions_a=np.array(positions["A"]),
        positions_b=np.array(positions["B"]),
        intensity_a=gaussian_image(positions["A"], image_grid, cfg.psf_width),
        intensity_b=gaussian_image(positions["B"], image_grid, cfg.psf_width),
        image_grid=image_grid,
        time=state.time,
    )


def analytic_average(state: CIState, cfg: ShotConfig, basis: OrbitalBasis, species: str):
    """Closed-form shot average: PSF convolved with the one-body density."""
    image_grid = cfg.resolve_grid(basis)
    density = species_density_on_grid(state, species, basis)
    prefactor = 1.0 / (np.sqrt(2.0 * np.pi) * cfg.psf_width)
    kernel = prefactor * np.exp(
        -((image_grid[:, None] - basis.grid.points[None, :]) ** 2)
        / (2.0 * cfg.psf_width**2)
    )
    return basis.grid.weight * (kernel @ density)


def average_shots(state: CIState, cfg: ShotConfig, basis: OrbitalBasis,
                  keep_images: bool = True) -> ShotAverage:
    """Average ``cfg.n_shots`` independent shots (one spawned RNG stream each)."""
    streams = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.n_shots)
    images = [
        sample_shot(state, cfg, basis, rng=np.random.default_rng(stream))
        for stream in streams
    ]
    stack_a = np.stack([im.intensity_a for im in images])
    stack_b = np.stack([im.intensity_b for im in images])
    return ShotAverage(
        image_grid=images[0].image_grid,
        mean_a=stack_a.mean(axis=0),
        mean_b=stack_b.mean(axis=0),
        variance_a=stack_a.var(axis=0, ddof=0),
        variance_b=stack_b.var(axis=0, ddof=0),
        target_a=analytic_average(state, cfg, basis, "A"),
        target_b=analytic_average(state, cfg, basis, "B"),
        n_shots=cfg.n_shots,
        images=images if keep_images else [],
    )
