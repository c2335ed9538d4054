"""Measured quantities: reduced densities, correlations, overlap, analysis.

All reduced density matrices use the trace-N convention: the one-body
density integrates (DVR weight) to the particle number, and the diagonal
two-body density integrates to N(N-1) within a species and N_A*N_B across
species. With that convention the normalized correlation functions equal one
for uncorrelated states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal

from .errors import AnalysisError, ConfigurationError, UndefinedInputError
from .fockspace import CIState, excitation_images
from .solvers import HFState
from .spbasis import OrbitalBasis

_SPECIES = ("A", "B")


def _species_axis(species: str) -> int:
    if species not in _SPECIES:
        raise ConfigurationError(f"species must be 'A' or 'B', got {species!r}")
    return 0 if species == "A" else 1


@dataclass
class OneBodyRDM:
    """One-body reduced density matrix of one species on the grid."""

    species: str
    x: np.ndarray
    weight: float
    matrix: np.ndarray
    populations: np.ndarray
    particle_number: int

    @property
    def density(self) -> np.ndarray:
        return np.real(np.diag(self.matrix))


@dataclass
class CorrelationMap:
    """Normalized correlation function sampled on grid x grid.

    ``trivial`` flags maps that are zero by construction (intraspecies
    two-body function of a single particle). Entries where either density
    falls below the mask floor are NaN.
    """

    kind: str
    x: np.ndarray
    values: np.ndarray
    time: float = 0.0
    trivial: bool = False


@dataclass
class ObservableSeries:
    """Scalar time series plus density carpets collected during a run."""

    times: np.ndarray
    energy: np.ndarray
    norm: np.ndarray
    overlap: np.ndarray
    x2_a: np.ndarray
    x2_b: np.ndarray
    populations_a: np.ndarray
    populations_b: np.ndarray
    densities_a: np.ndarray
    densities_b: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ConfigurationError("series times must be strictly increasing")


def orbital_rdm(state: CIState, species: str) -> np.ndarray:
    """<a+_p a_q> in the orbital basis for the chosen species."""
    axis = _species_axis(species)
    work = state.coeff if axis == 0 else state.coeff.T
    det_basis = state.basis_a if axis == 0 else state.basis_b
    singles = det_basis.singles
    m = det_basis.m_orbitals
    overlaps = np.einsum("ij,ij->i", work[singles.dst].conj(), work[singles.src])
    rho = np.zeros(m * m, dtype=np.complex128)
    np.add.at(rho, singles.pq, singles.sign * overlaps)
    return rho.reshape(m, m)


def one_body_rdm(state, species: str, basis: OrbitalBasis) -> OneBodyRDM:
    """Grid-space one-body RDM for a CI or mean-field state."""
    grid = basis.grid
    if isinstance(state, CIState):
        rho_orb = orbital_rdm(state, species)
        nrm2 = np.vdot(state.coeff, state.coeff).real
        rho_orb = rho_orb / nrm2
        rho_orb = 0.5 * (rho_orb + rho_orb.conj().T)
        populations = np.linalg.eigvalsh(rho_orb)[::-1].copy()
        matrix = basis.orbitals @ rho_orb @ basis.orbitals.T
        number = state.n_a if species == "A" else state.n_b
    elif isinstance(state, HFState):
        orbitals = state.orbitals_a if species == "A" else state.orbitals_b
        matrix = orbitals.T.conj() @ orbitals
        # matrix[x, x'] = sum_j phi_j*(x) phi_j(x'); populations exactly one.
        number = orbitals.shape[0]
        populations = np.ones(number)
    else:
        raise ConfigurationError(f"unsupported state type {type(state).__name__}")
    return OneBodyRDM(
        species=species,
        x=grid.points,
        weight=grid.weight,
        matrix=matrix,
        populations=populations,
        particle_number=number,
    )


def g1_map(rdm: OneBodyRDM, floor_frac: float = 1e-8) -> CorrelationMap:
    """First-order coherence rho(x,x') / sqrt(rho(x) rho(x')), NaN-masked."""
    density = rdm.density
    floor = floor_frac * max(float(density.max()), 0.0)
    safe = np.where(density > floor, density, np.nan)
    with np.errstate(invalid="ignore"):
        values = rdm.matrix / np.sqrt(np.outer(safe, safe))
    return CorrelationMap(kind="g1", x=rdm.x, values=values)


def _pair_products(orbitals: np.ndarray) -> np.ndarray:
    n, m = orbitals.shape
    return np.einsum("xp,xq->xpq", orbitals, orbitals).reshape(n, m * m)


def two_body_orbital_intra(state: CIState, species: str) -> np.ndarray:
    """Gamma[p,q,r,s] = <a+_p a+_q a_r a_s> for one species."""
    axis = _species_axis(species)
    det_basis = state.basis_a if axis == 0 else state.basis_b
    m = det_basis.m_orbitals
    images = excitation_images(state.coeff, det_basis.singles, m, axis)
    flat = images.reshape(m * m, -1)
    # <E_ab E_cd> = <E_ba psi | E_cd psi>
    e_products = (flat.conj() @ flat.T).reshape(m, m, m, m)
    expectation = np.transpose(e_products, (1, 0, 2, 3))  # [a,b,c,d] = <E_ab E_cd>
    rho1 = orbital_rdm(state, species)
    gamma = np.transpose(expectation, (0, 2, 3, 1)).copy()  # [p,s,q,r] -> [p,q,r,s]
    # Gamma_pqrs = <E_ps E_qr> - delta_qs <E_pr>
    delta = np.eye(m)
    gamma -= np.einsum("qs,pr->pqrs", delta, rho1)
    nrm2 = np.vdot(state.coeff, state.coeff).real
    return gamma / nrm2


def two_body_orbital_inter(state: CIState) -> np.ndarray:
    """G[(p,q),(r,s)] = <E^A_pq E^B_rs> over both species."""
    m = state.basis_a.m_orbitals
    images_a = excitation_images(state.coeff, state.basis_a.singles, m, 0).reshape(
        m, m, -1
    )
    images_b = excitation_images(state.coeff, state.basis_b.singles, m, 1).reshape(
        m * m, -1
    )
    # <E^A_pq E^B_rs> = <E^A_qp psi | E^B_rs psi>
    flipped = np.transpose(images_a, (1, 0, 2)).reshape(m * m, -1)
    nrm2 = np.vdot(state.coeff, state.coeff).real
    return (flipped.conj() @ images_b.T) / nrm2


def g2_map(state: CIState, species_pair, basis: OrbitalBasis,
           floor_frac: float = 1e-8) -> CorrelationMap:
    """Normalized diagonal two-body density rho2(x,x') / (rho(x) rho'(x')).

    For an intraspecies pair with fewer than two particles the map is zero by
    construction and flagged trivial.
    """
    sigma, sigma_prime = species_pair
    for tag in (sigma, sigma_prime):
        _species_axis(tag)
    grid = basis.grid
    kind = f"g2-{'intra' if sigma == sigma_prime else 'inter'}"
    pair_grid = _pair_products(basis.orbitals)

    if sigma == sigma_prime:
        number = state.n_a if sigma == "A" else state.n_b
        if number < 2:
            values = np.zeros((grid.n_points, grid.n_points))
            return CorrelationMap(
                kind=kind, x=grid.points, values=values, time=state.time, trivial=True
            )
        m = basis.size
        gamma = two_body_orbital_intra(state, sigma)
        # rho2(x,x') = sum phi_p(x) phi_q(x') phi_r(x') phi_s(x) Gamma_pqrs
        gamma_mat = np.transpose(gamma, (0, 3, 1, 2)).reshape(m * m, m * m)
        rho2 = np.real(pair_grid @ gamma_mat @ pair_grid.T)
        rho_row = one_body_rdm(state, sigma, basis).density
        rho_col = rho_row
    else:
        inter = two_body_orbital_inter(state)
        if sigma == "A":
            rho2 = np.real(pair_grid @ inter @ pair_grid.T)
        else:
            rho2 = np.real(pair_grid @ inter.T @ pair_grid.T)
        rho_row = one_body_rdm(state, sigma, basis).density
        rho_col = one_body_rdm(state, sigma_prime, basis).density

    floor_row = floor_frac * max(float(rho_row.max()), 0.0)
    floor_col = floor_frac * max(float(rho_col.max()), 0.0)
    safe_row = np.where(rho_row > floor_row, rho_row, np.nan)
    safe_col = np.where(rho_col > floor_col, rho_col, np.nan)
    with np.errstate(invalid="ignore"):
        values = rho2 / np.outer(safe_row, safe_col)
    return CorrelationMap(kind=kind, x=grid.points, values=values, time=state.time)


def overlap_lambda(rho_a: np.ndarray, rho_b: np.ndarray) -> float:
    """Normalized density overlap; 1 = miscible, 0 = fully phase separated.

    Invariant under rescaling either density, so no quadrature weight enters.
    """
    rho_a = np.asarray(rho_a, dtype=float)
    rho_b = np.asarray(rho_b, dtype=float)
    if rho_a.shape != rho_b.shape:
        raise ConfigurationError("density arrays must share a grid")
    if np.any(rho_a < -1e-12) or np.any(rho_b < -1e-12):
        raise UndefinedInputError("densities must be nonnegative")
    denom_a = float(np.sum(rho_a**2))
    denom_b = float(np.sum(rho_b**2))
    if denom_a == 0.0 or denom_b == 0.0:
        raise UndefinedInputError("overlap undefined for an identically zero density")
    cross = float(np.sum(rho_a * rho_b))
    return cross**2 / (denom_a * denom_b)


def _region_slice(x: np.ndarray, x_lo: float, x_hi: float):
    inside = np.nonzero((x >= x_lo) & (x <= x_hi))[0]
    if inside.size == 0:
        raise ConfigurationError(f"region [{x_lo}, {x_hi}] contains no grid points")
    return slice(inside[0], inside[-1] + 1)


def filament_positions(x: np.ndarray, density: np.ndarray, region,
                       prominence: float = 0.05) -> np.ndarray:
    """Positions of local density maxima inside the region.

    A maximum counts when its topographic prominence exceeds ``prominence``
    times the largest density value inside the region.
    """
    if not 0 < prominence < 1:
        raise ConfigurationError(f"prominence must be in (0, 1), got {prominence}")
    window = _region_slice(x, *region)
    segment = np.asarray(density, dtype=float)[window]
    top = float(segment.max())
    if top <= 0:
        return np.array([])
    peaks, _ = scipy.signal.find_peaks(segment, prominence=prominence * top)
    return x[window][peaks]


def count_filaments(x: np.ndarray, density: np.ndarray, region,
                    prominence: float = 0.05) -> int:
    return int(filament_positions(x, density, region, prominence).size)


def breathing_frequency(times: np.ndarray, values: np.ndarray,
                        min_periods: float = 2.0) -> float:
    """Angular frequency of the dominant nonzero spectral peak.

    Hann-windowed, zero-padded discrete Fourier transform with parabolic
    peak interpolation. Raises when no peak stands above the noise floor or
    when the resolved mode completes fewer than ``min_periods`` within the
    series.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size != values.size or times.size < 8:
        raise ConfigurationError("need matching series with at least 8 samples")
    steps = np.diff(times)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]:
        raise ConfigurationError("series must be uniformly sampled in time")
    dt = float(steps[0])
    pad_factor = 16
    signal = values - values.mean()
    window = np.hanning(signal.size)
    padded = signal.size * pad_factor
    spectrum = np.abs(np.fft.rfft(signal * window, n=padded))
    freqs = np.fft.rfftfreq(padded, d=dt)
    # Skip the main lobe of the window around DC (two unpadded bins wide).
    k_min = 2 * pad_factor
    if spectrum.size <= k_min + 2:
        raise AnalysisError("series too short to resolve any mode")
    body = spectrum[k_min:]
    k_peak = int(np.argmax(body)) + k_min
    peak = spectrum[k_peak]
    noise = np.median(body)
    if not peak > 5.0 * noise:
        raise AnalysisError("no spectral peak above the noise floor")
    # Parabolic refinement on log magnitude.
    if 0 < k_peak < spectrum.size - 1:
        lm, l0, lp = np.log(spectrum[k_peak - 1 : k_peak + 2] + 1e-300)
        denom = lm - 2 * l0 + lp
        shift = 0.5 * (lm - lp) / denom if denom != 0 else 0.0
        shift = float(np.clip(shift, -0.5, 0.5))
    else:
        shift = 0.0
    frequency = (freqs[k_peak] + shift * (freqs[1] - freqs[0])) * 2.0 * np.pi
    span = times[-1] - times[0]
    if frequency * span < 2.0 * np.pi * min_periods:
        raise AnalysisError(
            f"resolved mode completes fewer than {min_periods} periods in the series"
        )
    return float(frequency)


def density_deviation(times: np.ndarray, rhos: np.ndarray, times_ref: np.ndarray,
                      rhos_ref: np.ndarray, n_sigma: int, weight: float) -> np.ndarray:
    """Integrated absolute density deviation (1/2N) * int |rho - rho_ref| dx."""
    times = np.asarray(times, dtype=float)
    times_ref = np.asarray(times_ref, dtype=float)
    rhos = np.asarray(rhos, dtype=float)
    rhos_ref = np.asarray(rhos_ref, dtype=float)
    if times.shape != times_ref.shape or not np.allclose(times, times_ref, atol=1e-9):
        raise ConfigurationError("deviation requires identical time sampling")
    if rhos.shape != rhos_ref.shape:
        raise ConfigurationError("deviation requires identical grids")
    return weight * np.sum(np.abs(rhos - rhos_ref), axis=-1) / (2.0 * n_sigma)


def mean_square_position(density: np.ndarray, x: np.ndarray, weight: float,
                         number: int) -> float:
    """Per-particle <x^2> of a species from its one-body density."""
    return float(weight * np.sum(x**2 * density) / number)
