"""Two-species fermionic Fock space over the truncated orbital basis.

Determinants are occupation bitmasks over the M orbitals, enumerated in
lexicographic order of their occupied-index tuples. The many-body state is a
dense complex matrix over (A-determinant x B-determinant) products; the
Hamiltonian action is matrix-free through precomputed single-excitation
tables (Slater-Condon rules) and the kernels module.
"""

from __future__ import annotations

import functools
import itertools
import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError
from .spbasis import OrbitalBasis


@dataclass(eq=False)
class SinglesTable:
    """All nonzero <I'|a+_p a_q|I> entries for one species, grouped by I'.

    ``pq`` packs the orbital pair as p*M + q; ``dst_ptr`` is a CSR-style
    pointer so that entries with destination I' occupy
    ``slice(dst_ptr[I'], dst_ptr[I'+1])``.
    """

    dst: np.ndarray
    src: np.ndarray
    pq: np.ndarray
    sign: np.ndarray
    dst_ptr: np.ndarray


@dataclass(eq=False)
class AnnihilationTable:
    """Nonzero <I-|a_q|I> entries linking an N basis to its N-1 basis."""

    src: np.ndarray
    dst: np.ndarray
    orbital: np.ndarray
    sign: np.ndarray


@dataclass(eq=False)
class DeterminantBasis:
    """Complete determinant basis for N fermions in M orbitals."""

    m_orbitals: int
    n_particles: int
    dets: np.ndarray
    lookup: dict

    def __len__(self) -> int:
        return len(self.dets)

    @functools.cached_property
    def occupations(self) -> np.ndarray:
        """(dim, M) 0/1 matrix of orbital occupations."""
        orbs = np.arange(self.m_orbitals, dtype=np.int64)
        return ((self.dets[:, None] >> orbs[None, :]) & 1).astype(np.float64)

    @functools.cached_property
    def singles(self) -> SinglesTable:
        return _build_singles(self)


@functools.lru_cache(maxsize=None)
def determinant_basis(m_orbitals: int, n_particles: int) -> DeterminantBasis:
    """Canonical (cached) determinant basis for the given sector."""
    if m_orbitals < 1:
        raise ConfigurationError(f"m_orbitals must be >= 1, got {m_orbitals}")
    if not 0 <= n_particles <= m_orbitals:
        raise ConfigurationError(
            f"need 0 <= N <= M, got N={n_particles}, M={m_orbitals}"
        )
    masks = []
    for combo in itertools.combinations(range(m_orbitals), n_particles):
        mask = 0
        for orb in combo:
            mask |= 1 << orb
        masks.append(mask)
    dets = np.array(masks, dtype=np.int64)
    dets.setflags(write=False)
    lookup = {int(mask): index for index, mask in enumerate(masks)}
    return DeterminantBasis(
        m_orbitals=m_orbitals, n_particles=n_particles, dets=dets, lookup=lookup
    )


def enumerate_determinants(m_orbitals: int, n_particles: int) -> DeterminantBasis:
    return determinant_basis(m_orbitals, n_particles)


def _build_singles(basis: DeterminantBasis) -> SinglesTable:
    m = basis.m_orbitals
    records = []
    for src_index, mask in enumerate(int(v) for v in basis.dets):
        occupied = [q for q in range(m) if (mask >> q) & 1]
        for q in occupied:
            below_q = (mask & ((1 << q) - 1)).bit_count()
            removed = mask & ~(1 << q)
            for p in range(m):
                if p != q and (removed >> p) & 1:
                    continue
                below_p = (removed & ((1 << p) - 1)).bit_count()
                dst_index = basis.lookup[removed | (1 << p)]
                sign = -1.0 if (below_q + below_p) & 1 else 1.0
                records.append((dst_index, src_index, p * m + q, sign))
    records.sort()
    dst = np.array([r[0] for r in records], dtype=np.int32)
    src = np.array([r[1] for r in records], dtype=np.int32)
    pq = np.array([r[2] for r in records], dtype=np.int32)
    sign = np.array([r[3] for r in records], dtype=np.float64)
    counts = np.bincount(dst, minlength=len(basis.dets))
    dst_ptr = np.zeros(len(basis.dets) + 1, dtype=np.int64)
    np.cumsum(counts, out=dst_ptr[1:])
    return SinglesTable(dst=dst, src=src, pq=pq, sign=sign, dst_ptr=dst_ptr)


@functools.lru_cache(maxsize=None)
def annihilation_link(m_orbitals: int, n_particles: int) -> AnnihilationTable:
    """Table applying a_q from the (M, N) basis into the (M, N-1) basis."""
    if n_particles < 1:
        raise ConfigurationError("cannot annihilate from an empty species")
    src_basis = determinant_basis(m_orbitals, n_particles)
    dst_basis = determinant_basis(m_orbitals, n_particles - 1)
    src, dst, orbital, sign = [], [], [], []
    for src_index, mask in enumerate(int(v) for v in src_basis.dets):
        for q in range(m_orbitals):
            if not (mask >> q) & 1:
                continue
            below = (mask & ((1 << q) - 1)).bit_count()
            src.append(src_index)
            dst.append(dst_basis.lookup[mask & ~(1 << q)])
            orbital.append(q)
            sign.append(-1.0 if below & 1 else 1.0)
    return AnnihilationTable(
        src=np.array(src, dtype=np.int32),
        dst=np.array(dst, dtype=np.int32),
        orbital=np.array(orbital, dtype=np.int32),
        sign=np.array(sign, dtype=np.float64),
    )


@dataclass
class CIState:
    """Full-CI state: complex coefficients over A x B determinant products."""

    basis_a: DeterminantBasis
    basis_b: DeterminantBasis
    coeff: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        expected = (len(self.basis_a), len(self.basis_b))
        self.coeff = np.asarray(self.coeff, dtype=np.complex128)
        if self.coeff.shape != expected:
            raise ConfigurationError(
                f"coefficient shape {self.coeff.shape} does not match bases {expected}"
            )

    @property
    def n_a(self) -> int:
        return self.basis_a.n_particles

    @property
    def n_b(self) -> int:
        return self.basis_b.n_particles

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeff))

    def normalized(self) -> "CIState":
        return CIState(self.basis_a, self.basis_b, self.coeff / self.norm(), self.time)

    def copy(self) -> "CIState":
        return CIState(self.basis_a, self.basis_b, self.coeff.copy(), self.time)


def product_ground_state(basis: OrbitalBasis, n_a: int, n_b: int) -> CIState:
    """Noninteracting ground determinant |0..N_A-1> x |0..N_B-1>."""
    ba = determinant_basis(basis.size, n_a)
    bb = determinant_basis(basis.size, n_b)
    coeff = np.zeros((len(ba), len(bb)), dtype=np.complex128)
    ia = ba.lookup[(1 << n_a) - 1]
    ib = bb.lookup[(1 << n_b) - 1]
    coeff[ia, ib] = 1.0
    return CIState(ba, bb, coeff, 0.0)


def _check_dimensions(state: CIState, basis: OrbitalBasis) -> None:
    if state.basis_a.m_orbitals != basis.size or state.basis_b.m_orbitals != basis.size:
        raise ConfigurationError(
            "state orbital count "
            f"({state.basis_a.m_orbitals}, {state.basis_b.m_orbitals}) "
            f"does not match basis size {basis.size}"
        )


def occupied_energy_sums(det_basis: DeterminantBasis, energies: np.ndarray) -> np.ndarray:
    return det_basis.occupations @ energies


def apply_hamiltonian(state: CIState, basis: OrbitalBasis, g: float) -> CIState:
    """Matrix-free H|psi>: diagonal orbital energies plus the contact coupling.

    The one-body part is diagonal because the orbitals are eigenfunctions of
    the one-body Hamiltonian; the interspecies part couples all A singles to
    all B singles with Slater-Condon signs through the interaction tensor.
    """
    _check_dimensions(state, basis)
    esum_a = occupied_energy_sums(state.basis_a, basis.energies)
    esum_b = occupied_energy_sums(state.basis_b, basis.energies)
    out = esum_a[:, None] * state.coeff + state.coeff * esum_b[None, :]
    if g != 0.0 and state.n_a > 0 and state.n_b > 0:
        out += kernels.interaction_apply(
            state.coeff,
            basis.pair_matrix,
            state.basis_a.singles,
            state.basis_b.singles,
            g,
        )
    return CIState(state.basis_a, state.basis_b, out, state.time)


@dataclass
class SchmidtSpectrum:
    """Species-bipartition Schmidt data: weights plus coefficient vectors."""

    lambdas: np.ndarray
    vectors_a: np.ndarray
    vectors_b: np.ndarray


def schmidt_decompose(state: CIState) -> SchmidtSpectrum:
    """SVD of the coefficient matrix; weights are squared singular values."""
    u, s, vh = np.linalg.svd(state.coeff, full_matrices=False)
    return SchmidtSpectrum(lambdas=s**2, vectors_a=u.T.copy(), vectors_b=vh.copy())


def excitation_images(coeff: np.ndarray, singles: SinglesTable, m_orbitals: int, axis: int):
    """Stack of E_pq|psi> images for one species, shape (M^2, dimA, dimB).

    Each (pq, destination) slot has a unique source determinant, so the
    stack is filled by plain assignment.
    """
    work = coeff if axis == 0 else coeff.T
    m2 = m_orbitals * m_orbitals
    images = np.zeros((m2,) + work.shape, dtype=coeff.dtype)
    images[singles.pq, singles.dst] = singles.sign[:, None] * work[singles.src]
    if axis == 1:
        images = images.transpose(0, 2, 1)
    return images


def apply_annihilation(coeff: np.ndarray, amplitudes: np.ndarray, m_orbitals: int,
                       n_particles: int, axis: int) -> np.ndarray:
    """Apply the field operator sum_q amplitudes[q] a_q to one species."""
    link = annihilation_link(m_orbitals, n_particles)
    work = coeff if axis == 0 else coeff.T
    dim_out = len(determinant_basis(m_orbitals, n_particles - 1))
    out = np.zeros((dim_out, work.shape[1]), dtype=np.complex128)
    weights = amplitudes[link.orbital] * link.sign
    np.add.at(out, link.dst, weights[:, None] * work[link.src])
    return out if axis == 0 else out.T


_CI_MAGIC = b"FWCIST01"


def save_ci_state(path, state: CIState, g: float) -> None:
    """Checkpoint: header (M, N_A, N_B, time, g) + raw little-endian complex."""
    header = _CI_MAGIC + struct.pack(
        "<iiidd",
        state.basis_a.m_orbitals,
        state.n_a,
        state.n_b,
        float(state.time),
        float(g),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.coeff, dtype="<c16").tobytes())


def load_ci_state(path):
    """Load a checkpoint; returns (CIState, g)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_CI_MAGIC))
        if magic != _CI_MAGIC:
            raise ConfigurationError(f"{path}: not a CI checkpoint file")
        m, n_a, n_b, time, g = struct.unpack("<iiidd", fh.read(28))
        raw = fh.read()
    ba = determinant_basis(m, n_a)
    bb = determinant_basis(m, n_b)
    coeff = np.frombuffer(raw, dtype="<c16").astype(np.complex128)
    expected = len(ba) * len(bb)
    if coeff.size != expected:
        raise ConfigurationError(
            f"{path}: payload holds {coeff.size} coefficients, expected {expected}"
        )
    return CIState(ba, bb, coeff.reshape(len(ba), len(bb)), time), g
