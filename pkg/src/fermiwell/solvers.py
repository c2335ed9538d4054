"""Ground states and real-time propagation at both fidelity levels.

Full CI uses restarted Lanczos with full reorthogonalization for the ground
state and short-iterate Krylov exponentials with adaptive steps for real-time
evolution. The mean-field (one determinant per species) solver works directly
on the grid: imaginary-time split-operator relaxation with a parity-breaking
seed for the ground state, and the same split-operator scheme in real time.
Same-species fermions are noninteracting, so each species only feels the
other's density; the mean-field operator is identical for all orbitals of a
species, which preserves per-species orthonormality exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.linalg

from .errors import ConfigurationError, NumericalError
from .fockspace import CIState, apply_hamiltonian, product_ground_state
from .grid import GridSpec, TrapParams, potential_at
from .spbasis import OrbitalBasis, solve_one_body


@dataclass(frozen=True)
class PropagationConfig:
    """Time-stepping controls shared by the CI and mean-field propagators.

    ``dt`` is the initial/maximum Krylov step for CI and the fixed
    split-operator substep for the mean-field solver. Snapshots are emitted
    every ``record_stride`` of evolution time.
    """

    dt: float = 0.05
    t_final: float = 100.0
    krylov_dim: int = 12
    tol: float = 1e-9
    record_stride: float = 0.25

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if not self.t_final > 0:
            raise ConfigurationError(f"t_final must be positive, got {self.t_final}")
        if self.krylov_dim < 2:
            raise ConfigurationError(f"krylov_dim must be >= 2, got {self.krylov_dim}")
        if not self.tol > 0:
            raise ConfigurationError(f"tol must be positive, got {self.tol}")
        if not self.record_stride > 0:
            raise ConfigurationError(
                f"record_stride must be positive, got {self.record_stride}"
            )

    def record_times(self) -> np.ndarray:
        n_rec = int(np.floor(self.t_final / self.record_stride + 1e-9))
        times = np.arange(1, n_rec + 1) * self.record_stride
        if times.size == 0 or times[-1] < self.t_final - 1e-9:
            times = np.append(times, self.t_final)
        return times


def energy_expectation(state: CIState, basis: OrbitalBasis, g: float) -> float:
    """<psi|H|psi> / <psi|psi>; the imaginary part vanishes for hermitian H."""
    hpsi = apply_hamiltonian(state, basis, g)
    num = np.vdot(state.coeff, hpsi.coeff)
    den = np.vdot(state.coeff, state.coeff).real
    return float(num.real / den)


def _lanczos_lowest(matvec, v0, tol, max_space, max_restarts):
    """Restarted Lanczos with full (twice-repeated) reorthogonalization."""
    dim = v0.size
    v = v0 / np.linalg.norm(v0)
    if dim == 1:
        e = float(np.vdot(v, matvec(v)).real)
        return v, e, 0.0
    max_space = min(max_space, dim)
    residual = np.inf
    for _ in range(max_restarts):
        vecs = np.empty((max_space, dim), dtype=np.complex128)
        vecs[0] = v
        alphas, betas = [], []
        j = 0
        while True:
            w = matvec(vecs[j])
            alphas.append(float(np.vdot(vecs[j], w).real))
            w -= alphas[-1] * vecs[j]
            if j > 0:
                w -= betas[-1] * vecs[j - 1]
            for _ in range(2):
                w -= vecs[: j + 1].T @ (vecs[: j + 1].conj() @ w)
            beta = float(np.linalg.norm(w))
            theta, s = scipy.linalg.eigh_tridiagonal(alphas, betas)
            estimate = beta * abs(s[-1, 0])
            if estimate < 0.1 * tol or beta < 1e-13 or j + 1 >= max_space:
                break
            betas.append(beta)
            j += 1
            vecs[j] = w / beta
        ritz = vecs[: len(alphas)].T @ s[:, 0]
        ritz /= np.linalg.norm(ritz)
        h_ritz = matvec(ritz)
        energy = float(np.vdot(ritz, h_ritz).real)
        residual = float(np.linalg.norm(h_ritz - energy * ritz))
        if residual < tol:
            return ritz, energy, residual
        v = ritz
    raise NumericalError(
        f"Lanczos did not converge: residual {residual:.3e} after "
        f"{max_restarts} restarts",
        diagnostic=residual,
    )


def ground_state_ci(basis: OrbitalBasis, g: float, n_a: int, n_b: int,
                    tol: float = 1e-10, max_space: int = 60,
                    max_restarts: int = 400) -> CIState:
    """Lowest eigenvector of H, started from the noninteracting determinant.

    The start vector carries a small deterministic admixture of every basis
    state: strong repulsion can push the global ground state into a symmetry
    sector orthogonal to the bare determinant, which a symmetry-preserving
    Krylov space could never leave.
    """
    start = product_ground_state(basis, n_a, n_b)
    shape = start.coeff.shape

    def matvec(vec):
        trial = CIState(start.basis_a, start.basis_b, vec.reshape(shape))
        return apply_hamiltonian(trial, basis, g).coeff.ravel()

    v0 = start.coeff.ravel().astype(np.complex128)
    v0 += 1e-2 * np.sin(1.2345 * (np.arange(v0.size) + 1.0))
    vec, _, _ = _lanczos_lowest(matvec, v0, tol, max_space, max_restarts)
    coeff = vec.reshape(shape)
    # Fix the global phase deterministically: largest entry real positive.
    peak = np.argmax(np.abs(coeff))
    phase = coeff.flat[peak] / abs(coeff.flat[peak])
    return CIState(start.basis_a, start.basis_b, coeff / phase, 0.0)


def _krylov_step(matvec, psi, h_request, m, tol):
    """One adaptive Lanczos-exponential step exp(-i H h) psi.

    The Krylov basis is independent of the step size, so the step is shrunk
    against the leaked-amplitude estimate without extra matvecs.
    """
    nrm = np.linalg.norm(psi)
    vecs = [psi / nrm]
    alphas, betas = [], []
    breakdown = False
    beta_last = 0.0
    for j in range(m):
        w = matvec(vecs[j])
        alphas.append(float(np.vdot(vecs[j], w).real))
        w -= alphas[-1] * vecs[j]
        if j > 0:
            w -= betas[-1] * vecs[j - 1]
        basis_mat = np.stack(vecs)
        for _ in range(2):
            w -= basis_mat.T @ (basis_mat.conj() @ w)
        beta = float(np.linalg.norm(w))
        if beta < 1e-14 * max(1.0, abs(alphas[-1])):
            breakdown = True
            break
        if j < m - 1:
            betas.append(beta)
            vecs.append(w / beta)
        else:
            beta_last = beta
    theta, s = scipy.linalg.eigh_tridiagonal(alphas, betas)
    h = h_request
    while True:
        u = s @ (np.exp(-1j * h * theta) * s[0, :])
        error = 0.0 if breakdown else abs(beta_last * u[-1])
        if error <= tol or h < 1e-12:
            break
        h *= 0.5
    psi_new = (np.stack(vecs).T @ u) * nrm
    if breakdown:
        dt_next = 2.0 * h
    else:
        growth = (tol / max(error, 1e-300)) ** (1.0 / m)
        dt_next = h * min(2.0, max(0.3, 0.9 * growth))
    return psi_new, h, dt_next


def propagate_ci(state: CIState, basis: OrbitalBasis, g: float,
                 cfg: PropagationConfig):
    """Yield snapshots of exp(-i H t)|psi> on the record-time lattice.

    The first yielded snapshot is the (copied) initial state; the Krylov
    substeps are capped so every record time is hit exactly.
    """
    shape = state.coeff.shape
    basis_a, basis_b = state.basis_a, state.basis_b

    def matvec(vec):
        trial = CIState(basis_a, basis_b, vec.reshape(shape))
        return apply_hamiltonian(trial, basis, g).coeff.ravel()

    t0 = state.time
    yield state.copy()
    psi = state.coeff.ravel().astype(np.complex128).copy()
    t = 0.0
    dt = min(cfg.dt, cfg.record_stride)
    for t_record in cfg.record_times():
        while t < t_record - 1e-12:
            h_request = min(dt, t_record - t)
            psi, h_used, dt_next = _krylov_step(
                matvec, psi, h_request, cfg.krylov_dim, cfg.tol
            )
            if h_used <= 1e-12:
                raise NumericalError("Krylov step size underflow", diagnostic=h_used)
            t += h_used
            dt = dt_next
        yield CIState(basis_a, basis_b, psi.reshape(shape).copy(), t0 + t)


@dataclass
class HFState:
    """One Slater determinant per species: complex orbitals on the grid."""

    orbitals_a: np.ndarray
    orbitals_b: np.ndarray
    time: float = 0.0

    @property
    def n_a(self) -> int:
        return self.orbitals_a.shape[0]

    @property
    def n_b(self) -> int:
        return self.orbitals_b.shape[0]

    def copy(self) -> "HFState":
        return HFState(self.orbitals_a.copy(), self.orbitals_b.copy(), self.time)


def _dst_ortho(arr):
    """Orthonormal DST-I along the last axis, applied to complex data."""
    return scipy.fft.dst(arr.real, type=1, norm="ortho", axis=-1) + 1j * scipy.fft.dst(
        arr.imag, type=1, norm="ortho", axis=-1
    )


def species_density(orbitals: np.ndarray) -> np.ndarray:
    """One-body density of a determinant; integrates (DVR weight) to N."""
    return np.sum(np.abs(orbitals) ** 2, axis=0)


def _lowdin(orbitals: np.ndarray, weight: float) -> np.ndarray:
    if orbitals.shape[0] == 0:
        return orbitals
    overlap = weight * (orbitals.conj() @ orbitals.T)
    vals, vecs = np.linalg.eigh(overlap)
    if np.min(vals) < 1e-12:
        raise NumericalError("orbital set became linearly dependent", diagnostic=vals)
    inv_sqrt = (vecs * (1.0 / np.sqrt(vals))) @ vecs.conj().T
    return inv_sqrt @ orbitals


def orthonormality_defect(orbitals: np.ndarray, weight: float) -> float:
    overlap = weight * (orbitals.conj() @ orbitals.T)
    return float(np.max(np.abs(overlap - np.eye(orbitals.shape[0]))))


def hf_energy(state: HFState, grid: GridSpec, trap: TrapParams, g: float) -> float:
    """Mean-field energy: one-body sums plus g * integral of rho_A rho_B."""
    energies = grid.mode_energies(trap.mass)
    v_trap = potential_at(grid.points, trap)
    total = 0.0
    for orbitals in (state.orbitals_a, state.orbitals_b):
        if orbitals.shape[0] == 0:
            continue
        modes = _dst_ortho(orbitals * np.sqrt(grid.weight))
        total += float(np.sum(energies * np.abs(modes) ** 2))
        total += float(grid.weight * np.sum(v_trap * np.abs(orbitals) ** 2))
    rho_a = species_density(state.orbitals_a)
    rho_b = species_density(state.orbitals_b)
    total += float(g * grid.weight * np.sum(rho_a * rho_b))
    return total


def _split_step(orbitals_a, orbitals_b, v_trap, g, kinetic_phase, dt, factor):
    """One kick-drift-kick step; ``factor`` is -1 (imaginary time) or -1j."""
    rho_a = species_density(orbitals_a)
    rho_b = species_density(orbitals_b)
    kick_a = np.exp(0.5 * factor * dt * (v_trap + g * rho_b))
    kick_b = np.exp(0.5 * factor * dt * (v_trap + g * rho_a))
    orbitals_a = orbitals_a * kick_a
    orbitals_b = orbitals_b * kick_b
    orbitals_a = _dst_ortho(_dst_ortho(orbitals_a) * kinetic_phase)
    orbitals_b = _dst_ortho(_dst_ortho(orbitals_b) * kinetic_phase)
    # A kick leaves every |phi|^2 unchanged, so the closing half kick may use
    # densities evaluated after the drift.
    rho_a = species_density(orbitals_a)
    rho_b = species_density(orbitals_b)
    kick_a = np.exp(0.5 * factor * dt * (v_trap + g * rho_b))
    kick_b = np.exp(0.5 * factor * dt * (v_trap + g * rho_a))
    return orbitals_a * kick_a, orbitals_b * kick_b


def hf_ground(grid: GridSpec, trap: TrapParams, g: float, n_a: int, n_b: int,
              seed_asymmetry: float = 0.0, tau: float = 0.1, tol: float = 1e-10,
              max_iter: int = 200000) -> HFState:
    """Imaginary-time relaxation of the coupled mean-field orbital equations.

    Initial orbitals are the lowest one-body eigenstates, each perturbed by
    ``seed_asymmetry * x * exp(-x^2/2)`` so the solver can break parity when
    that lowers the energy; the sign of the seed selects the mirror
    configuration. Converged when the energy change per step stays below
    ``tol`` (on a reduced final step size) for several steps in a row.
    """
    if not np.isfinite(seed_asymmetry):
        raise ConfigurationError(f"seed_asymmetry must be finite, got {seed_asymmetry}")
    if min(n_a, n_b) < 0 or max(n_a, n_b) < 1:
        raise ConfigurationError("each species needs a nonnegative particle count")
    one_body = solve_one_body(grid, trap, max(n_a, n_b))
    seed = seed_asymmetry * grid.points * np.exp(-0.5 * grid.points**2)

    def initial(n):
        orbs = one_body.orbitals[:, :n].T.astype(np.complex128) + seed
        return _lowdin(orbs, grid.weight)

    orbitals_a = initial(n_a)
    orbitals_b = initial(n_b)
    v_trap = potential_at(grid.points, trap)
    energies = grid.mode_energies(trap.mass)

    state = HFState(orbitals_a, orbitals_b, 0.0)
    energy = hf_energy(state, grid, trap, g)
    trace = [energy]
    iterations = 0
    for step_tau, step_tol in ((tau, max(tol, 1e-9)), (tau / 5.0, tol)):
        kinetic_decay = np.exp(-step_tau * energies)
        settle = 0
        while settle < 5:
            if iterations >= max_iter:
                last_change = abs(trace[-1] - trace[-2]) if len(trace) > 1 else np.nan
                raise NumericalError(
                    f"mean-field relaxation did not settle (last energy change "
                    f"{last_change:.3e})",
                    diagnostic=np.array(trace[-100:]),
                )
            orbitals_a, orbitals_b = _split_step(
                orbitals_a, orbitals_b, v_trap, g, kinetic_decay, step_tau, -1.0
            )
            orbitals_a = _lowdin(orbitals_a, grid.weight)
            orbitals_b = _lowdin(orbitals_b, grid.weight)
            state = HFState(orbitals_a, orbitals_b, 0.0)
            energy = hf_energy(state, grid, trap, g)
            settle = settle + 1 if abs(energy - trace[-1]) < step_tol else 0
            trace.append(energy)
            iterations += 1
    return state


def hf_propagate(state: HFState, grid: GridSpec, trap: TrapParams, g: float,
                 cfg: PropagationConfig):
    """Yield split-operator snapshots of the coupled mean-field evolution.

    Each record interval is subdivided into equal substeps no longer than
    ``cfg.dt``. The evolution map is unitary and identical for all orbitals
    of a species, so per-species orthonormality is preserved to roundoff; a
    drift beyond 1e-4 aborts because it indicates a broken integrator.
    """
    v_trap = potential_at(grid.points, trap)
    energies = grid.mode_energies(trap.mass)
    t0 = state.time
    yield state.copy()
    orbitals_a = state.orbitals_a.astype(np.complex128).copy()
    orbitals_b = state.orbitals_b.astype(np.complex128).copy()
    t = 0.0
    for t_record in cfg.record_times():
        span = t_record - t
        n_sub = max(1, int(np.ceil(span / cfg.dt - 1e-9)))
        dt = span / n_sub
        kinetic_phase = np.exp(-1j * dt * energies)
        for _ in range(n_sub):
            orbitals_a, orbitals_b = _split_step(
                orbitals_a, orbitals_b, v_trap, g, kinetic_phase, dt, -1.0j
            )
        t = t_record
        for orbitals in (orbitals_a, orbitals_b):
            if orbitals.shape[0]:
                defect = orthonormality_defect(orbitals, grid.weight)
                if defect > 1e-4:
                    raise NumericalError(
                        f"orbital orthonormality drifted to {defect:.3e} at t={t:.3f}",
                        diagnostic=defect,
                    )
        yield HFState(orbitals_a.copy(), orbitals_b.copy(), t0 + t)


_HF_MAGIC = b"FWHFST01"


def save_hf_state(path, state: HFState, g: float, grid: GridSpec) -> None:
    """Checkpoint with the same header convention as CI states."""
    header = _HF_MAGIC + struct.pack(
        "<iiidd", grid.n_points, state.n_a, state.n_b, float(state.time), float(g)
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.orbitals_a, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(state.orbitals_b, dtype="<c16").tobytes())


def load_hf_state(path):
    """Load a mean-field checkpoint; returns (HFState, g, n_points)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_HF_MAGIC))
        if magic != _HF_MAGIC:
            raise ConfigurationError(f"{path}: not a mean-field checkpoint file")
        n_points, n_a, n_b, time, g = struct.unpack("<iiidd", fh.read(28))
        raw = fh.read()
    data = np.frombuffer(raw, dtype="<c16").astype(np.complex128)
    if data.size != (n_a + n_b) * n_points:
        raise ConfigurationError(f"{path}: orbital payload has unexpected size")
    orbitals_a = data[: n_a * n_points].reshape(n_a, n_points)
    orbitals_b = data[n_a * n_points :].reshape(n_b, n_points)
    return HFState(orbitals_a, orbitals_b, time), g, n_points
