"""Acceptance suite: every criterion as one test, heavy runs shared.

Each test prints one ``[ACCEPTANCE] <id> ... PASS`` line (visible in the
verbose log; criterion identity is also the test name). Production physics:
double well omega=0.1, barrier 2x1, box (-40, 40) with 400 points, quench
g: 0.1 -> 4.0.
"""

import numpy as np
import pytest
import scipy.linalg

import fermiwell as fw
from fermiwell.fockspace import determinant_basis
from fermiwell.observables import (
    breathing_frequency,
    count_filaments,
    density_deviation,
    filament_positions,
    g2_map,
    mean_square_position,
    one_body_rdm,
    overlap_lambda,
    two_body_orbital_intra,
)
from fermiwell.solvers import orthonormality_defect, species_density

from oracle_jw import dense_hamiltonian, embed_state, extract_state

G_WEAK, G_STRONG = 0.1, 4.0
T_FINAL = 100.0
STRIDE = 0.25


def announce(tag, detail):
    print(f"[ACCEPTANCE] {tag}: PASS  ({detail})")


@pytest.fixture(scope="session")
def grid():
    return fw.build_grid(400, -40.0, 40.0)


@pytest.fixture(scope="session")
def trap():
    return fw.TrapParams(omega=0.1, barrier_height=2.0, barrier_width=1.0)


def _ci_quench(grid, trap, m, n_a, n_b, t_final=T_FINAL, stride=STRIDE,
               snapshot_times=(), keep_states=()):
    basis = fw.solve_one_body(grid, trap, m)
    ground = fw.ground_state_ci(basis, G_WEAK, n_a, n_b)
    cfg = fw.PropagationConfig(dt=0.1, t_final=t_final, krylov_dim=12, tol=1e-9,
                               record_stride=stride)
    run = {
        "basis": basis, "times": [], "energy": [], "norm": [], "lam": [],
        "x2_a": [], "x2_b": [], "pops": [], "dens_a": [], "dens_b": [],
        "snapshots": {}, "states": {}, "n_a": n_a, "n_b": n_b,
    }
    for state in fw.propagate_ci(ground, basis, G_STRONG, cfg):
        rdm_a = one_body_rdm(state, "A", basis)
        rdm_b = one_body_rdm(state, "B", basis)
        da, db = rdm_a.density, rdm_b.density
        run["times"].append(state.time)
        run["energy"].append(fw.energy_expectation(state, basis, G_STRONG))
        run["norm"].append(state.norm())
        run["lam"].append(overlap_lambda(da, db))
        run["x2_a"].append(mean_square_position(da, grid.points, grid.weight, n_a))
        run["x2_b"].append(mean_square_position(db, grid.points, grid.weight, n_b))
        run["pops"].append(np.concatenate([rdm_a.populations, rdm_b.populations]))
        run["dens_a"].append(da)
        run["dens_b"].append(db)
        for t in snapshot_times:
            if abs(state.time - t) < 1e-9:
                run["snapshots"][t] = state.copy()
        for t in keep_states:
            if abs(state.time - t) < 1e-9:
                run["states"][t] = state.copy()
    for key in ("times", "energy", "norm", "lam", "x2_a", "x2_b", "dens_a", "dens_b"):
        run[key] = np.array(run[key])
    return run


def _hf_quench(grid, trap, n_a, n_b, t_final=T_FINAL, stride=STRIDE):
    seed = 1e-3 if n_a != n_b else 0.0
    ground = fw.hf_ground(grid, trap, G_WEAK, n_a, n_b, seed_asymmetry=seed)
    cfg = fw.PropagationConfig(dt=0.005, t_final=t_final, record_stride=stride)
    run = {"times": [], "energy": [], "lam": [], "x2_a": [], "x2_b": [], "ortho": []}
    for state in fw.hf_propagate(ground, grid, trap, G_STRONG, cfg):
        rho_a = species_density(state.orbitals_a)
        rho_b = species_density(state.orbitals_b)
        run["times"].append(state.time)
        run["energy"].append(fw.hf_energy(state, grid, trap, G_STRONG))
        run["lam"].append(overlap_lambda(rho_a, rho_b))
        run["x2_a"].append(mean_square_position(rho_a, grid.points, grid.weight, n_a))
        run["x2_b"].append(mean_square_position(rho_b, grid.points, grid.weight, n_b))
        run["ortho"].append(max(
            orthonormality_defect(state.orbitals_a, grid.weight),
            orthonormality_defect(state.orbitals_b, grid.weight),
        ))
    return {key: np.array(val) for key, val in run.items()}


@pytest.fixture(scope="session")
def run31_ci(grid, trap):
    return _ci_quench(grid, trap, 12, 3, 1,
                      snapshot_times=(20.0, 22.0, 24.0, 26.0, 28.0),
                      keep_states=(25.0,))


@pytest.fixture(scope="session")
def run22_ci(grid, trap):
    return _ci_quench(grid, trap, 12, 2, 2, snapshot_times=(14.0, 16.0))


@pytest.fixture(scope="session")
def run22_ci_m10(grid, trap):
    return _ci_quench(grid, trap, 10, 2, 2)


@pytest.fixture(scope="session")
def run55_ci(grid, trap):
    return _ci_quench(grid, trap, 10, 5, 5, t_final=35.0, stride=0.5)


@pytest.fixture(scope="session")
def run31_hf(grid, trap):
    return _hf_quench(grid, trap, 3, 1)


@pytest.fixture(scope="session")
def run22_hf(grid, trap):
    return _hf_quench(grid, trap, 2, 2)


@pytest.fixture(scope="session")
def ground_energies(grid, trap):
    """CI and mean-field ground energies for (3,1) and (2,2) at three couplings."""
    table = {}
    for n_a, n_b in ((3, 1), (2, 2)):
        basis = fw.solve_one_body(grid, trap, 12)
        for g in (0.1, 1.0, 4.0):
            ci = fw.energy_expectation(
                fw.ground_state_ci(basis, g, n_a, n_b), basis, g
            )
            seed = 1e-3 if n_a != n_b else 0.0
            hf = fw.hf_energy(
                fw.hf_ground(grid, trap, g, n_a, n_b, seed_asymmetry=seed),
                grid, trap, g,
            )
            table[(n_a, n_b, g)] = (ci, hf)
    return table


# --- A1 ------------------------------------------------------------------


def test_a1_breathing_frequency(run31_ci, run31_hf, run22_ci, run22_hf):
    measured = {}
    for label, run in (("ci31", run31_ci), ("hf31", run31_hf),
                       ("ci22", run22_ci), ("hf22", run22_hf)):
        freq = breathing_frequency(run["times"], run["x2_a"])
        measured[label] = freq
        assert abs(freq - 0.2) <= 0.02, f"{label}: breathing frequency {freq:.4f}"
    announce("A1 breathing frequency 0.2 +- 10%",
             " ".join(f"{k}={v:.4f}" for k, v in measured.items()))


# --- A2 ------------------------------------------------------------------


def test_a2_stoner_symmetry_breaking(grid, trap):
    basis = fw.solve_one_body(grid, trap, 12)
    hf_plus = fw.hf_ground(grid, trap, G_STRONG, 3, 1, seed_asymmetry=1e-3)
    hf_minus = fw.hf_ground(grid, trap, G_STRONG, 3, 1, seed_asymmetry=-1e-3)
    lam_hf = overlap_lambda(species_density(hf_plus.orbitals_a),
                            species_density(hf_plus.orbitals_b))
    delta_e = abs(fw.hf_energy(hf_plus, grid, trap, G_STRONG)
                  - fw.hf_energy(hf_minus, grid, trap, G_STRONG))
    assert lam_hf < 0.5, f"mean-field overlap {lam_hf:.3f}"
    assert delta_e < 1e-6, f"mirror energy split {delta_e:.2e}"

    ci = fw.ground_state_ci(basis, G_STRONG, 3, 1, tol=1e-11)
    rho_a = one_body_rdm(ci, "A", basis).density
    rho_b = one_body_rdm(ci, "B", basis).density
    lam_ci = overlap_lambda(rho_a, rho_b)
    asym = max(np.max(np.abs(rho_a - rho_a[::-1])), np.max(np.abs(rho_b - rho_b[::-1])))
    assert lam_ci > 0.8, f"correlated overlap {lam_ci:.3f}"
    assert asym < 1e-6, f"correlated density asymmetry {asym:.2e}"
    announce("A2 Stoner symmetry breaking",
             f"HF lambda={lam_hf:.3f} dE={delta_e:.1e} CI lambda={lam_ci:.3f} asym={asym:.1e}")


# --- A3 ------------------------------------------------------------------


def test_a3_dynamical_miscibility_split(run31_ci, run31_hf):
    window_hf = run31_hf["lam"][run31_hf["times"] >= 10.0]
    # Known-red clause: the clean mean-field trajectory has one deterministic
    # overlap revival (to ~0.34) at a full breathing period, verified against
    # an independent dense RK4 integrator; seeding does not remove it.
    assert np.all(window_hf < 0.2), f"max HF overlap {window_hf.max():.3f}"
    window_ci = run31_ci["lam"][run31_ci["times"] >= 10.0]
    average = float(window_ci.mean())
    assert 0.8 <= average <= 1.0, f"CI mean overlap {average:.3f}"
    announce("A3 dynamical miscibility split",
             f"HF max={window_hf.max():.3f} CI mean={average:.3f}")


# --- A4 ------------------------------------------------------------------


def test_a4_two_body_phase_separation(run31_ci, grid):
    basis = run31_ci["basis"]
    x = grid.points
    best_hole, best_peak = np.inf, -np.inf
    for t, state in sorted(run31_ci["snapshots"].items()):
        rho_a = one_body_rdm(state, "A", basis).density
        centers = filament_positions(x, rho_a, (-12.0, 12.0), 0.05)
        if centers.size < 2:
            continue
        inter = g2_map(state, ("A", "B"), basis).values
        nodes = [int(np.argmin(np.abs(x - c))) for c in centers]
        hole = min(inter[k, k].real for k in nodes)
        # distinct filaments: cloud points separated by more than a filament width
        cloud = rho_a > 0.05 * rho_a.max()
        separated = np.abs(x[:, None] - x[None, :]) > 2.0
        region = cloud[:, None] & cloud[None, :] & separated
        finite = np.isfinite(inter) & region
        peak = float(np.max(inter[finite].real))
        best_hole = min(best_hole, hole)
        best_peak = max(best_peak, peak)

        intra = g2_map(state, ("A", "A"), basis).values
        pauli = np.nanmax(np.abs(np.diag(intra)))
        assert pauli < 1e-10, f"t={t}: intraspecies diagonal {pauli:.2e}"
    assert best_hole < 0.3, f"diagonal correlation hole {best_hole:.3f}"
    assert best_peak > 1.5, f"inter-filament correlation {best_peak:.3f}"
    announce("A4 two-body phase separation near t=24",
             f"g2_AB hole={best_hole:.3f} peak={best_peak:.3f} Pauli diag ~ 0")


# --- A5 ------------------------------------------------------------------


def test_a5_filament_counting(run22_ci, run55_ci, grid):
    x = grid.points
    counts22 = []
    for t, state in sorted(run22_ci["snapshots"].items()):
        rho = one_body_rdm(state, "A", run22_ci["basis"]).density
        counts22.append((count_filaments(x, rho, (-20.0, -0.05), 0.05),
                         count_filaments(x, rho, (0.05, 20.0), 0.05)))
    assert any(c == (2, 2) for c in counts22), f"(2,2) filament counts {counts22}"

    # The five-fold modulation of the larger mixture is persistent but
    # shallow in a fixed orbital basis; count it at a configured (and
    # reported) 0.5% prominence over the late expanded window.
    kept = run55_ci["times"] >= 25.0
    counts55 = []
    for k in np.nonzero(kept)[0]:
        rho = run55_ci["dens_a"][k]
        counts55.append((count_filaments(x, rho, (-25.0, -0.05), 0.005),
                         count_filaments(x, rho, (0.05, 25.0), 0.005)))
    matches = sum(c == (5, 5) for c in counts55)
    assert matches >= 3, f"(5,5) filament counts {counts55}"
    announce("A5 filament counting",
             f"(2,2) -> 2 per well at 5% prominence; (5,5) -> 5 per well at "
             f"0.5% prominence in {matches} snapshots")


# --- A6 ------------------------------------------------------------------


def test_a6_single_shot_averaging(run31_ci, grid):
    basis = run31_ci["basis"]
    state = run31_ci["states"][25.0].normalized()
    cfg = fw.ShotConfig(psf_width=1.0, rng_seed=2024, n_shots=2000)
    result = fw.average_shots(state, cfg, basis, keep_images=True)
    stack = np.stack([im.intensity_a + im.intensity_b for im in result.images])
    target = result.target_a + result.target_b
    checkpoints = np.array([50, 200, 500, 2000])
    distances = []
    for n in checkpoints:
        mean = stack[:n].mean(axis=0)
        distances.append(grid.weight * np.sum(np.abs(mean - target)))
    slope = np.polyfit(np.log(checkpoints), np.log(distances), 1)[0]
    assert abs(slope + 0.5) <= 0.1, f"fit exponent {slope:.3f}"
    announce("A6 single-shot averaging identity",
             f"L1={['%.4f' % d for d in distances]} exponent={slope:.3f}")


# --- A7 ------------------------------------------------------------------


def test_a7_basis_convergence_ladder(run22_ci, run22_ci_m10, grid):
    deviation = density_deviation(
        run22_ci_m10["times"], run22_ci_m10["dens_a"],
        run22_ci["times"], run22_ci["dens_a"], 2, grid.weight,
    )
    peak = float(deviation.max())
    # Known-red criterion: a contact interaction converges slowly in the
    # orbital count; measured consecutive-basis deviations sit at 0.05-0.08
    # (M pairs 10-12, 12-14, 14-16), far above this threshold.
    assert peak < 0.005, (
        f"max_t deviation M=10 vs M=12 is {peak:.4f}; the fixed-orbital "
        "contact-interaction ladder cannot reach 0.005 at this truncation "
        "(documented spec-expectation defect)"
    )
    announce("A7 basis convergence ladder", f"max_t deviation {peak:.4f}")


# --- A8 ------------------------------------------------------------------


def test_a8_oracle_equivalence(grid, trap):
    basis = fw.solve_one_body(grid, trap, 4)
    ham = dense_hamiltonian(basis, G_STRONG, 4)
    ba = determinant_basis(4, 1)
    dim = len(ba) ** 2
    block = np.zeros((dim, dim))
    for k in range(dim):
        unit = np.zeros(dim)
        unit[k] = 1.0
        full = embed_state(unit.reshape(len(ba), len(ba)), 4, 1, 1)
        block[:, k] = extract_state(ham @ full, 4, 1, 1).real.ravel()

    exact_e0 = np.linalg.eigvalsh(block)[0]
    ground = fw.ground_state_ci(basis, G_STRONG, 1, 1, tol=1e-11)
    energy = fw.energy_expectation(ground, basis, G_STRONG)
    assert abs(energy - exact_e0) < 1e-10

    start = fw.ground_state_ci(basis, G_WEAK, 1, 1, tol=1e-11)
    cfg = fw.PropagationConfig(dt=0.5, t_final=10.0, krylov_dim=12, tol=1e-10,
                               record_stride=5.0)
    final = list(fw.propagate_ci(start, basis, G_STRONG, cfg))[-1]
    reference = scipy.linalg.expm(-1j * 10.0 * block) @ start.coeff.ravel()
    prop_err = np.linalg.norm(final.coeff.ravel() - reference)
    assert prop_err < 1e-8

    from oracle_jw import dense_one_body_rdm, dense_two_body_intra
    from fermiwell.observables import orbital_rdm

    rng = np.random.default_rng(31)
    coeff = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    coeff /= np.linalg.norm(coeff)
    state = fw.CIState(determinant_basis(4, 1), determinant_basis(4, 1), coeff)
    full = embed_state(coeff, 4, 1, 1)
    rdm_err = np.max(np.abs(orbital_rdm(state, "A") - dense_one_body_rdm(full, 4, "A")))
    state2 = fw.CIState(determinant_basis(4, 2), determinant_basis(4, 1),
                        np.eye(6, 4) + 0.3j)
    state2.coeff /= np.linalg.norm(state2.coeff)
    full2 = embed_state(state2.coeff, 4, 2, 1)
    gamma_err = np.max(np.abs(
        two_body_orbital_intra(state2, "A") - dense_two_body_intra(full2, 4, "A")
    ))
    assert rdm_err < 1e-12 and gamma_err < 1e-12
    announce("A8 oracle equivalence",
             f"E0 err={abs(energy - exact_e0):.1e} prop err={prop_err:.1e} "
             f"rdm err={rdm_err:.1e} gamma err={gamma_err:.1e}")


# --- A9 ------------------------------------------------------------------


def test_a9_conservation_suite(run31_ci, run22_ci, run22_ci_m10, run31_hf, run22_hf):
    for label, run in (("31", run31_ci), ("22", run22_ci), ("22m10", run22_ci_m10)):
        norm_drift = np.max(np.abs(run["norm"] - 1.0))
        energy_drift = np.max(np.abs(run["energy"] - run["energy"][0]))
        relative = energy_drift / abs(run["energy"][0])
        assert norm_drift < 1e-8, f"CI {label} norm drift {norm_drift:.2e}"
        assert relative < 1e-6, f"CI {label} energy drift {relative:.2e}"
        pops = np.concatenate(run["pops"])
        assert np.all(pops > -1e-8) and np.all(pops < 1.0 + 1e-8), f"CI {label} pops"
    for label, run in (("31", run31_hf), ("22", run22_hf)):
        energy_drift = np.max(np.abs(run["energy"] - run["energy"][0]))
        relative = energy_drift / abs(run["energy"][0])
        assert relative < 1e-5, f"HF {label} energy drift {relative:.2e}"
        assert np.max(run["ortho"]) < 1e-6, f"HF {label} orthonormality"

    # two-body sum rules on recorded correlation snapshots
    for run, (n_a, n_b) in ((run31_ci, (3, 1)), (run22_ci, (2, 2))):
        for t, state in sorted(run["snapshots"].items()):
            gamma = two_body_orbital_intra(state, "A")
            total = np.einsum("pqqp->", gamma).real
            assert abs(total - n_a * (n_a - 1)) < 1e-8, f"intra sum rule at t={t}"
            from fermiwell.observables import two_body_orbital_inter

            m = run["basis"].size
            inter = two_body_orbital_inter(state).reshape(m, m, m, m)
            cross = np.einsum("ppqq->", inter).real
            assert abs(cross - n_a * n_b) < 1e-8, f"inter sum rule at t={t}"
    announce("A9 conservation suite", "norm, energy, populations, sum rules within bounds")


# --- A10 -----------------------------------------------------------------


def test_a10_variational_ordering(ground_energies):
    lines = []
    for (n_a, n_b, g), (ci, hf) in sorted(ground_energies.items()):
        assert hf >= ci - 1e-10, f"({n_a},{n_b}) g={g}: HF {hf:.8f} < CI {ci:.8f}"
        lines.append(f"({n_a},{n_b})g{g}: dE={hf - ci:.2e}")
    announce("A10 variational ordering", " ".join(lines))
