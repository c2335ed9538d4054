"""Scenario execution: ground state, quench, observables, shots, manifest."""

from __future__ import annotations

import numpy as np

from . import __version__
from .errors import FermiwellError
from .fockspace import save_ci_state
from .grid import build_grid
from .observables import (
    ObservableSeries,
    g1_map,
    g2_map,
    mean_square_position,
    one_body_rdm,
    overlap_lambda,
)
from .outputs import RunWriter
from .runcfg import RunConfig
from .singleshot import ShotConfig, analytic_average, average_shots
from .solvers import (
    energy_expectation,
    ground_state_ci,
    hf_energy,
    hf_ground,
    hf_propagate,
    propagate_ci,
    save_hf_state,
)
from .spbasis import solve_one_body


def versions() -> dict:
    from importlib.metadata import version

    import numba
    import scipy

    return {
        "fermiwell": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "click": version("click"),
        "pyyaml": version("pyyaml"),
    }


def _pick_records(record_times, wanted):
    """Map requested times onto the record lattice (nearest record)."""
    chosen = {}
    for t in wanted:
        k = int(np.argmin(np.abs(record_times - t)))
        chosen.setdefault(k, float(record_times[k]))
    return chosen


def _build_series(times, rows) -> ObservableSeries:
    return ObservableSeries(
        times=np.array(times),
        energy=np.array([r["energy"] for r in rows]),
        norm=np.array([r["norm"] for r in rows]),
        overlap=np.array([r["lambda"] for r in rows]),
        x2_a=np.array([r["x2_a"] for r in rows]),
        x2_b=np.array([r["x2_b"] for r in rows]),
        populations_a=np.array([r["pops_a"] for r in rows]),
        populations_b=np.array([r["pops_b"] for r in rows]),
        densities_a=np.array([r["dens_a"] for r in rows]),
        densities_b=np.array([r["dens_b"] for r in rows]),
    )


def _record_common(writer, tag, grid, series: ObservableSeries):
    columns = {
        "time": series.times,
        "energy": series.energy,
        "norm": series.norm,
        "lambda": series.overlap,
        "x2_a": series.x2_a,
        "x2_b": series.x2_b,
    }
    for i in range(series.populations_a.shape[1]):
        columns[f"n_a_{i + 1}"] = series.populations_a[:, i]
    for i in range(series.populations_b.shape[1]):
        columns[f"n_b_{i + 1}"] = series.populations_b[:, i]
    writer.csv(f"{tag}_series", f"{tag}_series.csv", columns)
    axes_t = ("time", series.times)
    axes_x = ("x", grid.points)
    writer.field(f"{tag}_density_a", f"{tag}_density_a", series.densities_a,
                 [axes_t, axes_x])
    writer.field(f"{tag}_density_b", f"{tag}_density_b", series.densities_b,
                 [axes_t, axes_x])


def _run_ci(cfg: RunConfig, writer: RunWriter, grid, basis):
    tag = "ci"
    ground = ground_state_ci(basis, cfg.g_initial, cfg.n_a, cfg.n_b)
    save_ci_state(writer.path(f"{tag}_ground.state"), ground, cfg.g_initial)
    writer.register(f"{tag}_ground_state", f"{tag}_ground.state", "ci-checkpoint")

    prop = cfg.propagation
    record_times = np.concatenate([[0.0], prop.record_times()])
    snap_records = _pick_records(record_times, cfg.snapshot_times)
    shot_records = {}
    if cfg.shot is not None:
        shot_records = _pick_records(record_times, cfg.shot["times"])

    times, rows = [], []
    snap_count = 0
    final = None
    for index, state in enumerate(propagate_ci(ground, basis, cfg.g_final, prop)):
        rdm_a = one_body_rdm(state, "A", basis)
        rdm_b = one_body_rdm(state, "B", basis)
        da, db = rdm_a.density, rdm_b.density
        times.append(state.time)
        rows.append(
            {
                "energy": energy_expectation(state, basis, cfg.g_final),
                "norm": state.norm(),
                "lambda": overlap_lambda(da, db),
                "x2_a": mean_square_position(da, grid.points, grid.weight, cfg.n_a),
                "x2_b": mean_square_position(db, grid.points, grid.weight, cfg.n_b),
                "pops_a": rdm_a.populations,
                "pops_b": rdm_b.populations,
                "dens_a": da,
                "dens_b": db,
            }
        )
        if index in snap_records:
            _write_snapshots(writer, tag, grid, basis, state, rdm_a, rdm_b, snap_count)
            snap_count += 1
        if index in shot_records:
            write_shot_outputs(cfg, writer, grid, basis, state)
        final = state
    save_ci_state(writer.path(f"{tag}_final.state"), final, cfg.g_final)
    writer.register(f"{tag}_final_state", f"{tag}_final.state", "ci-checkpoint")
    _record_common(writer, tag, grid, _build_series(times, rows))


def _write_snapshots(writer, tag, grid, basis, state, rdm_a, rdm_b, snap_count):
    axes = [("x", grid.points), ("x_prime", grid.points)]
    meta = {"time": float(state.time)}
    prefix = f"{tag}_snap{snap_count:02d}"
    writer.field(
        f"{prefix}_g1_a", f"{prefix}_g1_a", np.abs(g1_map(rdm_a).values), axes, meta
    )
    writer.field(
        f"{prefix}_g1_b", f"{prefix}_g1_b", np.abs(g1_map(rdm_b).values), axes, meta
    )
    pairs = {"g2_aa": ("A", "A"), "g2_bb": ("B", "B"), "g2_ab": ("A", "B")}
    for name, pair in pairs.items():
        cmap = g2_map(state, pair, basis)
        field_meta = dict(meta, trivial=cmap.trivial)
        writer.field(
            f"{prefix}_{name}", f"{prefix}_{name}", np.real(cmap.values), axes, field_meta
        )


def write_shot_outputs(cfg: RunConfig, writer, grid, basis, state):
    shot_cfg = ShotConfig(
        psf_width=cfg.shot["psf_width"],
        species_order=cfg.shot["species_order"],
        rng_seed=cfg.shot["rng_seed"],
        n_shots=cfg.shot["n_shots"],
    )
    result = average_shots(state, shot_cfg, basis, keep_images=True)
    t_label = f"{state.time:g}"
    rows = {"shot": [], "species": [], "index": [], "x": []}
    for k, image in enumerate(result.images):
        for species, positions in (("A", image.positions_a), ("B", image.positions_b)):
            for i, x in enumerate(positions):
                rows["shot"].append(k)
                rows["species"].append(0 if species == "A" else 1)
                rows["index"].append(i)
                rows["x"].append(x)
    writer.csv(f"shots_t{t_label}_positions", f"shots_t{t_label}_positions.csv", rows)

    axes = [("x", result.image_grid)]
    checkpoints = sorted({1, 50, 500, shot_cfg.n_shots} & set(range(1, shot_cfg.n_shots + 1)))
    for species in ("A", "B"):
        stack = np.stack(
            [getattr(im, f"intensity_{species.lower()}") for im in result.images]
        )
        for n in checkpoints:
            writer.field(
                f"shots_t{t_label}_avg_{species.lower()}_n{n}",
                f"shots_t{t_label}_avg_{species.lower()}_n{n}",
                stack[:n].mean(axis=0),
                axes,
                {"time": float(state.time), "n_shots": n},
            )
        writer.field(
            f"shots_t{t_label}_target_{species.lower()}",
            f"shots_t{t_label}_target_{species.lower()}",
            analytic_average(state, shot_cfg, basis, species),
            axes,
            {"time": float(state.time)},
        )
        density = one_body_rdm(state, species, basis).density
        writer.field(
            f"shots_t{t_label}_density_{species.lower()}",
            f"shots_t{t_label}_density_{species.lower()}",
            density,
            [("x", grid.points)],
            {"time": float(state.time)},
        )


def _run_hf(cfg: RunConfig, writer: RunWriter, grid):
    tag = "hf"
    seed = cfg.seed_asymmetry if cfg.n_a != cfg.n_b else 0.0
    ground = hf_ground(grid, cfg.trap, cfg.g_initial, cfg.n_a, cfg.n_b, seed_asymmetry=seed)
    save_hf_state(writer.path(f"{tag}_ground.state"), ground, cfg.g_initial, grid)
    writer.register(f"{tag}_ground_state", f"{tag}_ground.state", "hf-checkpoint")

    times, rows = [], []
    final = None
    for state in hf_propagate(ground, grid, cfg.trap, cfg.g_final, cfg.propagation):
        rho_a = np.sum(np.abs(state.orbitals_a) ** 2, axis=0)
        rho_b = np.sum(np.abs(state.orbitals_b) ** 2, axis=0)
        times.append(state.time)
        rows.append(
            {
                "energy": hf_energy(state, grid, cfg.trap, cfg.g_final),
                "norm": 1.0,
                "lambda": overlap_lambda(rho_a, rho_b),
                "x2_a": mean_square_position(rho_a, grid.points, grid.weight, cfg.n_a),
                "x2_b": mean_square_position(rho_b, grid.points, grid.weight, cfg.n_b),
                "pops_a": np.ones(cfg.n_a),
                "pops_b": np.ones(cfg.n_b),
                "dens_a": rho_a,
                "dens_b": rho_b,
            }
        )
        final = state
    save_hf_state(writer.path(f"{tag}_final.state"), final, cfg.g_final, grid)
    writer.register(f"{tag}_final_state", f"{tag}_final.state", "hf-checkpoint")
    _record_common(writer, tag, grid, _build_series(times, rows))


def run_scenario(cfg: RunConfig) -> dict:
    """Ground state at g_initial, quench to g_final, record everything.

    Returns the manifest dict; on error a manifest with status "incomplete"
    is still written before the exception propagates.
    """
    writer = RunWriter(cfg.output_dir)
    notes = []
    if cfg.relabeled:
        notes.append("species relabeled so that N_A >= N_B")
    try:
        grid = build_grid(cfg.n_points, cfg.x_min, cfg.x_max)
        basis = solve_one_body(grid, cfg.trap, cfg.basis_m) if cfg.solver in ("ci", "both") else None
        if cfg.solver in ("ci", "both"):
            _run_ci(cfg, writer, grid, basis)
        if cfg.solver in ("hf", "both"):
            _run_hf(cfg, writer, grid)
    except FermiwellError as exc:
        notes.append(f"failed: {exc}")
        writer.manifest(cfg.raw, cfg.config_hash(), "incomplete", versions(), notes)
        raise
    return writer.manifest(cfg.raw, cfg.config_hash(), "complete", versions(), notes)
