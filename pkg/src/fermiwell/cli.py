"""Command-line interface: ground, quench, shots, converge.

Exit codes: 0 success, 2 configuration error, 3 numerical error,
4 analysis error.
"""

from __future__ import annotations

import sys

import click
import numpy as np

from .errors import AnalysisError, ConfigurationError, NumericalError
from .fockspace import load_ci_state, save_ci_state
from .grid import build_grid
from .observables import density_deviation, one_body_rdm
from .outputs import RunWriter
from .runcfg import load_config
from .scenario import run_scenario, versions, write_shot_outputs
from .solvers import (
    energy_expectation,
    ground_state_ci,
    hf_energy,
    hf_ground,
    propagate_ci,
    save_hf_state,
)
from .spbasis import orbitals_to_csv, solve_one_body


def _common(func):
    func = click.option("--config", "config_path", type=click.Path(exists=True),
                        default=None, help="YAML configuration file.")(func)
    func = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                        help="Override a configuration entry (repeatable).")(func)
    func = click.option("--output", "output_dir", default=None,
                        help="Output directory (overrides config).")(func)
    func = click.option("--seed", type=int, default=None,
                        help="Master RNG seed (overrides config).")(func)
    func = click.option("--threads", type=int, default=None,
                        help="Worker threads for the numba kernels.")(func)
    return func


def _load(config_path, overrides, output_dir, seed, threads):
    items = list(overrides)
    if output_dir is not None:
        items.append(f"output_dir={output_dir}")
    if seed is not None:
        items.append(f"rng_seed={seed}")
    cfg = load_config(config_path, items)
    if threads is not None:
        try:
            import numba

            numba.set_num_threads(threads)
        except ImportError:
            pass
    return cfg


@click.group()
def cli():
    """Quench dynamics of a two-species fermion mixture in a double well."""


@cli.command()
@_common
def ground(config_path, overrides, output_dir, seed, threads):
    """Solve the ground state(s) at g_initial and export them."""
    cfg = _load(config_path, overrides, output_dir, seed, threads)
    writer = RunWriter(cfg.output_dir)
    grid = build_grid(cfg.n_points, cfg.x_min, cfg.x_max)
    rows = {"solver": [], "energy": []}
    if cfg.solver in ("ci", "both"):
        basis = solve_one_body(grid, cfg.trap, cfg.basis_m)
        orbitals_to_csv(basis, writer.path("orbitals.csv"))
        writer.register("orbitals", "orbitals.csv", "csv-orbitals")
        state = ground_state_ci(basis, cfg.g_initial, cfg.n_a, cfg.n_b)
        save_ci_state(writer.path("ci_ground.state"), state, cfg.g_initial)
        writer.register("ci_ground_state", "ci_ground.state", "ci-checkpoint")
        rho_a = one_body_rdm(state, "A", basis).density
        rho_b = one_body_rdm(state, "B", basis).density
        writer.field("ci_ground_density_a", "ci_ground_density_a", rho_a,
                     [("x", grid.points)])
        writer.field("ci_ground_density_b", "ci_ground_density_b", rho_b,
                     [("x", grid.points)])
        rows["solver"].append(0)
        rows["energy"].append(energy_expectation(state, basis, cfg.g_initial))
    if cfg.solver in ("hf", "both"):
        seed_asym = cfg.seed_asymmetry if cfg.n_a != cfg.n_b else 0.0
        state = hf_ground(grid, cfg.trap, cfg.g_initial, cfg.n_a, cfg.n_b,
                          seed_asymmetry=seed_asym)
        save_hf_state(writer.path("hf_ground.state"), state, cfg.g_initial, grid)
        writer.register("hf_ground_state", "hf_ground.state", "hf-checkpoint")
        rows["solver"].append(1)
        rows["energy"].append(hf_energy(state, grid, cfg.trap, cfg.g_initial))
    writer.csv("ground_energies", "ground_energies.csv", rows)
    writer.manifest(cfg.raw, cfg.config_hash(), "complete", versions())
    click.echo(f"ground state(s) written to {cfg.output_dir}")


@cli.command()
@_common
def quench(config_path, overrides, output_dir, seed, threads):
    """Run the full scenario: ground state, quench, observables, shots."""
    cfg = _load(config_path, overrides, output_dir, seed, threads)
    run_scenario(cfg)
    click.echo(f"scenario complete: {cfg.output_dir}/manifest.json")


@cli.command()
@_common
@click.option("--state", "state_path", type=click.Path(exists=True), default=None,
              help="Sample from a CI checkpoint instead of re-propagating.")
def shots(config_path, overrides, output_dir, seed, threads, state_path):
    """Simulate single-shot images at the configured times."""
    cfg = _load(config_path, overrides, output_dir, seed, threads)
    if cfg.shot is None:
        raise ConfigurationError("configuration has no shot section")
    writer = RunWriter(cfg.output_dir)
    grid = build_grid(cfg.n_points, cfg.x_min, cfg.x_max)
    basis = solve_one_body(grid, cfg.trap, cfg.basis_m)
    if state_path is not None:
        state, _ = load_ci_state(state_path)
        if state.basis_a.m_orbitals != cfg.basis_m:
            raise ConfigurationError(
                f"checkpoint was produced with basis_m={state.basis_a.m_orbitals}, "
                f"configuration says {cfg.basis_m}"
            )
        write_shot_outputs(cfg, writer, grid, basis, state)
    else:
        start = ground_state_ci(basis, cfg.g_initial, cfg.n_a, cfg.n_b)
        wanted = sorted(float(t) for t in cfg.shot["times"])
        prop = cfg.propagation
        for state in propagate_ci(start, basis, cfg.g_final, prop):
            if any(abs(state.time - t) < 0.5 * prop.record_stride + 1e-9 for t in wanted):
                write_shot_outputs(cfg, writer, grid, basis, state)
                wanted = [t for t in wanted
                          if abs(state.time - t) >= 0.5 * prop.record_stride + 1e-9]
            if not wanted:
                break
    writer.manifest(cfg.raw, cfg.config_hash(), "complete", versions())
    click.echo(f"shot archive written to {cfg.output_dir}")


@cli.command()
@_common
@click.option("--m-values", "m_values", default="6,8,10,12",
              help="Comma-separated basis-size ladder.")
def converge(config_path, overrides, output_dir, seed, threads, m_values):
    """Propagate a basis ladder and report density deviations."""
    cfg = _load(config_path, overrides, output_dir, seed, threads)
    ladder = [int(v) for v in m_values.split(",")]
    if len(ladder) < 2:
        raise ConfigurationError("need at least two basis sizes to compare")
    writer = RunWriter(cfg.output_dir)
    grid = build_grid(cfg.n_points, cfg.x_min, cfg.x_max)
    runs = {}
    for m in ladder:
        basis = solve_one_body(grid, cfg.trap, m)
        start = ground_state_ci(basis, cfg.g_initial, cfg.n_a, cfg.n_b)
        times, dens = [], []
        for state in propagate_ci(start, basis, cfg.g_final, cfg.propagation):
            times.append(state.time)
            dens.append(one_body_rdm(state, "A", basis).density)
        runs[m] = (np.array(times), np.array(dens))
    columns = {"time": runs[ladder[0]][0]}
    maxima = {"m_low": [], "m_high": [], "max_deviation": []}
    for low, high in zip(ladder[:-1], ladder[1:]):
        dev = density_deviation(
            runs[low][0], runs[low][1], runs[high][0], runs[high][1],
            cfg.n_a, grid.weight,
        )
        columns[f"dev_{low}_{high}"] = dev
        maxima["m_low"].append(low)
        maxima["m_high"].append(high)
        maxima["max_deviation"].append(dev.max())
    writer.csv("deviation_series", "deviation_series.csv", columns)
    writer.csv("deviation_maxima", "deviation_maxima.csv", maxima)
    writer.manifest(cfg.raw, cfg.config_hash(), "complete", versions())
    for low, high, peak in zip(maxima["m_low"], maxima["m_high"], maxima["max_deviation"]):
        click.echo(f"max_t deviation M={low} vs M={high}: {peak:.6f}")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        sys.exit(2)
    except ConfigurationError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(2)
    except NumericalError as exc:
        click.echo(f"numerical error: {exc}", err=True)
        sys.exit(3)
    except AnalysisError as exc:
        click.echo(f"analysis error: {exc}", err=True)
        sys.exit(4)
    sys.exit(0)


if __name__ == "__main__":
    main()
