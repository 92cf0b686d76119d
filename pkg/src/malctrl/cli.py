"""Command-line interface."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import graphs
from .adjoint import ADJOINT_MODES
from .experiments import EXPERIMENT_IDS, ExperimentSpec, run_experiment
from .model import load_instance
from .objective import objective
from .rgcs import RgcsConfig, rgcs_population_compare
from .serialize import adjoint_csv, control_csv, state_csv, summary_json, write_summary
from .sweep import fbsm_solve


@click.group()
def main():
    """Malware-propagation control toolkit for IoT network graphs."""


@main.group()
def dataset():
    """Generate and validate topology files."""


@dataset.command("generate")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True, path_type=Path),
              help="Smart-home generator spec (JSON).")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def dataset_generate(spec_path: Path, out_path: Path):
    """Generate a seeded smart-home topology."""
    spec = graphs.load_spec(spec_path)
    graph = graphs.generate_smart_home(spec)
    graphs.save_graph(graph, out_path)
    click.echo(f"wrote {graph.node_count}-node graph to {out_path}")


@dataset.command("validate")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
def dataset_validate(path: Path):
    """Check a topology file against the structural invariants."""
    try:
        graph = graphs.load_graph(path)
    except graphs.GraphValidationError as err:
        click.echo(f"invalid: {err}", err=True)
        sys.exit(1)
    click.echo(f"valid: {graph.node_count} nodes, {int(graph.adjacency.sum()) // 2} links")


@main.command()
@click.option("--instance", "instance_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--adjoint-mode", type=click.Choice(ADJOINT_MODES), default=None,
              help="Costate convention; defaults to the instance setting.")
@click.option("--omega", type=float, default=None, help="Relaxation weight in [0, 1).")
@click.option("--eps", type=float, default=None, help="Convergence threshold.")
@click.option("--max-iter", type=int, default=None)
@click.option("--out-prefix", "out_dir", required=True, type=click.Path(path_type=Path))
def optimize(instance_path: Path, adjoint_mode, omega, eps, max_iter, out_dir: Path):
    """Solve the optimality system and write control/state/adjoint CSVs."""
    instance = load_instance(instance_path)
    control, states, adjoints, report = fbsm_solve(
        instance, adjoint_mode=adjoint_mode, omega=omega,
        epsilon=eps, max_iterations=max_iter)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "control.csv").write_text(control_csv(control))
    (out_dir / "state.csv").write_text(state_csv(states))
    (out_dir / "adjoint.csv").write_text(adjoint_csv(adjoints))
    write_summary(out_dir / "sweep_report.json", report.as_dict())
    write_summary(out_dir / "objective.json", objective(states, control).as_dict())
    status = "converged" if report.converged else "did not converge"
    click.echo(f"{status} after {report.iterations_used} iterations"
               f" (residual {report.final_residual:.3e}); artifacts in {out_dir}")
    if not report.converged:
        sys.exit(2)


@main.command("rgcs-compare")
@click.option("--instance", "instance_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--n", "num_subintervals", type=int, default=100, show_default=True)
@click.option("--population", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def rgcs_compare(instance_path: Path, num_subintervals: int, population: int,
                 seed: int, out_path: Path):
    """Score a random-strategy population against the sweep optimum."""
    instance = load_instance(instance_path)
    config = RgcsConfig(num_subintervals=num_subintervals, rng_seed=seed,
                        population_size=population)
    comparison = rgcs_population_compare(instance, config)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(summary_json(comparison.as_dict()))
    best = comparison.strategies[0]["J"]
    click.echo(f"optimal J = {comparison.optimal_J:.6g}, best random J = {best:.6g}")


@main.group()
def experiment():
    """Run the canonical-topology experiment suite."""


@experiment.command("run")
@click.option("--id", "experiment_id", required=True, type=click.Choice(EXPERIMENT_IDS))
@click.option("--graph", "graph_ref", default="canonical", show_default=True,
              help='Either "canonical" or a path to a topology JSON.')
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--seed", type=int, default=7, show_default=True,
              help="Master seed of the exp2 strategy population.")
def experiment_run(experiment_id: str, graph_ref: str, out_dir: Path, seed: int):
    """Run one experiment (or family) and write its artifacts."""
    graph = graph_ref if graph_ref == "canonical" else Path(graph_ref)
    spec = ExperimentSpec(experiment_id=experiment_id, out_dir=out_dir,
                          graph=graph, rng_seed=seed)
    run_experiment(spec)
    click.echo(f"{experiment_id} artifacts written under {out_dir}")


if __name__ == "__main__":
    main()
