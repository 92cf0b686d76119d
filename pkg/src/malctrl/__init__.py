"""Malware propagation on IoT network graphs: five-compartment node-level
dynamics, stochastic validation, and optimal patch/restriction scheduling by
forward-backward sweep."""

from .graphs import (NetworkGraph, SmartHomeSpec, canonical_graph, canonical_spec,
                     floorplan_spec, generate_smart_home, graph_from_json,
                     graph_to_json, is_connected, load_graph, save_graph,
                     validate_graph)
from .model import (AdjointTrajectory, ControlTrajectory, ModelInstance,
                    ModelParams, NodeState, StateTrajectory, load_instance,
                    seed_initial_state, uniform_grid)
from .dynamics import CtmcSummary, ctmc_simulate, integrate_forward, ode_rhs
from .objective import ObjectiveBreakdown, objective, running_cost
from .adjoint import adjoint_rhs, hamiltonian, integrate_backward
from .sweep import SweepReport, control_update, fbsm_solve
from .rgcs import PopulationComparison, RgcsConfig, rgcs_generate, rgcs_population_compare
from .experiments import (ExperimentSpec, SnapshotReport, run_experiment,
                          select_sample_nodes, snapshot)

__version__ = "0.1.0"

__all__ = [
    "NetworkGraph", "SmartHomeSpec", "canonical_graph", "canonical_spec",
    "floorplan_spec", "generate_smart_home", "graph_from_json", "graph_to_json",
    "is_connected", "load_graph", "save_graph", "validate_graph",
    "AdjointTrajectory", "ControlTrajectory", "ModelInstance", "ModelParams",
    "NodeState", "StateTrajectory", "load_instance", "seed_initial_state",
    "uniform_grid",
    "CtmcSummary", "ctmc_simulate", "integrate_forward", "ode_rhs",
    "ObjectiveBreakdown", "objective", "running_cost",
    "adjoint_rhs", "hamiltonian", "integrate_backward",
    "SweepReport", "control_update", "fbsm_solve",
    "PopulationComparison", "RgcsConfig", "rgcs_generate", "rgcs_population_compare",
    "ExperimentSpec", "SnapshotReport", "run_experiment", "select_sample_nodes",
    "snapshot",
    "__version__",
]
