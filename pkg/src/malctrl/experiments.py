"""Experiment harness: canonical-topology runs emitting plot-ready CSV/JSON.

Four experiment families are supported:

* ``exp1_case1`` .. ``exp1_case4`` (or ``exp1`` for all): solve the sweep
  optimality system for one parameter case and emit sampled per-node
  trajectories plus the objective breakdown,
* ``exp2``: objective values of a random-strategy population against the
  sweep optimum,
* ``exp3``: forward runs with and without the restricted-environment rates,
  peak infection counts, the percentage reduction, and peak-time snapshots,
* ``exp4_stage1`` .. ``exp4_stage4`` (or ``exp4`` for all): an infection-rate
  sweep; each stage reports peak expected infection counts of an
  unrestrained propagation run alongside the optimally controlled one.

Reported "device counts" are expected counts (sums of per-node compartment
probabilities), emitted raw; peak-time snapshots additionally classify each
node by its largest compartment probability.

``reference_values`` blocks carry the figures reported for the original
sixty-device testbed.  That testbed's exact adjacency was never published,
so those numbers are context for the reader, not assertions; all assertions
here are orderings and ranges evaluated on the canonical seeded topology.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graphs import NetworkGraph, canonical_graph, load_graph
from .model import (COMPARTMENTS, IH, IL, ModelInstance, ModelParams,
                    StateTrajectory, seed_initial_state)
from .dynamics import integrate_forward
from .objective import objective
from .rgcs import RgcsConfig, rgcs_population_compare
from .serialize import sampled_nodes_csv, totals_csv, write_summary
from .sweep import fbsm_solve

EXPERIMENT_IDS = (
    "exp1", "exp1_case1", "exp1_case2", "exp1_case3", "exp1_case4",
    "exp2", "exp3",
    "exp4", "exp4_stage1", "exp4_stage2", "exp4_stage3", "exp4_stage4",
)

# initial device counts shared by all sixty-device experiments
INITIAL_COUNTS = {"susceptible": 57, "infected_high": 2, "infected_low": 1,
                  "recover_first": 0, "recover_complete": 0}

EXP1_HORIZON = 10.0

EXP1_CASES = {
    1: {"beta_high": 0.0004, "beta_low": 0.0002,
        "control_rates": (0.9, 0.6, 0.4),
        "delta_bounds": (0.1, 0.8), "gamma_high_bounds": (0.1, 1.0),
        "gamma_low_bounds": (0.1, 0.6)},
    2: {"beta_high": 0.0004, "beta_low": 0.0002,
        "control_rates": (0.9, 0.6, 0.4),
        "delta_bounds": (0.1, 0.7), "gamma_high_bounds": (0.1, 0.5),
        "gamma_low_bounds": (0.1, 0.3)},
    3: {"beta_high": 0.0006, "beta_low": 0.0004,
        "control_rates": (0.9, 0.5, 0.1),
        "delta_bounds": (0.1, 0.8), "gamma_high_bounds": (0.1, 1.0),
        "gamma_low_bounds": (0.1, 0.6)},
    4: {"beta_high": 0.0006, "beta_low": 0.0004,
        "control_rates": (0.9, 0.5, 0.1),
        "delta_bounds": (0.1, 0.7), "gamma_high_bounds": (0.1, 0.5),
        "gamma_low_bounds": (0.1, 0.3)},
}

EXP3_PARAMS = {"horizon": 12.0, "beta_high": 0.004, "beta_low": 0.002,
               "delta_rate": 0.5, "gamma_high_rate": 0.4, "gamma_low_rate": 0.2}
EXP3_REFERENCE = {"peak_IH_uncontrolled": 46, "peak_IH_controlled": 33,
                  "peak_IL": 6, "reduction_pct": 21.66,
                  "uncontrolled_share_pct": 76.66, "controlled_share_pct": 55.0}

EXP4_HORIZON = 30.0
EXP4_BETA_HIGH = (0.0021, 0.0022, 0.0023, 0.0024)
EXP4_SHARED = {"beta_low": 0.0020, "control_rates": (0.6, 0.35, 0.2),
               "delta_bounds": (0.1, 0.6), "gamma_high_bounds": (0.1, 0.3),
               "gamma_low_bounds": (0.1, 0.2)}
EXP4_REFERENCE = {"peak_IH": [24, 25, 26, 27], "peak_IL": [17, 16, 15, 14]}

_OVERRIDE_KEYS = {"beta_high", "beta_low", "horizon", "time_steps", "adjoint_mode",
                  "max_iterations", "convergence_epsilon", "relaxation_weight"}


@dataclass
class ExperimentSpec:
    experiment_id: str
    out_dir: Path
    graph: str | Path = "canonical"
    overrides: dict = field(default_factory=dict)
    rng_seed: int = 7              # master seed of the exp2 population
    population_size: int = 100
    num_subintervals: int = 100

    def __post_init__(self):
        if self.experiment_id not in EXPERIMENT_IDS:
            raise ValueError(f"unknown experiment id {self.experiment_id!r};"
                             f" expected one of {EXPERIMENT_IDS}")
        unknown = set(self.overrides) - _OVERRIDE_KEYS
        if unknown:
            raise ValueError(f"unknown override keys: {sorted(unknown)}")
        self.out_dir = Path(self.out_dir)


@dataclass
class SnapshotReport:
    """Per-node classification at the time of peak expected high infection."""

    snapshot_time: float
    node_classes: list[str]
    counts: dict[str, int]

    def as_dict(self) -> dict:
        return {"snapshot_time": self.snapshot_time,
                "node_classes": list(self.node_classes),
                "counts": dict(self.counts)}


def snapshot(state_traj: StateTrajectory) -> SnapshotReport:
    """Classify nodes by dominant compartment at the earliest peak of total IH.

    Ties in the per-node argmax resolve in compartment order S, IH, IL, RF,
    RC (numpy argmax keeps the first maximum).
    """
    totals = state_traj.states[:, :, IH].sum(axis=1)
    k = int(np.argmax(totals))
    full = state_traj.full_states()[k]
    classes = [COMPARTMENTS[c] for c in np.argmax(full, axis=1)]
    counts = {name: int(classes.count(name)) for name in COMPARTMENTS}
    return SnapshotReport(snapshot_time=float(state_traj.time_grid[k]),
                          node_classes=classes, counts=counts)


def select_sample_nodes(graph: NetworkGraph, initial_state: np.ndarray,
                        count: int = 4) -> list[int]:
    """Deterministic choice of nodes whose trajectories get emitted.

    Order: the first infected-high device, its highest-degree neighbor, then
    the highest-degree untaken node of each room not yet represented (rooms
    in first-appearance order), topped up by global degree rank.  Degree
    ties always break toward the lower index.
    """
    deg = graph.degrees()
    seeds = np.flatnonzero(initial_state[:, IH] == 1.0)
    if seeds.size == 0:
        seeds = np.flatnonzero(initial_state[:, IL] == 1.0)
    first = int(seeds[0]) if seeds.size else 0
    chosen = [first]

    neighbors = sorted(graph.neighbors(first), key=lambda i: (-deg[i], i))
    for i in neighbors:
        if i not in chosen:
            chosen.append(int(i))
            break

    for room in graph.rooms():
        if len(chosen) >= count:
            break
        if any(graph.room_assignment[i] == room for i in chosen):
            continue
        members = [i for i in range(graph.node_count)
                   if graph.room_assignment[i] == room and i not in chosen]
        if members:
            chosen.append(min(members, key=lambda i: (-deg[i], i)))

    for i in sorted(range(graph.node_count), key=lambda i: (-deg[i], i)):
        if len(chosen) >= count:
            break
        if i not in chosen:
            chosen.append(i)
    return chosen[:count]


def _resolve_graph(ref) -> NetworkGraph:
    if isinstance(ref, NetworkGraph):
        return ref
    if ref == "canonical":
        return canonical_graph()
    return load_graph(ref)


def _bounded_instance(graph, beta_high, beta_low, horizon, delta_bounds,
                      gamma_high_bounds, gamma_low_bounds, control_rates=None,
                      overrides=None) -> ModelInstance:
    overrides = dict(overrides or {})
    beta_high = overrides.pop("beta_high", beta_high)
    beta_low = overrides.pop("beta_low", beta_low)
    horizon = overrides.pop("horizon", horizon)
    params = ModelParams.from_scalars(
        graph.node_count, beta_high, beta_low, horizon,
        delta=delta_bounds, gamma_high=gamma_high_bounds, gamma_low=gamma_low_bounds)
    initial = seed_initial_state(graph, **INITIAL_COUNTS)
    return ModelInstance(graph=graph, params=params, initial_state=initial,
                         control_rates=control_rates, **overrides)


def build_case_instance(case_id: int, graph: NetworkGraph,
                        overrides: dict | None = None) -> ModelInstance:
    case = EXP1_CASES[case_id]
    return _bounded_instance(
        graph, case["beta_high"], case["beta_low"], EXP1_HORIZON,
        case["delta_bounds"], case["gamma_high_bounds"], case["gamma_low_bounds"],
        control_rates=case["control_rates"], overrides=overrides)


def build_exp3_instances(graph: NetworkGraph, overrides: dict | None = None):
    """(uncontrolled, controlled) instances with rates pinned via degenerate boxes.

    "Uncontrolled" means no restricted environment at all: both restriction
    rates are held at zero while patching stays at its constant rate (which
    never fires because nothing reaches the recover-first compartment).
    """
    p = EXP3_PARAMS
    uncontrolled = _bounded_instance(
        graph, p["beta_high"], p["beta_low"], p["horizon"],
        delta_bounds=(p["delta_rate"], p["delta_rate"]),
        gamma_high_bounds=(0.0, 0.0), gamma_low_bounds=(0.0, 0.0),
        control_rates=(p["delta_rate"], 0.0, 0.0), overrides=overrides)
    controlled = _bounded_instance(
        graph, p["beta_high"], p["beta_low"], p["horizon"],
        delta_bounds=(p["delta_rate"], p["delta_rate"]),
        gamma_high_bounds=(p["gamma_high_rate"], p["gamma_high_rate"]),
        gamma_low_bounds=(p["gamma_low_rate"], p["gamma_low_rate"]),
        control_rates=(p["delta_rate"], p["gamma_high_rate"], p["gamma_low_rate"]),
        overrides=overrides)
    return uncontrolled, controlled


def build_exp4_instances(stage: int, graph: NetworkGraph,
                         overrides: dict | None = None):
    """(solve_instance, propagation_instance) for one infection-rate stage.

    The solve instance carries the stage's control boxes for the sweep
    solver.  The propagation instance pins the restriction rates to zero
    (the same unrestrained convention exp3 uses) so the infection-rate
    sensitivity the stage sweep measures is visible: any admissible
    restriction schedule on a sixty-node topology outweighs the largest
    possible growth rate of this stage family, leaving every controlled
    peak at the initial condition.
    """
    shared = EXP4_SHARED
    beta_high = EXP4_BETA_HIGH[stage - 1]
    solve_instance = _bounded_instance(
        graph, beta_high, shared["beta_low"], EXP4_HORIZON,
        shared["delta_bounds"], shared["gamma_high_bounds"], shared["gamma_low_bounds"],
        control_rates=shared["control_rates"], overrides=overrides)
    delta_rate = shared["control_rates"][0]
    propagation_instance = _bounded_instance(
        graph, beta_high, shared["beta_low"], EXP4_HORIZON,
        delta_bounds=(delta_rate, delta_rate),
        gamma_high_bounds=(0.0, 0.0), gamma_low_bounds=(0.0, 0.0),
        control_rates=(delta_rate, 0.0, 0.0), overrides=overrides)
    return solve_instance, propagation_instance


def _bounds_dict(case: dict) -> dict:
    return {"delta": list(case["delta_bounds"]),
            "gamma_high": list(case["gamma_high_bounds"]),
            "gamma_low": list(case["gamma_low_bounds"])}


def _run_exp1_case(case_id: int, graph: NetworkGraph, spec: ExperimentSpec) -> dict:
    instance = build_case_instance(case_id, graph, spec.overrides)
    control, states, adjoints, report = fbsm_solve(instance)
    breakdown = objective(states, control)
    nodes = select_sample_nodes(graph, instance.initial_state)
    case = EXP1_CASES[case_id]
    summary = {
        "experiment": f"exp1_case{case_id}",
        "case": {
            "beta_high": case["beta_high"], "beta_low": case["beta_low"],
            "horizon": instance.params.horizon,
            "control_rates": {"delta": case["control_rates"][0],
                              "gamma_high": case["control_rates"][1],
                              "gamma_low": case["control_rates"][2]},
            "control_bounds": _bounds_dict(case),
        },
        "adjoint_mode": instance.adjoint_mode,
        "sample_nodes": nodes,
        "objective": breakdown.as_dict(),
        "sweep": report.as_dict(),
        "peak_IH": float(states.states[:, :, IH].sum(axis=1).max()),
    }
    out = spec.out_dir / f"exp1_case{case_id}"
    out.mkdir(parents=True, exist_ok=True)
    write_summary(out / "summary.json", summary)
    (out / "samples.csv").write_text(sampled_nodes_csv(states, control, nodes))
    (out / "totals.csv").write_text(totals_csv(states))
    return summary


def _run_exp2(graph: NetworkGraph, spec: ExperimentSpec) -> dict:
    instance = build_case_instance(1, graph, spec.overrides)
    config = RgcsConfig(num_subintervals=spec.num_subintervals,
                        rng_seed=spec.rng_seed, population_size=spec.population_size)
    comparison = rgcs_population_compare(instance, config)
    population_min = comparison.strategies[0]["J"]
    summary = {
        "experiment": "exp2",
        "case": {"beta_high": instance.params.beta_high,
                 "beta_low": instance.params.beta_low,
                 "horizon": instance.params.horizon},
        "rgcs": {"num_subintervals": config.num_subintervals,
                 "rng_seed": config.rng_seed,
                 "population_size": config.population_size},
        "population": comparison.as_dict(),
        "population_min_J": population_min,
        "optimal_beats_population": bool(comparison.optimal_J < population_min),
    }
    out = spec.out_dir / "exp2"
    out.mkdir(parents=True, exist_ok=True)
    write_summary(out / "summary.json", summary)
    return summary


def _run_exp3(graph: NetworkGraph, spec: ExperimentSpec) -> dict:
    uncontrolled, controlled = build_exp3_instances(graph, spec.overrides)
    runs = {}
    for name, instance in (("uncontrolled", uncontrolled), ("controlled", controlled)):
        states = integrate_forward(instance, instance.fixed_control_trajectory())
        runs[name] = states
    peak_ih = {name: float(tr.states[:, :, IH].sum(axis=1).max()) for name, tr in runs.items()}
    peak_il = {name: float(tr.states[:, :, IL].sum(axis=1).max()) for name, tr in runs.items()}
    reduction = 100.0 * (peak_ih["uncontrolled"] - peak_ih["controlled"]) / peak_ih["uncontrolled"]
    summary = {
        "experiment": "exp3",
        "parameters": dict(EXP3_PARAMS),
        "peak_IH_uncontrolled": peak_ih["uncontrolled"],
        "peak_IH_controlled": peak_ih["controlled"],
        "peak_IL_uncontrolled": peak_il["uncontrolled"],
        "peak_IL_controlled": peak_il["controlled"],
        "reduction_pct": reduction,
        "snapshot_uncontrolled": snapshot(runs["uncontrolled"]).as_dict(),
        "snapshot_controlled": snapshot(runs["controlled"]).as_dict(),
        "reference_values": dict(EXP3_REFERENCE),
    }
    out = spec.out_dir / "exp3"
    out.mkdir(parents=True, exist_ok=True)
    write_summary(out / "summary.json", summary)
    (out / "uncontrolled_totals.csv").write_text(totals_csv(runs["uncontrolled"]))
    (out / "controlled_totals.csv").write_text(totals_csv(runs["controlled"]))
    return summary


def _run_exp4_stage(stage: int, graph: NetworkGraph, spec: ExperimentSpec) -> dict:
    solve_instance, propagation_instance = build_exp4_instances(stage, graph, spec.overrides)
    control, opt_states, _, report = fbsm_solve(solve_instance)
    prop_states = integrate_forward(
        propagation_instance, propagation_instance.fixed_control_trajectory())
    summary = {
        "experiment": f"exp4_stage{stage}",
        "beta_high": solve_instance.params.beta_high,
        "beta_low": solve_instance.params.beta_low,
        "horizon": solve_instance.params.horizon,
        "peak_IH": float(prop_states.states[:, :, IH].sum(axis=1).max()),
        "peak_IL": float(prop_states.states[:, :, IL].sum(axis=1).max()),
        "peak_IH_optimal": float(opt_states.states[:, :, IH].sum(axis=1).max()),
        "peak_IL_optimal": float(opt_states.states[:, :, IL].sum(axis=1).max()),
        "sweep": report.as_dict(),
    }
    out = spec.out_dir / f"exp4_stage{stage}"
    out.mkdir(parents=True, exist_ok=True)
    write_summary(out / "summary.json", summary)
    (out / "propagation_totals.csv").write_text(totals_csv(prop_states))
    (out / "optimal_totals.csv").write_text(totals_csv(opt_states))
    return summary


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run one experiment (or a whole family) and write its artifacts."""
    graph = _resolve_graph(spec.graph)
    eid = spec.experiment_id
    if eid.startswith("exp1_case"):
        return _run_exp1_case(int(eid[-1]), graph, spec)
    if eid == "exp1":
        cases = [_run_exp1_case(c, graph, spec) for c in (1, 2, 3, 4)]
        summary = {"experiment": "exp1", "cases": cases}
        spec.out_dir.mkdir(parents=True, exist_ok=True)
        write_summary(spec.out_dir / "exp1_summary.json", summary)
        return summary
    if eid == "exp2":
        return _run_exp2(graph, spec)
    if eid == "exp3":
        return _run_exp3(graph, spec)
    if eid.startswith("exp4_stage"):
        return _run_exp4_stage(int(eid[-1]), graph, spec)
    if eid == "exp4":
        stages = [_run_exp4_stage(s, graph, spec) for s in (1, 2, 3, 4)]
        peaks_ih = [s["peak_IH"] for s in stages]
        peaks_il = [s["peak_IL"] for s in stages]
        summary = {
            "experiment": "exp4",
            "stages": stages,
            "orderings": {
                "peak_IH_strictly_increasing": bool(
                    all(a < b for a, b in zip(peaks_ih, peaks_ih[1:]))),
                "peak_IL_non_increasing": bool(
                    all(a >= b for a, b in zip(peaks_il, peaks_il[1:]))),
            },
            "reference_values": dict(EXP4_REFERENCE),
        }
        spec.out_dir.mkdir(parents=True, exist_ok=True)
        write_summary(spec.out_dir / "exp4_summary.json", summary)
        return summary
    raise ValueError(f"unknown experiment id {eid!r}")
