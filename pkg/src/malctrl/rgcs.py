"""Randomly generated piecewise-constant control strategies (comparison baseline)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import integrate_forward
from .model import ControlTrajectory, ModelInstance
from .objective import objective
from .sweep import fbsm_solve


@dataclass(frozen=True)
class RgcsConfig:
    num_subintervals: int = 100
    rng_seed: int = 0
    population_size: int = 100

    def __post_init__(self):
        if self.num_subintervals < 1:
            raise ValueError("num_subintervals must be at least 1")
        if self.population_size < 1:
            raise ValueError("population_size must be at least 1")


def random_partition(horizon: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n interior cut points, sorted, strictly increasing inside (0, horizon).

    Exact duplicates (probability zero in real arithmetic, possible in
    floats) are nudged apart by one ulp.
    """
    cuts = np.sort(rng.uniform(0.0, horizon, size=n))
    for i in range(1, n):
        if cuts[i] <= cuts[i - 1]:
            cuts[i] = np.nextafter(cuts[i - 1], horizon)
    return cuts


def rgcs_generate(instance: ModelInstance, config: RgcsConfig) -> ControlTrajectory:
    """Draw one admissible piecewise-constant strategy, deterministic per seed.

    The horizon is split at num_subintervals uniform cut points; on each of
    the resulting subintervals every node's three control components are
    drawn uniformly from their boxes and held constant.  The strategy is then
    resampled onto the instance grid left-constantly, so the final grid point
    carries the last subinterval's values.
    """
    rng = np.random.default_rng(config.rng_seed)
    horizon = instance.params.horizon
    cuts = random_partition(horizon, config.num_subintervals, rng)
    lo = instance.params.lower_bounds()   # (N, 3)
    hi = instance.params.upper_bounds()
    draws = rng.random((instance.node_count, config.num_subintervals + 1, 3))
    values = lo[:, None, :] + (hi - lo)[:, None, :] * draws
    grid = instance.time_grid()
    cell = np.searchsorted(cuts, grid, side="right")
    controls = values[:, cell, :].transpose(1, 0, 2)
    return ControlTrajectory(time_grid=grid, controls=controls)


@dataclass
class PopulationComparison:
    """Objective values of a random-strategy population next to the sweep optimum."""

    strategies: list[dict]       # {"seed": int, "J": float}, sorted by J ascending
    optimal_J: float
    optimal_converged: bool

    def as_dict(self) -> dict:
        return {
            "strategies": [dict(s) for s in self.strategies],
            "optimal_J": self.optimal_J,
            "optimal_converged": self.optimal_converged,
        }


def rgcs_population_compare(instance: ModelInstance, config: RgcsConfig) -> PopulationComparison:
    """Evaluate population_size random strategies against the sweep optimum.

    Strategy i uses seed config.rng_seed + i, so the population is
    reproducible and embarrassingly parallel in principle.
    """
    entries = []
    for i in range(config.population_size):
        seed = config.rng_seed + i
        strategy = rgcs_generate(instance, RgcsConfig(
            num_subintervals=config.num_subintervals, rng_seed=seed,
            population_size=1))
        states = integrate_forward(instance, strategy)
        entries.append({"seed": seed, "J": objective(states, strategy).total})
    entries.sort(key=lambda e: (e["J"], e["seed"]))

    control, states, _, report = fbsm_solve(instance)
    best = objective(states, control).total
    return PopulationComparison(strategies=entries, optimal_J=best,
                                optimal_converged=report.converged)
