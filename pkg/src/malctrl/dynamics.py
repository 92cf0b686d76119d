"""Node-level propagation dynamics: ODE right-hand side, RK4 forward
integration, and a stochastic jump-process oracle for validation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import NetworkGraph
from .model import (DELTA, GAMMA_H, GAMMA_L, IH, IL, RF, S,
                    ControlTrajectory, DimensionMismatchError, GridMismatchError,
                    ModelInstance, ModelParams, StateTrajectory, TRAJECTORY_TOL,
                    uniform_grid)


class StepTooLargeError(RuntimeError):
    """The forward integrator left the valid state region; shrink dt."""


class NonIndicatorInitialStateError(ValueError):
    """The jump-process simulator needs pure 0/1 initial states."""


def _reduced_rhs(states: np.ndarray, controls: np.ndarray, beta_high: float,
                 beta_low: float, adjacency: np.ndarray) -> np.ndarray:
    """Derivatives of the four stored compartments, shape (N, 4).

    RC is never integrated; it is reconstructed from normalization, so this
    reduced system is what the forward solver advances.
    """
    pressure_h = adjacency @ states[:, IH]
    pressure_l = adjacency @ states[:, IL]
    new_h = beta_high * states[:, S] * pressure_h
    new_l = beta_low * states[:, S] * pressure_l
    contained_h = controls[:, GAMMA_H] * states[:, IH]
    contained_l = controls[:, GAMMA_L] * states[:, IL]
    patched = controls[:, DELTA] * states[:, RF]
    out = np.empty_like(states)
    out[:, S] = -new_h - new_l
    out[:, IH] = new_h - contained_h
    out[:, IL] = new_l - contained_l
    out[:, RF] = contained_h + contained_l - patched
    return out


def ode_rhs(state: np.ndarray, control: np.ndarray, params: ModelParams,
            graph: NetworkGraph) -> np.ndarray:
    """All five compartment derivatives per node, shape (N, 5).

    Columns are [dS, dIH, dIL, dRF, dRC].  Each row sums to zero up to
    rounding because every term appears once with each sign.
    """
    state = np.asarray(state, dtype=float)
    control = np.asarray(control, dtype=float)
    n = graph.node_count
    if state.shape != (n, 4):
        raise DimensionMismatchError(f"state must have shape ({n}, 4), got {state.shape}")
    if control.shape != (n, 3):
        raise DimensionMismatchError(f"control must have shape ({n}, 3), got {control.shape}")
    reduced = _reduced_rhs(state, control, params.beta_high, params.beta_low, graph.adjacency)
    patched = control[:, DELTA] * state[:, RF]
    return np.concatenate([reduced, patched[:, None]], axis=1)


def integrate_forward(instance: ModelInstance, control: ControlTrajectory,
                      dt: float | None = None) -> StateTrajectory:
    """Advance the expected network state with classical fixed-step RK4.

    The control is piecewise constant: the grid value at index k is held for
    the whole step to t_{k+1}, including the half-step stages.  Raises
    StepTooLargeError when any compartment leaves [-1e-6, 1 + 1e-6], which
    signals that the step size is too coarse for the configured rates.
    """
    horizon = instance.params.horizon
    if dt is None:
        grid = instance.time_grid()
    else:
        steps = round(horizon / dt)
        if steps < 1 or abs(steps * dt - horizon) > 1e-9 * max(1.0, horizon):
            raise ValueError(f"dt={dt} does not divide the horizon {horizon}")
        grid = uniform_grid(horizon, steps)
    if control.time_grid.shape != grid.shape or not np.allclose(control.time_grid, grid):
        raise GridMismatchError(
            f"control grid has {control.time_grid.shape[0]} points, expected {grid.shape[0]}")

    steps = grid.shape[0] - 1
    h = grid[1] - grid[0]
    beta_high, beta_low = instance.params.beta_high, instance.params.beta_low
    adjacency = instance.graph.adjacency
    states = np.empty((steps + 1, instance.node_count, 4))
    states[0] = instance.initial_state
    x = instance.initial_state.copy()
    for k in range(steps):
        u = control.controls[k]
        k1 = _reduced_rhs(x, u, beta_high, beta_low, adjacency)
        k2 = _reduced_rhs(x + 0.5 * h * k1, u, beta_high, beta_low, adjacency)
        k3 = _reduced_rhs(x + 0.5 * h * k2, u, beta_high, beta_low, adjacency)
        k4 = _reduced_rhs(x + h * k3, u, beta_high, beta_low, adjacency)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rc = 1.0 - x.sum(axis=1)
        if (x.min() < -TRAJECTORY_TOL or x.max() > 1.0 + TRAJECTORY_TOL
                or rc.min() < -TRAJECTORY_TOL or rc.max() > 1.0 + TRAJECTORY_TOL):
            raise StepTooLargeError(
                f"state left [0, 1] at t={grid[k + 1]:.6g}; reduce dt below {h:.6g}")
        states[k + 1] = x
    return StateTrajectory(time_grid=grid, states=states)


@dataclass
class CtmcSummary:
    """Monte-Carlo occupancy counts from the per-node jump process."""

    time_grid: np.ndarray
    mean_counts: np.ndarray   # (K+1, 5) mean devices per compartment
    std_error: np.ndarray     # (K+1, 5) standard error of those means
    num_runs: int


_MAX_STEP_PROBABILITY = 0.05
_BATCH = 4096


def ctmc_simulate(instance: ModelInstance, control: ControlTrajectory,
                  rng_seed: int, num_runs: int) -> CtmcSummary:
    """Simulate the stochastic per-node compartment process.

    Each control-grid cell is subdivided until every per-substep transition
    probability (rate times substep) is at most 0.05, then transitions are
    drawn as Bernoulli events from one uniform per node and substep; a
    susceptible node checks the high-capability infection first.  Replicas
    run in fixed-size batches of 4096, each batch on its own generator seeded
    by (rng_seed, batch_index), so results do not depend on how batches are
    scheduled and are reproducible bit-for-bit for a given seed.
    """
    grid = instance.time_grid()
    if control.time_grid.shape != grid.shape or not np.allclose(control.time_grid, grid):
        raise GridMismatchError("control grid does not match the instance grid")
    init = instance.initial_state
    if not np.isin(init, (0.0, 1.0)).all():
        raise NonIndicatorInitialStateError(
            "jump-process simulation needs indicator (0/1) initial states")
    if num_runs < 1:
        raise ValueError("num_runs must be positive")

    n = instance.node_count
    steps = grid.shape[0] - 1
    dt = grid[1] - grid[0]
    beta_high, beta_low = instance.params.beta_high, instance.params.beta_low
    adjacency = instance.graph.adjacency.astype(float)
    max_degree = adjacency.sum(axis=1).max()
    rate_max = max(beta_high * max_degree, beta_low * max_degree,
                   float(control.controls.max(initial=0.0)))
    substeps = max(1, int(np.ceil(rate_max * dt / _MAX_STEP_PROBABILITY)))
    sdt = dt / substeps

    # compartment codes match the column order: 0 S, 1 IH, 2 IL, 3 RF, 4 RC
    init_code = np.zeros(n, dtype=np.int8)
    init_code[init[:, IH] == 1.0] = 1
    init_code[init[:, IL] == 1.0] = 2
    init_code[init[:, RF] == 1.0] = 3
    init_code[init.sum(axis=1) == 0.0] = 4

    count_sum = np.zeros((steps + 1, 5))
    count_sq = np.zeros((steps + 1, 5))

    done = 0
    batch_index = 0
    while done < num_runs:
        m = min(_BATCH, num_runs - done)
        rng = np.random.default_rng([rng_seed, batch_index])
        y = np.tile(init_code, (m, 1))
        _accumulate(count_sum, count_sq, 0, y)
        for k in range(steps):
            u = control.controls[k]
            p_gh = u[:, GAMMA_H] * sdt
            p_gl = u[:, GAMMA_L] * sdt
            p_d = u[:, DELTA] * sdt
            for _ in range(substeps):
                draws = rng.random((m, n))
                p_h = beta_high * ((y == 1) @ adjacency.T) * sdt
                p_l = beta_low * ((y == 2) @ adjacency.T) * sdt
                is_s = y == 0
                to_high = is_s & (draws < p_h)
                to_low = is_s & ~to_high & (draws < p_h + p_l)
                to_rf = ((y == 1) & (draws < p_gh)) | ((y == 2) & (draws < p_gl))
                to_rc = (y == 3) & (draws < p_d)
                y[to_high] = 1
                y[to_low] = 2
                y[to_rf] = 3
                y[to_rc] = 4
            _accumulate(count_sum, count_sq, k + 1, y)
        done += m
        batch_index += 1

    mean = count_sum / num_runs
    if num_runs > 1:
        var = np.maximum(count_sq - num_runs * mean ** 2, 0.0) / (num_runs - 1)
        std_error = np.sqrt(var / num_runs)
    else:
        std_error = np.zeros_like(mean)
    return CtmcSummary(time_grid=grid, mean_counts=mean, std_error=std_error,
                       num_runs=num_runs)


def _accumulate(count_sum: np.ndarray, count_sq: np.ndarray, k: int, y: np.ndarray) -> None:
    counts = np.stack([(y == c).sum(axis=1) for c in range(5)], axis=1).astype(float)
    count_sum[k] += counts.sum(axis=0)
    count_sq[k] += (counts ** 2).sum(axis=0)
