"""Running cost and cumulative objective of a trajectory pair.

The running cost charges the expected number of high-capability infections
plus quadratic control effort, and credits completed recoveries:

    sum_i [ IH_i + delta_i^2 / 2 + (gamma_h_i^2 + gamma_l_i^2) / 2 - RC_i ]

The cumulative objective integrates it with composite trapezoid quadrature
on the trajectory grid, which matches the second-order accuracy of the
stored RK4 trajectories.  The recovery credit can push the objective
negative; no normalization is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (DELTA, GAMMA_H, GAMMA_L, IH, ControlTrajectory,
                    DimensionMismatchError, GridMismatchError, StateTrajectory,
                    r_complete)


@dataclass(frozen=True)
class ObjectiveBreakdown:
    """Cumulative objective and its four quadrature terms.

    ``total`` is computed as infection + patch + restriction - recovery of
    the individually integrated terms, so that identity holds exactly.
    """

    total: float
    infection_term: float
    patch_cost: float
    restriction_cost: float
    recovery_reward: float

    def as_dict(self) -> dict:
        return {
            "J": self.total,
            "infection": self.infection_term,
            "patch": self.patch_cost,
            "restriction": self.restriction_cost,
            "recovery": self.recovery_reward,
        }


def running_cost(state: np.ndarray, control: np.ndarray) -> float:
    """Instantaneous cost of one (state, control) snapshot."""
    state = np.asarray(state, dtype=float)
    control = np.asarray(control, dtype=float)
    if state.ndim != 2 or state.shape[1] != 4 or control.shape != (state.shape[0], 3):
        raise DimensionMismatchError(
            f"incompatible state {state.shape} and control {control.shape}")
    infection = state[:, IH].sum()
    patch = 0.5 * (control[:, DELTA] ** 2).sum()
    restriction = 0.5 * (control[:, GAMMA_H] ** 2 + control[:, GAMMA_L] ** 2).sum()
    recovery = r_complete(state).sum()
    return float(infection + patch + restriction - recovery)


def objective(state_traj: StateTrajectory, control_traj: ControlTrajectory) -> ObjectiveBreakdown:
    """Trapezoid quadrature of the running cost over the shared grid."""
    if (state_traj.time_grid.shape != control_traj.time_grid.shape
            or not np.array_equal(state_traj.time_grid, control_traj.time_grid)):
        raise GridMismatchError("state and control trajectories use different grids")
    states = state_traj.states
    controls = control_traj.controls
    dt = state_traj.dt

    infection = np.trapezoid(states[:, :, IH].sum(axis=1), dx=dt)
    patch = np.trapezoid(0.5 * (controls[:, :, DELTA] ** 2).sum(axis=1), dx=dt)
    restriction = np.trapezoid(
        0.5 * (controls[:, :, GAMMA_H] ** 2 + controls[:, :, GAMMA_L] ** 2).sum(axis=1), dx=dt)
    recovery = np.trapezoid(r_complete(states).sum(axis=1), dx=dt)
    return ObjectiveBreakdown(
        total=float(infection + patch + restriction - recovery),
        infection_term=float(infection),
        patch_cost=float(patch),
        restriction_cost=float(restriction),
        recovery_reward=float(recovery),
    )
