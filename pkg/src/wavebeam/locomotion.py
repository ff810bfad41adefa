"""Undulation locomotion on ground with direction-dependent resistance.

The beam is free-floating (no pinned ends); passive wheels under the body
resist sideways sliding much more than rolling forward, which rectifies the
traveling body wave into net thrust.  Resistance is computed per node in the
local tangent/normal frame of the body.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels, solver
from .geometry import DiscreteBeam
from .solver import Environment, RodState
from .tendon import ActuationProfile, Trace, run_actuated


class LocomotionError(ValueError):
    pass


VISCOUS = "AnisotropicViscous"
COULOMB = "AnisotropicCoulomb"

DEFAULT_C_LONG = 0.02       # N s/m per node, rolling direction
DEFAULT_ANISOTROPY = 20.0   # c_lat / c_long for wheeled contact
COULOMB_V_REG = 1e-4        # m/s, tanh regularization scale


@dataclass(frozen=True)
class GroundModel:
    """Per-node ground resistance, anisotropic in the body frame."""

    mode: str = VISCOUS
    c_longitudinal: float = DEFAULT_C_LONG
    c_lateral: float = DEFAULT_C_LONG * DEFAULT_ANISOTROPY
    coulomb_normal_load: float = 0.0    # N per node, Coulomb mode
    mu_longitudinal: float = 0.0
    mu_lateral: float = 0.0

    def __post_init__(self):
        if self.mode not in (VISCOUS, COULOMB):
            raise LocomotionError(f"unknown ground mode {self.mode!r}")
        if not 0.0 <= self.c_longitudinal <= self.c_lateral:
            raise LocomotionError(
                "need c_lateral >= c_longitudinal >= 0: wheels roll freely "
                "forward and resist sideways")
        if not 0.0 <= self.mu_longitudinal <= self.mu_lateral:
            raise LocomotionError("need mu_lateral >= mu_longitudinal >= 0")
        if self.coulomb_normal_load < 0:
            raise LocomotionError("coulomb_normal_load must be >= 0")

    def _kernel_args(self) -> tuple:
        mode = 0 if self.mode == VISCOUS else 1
        return (True, mode, self.c_longitudinal, self.c_lateral,
                self.mu_longitudinal, self.mu_lateral,
                self.coulomb_normal_load, COULOMB_V_REG)


@dataclass(frozen=True)
class LocomotionResult:
    com_trajectory: np.ndarray   # (n_samples, 2) m
    net_displacement: float      # m, along initial body axis
    mean_speed: float            # m/s
    stride_displacement: float   # m per actuation cycle


def friction_forces(state: RodState, ground: GroundModel) -> np.ndarray:
    """Ground reaction on each node; opposes motion (F . v <= 0)."""
    x = np.ascontiguousarray(state.positions, dtype=np.float64)
    v = np.ascontiguousarray(state.velocities, dtype=np.float64)
    f = np.zeros_like(x)
    mode = 0 if ground.mode == VISCOUS else 1
    _kernels.friction_force_kernel(
        x, v, mode, ground.c_longitudinal, ground.c_lateral,
        ground.mu_longitudinal, ground.mu_lateral,
        ground.coulomb_normal_load, COULOMB_V_REG, f)
    return f


def free_environment(global_viscous_damping: float =
                     solver.DEFAULT_VISCOUS_DAMPING) -> Environment:
    """No constraints at all: the robot carries its own boundary conditions."""
    return Environment(global_viscous_damping=global_viscous_damping)


def simulate_locomotion(beam: DiscreteBeam, tendons, profile: ActuationProfile,
                        ground: GroundModel | None = None,
                        duration: float | None = None,
                        sample_rate: float = 100.0, seed: int = 0,
                        env: Environment | None = None,
                        ) -> tuple[Trace, LocomotionResult]:
    """Drive a free-floating beam against the ground model.

    duration defaults to the profile's n_cycles; when given it overrides
    the cycle count (rounded up to whole cycles, at least 5 periods so the
    post-transient stride is measurable).
    """
    if ground is None:
        ground = GroundModel()
    if env is None:
        env = free_environment()
    if duration is not None:
        if duration < 5 * profile.period:
            raise LocomotionError("duration must cover >= 5 actuation periods")
        n_cycles = int(np.ceil(duration / profile.period))
        profile = ActuationProfile(
            delta_L=profile.delta_L, delta_tau=profile.delta_tau,
            period=profile.period, n_cycles=n_cycles,
            precompress_ramp=profile.precompress_ramp)

    trace = run_actuated(beam, env, tendons, profile,
                         sample_rate=sample_rate, seed=seed,
                         friction=ground._kernel_args(),
                         beam_id=getattr(beam, "beam_id", "custom"))

    com = np.asarray(trace.com)
    # Forward = toward the motor end (marker 0). The body wave travels
    # from the motor end toward the far end, and an undulator advances
    # against its own wave, so the motor end leads.
    p0 = np.asarray(trace.marker_positions)[:, 0, :]
    axis = p0[0] - p0[-1]
    norm = np.linalg.norm(axis)
    axis = axis / norm if norm > 0 else np.array([1.0, 0.0])
    along = (com - com[0]) @ axis
    net = float(along[-1])
    total_time = trace.times[-1] - trace.times[0]
    mean_speed = float(np.linalg.norm(com[-1] - com[0]) / total_time) \
        if total_time > 0 else 0.0
    stride = net / profile.n_cycles
    result = LocomotionResult(com_trajectory=com, net_displacement=net,
                              mean_speed=mean_speed,
                              stride_displacement=float(stride))
    return trace, result
