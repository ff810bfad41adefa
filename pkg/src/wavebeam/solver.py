"""Damped planar rod dynamics: energy, forces, time stepping, settling.

The heavy loops live in _kernels; this module owns the public types,
validation and the settling logic.  Integration is explicit symplectic
Euler guarded by a conservative stability bound, so every run is
deterministic: identical inputs give bit-identical trajectories.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import DiscreteBeam

DEFAULT_VISCOUS_DAMPING = 0.002   # N s/m per node, config-overridable
GRAVITY_ACCEL = 9.81              # m/s^2, normal load for bench friction
DEFAULT_DT_FACTOR = 0.5
SETTLE_PERTURBATION_FRACTION = 1e-4   # of beam length, at the midpoint node


class SolverError(RuntimeError):
    pass


class StabilityError(SolverError):
    """Requested dt at or above the explicit stability bound."""


class NumericalError(SolverError):
    """Non-finite values encountered."""


class SettleTimeout(SolverError):
    """Dynamic relaxation did not reach the kinetic-energy tolerance in time."""

    def __init__(self, msg, state=None):
        super().__init__(msg)
        self.state = state


@dataclass(frozen=True)
class RodState:
    """Instantaneous configuration of the discretized rod (SI units)."""
    time: float
    positions: np.ndarray    # (n, 2) m
    velocities: np.ndarray   # (n, 2) m/s

    def copy(self) -> "RodState":
        return RodState(self.time, self.positions.copy(), self.velocities.copy())


@dataclass(frozen=True)
class Environment:
    """Boundary conditions and ambient damping for one simulation."""
    gravity: tuple[float, float] = (0.0, 0.0)
    global_viscous_damping: float = DEFAULT_VISCOUS_DAMPING   # N s/m per node
    fixed_node_constraints: tuple[tuple[int, tuple[float, float]], ...] = ()
    # Roller supports: (node, axis, value) fixes one coordinate only, so the
    # node may still slide along the other axis (axis 0 = x, 1 = y).
    roller_constraints: tuple[tuple[int, int, float], ...] = ()
    # Coulomb friction against the surface the beam rests on.  The planar
    # model is a top view of a horizontal bench, so every node carries its
    # own weight as normal load; the friction deceleration is mu * g.
    bench_friction_mu: float = 0.0
    # Rate-quadratic contact drag, N s^2/m^2 per node: negligible during
    # slow quasi-static motion, dominant during fast snap transients.
    quadratic_drag: float = 0.0

    def __post_init__(self):
        if self.global_viscous_damping < 0:
            raise ValueError("global_viscous_damping must be >= 0")
        if self.bench_friction_mu < 0:
            raise ValueError("bench_friction_mu must be >= 0")
        if self.quadratic_drag < 0:
            raise ValueError("quadratic_drag must be >= 0")
        for _, axis, _ in self.roller_constraints:
            if axis not in (0, 1):
                raise ValueError("roller axis must be 0 or 1")


@dataclass(frozen=True)
class TendonLoad:
    """Fixed-rest-length tendon pull, the fast path for settling."""
    guide_index: int
    offsets: np.ndarray       # (node_count,) signed surface offsets, m
    stiffness: float          # N/m
    rest_length: float        # m


def rest_state(beam: DiscreteBeam) -> RodState:
    return RodState(0.0, beam.node_rest_positions.copy(),
                    np.zeros_like(beam.node_rest_positions))


def _check_state(state: RodState, beam: DiscreteBeam):
    n = beam.node_count
    if state.positions.shape != (n, 2) or state.velocities.shape != (n, 2):
        raise SolverError(
            f"state arrays must be ({n}, 2); got {state.positions.shape} "
            f"and {state.velocities.shape}")


def voronoi_lengths(beam: DiscreteBeam) -> np.ndarray:
    ell = beam.segment_rest_lengths
    return 0.5 * (ell[:-1] + ell[1:])


def _pins(env: Environment, n: int):
    idx = np.array([p[0] for p in env.fixed_node_constraints], dtype=np.int64)
    pts = np.array([p[1] for p in env.fixed_node_constraints],
                   dtype=np.float64).reshape(-1, 2)
    if len(idx) and (idx.min() < 0 or idx.max() >= n):
        raise SolverError("pinned node index out of range")
    cidx = np.array([r[0] for r in env.roller_constraints], dtype=np.int64)
    caxis = np.array([r[1] for r in env.roller_constraints], dtype=np.int64)
    cval = np.array([r[2] for r in env.roller_constraints], dtype=np.float64)
    if len(cidx) and (cidx.min() < 0 or cidx.max() >= n):
        raise SolverError("roller node index out of range")
    return idx, pts, cidx, caxis, cval


def elastic_energy(state: RodState, beam: DiscreteBeam) -> float:
    """Total stretch + bend energy in J."""
    _check_state(state, beam)
    return float(_kernels.elastic_energy_kernel(
        state.positions, beam.segment_rest_lengths,
        beam.segment_stretch_stiffness, beam.vertex_bend_stiffness,
        voronoi_lengths(beam)))


def elastic_forces(state: RodState, beam: DiscreteBeam) -> np.ndarray:
    """-grad of elastic_energy w.r.t. node positions, (n, 2) in N."""
    _check_state(state, beam)
    f = np.zeros_like(state.positions)
    _kernels.internal_forces(
        state.positions, beam.segment_rest_lengths,
        beam.segment_stretch_stiffness, beam.vertex_bend_stiffness,
        voronoi_lengths(beam), f)
    return f


def kinetic_energy(state: RodState, beam: DiscreteBeam) -> float:
    return float(0.5 * np.sum(beam.node_masses[:, None] * state.velocities ** 2))


def stable_dt(beam: DiscreteBeam) -> float:
    """Conservative explicit-integration time-step bound in s.

    Base bound 0.5 * min_i sqrt(m_i * l_i / EA_i) over edges, tightened by
    the analogous bound for the bending springs.
    """
    ell = beam.segment_rest_lengths
    m_edge = np.minimum(beam.node_masses[:-1], beam.node_masses[1:])
    dt_stretch = np.sqrt(m_edge * ell / beam.segment_stretch_stiffness).min()
    lb = voronoi_lengths(beam)
    m_vert = beam.node_masses[1:-1]
    dt_bend = np.sqrt(m_vert * lb ** 3 / (4.0 * beam.vertex_bend_stiffness)).min()
    return 0.5 * float(min(dt_stretch, dt_bend))


def default_dt(beam: DiscreteBeam, dt_factor: float = DEFAULT_DT_FACTOR) -> float:
    return dt_factor * stable_dt(beam)


def _tendon_arrays(loads):
    if not loads:
        z = np.zeros(3)
        return False, 0, z, z, 0.0, 0.0, 0.0
    if len(loads) != 2:
        raise SolverError("expected exactly two tendon loads (left, right)")
    left, right = loads
    if left.guide_index != right.guide_index:
        raise SolverError("tendon loads must share the guide node")
    if left.stiffness != right.stiffness:
        raise SolverError("tendon loads must share one stiffness")
    return (True, left.guide_index,
            np.asarray(left.offsets, dtype=np.float64),
            np.asarray(right.offsets, dtype=np.float64),
            float(left.stiffness), float(left.rest_length),
            float(right.rest_length))


_NO_FRICTION = (False, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 1e-4)


def step(state: RodState, beam: DiscreteBeam, env: Environment,
         external_forces: np.ndarray | None, dt: float) -> RodState:
    """One damped symplectic-Euler step.  Pinned nodes hold exactly."""
    _check_state(state, beam)
    if dt <= 0:
        raise StabilityError(f"dt must be > 0, got {dt}")
    bound = stable_dt(beam)
    if dt >= bound:
        raise StabilityError(f"dt={dt:g} s at or above stability bound {bound:g} s")
    n = beam.node_count
    f_ext = np.zeros((n, 2))
    f_ext += beam.node_masses[:, None] * np.asarray(env.gravity)
    if external_forces is not None:
        external_forces = np.asarray(external_forces, dtype=np.float64)
        if not np.all(np.isfinite(external_forces)):
            raise NumericalError("non-finite external force input")
        f_ext += external_forces
    pin_idx, pin_pts, comp_idx, comp_axis, comp_val = _pins(env, n)

    x = state.positions.copy()
    v = state.velocities.copy()
    sched = np.zeros(2)
    markers = np.zeros(0, dtype=np.int64)
    out0 = np.zeros(0)
    _kernels.run_steps(
        x, v, state.time, dt, 1,
        beam.segment_rest_lengths, beam.segment_stretch_stiffness,
        beam.vertex_bend_stiffness, voronoi_lengths(beam), beam.node_masses,
        beam.rayleigh_alpha, beam.rayleigh_beta, env.global_viscous_damping,
        env.quadratic_drag, env.bench_friction_mu * GRAVITY_ACCEL,
        f_ext, pin_idx, pin_pts, comp_idx, comp_axis, comp_val,
        False, 0, np.zeros(n), np.zeros(n), 0.0, sched, sched,
        *_NO_FRICTION,
        10, markers,
        out0, out0, out0, np.zeros((0, 0, 2)), np.zeros((0, 2)))
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
        raise NumericalError(f"non-finite state after step at t={state.time:g} s")
    return RodState(state.time + dt, x, v)


def settle(state: RodState, beam: DiscreteBeam, env: Environment,
           force_provider=None, tol_kinetic: float = 1e-10,
           max_time: float = 20.0, dt: float | None = None,
           perturb_seed: int | None = 0,
           kinetic_damping: bool = True) -> RodState:
    """Relax to static equilibrium under the given loads.

    force_provider is either None, a sequence of TendonLoad, or a callable
    state -> (n,2) force array (slower path).  A one-time transverse
    perturbation at the midpoint node (seeded, 1e-4 of beam length) breaks
    the symmetry of compressed straight configurations; pass
    perturb_seed=None to suppress it.
    """
    _check_state(state, beam)
    if tol_kinetic <= 0:
        raise SolverError("tol_kinetic must be > 0")
    if dt is None:
        dt = default_dt(beam)
    n = beam.node_count
    x = state.positions.copy()
    v = state.velocities.copy()

    if perturb_seed is not None:
        rng = np.random.default_rng(perturb_seed)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        mid = n // 2
        # transverse = local normal at the midpoint node
        nrm = np.empty(2)
        _kernels.node_normal(x, mid, nrm)
        x[mid] += sign * SETTLE_PERTURBATION_FRACTION * beam.total_length * nrm

    f_ext = beam.node_masses[:, None] * np.asarray(env.gravity)
    pin_idx, pin_pts, comp_idx, comp_axis, comp_val = _pins(env, n)
    max_steps = int(np.ceil(max_time / dt))

    if callable(force_provider):
        return _settle_callable(x, v, state.time, beam, env, force_provider,
                                tol_kinetic, dt, max_steps, kinetic_damping)

    loads = list(force_provider) if force_provider else []
    has_t, g_idx, offs_l, offs_r, k_t, rl, rr = _tendon_arrays(loads)
    steps, converged = _kernels.relax_steps(
        x, v, dt, max_steps,
        beam.segment_rest_lengths, beam.segment_stretch_stiffness,
        beam.vertex_bend_stiffness, voronoi_lengths(beam), beam.node_masses,
        beam.rayleigh_alpha, beam.rayleigh_beta, env.global_viscous_damping,
        env.quadratic_drag, env.bench_friction_mu * GRAVITY_ACCEL,
        np.ascontiguousarray(f_ext), pin_idx, pin_pts,
        comp_idx, comp_axis, comp_val,
        has_t, g_idx, offs_l, offs_r, k_t, rl, rr,
        tol_kinetic, kinetic_damping)
    out = RodState(state.time + steps * dt, x, np.zeros_like(v))
    if not converged:
        raise SettleTimeout(
            f"settle did not converge within {max_time:g} s simulated time",
            state=out)
    if not np.all(np.isfinite(x)):
        raise NumericalError("non-finite state during settle")
    return out


def _settle_callable(x, v, t0, beam, env, force_provider,
                     tol_kinetic, dt, max_steps, kinetic_damping):
    ke_prev = 0.0
    rising = False
    calm = 0
    st = RodState(t0, x, v)
    for k in range(max_steps):
        # gravity is added inside step; the provider supplies the rest
        st = step(st, beam, env, np.asarray(force_provider(st)), dt)
        ke = kinetic_energy(st, beam)
        if kinetic_damping:
            if ke > ke_prev:
                rising = True
            elif rising:
                st = RodState(st.time, st.positions, np.zeros_like(st.velocities))
                rising = False
                ke = 0.0
        ke_prev = ke
        if ke < tol_kinetic:
            calm += 1
            if calm >= 100:
                return RodState(st.time, st.positions.copy(),
                                np.zeros_like(st.velocities))
        else:
            calm = 0
    raise SettleTimeout(
        f"settle did not converge within {max_steps * dt:g} s simulated time",
        state=st)
