"""Tendon routing, pre-compression and the single-actuator command signal.

Both tendons run from the end-A attachment through the midpoint guide to
the end-B attachment, offset laterally by half the local thickness.  They
are stiff unilateral springs: taut segments pull on the routing nodes,
slack tendons exert nothing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, solver
from .analysis import EnergyAudit, Trace
from .geometry import MM, BeamSpec, DiscreteBeam, thickness_at
from .solver import Environment, RodState, TendonLoad

DEFAULT_TENDON_STIFFNESS = 1800.0   # N/m: nylon 0.4 mm wire over ~140 mm
DEFAULT_PERIOD = 2.0                # s per wind/unwind cycle
DEFAULT_BENCH_FRICTION_MU = 0.6     # printed TPU gripping the bench surface
DEFAULT_BENCH_VISCOUS_DAMPING = 0.002  # N s/m per node, residual air/contact
DEFAULT_RAMP = 1.0                  # s pre-compression ramp
DEFAULT_DRIVE_LAG = 0.06            # s left-schedule delay, spool play
WAVEFORMS = ("Triangle", "Sine")


class ActuationError(ValueError):
    pass


@dataclass(frozen=True)
class TendonSpec:
    """One tendon: side, routing nodes and signed lateral offsets (m).

    surface_offsets holds the signed offset of the beam surface on this
    tendon's side at every node; the tendon cannot pass through it, so a
    taut tendon wraps the surface between routing points.  Entries at the
    routing nodes equal lateral_offsets.
    """
    side: str                       # "Left" | "Right"
    routing_nodes: tuple[int, int, int]
    lateral_offsets: np.ndarray     # (3,) m, signed along the left normal
    stiffness: float                # N/m
    surface_offsets: np.ndarray     # (node_count,) m, signed

    def __post_init__(self):
        if self.side not in ("Left", "Right"):
            raise ActuationError(f"side must be Left or Right, got {self.side!r}")
        a, g, b = self.routing_nodes
        if not a < g < b or a != 0:
            raise ActuationError("routing_nodes must be strictly increasing from 0")
        if self.stiffness <= 0:
            raise ActuationError("tendon stiffness must be > 0")
        if len(self.lateral_offsets) != 3:
            raise ActuationError("need one lateral offset per routing node")
        if len(self.surface_offsets) != b + 1:
            raise ActuationError("need one surface offset per node")
        for k, j in enumerate(self.routing_nodes):
            if abs(self.surface_offsets[j] - self.lateral_offsets[k]) > 1e-12:
                raise ActuationError(
                    "surface_offsets must agree with lateral_offsets at the "
                    "routing nodes")

    @property
    def guide_index(self) -> int:
        return self.routing_nodes[1]


@dataclass(frozen=True)
class ActuationProfile:
    """Single-actuator command: pre-compression plus wind/unwind cycling.

    delta_L and delta_tau in mm (the design-grid unit); times in s.
    """
    delta_L: float                  # mm
    delta_tau: float                # mm
    waveform: str = "Triangle"
    period: float = DEFAULT_PERIOD  # s
    n_cycles: int = 10
    precompress_ramp: float = DEFAULT_RAMP   # s
    # Drive-train play: a single spool winds both tendons in opposite
    # directions, and take-up of the slack side always trails pay-out, so
    # the left schedule runs a fixed time behind the right one.  An
    # ideally mirror-symmetric drive would lock the two tension signals
    # at exactly 180 degrees, which no physical rig shows.
    drive_lag: float = DEFAULT_DRIVE_LAG     # s

    def __post_init__(self):
        if self.delta_L < 0:
            raise ActuationError("delta_L must be >= 0")
        if self.delta_tau <= 0:
            raise ActuationError("delta_tau must be > 0")
        if self.period <= 0 or self.precompress_ramp < 0:
            raise ActuationError("period must be > 0 and ramp >= 0")
        if self.n_cycles < 1:
            raise ActuationError("n_cycles must be >= 1")
        if self.waveform not in WAVEFORMS:
            raise ActuationError(f"waveform must be one of {WAVEFORMS}")
        if not 0 <= self.drive_lag < self.period / 2:
            raise ActuationError("drive_lag must be in [0, period/2)")


def tendon_pair(spec: BeamSpec, beam: DiscreteBeam,
                stiffness: float = DEFAULT_TENDON_STIFFNESS
                ) -> tuple[TendonSpec, TendonSpec]:
    """Left/right tendons with mirror offsets of half the local thickness."""
    n = beam.node_count
    guide = int(round((n - 1) / 2))   # node nearest L/2
    nodes = (0, guide, n - 1)
    arclens = np.arange(n) / (n - 1) * spec.length_L
    surf = np.array([thickness_at(spec, l) / 2.0 * MM for l in arclens])
    half_d = surf[list(nodes)]
    left = TendonSpec("Left", nodes, half_d.copy(), stiffness, surf.copy())
    right = TendonSpec("Right", nodes, -half_d, stiffness, -surf)
    return left, right


def tendon_length(state: RodState, tendon: TendonSpec) -> float:
    """Geometric length of the routed tendon (m)."""
    return float(_kernels.tendon_length_kernel(
        state.positions, tendon.guide_index,
        np.asarray(tendon.surface_offsets, dtype=np.float64)))


def _waveform_delta(profile: ActuationProfile, t_act) -> np.ndarray:
    """Zero-mean wind/unwind offset delta(t) in m, peak +-delta_tau."""
    amp = profile.delta_tau * MM
    p = np.mod(np.asarray(t_act, dtype=float) / profile.period, 1.0)
    if profile.waveform == "Sine":
        return amp * np.sin(2 * np.pi * p)
    tri = np.where(p < 0.25, 4.0 * p,
                   np.where(p < 0.75, 2.0 - 4.0 * p, 4.0 * p - 4.0))
    return amp * tri


def command_rest_lengths(profile: ActuationProfile, t: float,
                         beam_length_m: float) -> tuple[float, float]:
    """Commanded (rest_left, rest_right) in m at time t.

    Ramp from L to L - delta_L over the pre-compression window, then
    antagonistic cycling about the pre-compressed length: the two rest
    lengths always sum to 2*(L - delta_L) after the ramp.
    """
    if t < 0:
        raise ActuationError("t must be >= 0")
    L = beam_length_m
    dL = profile.delta_L * MM
    if t < profile.precompress_ramp:
        base = L - dL * (t / profile.precompress_ramp)
        return base, base
    t_act = t - profile.precompress_ramp
    delta_l = float(_waveform_delta(profile,
                                    max(t_act - profile.drive_lag, 0.0)))
    delta_r = float(_waveform_delta(profile, t_act))
    return L - dL - delta_l, L - dL + delta_r


def tendon_tension(state: RodState, tendon: TendonSpec, rest_length: float) -> float:
    """Unilateral gauge reading: stiffness * max(0, length - rest) in N."""
    if rest_length <= 0:
        raise ActuationError("rest_length must be > 0")
    return tendon.stiffness * max(0.0, tendon_length(state, tendon) - rest_length)


def tendon_forces(state: RodState, tendon: TendonSpec,
                  rest_length: float) -> np.ndarray:
    """Forces the tendon applies at the routing nodes, (n, 2) in N."""
    if rest_length <= 0:
        raise ActuationError("rest_length must be > 0")
    f = np.zeros_like(state.positions)
    _kernels.tendon_force_kernel(
        state.positions, tendon.guide_index,
        np.asarray(tendon.surface_offsets, dtype=np.float64),
        tendon.stiffness, rest_length, f)
    return f


def _loads(tendons, rest_left, rest_right):
    left, right = tendons
    return (TendonLoad(left.guide_index, left.surface_offsets,
                       left.stiffness, rest_left),
            TendonLoad(right.guide_index, right.surface_offsets,
                       right.stiffness, rest_right))


def bench_environment(beam: DiscreteBeam,
                      global_viscous_damping: float = DEFAULT_BENCH_VISCOUS_DAMPING,
                      bench_friction_mu: float = DEFAULT_BENCH_FRICTION_MU,
                      ) -> Environment:
    """Test-bench boundary conditions: end A pinned, end B on a roller.

    Node 0 is held at its rest position; the last node keeps y = 0 but may
    slide axially.  Both ends remain free to rotate, so a compressed beam
    buckles into the symmetric S-shape instead of a one-sided bow.

    The beam lies flat on the bench, so every node also feels surface
    contact: Coulomb friction under its own weight plus rate-proportional
    drag from the soft printed material sliding on the table.  That
    contact is what desynchronizes the two half-beam snap-throughs:
    sticking holds each lobe in place until its tendon load builds up, and
    the drag slows the release as it travels down the beam, so the halves
    let go one after the other instead of flipping in one mirror-symmetric
    stroke.  Dropping both contact terms leaves an exactly antiphase
    (180 degree) cycle at any pre-compression.
    """
    p = beam.node_rest_positions
    return Environment(
        global_viscous_damping=global_viscous_damping,
        fixed_node_constraints=((0, (p[0, 0], p[0, 1])),),
        roller_constraints=((beam.node_count - 1, 1, p[-1, 1]),),
        bench_friction_mu=bench_friction_mu)


def _perturb(x, beam, seed):
    """Seed the antisymmetric (two-lobe) buckling mode.

    A midpoint kick only excites the single-bow mode, which the midpoint
    guide suppresses; the pre-compressed equilibrium is the two-lobe shape,
    whose mode has a node at the guide.  Sign comes from the seeded RNG so
    mirrored perturbations give mirrored runs.
    """
    rng = np.random.default_rng(seed)
    sign = 1.0 if rng.random() < 0.5 else -1.0
    amp = solver.SETTLE_PERTURBATION_FRACTION * beam.total_length
    arc = np.concatenate(([0.0], np.cumsum(beam.segment_rest_lengths)))
    x = x.copy()
    x[:, 1] += sign * amp * np.sin(2.0 * np.pi * arc / arc[-1])
    return x


def precompress(beam: DiscreteBeam, env: Environment, tendons, profile:
                ActuationProfile, seed: int = 0,
                dt: float | None = None, settle_max_time: float = 20.0) -> RodState:
    """Ramp the tendons to L - delta_L and relax into the buckled shape."""
    if dt is None:
        dt = solver.default_dt(beam)
    L = beam.total_length
    state = solver.rest_state(beam)
    x = _perturb(state.positions.copy(), beam, seed)
    v = np.zeros_like(x)

    t_after = 0.0
    if profile.delta_L > 0 and profile.precompress_ramp > 0:
        n_steps = max(1, int(np.ceil(profile.precompress_ramp / dt)))
        t_k = np.linspace(0.0, profile.precompress_ramp, n_steps + 1)
        base = L - profile.delta_L * MM * (t_k / profile.precompress_ramp)
        _run_raw(x, v, 0.0, dt, n_steps, beam, env, tendons, base, base)
        t_after = profile.precompress_ramp
    state = RodState(t_after, x, v)

    rest = L - profile.delta_L * MM
    settled = solver.settle(state, beam, env, _loads(tendons, rest, rest),
                            dt=dt, max_time=settle_max_time, perturb_seed=None)
    return settled


def _run_raw(x, v, t0, dt, n_steps, beam, env, tendons, rl_sched, rr_sched,
             markers=None, sample_every=None, friction=None):
    """Shared driver wrapper; returns (out buffers, work, dissipated)."""
    n = beam.node_count
    left, right = tendons
    pin_idx, pin_pts, comp_idx, comp_axis, comp_val = solver._pins(env, n)
    f_ext = np.ascontiguousarray(beam.node_masses[:, None] * np.asarray(env.gravity))
    if markers is None:
        markers = np.zeros(0, dtype=np.int64)
        sample_every = n_steps + 1
        n_samp = 0
    else:
        n_samp = n_steps // sample_every + 1
    out_t = np.zeros(n_samp)
    out_Tl = np.zeros(n_samp)
    out_Tr = np.zeros(n_samp)
    out_marks = np.zeros((n_samp, len(markers), 2))
    out_com = np.zeros((n_samp, 2))
    fric = friction if friction is not None else solver._NO_FRICTION
    work, dissipated = _kernels.run_steps(
        x, v, t0, dt, n_steps,
        beam.segment_rest_lengths, beam.segment_stretch_stiffness,
        beam.vertex_bend_stiffness, solver.voronoi_lengths(beam),
        beam.node_masses, beam.rayleigh_alpha, beam.rayleigh_beta,
        env.global_viscous_damping, env.quadratic_drag,
        env.bench_friction_mu * solver.GRAVITY_ACCEL,
        f_ext, pin_idx, pin_pts,
        comp_idx, comp_axis, comp_val,
        True, left.guide_index,
        np.asarray(left.surface_offsets, dtype=np.float64),
        np.asarray(right.surface_offsets, dtype=np.float64),
        left.stiffness,
        np.ascontiguousarray(rl_sched), np.ascontiguousarray(rr_sched),
        *fric,
        sample_every, np.asarray(markers, dtype=np.int64),
        out_t, out_Tl, out_Tr, out_marks, out_com)
    if not np.all(np.isfinite(x)):
        raise solver.NumericalError(
            f"non-finite state at t={t0 + n_steps * dt:g} s")
    return (out_t, out_Tl, out_Tr, out_marks, out_com), work, dissipated


def _mechanical_energy(x, v, beam, tendons, rl, rr):
    st = RodState(0.0, x, v)
    e = solver.elastic_energy(st, beam)
    e += float(0.5 * np.sum(beam.node_masses[:, None] * v ** 2))
    for tn, rest in zip(tendons, (rl, rr)):
        stretch = max(0.0, tendon_length(st, tn) - rest)
        e += 0.5 * tn.stiffness * stretch ** 2
    return e


def run_actuated(beam: DiscreteBeam, env: Environment, tendons,
                 profile: ActuationProfile, sample_rate: float = 100.0,
                 seed: int = 0, dt_factor: float = solver.DEFAULT_DT_FACTOR,
                 beam_id: str = "custom", friction=None,
                 initial_state: RodState | None = None) -> Trace:
    """Pre-compress, then run n_cycles of wind/unwind, recording a Trace.

    The trace covers the actuation phase only (t = 0 at cycling start),
    sampled at sample_rate; tensions of both tendons plus every marker
    node position at each sample.
    """
    if sample_rate <= 0:
        raise ActuationError("sample_rate must be > 0")
    if initial_state is None:
        state = precompress(beam, env, tendons, profile, seed=seed)
    else:
        state = initial_state

    dt0 = dt_factor * solver.stable_dt(beam)
    steps_per_sample = int(np.ceil(1.0 / (sample_rate * dt0)))
    dt = 1.0 / (sample_rate * steps_per_sample)
    n_samples = int(round(profile.n_cycles * profile.period * sample_rate)) + 1
    n_steps = (n_samples - 1) * steps_per_sample

    L = beam.total_length
    base = L - profile.delta_L * MM
    t_k = np.arange(n_steps + 1) * dt
    rl_sched = base - _waveform_delta(profile,
                                      np.maximum(t_k - profile.drive_lag, 0.0))
    rr_sched = base + _waveform_delta(profile, t_k)

    x = state.positions.copy()
    v = state.velocities.copy()
    e0 = _mechanical_energy(x, v, beam, tendons, rl_sched[0], rr_sched[0])
    (out_t, out_Tl, out_Tr, out_marks, out_com), work, dissipated = _run_raw(
        x, v, 0.0, dt, n_steps, beam, env, tendons, rl_sched, rr_sched,
        markers=beam.marker_indices, sample_every=steps_per_sample,
        friction=friction)
    e1 = _mechanical_energy(x, v, beam, tendons, rl_sched[-1], rr_sched[-1])

    return Trace(
        sample_rate=sample_rate,
        times=out_t,
        tension_left=out_Tl,
        tension_right=out_Tr,
        marker_positions=np.ascontiguousarray(out_marks.transpose(1, 0, 2)),
        profile=profile,
        beam_id=beam_id,
        com=out_com,
        audit=EnergyAudit(work, dissipated, e0, e1),
    )
