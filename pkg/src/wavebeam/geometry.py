"""Parametric geometry of the variable-thickness flexible beam.

Beam dimensions are specified in millimetres (the natural unit of the
design grid); everything handed to the solver is converted to SI here,
in one place.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

MM = 1e-3  # mm -> m

DEFAULT_YOUNGS_MODULUS = 2.0e6   # Pa, representative of a shore-50A elastomer
DEFAULT_DENSITY = 1100.0         # kg/m^3
DEFAULT_RAYLEIGH = (0.1, 1e-4)   # mass-, stiffness-proportional damping
DEFAULT_N_SEGMENTS = 56          # 2.5 mm pitch on the 140 mm beam
N_MARKERS = 8


class GeometryError(ValueError):
    """Invalid beam geometry or out-of-domain query."""


@dataclass(frozen=True)
class BeamSpec:
    """Tapered rectangular-section beam, thickness varying linearly A -> B.

    Lengths in mm; material constants in SI.
    """
    length_L: float            # mm
    height_H: float            # mm
    thickness_dA: float        # mm, thickness at end A
    thickness_dB: float        # mm, thickness at end B
    taper: str = "Linear"
    youngs_modulus: float = DEFAULT_YOUNGS_MODULUS   # Pa
    density: float = DEFAULT_DENSITY                 # kg/m^3
    rayleigh_damping: tuple[float, float] = DEFAULT_RAYLEIGH

    def __post_init__(self):
        if self.taper != "Linear":
            raise GeometryError(f"unsupported taper law: {self.taper!r}")
        for name in ("length_L", "height_H", "thickness_dA", "thickness_dB",
                     "youngs_modulus", "density"):
            if not getattr(self, name) > 0:
                raise GeometryError(f"{name} must be > 0")
        if any(c < 0 for c in self.rayleigh_damping):
            raise GeometryError("rayleigh_damping coefficients must be >= 0")


def thickness_at(spec: BeamSpec, l: float) -> float:
    """Thickness d(l) in mm at arclength l (mm) from end A.

    Linear taper with d(0) = d_A and d(L) = d_B.
    """
    if not 0.0 <= l <= spec.length_L:
        raise GeometryError(f"arclength {l} outside [0, {spec.length_L}] mm")
    d = spec.thickness_dA + (spec.thickness_dB - spec.thickness_dA) * l / spec.length_L
    if d <= 0:
        raise GeometryError(f"non-positive thickness {d} mm at l={l} mm")
    return d


def second_moment(d: float, H: float) -> float:
    """Second moment of area H*d^3/12 in m^4 for a d x H rectangle (mm in).

    Bending is in-plane, so the local thickness d is the bending dimension.
    """
    if d <= 0 or H <= 0:
        raise GeometryError("cross-section dimensions must be > 0")
    return (H * MM) * (d * MM) ** 3 / 12.0


@dataclass(frozen=True)
class DiscreteBeam:
    """Lumped-mass discretization of a BeamSpec. All fields SI.

    Arrays: node_rest_positions (n,2); segment_* length n-1; bend
    stiffness per interior vertex, length n-2.
    """
    node_rest_positions: np.ndarray
    segment_rest_lengths: np.ndarray
    segment_stretch_stiffness: np.ndarray   # EA per segment, N
    vertex_bend_stiffness: np.ndarray       # EI per interior vertex, N m^2
    node_masses: np.ndarray                 # kg
    marker_indices: np.ndarray
    rayleigh_alpha: float = DEFAULT_RAYLEIGH[0]
    rayleigh_beta: float = DEFAULT_RAYLEIGH[1]

    @property
    def node_count(self) -> int:
        return len(self.node_masses)

    @property
    def total_length(self) -> float:
        return float(self.segment_rest_lengths.sum())

    def __post_init__(self):
        n = self.node_count
        if n < 3:
            raise GeometryError("need at least 3 nodes")
        if self.node_rest_positions.shape != (n, 2):
            raise GeometryError("node_rest_positions shape mismatch")
        if len(self.segment_rest_lengths) != n - 1 or len(self.segment_stretch_stiffness) != n - 1:
            raise GeometryError("segment arrays must have length node_count - 1")
        if len(self.vertex_bend_stiffness) != n - 2:
            raise GeometryError("vertex_bend_stiffness must have length node_count - 2")
        for arr in (self.segment_rest_lengths, self.segment_stretch_stiffness,
                    self.vertex_bend_stiffness, self.node_masses):
            if not np.all(arr > 0):
                raise GeometryError("stiffness, mass and length entries must be > 0")


def discretize(spec: BeamSpec, n_segments: int = DEFAULT_N_SEGMENTS) -> DiscreteBeam:
    """Uniformly discretize the beam into n_segments edges.

    EA is evaluated at segment midpoints, EI at interior vertices; lumped
    node masses come from trapezoidal integration of rho*H*d(l), which is
    exact for the linear taper.
    """
    if n_segments < 8:
        raise GeometryError(f"n_segments must be >= 8, got {n_segments}")
    L = spec.length_L * MM
    H = spec.height_H * MM
    n_nodes = n_segments + 1
    l_nodes_mm = np.linspace(0.0, spec.length_L, n_nodes)
    pitch = L / n_segments

    positions = np.zeros((n_nodes, 2))
    positions[:, 0] = np.linspace(0.0, L, n_nodes)

    d_nodes = np.array([thickness_at(spec, l) for l in l_nodes_mm]) * MM   # m
    d_mids = 0.5 * (d_nodes[:-1] + d_nodes[1:])

    rest_lengths = np.full(n_segments, pitch)
    EA = spec.youngs_modulus * H * d_mids
    EI = np.array([spec.youngs_modulus * second_moment(d / MM, spec.height_H)
                   for d in d_nodes[1:-1]])

    seg_masses = spec.density * H * d_mids * pitch
    masses = np.zeros(n_nodes)
    masses[:-1] += 0.5 * seg_masses
    masses[1:] += 0.5 * seg_masses

    markers = np.round(np.linspace(0, n_segments, N_MARKERS)).astype(int)

    return DiscreteBeam(
        node_rest_positions=positions,
        segment_rest_lengths=rest_lengths,
        segment_stretch_stiffness=EA,
        vertex_bend_stiffness=EI,
        node_masses=masses,
        marker_indices=markers,
        rayleigh_alpha=spec.rayleigh_damping[0],
        rayleigh_beta=spec.rayleigh_damping[1],
    )


def preset(name: str, **overrides) -> BeamSpec:
    """Named beam samples from the design grid: S_62, S_64, S_66."""
    d_b = {"S_62": 2.0, "S_64": 4.0, "S_66": 6.0}.get(name)
    if d_b is None:
        raise GeometryError(f"unknown beam preset {name!r}; expected S_62, S_64 or S_66")
    spec = BeamSpec(length_L=140.0, height_H=10.0, thickness_dA=6.0, thickness_dB=d_b)
    return replace(spec, **overrides) if overrides else spec


PRESET_NAMES = ("S_62", "S_64", "S_66")
