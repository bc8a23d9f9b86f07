"""1D periodic, Chu-reduced finite-volume solver with IMEX time stepping.

Each species is represented per cell by the reduced pair ``(g, h)`` on a 1D
velocity grid.  Transport is explicit (first-order upwind or minmod MUSCL
with Heun stages); relaxation is backward Euler, solved moments-first exactly
as in the homogeneous solver, so the scheme stays stable and collapses onto
local equilibria as collision frequencies grow.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import model
from .diagnostics import ConservationLedger, reduced_entropy_array
from .discretization import (
    DiscreteDistribution,
    ReducedPair,
    VelocityGrid,
    reduced_maxwellian_arrays,
    reduced_moment_arrays,
)
from .errors import StabilityError
from .homogeneous import implicit_relaxation_moments, relaxation_rates
from .model import InteractionParams, SpeciesParams

CFL_LIMIT = {1: 1.0, 2: 0.5}


@dataclass(frozen=True)
class SpatialMesh:
    cell_count: int
    length: float = 1.0
    periodic: bool = True

    def __post_init__(self):
        if self.cell_count <= 0:
            raise ValueError("cell_count must be positive")
        if not self.length > 0:
            raise ValueError("length must be positive")
        if not self.periodic:
            raise ValueError("only periodic meshes are supported")

    @property
    def dx(self) -> float:
        return self.length / self.cell_count

    @property
    def centers(self) -> np.ndarray:
        return self.dx * (np.arange(self.cell_count) + 0.5)


@dataclass(frozen=True, eq=False)
class SpatialField:
    """Reduced pairs of both species in every cell; arrays have shape (cells, nodes)."""

    mesh: SpatialMesh
    grid: VelocityGrid
    g1: np.ndarray
    h1: np.ndarray
    g2: np.ndarray
    h2: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if self.grid.dim != 1:
            raise ValueError("spatial fields use a 1D velocity grid")
        shape = (self.mesh.cell_count, self.grid.nodes[0])
        for name in ("g1", "h1", "g2", "h2"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.g1 < 0) or np.any(self.g2 < 0):
            raise ValueError("g must be nonnegative in every cell")

    def pair(self, species: int, cell: int) -> ReducedPair:
        g, h = (self.g1, self.h1) if species == 1 else (self.g2, self.h2)
        return ReducedPair(DiscreteDistribution(self.grid, g[cell], species), h[cell])

    def moments(self, sp1: SpeciesParams, sp2: SpeciesParams):
        """Per-cell ``(n1, u1, T1, n2, u2, T2)`` with ``u`` the x-velocity."""
        return (*reduced_moment_arrays(self.g1, self.h1, self.grid, sp1.mass),
                *reduced_moment_arrays(self.g2, self.h2, self.grid, sp2.mass))


# --------------------------------------------------------------------------
# transport

def _minmod(a, b):
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _flux_divergence(q, v, order):
    """``(F_{i+1/2} - F_{i-1/2})`` for upwind fluxes of ``v q`` on a periodic mesh."""
    vp = np.maximum(v, 0.0)
    vm = np.minimum(v, 0.0)
    right = np.roll(q, -1, axis=0)
    if order == 1:
        face = vp * q + vm * right
    else:
        left = np.roll(q, 1, axis=0)
        slope = _minmod(q - left, right - q)
        q_minus = q + 0.5 * slope                              # left state at i+1/2
        q_plus = right - 0.5 * np.roll(slope, -1, axis=0)      # right state at i+1/2
        face = vp * q_minus + vm * q_plus
    return face - np.roll(face, 1, axis=0)


def _transport_arrays(arrays, v, dt, dx, order):
    lam = dt / dx
    if order == 1:
        return [q - lam * _flux_divergence(q, v, 1) for q in arrays]
    out = []
    for q in arrays:
        q1 = q - lam * _flux_divergence(q, v, 2)
        q2 = q1 - lam * _flux_divergence(q1, v, 2)
        out.append(0.5 * (q + q2))
    return out


def check_cfl(dt, grid: VelocityGrid, mesh: SpatialMesh, order: int = 1):
    if order not in CFL_LIMIT:
        raise ValueError("order must be 1 or 2")
    if not dt > 0:
        raise StabilityError(f"time step must be positive, got {dt}")
    cfl = dt * grid.max_speed / mesh.dx
    if cfl > CFL_LIMIT[order] * (1.0 + 1e-12):
        raise StabilityError(f"CFL number {cfl:.4g} exceeds {CFL_LIMIT[order]} for order {order}")
    return cfl


def transport_step(fld: SpatialField, dt: float, order: int = 1) -> SpatialField:
    """Free-streaming update of ``g`` and ``h`` for both species."""
    check_cfl(dt, fld.grid, fld.mesh, order)
    v = fld.grid.axis(0)
    g1, h1, g2, h2 = _transport_arrays([fld.g1, fld.h1, fld.g2, fld.h2], v, dt, fld.mesh.dx, order)
    return replace(fld, g1=g1, h1=h1, g2=g2, h2=h2, time=fld.time + dt)


# --------------------------------------------------------------------------
# relaxation

def _pad_velocity(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape + (3,))
    out[..., 0] = u
    return out


def relax_arrays(g1, h1, g2, h2, dt, grid, ip, sp1, sp2):
    """Backward-Euler relaxation in every cell; returns new ``(g1, h1, g2, h2)``."""
    m1, m2 = sp1.mass, sp2.mass
    n1, u1, T1 = reduced_moment_arrays(g1, h1, grid, m1)
    n2, u2, T2 = reduced_moment_arrays(g2, h2, grid, m2)
    u1n, T1n, u2n, T2n = implicit_relaxation_moments(
        n1, _pad_velocity(u1), T1, n2, _pad_velocity(u2), T2, dt, ip, sp1, sp2
    )
    u12, T12, u21, T21 = model.mixture_parameters(u1n, T1n, u2n, T2n, ip, m1, m2)
    C = n1.shape[0]
    G1, H1 = reduced_maxwellian_arrays(np.concatenate([n1, n1]), np.concatenate([u1n[:, 0], u12[:, 0]]),
                                       np.concatenate([T1n, T12]), m1, grid)
    G2, H2 = reduced_maxwellian_arrays(np.concatenate([n2, n2]), np.concatenate([u2n[:, 0], u21[:, 0]]),
                                       np.concatenate([T2n, T21]), m2, grid)
    a11, a12, a22, a21 = (np.asarray(r)[:, None] for r in relaxation_rates(n1, n2, ip, sp1, sp2))
    den1 = 1.0 + dt * (a11 + a12)
    den2 = 1.0 + dt * (a22 + a21)
    g1n = (g1 + dt * (a11 * G1[:C] + a12 * G1[C:])) / den1
    h1n = (h1 + dt * (a11 * H1[:C] + a12 * H1[C:])) / den1
    g2n = (g2 + dt * (a22 * G2[:C] + a21 * G2[C:])) / den2
    h2n = (h2 + dt * (a22 * H2[:C] + a21 * H2[C:])) / den2
    return g1n, h1n, g2n, h2n


def imex_step(fld: SpatialField, dt: float, ip: InteractionParams, sp1: SpeciesParams, sp2: SpeciesParams,
              order: int = 1) -> SpatialField:
    """Explicit transport followed by implicit per-cell relaxation."""
    model.require_admissible(ip, sp1, sp2)
    check_cfl(dt, fld.grid, fld.mesh, order)
    v = fld.grid.axis(0)
    arrays = _transport_arrays([fld.g1, fld.h1, fld.g2, fld.h2], v, dt, fld.mesh.dx, order)
    g1, h1, g2, h2 = relax_arrays(*arrays, dt, fld.grid, ip, sp1, sp2)
    return replace(fld, g1=g1, h1=h1, g2=g2, h2=h2, time=fld.time + dt)


# --------------------------------------------------------------------------
# diagnostics

def global_totals(fld: SpatialField, sp1: SpeciesParams, sp2: SpeciesParams):
    """``(mass1, mass2, momentum_x, energy, entropy)`` summed over the mesh."""
    dx, w = fld.mesh.dx, fld.grid.spacing[0]
    v = fld.grid.axis(0)
    N1 = dx * w * float(fld.g1.sum())
    N2 = dx * w * float(fld.g2.sum())
    P = dx * w * (sp1.mass * float((fld.g1 @ v).sum()) + sp2.mass * float((fld.g2 @ v).sum()))
    v2 = v * v
    E = 0.5 * dx * w * (sp1.mass * float((fld.g1 @ v2).sum() + fld.h1.sum())
                        + sp2.mass * float((fld.g2 @ v2).sum() + fld.h2.sum()))
    H = dx * float(reduced_entropy_array(fld.g1, fld.h1, w).sum() + reduced_entropy_array(fld.g2, fld.h2, w).sum())
    return N1, N2, P, E, H


def local_equilibrium(fld: SpatialField, sp1: SpeciesParams, sp2: SpeciesParams):
    """Per-cell reduced Maxwellians at the common velocity and temperature
    carrying the cell's total momentum and energy."""
    m1, m2 = sp1.mass, sp2.mass
    n1, u1, T1, n2, u2, T2 = fld.moments(sp1, sp2)
    u, T = model.equilibrium_state(n1, _pad_velocity(u1), T1, n2, _pad_velocity(u2), T2, m1, m2)
    G1, H1 = reduced_maxwellian_arrays(n1, u[:, 0], T, m1, fld.grid)
    G2, H2 = reduced_maxwellian_arrays(n2, u[:, 0], T, m2, fld.grid)
    return G1, H1, G2, H2


def equilibrium_deviation(fld: SpatialField, sp1: SpeciesParams, sp2: SpeciesParams) -> np.ndarray:
    """Per-cell L1 distance (``g`` and ``h`` of both species) to the local
    mixture equilibrium, relative to the cell's total density."""
    G1, H1, G2, H2 = local_equilibrium(fld, sp1, sp2)
    w = fld.grid.spacing[0]
    dist = w * (np.abs(fld.g1 - G1).sum(1) + np.abs(fld.g2 - G2).sum(1))
    # h carries velocity^2 units; scale by the local thermal speed squared
    n1, _, T1, n2, _, T2 = fld.moments(sp1, sp2)
    dist += w * (np.abs(fld.h1 - H1).sum(1) * sp1.mass / T1 + np.abs(fld.h2 - H2).sum(1) * sp2.mass / T2)
    return dist / (n1 + n2)


# --------------------------------------------------------------------------
# initial profiles and driver

@dataclass(frozen=True)
class Profile:
    """Scalar profile on a periodic interval ``[0, L)``.

    ``constant``: ``value``; ``sine``: ``value + amplitude sin(2 pi modes x / L)``;
    ``pulse``: ``value + amplitude`` on the periodic window of relative width
    ``width`` centred at ``center * L``.
    """

    kind: str = "constant"
    value: float = 1.0
    amplitude: float = 0.0
    modes: int = 1
    center: float = 0.5
    width: float = 0.25

    KINDS = ("constant", "sine", "pulse")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"profile kind must be one of {self.KINDS}, got {self.kind!r}")

    def __call__(self, x, length):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.value)
        if self.kind == "sine":
            return self.value + self.amplitude * np.sin(2.0 * np.pi * self.modes * x / length)
        dist = np.abs((x / length - self.center + 0.5) % 1.0 - 0.5)
        return self.value + self.amplitude * (dist < 0.5 * self.width)


@dataclass(frozen=True)
class SpeciesProfiles:
    n: Profile = Profile()
    u: Profile = Profile(value=0.0)
    T: Profile = Profile()


def initial_field(mesh: SpatialMesh, grid: VelocityGrid, prof1: SpeciesProfiles, prof2: SpeciesProfiles,
                  sp1: SpeciesParams, sp2: SpeciesParams) -> SpatialField:
    """Reduced Maxwellians with the profile moments at cell centres."""
    x = mesh.centers
    G1, H1 = reduced_maxwellian_arrays(prof1.n(x, mesh.length), prof1.u(x, mesh.length),
                                       prof1.T(x, mesh.length), sp1.mass, grid)
    G2, H2 = reduced_maxwellian_arrays(prof2.n(x, mesh.length), prof2.u(x, mesh.length),
                                       prof2.T(x, mesh.length), sp2.mass, grid)
    return SpatialField(mesh, grid, G1, H1, G2, H2)


@dataclass
class TransportConfig:
    sp1: SpeciesParams
    sp2: SpeciesParams
    ip: InteractionParams
    mesh: SpatialMesh
    grid: VelocityGrid
    prof1: SpeciesProfiles
    prof2: SpeciesProfiles
    t_end: float
    cfl: float = 0.9
    output_interval: float | None = None
    order: int = 1
    record_profiles: bool = True


LEDGER_HEADER = ("time", "mass1", "mass2", "total_px", "total_E", "H_total", "eq_deviation_max")
PROFILE_HEADER = ("x", "n1", "u1", "T1", "n2", "u2", "T2")


@dataclass
class TransportResult:
    config: TransportConfig
    dt: float
    steps: int
    rows: np.ndarray
    ledger: ConservationLedger
    final: SpatialField
    profiles: list = field(default_factory=list)  # (time, array (cells, 7))
    fields: list = field(default_factory=list)    # (time, SpatialField) at output times

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, LEDGER_HEADER.index(name)]


def time_step(config: TransportConfig) -> tuple[float, int]:
    """Uniform step not exceeding the CFL target that lands exactly on ``t_end``."""
    dt_max = config.cfl * config.mesh.dx / config.grid.max_speed
    steps = max(1, int(np.ceil(config.t_end / dt_max - 1e-12)))
    return config.t_end / steps, steps


def profile_table(fld: SpatialField, sp1, sp2) -> np.ndarray:
    n1, u1, T1, n2, u2, T2 = fld.moments(sp1, sp2)
    return np.column_stack([fld.mesh.centers, n1, u1, T1, n2, u2, T2])


def run_1d(config: TransportConfig, keep_fields: bool = False) -> TransportResult:
    c = config
    model.require_admissible(c.ip, c.sp1, c.sp2)
    fld = initial_field(c.mesh, c.grid, c.prof1, c.prof2, c.sp1, c.sp2)
    dt, steps = time_step(c)
    check_cfl(dt, c.grid, c.mesh, c.order)
    interval = c.output_interval or c.t_end
    wanted = np.arange(0.0, c.t_end + 0.5 * interval, interval)
    sample_steps = {min(int(round(t / dt)), steps) for t in wanted}

    N1, N2, P, E, H = global_totals(fld, c.sp1, c.sp2)
    ledger = ConservationLedger.start(0.0, [N1, N2], [P], E, H, [c.sp1.mass, c.sp2.mass])
    rows, profiles, fields = [], [], []

    def sample(fld, N1, N2, P, E, H):
        dev = float(equilibrium_deviation(fld, c.sp1, c.sp2).max())
        rows.append([fld.time, N1, N2, P, E, H, dev])
        if c.record_profiles:
            profiles.append((fld.time, profile_table(fld, c.sp1, c.sp2)))
        if keep_fields:
            fields.append((fld.time, fld))

    if 0 in sample_steps:
        sample(fld, N1, N2, P, E, H)
    v = c.grid.axis(0)
    arrays = [fld.g1, fld.h1, fld.g2, fld.h2]
    for k in range(1, steps + 1):
        arrays = _transport_arrays(arrays, v, dt, c.mesh.dx, c.order)
        arrays = list(relax_arrays(*arrays, dt, c.grid, c.ip, c.sp1, c.sp2))
        fld = SpatialField(c.mesh, c.grid, *arrays, time=k * dt)
        N1, N2, P, E, H = global_totals(fld, c.sp1, c.sp2)
        ledger.update(fld.time, [N1, N2], [P], E, H, record=k in sample_steps)
        if k in sample_steps:
            sample(fld, N1, N2, P, E, H)
    return TransportResult(c, dt, steps, np.array(rows), ledger, fld, profiles, fields)
