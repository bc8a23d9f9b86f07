"""Space-homogeneous two-species BGK relaxation on a 3D velocity grid."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import model
from .diagnostics import ConservationLedger, entropy_array, relative_entropy_array
from .discretization import (
    DiscreteDistribution,
    VelocityGrid,
    conserved_sums,
    maxwellian_array,
    maxwellian_factors,
    moment_arrays,
)
from .errors import StabilityError
from .model import InteractionParams, Moments, SpeciesParams

SCHEMES = ("rk4", "implicit-euler")
# explicit RK4 requires dt * max(relaxation rate) below this
RK4_STABILITY_BOUND = 2.0


@dataclass(frozen=True, eq=False)
class HomogeneousState:
    f1: DiscreteDistribution
    f2: DiscreteDistribution
    time: float = 0.0

    def __post_init__(self):
        if self.f1.grid != self.f2.grid:
            raise ValueError("both species must share one velocity grid")

    @property
    def grid(self) -> VelocityGrid:
        return self.f1.grid


@dataclass(frozen=True)
class MomentState:
    mom1: Moments
    mom2: Moments
    time: float = 0.0


def _outer(scale, factors, i):
    fx, fy, fz = (f[i] for f in factors)
    return scale[i] * fx[:, None, None] * (fy[:, None] * fz[None, :])[None, :, :]


def _maxwellian_pair(n, ua, Ta, ub, Tb, mass, grid):
    """Two discrete Maxwellians with a common density, fitted in one batch."""
    scale, factors = maxwellian_factors(
        np.array([n, n]), np.stack([ua, ub]), np.array([Ta, Tb]), mass, grid
    )
    return _outer(scale, factors, 0), _outer(scale, factors, 1)


def relaxation_rates(n1, n2, ip: InteractionParams, sp1: SpeciesParams, sp2: SpeciesParams):
    """``(nu11 n1, nu12 n2, nu22 n2, nu21 n1)``, broadcasting over densities."""
    nu12 = model.inter_species_frequency(ip, sp1, sp2, n1, n2)
    nu21 = nu12 / ip.epsilon
    return sp1.nu_intra * n1, nu12 * n2, sp2.nu_intra * n2, nu21 * n1


def _targets(v1, v2, grid, ip, sp1, sp2):
    m1, m2 = sp1.mass, sp2.mass
    n1, u1, T1 = moment_arrays(v1, grid, m1)
    n2, u2, T2 = moment_arrays(v2, grid, m2)
    u12, T12, u21, T21 = model.mixture_parameters(u1, T1, u2, T2, ip, m1, m2)
    M1, M12 = _maxwellian_pair(n1, u1, T1, u12, T12, m1, grid)
    M2, M21 = _maxwellian_pair(n2, u2, T2, u21, T21, m2, grid)
    return (n1, n2), (M1, M12, M2, M21)


def _rhs(v1, v2, grid, ip, sp1, sp2):
    (n1, n2), (M1, M12, M2, M21) = _targets(v1, v2, grid, ip, sp1, sp2)
    a11, a12, a22, a21 = relaxation_rates(n1, n2, ip, sp1, sp2)
    df1 = a11 * (M1 - v1) + a12 * (M12 - v1)
    df2 = a22 * (M2 - v2) + a21 * (M21 - v2)
    return df1, df2


def rhs_homogeneous(s: HomogeneousState, ip: InteractionParams, sp1: SpeciesParams, sp2: SpeciesParams):
    """Per-node time derivatives ``(df1, df2)`` of the BGK relaxation system."""
    model.require_admissible(ip, sp1, sp2)
    return _rhs(s.f1.values, s.f2.values, s.grid, ip, sp1, sp2)


def implicit_relaxation_moments(n1, u1, T1, n2, u2, T2, dt, ip: InteractionParams,
                                sp1: SpeciesParams, sp2: SpeciesParams):
    """New-time velocities and temperatures of one backward-Euler relaxation step.

    Densities are invariant, so the momentum equations are a 2x2 linear system
    in ``(u1', u2')`` and, once those are known, the energy equations are a
    2x2 linear system in ``(T1', T2')``.  Arrays broadcast over leading axes
    (``u`` carries a trailing vector axis).  Returns ``(u1', T1', u2', T2')``.
    """
    m1, m2 = sp1.mass, sp2.mass
    d, a, g, eps = ip.delta, ip.alpha, ip.gamma, ip.epsilon
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    _, a12, _, a21 = relaxation_rates(n1, n2, ip, sp1, sp2)
    r1 = dt * a12
    r2 = dt * a21

    p = (r1 * (1.0 - d))[..., None]
    q = (r2 * (m1 / m2) * eps * (1.0 - d))[..., None]
    det = 1.0 + p + q
    u1n = ((1.0 + q) * u1 + p * u2) / det
    u2n = (q * u1 + (1.0 + p) * u2) / det

    u12, _, u21, _ = model.mixture_parameters(u1n, 0.0, u2n, 0.0, ip, m1, m2)
    D = np.sum((u1n - u2n) ** 2, axis=-1)
    kappa = eps * m1 / 3.0 * (1.0 - d) * ((m1 / m2) * eps * (d - 1.0) + d + 1.0) - eps * g
    K1 = 3.0 * T1 / m1 + np.sum(u1 * u1, -1)
    K2 = 3.0 * T2 / m2 + np.sum(u2 * u2, -1)
    b1 = m1 / 3.0 * (K1 - (1.0 + r1) * np.sum(u1n * u1n, -1) + r1 * np.sum(u12 * u12, -1)) + r1 * g * D
    b2 = m2 / 3.0 * (K2 - (1.0 + r2) * np.sum(u2n * u2n, -1) + r2 * np.sum(u21 * u21, -1)) + r2 * kappa * D
    c11 = 1.0 + r1 * (1.0 - a)
    c12 = -r1 * (1.0 - a)
    c21 = -r2 * eps * (1.0 - a)
    c22 = 1.0 + r2 * eps * (1.0 - a)
    det = c11 * c22 - c12 * c21
    T1n = (c22 * b1 - c12 * b2) / det
    T2n = (c11 * b2 - c21 * b1) / det
    return u1n, T1n, u2n, T2n


def _implicit(v1, v2, dt, grid, ip, sp1, sp2):
    m1, m2 = sp1.mass, sp2.mass
    n1, u1, T1 = moment_arrays(v1, grid, m1)
    n2, u2, T2 = moment_arrays(v2, grid, m2)
    u1n, T1n, u2n, T2n = implicit_relaxation_moments(n1, u1, T1, n2, u2, T2, dt, ip, sp1, sp2)
    u12, T12, u21, T21 = model.mixture_parameters(u1n, T1n, u2n, T2n, ip, m1, m2)
    M1, M12 = _maxwellian_pair(n1, u1n, T1n, u12, T12, m1, grid)
    M2, M21 = _maxwellian_pair(n2, u2n, T2n, u21, T21, m2, grid)
    a11, a12, a22, a21 = relaxation_rates(n1, n2, ip, sp1, sp2)
    w1 = (v1 + dt * (a11 * M1 + a12 * M12)) / (1.0 + dt * (a11 + a12))
    w2 = (v2 + dt * (a22 * M2 + a21 * M21)) / (1.0 + dt * (a22 + a21))
    return w1, w2


def _rk4(v1, v2, dt, grid, ip, sp1, sp2):
    k1 = _rhs(v1, v2, grid, ip, sp1, sp2)
    k2 = _rhs(v1 + 0.5 * dt * k1[0], v2 + 0.5 * dt * k1[1], grid, ip, sp1, sp2)
    k3 = _rhs(v1 + 0.5 * dt * k2[0], v2 + 0.5 * dt * k2[1], grid, ip, sp1, sp2)
    k4 = _rhs(v1 + dt * k3[0], v2 + dt * k3[1], grid, ip, sp1, sp2)
    w1 = v1 + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    w2 = v2 + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    return w1, w2


def max_relaxation_rate(v1, v2, grid, ip, sp1, sp2) -> float:
    w = grid.weight
    n1, n2 = w * float(v1.sum()), w * float(v2.sum())
    a11, a12, a22, a21 = relaxation_rates(n1, n2, ip, sp1, sp2)
    return float(max(a11 + a12, a22 + a21))


def _advance(v1, v2, dt, scheme, grid, ip, sp1, sp2):
    if scheme == "rk4":
        return _rk4(v1, v2, dt, grid, ip, sp1, sp2)
    if scheme == "implicit-euler":
        return _implicit(v1, v2, dt, grid, ip, sp1, sp2)
    raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")


def _check_dt(dt, scheme, v1, v2, grid, ip, sp1, sp2):
    if not dt > 0:
        raise StabilityError(f"time step must be positive, got {dt}")
    if scheme == "rk4":
        rate = max_relaxation_rate(v1, v2, grid, ip, sp1, sp2)
        if dt * rate > RK4_STABILITY_BOUND:
            raise StabilityError(
                f"explicit RK4 needs dt * max(nu n) <= {RK4_STABILITY_BOUND}, got {dt * rate:.3g}"
            )


def step(s: HomogeneousState, dt: float, ip: InteractionParams, sp1: SpeciesParams, sp2: SpeciesParams,
         scheme: str = "rk4") -> HomogeneousState:
    """Advance one time step with explicit RK4 or moments-first implicit Euler."""
    model.require_admissible(ip, sp1, sp2)
    grid = s.grid
    _check_dt(dt, scheme, s.f1.values, s.f2.values, grid, ip, sp1, sp2)
    w1, w2 = _advance(s.f1.values, s.f2.values, dt, scheme, grid, ip, sp1, sp2)
    return HomogeneousState(DiscreteDistribution(grid, w1, 1), DiscreteDistribution(grid, w2, 2), s.time + dt)


# --------------------------------------------------------------------------
# initial data and driver

def initial_values(mom: Moments, mass: float, grid: VelocityGrid, shape: str = "maxwellian",
                   beam_split: float = 0.0) -> np.ndarray:
    """Grid function with exactly the moments ``mom``.

    ``shape="two-beam"`` superposes two discrete Maxwellians of half density
    displaced by ``+-beam_split`` along ``v_x``, each with temperature
    ``T - m beam_split^2 / 3`` so that the total temperature is ``T``.
    """
    if shape == "maxwellian":
        return maxwellian_array(mom.n, mom.u, mom.T, mass, grid)
    if shape == "two-beam":
        Tb = mom.T - mass * beam_split ** 2 / 3.0
        if not Tb > 0:
            raise ValueError("beam split too large for the requested temperature")
        shift = np.array([beam_split, 0.0, 0.0])
        plus = maxwellian_array(0.5 * mom.n, mom.u + shift, Tb, mass, grid)
        minus = maxwellian_array(0.5 * mom.n, mom.u - shift, Tb, mass, grid)
        return plus + minus
    raise ValueError(f"unknown initial shape {shape!r}")


@dataclass
class HomogeneousConfig:
    sp1: SpeciesParams
    sp2: SpeciesParams
    ip: InteractionParams
    mom1: Moments
    mom2: Moments
    grid: VelocityGrid
    dt: float
    t_end: float
    output_interval: float
    scheme: str = "rk4"
    initial_shape: str = "maxwellian"
    beam_split: float = 0.0


CSV_HEADER = (
    "time", "n1", "u1x", "u1y", "u1z", "T1", "n2", "u2x", "u2y", "u2z", "T2",
    "H_total", "L1_dist_1", "L1_dist_2", "total_px", "total_py", "total_pz", "total_E",
    "du_sq", "du_sq_closed", "dT", "dT_closed", "dT_closed_kinetic", "L1_bound",
)


@dataclass
class HomogeneousResult:
    config: HomogeneousConfig
    coefficients: model.RelaxationCoefficients
    H0: float
    rows: np.ndarray
    ledger: ConservationLedger
    steps: int
    temperature_limit_branch: bool
    entropy_per_step: np.ndarray = field(repr=False, default=None)
    final: HomogeneousState | None = field(repr=False, default=None)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, CSV_HEADER.index(name)]

    @property
    def times(self) -> np.ndarray:
        return self.column("time")


def _totals(v1, v2, grid, sp1, sp2):
    N1, p1, e1 = conserved_sums(v1, grid)
    N2, p2, e2 = conserved_sums(v2, grid)
    P = sp1.mass * p1 + sp2.mass * p2
    E = 0.5 * (sp1.mass * e1 + sp2.mass * e2)
    H = entropy_array(v1, grid.weight) + entropy_array(v2, grid.weight)
    return (N1, N2), P, E, H


def _own_maxwellian_distance(v, mass, grid):
    n, u, T = moment_arrays(v, grid, mass)
    M = maxwellian_array(n, u, T, mass, grid)
    return grid.weight * float(np.sum(np.abs(v - M))), M


def run_homogeneous(config: HomogeneousConfig) -> HomogeneousResult:
    """Integrate to ``t_end`` and sample moments, entropy, distances and totals.

    Samples are taken at the step nearest to each multiple of
    ``output_interval``; the recorded time is the actual step time.
    """
    c = config
    model.require_admissible(c.ip, c.sp1, c.sp2)
    grid = c.grid
    m1, m2 = c.sp1.mass, c.sp2.mass
    v1 = initial_values(c.mom1, m1, grid, c.initial_shape, c.beam_split)
    v2 = initial_values(c.mom2, m2, grid, c.initial_shape, c.beam_split)
    _check_dt(c.dt, c.scheme, v1, v2, grid, c.ip, c.sp1, c.sp2)

    nsteps = int(round(c.t_end / c.dt))
    wanted = np.arange(0.0, c.t_end + 0.5 * c.output_interval, c.output_interval)
    sample_steps = sorted({min(int(round(t / c.dt)), nsteps) for t in wanted})

    n1, u1, T1 = moment_arrays(v1, grid, m1)
    n2, u2, T2 = moment_arrays(v2, grid, m2)
    rc = model.relaxation_coefficients(c.ip, c.sp1, c.sp2, n1, n2)
    du0 = float(np.sum((u1 - u2) ** 2))
    dT0 = T1 - T2
    _, M1 = _own_maxwellian_distance(v1, m1, grid)
    _, M2 = _own_maxwellian_distance(v2, m2, grid)
    # clamp roundoff below zero for data that already is Maxwellian
    H0 = float(np.sqrt(max(0.0, relative_entropy_array(v1, M1, grid.weight) + relative_entropy_array(v2, M2, grid.weight))))

    masses, P, E, H = _totals(v1, v2, grid, c.sp1, c.sp2)
    ledger = ConservationLedger.start(0.0, masses, P, E, H, [m1, m2])
    entropies = np.empty(nsteps + 1)
    entropies[0] = H
    rows = []
    limit_branch = False

    def sample(t, v1, v2, masses, P, E, H):
        nonlocal limit_branch
        n1, u1, T1 = moment_arrays(v1, grid, m1)
        n2, u2, T2 = moment_arrays(v2, grid, m2)
        L1, _ = _own_maxwellian_distance(v1, m1, grid)
        L2, _ = _own_maxwellian_distance(v2, m2, grid)
        dT_nominal = model.closed_form_temperature_diff(t, dT0, du0, rc)
        dT_kin = model.closed_form_temperature_diff(t, dT0, du0, rc, kinetic=True)
        limit_branch = limit_branch or dT_nominal.used_limit
        rows.append([
            t, n1, *u1, T1, n2, *u2, T2, H, L1, L2, *P, E,
            float(np.sum((u1 - u2) ** 2)), model.closed_form_velocity_diff(t, du0, rc),
            T1 - T2, dT_nominal.value, dT_kin.value, model.entropy_decay_bound(t, H0, rc),
        ])

    if sample_steps[0] == 0:
        sample(0.0, v1, v2, masses, P, E, H)
    targets = set(sample_steps)
    for k in range(1, nsteps + 1):
        v1, v2 = _advance(v1, v2, c.dt, c.scheme, grid, c.ip, c.sp1, c.sp2)
        t = k * c.dt
        masses, P, E, H = _totals(v1, v2, grid, c.sp1, c.sp2)
        entropies[k] = H
        ledger.update(t, masses, P, E, H, record=k in targets)
        if k in targets:
            sample(t, v1, v2, masses, P, E, H)

    final = HomogeneousState(DiscreteDistribution(grid, v1, 1), DiscreteDistribution(grid, v2, 2), nsteps * c.dt)
    return HomogeneousResult(c, rc, H0, np.array(rows), ledger, nsteps, limit_branch, entropies, final)


# --------------------------------------------------------------------------
# macroscopic reference

def integrate_moment_odes(mom1: Moments, mom2: Moments, ip: InteractionParams, sp1: SpeciesParams,
                          sp2: SpeciesParams, t_end: float, dt: float):
    """Classical RK4 on the homogeneous moment system.

    Returns ``(times, u1, T1, u2, T2)`` arrays.  Independent of the kinetic
    solver: it only uses the closure algebra of :mod:`mixbgk.model`.
    """
    n1, n2 = mom1.n, mom2.n

    def f(y):
        du1, dT1, du2, dT2 = model.moment_rates(n1, y[0:3], y[3], n2, y[4:7], y[7], ip, sp1, sp2)
        return np.concatenate([du1, [dT1], du2, [dT2]])

    y = np.concatenate([mom1.u, [mom1.T], mom2.u, [mom2.T]])
    nsteps = int(round(t_end / dt))
    out = [y]
    for _ in range(nsteps):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y)
    Y = np.array(out)
    times = dt * np.arange(nsteps + 1)
    return times, Y[:, 0:3], Y[:, 3], Y[:, 4:7], Y[:, 7]
