"""Velocity lattices, quadrature moments and conservative discrete Maxwellians.

Grids are uniform midpoint lattices in one or three velocity dimensions.  A
discrete Maxwellian is the exponential-family function

    M(v) = exp(a + b . v + c |v|^2),   c < 0,

whose quadrature moments (density, momentum, energy) equal a prescribed
target exactly.  Because ``exp(c |v|^2)`` factorises over the axes of a
tensor grid, every moment needed by the Newton iteration is a product of
one-dimensional sums, so a projection costs O(nodes per axis) rather than
O(nodes).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridSupportError, ProjectionError, VacuumError
from .model import Moments

VACUUM_DENSITY = 1e-300
# thermal widths that must fit between the target velocity and the grid edge
SUPPORT_WIDTHS = 4.0
# default half-width of the sizing rule, in thermal speeds
SIZING_WIDTHS = 6.0


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform midpoint lattice; nodes sit at cell centres."""

    nodes: tuple[int, ...]
    v_min: tuple[float, ...]
    v_max: tuple[float, ...]

    def __post_init__(self):
        nodes = tuple(int(k) for k in np.atleast_1d(self.nodes))
        dim = len(nodes)
        v_min = tuple(float(x) for x in np.broadcast_to(self.v_min, (dim,)))
        v_max = tuple(float(x) for x in np.broadcast_to(self.v_max, (dim,)))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "v_min", v_min)
        object.__setattr__(self, "v_max", v_max)
        if dim not in (1, 3):
            raise ValueError(f"velocity grids are 1D or 3D, got dim={dim}")
        for k, lo, hi in zip(nodes, v_min, v_max):
            if k <= 0 or k % 2:
                raise ValueError(f"node count must be a positive even integer, got {k}")
            if not lo < hi:
                raise ValueError(f"need v_min < v_max, got [{lo}, {hi}]")

    @classmethod
    def cube(cls, dim: int, nodes: int, v_min: float, v_max: float) -> "VelocityGrid":
        return cls((nodes,) * dim, (v_min,) * dim, (v_max,) * dim)

    @classmethod
    def sized_for(cls, states, nodes: int, dim: int = 3, widths: float = SIZING_WIDTHS) -> "VelocityGrid":
        """Grid covering ``u +- widths * sqrt(T/m)`` for every ``(Moments, mass)`` in ``states``."""
        lo = np.full(dim, np.inf)
        hi = np.full(dim, -np.inf)
        for mom, mass in states:
            s = widths * np.sqrt(mom.T / mass)
            u = np.asarray(mom.u)[:dim]
            lo = np.minimum(lo, u - s)
            hi = np.maximum(hi, u + s)
        return cls((nodes,) * dim, tuple(lo), tuple(hi))

    @property
    def dim(self) -> int:
        return len(self.nodes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.nodes

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / k for k, lo, hi in zip(self.nodes, self.v_min, self.v_max))

    @property
    def weight(self) -> float:
        """Quadrature weight of every node (product of spacings)."""
        return float(np.prod(self.spacing))

    @property
    def total_weight(self) -> float:
        return float(np.prod([hi - lo for lo, hi in zip(self.v_min, self.v_max)]))

    def axis(self, i: int) -> np.ndarray:
        k, lo, hi = self.nodes[i], self.v_min[i], self.v_max[i]
        h = (hi - lo) / k
        return lo + h * (np.arange(k) + 0.5)

    @property
    def axes(self) -> list[np.ndarray]:
        return [self.axis(i) for i in range(self.dim)]

    def coordinates(self) -> list[np.ndarray]:
        """Full coordinate arrays, one per axis, each of shape ``self.shape``."""
        return list(np.meshgrid(*self.axes, indexing="ij"))

    @property
    def max_speed(self) -> float:
        return max(float(np.max(np.abs(a))) for a in self.axes)


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    grid: VelocityGrid
    values: np.ndarray
    species: int = 1

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values have shape {v.shape}, grid expects {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("distribution values must be finite")
        if np.any(v < 0):
            raise ValueError("distribution values must be nonnegative")
        if self.species not in (1, 2):
            raise ValueError("species index must be 1 or 2")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def density(self) -> float:
        return self.grid.weight * float(np.sum(self.values))

    def __add__(self, other: "DiscreteDistribution") -> "DiscreteDistribution":
        if other.grid != self.grid:
            raise ValueError("grid mismatch")
        return DiscreteDistribution(self.grid, self.values + other.values, self.species)

    def scaled(self, c: float) -> "DiscreteDistribution":
        return DiscreteDistribution(self.grid, c * self.values, self.species)


@dataclass(frozen=True, eq=False)
class ReducedPair:
    """Marginal ``g(v_x)`` and transverse-energy moment ``h(v_x)`` of a 3D distribution."""

    g: DiscreteDistribution
    h: np.ndarray

    def __post_init__(self):
        if self.g.grid.dim != 1:
            raise ValueError("reduced distributions live on a 1D velocity grid")
        h = np.array(self.h, dtype=float)
        if h.shape != self.g.values.shape:
            raise ValueError("h must have the same shape as g")
        if np.any(h < 0):
            raise ValueError("transverse energy moment must be nonnegative")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)


# --------------------------------------------------------------------------
# quadrature moments

def moment_arrays(values: np.ndarray, grid: VelocityGrid, mass: float):
    """``(n, u, T)`` of a 3D grid function; ``u`` is a length-3 array.

    Works through the three one-axis marginals, so the centred second moment
    is exact in the sense of the quadrature (no ``E|v|^2 - |u|^2`` cancellation).
    """
    w = grid.weight
    marg = [values.sum(axis=tuple(j for j in range(3) if j != i)) for i in range(3)]
    n = w * float(marg[0].sum())
    if not n > VACUUM_DENSITY:
        raise VacuumError(f"density {n:.3e} below vacuum threshold")
    axes = grid.axes
    u = np.array([w * float(np.dot(marg[i], axes[i])) / n for i in range(3)])
    s = sum(float(np.dot(marg[i], (axes[i] - u[i]) ** 2)) for i in range(3))
    T = mass * w * s / (3.0 * n)
    return n, u, T


def discrete_moments(f: DiscreteDistribution, mass: float) -> Moments:
    if f.grid.dim != 3:
        raise ValueError("discrete_moments needs a 3D grid; use reduced_moments for reduced pairs")
    n, u, T = moment_arrays(f.values, f.grid, mass)
    return Moments(n, u, T)


def conserved_sums(values: np.ndarray, grid: VelocityGrid):
    """Quadrature of ``f``, ``v f`` and ``|v|^2 f`` on a 3D grid."""
    w = grid.weight
    marg = [values.sum(axis=tuple(j for j in range(3) if j != i)) for i in range(3)]
    axes = grid.axes
    mass = w * float(marg[0].sum())
    mom = np.array([w * float(np.dot(marg[i], axes[i])) for i in range(3)])
    energy = w * sum(float(np.dot(marg[i], axes[i] ** 2)) for i in range(3))
    return mass, mom, energy


# --------------------------------------------------------------------------
# discrete Maxwellian projection

def check_support(u, T, mass, grid: VelocityGrid):
    """Raise unless ``u +- 4 sqrt(T/m)`` lies inside the grid on every axis."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    s = SUPPORT_WIDTHS * np.sqrt(np.atleast_1d(np.asarray(T, dtype=float)) / mass)
    lo = np.asarray(grid.v_min)
    hi = np.asarray(grid.v_max)
    bad = (u - s[:, None] < lo) | (u + s[:, None] > hi)
    if np.any(bad):
        raise GridSupportError(
            f"target velocity +- {SUPPORT_WIDTHS:g} thermal speeds leaves the grid "
            f"[{grid.v_min}, {grid.v_max}]"
        )


def _axis_stats(xi, h, b, c):
    """Log-normaliser and first four moments of ``exp(b xi + c xi^2)`` on one axis.

    ``xi`` has shape (B, N); ``b`` and ``c`` shape (B,).
    """
    e = b[:, None] * xi + c[:, None] * xi * xi
    emax = e.max(axis=1)
    p = np.exp(e - emax[:, None])
    s0 = p.sum(axis=1)
    logZ = emax + np.log(h * s0)
    p /= s0[:, None]
    m1 = np.einsum("bn,bn->b", p, xi)
    xi2 = xi * xi
    m2 = np.einsum("bn,bn->b", p, xi2)
    m3 = np.einsum("bn,bn->b", p, xi2 * xi)
    m4 = np.einsum("bn,bn->b", p, xi2 * xi2)
    return logZ, m1, m2, m3, m4


def _model_moments(a, b, c, xis, hs, log_n):
    """Normalised moments and Jacobian of the separable exponential family.

    Parameters act in scaled velocities ``xi = (v - u) / sigma``.  Returns
    ``mu`` (B, d+2) with target ``(1, 0, ..., 0, d)`` and ``J`` (B, d+2, d+2).
    """
    d = len(xis)
    B = a.shape[0]
    stats = [_axis_stats(xis[i], hs[i], b[:, i], c) for i in range(d)]
    logZ = sum(s[0] for s in stats)
    rho = np.exp(a + logZ - log_n)
    m1 = np.stack([s[1] for s in stats], axis=1)
    m2 = np.stack([s[2] for s in stats], axis=1)
    m3 = np.stack([s[3] for s in stats], axis=1)
    m4 = np.stack([s[4] for s in stats], axis=1)
    Q = m2.sum(axis=1)
    k = d + 2
    E = np.empty((B, k, k))
    E[:, 0, 0] = 1.0
    E[:, 0, 1:d + 1] = m1
    E[:, 0, d + 1] = Q
    E[:, 1:d + 1, 1:d + 1] = m1[:, :, None] * m1[:, None, :]
    idx = np.arange(d)
    E[:, 1 + idx, 1 + idx] = m2
    E[:, 1:d + 1, d + 1] = m3 + m1 * (Q[:, None] - m2)
    E[:, d + 1, d + 1] = m4.sum(axis=1) + Q * Q - (m2 * m2).sum(axis=1)
    # symmetric fill
    iu = np.triu_indices(k, 1)
    E[:, iu[1], iu[0]] = E[:, iu[0], iu[1]]
    mu = rho[:, None] * E[:, 0, :]
    J = rho[:, None, None] * E
    return mu, J


def _newton_exponential(n, u, T, mass, grid: VelocityGrid, tol=5e-15, max_iter=50):
    """Fit exponential-family parameters for a batch of targets.

    ``n``, ``T`` have shape (B,), ``u`` shape (B, d).  Returns ``(a, b, c,
    sigma)`` in scaled variables plus the final residual.
    """
    d = grid.dim
    B = n.shape[0]
    sigma = np.sqrt(T / mass)
    xis = [(grid.axis(i)[None, :] - u[:, i:i + 1]) / sigma[:, None] for i in range(d)]
    hs = [grid.spacing[i] / sigma for i in range(d)]
    # parameters act on xi; spacing in xi is spacing/sigma and the Jacobian of
    # v -> xi contributes sigma^d, accounted for by comparing against log(n / sigma^d)
    log_n = np.log(n) - d * np.log(sigma)
    a = log_n - 0.5 * d * np.log(2.0 * np.pi)
    b = np.zeros((B, d))
    c = np.full(B, -0.5)
    target = np.zeros(d + 2)
    target[0] = 1.0
    target[-1] = float(d)

    mu, J = _model_moments(a, b, c, xis, hs, log_n)
    res = np.max(np.abs(mu - target), axis=1)
    for _ in range(max_iter):
        active = res > tol
        if not np.any(active):
            break
        step = np.zeros((B, d + 2))
        try:
            step[active] = np.linalg.solve(J[active], (target - mu[active])[..., None])[..., 0]
        except np.linalg.LinAlgError:
            raise ProjectionError("singular Jacobian in discrete Maxwellian Newton iteration",
                                  float(res.max())) from None
        lam = np.ones(B)
        pending = active.copy()
        new_a, new_b, new_c = a.copy(), b.copy(), c.copy()
        new_mu, new_J, new_res = mu.copy(), J.copy(), res.copy()
        for _halving in range(40):
            idx = np.nonzero(pending)[0]
            if idx.size == 0:
                break
            ta = a[idx] + lam[idx] * step[idx, 0]
            tb = b[idx] + lam[idx, None] * step[idx, 1:d + 1]
            tc = c[idx] + lam[idx] * step[idx, d + 1]
            sub_xis = [x[idx] for x in xis]
            sub_hs = [hh[idx] for hh in hs]
            tmu, tJ = _model_moments(ta, tb, tc, sub_xis, sub_hs, log_n[idx])
            tres = np.max(np.abs(tmu - target), axis=1)
            ok = (tres < res[idx]) & (tc < 0) & np.isfinite(tres)
            acc = idx[ok]
            new_a[acc], new_b[acc], new_c[acc] = ta[ok], tb[ok], tc[ok]
            new_mu[acc], new_J[acc], new_res[acc] = tmu[ok], tJ[ok], tres[ok]
            pending[acc] = False
            lam[idx[~ok]] *= 0.5
        stalled = pending & active
        a, b, c, mu, J, res = new_a, new_b, new_c, new_mu, new_J, new_res
        if np.any(stalled):
            # no decrease possible: accept if already at round-off level
            if np.all(res[stalled] < 1e-12):
                res[stalled] = 0.0
            else:
                break
    if np.any(res > 1e-12):
        raise ProjectionError("discrete Maxwellian Newton iteration did not converge", float(res.max()))
    return a, b, c, sigma, xis


def _check_target(n, T):
    if np.any(~(n > VACUUM_DENSITY)):
        raise VacuumError("projection target has vanishing density")
    if np.any(~(T > 0)):
        raise ValueError("projection target needs positive temperature")


def maxwellian_factors(n, u, T, mass, grid: VelocityGrid):
    """Per-axis factors of batched discrete Maxwellians.

    Returns ``(scale, factors)`` with ``scale`` of shape (B,) and ``factors`` a
    list of (B, N_i) arrays such that the Maxwellian is ``scale`` times the
    outer product of the factors.
    """
    n = np.atleast_1d(np.asarray(n, dtype=float))
    T = np.atleast_1d(np.asarray(T, dtype=float))
    u = np.asarray(u, dtype=float).reshape(n.shape[0], -1)[:, :grid.dim]
    _check_target(n, T)
    check_support(u, T, mass, grid)
    a, b, c, sigma, xis = _newton_exponential(n, u, T, mass, grid)
    factors = []
    log_scale = a.copy()
    for i, xi in enumerate(xis):
        e = b[:, i:i + 1] * xi + c[:, None] * xi * xi
        emax = e.max(axis=1)
        factors.append(np.exp(e - emax[:, None]))
        log_scale += emax
    return np.exp(log_scale), factors


def maxwellian_array(n, u, T, mass, grid: VelocityGrid) -> np.ndarray:
    """Values of one discrete Maxwellian on ``grid`` (no wrapping)."""
    scale, (fx, *rest) = maxwellian_factors(n, u, T, mass, grid)
    if grid.dim == 1:
        return scale[0] * fx[0]
    fy, fz = rest
    return scale[0] * fx[0][:, None, None] * (fy[0][:, None] * fz[0][None, :])[None, :, :]


def project_maxwellian(target: Moments, grid: VelocityGrid, mass: float, species: int = 1) -> DiscreteDistribution:
    """Discrete Maxwellian whose quadrature moments equal ``target``.

    On a 1D grid the temperature is matched through the one-dimensional
    variance ``sum (v - u)^2 f = n T / m``.
    """
    vals = maxwellian_array(target.n, target.u, target.T, mass, grid)
    return DiscreteDistribution(grid, vals, species)


def continuous_maxwellian(target: Moments, grid: VelocityGrid, mass: float) -> np.ndarray:
    """Pointwise Gaussian with the target moments, evaluated at the grid nodes."""
    s2 = target.T / mass
    d = grid.dim
    r2 = sum((c - target.u[i]) ** 2 for i, c in enumerate(grid.coordinates()))
    return target.n / (2.0 * np.pi * s2) ** (d / 2) * np.exp(-r2 / (2.0 * s2))


# --------------------------------------------------------------------------
# Chu reduction

def reduced_grid(grid: VelocityGrid) -> VelocityGrid:
    """1D grid along the x-axis of a 3D grid."""
    return VelocityGrid((grid.nodes[0],), (grid.v_min[0],), (grid.v_max[0],))


def chu_reduce(f3: DiscreteDistribution) -> ReducedPair:
    """Marginal in ``v_x`` and transverse thermal-energy moment.

    ``h`` integrates ``|v_perp - u_perp|^2 f`` over the transverse plane, with
    ``u_perp`` the transverse mean velocity of ``f3``; reduced states therefore
    describe the distribution in a frame without transverse drift.
    """
    grid = f3.grid
    if grid.dim != 3:
        raise ValueError("chu_reduce needs a 3D distribution")
    hy, hz = grid.spacing[1], grid.spacing[2]
    vals = f3.values
    n = grid.weight * float(vals.sum())
    if not n > VACUUM_DENSITY:
        raise VacuumError("cannot reduce a vacuum distribution")
    vy, vz = grid.axis(1), grid.axis(2)
    marg_y = vals.sum(axis=(0, 2))
    marg_z = vals.sum(axis=(0, 1))
    uy = grid.weight * float(marg_y @ vy) / n
    uz = grid.weight * float(marg_z @ vz) / n
    g = hy * hz * vals.sum(axis=(1, 2))
    wy = (vy - uy) ** 2
    wz = (vz - uz) ** 2
    h = hy * hz * (np.einsum("ijk,j->i", vals, wy) + np.einsum("ijk,k->i", vals, wz))
    return ReducedPair(DiscreteDistribution(reduced_grid(grid), g, f3.species), np.maximum(h, 0.0))


def reduced_moment_arrays(g, h, grid: VelocityGrid, mass: float):
    """Batched ``(n, u_x, T)`` of reduced pairs; ``g``, ``h`` have shape (..., N)."""
    v = grid.axis(0)
    w = grid.spacing[0]
    n = w * g.sum(axis=-1)
    if np.any(~(n > VACUUM_DENSITY)):
        raise VacuumError("reduced density below vacuum threshold")
    u = w * (g @ v) / n
    dv = v - u[..., None]
    T = mass * w * (np.sum(g * dv * dv, axis=-1) + h.sum(axis=-1)) / (3.0 * n)
    return n, u, T


def reduced_moments(rp: ReducedPair, mass: float) -> Moments:
    n, u, T = reduced_moment_arrays(rp.g.values, rp.h, rp.g.grid, mass)
    return Moments(float(n), [float(u), 0.0, 0.0], float(T))


def reduced_maxwellian_arrays(n, u, T, mass, grid: VelocityGrid):
    """Batched reduced Maxwellians ``(G, H)`` of shape (B, N) with ``H = 2 (T/m) G``."""
    n = np.atleast_1d(np.asarray(n, dtype=float))
    T = np.atleast_1d(np.asarray(T, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float)).reshape(n.shape[0], 1)
    scale, (fx,) = maxwellian_factors(n, u, T, mass, grid)
    G = scale[:, None] * fx
    H = (2.0 * T / mass)[:, None] * G
    return G, H


def reduced_maxwellian(target: Moments, grid1d: VelocityGrid, mass: float, species: int = 1) -> ReducedPair:
    if grid1d.dim != 1:
        raise ValueError("reduced_maxwellian needs a 1D grid")
    G, H = reduced_maxwellian_arrays(target.n, target.u[0], target.T, mass, grid1d)
    return ReducedPair(DiscreteDistribution(grid1d, G[0], species), H[0])
