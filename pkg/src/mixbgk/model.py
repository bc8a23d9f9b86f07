"""Closed-form algebra of the two-species BGK mixture model.

Everything here is a pure function of scalar or array inputs: parameter
admissibility, the mixture Maxwellian parameters (n12, u12, T12, n21, u21,
T21), macroscopic exchange terms, the Hamel preset, matching of the free
parameters to prescribed relaxation rates, and the closed-form relaxation
laws of the space-homogeneous problem.

Temperatures absorb Boltzmann's constant throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateMoments, InadmissibleParameters

# relative threshold on |C1 - C3| below which the temperature law uses its limit
SINGULAR_RTOL = 1e-10


@dataclass(frozen=True)
class SpeciesParams:
    """Particle mass and intra-species collision frequency per density."""

    mass: float
    nu_intra: float = 0.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not self.nu_intra >= 0:
            raise ValueError(f"nu_intra must be nonnegative, got {self.nu_intra}")


@dataclass(frozen=True)
class InteractionParams:
    """Free parameters of the inter-species relaxation terms.

    ``nu12 = epsilon * nu21``.  When ``alpha12`` is set the solvers replace
    ``nu12`` by the density-dependent value of
    :func:`collision_frequency_formula` evaluated on the current state;
    ``nu12`` is then only the nominal value used for validation.
    """

    nu12: float
    epsilon: float = 1.0
    delta: float = 1.0
    alpha: float = 1.0
    gamma: float = 0.0
    alpha12: float | None = None

    @property
    def nu21(self) -> float:
        return self.nu12 / self.epsilon


@dataclass(frozen=True)
class Moments:
    """Density, mean velocity and temperature of one species.

    A zero density is representable; ``u`` and ``T`` are then meaningless and
    ``defined`` is False.
    """

    n: float
    u: np.ndarray = field(default_factory=lambda: np.zeros(3))
    T: float = 0.0

    def __post_init__(self):
        u = np.array(self.u, dtype=float).reshape(-1)
        if u.size == 1:
            u = np.array([u[0], 0.0, 0.0])
        if u.shape != (3,):
            raise ValueError("mean velocity must be a 3-vector")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)
        if not self.n >= 0:
            raise ValueError(f"density must be nonnegative, got {self.n}")
        if self.n > 0 and not self.T >= 0:
            raise ValueError(f"temperature must be nonnegative, got {self.T}")

    @property
    def defined(self) -> bool:
        return self.n > 0

    def __eq__(self, other):
        if not isinstance(other, Moments):
            return NotImplemented
        return self.n == other.n and self.T == other.T and bool(np.all(self.u == other.u))

    def __hash__(self):
        return hash((self.n, tuple(self.u), self.T))


@dataclass(frozen=True)
class MixtureMoments:
    m12: Moments
    m21: Moments


@dataclass(frozen=True)
class Violation:
    constraint: str
    message: str
    margin: float


@dataclass(frozen=True)
class ValidationReport:
    """Violated admissibility constraints; empty when the parameters are admissible."""

    violations: tuple[Violation, ...] = ()

    @property
    def admissible(self) -> bool:
        return not self.violations

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def names(self) -> list[str]:
        return [v.constraint for v in self.violations]

    def __str__(self):
        if self.admissible:
            return "admissible"
        return "\n".join(f"{v.constraint}: {v.message} (margin {v.margin:.6g})" for v in self.violations)


class MatchResult(NamedTuple):
    params: InteractionParams
    report: ValidationReport


@dataclass(frozen=True)
class RelaxationCoefficients:
    """Rate constants of the homogeneous relaxation laws.

    ``C2`` is the nominal coefficient of ``|u1 - u2|^2`` in the temperature
    law; ``C2_kinetic`` is the coefficient that follows from taking moments of
    the kinetic equations with the mixture temperatures of this model.  They
    coincide only in special cases (see README).
    """

    rate_u: float
    C1: float
    C2: float
    C3: float
    C_entropy: float
    C2_kinetic: float


class ClosedFormValue(NamedTuple):
    value: float | np.ndarray
    used_limit: bool


# --------------------------------------------------------------------------
# admissibility

def mass_ratio_term(ip: InteractionParams, m1: float, m2: float) -> float:
    """``epsilon * m1 / m2``, the combination that appears in every bound."""
    return ip.epsilon * m1 / m2


def delta_lower_bound(ip: InteractionParams, m1: float, m2: float) -> float:
    r = mass_ratio_term(ip, m1, m2)
    return (r - 1.0) / (1.0 + r)


def gamma_upper_bound(ip: InteractionParams, m1: float, m2: float) -> float:
    r = mass_ratio_term(ip, m1, m2)
    d = ip.delta
    return m1 / 3.0 * (1.0 - d) * ((1.0 + r) * d + 1.0 - r)


def validate_params(ip: InteractionParams, sp1: SpeciesParams, sp2: SpeciesParams) -> ValidationReport:
    """Check every admissibility inequality; violations are returned, never raised."""
    m1, m2 = sp1.mass, sp2.mass
    out = []

    def check(name, margin, message):
        if not margin >= 0:  # catches NaN too
            out.append(Violation(name, message, float(margin)))

    check("nu12-positive", ip.nu12, f"nu12 must be positive, got {ip.nu12}")
    check("epsilon-range", ip.epsilon, f"epsilon must lie in (0, 1], got {ip.epsilon}")
    if ip.epsilon == 0:
        out.append(Violation("epsilon-range", "epsilon must be strictly positive", 0.0))
    check(
        "epsilon-range",
        1.0 - ip.epsilon,
        f"epsilon must lie in (0, 1], got {ip.epsilon}; swap the species labels and use 1/epsilon",
    )
    check("alpha-range", ip.alpha, f"alpha must lie in [0, 1], got {ip.alpha}")
    check("alpha-range", 1.0 - ip.alpha, f"alpha must lie in [0, 1], got {ip.alpha}")
    if ip.epsilon > 0:
        lo = delta_lower_bound(ip, m1, m2)
        check("delta-bound", ip.delta - lo, f"delta must be >= {lo:.12g}, got {ip.delta}")
        check("delta-bound", 1.0 - ip.delta, f"delta must be <= 1, got {ip.delta}")
        hi = gamma_upper_bound(ip, m1, m2)
        check("gamma-bound", ip.gamma, f"gamma must be nonnegative, got {ip.gamma}")
        check("gamma-bound", hi - ip.gamma, f"gamma must be <= {hi:.12g}, got {ip.gamma}")
    if ip.alpha12 is not None:
        check("alpha12-positive", ip.alpha12, f"alpha12 must be positive, got {ip.alpha12}")
    return ValidationReport(tuple(out))


def require_admissible(ip, sp1, sp2):
    report = validate_params(ip, sp1, sp2)
    if not report.admissible:
        raise InadmissibleParameters(report)


# --------------------------------------------------------------------------
# mixture Maxwellian parameters

def mixture_parameters(u1, T1, u2, T2, ip: InteractionParams, m1: float, m2: float):
    """Array form of the mixture closure.

    ``u1``/``u2`` have shape ``(..., 3)`` (or ``(..., k)`` for any k) and
    ``T1``/``T2`` shape ``(...)``.  Returns ``(u12, T12, u21, T21)``; densities
    are unchanged by the closure.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    d, eps, a, g = ip.delta, ip.epsilon, ip.alpha, ip.gamma
    du = u1 - u2
    du_sq = np.sum(du * du, axis=-1)
    u12 = d * u1 + (1.0 - d) * u2
    u21 = u2 + (m1 / m2) * eps * (1.0 - d) * du
    T12 = a * T1 + (1.0 - a) * T2 + g * du_sq
    kappa = eps * m1 / 3.0 * (1.0 - d) * ((m1 / m2) * eps * (d - 1.0) + d + 1.0) - eps * g
    T21 = kappa * du_sq + eps * (1.0 - a) * T1 + (1.0 - eps * (1.0 - a)) * T2
    return u12, T12, u21, T21


def _require_physical(mom: Moments, label: str):
    if not mom.n > 0:
        raise DegenerateMoments(f"{label}: density must be positive, got {mom.n}")
    if not mom.T > 0:
        raise DegenerateMoments(f"{label}: temperature must be positive, got {mom.T}")


def mixture_moments(mom1: Moments, mom2: Moments, ip: InteractionParams,
                    sp1: SpeciesParams, sp2: SpeciesParams) -> MixtureMoments:
    """Parameters of the two mixture Maxwellians for the given species moments."""
    require_admissible(ip, sp1, sp2)
    _require_physical(mom1, "species 1")
    _require_physical(mom2, "species 2")
    u12, T12, u21, T21 = mixture_parameters(mom1.u, mom1.T, mom2.u, mom2.T, ip, sp1.mass, sp2.mass)
    return MixtureMoments(Moments(mom1.n, u12, float(T12)), Moments(mom2.n, u21, float(T21)))


def exchange_terms(mom1: Moments, mom2: Moments, ip: InteractionParams,
                   sp1: SpeciesParams, sp2: SpeciesParams):
    """Momentum and energy transferred to species 1 per unit time.

    Returns ``(momentum_exchange, energy_exchange)``; species 2 receives the
    negatives.  The energy term is the rate of change of
    ``m1/2 n1 |u1|^2 + 3/2 n1 T1`` produced by the inter-species relaxation.
    """
    require_admissible(ip, sp1, sp2)
    m1 = sp1.mass
    n1, n2 = mom1.n, mom2.n
    u1, u2 = mom1.u, mom2.u
    d, g = ip.delta, ip.gamma
    nu12 = inter_species_frequency(ip, sp1, sp2, n1, n2)
    nu21 = nu12 / ip.epsilon
    mom = m1 * nu12 * n1 * n2 * (1.0 - d) * (u2 - u1)
    du = u1 - u2
    energy = (
        float(np.dot(0.5 * nu12 * n1 * n2 * m1 * (d - 1.0) * (u1 + u2 + d * du), du))
        + 1.5 * nu12 * n1 * n2 * g * float(np.dot(du, du))
        + 1.5 * ip.epsilon * nu21 * n1 * n2 * (1.0 - ip.alpha) * (mom2.T - mom1.T)
    )
    return mom, energy


# --------------------------------------------------------------------------
# presets, matching and collision frequencies

def hamel_preset(sp1: SpeciesParams, sp2: SpeciesParams, nu12: float = 1.0) -> InteractionParams:
    m1, m2 = sp1.mass, sp2.mass
    s = m1 + m2
    return InteractionParams(
        nu12=nu12,
        epsilon=1.0,
        delta=m1 / s,
        alpha=(m1 * m1 + m2 * m2) / (s * s),
        gamma=m1 * m2 / (s * s) * m2 / 3.0,
    )


def match_boltzmann_rates(alpha12: float, nu12: float, sp1: SpeciesParams, sp2: SpeciesParams,
                          n1: float, n2: float, epsilon: float = 1.0) -> MatchResult:
    """Choose delta, alpha, gamma so that the homogeneous BGK relaxation rates
    of velocity and temperature differences equal those with energy-transfer
    coefficient ``alpha12``.

    The result is not guaranteed admissible; inspect ``report``.
    """
    for name, val in (("alpha12", alpha12), ("nu12", nu12), ("n1", n1), ("n2", n2)):
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")
    m1, m2 = sp1.mass, sp2.mass
    ratio = alpha12 / nu12
    delta = 1.0 - ratio * (m1 + m2) / 2.0 * (m1 * n1 + m2 * n2) / (m1 * n1 * m2 * n2) / (n1 * m1 / m2 + n2)
    alpha = 1.0 - ratio / (n1 * n2)
    gamma = (ratio * (m2 * n2 - m1 * n1) / (n1 * n2)
             - m1 * n2 * (1.0 - delta) ** 2 + m1 * n1 * (1.0 - delta * delta)) / (3.0 * (n1 + n2))
    ip = InteractionParams(nu12=nu12, epsilon=epsilon, delta=delta, alpha=alpha, gamma=gamma)
    return MatchResult(ip, validate_params(ip, sp1, sp2))


def matching_residuals(ip: InteractionParams, alpha12: float, sp1: SpeciesParams, sp2: SpeciesParams,
                       n1: float, n2: float) -> tuple[float, float]:
    """Relative mismatch of the velocity and temperature relaxation rates.

    Compares the BGK rates ``nu12 (1 - delta)(n2 + m1 n1 / m2)`` and
    ``(1 - alpha) nu12 (n1 + n2)`` with their targets for energy-transfer
    coefficient ``alpha12``.  Both vanish for the output of
    :func:`match_boltzmann_rates`.
    """
    m1, m2 = sp1.mass, sp2.mass
    vel = ip.nu12 * (1.0 - ip.delta) * (n2 + m1 / m2 * n1)
    vel_target = alpha12 * (m1 + m2) * (m1 * n1 + m2 * n2) / (2.0 * m1 * m2 * n1 * n2)
    temp = (1.0 - ip.alpha) * ip.nu12 * (n1 + n2)
    temp_target = alpha12 * (n1 + n2) / (n1 * n2)
    return abs(vel - vel_target) / abs(vel_target), abs(temp - temp_target) / abs(temp_target)


def collision_frequency_formula(alpha_kj, n_k, n_j, m_k, m_j):
    """Collision frequency per density from an energy-transfer coefficient."""
    return 0.5 * alpha_kj / (n_k * n_j) * (m_k + m_j) ** 2 / (m_k * m_j)


def inter_species_frequency(ip: InteractionParams, sp1: SpeciesParams, sp2: SpeciesParams, n1, n2):
    """nu12 in effect for densities (n1, n2): constant, or density dependent if ``alpha12`` is set."""
    if ip.alpha12 is None:
        return ip.nu12 if np.ndim(n1) == 0 else np.full(np.shape(n1), ip.nu12)
    return collision_frequency_formula(ip.alpha12, n1, n2, sp1.mass, sp2.mass)


# --------------------------------------------------------------------------
# homogeneous relaxation laws

def relaxation_coefficients(ip: InteractionParams, sp1: SpeciesParams, sp2: SpeciesParams,
                            n1: float, n2: float) -> RelaxationCoefficients:
    require_admissible(ip, sp1, sp2)
    m1, m2 = sp1.mass, sp2.mass
    d, a, g = ip.delta, ip.alpha, ip.gamma
    nu12 = float(inter_species_frequency(ip, sp1, sp2, n1, n2))
    nu21 = nu12 / ip.epsilon
    C1 = (1.0 - a) * nu12 * (n2 + n1)
    C2 = nu12 * (n2 * ((1.0 - d) ** 2 + g / m1) - n1 * (1.0 - d * d - g / m1))
    C2_kin = nu12 * (n2 * (m1 / 3.0 * (1.0 - d) ** 2 + g) - n1 * (m1 / 3.0 * (1.0 - d * d) - g))
    C3 = 2.0 * nu12 * (1.0 - d) * (n2 + m1 / m2 * n1)
    C = min(sp1.nu_intra * n1 + nu12 * n2, sp2.nu_intra * n2 + nu21 * n1)
    return RelaxationCoefficients(rate_u=0.5 * C3, C1=C1, C2=C2, C3=C3, C_entropy=C, C2_kinetic=C2_kin)


def closed_form_velocity_diff(t, du0_sq, rc: RelaxationCoefficients):
    """``|u1(t) - u2(t)|^2`` for the homogeneous problem."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    out = np.exp(-rc.C3 * t) * du0_sq
    return float(out) if out.ndim == 0 else out


def closed_form_temperature_diff(t, dT0, du0_sq, rc: RelaxationCoefficients,
                                 *, kinetic: bool = False) -> ClosedFormValue:
    """``T1(t) - T2(t)`` for the homogeneous problem.

    With ``kinetic=True`` the kinetic coefficient ``C2_kinetic`` replaces the
    nominal ``C2``.  Near ``C1 == C3`` the removable singularity is replaced
    by its limit ``C2 t exp(-C1 t) du0_sq`` and ``used_limit`` is set.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    c2 = rc.C2_kinetic if kinetic else rc.C2
    diff = rc.C1 - rc.C3
    singular = is_close_to_singular(rc)
    if singular:
        growth = t
    else:
        # (exp(diff t) - 1) / diff without cancellation for small diff*t
        growth = np.expm1(diff * t) / diff
    out = np.exp(-rc.C1 * t) * (dT0 + c2 * growth * du0_sq)
    return ClosedFormValue(float(out) if out.ndim == 0 else out, singular)


def entropy_decay_bound(t, H0, rc: RelaxationCoefficients):
    """Right-hand side ``4 exp(-C t / 2) H0`` of the L1 relaxation bound.

    ``H0`` is the square root of the summed initial relative entropies.
    """
    t = np.asarray(t, dtype=float)
    out = 4.0 * np.exp(-0.5 * rc.C_entropy * t) * H0
    return float(out) if out.ndim == 0 else out


def moment_rates(n1, u1, T1, n2, u2, T2, ip: InteractionParams, sp1: SpeciesParams, sp2: SpeciesParams):
    """Time derivatives ``(du1, dT1, du2, dT2)`` of the homogeneous moment system.

    Exact consequence of the kinetic equations since mixture Maxwellians carry
    the closure moments; used as an ODE reference.
    """
    m1, m2 = sp1.mass, sp2.mass
    nu12 = inter_species_frequency(ip, sp1, sp2, n1, n2)
    nu21 = nu12 / ip.epsilon
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    u12, T12, u21, T21 = mixture_parameters(u1, T1, u2, T2, ip, m1, m2)
    du1 = nu12 * n2 * (u12 - u1)
    du2 = nu21 * n1 * (u21 - u2)
    # d/dt of (3 T / m + |u|^2) per particle, minus the bulk part
    e1 = nu12 * n2 * (3.0 * T12 / m1 + np.sum(u12 * u12, -1) - 3.0 * T1 / m1 - np.sum(u1 * u1, -1))
    e2 = nu21 * n1 * (3.0 * T21 / m2 + np.sum(u21 * u21, -1) - 3.0 * T2 / m2 - np.sum(u2 * u2, -1))
    dT1 = m1 / 3.0 * (e1 - 2.0 * np.sum(u1 * du1, -1))
    dT2 = m2 / 3.0 * (e2 - 2.0 * np.sum(u2 * du2, -1))
    return du1, dT1, du2, dT2


def equilibrium_state(n1, u1, T1, n2, u2, T2, m1, m2):
    """Common velocity and temperature sharing the total momentum and energy.

    Arrays broadcast over leading axes; ``u`` has a trailing vector axis.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    rho1 = m1 * np.asarray(n1)
    rho2 = m2 * np.asarray(n2)
    rho = rho1 + rho2
    u = (rho1[..., None] * u1 + rho2[..., None] * u2) / rho[..., None]
    energy = (0.5 * rho1 * np.sum(u1 * u1, -1) + 1.5 * n1 * T1
              + 0.5 * rho2 * np.sum(u2 * u2, -1) + 1.5 * n2 * T2)
    T = (energy - 0.5 * rho * np.sum(u * u, -1)) / (1.5 * (np.asarray(n1) + np.asarray(n2)))
    return u, T


def velocity_diff_sq(mom1: Moments, mom2: Moments) -> float:
    du = mom1.u - mom2.u
    return float(np.dot(du, du))


def is_close_to_singular(rc: RelaxationCoefficients) -> bool:
    return abs(rc.C1 - rc.C3) < SINGULAR_RTOL * max(abs(rc.C1), abs(rc.C3), 1.0)

