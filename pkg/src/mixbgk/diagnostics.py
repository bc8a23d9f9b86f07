"""Entropy and distance functionals, and the conservation ledger."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GridMismatchError

# integrand values below this are treated as zero (0 ln 0 = 0)
ENTROPY_FLOOR = 1e-300


def _same_grid(f, g):
    if f.grid != g.grid:
        raise GridMismatchError("distributions live on different velocity grids")


def entropy_array(values: np.ndarray, weight: float) -> float:
    v = values[values > ENTROPY_FLOOR]
    return weight * float(np.sum(v * np.log(v)))


def entropy(f) -> float:
    """Quadrature of ``f ln f``."""
    return entropy_array(f.values, f.grid.weight)


def relative_entropy(f, g) -> float:
    """Quadrature of ``f ln(f / g)``; requires ``g > 0`` wherever ``f > 0``."""
    _same_grid(f, g)
    fv, gv = f.values, g.values
    pos = fv > ENTROPY_FLOOR
    if np.any(gv[pos] <= 0):
        raise DomainError("relative entropy needs g > 0 wherever f > 0")
    return f.grid.weight * float(np.sum(fv[pos] * np.log(fv[pos] / gv[pos])))


def relative_entropy_array(fv, gv, weight) -> float:
    pos = fv > ENTROPY_FLOOR
    if np.any(gv[pos] <= 0):
        raise DomainError("relative entropy needs g > 0 wherever f > 0")
    return weight * float(np.sum(fv[pos] * np.log(fv[pos] / gv[pos])))


def l1_distance(f, g) -> float:
    _same_grid(f, g)
    return f.grid.weight * float(np.sum(np.abs(f.values - g.values)))


@dataclass
class ConservationLedger:
    """Running record of conserved totals against their initial values.

    Relative drifts are measured against the reference values; momentum uses
    ``sqrt(2 E sum_k m_k N_k)`` as its scale, an upper bound on ``|P|`` that
    stays meaningful when the total momentum itself vanishes.
    """

    masses: np.ndarray
    momentum: np.ndarray
    energy: float
    entropy: float
    momentum_scale: float
    max_step_drift: dict = field(default_factory=dict)
    max_drift: dict = field(default_factory=dict)
    max_entropy_increase: float = 0.0
    samples: list = field(default_factory=list)
    _last: tuple | None = None

    QUANTITIES = ("mass1", "mass2", "momentum", "energy")

    @classmethod
    def start(cls, time, masses, momentum, energy, entropy, species_masses):
        masses = np.array(masses, dtype=float)
        momentum = np.array(momentum, dtype=float)
        rho = float(np.dot(species_masses, masses))
        scale = max(float(np.sqrt(2.0 * abs(energy) * rho)), float(np.linalg.norm(momentum)), 1e-300)
        led = cls(masses, momentum, float(energy), float(entropy), scale)
        for q in cls.QUANTITIES:
            led.max_step_drift[q] = 0.0
            led.max_drift[q] = 0.0
        led._last = (masses, momentum, float(energy), float(entropy))
        led.samples.append((float(time), *masses, *momentum, float(energy), float(entropy)))
        return led

    def _rel(self, masses, momentum, energy, ref):
        m0, p0, e0, _ = ref
        return {
            "mass1": abs(masses[0] - m0[0]) / abs(self.masses[0]),
            "mass2": abs(masses[1] - m0[1]) / abs(self.masses[1]),
            "momentum": float(np.max(np.abs(momentum - p0))) / self.momentum_scale,
            "energy": abs(energy - e0) / abs(self.energy),
        }

    def update(self, time, masses, momentum, energy, entropy, record=False):
        masses = np.asarray(masses, dtype=float)
        momentum = np.asarray(momentum, dtype=float)
        step = self._rel(masses, momentum, energy, self._last)
        total = self._rel(masses, momentum, energy, (self.masses, self.momentum, self.energy, self.entropy))
        for q in self.QUANTITIES:
            self.max_step_drift[q] = max(self.max_step_drift[q], step[q])
            self.max_drift[q] = max(self.max_drift[q], total[q])
        self.max_entropy_increase = max(self.max_entropy_increase, float(entropy) - self._last[3])
        self._last = (masses, momentum, float(energy), float(entropy))
        if record:
            self.samples.append((float(time), *masses, *momentum, float(energy), float(entropy)))

    def drift_report(self) -> dict:
        out = {f"step_{q}": v for q, v in self.max_step_drift.items()}
        out.update({f"total_{q}": v for q, v in self.max_drift.items()})
        out["entropy_increase"] = self.max_entropy_increase
        return out

    def check(self, step_tol: float | None, total_tol: float, entropy_slack: float):
        """``(name, value, tolerance, passed)`` rows for the PASS/FAIL report."""
        rows = []
        for q in self.QUANTITIES:
            if step_tol is not None:
                v = self.max_step_drift[q]
                rows.append((f"{q} drift per step", v, step_tol, v <= step_tol))
            v = self.max_drift[q]
            rows.append((f"{q} drift cumulative", v, total_tol, v <= total_tol))
        rows.append(("entropy increase per step", self.max_entropy_increase, entropy_slack,
                     self.max_entropy_increase <= entropy_slack))
        return rows


def ledger_update(ledger: ConservationLedger, time, masses, momentum, energy, entropy, record=False):
    ledger.update(time, masses, momentum, energy, entropy, record=record)
    return ledger


def reduced_entropy_array(g, h, weight):
    """Entropy of the 3D distribution with marginal ``g`` and a transverse
    Maxwellian carrying the energy ``h``; batched over leading axes.

    For reduced Maxwellians this equals the entropy of the full 3D Maxwellian.
    """
    pos = (g > ENTROPY_FLOOR) & (h > ENTROPY_FLOOR)
    gp = np.where(pos, g, 1.0)
    hp = np.where(pos, h, 1.0)
    dens = np.where(pos, gp * (np.log(gp) - np.log(np.pi * hp / gp) - 1.0), 0.0)
    return weight * dens.sum(axis=-1)
