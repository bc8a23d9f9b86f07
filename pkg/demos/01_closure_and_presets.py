"""
Closure parameters: validation, presets and rate matching
==========================================================

The inter-species BGK operators are fixed by four numbers besides the
collision frequency: ``epsilon`` (nu21 = nu12 / epsilon), ``delta`` (velocity
mixing), ``alpha`` (temperature mixing) and ``gamma`` (friction heating).
This walk-through checks a few choices against the admissibility
inequalities, then derives parameters two other ways.
"""

# %%
# A hand-picked parameter set, checked for a light and a heavy species.
import numpy as np

from mixbgk import model
from mixbgk.errors import InadmissibleParameters
from mixbgk.model import InteractionParams, Moments, SpeciesParams

light, heavy = SpeciesParams(1.0), SpeciesParams(4.0)
ip = InteractionParams(nu12=1.0, epsilon=0.5, delta=0.6, alpha=0.4, gamma=0.1)
print(model.validate_params(ip, light, heavy))

# %%
# Mixture velocities and temperatures for two drifting species.  Both
# temperatures stay positive whenever the set is admissible.
mom1 = Moments(1.0, [0.8, 0.0, 0.0], 1.0)
mom2 = Moments(0.5, [-0.2, 0.0, 0.0], 2.0)
mm = model.mixture_moments(mom1, mom2, ip, light, heavy)
print("u12 =", mm.m12.u, " T12 =", round(mm.m12.T, 6))
print("u21 =", mm.m21.u, " T21 =", round(mm.m21.T, 6))

# %%
# Momentum and energy gained by species 1 per unit time.  The moment
# equations of both species show that species 2 loses exactly as much.
dp, de = model.exchange_terms(mom1, mom2, ip, light, heavy)
du1, dT1, du2, dT2 = model.moment_rates(1.0, mom1.u, mom1.T, 0.5, mom2.u, mom2.T, ip, light, heavy)
print("species 1 gains momentum", dp, "and energy", de)
print("total momentum rate", light.mass * 1.0 * du1 + heavy.mass * 0.5 * du2)

# %%
# An out-of-range epsilon is reported with the constraint it breaks.
bad = InteractionParams(nu12=1.0, epsilon=1.5, delta=0.6, alpha=0.4, gamma=0.1)
try:
    model.require_admissible(bad, light, heavy)
except InadmissibleParameters as exc:
    print(exc.report)

# %%
# The Hamel preset needs only the masses.
hamel = model.hamel_preset(SpeciesParams(1.0), SpeciesParams(2.0), nu12=1.0)
print("Hamel, m = (1, 2):", hamel)

# %%
# Matching the Boltzmann momentum and temperature relaxation rates for a
# given alpha12 and densities; the two identities hold to roundoff.
for a12 in (0.1, 1.0, 10.0):
    matched, report = model.match_boltzmann_rates(a12, 1.0, light, heavy, 1.0, 2.0)
    res = model.matching_residuals(matched, a12, light, heavy, 1.0, 2.0)
    print(f"alpha12={a12:5}: delta={matched.delta:.4f} alpha={matched.alpha:.4f} "
          f"gamma={matched.gamma:.4f} admissible={report.admissible} residuals={np.max(res):.1e}")
