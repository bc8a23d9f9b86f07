"""Acceptance criteria, one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``.  Each test also prints its line, and
``conftest.py`` repeats all of them in a section after the session summary.
Criteria 2 to 6 share one homogeneous run.
"""
import sys
import time

import numpy as np
import pytest

from mixbgk import model
from mixbgk.cli import main as cli_main
from mixbgk.discretization import VelocityGrid, reduced_maxwellian_arrays
from mixbgk.homogeneous import HomogeneousConfig, integrate_moment_odes, run_homogeneous
from mixbgk.model import InteractionParams, Moments, SpeciesParams
from mixbgk.transport import (
    Profile,
    SpatialMesh,
    SpeciesProfiles,
    TransportConfig,
    initial_field,
    run_1d,
    time_step,
    transport_step,
)

RESULTS = {}


def report(number, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'}  criterion {number}: {detail}"
    RESULTS[number] = line
    print(line)
    return passed


def rel_err(sim, ref, floor=0.0):
    sim, ref = np.asarray(sim), np.asarray(ref)
    mask = np.abs(ref) > floor
    return float(np.max(np.abs(sim[mask] - ref[mask]) / np.abs(ref[mask])))


# --------------------------------------------------------------------------
# 1. closure admissibility

def random_interaction(rng):
    m1, m2 = 10.0 ** rng.uniform(-2, 2, 2)
    # ranges straddle the admissibility boundaries; gamma scales with m1 like its upper bound
    ip = InteractionParams(nu12=10.0 ** rng.uniform(-2, 2), epsilon=rng.uniform(0.01, 1.0),
                           delta=rng.uniform(-0.5, 1.0), alpha=rng.uniform(-0.1, 1.0),
                           gamma=m1 * rng.uniform(-0.05, 0.4))
    return ip, SpeciesParams(m1), SpeciesParams(m2)


def test_criterion_1_closure_admissibility():
    rng = np.random.default_rng(20240101)
    start = time.perf_counter()
    admissible = failures = 0
    for _ in range(10_000):
        ip, sp1, sp2 = random_interaction(rng)
        if not model.validate_params(ip, sp1, sp2).admissible:
            continue
        admissible += 1
        mom1 = Moments(10.0 ** rng.uniform(-2, 2), rng.normal(0, 3, 3), 10.0 ** rng.uniform(-3, 3))
        mom2 = Moments(10.0 ** rng.uniform(-2, 2), rng.normal(0, 3, 3), 10.0 ** rng.uniform(-3, 3))
        mm = model.mixture_moments(mom1, mom2, ip, sp1, sp2)
        failures += not (mm.m12.T > 0 and mm.m21.T > 0)
    elapsed = time.perf_counter() - start
    ok = failures == 0 and admissible > 1000 and elapsed < 5.0
    report(1, ok, f"{admissible} admissible of 10000 sets, {failures} nonpositive mixture temperatures, "
                  f"{elapsed:.2f} s (limit 5 s)")
    assert ok


# --------------------------------------------------------------------------
# 2 to 6. shared homogeneous run

SP_EQUAL = SpeciesParams(1.0, nu_intra=1.0)
HAMEL_EQUAL = model.hamel_preset(SP_EQUAL, SP_EQUAL, nu12=1.0)


@pytest.fixture(scope="module")
def homogeneous_run():
    # two-beam data: a Maxwellian start has zero relative entropy and makes the L1 bound vacuous
    cfg = HomogeneousConfig(SP_EQUAL, SP_EQUAL, HAMEL_EQUAL,
                            Moments(1.0, [0.5, 0.0, 0.0], 1.0), Moments(1.0, [-0.5, 0.0, 0.0], 1.0),
                            VelocityGrid.cube(3, 32, -8.0, 8.0), dt=1e-3, t_end=5.0, output_interval=0.05,
                            scheme="rk4", initial_shape="two-beam", beam_split=1.0)
    start = time.perf_counter()
    res = run_homogeneous(cfg)
    return res, time.perf_counter() - start


def test_criterion_2_discrete_conservation(homogeneous_run):
    res, elapsed = homogeneous_run
    rows = res.ledger.check(1e-12, 1e-10, np.inf)[:-1]
    worst_step = max(res.ledger.max_step_drift.values())
    worst_total = max(res.ledger.max_drift.values())
    ok = all(r[3] for r in rows) and elapsed < 120
    report(2, ok, f"max per-step drift {worst_step:.2e} (limit 1e-12), cumulative {worst_total:.2e} "
                  f"(limit 1e-10), {res.steps} RK4 steps on 32^3 in {elapsed:.1f} s (limit 120 s)")
    assert ok


def test_criterion_3_velocity_difference_decay(homogeneous_run):
    res, _ = homogeneous_run
    assert res.coefficients.C3 == pytest.approx(2.0, rel=1e-14)
    t = res.times
    err = rel_err(res.column("du_sq"), np.exp(-2.0 * t))
    ok = err <= 1e-4
    report(3, ok, f"|du|^2 vs exp(-2t) on [0, {t[-1]:g}], max relative error {err:.2e} (limit 1e-4)")
    assert ok


def rk4_relaxation_laws(C1, C2, C3, dT0, du0, times):
    """Classical RK4 on the scalar relaxation laws; returns T1 - T2 at ``times``."""
    def f(y):
        return np.array([-C1 * y[0] + C2 * y[1], -C3 * y[1]])

    y = np.array([dT0, du0])
    out = [y[0]]
    for h in np.diff(times):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y[0])
    return np.array(out)


def test_criterion_4_temperature_difference_closed_form(homogeneous_run):
    res, _ = homogeneous_run
    rc = res.coefficients
    t = res.times
    dT = res.column("dT")
    # nominal coefficients (C1, C2, C3) = (1, -1/3, 2) with dT(0) = 0 and |du(0)|^2 = 1
    nominal = np.exp(-t) * (-1.0 / 3.0) * np.expm1(-t) / -1.0
    err_nom = rel_err(dT, nominal, 1e-8)
    # the closure's own moment equations give C2 = C2_kinetic, zero for this case
    err_kin = float(np.max(np.abs(dT - res.column("dT_closed_kinetic"))))

    # near-singular variant: C1 = C3 up to 4e-11 relative, so the limit branch is taken.
    # Oracle: RK4 on the relaxation laws d|du|^2/dt = -C3 |du|^2, d(dT)/dt = -C1 dT + C2 |du|^2.
    sp = SpeciesParams(1.0)
    ip = InteractionParams(nu12=1.0, epsilon=1.0, delta=0.75, alpha=0.5 + 2e-11, gamma=0.05)
    rcs = model.relaxation_coefficients(ip, sp, sp, 1.0, 1.0)
    dT0, du0 = -0.3, 1.0
    times = np.linspace(0.0, 5.0, 5001)
    nom = model.closed_form_temperature_diff(times, dT0, du0, rcs)
    err_sing_nom = rel_err(rk4_relaxation_laws(rcs.C1, rcs.C2, rcs.C3, dT0, du0, times), nom.value, 1e-8)
    # the same variant against the full moment system of the closure
    mom1, mom2 = Moments(1.0, [1.0, 0.0, 0.0], 1.0), Moments(1.0, [0.0, 0.0, 0.0], 1.3)
    _, _, T1, _, T2 = integrate_moment_odes(mom1, mom2, ip, sp, sp, 5.0, 1e-3)
    err_sing_full = rel_err(T1 - T2, nom.value, 1e-8)
    kin = model.closed_form_temperature_diff(times, dT0, du0, rcs, kinetic=True)
    err_sing_kin = rel_err(T1 - T2, kin.value, 1e-8)

    ok = err_nom <= 1e-4 and nom.used_limit and err_sing_nom <= 1e-4
    report(4, ok, f"T1-T2 of the kinetic run vs closed form with C2 = {rc.C2:.4g}: max relative error "
                  f"{err_nom:.2e} (limit 1e-4); near-singular limit branch used={nom.used_limit}, error vs RK4 "
                  f"on the relaxation laws {err_sing_nom:.2e} (limit 1e-4). For reference: with the closure's "
                  f"own C2 = {rc.C2_kinetic:.3g} the kinetic run agrees to {err_kin:.1e} absolute; near-singular "
                  f"closed form vs the closure's moment system {err_sing_full:.2e} nominal, {err_sing_kin:.1e} "
                  f"kinetic")
    assert ok


def test_criterion_5_l1_relaxation_bound(homogeneous_run):
    res, _ = homogeneous_run
    assert res.coefficients.C_entropy == pytest.approx(2.0, rel=1e-14)
    bound = res.column("L1_bound")
    dist = np.maximum(res.column("L1_dist_1"), res.column("L1_dist_2"))
    violations = int(np.sum(dist > bound))
    margin = float(np.min(bound - dist))
    ok = violations == 0 and res.H0 > 0
    report(5, ok, f"{violations} violations of ||f_k - M_k||_1 <= 4 exp(-t) H0 over {len(bound)} samples, "
                  f"H0 = {res.H0:.3g}, smallest margin {margin:.2e}")
    assert ok


@pytest.fixture(scope="module")
def ap_sweep():
    runs = []
    for nu in (1e1, 1e2, 1e3):
        sp1, sp2 = SpeciesParams(1.0, nu), SpeciesParams(2.0, nu)
        ip = model.hamel_preset(sp1, sp2, nu12=nu)
        prof1 = SpeciesProfiles(Profile("sine", 1.0, 0.05), Profile(value=0.5), Profile(value=1.0))
        prof2 = SpeciesProfiles(Profile(value=1.0), Profile(value=-0.5), Profile(value=1.2))
        cfg = TransportConfig(sp1, sp2, ip, SpatialMesh(100), VelocityGrid.cube(1, 64, -8.0, 8.0),
                              prof1, prof2, t_end=0.5, cfl=0.9, record_profiles=False)
        start = time.perf_counter()
        res = run_1d(cfg)
        runs.append((nu, res, time.perf_counter() - start))
    return runs


def test_criterion_6_entropy_monotone(homogeneous_run, ap_sweep):
    res, _ = homogeneous_run
    worst = max(float(np.max(np.diff(res.entropy_per_step))),
                max(r.ledger.max_entropy_increase for _, r, _ in ap_sweep))
    ok = worst <= 1e-10
    report(6, ok, f"largest per-step increase of H(f1)+H(f2) over the homogeneous and transport runs "
                  f"{worst:.2e} (limit 1e-10)")
    assert ok


# --------------------------------------------------------------------------
# 7. matching identities

def test_criterion_7_matching_identities():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        a12, nu12, m1, m2, n1, n2 = 10.0 ** rng.uniform(-1, 1, 6)
        sp1, sp2 = SpeciesParams(m1), SpeciesParams(m2)
        ip, _ = model.match_boltzmann_rates(a12, nu12, sp1, sp2, n1, n2)
        worst = max(worst, *model.matching_residuals(ip, a12, sp1, sp2, n1, n2))
    ok = worst <= 1e-12
    report(7, ok, f"1000 random cases, worst relative residual {worst:.2e} (limit 1e-12)")
    assert ok


# --------------------------------------------------------------------------
# 8. asymptotic preservation

def test_criterion_8_asymptotic_preservation(ap_sweep):
    devs = [float(r.column("eq_deviation_max")[-1]) for _, r, _ in ap_sweep]
    ratios = [a / b for a, b in zip(devs, devs[1:])]
    drift = max(max(r.ledger.max_drift.values()) for _, r, _ in ap_sweep)
    slowest = max(t for _, _, t in ap_sweep)
    ok = all(q >= 5 for q in ratios) and drift <= 1e-10 and slowest < 300
    report(8, ok, "final equilibrium deviation " + ", ".join(f"{d:.3e}" for d in devs)
           + " for nu = 10, 100, 1000; ratios " + ", ".join(f"{q:.2f}" for q in ratios)
           + f" (limit 5); totals drift {drift:.2e} (limit 1e-10); slowest run {slowest:.1f} s (limit 300 s)")
    assert ok


# --------------------------------------------------------------------------
# 9. free-streaming convergence

def free_streaming_l1_error(cells, t_end=0.1, amplitude=0.3):
    grid = VelocityGrid.cube(1, 64, -8.0, 8.0)
    sp = SpeciesParams(1.0)
    mesh = SpatialMesh(cells)
    prof = SpeciesProfiles(Profile("sine", 1.0, amplitude), Profile(value=0.0), Profile(value=1.0))
    fld = initial_field(mesh, grid, prof, prof, sp, sp)
    cfg = TransportConfig(sp, sp, HAMEL_EQUAL, mesh, grid, prof, prof, t_end, cfl=0.9)
    dt, steps = time_step(cfg)
    for _ in range(steps):
        fld = transport_step(fld, dt, order=1)
    G, H = reduced_maxwellian_arrays(1.0, 0.0, 1.0, 1.0, grid)
    x = mesh.centers[:, None]
    v = grid.axis(0)[None, :]
    shape = 1.0 + amplitude * np.sin(2 * np.pi * (x - v * t_end))
    w = mesh.dx * grid.spacing[0]
    return w * (np.abs(fld.g1 - shape * G).sum() + np.abs(fld.h1 - shape * H).sum())


def test_criterion_9_free_streaming_convergence():
    errs = [free_streaming_l1_error(c) for c in (50, 100, 200)]
    orders = [float(np.log2(a / b)) for a, b in zip(errs, errs[1:])]
    ok = all(0.8 <= p <= 1.2 for p in orders)
    report(9, ok, "L1 errors " + ", ".join(f"{e:.3e}" for e in errs) + " at 50, 100, 200 cells; observed orders "
           + ", ".join(f"{p:.3f}" for p in orders) + " (range [0.8, 1.2])")
    assert ok


# --------------------------------------------------------------------------
# 10. CLI determinism

DETERMINISM_CONFIG = """\
run.scenario = homogeneous
species1.mass = 1
species2.mass = 2
species1.nu_intra = 1
species2.nu_intra = 1
species1.u = 0.5 0 0
species2.u = -0.5 0 0
species2.T = 1.3
interaction.preset = hamel
interaction.nu12 = 1
grid.nodes = 16
grid.v_min = -8
grid.v_max = 8
time.dt = 0.01
time.t_end = 0.5
time.output_stride = 5
initial.shape = two-beam
"""


def test_criterion_10_cli_determinism(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(DETERMINISM_CONFIG)
    codes = [cli_main(["--config", str(cfg), "--out", str(tmp_path / d), "--threads", "1"]) for d in ("a", "b")]
    names = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    same = [(tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names]
    ok = bool(names) and all(same) and codes[0] == codes[1]
    report(10, ok, f"{sum(same)} of {len(names)} CSV files bitwise identical across two invocations "
                   f"(exit codes {codes})")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
