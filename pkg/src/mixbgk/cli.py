"""Command-line driver: parse a run config, dispatch the scenario, write artifacts.

Exit codes: 0 success, 1 a hard tolerance failed, 2 configuration error,
3 runtime or solver error.

Every run writes ``manifest.txt`` into the output directory.  Its
non-comment lines are the config echo, so the manifest itself re-parses
to the same configuration; tolerances and the PASS/FAIL summary follow
as comments.
"""
from __future__ import annotations

import argparse
import contextlib
import sys
from pathlib import Path

import numpy as np

from . import model
from .config import RunConfig, load_config
from .discretization import VelocityGrid
from .errors import ConfigError, InadmissibleParameters, MixBGKError
from .homogeneous import CSV_HEADER, HomogeneousConfig, run_homogeneous
from .io import dump_distributions, dump_field, format_report, write_csv
from .model import Moments
from .transport import LEDGER_HEADER, PROFILE_HEADER, SpatialMesh, SpeciesProfiles, TransportConfig, run_1d
from .transport import Profile, time_step

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
# closed-form comparisons skip samples where the reference is this small
CLOSED_FORM_FLOOR = 1e-8
DEFAULT_BEAM_SPLIT = 1.0


def _thread_limit(threads):
    """Context limiting BLAS/OpenMP pools; a no-op when threadpoolctl is absent."""
    if threads is None:
        return contextlib.nullcontext(), "unchanged"
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return contextlib.nullcontext(), f"{threads} requested (threadpoolctl unavailable, not applied)"
    return threadpool_limits(limits=threads), str(threads)


def _relative_error(sim, ref, floor=CLOSED_FORM_FLOOR):
    sim, ref = np.asarray(sim), np.asarray(ref)
    mask = np.abs(ref) > floor
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(sim[mask] - ref[mask]) / np.abs(ref[mask])))


def _ip_rows(ip):
    return [[ip.nu12, ip.epsilon, ip.delta, ip.alpha, ip.gamma]]


IP_HEADER = ("nu12", "epsilon", "delta", "alpha", "gamma")


# --------------------------------------------------------------------------
# scenarios; each returns (hard rows, informational rows, messages)

def _validate(cfg: RunConfig, out: Path, dump: bool):
    report = model.validate_params(cfg.ip, cfg.sp1, cfg.sp2)
    write_csv(out / "params.csv", IP_HEADER, _ip_rows(cfg.ip))
    rows = [("interaction admissible", float(len(report)), 0.0, report.admissible)]
    return rows, [], [str(report)]


def _presets(cfg: RunConfig, out: Path, dump: bool):
    ip = model.hamel_preset(cfg.sp1, cfg.sp2, cfg.get("interaction.nu12", 1.0))
    report = model.validate_params(ip, cfg.sp1, cfg.sp2)
    write_csv(out / "preset_hamel.csv", IP_HEADER, _ip_rows(ip))
    msg = "hamel: " + ", ".join(f"{k}={v!r}" for k, v in zip(IP_HEADER, _ip_rows(ip)[0]))
    return [("hamel preset admissible", float(len(report)), 0.0, report.admissible)], [], [msg, str(report)]


def _match_rates(cfg: RunConfig, out: Path, dump: bool):
    alpha12 = cfg.get("match.alpha12")
    n1 = cfg.get("match.n1", cfg.species[0].n)
    n2 = cfg.get("match.n2", cfg.species[1].n)
    res_u, res_T = model.matching_residuals(cfg.ip, alpha12, cfg.sp1, cfg.sp2, n1, n2)
    write_csv(out / "matched.csv", IP_HEADER + ("residual_velocity_rate", "residual_temperature_rate"),
              [_ip_rows(cfg.ip)[0] + [res_u, res_T]])
    tol = cfg.tolerances["matching"]
    rows = [
        ("velocity rate identity", res_u, tol, res_u <= tol),
        ("temperature rate identity", res_T, tol, res_T <= tol),
        ("matched parameters admissible", float(len(cfg.report)), 0.0, cfg.report.admissible),
    ]
    return rows, [], [str(cfg.report)]


def homogeneous_config(cfg: RunConfig) -> HomogeneousConfig:
    g = cfg.entries
    nodes = g["grid.nodes"]
    grid = VelocityGrid.cube(3, nodes, g["grid.v_min"], g["grid.v_max"])
    dt = g["time.dt"]
    if "time.output_stride" in g:
        interval = g["time.output_stride"] * dt
    else:
        interval = g.get("time.output_interval", g["time.t_end"])
    shape = g.get("initial.shape", "maxwellian")
    split = g.get("initial.beam_split", DEFAULT_BEAM_SPLIT if shape == "two-beam" else 0.0)
    moms = [Moments(b.n, np.array(b.u), b.T) for b in cfg.species]
    return HomogeneousConfig(cfg.sp1, cfg.sp2, cfg.ip, moms[0], moms[1], grid, dt, g["time.t_end"], interval,
                             scheme=g.get("scheme.homogeneous", "rk4"), initial_shape=shape, beam_split=split)


def _homogeneous(cfg: RunConfig, out: Path, dump: bool):
    hc = homogeneous_config(cfg)
    res = run_homogeneous(hc)
    write_csv(out / "homogeneous.csv", CSV_HEADER, res.rows)
    _write_ledger(out, res.ledger)
    if dump:
        dump_distributions(out / "final_distributions.mbgk", [res.final.f1, res.final.f2])
    tol = cfg.tolerances
    rows = res.ledger.check(tol["conservation_step"], tol["conservation_total"], tol["entropy"])
    err_u = _relative_error(res.column("du_sq"), res.column("du_sq_closed"))
    err_T = _relative_error(res.column("dT"), res.column("dT_closed_kinetic"))
    rows += [
        ("velocity difference vs closed form", err_u, tol["closed_form"], err_u <= tol["closed_form"]),
        ("temperature difference vs kinetic closed form", err_T, tol["closed_form"], err_T <= tol["closed_form"]),
    ]
    err_nominal = _relative_error(res.column("dT"), res.column("dT_closed"))
    worst = np.maximum(res.column("L1_dist_1"), res.column("L1_dist_2"))
    excess = float(np.max(worst - res.column("L1_bound")))
    info = [
        ("temperature difference vs nominal closed form", err_nominal, tol["closed_form"],
         err_nominal <= tol["closed_form"]),
        ("L1 distance above decay bound", max(excess, 0.0), 0.0, excess <= 0.0),
    ]
    msgs = [f"steps {res.steps}, limit branch {'used' if res.temperature_limit_branch else 'not used'}"]
    return rows, info, msgs


def transport_config(cfg: RunConfig) -> TransportConfig:
    g = cfg.entries
    grid = VelocityGrid.cube(1, g["grid.nodes"], g["grid.v_min"], g["grid.v_max"])
    mesh = SpatialMesh(g["mesh.cells"], g.get("mesh.length", 1.0))
    profs = []
    for b in cfg.species:
        profs.append(b.profiles or SpeciesProfiles(Profile(value=b.n), Profile(value=b.u[0]), Profile(value=b.T)))
    tc = TransportConfig(cfg.sp1, cfg.sp2, cfg.ip, mesh, grid, profs[0], profs[1], g["time.t_end"],
                         cfl=g.get("time.cfl", 0.9), order=g.get("scheme.order", 1))
    if "time.output_stride" in g:
        dt, _ = time_step(tc)
        tc.output_interval = g["time.output_stride"] * dt
    else:
        tc.output_interval = g.get("time.output_interval", g["time.t_end"])
    return tc


def _transport(cfg: RunConfig, out: Path, dump: bool):
    tc = transport_config(cfg)
    res = run_1d(tc, keep_fields=dump)
    write_csv(out / "transport_ledger.csv", LEDGER_HEADER, res.rows)
    prof_rows = [[t, *row] for t, table in res.profiles for row in table]
    write_csv(out / "profiles.csv", ("time",) + PROFILE_HEADER, prof_rows)
    _write_ledger(out, res.ledger)
    if dump:
        for k, (_, fld) in enumerate(res.fields):
            dump_field(out / f"field_{k:04d}.mbgk", fld.grid, fld.mesh.length,
                       [[fld.g1, fld.h1], [fld.g2, fld.h2]])
    tol = cfg.tolerances
    rows = res.ledger.check(None, tol["transport_conservation"], tol["entropy"])
    msgs = [f"steps {res.steps}, dt {res.dt!r}"]
    return rows, [], msgs


def _write_ledger(out: Path, ledger):
    header = ("time", "mass1", "mass2", "total_px", "total_py", "total_pz", "total_E", "H_total")
    samples = [s if len(s) == len(header) else (s[0], s[1], s[2], s[3], 0.0, 0.0, s[4], s[5])
               for s in ledger.samples]
    write_csv(out / "ledger.csv", header, samples)
    drift = ledger.drift_report()
    write_csv(out / "ledger_summary.csv", tuple(drift), [list(drift.values())])


SCENARIO_RUNNERS = {
    "validate": _validate,
    "presets": _presets,
    "match-rates": _match_rates,
    "homogeneous": _homogeneous,
    "transport": _transport,
}


def _manifest(cfg: RunConfig, threads: str, rows, info, msgs) -> str:
    parts = ["# mixbgk run manifest", "# the uncommented lines re-parse to this run's configuration", "",
             cfg.echo().rstrip("\n"), "", f"# threads: {threads}", "# tolerances:"]
    parts += [f"#   {k} = {v!r}" for k, v in cfg.tolerances.items()]
    parts.append("# hard checks:")
    parts += ["#   " + line for line in format_report(rows).splitlines()]
    if info:
        parts.append("# informational checks (do not affect the exit status):")
        parts += ["#   " + line for line in format_report(info).splitlines()]
    for m in msgs:
        parts += ["# " + line for line in m.splitlines()]
    status = "PASS" if all(r[3] for r in rows) else "FAIL"
    parts.append(f"# overall: {status}")
    return "\n".join(parts) + "\n"


def dispatch(cfg: RunConfig, out=None, threads=None, dump_fields=None) -> int:
    """Run the scenario and write artifacts; returns the exit status."""
    out = Path(out if out is not None else cfg.get("output.dir", "mixbgk-out"))
    if cfg.get("output.dir") != str(out):
        cfg = cfg.with_entry("output.dir", str(out))
    dump = cfg.get("output.dump_fields", False) if dump_fields is None else dump_fields
    limit, thread_note = _thread_limit(threads)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with limit:
            rows, info, msgs = SCENARIO_RUNNERS[cfg.scenario](cfg, out, dump)
        (out / "manifest.txt").write_text(_manifest(cfg, thread_note, rows, info, msgs), encoding="utf-8")
    except InadmissibleParameters as exc:
        print(f"error: inadmissible interaction parameters\n{exc.report}", file=sys.stderr)
        return EXIT_CONFIG
    except (MixBGKError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for m in msgs:
        print(m)
    print(format_report(rows))
    if info:
        print("informational:")
        print(format_report(info))
    return EXIT_OK if all(r[3] for r in rows) else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixbgk", description="Two-species BGK mixture solver.")
    p.add_argument("--config", required=True, help="run configuration file")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--threads", type=int, help="limit native thread pools to this many threads")
    p.add_argument("--check", action="store_true", help="parse and validate the config, then stop")
    p.add_argument("--dump-fields", action="store_true", help="write binary distribution dumps")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"configuration error in {args.config}:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.check:
        print(cfg.report if cfg.report is not None else "configuration valid")
        return EXIT_OK
    return dispatch(cfg, args.out, args.threads, True if args.dump_fields else None)


if __name__ == "__main__":
    sys.exit(main())
