"""Run configuration: a line-oriented ``section.key = value`` text format.

Blank lines and text after ``#`` are ignored.  Every key must be known;
duplicate keys are rejected.  Example::

    run.scenario = homogeneous
    species1.mass = 1
    species2.mass = 1
    species1.u = 1 0 0
    interaction.preset = hamel
    interaction.nu12 = 1
    grid.nodes = 32
    grid.v_min = -8
    grid.v_max = 8
    time.dt = 1e-3
    time.t_end = 5

Spatial profiles (transport scenario) use ``kind key=value ...``::

    species1.profile.n = sine value=1 amplitude=0.05 modes=1

The interaction is given in exactly one of three ways: explicitly
(``interaction.delta``, ``alpha``, ``gamma`` and optionally ``epsilon``),
as ``interaction.preset = hamel``, or by matching Boltzmann relaxation rates
(``match.alpha12`` and optionally ``match.n1``, ``match.n2``).
``interaction.nu12`` is always required.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import model
from .errors import ConfigError
from .model import InteractionParams, SpeciesParams, ValidationReport
from .transport import Profile, SpeciesProfiles

SCENARIOS = ("validate", "homogeneous", "transport", "match-rates", "presets")
HOMOGENEOUS_SCHEMES = ("rk4", "implicit-euler")
INITIAL_SHAPES = ("maxwellian", "two-beam")

DEFAULT_TOLERANCES = {
    "conservation_step": 1e-12,
    "conservation_total": 1e-10,
    "transport_conservation": 1e-10,
    "entropy": 1e-10,
    "closed_form": 1e-4,
    "matching": 1e-12,
}


# --------------------------------------------------------------------------
# value converters; each raises ValueError with a readable message

def _float(text):
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"expected a number, got {text!r}") from None


def _positive(text):
    x = _float(text)
    if not x > 0:
        raise ValueError(f"must be positive, got {text}")
    return x


def _nonnegative(text):
    x = _float(text)
    if not x >= 0:
        raise ValueError(f"must be nonnegative, got {text}")
    return x


def _count(text):
    try:
        k = int(text)
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None
    if k < 1:
        raise ValueError(f"must be a positive integer, got {text}")
    return k


def _vector(text):
    parts = text.replace(",", " ").split()
    if len(parts) != 3:
        raise ValueError(f"expected three components, got {text!r}")
    return tuple(_float(p) for p in parts)


def _bool(text):
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _choice(options):
    def conv(text):
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}, got {text!r}")
        return text
    return conv


def _order(text):
    k = _count(text)
    if k not in (1, 2):
        raise ValueError(f"scheme order must be 1 or 2, got {text}")
    return k


_PROFILE_FIELDS = {"value": _float, "amplitude": _float, "modes": _count, "center": _float,
                   "width": _positive}


def _profile(text):
    parts = text.split()
    if not parts:
        raise ValueError("empty profile")
    kind = _choice(Profile.KINDS)(parts[0])
    kwargs = {}
    for item in parts[1:]:
        name, sep, val = item.partition("=")
        if not sep or name not in _PROFILE_FIELDS:
            raise ValueError(f"unknown profile parameter {item!r}; known: {', '.join(_PROFILE_FIELDS)}")
        kwargs[name] = _PROFILE_FIELDS[name](val)
    return Profile(kind=kind, **kwargs)


def _format_profile(p: Profile) -> str:
    return (f"{p.kind} value={p.value!r} amplitude={p.amplitude!r} modes={p.modes} "
            f"center={p.center!r} width={p.width!r}")


def _schema():
    keys = {"run.scenario": _choice(SCENARIOS)}
    for k in ("species1", "species2"):
        keys.update({
            f"{k}.mass": _positive, f"{k}.nu_intra": _nonnegative, f"{k}.n": _positive,
            f"{k}.u": _vector, f"{k}.T": _positive,
            f"{k}.profile.n": _profile, f"{k}.profile.u": _profile, f"{k}.profile.T": _profile,
        })
    keys.update({
        "interaction.nu12": _positive, "interaction.epsilon": _float, "interaction.delta": _float,
        "interaction.alpha": _float, "interaction.gamma": _float,
        "interaction.preset": _choice(("hamel",)),
        "match.alpha12": _positive, "match.n1": _positive, "match.n2": _positive,
        "grid.nodes": _count, "grid.v_min": _float, "grid.v_max": _float,
        "mesh.cells": _count, "mesh.length": _positive,
        "time.dt": _positive, "time.t_end": _positive, "time.output_interval": _positive,
        "time.output_stride": _count, "time.cfl": _positive,
        "scheme.homogeneous": _choice(HOMOGENEOUS_SCHEMES), "scheme.order": _order,
        "initial.shape": _choice(INITIAL_SHAPES), "initial.beam_split": _nonnegative,
        "output.dir": str, "output.dump_fields": _bool,
    })
    keys.update({f"tolerances.{name}": _positive for name in DEFAULT_TOLERANCES})
    return keys


SCHEMA = _schema()
KEY_ORDER = tuple(SCHEMA)
EXPLICIT_KEYS = ("interaction.epsilon", "interaction.delta", "interaction.alpha", "interaction.gamma")
MATCH_KEYS = ("match.alpha12", "match.n1", "match.n2")

_REQUIRED = {
    "validate": ("species1.mass", "species2.mass", "interaction.nu12"),
    "presets": ("species1.mass", "species2.mass"),
    "match-rates": ("species1.mass", "species2.mass", "interaction.nu12", "match.alpha12"),
    "homogeneous": ("species1.mass", "species2.mass", "interaction.nu12", "grid.nodes", "grid.v_min",
                    "grid.v_max", "time.dt", "time.t_end"),
    "transport": ("species1.mass", "species2.mass", "interaction.nu12", "grid.nodes", "grid.v_min",
                  "grid.v_max", "mesh.cells", "time.t_end"),
}


# --------------------------------------------------------------------------
# config object

@dataclass(frozen=True)
class SpeciesBlock:
    params: SpeciesParams
    n: float = 1.0
    u: tuple = (0.0, 0.0, 0.0)
    T: float = 1.0
    profiles: SpeciesProfiles | None = None


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration.

    ``entries`` keeps the explicitly given values keyed by ``section.key``;
    the remaining fields are materialized from it.  :meth:`echo` writes the
    entries back as config text that parses to an equal object.
    """

    entries: dict = field(compare=True, repr=False)
    scenario: str = "validate"
    species: tuple = ()
    interaction_mode: str | None = None
    ip: InteractionParams | None = None
    report: ValidationReport | None = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def get(self, key, default=None):
        return self.entries.get(key, default)

    @property
    def sp1(self) -> SpeciesParams:
        return self.species[0].params

    @property
    def sp2(self) -> SpeciesParams:
        return self.species[1].params

    def with_entry(self, key, value) -> "RunConfig":
        """Copy with one raw entry replaced (re-validated)."""
        entries = dict(self.entries)
        entries[key] = value
        return _build(entries, {})

    def echo(self) -> str:
        lines = []
        for key in KEY_ORDER:
            if key not in self.entries:
                continue
            val = self.entries[key]
            if isinstance(val, Profile):
                text = _format_profile(val)
            elif isinstance(val, tuple):
                text = " ".join(repr(x) for x in val)
            elif isinstance(val, bool):
                text = "true" if val else "false"
            elif isinstance(val, float):
                text = repr(val)
            else:
                text = str(val)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"


def _species_block(entries, k) -> SpeciesBlock:
    pre = f"species{k}"
    profiles = None
    if any(f"{pre}.profile.{q}" in entries for q in "nuT"):
        n = entries.get(f"{pre}.n", 1.0)
        u = entries.get(f"{pre}.u", (0.0, 0.0, 0.0))[0]
        T = entries.get(f"{pre}.T", 1.0)
        profiles = SpeciesProfiles(
            n=entries.get(f"{pre}.profile.n", Profile(value=n)),
            u=entries.get(f"{pre}.profile.u", Profile(value=u)),
            T=entries.get(f"{pre}.profile.T", Profile(value=T)),
        )
    return SpeciesBlock(
        params=SpeciesParams(entries[f"{pre}.mass"], entries.get(f"{pre}.nu_intra", 0.0)),
        n=entries.get(f"{pre}.n", 1.0),
        u=entries.get(f"{pre}.u", (0.0, 0.0, 0.0)),
        T=entries.get(f"{pre}.T", 1.0),
        profiles=profiles,
    )


def _build(entries: dict, lines: dict) -> RunConfig:
    """Cross-key validation and materialization; ``lines`` maps keys to line numbers."""
    diags = []

    def err(key, msg):
        diags.append((lines.get(key, 0), msg))

    scenario = entries.get("run.scenario")
    if scenario is None:
        raise ConfigError([(0, "missing required key run.scenario")])
    for key in _REQUIRED[scenario]:
        if key not in entries:
            err(key, f"missing required key {key} for scenario {scenario}")

    explicit = [k for k in EXPLICIT_KEYS if k in entries]
    matched = [k for k in MATCH_KEYS if k in entries]
    modes = []
    if explicit:
        modes.append("explicit")
    if "interaction.preset" in entries:
        modes.append("preset")
    if matched:
        modes.append("match")
    if len(modes) > 1:
        keys = explicit + matched + (["interaction.preset"] if "interaction.preset" in entries else [])
        diags.append((min(lines.get(k, 0) for k in keys),
                      f"interaction given in more than one way ({', '.join(modes)}); use exactly one"))
    elif not modes and scenario != "presets":
        err("interaction.nu12", "interaction must be given explicitly, as interaction.preset or by a match block")
    if modes == ["explicit"]:
        for key in EXPLICIT_KEYS[1:]:
            if key not in entries:
                err(key, f"missing required key {key} for an explicit interaction")
    if modes == ["match"] and "match.alpha12" not in entries:
        err("match.n1", "missing required key match.alpha12 for a match block")
    if "time.output_interval" in entries and "time.output_stride" in entries:
        err("time.output_stride", "give at most one of time.output_interval and time.output_stride")
    if entries.get("grid.nodes", 2) % 2:
        err("grid.nodes", "grid.nodes must be even")
    if "grid.v_min" in entries and "grid.v_max" in entries and not entries["grid.v_min"] < entries["grid.v_max"]:
        err("grid.v_max", "grid.v_max must exceed grid.v_min")
    if diags:
        raise ConfigError(diags)

    species = (_species_block(entries, 1), _species_block(entries, 2))
    sp1, sp2 = species[0].params, species[1].params
    mode = modes[0] if modes else None
    ip = report = None
    if mode == "explicit":
        ip = InteractionParams(
            nu12=entries["interaction.nu12"], epsilon=entries.get("interaction.epsilon", 1.0),
            delta=entries["interaction.delta"], alpha=entries["interaction.alpha"],
            gamma=entries["interaction.gamma"],
        )
    elif mode == "preset":
        ip = model.hamel_preset(sp1, sp2, entries.get("interaction.nu12", 1.0))
    elif mode == "match":
        n1 = entries.get("match.n1", species[0].n)
        n2 = entries.get("match.n2", species[1].n)
        ip, report = model.match_boltzmann_rates(entries["match.alpha12"], entries["interaction.nu12"],
                                                 sp1, sp2, n1, n2)
    if ip is not None and report is None:
        report = model.validate_params(ip, sp1, sp2)
        if not report.admissible:
            keys = explicit or ["interaction.preset"]
            ln = min(lines.get(k, 0) for k in keys)
            raise ConfigError([(ln, f"inadmissible interaction, constraint {v.constraint}: {v.message}")
                               for v in report])
    tolerances = dict(DEFAULT_TOLERANCES)
    for name in DEFAULT_TOLERANCES:
        if f"tolerances.{name}" in entries:
            tolerances[name] = entries[f"tolerances.{name}"]
    return RunConfig(dict(entries), scenario, species, mode, ip, report, tolerances)


def parse_config(text: str) -> RunConfig:
    """Parse and validate config text; raise :class:`ConfigError` listing every problem."""
    entries, lines, diags = {}, {}, []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            diags.append((ln, f"expected 'section.key = value', got {raw.strip()!r}"))
            continue
        if key not in SCHEMA:
            diags.append((ln, f"unknown key {key}"))
            continue
        if key in entries:
            diags.append((ln, f"duplicate key {key} (first given on line {lines[key]})"))
            continue
        try:
            entries[key] = SCHEMA[key](value)
        except ValueError as exc:
            diags.append((ln, f"{key}: {exc}"))
            continue
        lines[key] = ln
    if diags:
        raise ConfigError(diags)
    return _build(entries, lines)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
