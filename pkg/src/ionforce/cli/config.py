"""INI experiment configs.

Sections: [probe], [state], [protocol], [time], [space], [output] and, for
sweeps, [sweep].  All quantities are SI: rad/s, N, m, s.  A value written in
"kHz" elsewhere is entered here as 1e3 rad/s.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..models import ProbeParams

PROBE_KEYS = ("kind", "g", "omega", "delta", "drive_omega", "z", "mass", "trap_frequency", "force", "heating")
STATE_TYPES = ("fock", "thermal", "superposition")
METRICS = ("fitted_omega", "contrast", "sensitivity", "sw_residual")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (exit code 2)."""


def parse_floats(text: str, name: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected number(s), got {text!r}") from None


def parse_range(text: str, name: str) -> list[float]:
    """``a, b, c`` lists or ``start:stop:points`` linear ranges."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{name}: range must be start:stop:points")
        start, stop = parse_floats(parts[0], name)[0], parse_floats(parts[1], name)[0]
        try:
            points = int(parts[2])
        except ValueError:
            raise ConfigError(f"{name}: point count must be an integer") from None
        if points < 1:
            raise ConfigError(f"{name}: empty range")
        return [float(v) for v in np.linspace(start, stop, points)]
    values = parse_floats(text, name)
    if not values:
        raise ConfigError(f"{name}: empty range")
    return values


@dataclass(frozen=True)
class TimeGrid:
    start: float
    stop: float
    points: int

    def __post_init__(self):
        if self.points < 1:
            raise ConfigError("time grid needs at least one point")
        if self.start < 0 or not math.isfinite(self.stop):
            raise ConfigError("time grid must start at t >= 0 and be finite")
        if self.points > 1 and not self.stop > self.start:
            raise ConfigError("time grid stop must exceed start")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class ExperimentConfig:
    probe: dict
    state: dict
    protocol: str = "plain"
    cpmg_order: int = 1
    hamiltonian: str = "exact"
    time: TimeGrid = TimeGrid(0.0, 0.1, 101)
    cutoffs: tuple | None = None
    csv: str | None = None
    metadata: str | None = None
    svg: str | None = None
    sweep: dict = field(default_factory=dict)
    metrics: tuple = ()

    def params(self, **overrides) -> ProbeParams:
        """Build ProbeParams, with sweep overrides applied on top of [probe]."""
        probe = dict(self.probe)
        for key, value in overrides.items():
            if key in ("force", "heating") and "kind" in probe and probe["kind"].upper() == "JT" and np.isscalar(value):
                value = (value,) * 2
            probe[key] = value
        kind = probe.pop("kind")
        try:
            return ProbeParams(kind, **probe)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[probe]: {exc}") from None

    def resolve(self, base: Path) -> dict:
        return {k: str(base / v) for k, v in (("csv", self.csv), ("metadata", self.metadata), ("svg", self.svg)) if v}


def _probe_section(section) -> dict:
    unknown = set(section) - set(PROBE_KEYS)
    if unknown:
        raise ConfigError(f"[probe]: unknown key(s) {sorted(unknown)}")
    if "kind" not in section:
        raise ConfigError("[probe]: 'kind' is required")
    out: dict = {"kind": section["kind"].strip().upper()}
    for key in ("g", "omega", "delta", "drive_omega", "z", "mass", "trap_frequency"):
        if key in section:
            out[key] = parse_floats(section[key], key)[0]
    for key in ("force", "heating"):
        if key in section:
            values = parse_floats(section[key], key)
            out[key] = values[0] if len(values) == 1 else tuple(values)
    for key in ("g", "omega"):
        if key not in out:
            raise ConfigError(f"[probe]: '{key}' is required")
    return out


def _state_section(section) -> dict:
    kind = section.get("type", "thermal").strip().lower()
    if kind not in STATE_TYPES:
        raise ConfigError(f"[state]: type must be one of {STATE_TYPES}")
    state: dict = {"type": kind}
    if kind == "fock":
        occ = parse_floats(section.get("occupations", "0"), "occupations")
        if any(v != int(v) or v < 0 for v in occ):
            raise ConfigError("[state]: occupations must be non-negative integers")
        state["occupations"] = tuple(int(v) for v in occ)
    else:
        nbar = parse_floats(section.get("nbar", "0"), "nbar")
        if any(v < 0 for v in nbar):
            raise ConfigError("[state]: nbar must be non-negative")
        state["nbar"] = nbar[0] if len(nbar) == 1 else tuple(nbar)
    if kind == "superposition":
        c_up = parse_floats(section.get("c_up", str(1 / math.sqrt(2))), "c_up")[0]
        c_down = parse_floats(section.get("c_down", str(1 / math.sqrt(2))), "c_down")[0]
        if abs(c_up**2 + c_down**2 - 1.0) > 1e-9:
            raise ConfigError("[state]: c_up^2 + c_down^2 must equal 1")
        state.update(c_up=c_up, c_down=c_down, phi=parse_floats(section.get("phi", "0"), "phi")[0])
    return state


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not read:
        raise ConfigError(f"cannot read config {path}")
    return config_from_parser(parser)


def config_from_parser(parser: configparser.ConfigParser) -> ExperimentConfig:
    if "probe" not in parser:
        raise ConfigError("missing [probe] section")
    probe = _probe_section(parser["probe"])
    state = _state_section(parser["state"]) if "state" in parser else {"type": "thermal", "nbar": 0.0}

    proto = parser["protocol"] if "protocol" in parser else {}
    name = proto.get("name", "plain").strip().lower()
    if name not in ("plain", "driven_dd", "cpmg", "lindblad"):
        raise ConfigError(f"[protocol]: unknown protocol {name!r}")
    hamiltonian = proto.get("hamiltonian", "exact").strip().lower()
    if hamiltonian not in ("exact", "effective"):
        raise ConfigError("[protocol]: hamiltonian must be exact or effective")
    try:
        order = int(proto.get("order", "1"))
    except ValueError:
        raise ConfigError("[protocol]: order must be an integer") from None
    if name == "cpmg" and order < 1:
        raise ConfigError("[protocol]: CPMG order must be >= 1")
    if name == "lindblad" and "rate" in proto:
        rates = parse_floats(proto["rate"], "rate")
        probe["heating"] = rates[0] if len(rates) == 1 else tuple(rates)

    tsec = parser["time"] if "time" in parser else {}
    try:
        grid = TimeGrid(
            parse_floats(tsec.get("start", "0"), "start")[0],
            parse_floats(tsec.get("stop", "0.1"), "stop")[0],
            int(tsec.get("points", "101")),
        )
    except ValueError as exc:
        raise ConfigError(f"[time]: {exc}") from None

    cutoffs = None
    if "space" in parser and "cutoffs" in parser["space"]:
        values = parse_floats(parser["space"]["cutoffs"], "cutoffs")
        if any(v != int(v) or v < 2 for v in values):
            raise ConfigError("[space]: cutoffs must be integers >= 2")
        cutoffs = tuple(int(v) for v in values)
        modes = 2 if probe["kind"] == "JT" else 1
        if len(cutoffs) == 1:
            cutoffs = cutoffs * modes
        if len(cutoffs) != modes:
            raise ConfigError(f"[space]: {probe['kind']} needs {modes} cutoff(s)")

    out = parser["output"] if "output" in parser else {}
    sweep: dict = {}
    metrics: tuple = ()
    if "sweep" in parser:
        sec = parser["sweep"]
        metrics = tuple(m.strip() for m in sec.get("metrics", "").split(",") if m.strip())
        bad = [m for m in metrics if m not in METRICS]
        if bad or not metrics:
            raise ConfigError(f"[sweep]: metrics must be a non-empty subset of {METRICS}")
        for key, value in sec.items():
            if key == "metrics":
                continue
            if key not in PROBE_KEYS[1:] and key != "nbar":
                raise ConfigError(f"[sweep]: cannot sweep {key!r}")
            sweep[key] = parse_range(value, key)
        if not sweep:
            raise ConfigError("[sweep]: no ranged parameter")

    cfg = ExperimentConfig(
        probe=probe,
        state=state,
        protocol=name,
        cpmg_order=order,
        hamiltonian=hamiltonian,
        time=grid,
        cutoffs=cutoffs,
        csv=out.get("csv"),
        metadata=out.get("metadata"),
        svg=out.get("svg"),
        sweep=sweep,
        metrics=metrics,
    )
    cfg.params()
    return cfg


def check_writable(directory: Path) -> None:
    if not directory.exists():
        try:
            directory.mkdir(parents=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {directory}: {exc}") from None
    if not directory.is_dir() or not os.access(directory, os.W_OK):
        raise ConfigError(f"output directory {directory} is not writable")
