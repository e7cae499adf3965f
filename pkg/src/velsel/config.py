"""JSON scenario files with lab-unit strings.

A scenario file looks like::

    {
      "name": "beta023",
      "seed": 0,
      "cloud": {"temperature": "26uK", "rms_radius": "160um", "atoms": 100000},
      "potential": {"gradient": "3G/cm", "well_depth": "8uK"},
      "timing": {"hold": "20ms", "separation": "0.5ms",
                 "tof": ["5ms", "10ms", "15ms", "20ms"], "dt": "1us"},
      "sweep": {"depth_min": "0.5uK", "depth_max": "30uK", "points": 8}
    }

Exactly one of ``potential.barrier_height``, ``potential.well_depth`` or
``target_pseudo_temperature`` fixes the barrier. ``well_depth`` and
``barrier_height`` accept temperatures (converted through k_B) or energies.
Anything omitted takes the defaults of :class:`velsel.experiments.Scenario`.
The full schema is :data:`SCHEMA`; it is also documented in docs/config.md.

``resolve`` turns a parsed file into a :class:`Scenario`;
``scenario_to_config`` writes a fully defaulted file back out with SI values
and an explicit barrier height, which reloads to the identical scenario.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

import jsonschema
import numpy as np

from . import experiments
from .ensemble import IntegratorConfig
from .physics import RB85, PhysicalConstants, UnitError, gradient_energy_per_length, to_si
from .potential import PotentialConfig
from .theory import CloudSpec

SCHEMA_VERSION = 1

_QTY = {"type": "string", "minLength": 1}

SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "velsel scenario",
    "type": "object",
    "additionalProperties": False,
    "required": ["cloud", "potential"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "target_pseudo_temperature": _QTY,
        "cloud": {
            "type": "object",
            "additionalProperties": False,
            "required": ["temperature", "rms_radius"],
            "properties": {
                "temperature": _QTY,
                "rms_radius": _QTY,
                "center": _QTY,
                "atoms": {"type": "integer", "minimum": 1},
            },
        },
        "potential": {
            "type": "object",
            "additionalProperties": False,
            "required": ["gradient"],
            "properties": {
                "gradient": _QTY,
                "barrier_height": _QTY,
                "well_depth": _QTY,
                "barrier_center": _QTY,
                "barrier_waist": _QTY,
                "trap_offset": _QTY,
            },
        },
        "timing": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "hold": _QTY,
                "separation": _QTY,
                "tof": {"type": "array", "items": _QTY},
                "dt": _QTY,
                "record_stride": {"type": "integer", "minimum": 1},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "depths": {"type": "array", "items": _QTY},
                "depth_min": _QTY,
                "depth_max": _QTY,
                "points": {"type": "integer", "minimum": 1},
                "workers": {"type": "integer", "minimum": 1},
            },
        },
    },
}


class ConfigError(ValueError):
    """Malformed scenario file; the message starts with the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class SweepSpec:
    depths: tuple  # J
    workers: int = 1


def _path(parts) -> str:
    return "/" + "/".join(str(p) for p in parts) if parts else "/"


def validate(doc: dict) -> None:
    errors = sorted(jsonschema.Draft7Validator(SCHEMA).iter_errors(doc),
                    key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise ConfigError(_path(e.absolute_path), e.message)


def load(path) -> dict:
    """Read and schema-check a scenario file (a run manifest is accepted too,
    in which case its resolved scenario is used)."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("/", f"invalid JSON ({exc})") from None
    if isinstance(doc, dict) and "resolved_scenario" in doc:
        doc = doc["resolved_scenario"]
    if not isinstance(doc, dict):
        raise ConfigError("/", "top level must be an object")
    validate(doc)
    return doc


def _q(doc: dict, keys: tuple, expect: str, default=None):
    node = doc
    for k in keys[:-1]:
        node = node.get(k, {})
    if keys[-1] not in node:
        return default
    try:
        return to_si(node[keys[-1]], expect)
    except UnitError as exc:
        raise ConfigError(_path(keys), str(exc)) from None


def resolve(doc: dict, constants: PhysicalConstants = RB85, seed=None,
            atoms=None) -> experiments.Scenario:
    """Build the scenario described by a validated document. ``seed`` and
    ``atoms`` override the file."""
    validate(doc)
    try:
        cloud = CloudSpec(
            temperature=_q(doc, ("cloud", "temperature"), "temperature"),
            rms_radius=_q(doc, ("cloud", "rms_radius"), "length"),
            center=_q(doc, ("cloud", "center"), "length", 0.0),
            count=int(atoms if atoms is not None else doc["cloud"].get("atoms", 100_000)),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("/cloud", str(exc)) from None
    pot = doc["potential"]
    try:
        Up = to_si(pot["gradient"], "energy_gradient")
    except UnitError:
        G = _q(doc, ("potential", "gradient"), "gradient")
        try:
            Up = gradient_energy_per_length(G, constants)
        except ValueError as exc:
            raise ConfigError("/potential/gradient", str(exc)) from None
    fixers = [k for k in ("barrier_height", "well_depth") if k in pot]
    if "target_pseudo_temperature" in doc:
        fixers.append("target_pseudo_temperature")
    if len(fixers) > 1:
        raise ConfigError("/potential", f"conflicting barrier settings {fixers}; give exactly one")
    if not fixers:
        raise ConfigError("/potential", "missing barrier_height, well_depth or "
                                        "target_pseudo_temperature")
    try:
        potential = PotentialConfig(
            U_prime=Up,
            barrier_height=_q(doc, ("potential", "barrier_height"), "energy", 0.0),
            barrier_center=_q(doc, ("potential", "barrier_center"), "length", 0.0),
            barrier_waist=_q(doc, ("potential", "barrier_waist"), "length", 6e-6),
            trap_offset=_q(doc, ("potential", "trap_offset"), "length", 0.0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("/potential", str(exc)) from None
    base = experiments.Scenario(cloud, potential)
    timing = {}
    if "hold" in doc.get("timing", {}):
        timing["hold_time"] = _q(doc, ("timing", "hold"), "time")
    if "separation" in doc.get("timing", {}):
        timing["separation_time"] = _q(doc, ("timing", "separation"), "time")
    if "tof" in doc.get("timing", {}):
        tof = []
        for i, t in enumerate(doc["timing"]["tof"]):
            try:
                tof.append(to_si(t, "time"))
            except UnitError as exc:
                raise ConfigError(_path(("timing", "tof", i)), str(exc)) from None
        timing["tof_times"] = tuple(tof)
    integ = IntegratorConfig()
    try:
        integ = replace(integ,
                        dt=_q(doc, ("timing", "dt"), "time", integ.dt),
                        record_stride=doc.get("timing", {}).get("record_stride", integ.record_stride))
        s = replace(base, integrator=integ, seed=int(seed if seed is not None else doc.get("seed", 0)),
                    **timing)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("/timing", str(exc)) from None

    if "well_depth" in pot:
        U0 = _q(doc, ("potential", "well_depth"), "energy")
        if U0 <= 0:
            raise ConfigError("/potential/well_depth", "must be positive")
        s = s.with_depth(U0)
    elif "target_pseudo_temperature" in doc:
        Ts = _q(doc, ("target_pseudo_temperature",), "temperature")
        if not 0 < Ts < cloud.temperature:
            raise ConfigError("/target_pseudo_temperature",
                              "must lie between 0 and the cloud temperature")
        s = s.with_depth(experiments.depth_for_pseudo_temperature(s, Ts, constants))
    return s


def sweep_spec(doc: dict, constants: PhysicalConstants = RB85) -> SweepSpec:
    sw = doc.get("sweep")
    if sw is None:
        raise ConfigError("/sweep", "scenario has no sweep section")
    if "depths" in sw:
        depths = []
        for i, d in enumerate(sw["depths"]):
            try:
                depths.append(to_si(d, "energy"))
            except UnitError as exc:
                raise ConfigError(_path(("sweep", "depths", i)), str(exc)) from None
    else:
        for key in ("depth_min", "depth_max", "points"):
            if key not in sw:
                raise ConfigError(f"/sweep/{key}", "required when 'depths' is not given")
        lo = _q(doc, ("sweep", "depth_min"), "energy")
        hi = _q(doc, ("sweep", "depth_max"), "energy")
        if not 0 < lo < hi:
            raise ConfigError("/sweep", "need 0 < depth_min < depth_max")
        depths = list(np.geomspace(lo, hi, sw["points"]))
    if len(depths) < 4:
        raise ConfigError("/sweep", f"a sweep needs at least 4 depths, got {len(depths)}")
    if any(b <= a for a, b in zip(depths, depths[1:])):
        raise ConfigError("/sweep", "depths must be strictly increasing")
    return SweepSpec(tuple(float(d) for d in depths), int(sw.get("workers", 1)))


def _si(x: float, unit: str) -> str:
    return f"{float(x)!r}{unit}"


def scenario_to_config(s: experiments.Scenario, name: str = "",
                       sweep: SweepSpec | None = None) -> dict:
    """Fully defaulted document in SI units with an explicit barrier height.
    ``resolve(scenario_to_config(s)) == s`` exactly."""
    c, p, i = s.cloud, s.potential, s.integrator
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "seed": s.seed,
        "cloud": {"temperature": _si(c.temperature, "K"), "rms_radius": _si(c.rms_radius, "m"),
                  "center": _si(c.center, "m"), "atoms": c.count},
        "potential": {"gradient": _si(p.U_prime, "J/m"),
                      "barrier_height": _si(p.barrier_height, "J"),
                      "barrier_center": _si(p.barrier_center, "m"),
                      "barrier_waist": _si(p.barrier_waist, "m"),
                      "trap_offset": _si(p.trap_offset, "m")},
        "timing": {"hold": _si(s.hold_time, "s"), "separation": _si(s.separation_time, "s"),
                   "tof": [_si(t, "s") for t in s.tof_times], "dt": _si(i.dt, "s"),
                   "record_stride": i.record_stride},
    }
    if sweep is not None:
        doc["sweep"] = {"depths": [_si(d, "J") for d in sweep.depths], "workers": sweep.workers}
    return doc
