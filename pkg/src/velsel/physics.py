"""Physical constants and lab-unit conversions.

Everything inside the package is SI. Lab units (uK, G/cm, um, ms, cm/s)
only appear at the I/O boundary, through :func:`convert` and
:func:`parse_quantity`.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import astuple, dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    k_B: float = 1.380649e-23  # J/K, exact SI
    mu_B: float = 9.2740100783e-24  # J/T, CODATA 2018
    mass: float = 84.911789738 * 1.66053906660e-27  # kg, 85Rb
    g_F_m_F: float = 1.0  # |F=3, m_F=3>: g_F = 1/3, m_F = 3

    def __post_init__(self):
        for name, value in zip(("k_B", "mu_B", "mass", "g_F_m_F"), astuple(self)):
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")

    def thermal_speed(self, temperature: float) -> float:
        """1-D rms velocity sqrt(k_B T / m) of a thermal cloud."""
        return (self.k_B * temperature / self.mass) ** 0.5

    def fingerprint(self) -> str:
        text = ",".join(repr(v) for v in astuple(self))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


RB85 = PhysicalConstants()


class UnitError(ValueError):
    pass


# unit -> (dimension, factor to the SI base of that dimension)
_UNITS: dict[str, tuple[str, float]] = {
    "K": ("temperature", 1.0),
    "mK": ("temperature", 1e-3),
    "uK": ("temperature", 1e-6),
    "nK": ("temperature", 1e-9),
    "J": ("energy", 1.0),
    "m": ("length", 1.0),
    "cm": ("length", 1e-2),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "m/s": ("velocity", 1.0),
    "cm/s": ("velocity", 1e-2),
    "mm/s": ("velocity", 1e-3),
    "T": ("field", 1.0),
    "G": ("field", 1e-4),
    "mG": ("field", 1e-7),
    "T/m": ("gradient", 1.0),
    "G/cm": ("gradient", 1e-2),
    "J/m": ("energy_gradient", 1.0),
}
_ALIASES = {"μK": "uK", "µK": "uK", "μm": "um", "µm": "um", "μs": "us", "µs": "us"}

SI_UNIT = {
    "temperature": "K",
    "energy": "J",
    "length": "m",
    "time": "s",
    "velocity": "m/s",
    "field": "T",
    "gradient": "T/m",
    "energy_gradient": "J/m",
}


def _lookup(unit: str) -> tuple[str, float]:
    unit = _ALIASES.get(unit, unit)
    try:
        return _UNITS[unit]
    except KeyError:
        raise UnitError(f"unknown unit {unit!r}") from None


def dimension(unit: str) -> str:
    return _lookup(unit)[0]


def convert(value: float, source: str, target: str,
            constants: PhysicalConstants = RB85) -> float:
    """Convert ``value`` from unit ``source`` to unit ``target``.

    Temperature and energy are inter-convertible through k_B.
    """
    dim_s, f_s = _lookup(source)
    dim_t, f_t = _lookup(target)
    si = value * f_s
    if dim_s == dim_t:
        return si / f_t
    if (dim_s, dim_t) == ("temperature", "energy"):
        return si * constants.k_B / f_t
    if (dim_s, dim_t) == ("energy", "temperature"):
        return si / constants.k_B / f_t
    raise UnitError(f"cannot convert {source!r} ({dim_s}) to {target!r} ({dim_t})")


_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s\d].*?)\s*$")


def parse_quantity(text: str) -> tuple[float, str]:
    """Split ``"26uK"`` into ``(26.0, "uK")``; the unit must be known."""
    match = _QUANTITY.match(text)
    if match is None:
        raise UnitError(f"malformed quantity {text!r}; expected e.g. '26uK' or '8G/cm'")
    value, unit = float(match.group(1)), match.group(2)
    _lookup(unit)
    return value, _ALIASES.get(unit, unit)


def to_si(text: str, expect: str | None = None) -> float:
    """Parse a lab-unit string and return its value in SI base units.

    ``expect`` names the required dimension; a temperature string is
    accepted where an energy is expected (and vice versa).
    """
    value, unit = parse_quantity(text)
    dim = dimension(unit)
    if expect is None or expect == dim:
        return convert(value, unit, SI_UNIT[dim])
    if {expect, dim} == {"temperature", "energy"}:
        return convert(value, unit, SI_UNIT[expect])
    raise UnitError(f"{text!r} is a {dim}, expected a {expect}")


def gradient_energy_per_length(B_gradient: float,
                               constants: PhysicalConstants = RB85) -> float:
    """Potential-energy slope U' (J/m) from a magnetic gradient in T/m."""
    if B_gradient < 0:
        raise ValueError(f"magnetic gradient must be non-negative, got {B_gradient}")
    return constants.g_F_m_F * constants.mu_B * B_gradient
