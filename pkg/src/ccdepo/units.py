"""Unit tags and conversion to the internal SI system.

Every quantity crossing a file or config boundary goes through
:func:`convert_unit`; internally energies are joules, angular frequencies
rad/s, dipoles C*m, fields V/m, lengths m, masses kg, times s.
"""
from __future__ import annotations

import math
import re

from scipy import constants as const

HBAR = const.hbar
# energy of 1 cm^-1 in joules
WAVENUMBER_J = const.h * const.c * 100.0
DEBYE = 1e-21 / const.c
AMU = const.atomic_mass


class UnitError(ValueError):
    pass


# tag -> (dimension, factor to SI)
_UNITS: dict[str, tuple[str, float]] = {
    # energy-like (interconverted through E = hbar*omega)
    "J": ("energy", 1.0),
    "eV": ("energy", const.e),
    "cm-1": ("energy", WAVENUMBER_J),
    "rad/s": ("energy", HBAR),
    # dipole moment
    "C*m": ("dipole", 1.0),
    "debye": ("dipole", DEBYE),
    # electric field
    "V/m": ("field", 1.0),
    "V/cm": ("field", 100.0),
    # length
    "m": ("length", 1.0),
    "um": ("length", 1e-6),
    "nm": ("length", 1e-9),
    # mass
    "kg": ("mass", 1.0),
    "u": ("mass", AMU),
    # time and speed, needed by run configs
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "ns": ("time", 1e-9),
    "m/s": ("speed", 1.0),
    "K": ("temperature", 1.0),
    "rad": ("angle", 1.0),
}

_ALIASES = {
    "cm^-1": "cm-1", "cm⁻¹": "cm-1", "1/cm": "cm-1",
    "C·m": "C*m", "C m": "C*m", "Cm": "C*m",
    "D": "debye", "Debye": "debye",
    "μm": "um", "µm": "um", "micron": "um",
    "amu": "u", "Da": "u",
    "μs": "us", "µs": "us",
    "joule": "J",
}


def canonical_tag(tag: str) -> str:
    t = tag.strip()
    t = _ALIASES.get(t, t)
    if t not in _UNITS:
        raise UnitError(f"unknown unit tag {tag!r}")
    return t


def dimension(tag: str) -> str:
    return _UNITS[canonical_tag(tag)][0]


def supported_tags() -> list[str]:
    return sorted(_UNITS)


def convert_unit(value: float, from_tag: str, to_tag: str) -> float:
    """Convert ``value`` between two tags of the same dimension.

    Energy-like tags (J, eV, cm-1, rad/s) are mutually convertible.
    """
    f = canonical_tag(from_tag)
    t = canonical_tag(to_tag)
    dim_f, fac_f = _UNITS[f]
    dim_t, fac_t = _UNITS[t]
    if dim_f != dim_t:
        raise UnitError(f"cannot convert {f} ({dim_f}) to {t} ({dim_t})")
    if f == t:
        return value
    return value * fac_f / fac_t


def to_si(value: float, tag: str) -> float:
    t = canonical_tag(tag)
    return value * _UNITS[t][1]


_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S.*)?$")


def parse_quantity(text, dim: str | None = None, default_tag: str | None = None) -> float:
    """Parse ``"0.628 um"`` (or a bare number with ``default_tag``) into SI.

    >>> parse_quantity("100 V/cm", "field")
    10000.0
    """
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        if default_tag is None:
            raise UnitError(f"missing unit for {text!r}")
        return to_si(float(text), default_tag)
    m = _QTY.match(str(text))
    if not m:
        raise UnitError(f"cannot parse quantity {text!r}")
    number, tag = m.groups()
    if tag is None:
        if default_tag is None:
            raise UnitError(f"missing unit in {text!r}")
        tag = default_tag
    tag = canonical_tag(tag)
    if dim is not None and _UNITS[tag][0] != dim:
        raise UnitError(f"{text!r} is not a {dim}")
    value = float(number)
    if not math.isfinite(value):
        raise UnitError(f"non-finite quantity {text!r}")
    return to_si(value, tag)
