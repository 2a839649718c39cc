"""Molecular structure data: states, transition dipoles, ingestion and rule checks.

Data files use a small sectioned text format (``.mol``); the grammar is
documented in ``docs/molfile.md``.  Everything is converted to SI on load.
"""
from __future__ import annotations

import hashlib
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .units import UnitError, canonical_tag, convert_unit, dimension, parse_quantity

EVEN, ODD = "even", "odd"


class MolDataError(ValueError):
    """Raised for malformed or rule-violating molecular data."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field {field!r}")
        prefix = f"[{', '.join(loc)}] " if loc else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


@dataclass(frozen=True)
class RoVibState:
    id: str
    label: str
    nu: int
    J: int
    M: int
    energy: float  # J
    parity: str

    def __post_init__(self):
        if self.nu < 0 or self.J < 0:
            raise MolDataError(f"state {self.id}: nu and J must be >= 0")
        if abs(self.M) > self.J:
            raise MolDataError(f"state {self.id}: |M| > J")
        if not math.isfinite(self.energy):
            raise MolDataError(f"state {self.id}: non-finite energy")
        if self.parity not in (EVEN, ODD):
            raise MolDataError(f"state {self.id}: bad parity {self.parity!r}")

    @property
    def quantum_numbers(self) -> tuple[int, int, int]:
        return (self.nu, self.J, self.M)


class TransitionDipoleTable:
    """Symmetric table of real z-dipole matrix elements (C*m)."""

    def __init__(self, entries: dict[tuple[str, str], float] | None = None):
        self._entries: dict[tuple[str, str], float] = {}
        self._adj: dict[str, dict[str, float]] = defaultdict(dict)
        for (a, b), mu in (entries or {}).items():
            self.set(a, b, mu)

    @staticmethod
    def _key(a: str, b: str) -> tuple[str, str]:
        return (a, b) if a <= b else (b, a)

    def set(self, a: str, b: str, mu: float) -> None:
        if a == b:
            raise MolDataError(f"diagonal dipole entry {a}")
        if not math.isfinite(mu):
            raise MolDataError(f"non-finite dipole {a}-{b}")
        self._entries[self._key(a, b)] = float(mu)
        self._adj[a][b] = float(mu)
        self._adj[b][a] = float(mu)

    def get(self, a: str, b: str) -> float:
        return self._entries.get(self._key(a, b), 0.0)

    def neighbours(self, a: str) -> dict[str, float]:
        return self._adj.get(a, {})

    def items(self):
        return self._entries.items()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, pair) -> bool:
        return self._key(*pair) in self._entries


@dataclass
class MoleculeModel:
    states: tuple[RoVibState, ...]
    dipoles: TransitionDipoleTable
    mass: float  # kg
    rotational_constant: float  # J
    ground_label: str = "X"
    name: str = ""
    parity_rules: dict[str, int] = field(default_factory=dict)
    source_hash: str = ""

    def __post_init__(self):
        self._by_id = {s.id: s for s in self.states}
        self._by_qn = {}
        for s in self.states:
            self._by_qn.setdefault((s.label, s.nu, s.J, s.M), s)
        if len(self._by_id) != len(self.states):
            raise MolDataError("duplicate state ids")
        if not self.mass > 0:
            raise MolDataError("mass must be positive")
        for a, b in (k for k, _ in self.dipoles.items()):
            for ref in (a, b):
                if ref not in self._by_id:
                    raise MolDataError(f"dipole references unknown state {ref!r}")

    def state(self, sid: str) -> RoVibState:
        try:
            return self._by_id[sid]
        except KeyError:
            raise KeyError(f"unknown state {sid!r}") from None

    def find(self, nu: int, J: int, M: int, label: str | None = None) -> RoVibState:
        label = self.ground_label if label is None else label
        try:
            return self._by_qn[(label, nu, J, M)]
        except KeyError:
            pass
        raise KeyError(f"no state |{nu},{J},{M}> in manifold {label}")

    def ground_states(self) -> list[RoVibState]:
        return [s for s in self.states if s.label == self.ground_label]

    def __contains__(self, sid: str) -> bool:
        return sid in self._by_id


def parity_from_rule(sign: int, J: int) -> str:
    return EVEN if sign * (-1) ** J > 0 else ODD


_PARITY_RULES = {"(-1)^J": 1, "-(-1)^J": -1}
_META_KEYS = {"name", "mass", "rotational_constant", "ground"}
_STATE_FIELDS = ["id", "label", "nu", "J", "M", "energy"]
_DIPOLE_FIELDS = ["a", "b", "mu"]


def _parse_units(value: str, lineno: int, allowed: dict[str, str]) -> dict[str, str]:
    units = {}
    for item in value.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise MolDataError(f"unit declaration {item!r} must be field:unit", lineno, "units")
        fname, tag = (p.strip() for p in item.split(":", 1))
        if fname not in allowed:
            raise MolDataError(f"unit declared for unknown field {fname!r}", lineno, "units")
        try:
            tag = canonical_tag(tag)
        except UnitError as exc:
            raise MolDataError(str(exc), lineno, fname) from None
        if dimension(tag) != allowed[fname]:
            raise MolDataError(f"unit {tag} is not a {allowed[fname]}", lineno, fname)
        units[fname] = tag
    return units


def loads_molecule(text: str, *, source_hash: str | None = None) -> MoleculeModel:
    """Parse a ``.mol`` document into a validated :class:`MoleculeModel`."""
    section = None
    meta: dict[str, float | str] = {}
    rules: dict[str, int] = {}
    columns = {"states": None, "dipoles": None}
    units = {"states": None, "dipoles": None}
    raw_states: list[tuple[int, list[str]]] = []
    raw_dipoles: list[tuple[int, list[str]]] = []

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise MolDataError(f"bad section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in ("meta", "states", "dipoles"):
                raise MolDataError(f"unknown section [{section}]", lineno)
            continue
        if section is None:
            raise MolDataError("content before first section", lineno)

        if "=" in line and (section == "meta" or line.split("=", 1)[0].strip() in ("fields", "units")):
            key, value = (p.strip() for p in line.split("=", 1))
            if section == "meta":
                if key.startswith("parity."):
                    if value not in _PARITY_RULES:
                        raise MolDataError(f"unknown parity rule {value!r}", lineno, key)
                    rules[key[len("parity."):]] = _PARITY_RULES[value]
                elif key not in _META_KEYS:
                    raise MolDataError(f"unknown key {key!r}", lineno, key)
                elif key == "mass":
                    try:
                        meta[key] = parse_quantity(value, "mass")
                    except UnitError as exc:
                        raise MolDataError(str(exc), lineno, key) from None
                elif key == "rotational_constant":
                    try:
                        meta[key] = parse_quantity(value, "energy")
                    except UnitError as exc:
                        raise MolDataError(str(exc), lineno, key) from None
                else:
                    meta[key] = value
            elif key == "fields":
                cols = value.split()
                expected = _STATE_FIELDS if section == "states" else _DIPOLE_FIELDS
                if cols != expected:
                    raise MolDataError(f"fields must be {' '.join(expected)}", lineno, "fields")
                columns[section] = cols
            else:
                allowed = {"energy": "energy"} if section == "states" else {"mu": "dipole"}
                units[section] = _parse_units(value, lineno, allowed)
            continue

        if section == "meta":
            raise MolDataError(f"expected key = value, got {line!r}", lineno)
        if columns[section] is None:
            raise MolDataError(f"[{section}] record before 'fields' declaration", lineno)
        if units[section] is None:
            raise MolDataError(f"[{section}] record before 'units' declaration", lineno, "units")
        parts = line.split()
        if len(parts) != len(columns[section]):
            raise MolDataError(
                f"expected {len(columns[section])} columns, got {len(parts)}", lineno)
        (raw_states if section == "states" else raw_dipoles).append((lineno, parts))

    for key in ("mass", "rotational_constant"):
        if key not in meta:
            raise MolDataError(f"[meta] missing required key {key!r}", field=key)
    if raw_states and "energy" not in (units["states"] or {}):
        raise MolDataError("[states] energy unit not declared", field="energy")
    if raw_dipoles and "mu" not in (units["dipoles"] or {}):
        raise MolDataError("[dipoles] mu unit not declared", field="mu")

    ground = str(meta.get("ground", "X"))

    def rule_for(label: str, lineno: int) -> int:
        if label in rules:
            return rules[label]
        if "*" in rules:
            return rules["*"]
        raise MolDataError(f"no parity rule covers label {label!r}", lineno, "label")

    states = []
    for lineno, parts in raw_states:
        sid, label, nu, J, M, energy = parts
        try:
            nu_i, J_i, M_i = int(nu), int(J), int(M)
        except ValueError:
            raise MolDataError("nu, J, M must be integers", lineno) from None
        try:
            e = convert_unit(float(energy), units["states"]["energy"], "J")
        except ValueError:
            raise MolDataError(f"bad energy {energy!r}", lineno, "energy") from None
        try:
            states.append(RoVibState(sid, label, nu_i, J_i, M_i, e,
                                     parity_from_rule(rule_for(label, lineno), J_i)))
        except MolDataError as exc:
            raise MolDataError(str(exc), lineno) from None

    by_id = {s.id: s for s in states}
    if len(by_id) != len(states):
        seen = set()
        for lineno, parts in raw_states:
            if parts[0] in seen:
                raise MolDataError(f"duplicate state id {parts[0]!r}", lineno, "id")
            seen.add(parts[0])

    table = TransitionDipoleTable()
    for lineno, (a, b, mu) in raw_dipoles:
        for ref, fname in ((a, "a"), (b, "b")):
            if ref not in by_id:
                raise MolDataError(f"unknown state {ref!r}", lineno, fname)
        try:
            value = convert_unit(float(mu), units["dipoles"]["mu"], "C*m")
        except ValueError:
            raise MolDataError(f"bad dipole value {mu!r}", lineno, "mu") from None
        problems = dipole_rule_violations(by_id[a], by_id[b])
        if problems:
            raise MolDataError(f"dipole {a}-{b} violates: {'; '.join(problems)}", lineno, "mu")
        if (a, b) in table:
            raise MolDataError(f"duplicate dipole entry {a}-{b}", lineno)
        table.set(a, b, value)

    _check_ladders(states)
    if source_hash is None:
        source_hash = hashlib.sha256(text.encode()).hexdigest()
    return MoleculeModel(
        states=tuple(states),
        dipoles=table,
        mass=float(meta["mass"]),
        rotational_constant=float(meta["rotational_constant"]),
        ground_label=ground,
        name=str(meta.get("name", "")),
        parity_rules=dict(rules),
        source_hash=source_hash,
    )


def load_molecule(source) -> MoleculeModel:
    """Load a molecule from a path or from document text.

    Strings containing a newline are treated as the document itself.
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        data = Path(source).read_bytes()
        return loads_molecule(data.decode("utf-8"), source_hash=hashlib.sha256(data).hexdigest())
    return loads_molecule(source)


def _check_ladders(states) -> None:
    ladders: dict[tuple[str, int], dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for s in states:
        ladders[(s.label, s.nu)][s.J].append(s.energy)
    for (label, nu), by_j in ladders.items():
        js = sorted(by_j)
        for lo, hi in zip(js, js[1:]):
            if not min(by_j[hi]) > max(by_j[lo]):
                raise MolDataError(
                    f"energies of ladder {label} nu={nu} not increasing between J={lo} and J={hi}")


def dipole_rule_violations(a: RoVibState, b: RoVibState) -> list[str]:
    """Electric-dipole rules for a z-polarised entry between two states."""
    out = []
    if a.parity == b.parity:
        out.append(f"parity: both states {a.parity} (dipole needs opposite parity)")
    if abs(a.J - b.J) != 1:
        out.append(f"|dJ| = {abs(a.J - b.J)} (must be 1)")
    if a.M != b.M:
        out.append(f"dM = {b.M - a.M} (z polarisation needs dM = 0)")
    return out


def interference_eligibility(a: RoVibState, b: RoVibState) -> tuple[bool, str]:
    if a.parity != b.parity:
        return False, "interference-ineligible (opposite parity)"
    if abs(a.J - b.J) != 2:
        return False, f"interference-ineligible (|dJ| = {abs(a.J - b.J)}, need 2)"
    if a.M != b.M:
        return False, "interference-ineligible (dM != 0)"
    return True, "interference-eligible"


@dataclass
class ValidationReport:
    violations: list[tuple[str, str, str]]  # (state a, state b, rule text)
    eligible_pairs: list[tuple[str, str]]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_transitions(model: MoleculeModel) -> ValidationReport:
    violations = []
    for (a, b), _ in model.dipoles.items():
        for problem in dipole_rule_violations(model.state(a), model.state(b)):
            violations.append((a, b, problem))
    buckets: dict[int, list[RoVibState]] = defaultdict(list)
    for s in model.ground_states():
        buckets[s.M].append(s)
    pairs = []
    for group in buckets.values():
        by_j = defaultdict(list)
        for s in group:
            by_j[s.J].append(s)
        for J, lows in sorted(by_j.items()):
            for lo in lows:
                for hi in by_j.get(J + 2, []):
                    if interference_eligibility(lo, hi)[0]:
                        pairs.append((lo.id, hi.id))
    return ValidationReport(violations, sorted(pairs))


def canonical_form(model: MoleculeModel) -> str:
    """Exact text image of a model (SI values via repr) for hashing/comparison."""
    lines = [f"name={model.name}", f"mass={model.mass!r}",
             f"B={model.rotational_constant!r}", f"ground={model.ground_label}"]
    for label, sign in sorted(model.parity_rules.items()):
        lines.append(f"parity.{label}={sign}")
    for s in model.states:
        lines.append(f"S {s.id} {s.label} {s.nu} {s.J} {s.M} {s.energy!r} {s.parity}")
    for (a, b), mu in sorted(model.dipoles.items()):
        lines.append(f"D {a} {b} {mu!r}")
    return "\n".join(lines) + "\n"


def dumps_molecule(model: MoleculeModel) -> str:
    """Write a model back out in ``.mol`` format (cm-1, debye, u)."""
    rules = {1: "(-1)^J", -1: "-(-1)^J"}
    out = ["[meta]"]
    if model.name:
        out.append(f"name = {model.name}")
    out.append(f"mass = {convert_unit(model.mass, 'kg', 'u')!r} u")
    out.append(f"rotational_constant = {convert_unit(model.rotational_constant, 'J', 'cm-1')!r} cm-1")
    out.append(f"ground = {model.ground_label}")
    for label, sign in sorted(model.parity_rules.items()):
        out.append(f"parity.{label} = {rules[sign]}")
    out += ["", "[states]", "fields = " + " ".join(_STATE_FIELDS), "units = energy:cm-1"]
    for s in model.states:
        e = convert_unit(s.energy, "J", "cm-1")
        out.append(f"{s.id} {s.label} {s.nu} {s.J} {s.M} {e!r}")
    out += ["", "[dipoles]", "fields = " + " ".join(_DIPOLE_FIELDS), "units = mu:debye"]
    for (a, b), mu in sorted(model.dipoles.items()):
        out.append(f"{a} {b} {convert_unit(mu, 'C*m', 'debye')!r}")
    return "\n".join(out) + "\n"
