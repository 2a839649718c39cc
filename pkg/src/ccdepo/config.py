"""Run configuration: a YAML document validated by pydantic.

Quantities are written with units (``"0.628 um"``, ``"100 V/cm"``); bare
numbers are read in the SI unit of the field.  ``--set a.b=value``
overrides on the command line use dotted paths into the same document.
"""
from __future__ import annotations

import copy
import os
from importlib import resources
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .units import UnitError, parse_quantity

DATASET_ENV = "CCDEPO_DATASET"
DEFAULT_DATASET = "n2_synthetic.mol"


class ConfigError(ValueError):
    """Bad configuration; ``path`` is the dotted key at fault, when known."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def _qty(dim: str, si: str):
    def parse(v):
        if v is None:
            return v
        try:
            return parse_quantity(v, dim, default_tag=si)
        except UnitError as exc:
            raise ValueError(str(exc)) from None
    return parse


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class FieldSection(_Section):
    E1: float = 1.0e4  # V/m
    E2: Optional[float] = None
    ratio: Optional[float] = 1.0e4  # E2/E1, used when E2 is not given
    lambda1: float = 0.628e-6
    lambda2: float = 0.736e-6
    theta_F: float = -2.65

    parse_e = field_validator("E1", "E2", mode="before")(_qty("field", "V/m"))
    parse_l = field_validator("lambda1", "lambda2", mode="before")(_qty("length", "m"))
    parse_a = field_validator("theta_F", mode="before")(_qty("angle", "rad"))

    @property
    def E2_value(self) -> float:
        if self.E2 is not None:
            return self.E2
        return self.E1 * (self.ratio if self.ratio is not None else 0.0)


class SuperpositionSection(_Section):
    state1: tuple[int, int, int] = (0, 0, 0)  # (nu, J, M)
    state2: tuple[int, int, int] = (0, 2, 0)
    p1: float = Field(0.2, ge=0.0, le=1.0)
    theta: float = 0.0

    parse_a = field_validator("theta", mode="before")(_qty("angle", "rad"))


class BeamSection(_Section):
    vz: float = 600.0
    nozzle_width: Optional[float] = None  # default: 4 lambda2
    sigma_v: float = 0.0
    t_int: float = 0.625e-6
    t_free: float = 0.0

    parse_v = field_validator("vz", "sigma_v", mode="before")(_qty("speed", "m/s"))
    parse_n = field_validator("nozzle_width", mode="before")(_qty("length", "m"))
    parse_t = field_validator("t_int", "t_free", mode="before")(_qty("time", "s"))


class RunSection(_Section):
    n: int = Field(20000, gt=0)
    bin_width: float = 1.403e-9
    workers: int = Field(1, ge=1)
    dt: Optional[float] = None
    interference: bool = True
    compare: bool = False  # also run without V_in
    threshold_fraction: float = Field(0.5, ge=0.0, le=1.0)
    smooth: float = Field(0.0, ge=0.0)

    parse_b = field_validator("bin_width", mode="before")(_qty("length", "m"))
    parse_t = field_validator("dt", mode="before")(_qty("time", "s"))


class PotentialSection(_Section):
    x_min: float = -10e-6
    x_max: float = 10e-6
    points: int = Field(10000, ge=10)
    mode: Literal["averaged", "full-time-dependent"] = "averaged"

    parse_x = field_validator("x_min", "x_max", mode="before")(_qty("length", "m"))


class SweepSection(_Section):
    parameter: str
    values: list

    @field_validator("parameter")
    @classmethod
    def _known(cls, v):
        if v not in SWEEPABLE:
            raise ValueError(f"cannot sweep {v!r}; choose one of {', '.join(sorted(SWEEPABLE))}")
        return v


class PulseSection(_Section):
    field_strength: float = 3.25e9
    spectral_width: float = 75.4  # cm-1

    parse_f = field_validator("field_strength", mode="before")(_qty("field", "V/m"))

    @field_validator("spectral_width", mode="before")
    @classmethod
    def _w(cls, v):
        if isinstance(v, str):
            num, _, tag = v.strip().partition(" ")
            if tag.strip() not in ("", "cm-1", "cm^-1", "1/cm"):
                raise ValueError(f"spectral_width must be in cm-1, got {v!r}")
            return float(num)
        return v


class MixtureSection(_Section):
    temperature: float = 298.0
    cutoff: float = Field(0.99, gt=0.0, le=1.0)
    pulse: PulseSection = PulseSection()

    parse_t = field_validator("temperature", mode="before")(_qty("temperature", "K"))


class ResonanceSection(_Section):
    threshold: float = 50.0  # cm-1
    strict: bool = False


class RunConfig(_Section):
    dataset: Optional[str] = None
    seed: int = 1
    field: FieldSection = FieldSection()
    superposition: SuperpositionSection = SuperpositionSection()
    beam: BeamSection = BeamSection()
    run: RunSection = RunSection()
    potential: PotentialSection = PotentialSection()
    sweep: Optional[SweepSection] = None
    mixture: MixtureSection = MixtureSection()
    resonance: ResonanceSection = ResonanceSection()
    output: str = "out"

    @model_validator(mode="after")
    def _ranges(self):
        if self.potential.x_max <= self.potential.x_min:
            raise ValueError("potential.x_max must exceed potential.x_min")
        return self

    @property
    def nozzle_width(self) -> float:
        w = self.beam.nozzle_width
        return 4.0 * self.field.lambda2 if w is None else w

    def snapshot(self) -> dict:
        return self.model_dump(mode="json")


# dotted config paths a sweep may iterate over
SWEEPABLE = {
    "field.theta_F", "field.E1", "field.E2", "field.ratio",
    "superposition.p1", "superposition.theta", "beam.t_int",
}


def _set_path(doc: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        nxt = node.get(k)
        if nxt is None:
            nxt = node[k] = {}
        elif not isinstance(nxt, dict):
            raise ConfigError("is not a section", ".".join(keys[:keys.index(k) + 1]))
        node = nxt
    node[keys[-1]] = value


def parse_override(text: str) -> tuple[str, object]:
    """``"field.theta_F=0.5"`` -> ``("field.theta_F", 0.5)``; the value is parsed as YAML."""
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {text!r} is not of the form key.path=value")
    return key.strip(), yaml.safe_load(raw)


def apply_overrides(doc: dict, overrides) -> dict:
    out = copy.deepcopy(doc)
    for item in overrides:
        key, val = parse_override(item) if isinstance(item, str) else item
        _set_path(out, key, val)
    return out


def _first_error_path(exc) -> str | None:
    errs = exc.errors()
    if not errs:
        return None
    return ".".join(str(p) for p in errs[0]["loc"]) or None


def build_config(doc: dict | None, overrides=()) -> RunConfig:
    from pydantic import ValidationError

    doc = apply_overrides(doc or {}, overrides)
    try:
        return RunConfig.model_validate(doc)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ConfigError(err["msg"], _first_error_path(exc)) from exc


def load_config(path, overrides=()) -> RunConfig:
    p = Path(path)
    try:
        doc = yaml.safe_load(p.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {p} not found") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from None
    if doc is not None and not isinstance(doc, dict):
        raise ConfigError(f"{p} must hold a mapping at top level")
    if doc and "manifest_version" in doc:
        # a run manifest carries the full config snapshot it was produced from
        doc = doc["config"]
    return build_config(doc, overrides)


def with_value(cfg: RunConfig, dotted: str, value) -> RunConfig:
    """Copy of ``cfg`` with one dotted key replaced (re-validated)."""
    return build_config(cfg.snapshot(), [(dotted, value)])


def resolve_dataset(cfg: RunConfig, config_dir: Path | None = None) -> Path:
    """Config value, then $CCDEPO_DATASET, then the shipped synthetic model.

    Bare names of shipped files (``three_level.mol``) resolve to the package copy.
    """
    name = cfg.dataset or os.environ.get(DATASET_ENV) or DEFAULT_DATASET
    p = Path(name)
    if not p.is_absolute() and config_dir is not None and (config_dir / p).exists():
        return config_dir / p
    if p.exists():
        return p
    shipped = resources.files("ccdepo") / "data" / name
    if shipped.is_file():
        return Path(str(shipped))
    raise ConfigError(f"dataset {name!r} not found", "dataset")


def recipe_path(name: str) -> Path:
    """Path of a shipped recipe (``fig2``, ``fig3a`` ...)."""
    stem = name[:-5] if name.endswith(".yaml") else name
    p = resources.files("ccdepo") / "recipes" / f"{stem}.yaml"
    if not p.is_file():
        raise ConfigError(f"no shipped recipe named {name!r}")
    return Path(str(p))
