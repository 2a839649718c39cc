"""``ccdepo`` command line.

Exit status: 0 success, 1 bad configuration / data / hard validation
failure, 2 anything that broke while running.
"""
from __future__ import annotations

import functools
import hashlib
import json
import logging
import math
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .analysis import deposition_periodicity, peak_metrics, periodicity_report
from .config import ConfigError, RunConfig, load_config, recipe_path, resolve_dataset, with_value
from .dynamics import BeamConfig, simulate_deposition
from .export import export_table
from .field import StandingWaveConfig
from .mixture import PreparationPulse, argmin_spread, component_specs, simulate_mixture_deposition, thermal_mixture
from .moldata import MolDataError, interference_eligibility, load_molecule, validate_transitions
from .potential import OpticalPotentialSpec, find_extrema, potential_time_dependent, sample_potential
from .suscept import resonance_detuning, superposition, susceptibility_set
from .units import convert_unit

log = logging.getLogger("ccdepo")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class HardViolation(Exception):
    """Raised for problems that should end the run with exit status 1."""


# ---------------------------------------------------------------- plumbing

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _config_source(name: str) -> Path:
    p = Path(name)
    return p if p.exists() else recipe_path(name)


class Run:
    """Loaded config + dataset, and the manifest being accumulated."""

    def __init__(self, command: str, config: str, overrides, out, seed, workers):
        self.command = command
        src = _config_source(config)
        extra = list(overrides)
        if seed is not None:
            extra.append(("seed", seed))
        if workers is not None:
            extra.append(("run.workers", workers))
        if out is not None:
            extra.append(("output", str(out)))
        self.cfg: RunConfig = load_config(src, extra)
        self.config_path = src
        self.dataset_path = resolve_dataset(self.cfg, src.parent)
        self.model = load_molecule(self.dataset_path)
        self.out = Path(self.cfg.output)
        self.outputs: dict[str, str] = {}
        self.stats: dict = {}
        self.t0 = time.perf_counter()

    def field(self, cfg: RunConfig | None = None) -> StandingWaveConfig:
        f = (cfg or self.cfg).field
        return StandingWaveConfig(f.E1, f.E2_value, f.lambda1, f.lambda2, f.theta_F)

    def beam(self, cfg: RunConfig | None = None) -> BeamConfig:
        cfg = cfg or self.cfg
        b = cfg.beam
        return BeamConfig(b.vz, cfg.nozzle_width, b.sigma_v, b.t_int, self.model.mass, t_free=b.t_free)

    def sup(self, cfg: RunConfig | None = None):
        s = (cfg or self.cfg).superposition
        return superposition(self.model, s.state1, s.state2, s.p1, s.theta)

    def spec(self, cfg: RunConfig | None = None) -> OpticalPotentialSpec:
        cfg = cfg or self.cfg
        field = self.field(cfg)
        return OpticalPotentialSpec(susceptibility_set(self.model, self.sup(cfg), field), field,
                                    mode=cfg.potential.mode)

    def check_resonance(self, cfg: RunConfig | None = None, sup=None) -> float:
        cfg = cfg or self.cfg
        sup = sup if sup is not None else self.sup(cfg)
        resid = abs(convert_unit(resonance_detuning(self.field(cfg), sup), "rad/s", "cm-1"))
        if resid > cfg.resonance.threshold:
            msg = (f"superposition {sup.state1.id}/{sup.state2.id} is {resid:.1f} cm-1 off the "
                   f"two-colour resonance (threshold {cfg.resonance.threshold:g} cm-1)")
            if cfg.resonance.strict:
                raise HardViolation(msg)
            click.echo(f"warning: {msg}", err=True)
        return resid

    def write(self, name: str, obj, key: str | None = None):
        self.out.mkdir(parents=True, exist_ok=True)
        for p in export_table(obj, self.out / name):
            self.outputs[p.name if key is None else f"{key}:{p.name}"] = str(p)

    def write_json(self, name: str, obj):
        self.out.mkdir(parents=True, exist_ok=True)
        p = self.out / name
        p.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
        self.outputs[name] = str(p)

    def manifest(self):
        files = {k: {"path": v, "sha256": _sha256(Path(v))} for k, v in sorted(self.outputs.items())}
        doc = {
            "manifest_version": 1,
            "tool": "ccdepo",
            "version": __version__,
            "command": self.command,
            "config": self.cfg.snapshot(),
            "config_source": str(self.config_path),
            "dataset": {"path": str(self.dataset_path), "sha256": self.model.source_hash},
            "seed": self.cfg.seed,
            "outputs": files,
            "stats": self.stats,
            "wall_time_s": round(time.perf_counter() - self.t0, 3),
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")
        click.echo(f"wrote {len(files)} files and manifest.json to {self.out}")


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"{type(o).__name__} is not JSON serialisable")


def _guarded(fn):
    """Map exceptions to exit codes."""
    @functools.wraps(fn)
    def wrapper(*a, **kw):
        try:
            return fn(*a, **kw)
        except (ConfigError, MolDataError, HardViolation) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INVALID)
        except click.exceptions.Exit:
            raise
        except Exception as exc:  # noqa: BLE001 - report, don't trace
            log.debug("runtime failure", exc_info=True)
            click.echo(f"runtime error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)
    return wrapper


def common(fn):
    fn = click.option("--workers", type=int, default=None, help="Worker processes (overrides run.workers).")(fn)
    fn = click.option("--seed", type=int, default=None, help="Master seed (overrides seed).")(fn)
    fn = click.option("--out", "-o", type=click.Path(file_okay=False), default=None,
                      help="Output directory (overrides output).")(fn)
    fn = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                      help="Override a config entry by dotted path; repeatable.")(fn)
    fn = click.argument("config")(fn)
    return fn


# ---------------------------------------------------------------- commands

@click.group()
@click.version_option(__version__, prog_name="ccdepo")
@click.option("-v", "--verbose", count=True, help="More logging (-vv for debug).")
def main(verbose):
    """Simulate molecular deposition through a coherently controlled optical lens.

    CONFIG is a YAML file or the name of a shipped recipe (fig2, fig3a ... fig4).
    """
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _potential_outputs(run: Run, cfg: RunConfig, prefix: str = ""):
    spec = run.spec(cfg)
    pc = cfg.potential
    x = np.linspace(pc.x_min, pc.x_max, pc.points)
    averaged = spec.with_mode("averaged")
    samples = sample_potential(averaged, x)
    run.write(f"{prefix}potential.csv", samples)
    ext = find_extrema(averaged, (pc.x_min, pc.x_max))
    if ext:
        run.write(f"{prefix}extrema.csv", ext)
    dx = x[1] - x[0]
    rep = {}
    for name, sig in (("V", samples.V), ("V_ni", samples.V_ni), ("V_in", samples.V_in)):
        r = periodicity_report(sig, dx)
        rep[name] = {"dominant_period_m": r.dominant_period, "beat_length_m": r.beat_length,
                     "periodicity_score": r.periodicity_score, "beat_score": r.beat_score}
    if spec.mode == "full-time-dependent":
        # one snapshot per quarter of the w1 - w2 beat period
        f = run.field(cfg)
        period = 2 * math.pi / abs(f.omega1 - f.omega2)
        from .potential import PotentialSamples
        for q in range(4):
            v_ni, v_in = potential_time_dependent(x, q * period / 4, spec)
            run.write(f"{prefix}potential_t{q}.csv", PotentialSamples(x, v_ni, v_in))
    run.write_json(f"{prefix}periodicity.json", rep)
    run.write_json(f"{prefix}susceptibility.json", spec.chi.as_dict())
    return ext, rep


@main.command()
@common
@_guarded
def potential(config, overrides, out, seed, workers):
    """Sample V_ni, V_in and V; locate extrema; report periodicity."""
    run = Run("potential", config, overrides, out, seed, workers)
    run.check_resonance()
    ext, rep = _potential_outputs(run, run.cfg)
    run.stats.update(n_extrema=len(ext))
    run.manifest()


def _deposit(run: Run, cfg: RunConfig, interference: bool, tag: str):
    h = simulate_deposition(run.model, run.sup(cfg), run.field(cfg), run.beam(cfg), cfg.run.n,
                            cfg.seed, cfg.run.bin_width, interference=interference,
                            dt=cfg.run.dt, workers=cfg.run.workers)
    peaks = peak_metrics(h, cfg.run.threshold_fraction, smooth=cfg.run.smooth)
    run.write(f"{tag}histogram.csv", h)
    if peaks:
        run.write(f"{tag}peaks.csv", peaks)
    run.stats[f"{tag}n_steps"] = h.meta["n_steps"]
    run.stats[f"{tag}dt_s"] = h.meta["dt"]
    run.stats[f"{tag}propagation_s"] = round(h.meta["wall_time"], 3)
    return h, peaks


def _summary(h, peaks, bw):
    if not peaks:
        return {"n_peaks": 0}
    narrow = min(peaks, key=lambda p: p.fwhm)
    tall = max(peaks, key=lambda p: p.height)
    span = (h.origin, h.origin + len(h.counts) * bw)
    rep = deposition_periodicity(h, span)
    return {"n_peaks": len(peaks), "narrowest_fwhm_m": narrow.fwhm, "tallest_height": tall.height,
            "tallest_position_m": tall.position, "background": tall.background,
            "periodicity_score": rep.periodicity_score}


@main.command()
@common
@click.option("--compare/--no-compare", default=None,
              help="Also deposit with the interference term removed.")
@_guarded
def deposit(config, overrides, out, seed, workers, compare):
    """Deposition histogram and peak metrics for one superposition."""
    run = Run("deposit", config, overrides, out, seed, workers)
    cfg = run.cfg
    run.check_resonance()
    compare = cfg.run.compare if compare is None else compare
    h, peaks = _deposit(run, cfg, cfg.run.interference, "")
    summary = {"main": _summary(h, peaks, cfg.run.bin_width)}
    if compare:
        hi, pi = _deposit(run, cfg, not cfg.run.interference, "reference_")
        summary["reference"] = _summary(hi, pi, cfg.run.bin_width)
        a, b = summary["main"], summary["reference"]
        if a.get("n_peaks") and b.get("n_peaks"):
            summary["fwhm_ratio"] = b["narrowest_fwhm_m"] / a["narrowest_fwhm_m"]
            summary["height_ratio"] = a["tallest_height"] / b["tallest_height"]
    run.write_json("summary.json", summary)
    run.manifest()


@main.command()
@common
@click.option("--what", type=click.Choice(["deposit", "potential"]), default="deposit",
              help="Artifact computed at each sweep value.")
@_guarded
def sweep(config, overrides, out, seed, workers, what):
    """Repeat a deposition (or potential) for each value of sweep.parameter."""
    run = Run("sweep", config, overrides, out, seed, workers)
    if run.cfg.sweep is None:
        raise ConfigError("sweep section is required", "sweep")
    param = run.cfg.sweep.parameter
    rows = []
    for i, value in enumerate(run.cfg.sweep.values):
        cfg = with_value(run.cfg, param, value)
        run.check_resonance(cfg)
        tag = f"v{i:02d}_"
        row = {"index": i, "parameter": param, "value": value}
        if what == "deposit":
            h, peaks = _deposit(run, cfg, cfg.run.interference, tag)
            row.update(_summary(h, peaks, cfg.run.bin_width))
        else:
            ext, rep = _potential_outputs(run, cfg, tag)
            row.update(n_extrema=len(ext), beat_length_m=rep["V_in"]["beat_length_m"])
        rows.append(row)
    run.write("sweep.csv", rows)
    run.manifest()


@main.command()
@common
@click.option("--compare/--no-compare", default=None,
              help="Also run the mixture without the interference term.")
@click.option("--components/--no-components", default=True,
              help="Write per-component histograms.")
@_guarded
def mixture(config, overrides, out, seed, workers, compare, components):
    """Thermal mixture of prepared superpositions deposited together."""
    run = Run("mixture", config, overrides, out, seed, workers)
    cfg = run.cfg
    mc = cfg.mixture
    pulse = PreparationPulse(mc.pulse.field_strength, mc.pulse.spectral_width)
    mix = thermal_mixture(run.model, mc.temperature, pulse, mc.cutoff)
    field, beam = run.field(), run.beam()
    run.check_resonance(sup=mix.components[0].sup)
    run.write("components.csv", mix.table())
    specs = component_specs(run.model, mix, field)
    lo, hi = -0.5 * beam.nozzle_width, 0.5 * beam.nozzle_width
    run.stats["argmin_spread_m"] = argmin_spread(specs, (lo, hi))
    run.stats["n_components"] = len(mix.components)

    compare = cfg.run.compare if compare is None else compare
    modes = [("", cfg.run.interference)] + ([("reference_", not cfg.run.interference)] if compare else [])
    summary = {}
    for tag, inter in modes:
        res = simulate_mixture_deposition(run.model, mix, field, beam, cfg.run.n, cfg.seed,
                                          cfg.run.bin_width, interference=inter, dt=cfg.run.dt,
                                          workers=cfg.run.workers)
        peaks = peak_metrics(res.histogram, cfg.run.threshold_fraction, smooth=cfg.run.smooth)
        run.write(f"{tag}histogram.csv", res.histogram)
        if peaks:
            run.write(f"{tag}peaks.csv", peaks)
        if components:
            rows = []
            for k, (comp, h) in enumerate(zip(mix.components, res.components)):
                for x, c in zip(h.centers, h.counts):
                    if c:
                        rows.append({"component": k, "J": comp.sup.state1.J, "M": comp.sup.state1.M,
                                     "x(um)": float(x) * 1e6, "count": int(c)})
            if rows:
                run.write(f"{tag}component_histograms.csv", rows)
        run.stats[f"{tag}n_steps"] = res.meta["n_steps"]
        run.stats[f"{tag}propagation_s"] = round(res.meta["wall_time"], 3)
        summary["main" if not tag else "reference"] = _summary(res.histogram, peaks, cfg.run.bin_width)
    run.write_json("summary.json", summary)
    run.manifest()


@main.command()
@click.argument("config")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
@click.option("--strict", is_flag=True, help="Treat a resonance mismatch as an error.")
def validate(config, overrides, strict):
    """Check config, dataset and resonance condition; writes nothing."""
    try:
        extra = list(overrides) + ([("resonance.strict", True)] if strict else [])
        src = _config_source(config)
        cfg = load_config(src, extra)
        path = resolve_dataset(cfg, src.parent)
        model = load_molecule(path)
    except (ConfigError, MolDataError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INVALID)

    problems = []
    report = validate_transitions(model)
    for a, b, why in report.violations:
        problems.append(f"dipole {a} - {b}: {why}")
    click.echo(f"dataset {path.name}: {len(model.states)} states, {len(model.dipoles)} dipoles, "
               f"{len(report.eligible_pairs)} interference-eligible pairs, sha256 {model.source_hash[:12]}")
    s = cfg.superposition
    try:
        sup = superposition(model, s.state1, s.state2, s.p1, s.theta)
    except (KeyError, ValueError) as exc:
        problems.append(f"superposition: {exc}")
        sup = None
    if sup is not None:
        ok, why = interference_eligibility(sup.state1, sup.state2)
        click.echo(f"superposition {sup.state1.id} / {sup.state2.id}: {why}")
        f = cfg.field
        field = StandingWaveConfig(f.E1, f.E2_value, f.lambda1, f.lambda2, f.theta_F)
        resid = abs(convert_unit(resonance_detuning(field, sup), "rad/s", "cm-1"))
        msg = f"resonance residual {resid:.2f} cm-1 (threshold {cfg.resonance.threshold:g})"
        if resid > cfg.resonance.threshold:
            if cfg.resonance.strict:
                problems.append(msg)
            else:
                click.echo(f"warning: {msg}", err=True)
        else:
            click.echo(msg)
        try:
            susceptibility_set(model, sup, field)
        except ArithmeticError as exc:
            problems.append(f"susceptibility: {exc}")
    for p in problems:
        click.echo(f"error: {p}", err=True)
    sys.exit(EXIT_INVALID if problems else EXIT_OK)


if __name__ == "__main__":
    main()
