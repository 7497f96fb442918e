"""Experiment configuration, ensemble orchestration and report files.

Configuration files are INI-style with one section per parameter type::

    [RodParams]
    mass = 1
    length = 1

    [BathParams]
    temperature = 1
    gamma_par = 1
    gamma_perp = 2
    gamma_rot = 1
    regime = classical

    [IntegratorConfig]
    mode = overdamped
    dt = 0.01
    n_steps = 2000

    [ExperimentConfig]
    n_trajectories = 5000
    seed = 1
    emit = summary, timeseries

    [sweep]
    BathParams.gamma_perp = 1, 2, 4

Every key is optional except that the resulting parameters must validate.
Unknown sections or keys are rejected.
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
import json
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import (CLASSICAL, QUANTUM, BathParams, ParameterError, RodParams, StreamBank, WrongRegime,
                   equilibrium_initial_state, rest_initial_state)
from .dynamics import INERTIAL, OVERDAMPED, IntegratorConfig, propagate, series_block_length
from .noise import SpectralDensity, quantum_kernel
from .observables import (EnsembleAccumulator, InsufficientEquilibration, NonPositiveCurve, OracleReport,
                          accumulate, equipartition_oracle, fit_exponential, fit_line, merge, moment_estimates,
                          msd_oracle, quantum_variance_oracle, saturation_estimate)

OUTPUT_ENV = "RODLANGEVIN_OUT"
EMIT_CHOICES = ("summary", "timeseries", "noise-kernel-table")
TIMESERIES_COLUMNS = ("t", "msd", "orient_corr", "du2", "p_par_sq", "p_perp_sq", "omega_sq", "energy")
SECTIONS = ("RodParams", "BathParams", "IntegratorConfig", "ExperimentConfig")
OMEGA_NOTE = ("angular-velocity target is 2 kT/I (two rotational degrees of freedom, consistent with <E> = 5/2 kT); "
              "the quoted long-time <Omega.Omega> = 12 kT/(M l^2) = kT/I is a factor 2 lower")

# memory budget (floats) for the coloured-noise blocks of one trajectory batch
_SERIES_FLOATS = 15_000_000


class ConfigError(ValueError):
    """Malformed configuration file; carries the offending field and line."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = f" (line {line})" if line else ""
        super().__init__(f"{message}{where}")


ParseError = ConfigError


class ValidationError(ConfigError):
    """Configuration parsed but the parameters violate an invariant."""


@dataclass(frozen=True)
class ExperimentConfig:
    rod: RodParams = field(default_factory=RodParams)
    bath: BathParams = field(default_factory=BathParams)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    n_trajectories: int = 100
    seed: int = 0
    initial: str = "equilibrium"
    origin_stride: int | None = None
    block_size: int = 500
    emit: tuple = ("summary",)
    output_dir: str | None = None
    sweep: tuple = ()

    def __post_init__(self):
        if self.n_trajectories < 0:
            raise ValidationError("n_trajectories must be >= 0", field="n_trajectories")
        if self.initial not in ("equilibrium", "rest"):
            raise ValidationError(f"unknown initial condition {self.initial!r}", field="initial")
        if self.block_size < 1:
            raise ValidationError("block_size must be >= 1", field="block_size")
        if self.origin_stride is not None and self.origin_stride < 1:
            raise ValidationError("origin_stride must be >= 1", field="origin_stride")
        for e in self.emit:
            if e not in EMIT_CHOICES:
                raise ValidationError(f"unknown emit flag {e!r}", field="emit")
        if self.bath.regime == QUANTUM and self.initial == "equilibrium":
            object.__setattr__(self, "initial", "rest")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {
    "RodParams": (RodParams, {f.name for f in dataclasses.fields(RodParams)}),
    "BathParams": (BathParams, {f.name for f in dataclasses.fields(BathParams)}),
    "IntegratorConfig": (IntegratorConfig, {f.name for f in dataclasses.fields(IntegratorConfig)}),
}
_EXPERIMENT_KEYS = {"n_trajectories", "seed", "initial", "origin_stride", "block_size", "emit", "output_dir"}
_INT_KEYS = {"n_steps", "record_stride", "n_trajectories", "seed", "origin_stride", "block_size"}
_STR_KEYS = {"regime", "cutoff_shape", "mode", "position_scheme", "initial", "output_dir"}


def _line_of(text, section, key=None):
    current = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"\[(.+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if current == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", line, re.I):
            return i
    return None


def _convert(key, raw, text, section):
    raw = raw.strip()
    if key in _STR_KEYS:
        return None if raw.lower() in ("", "none") else raw
    if raw.lower() in ("", "none"):
        return None
    try:
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {section}.{key} = {raw!r}", field=key,
                          line=_line_of(text, section, key)) from None


def _sweep_values(raw):
    return tuple(float(x) if re.search(r"[.eE]", x) else int(x) for x in (s.strip() for s in raw.split(",")) if x)


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc.message.splitlines()[0]}",
                          line=getattr(exc, "lineno", None)) from None
    parts = {}
    exp = {}
    sweep = []
    for section in cp.sections():
        if section == "sweep":
            for key, raw in cp[section].items():
                if "." not in key or key.split(".", 1)[0] not in _FIELDS:
                    raise ConfigError(f"sweep key {key!r} must be <Section>.<field>", field=key,
                                      line=_line_of(text, section, key))
                sec, name = key.split(".", 1)
                if name not in _FIELDS[sec][1]:
                    raise ConfigError(f"unknown sweep field {key!r}", field=key, line=_line_of(text, section, key))
                try:
                    sweep.append((key, _sweep_values(raw)))
                except ValueError:
                    raise ConfigError(f"cannot parse sweep values for {key!r}", field=key,
                                      line=_line_of(text, section, key)) from None
            continue
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", field=section, line=_line_of(text, section))
        allowed = _EXPERIMENT_KEYS if section == "ExperimentConfig" else _FIELDS[section][1]
        values = {}
        for key, raw in cp[section].items():
            if key not in allowed:
                raise ConfigError(f"unknown key {section}.{key}", field=key, line=_line_of(text, section, key))
            if key == "emit":
                values[key] = tuple(e.strip() for e in raw.split(",") if e.strip())
            else:
                values[key] = _convert(key, raw, text, section)
        if section == "ExperimentConfig":
            exp = values
        else:
            parts[section] = values
    try:
        rod = RodParams(**parts.get("RodParams", {}))
        bath = BathParams(**{k: v for k, v in parts.get("BathParams", {}).items() if v is not None or k == "cutoff"})
        integ = IntegratorConfig(**{k: v for k, v in parts.get("IntegratorConfig", {}).items() if v is not None})
    except ParameterError as exc:
        name = getattr(exc, "field", None)
        raise ValidationError(str(exc), field=name) from exc
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    exp = {k: v for k, v in exp.items() if v is not None or k in ("origin_stride", "output_dir")}
    return ExperimentConfig(rod=rod, bath=bath, integrator=integ, sweep=tuple(sweep), **exp)


def load_config(path) -> ExperimentConfig:
    """Read and validate a configuration file."""
    return parse_config(Path(path).read_text())


def _fmt(v):
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def dump_config(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for section, obj in (("RodParams", cfg.rod), ("BathParams", cfg.bath), ("IntegratorConfig", cfg.integrator)):
        cp[section] = {f.name: _fmt(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    cp["ExperimentConfig"] = {k: _fmt(getattr(cfg, k)) for k in sorted(_EXPERIMENT_KEYS)}
    if cfg.sweep:
        cp["sweep"] = {k: _fmt(tuple(v)) for k, v in cfg.sweep}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(dump_config(cfg))


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()[:16]


# ---------------------------------------------------------------- running


def _effective_block(cfg: ExperimentConfig) -> int:
    if cfg.bath.regime != QUANTUM:
        return cfg.block_size
    n = series_block_length(cfg.rod, cfg.bath, cfg.integrator.dt, cfg.integrator.n_steps)
    return max(1, min(cfg.block_size, _SERIES_FLOATS // (6 * n)))


def _record_times(cfg):
    integ = cfg.integrator
    n_rec = integ.n_steps // integ.record_stride + 1
    return integ.dt * integ.record_stride * np.arange(n_rec)


def _run_block(args):
    cfg, start, stop = args
    bank = StreamBank.from_seed(cfg.seed, range(start, stop))
    if cfg.initial == "equilibrium" and cfg.bath.regime == CLASSICAL:
        state = equilibrium_initial_state(cfg.rod, cfg.bath, bank)
    else:
        state = rest_initial_state(bank)
    traj = propagate(state, cfg.rod, cfg.bath, cfg.integrator, bank)
    return accumulate(EnsembleAccumulator(traj.times, cfg.origin_stride), traj)


def simulate(cfg: ExperimentConfig, jobs: int | None = None) -> EnsembleAccumulator:
    """Propagate the ensemble in fixed trajectory blocks and merge in block order.

    Block boundaries depend only on the configuration, so the merged sums
    are identical for any number of worker processes.
    """
    cfg.integrator.check(cfg.rod, cfg.bath)
    acc = EnsembleAccumulator(_record_times(cfg), cfg.origin_stride)
    if cfg.n_trajectories == 0:
        return acc
    size = _effective_block(cfg)
    blocks = [(cfg, s, min(s + size, cfg.n_trajectories)) for s in range(0, cfg.n_trajectories, size)]
    jobs = jobs or 1
    if jobs > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_block, blocks))
    else:
        parts = [_run_block(b) for b in blocks]
    for part in parts:
        acc = merge(acc, part)
    return acc


def evaluate_checks(acc: EnsembleAccumulator, cfg: ExperimentConfig) -> list[OracleReport]:
    """Every oracle comparison that applies to the run's regime and mode."""
    if acc.n_traj == 0:
        return []
    rod, bath, mode = cfg.rod, cfg.bath, cfg.integrator.mode
    lags = acc.times - acc.times[0]
    reports = []
    if bath.regime == CLASSICAL and mode == OVERDAMPED:
        slope, _ = fit_line(lags, acc.mean("msd"), sigma=acc.stderr("msd"))
        reports.append(OracleReport("msd_slope", slope, float(msd_oracle(1.0, bath)), 0.05))
        try:
            rate, _, _ = fit_exponential(lags, acc.mean("orient_corr"), sigma=acc.stderr("orient_corr"))
            reports.append(OracleReport("orientation_decay_rate", rate, 2.0 * bath.rotational_diffusion, 0.05))
        except NonPositiveCurve:
            pass
        sat = saturation_estimate(acc, bath)
        if sat is not None:
            reports.append(OracleReport("du2_saturation", sat, 2.0, 0.03))
    elif bath.regime == CLASSICAL:
        try:
            m = moment_estimates(acc, rod, bath)
        except InsufficientEquilibration:
            return reports
        p_par, p_perp, omega_sq, energy = equipartition_oracle(rod, bath)
        kT, mass, inertia = bath.kT, rod.mass, rod.moment_of_inertia
        reports += [
            OracleReport("p_par_sq_over_MkT", m["p_par_sq"] / (mass * kT), p_par / (mass * kT), 0.03),
            OracleReport("p_perp_sq_over_MkT", m["p_perp_sq"] / (mass * kT), p_perp / (mass * kT), 0.03),
            OracleReport("I_omega_sq_over_kT", inertia * m["omega_sq"] / kT, inertia * omega_sq / kT, 0.03,
                         note=OMEGA_NOTE),
            OracleReport("mean_energy_over_kT", m["energy"] / kT, energy / kT, 0.05),
        ]
    else:
        try:
            m = moment_estimates(acc, rod, bath)
        except InsufficientEquilibration:
            return reports
        reports += [
            OracleReport("quantum_p_par_sq", m["p_par_sq"], quantum_variance_oracle(rod, bath, axis="par"), 0.05),
            OracleReport("quantum_p_perp_sq_per_component", m["p_perp_sq"] / 2.0,
                         quantum_variance_oracle(rod, bath, axis="perp"), 0.05),
        ]
    return reports


@dataclass
class RunResult:
    config: ExperimentConfig
    accumulator: EnsembleAccumulator
    reports: list
    files: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def summary(self) -> dict:
        return {
            "version": __version__,
            "config_hash": config_hash(self.config),
            "seed": self.config.seed,
            "n_trajectories": self.accumulator.n_traj,
            "regime": self.config.bath.regime,
            "mode": self.config.integrator.mode,
            "checks": [r.as_dict() for r in self.reports],
            "pass": self.passed,
        }


def _provenance(cfg):
    return [f"# rodlangevin {__version__}", f"# config_hash {config_hash(cfg)}", f"# seed {cfg.seed}"]


def write_timeseries(acc: EnsembleAccumulator, cfg: ExperimentConfig, path) -> None:
    lines = _provenance(cfg) + [",".join(TIMESERIES_COLUMNS)]
    cols = [acc.times] + [acc.mean(k) for k in TIMESERIES_COLUMNS[1:]]
    for row in zip(*cols):
        lines.append(",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def emit_kernel_table(bath: BathParams, tau_grid, path=None, gamma: float | None = None) -> np.ndarray:
    """Tabulate the per-component quantum kernel ``C(tau)``.

    Returns an ``(n, 2)`` array of ``(tau, C)`` rows and writes it as CSV
    when ``path`` is given.
    """
    if bath.regime != QUANTUM:
        raise WrongRegime("the kernel table is defined for the quantum regime")
    sd = SpectralDensity.from_bath(bath, gamma)
    taus = np.asarray(tau_grid, dtype=float)
    table = np.column_stack([taus, np.atleast_1d(quantum_kernel(taus, sd))])
    if path is not None:
        lines = [f"# rodlangevin {__version__}", "tau,C"]
        lines += [f"{t!r},{c!r}" for t, c in table.tolist()]
        Path(path).write_text("\n".join(lines) + "\n")
    return table


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "rodlangevin-out"))


def sweep_points(cfg: ExperimentConfig) -> list[ExperimentConfig]:
    """Expand the sweep axes (Cartesian product); point ``i`` runs with ``seed + i``."""
    if not cfg.sweep:
        return [cfg]
    grids = np.meshgrid(*[np.arange(len(v)) for _, v in cfg.sweep], indexing="ij")
    points = []
    for i, combo in enumerate(zip(*(g.ravel() for g in grids))):
        sub = {"RodParams": {}, "BathParams": {}, "IntegratorConfig": {}}
        for (key, values), j in zip(cfg.sweep, combo):
            sec, name = key.split(".", 1)
            sub[sec][name] = values[j]
        try:
            point = cfg.replace(
                rod=dataclasses.replace(cfg.rod, **sub["RodParams"]),
                bath=dataclasses.replace(cfg.bath, **sub["BathParams"]),
                integrator=dataclasses.replace(cfg.integrator, **sub["IntegratorConfig"]),
                seed=cfg.seed + i, sweep=())
        except ParameterError as exc:
            raise ValidationError(str(exc), field=getattr(exc, "field", None)) from exc
        points.append(point)
    return points


def run_single(cfg: ExperimentConfig, out_dir=None, jobs: int | None = None) -> RunResult:
    acc = simulate(cfg, jobs)
    reports = evaluate_checks(acc, cfg)
    result = RunResult(cfg, acc, reports, [])
    if out_dir is None:
        return result
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    # the summary carries the pass/fail contract, so it is written regardless of emit flags
    path = out / "summary.json"
    path.write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n")
    result.files.append(path)
    if acc.n_traj == 0:
        return result
    if "timeseries" in cfg.emit:
        path = out / "timeseries.csv"
        write_timeseries(acc, cfg, path)
        result.files.append(path)
    if "noise-kernel-table" in cfg.emit and cfg.bath.regime == QUANTUM:
        path = out / "kernel_table.csv"
        tau_max = 10.0 / cfg.bath.cutoff
        emit_kernel_table(cfg.bath, np.linspace(0.0, tau_max, 201), path)
        result.files.append(path)
    return result


def run_experiment(cfg: ExperimentConfig, out_dir=None, jobs: int | None = None) -> list[RunResult]:
    """Run every sweep point; outputs go to ``out_dir`` (``point_XXX`` subfolders for sweeps)."""
    points = sweep_points(cfg)
    if len(points) == 1:
        return [run_single(points[0], out_dir, jobs)]
    results = []
    for i, point in enumerate(points):
        sub = None if out_dir is None else Path(out_dir) / f"point_{i:03d}"
        results.append(run_single(point, sub, jobs))
    return results


__all__ = [
    "ConfigError", "ParseError", "ValidationError", "ExperimentConfig", "RunResult", "load_config",
    "parse_config", "save_config", "dump_config", "run_experiment", "run_single", "simulate",
    "evaluate_checks", "emit_kernel_table", "write_timeseries", "sweep_points", "INERTIAL", "OVERDAMPED",
]
