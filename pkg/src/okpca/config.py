"""Experiment configuration: INI files, named presets and the config echo.

Configs are flat ``key = value`` INI files with sections. Every output file
starts with the fully resolved config as ``# ``-prefixed lines, and
:func:`load_config` accepts such a file directly, so any run can be repeated
from its own output.
"""

from __future__ import annotations

import configparser
import enum
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from okpca.errors import ConfigError
from okpca.simulators import (
    MAJOR_FAULT_GAINS,
    MINOR_FAULT_GAINS,
    NOMINAL_GAINS,
    InitialKind,
    PidGains,
    QuadrotorParams,
    SimConfig,
)
from okpca.trajectory import QuadratureRule

PRESETS = ("exp1", "exp1-noisy", "exp2-major", "exp2-minor", "table2-sweep")


class SystemKind(str, enum.Enum):
    ACADEMIC = "academic"
    QUADROTOR_MAJOR = "quadrotor-major"
    QUADROTOR_MINOR = "quadrotor-minor"

    @property
    def is_quadrotor(self) -> bool:
        return self is not SystemKind.ACADEMIC


@dataclass(frozen=True)
class KpcaConfig:
    mu: float = 5.0
    N: int = 20
    p_max: int = 2000
    threshold_multiplier: float = 2.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Every tunable of a batch of detection trials."""

    name: str = "custom"
    system: SystemKind = SystemKind.ACADEMIC
    M: int = 100
    num_test_normal: int = 20
    num_test_faulty: int = 20
    mu: float = 0.6
    N: int = 20
    threshold_multiplier: float = 2.0
    noise_sigma: float = 0.0
    trials: int = 100
    seed: int = 0
    quadrature: QuadratureRule = QuadratureRule.TRAPEZOID
    sim: SimConfig = SimConfig(dt_sample=0.01, duration=2.0)
    initial: InitialKind = InitialKind.UNIT_CIRCLE
    box_side: float = 2.0
    kpca: KpcaConfig = KpcaConfig()
    sweep_M: tuple[int, ...] = ()
    quadrotor: QuadrotorParams = QuadrotorParams()
    nominal_gains: PidGains = NOMINAL_GAINS
    fault_gains: PidGains = MAJOR_FAULT_GAINS

    def __post_init__(self) -> None:
        for key in ("M", "num_test_normal", "num_test_faulty", "N", "trials"):
            value = getattr(self, key)
            minimum = 0 if key.startswith("num_test") else 1
            if value < minimum:
                raise ConfigError(f"{key} must be >= {minimum}, got {value}")
        if self.M < 2:
            raise ConfigError(f"M must be >= 2, got {self.M}")
        if self.num_test_normal + self.num_test_faulty < 1:
            raise ConfigError("at least one test trajectory is required")
        if not self.mu > 0:
            raise ConfigError(f"mu must be positive, got {self.mu}")
        if not self.threshold_multiplier > 0:
            raise ConfigError("threshold_multiplier must be positive")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be nonnegative")
        if any(m < 2 for m in self.sweep_M):
            raise ConfigError("sweep M values must all be >= 2")

    def with_overrides(self, **changes) -> "ExperimentConfig":
        sim = self.sim
        if "noise_sigma" in changes or "seed" in changes:
            sim = replace(
                sim,
                noise_sigma=changes.get("noise_sigma", self.noise_sigma),
                seed=changes.get("seed", self.seed),
            )
        return replace(self, sim=sim, **changes)


def _gains_text(g: PidGains) -> str:
    return f"{g.kp:g}, {g.ki:g}, {g.kd:g}"


def to_ini(cfg: ExperimentConfig) -> str:
    """Render ``cfg`` as INI text that :func:`parse_config` reads back exactly."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser["experiment"] = {
        "name": cfg.name,
        "system": cfg.system.value,
        "M": str(cfg.M),
        "num_test_normal": str(cfg.num_test_normal),
        "num_test_faulty": str(cfg.num_test_faulty),
        "mu": repr(cfg.mu),
        "N": str(cfg.N),
        "threshold_multiplier": repr(cfg.threshold_multiplier),
        "noise_sigma": repr(cfg.noise_sigma),
        "trials": str(cfg.trials),
        "seed": str(cfg.seed),
        "quadrature": cfg.quadrature.value,
    }
    parser["simulation"] = {
        "dt_sample": repr(cfg.sim.dt_sample),
        "duration": repr(cfg.sim.duration),
        "integrator_substeps": str(cfg.sim.integrator_substeps),
    }
    parser["initial"] = {"kind": cfg.initial.value, "side": repr(cfg.box_side)}
    parser["kpca"] = {f.name: repr(getattr(cfg.kpca, f.name)) for f in fields(KpcaConfig)}
    if cfg.sweep_M:
        parser["sweep"] = {"M": ", ".join(str(m) for m in cfg.sweep_M)}
    if cfg.system.is_quadrotor:
        section = {f.name: repr(getattr(cfg.quadrotor, f.name)) for f in fields(QuadrotorParams)}
        section["nominal_gains"] = _gains_text(cfg.nominal_gains)
        section["fault_gains"] = _gains_text(cfg.fault_gains)
        parser["quadrotor"] = section
    lines = []
    for name, section in parser.items():
        if name == "DEFAULT":
            continue
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {v}" for k, v in section.items())
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, source: str):
        self.parser = parser
        self.source = source

    def get(self, section: str, key: str, convert, default):
        if not self.parser.has_option(section, key):
            return default
        raw = self.parser.get(section, key)
        try:
            return convert(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{self.source}: [{section}] {key} = {raw!r}: {exc}") from exc


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(",", " ").split())


def _gains(text: str) -> PidGains:
    parts = [float(v) for v in text.replace(",", " ").split()]
    if len(parts) != 3:
        raise ValueError("expected three gains: kp, ki, kd")
    return PidGains(*parts)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse INI text into an :class:`ExperimentConfig`.

    Missing keys take the defaults of a custom academic experiment; a
    ``system`` of ``quadrotor-minor`` switches the default fault gains.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    known = {"experiment", "simulation", "initial", "kpca", "sweep", "quadrotor"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"{source}: unknown section(s) {sorted(unknown)}")
    r = _Reader(parser, source)
    base = ExperimentConfig()
    system = r.get("experiment", "system", SystemKind, base.system)
    fault_default = MINOR_FAULT_GAINS if system is SystemKind.QUADROTOR_MINOR else MAJOR_FAULT_GAINS
    seed = r.get("experiment", "seed", int, base.seed)
    noise = r.get("experiment", "noise_sigma", float, base.noise_sigma)
    try:
        sim = SimConfig(
            dt_sample=r.get("simulation", "dt_sample", float, base.sim.dt_sample),
            duration=r.get("simulation", "duration", float, base.sim.duration),
            integrator_substeps=r.get(
                "simulation", "integrator_substeps", int, base.sim.integrator_substeps
            ),
            noise_sigma=noise,
            seed=seed,
        )
        sim.num_intervals
        quad = QuadrotorParams(
            **{
                f.name: r.get("quadrotor", f.name, float, getattr(QuadrotorParams(), f.name))
                for f in fields(QuadrotorParams)
            }
        )
        kpca = KpcaConfig(
            mu=r.get("kpca", "mu", float, base.kpca.mu),
            N=r.get("kpca", "N", int, base.kpca.N),
            p_max=r.get("kpca", "p_max", int, base.kpca.p_max),
            threshold_multiplier=r.get(
                "kpca", "threshold_multiplier", float, base.kpca.threshold_multiplier
            ),
        )
        return ExperimentConfig(
            name=r.get("experiment", "name", str, base.name),
            system=system,
            M=r.get("experiment", "M", int, base.M),
            num_test_normal=r.get("experiment", "num_test_normal", int, base.num_test_normal),
            num_test_faulty=r.get("experiment", "num_test_faulty", int, base.num_test_faulty),
            mu=r.get("experiment", "mu", float, base.mu),
            N=r.get("experiment", "N", int, base.N),
            threshold_multiplier=r.get(
                "experiment", "threshold_multiplier", float, base.threshold_multiplier
            ),
            noise_sigma=noise,
            trials=r.get("experiment", "trials", int, base.trials),
            seed=seed,
            quadrature=r.get("experiment", "quadrature", QuadratureRule, base.quadrature),
            sim=sim,
            initial=r.get("initial", "kind", InitialKind, base.initial),
            box_side=r.get("initial", "side", float, base.box_side),
            kpca=kpca,
            sweep_M=r.get("sweep", "M", _int_list, ()),
            quadrotor=quad,
            nominal_gains=r.get("quadrotor", "nominal_gains", _gains, NOMINAL_GAINS),
            fault_gains=r.get("quadrotor", "fault_gains", _gains, fault_default),
        )
    except ConfigError as exc:
        if str(exc).startswith(source):
            raise
        raise ConfigError(f"{source}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    """Read a config file, or the config echo at the top of an output file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    if text.startswith("#"):
        echoed = []
        for line in text.splitlines():
            if not line.startswith("#"):
                break
            echoed.append(line[2:] if line.startswith("# ") else line[1:])
        text = "\n".join(echoed)
    return parse_config(text, source=str(path))


def load_preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("okpca.presets").joinpath(f"{name}.ini").read_text()
    return parse_config(text, source=f"preset:{name}")


def header_lines(cfg: ExperimentConfig, extra: dict | None = None) -> list[str]:
    """Config echo for output files, optionally preceded by run metadata."""
    lines = [f"{k}: {v}" for k, v in (extra or {}).items()]
    if lines:
        # keep metadata outside any INI section so the echo still parses
        lines = [";" + line for line in lines]
    return lines + to_ini(cfg).splitlines()
