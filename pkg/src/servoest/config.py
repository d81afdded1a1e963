"""Scenario configuration: YAML parsing, defaults, and validation.

All quantities are base SI (meters, seconds, newtons); frequencies in Hz.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .model import SpecimenParams, TransferSystemParams
from .plants import SIGMA_D_SQ, NoiseLevel
from .signals import TimeSeries, chirp, sinusoid

__all__ = ["ConfigError", "InputConfig", "PfConfig", "KfConfig",
           "PlantConfig", "RunConfig", "ScenarioConfig", "parse_config",
           "default_sigma_p"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


def default_sigma_p(level: NoiseLevel) -> float:
    """Process-noise displacement std for a noise level.

    Defined through exact variance ratios against the assumed measurement
    variance: sigma_d^2 / sigma_p^2 = 400 at the low/medium levels and
    1000 at the high level.
    """
    ratio = 1000.0 if level is NoiseLevel.L3 else 400.0
    return math.sqrt(SIGMA_D_SQ / ratio)


@dataclass(frozen=True)
class InputConfig:
    """Command signal: a swept-sine ("chirp") or fixed sinusoid."""

    kind: str = "chirp"
    f0: float = 0.1
    f1: float = 20.0
    f: float = 1.0
    amplitude: float = 23.4e-3
    duration: float = 30.0
    fs: float = 1024.0

    def __post_init__(self):
        if self.kind not in ("chirp", "sinusoid"):
            raise ConfigError(f"input.kind must be 'chirp' or 'sinusoid', "
                              f"got {self.kind!r}")
        for name in ("f0", "f1", "f", "fs", "duration"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"input.{name} must be > 0")
        if self.amplitude <= 0:
            raise ConfigError("input.amplitude must be > 0")

    def series(self) -> TimeSeries:
        if self.kind == "chirp":
            return chirp(f0=self.f0, f1=self.f1, duration=self.duration,
                         fs=self.fs, amplitude=self.amplitude)
        return sinusoid(f=self.f, duration=self.duration, fs=self.fs,
                        amplitude=self.amplitude)


@dataclass(frozen=True)
class PfConfig:
    particles: tuple[int, ...] = (100, 200, 500)
    sigma_p: float | None = None  # derived from the noise level when None
    omega_ref: float = 2.0 * np.pi * 20.0

    def __post_init__(self):
        object.__setattr__(self, "particles",
                           tuple(int(n) for n in self.particles))
        if len(self.particles) < 1 or any(n < 1 for n in self.particles):
            raise ConfigError("pf.particles must be >= 1")
        if self.sigma_p is not None and not self.sigma_p > 0:
            raise ConfigError("pf.sigma_p must be > 0")
        if not self.omega_ref > 0:
            raise ConfigError("pf.omega_ref must be > 0")


@dataclass(frozen=True)
class KfConfig:
    q_over_r: float = 0.01

    def __post_init__(self):
        if not self.q_over_r > 0:
            raise ConfigError("kf.q_over_r must be > 0")


@dataclass(frozen=True)
class PlantConfig:
    """Physical parameters of the actuator/specimen plant."""

    m: float = 3.8
    c: float = 10.0
    k: float = 1500.0
    kn_actual: float = 800.0
    kn_nominal: float = 1100.0
    lam: float = 250.0
    beta1: float = 267.0
    a1beta1: float = 2.412e9
    a2: float = 7.881e5
    a3: float = 16.118
    b: float | None = None  # defaults to a1beta1 / m (unit DC gain)

    def __post_init__(self):
        for name in ("m", "c", "k", "lam", "beta1", "a1beta1", "a2", "a3"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"plant.{name} must be > 0")
        if self.kn_actual < 0 or self.kn_nominal < 0:
            raise ConfigError("plant.kn_actual/kn_nominal must be >= 0")
        if self.b is None:
            object.__setattr__(self, "b", self.a1beta1 / self.m)
        elif not self.b > 0:
            raise ConfigError("plant.b must be > 0")

    def specimen_actual(self) -> SpecimenParams:
        return SpecimenParams(m=self.m, c=self.c, k=self.k,
                              k_n=self.kn_actual, lam=self.lam)

    def specimen_nominal(self) -> SpecimenParams:
        return SpecimenParams(m=self.m, c=self.c, k=self.k,
                              k_n=self.kn_nominal, lam=self.lam)

    def transfer(self) -> TransferSystemParams:
        return TransferSystemParams(beta1=self.beta1, a1beta1=self.a1beta1,
                                    a2=self.a2, a3=self.a3, b=self.b)


@dataclass(frozen=True)
class RunConfig:
    realizations: int = 20
    base_seed: int = 12345

    def __post_init__(self):
        if self.realizations < 1:
            raise ConfigError("run.realizations must be >= 1")
        if not 0 <= self.base_seed < 2 ** 64:
            raise ConfigError("run.base_seed must be a u64")


@dataclass(frozen=True)
class ScenarioConfig:
    input: InputConfig = field(default_factory=InputConfig)
    noise_level: NoiseLevel = NoiseLevel.L2
    estimators: tuple[str, ...] = ("kf", "pf")
    pf: PfConfig = field(default_factory=PfConfig)
    kf: KfConfig = field(default_factory=KfConfig)
    plant: PlantConfig = field(default_factory=PlantConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def __post_init__(self):
        est = tuple(e.lower() for e in self.estimators)
        object.__setattr__(self, "estimators", est)
        if len(est) != len(set(est)):
            raise ConfigError("estimators must not repeat")
        for e in est:
            if e not in ("kf", "pf"):
                raise ConfigError(f"estimators entries must be 'kf' or "
                                  f"'pf', got {e!r}")

    @property
    def sigma_p(self) -> float:
        return (self.pf.sigma_p if self.pf.sigma_p is not None
                else default_sigma_p(self.noise_level))

    def to_dict(self) -> dict:
        """Fully resolved, JSON/YAML-serializable echo of the config."""
        return {
            "input": {"kind": self.input.kind, "f0": self.input.f0,
                      "f1": self.input.f1, "f": self.input.f,
                      "amplitude": self.input.amplitude,
                      "duration": self.input.duration, "fs": self.input.fs},
            "noise": {"level": self.noise_level.name},
            "estimators": list(self.estimators),
            "pf": {"particles": list(self.pf.particles),
                   "sigma_p": self.sigma_p,
                   "omega_ref": self.pf.omega_ref},
            "kf": {"q_over_r": self.kf.q_over_r},
            "plant": {"m": self.plant.m, "c": self.plant.c,
                      "k": self.plant.k, "kn_actual": self.plant.kn_actual,
                      "kn_nominal": self.plant.kn_nominal,
                      "lambda": self.plant.lam, "beta1": self.plant.beta1,
                      "a1beta1": self.plant.a1beta1, "a2": self.plant.a2,
                      "a3": self.plant.a3, "b": self.plant.b},
            "run": {"realizations": self.run.realizations,
                    "base_seed": self.run.base_seed},
        }


_SECTION_KEYS = {
    "input": ("kind", "f0", "f1", "f", "amplitude", "duration", "fs"),
    "noise": ("level",),
    "pf": ("particles", "sigma_p", "omega_ref"),
    "kf": ("q_over_r",),
    "plant": ("m", "c", "k", "kn_actual", "kn_nominal", "lambda", "beta1",
              "a1beta1", "a2", "a3", "b"),
    "run": ("realizations", "base_seed"),
}
_FLOAT_FIELDS = {"f0", "f1", "f", "amplitude", "duration", "fs", "sigma_p",
                 "omega_ref", "q_over_r", "m", "c", "k", "kn_actual",
                 "kn_nominal", "lambda", "beta1", "a1beta1", "a2", "a3", "b"}
_INT_FIELDS = {"realizations", "base_seed"}


def _check_section(name: str, mapping, allowed) -> dict:
    if mapping is None:
        return {}
    if not isinstance(mapping, dict):
        raise ConfigError(f"{name} must be a mapping")
    out = {}
    for key, value in mapping.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {name}.{key}")
        if value is None:
            continue
        if key in _FLOAT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{name}.{key} must be a number")
            value = float(value)
        elif key in _INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{name}.{key} must be an integer")
        out[key] = value
    return out


def parse_config(document) -> ScenarioConfig:
    """Parse a YAML document (text, mapping, or None) into a config.

    Missing keys take their defaults; unknown keys are rejected with the
    dotted key name in the error message.
    """
    if document is None or (isinstance(document, str) and not document.strip()):
        raw = {}
    elif isinstance(document, str):
        raw = yaml.safe_load(document)
        if raw is None:
            raw = {}
    else:
        raw = document
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a mapping")
    for key in raw:
        if key not in (*_SECTION_KEYS, "estimators"):
            raise ConfigError(f"unknown key {key}")

    sections = {name: _check_section(name, raw.get(name), keys)
                for name, keys in _SECTION_KEYS.items()}

    level_name = sections["noise"].get("level", "L2")
    if isinstance(level_name, str) and level_name.upper() in NoiseLevel.__members__:
        level = NoiseLevel[level_name.upper()]
    else:
        raise ConfigError(f"noise.level must be one of L1/L2/L3, "
                          f"got {level_name!r}")

    estimators = raw.get("estimators", ("kf", "pf"))
    if isinstance(estimators, str):
        estimators = [estimators]
    if not isinstance(estimators, (list, tuple)) or not all(
            isinstance(e, str) for e in estimators):
        raise ConfigError("estimators must be a list of names")

    pf_kw = dict(sections["pf"])
    particles = pf_kw.get("particles")
    if particles is not None:
        if isinstance(particles, (int, float)) and not isinstance(particles, bool):
            particles = [particles]
        if not isinstance(particles, (list, tuple)) or not all(
                isinstance(n, int) and not isinstance(n, bool)
                for n in particles):
            raise ConfigError("pf.particles must be an integer list")
        pf_kw["particles"] = tuple(particles)

    plant_kw = dict(sections["plant"])
    if "lambda" in plant_kw:
        plant_kw["lam"] = plant_kw.pop("lambda")

    return ScenarioConfig(
        input=InputConfig(**sections["input"]),
        noise_level=level,
        estimators=tuple(estimators),
        pf=PfConfig(**pf_kw),
        kf=KfConfig(**sections["kf"]),
        plant=PlantConfig(**plant_kw),
        run=RunConfig(**sections["run"]),
    )
