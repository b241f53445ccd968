"""Scenario files: YAML with unit-suffixed fields, validated with pydantic.

A file holds a global ``seed`` and a list of ``scenarios``. Each scenario is
either spelled out or pulls a built-in preset (``preset: <name>``) and may
override any of its fields. Units are converted to SI here and nowhere else.
"""
from __future__ import annotations

import copy
import math
from typing import Annotated, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .blockage import BlockageModel
from .errors import ConfigError
from .oned import NetworkParams1D, thermal_noise_w
from .pathloss import PathLossSpec
from .twod import NetworkParams2D

__all__ = ["PRESETS", "Scenario", "RunConfig", "load_config", "parse_config", "preset_yaml"]

CurveKind = Literal["analytic", "iba", "lower_bound", "upper_bound", "simulated"]
Metric = Literal["coverage", "assoc_los", "serving_tail_los", "rate_coverage"]
Axis = Literal["threshold_db", "mu_per_m", "l_max_m", "r_m", "rho_mbps"]

# metric -> allowed sweep axes, per dimension
_AXES = {
    1: {"coverage": ("threshold_db", "mu_per_m"), "assoc_los": ("mu_per_m",)},
    2: {
        "coverage": ("threshold_db",),
        "assoc_los": ("l_max_m",),
        "serving_tail_los": ("r_m",),
        "rate_coverage": ("rho_mbps",),
    },
}
_BOUNDS = ("lower_bound", "upper_bound")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PathLossCfg(_Strict):
    model: Literal["bplp", "lap"] = "bplp"
    alpha_los: float = Field(2.2, gt=0)
    alpha_nlos: float = Field(3.6, gt=0)
    gain_los: float = Field(1e-6, gt=0)
    gain_nlos: float = Field(1e-7, gt=0)

    def build(self) -> PathLossSpec:
        if self.model == "lap":
            return PathLossSpec.lap(self.alpha_los, self.gain_los)
        return PathLossSpec.bplp(self.alpha_los, self.alpha_nlos, self.gain_los, self.gain_nlos)


class Params1DCfg(_Strict):
    lambda_per_km: float = Field(gt=0)
    mu_per_m: float = Field(ge=0)
    pathloss: PathLossCfg = PathLossCfg()
    noise_dbm_per_hz: float = -174.0
    bandwidth_hz: float = Field(1e9, gt=0)
    user_density_per_km: float = Field(0.0, ge=0)

    def build(self, **over) -> NetworkParams1D:
        mu = over.get("mu_per_m", self.mu_per_m)
        return NetworkParams1D(
            lam=self.lambda_per_km / 1e3,
            mu=mu,
            pathloss=self.pathloss.build(),
            noise_power=thermal_noise_w(self.bandwidth_hz, self.noise_dbm_per_hz),
            bandwidth=self.bandwidth_hz,
            user_density=self.user_density_per_km / 1e3,
        )


class Params2DCfg(_Strict):
    lambda_per_km2: float = Field(gt=0)
    beta_per_m: float = Field(ge=0)
    l_max_m: float = Field(200.0, gt=0)
    pathloss: PathLossCfg = PathLossCfg()
    noise_dbm_per_hz: float = -174.0
    bandwidth_hz: float = Field(1e9, gt=0)
    user_density_per_km2: float = Field(0.0, ge=0)

    def build(self, **over) -> NetworkParams2D:
        l_max = over.get("l_max_m", self.l_max_m)
        return NetworkParams2D(
            lam=self.lambda_per_km2 / 1e6,
            blockage=BlockageModel.from_beta(self.beta_per_m, l_max),
            pathloss=self.pathloss.build(),
            noise_power=thermal_noise_w(self.bandwidth_hz, self.noise_dbm_per_hz),
            bandwidth=self.bandwidth_hz,
            user_density=self.user_density_per_km2 / 1e6,
        )


class Sweep(_Strict):
    axis: Axis
    values: Optional[list[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    num: Optional[int] = Field(None, ge=1)
    spacing: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def _grid(self):
        if self.values is None:
            if None in (self.start, self.stop, self.num):
                raise ValueError("give either values or start/stop/num")
            if self.spacing == "log":
                if self.start <= 0 or self.stop <= 0:
                    raise ValueError("log spacing needs positive start and stop")
                grid = np.geomspace(self.start, self.stop, self.num)
            else:
                grid = np.linspace(self.start, self.stop, self.num)
            self.values = [float(v) for v in grid]
        if not self.values:
            raise ValueError("sweep grid is empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        if any(not math.isfinite(v) for v in self.values):
            raise ValueError("sweep grid must be finite")
        return self


class _ScenarioBase(_Strict):
    name: str = Field(pattern=r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")
    metric: Metric
    sweep: Sweep
    outputs: list[CurveKind] = Field(min_length=1)
    threshold_db: Optional[float] = None
    rate_mode: Literal["EqualAll", "LoSOnly"] = "EqualAll"
    n_scenes: int = Field(10_000, ge=1)
    seed: Optional[int] = Field(None, ge=0, lt=2**64)
    # verify-only settings
    tolerance: float = Field(0.02, ge=0)
    sigma: Optional[float] = Field(None, gt=0)
    iba_above_max_x: Optional[float] = None
    description: str = ""

    @field_validator("outputs")
    @classmethod
    def _unique(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("duplicate curve kind")
        return v

    @model_validator(mode="after")
    def _combination(self):
        allowed = _AXES[self.dimension]
        if self.metric not in allowed:
            raise ValueError(f"metric {self.metric!r} is not available in {self.dimension}D")
        if self.sweep.axis not in allowed[self.metric]:
            raise ValueError(
                f"axis {self.sweep.axis!r} does not apply to {self.metric!r}; use one of {list(allowed[self.metric])}"
            )
        if self.metric == "coverage" and self.sweep.axis != "threshold_db" and self.threshold_db is None:
            raise ValueError("threshold_db is required when the sweep is not over the threshold")
        if any(k in _BOUNDS for k in self.outputs):
            ok = self.dimension == 2 and (
                self.metric in ("assoc_los", "serving_tail_los")
                or (self.metric == "coverage" and self.params.pathloss.model == "lap")
            )
            if not ok:
                raise ValueError("bound curves exist for 2D association, serving-distance tail and LoS-only coverage")
        if self.sweep.axis in ("mu_per_m", "l_max_m", "r_m", "rho_mbps") and self.sweep.values[0] < 0:
            raise ValueError("sweep values must be non-negative")
        if self.sweep.axis == "l_max_m" and self.sweep.values[0] <= 0:
            raise ValueError("l_max_m values must be positive")
        return self

    def network(self, x: Optional[float] = None):
        """SI parameter object, with the swept parameter set to ``x`` when it is a model parameter."""
        over = {}
        if x is not None and self.sweep.axis in ("mu_per_m", "l_max_m"):
            over[self.sweep.axis] = x
        return self.params.build(**over)


class Scenario1D(_ScenarioBase):
    dimension: Literal[1]
    params: Params1DCfg


class Scenario2D(_ScenarioBase):
    dimension: Literal[2]
    params: Params2DCfg


Scenario = Annotated[Union[Scenario1D, Scenario2D], Field(discriminator="dimension")]


class RunConfig(_Strict):
    seed: int = Field(1, ge=0, lt=2**64)
    scenarios: list[Scenario] = Field(min_length=1)

    @field_validator("scenarios")
    @classmethod
    def _names(cls, v):
        names = [s.name for s in v]
        if len(set(names)) != len(names):
            raise ValueError("scenario names must be unique")
        return v

    def seed_for(self, sc: Scenario) -> int:
        return self.seed if sc.seed is None else sc.seed


# --------------------------------------------------------------------------
# presets

_P1D = {"lambda_per_km": 10.0, "mu_per_m": 0.007}
_P2D = {"lambda_per_km2": 30.0, "beta_per_m": 0.014, "l_max_m": 200.0}

PRESETS: dict[str, dict] = {
    "fig-1d-coverage": {
        "description": "1D SINR coverage vs threshold: correlated analysis, IBA and simulation",
        "dimension": 1,
        "metric": "coverage",
        "params": _P1D,
        "sweep": {"axis": "threshold_db", "start": -10.0, "stop": 40.0, "num": 11},
        "outputs": ["analytic", "iba", "simulated"],
        "iba_above_max_x": 10.0,
    },
    "fig-1d-coverage-vs-mu": {
        "description": "1D SINR coverage at 10 dB vs blockage density",
        "dimension": 1,
        "metric": "coverage",
        "params": _P1D,
        "threshold_db": 10.0,
        "sweep": {"axis": "mu_per_m", "start": 0.0005, "stop": 0.05, "num": 20, "spacing": "log"},
        "outputs": ["analytic", "iba", "simulated"],
    },
    "fig-1d-assoc-lap": {
        "description": "1D LoS association with LoS-only path loss vs blockage density",
        "dimension": 1,
        "metric": "assoc_los",
        "params": {**_P1D, "pathloss": {"model": "lap"}},
        "sweep": {"axis": "mu_per_m", "values": [0.002, 0.005, 0.01, 0.02]},
        "outputs": ["analytic", "iba", "simulated"],
        "tolerance": 0.01,
    },
    "fig-2d-serving-distance": {
        "description": "2D probability that the serving BS is LoS and beyond r",
        "dimension": 2,
        "metric": "serving_tail_los",
        "params": _P2D,
        "sweep": {"axis": "r_m", "start": 10.0, "stop": 100.0, "num": 10},
        "outputs": ["analytic", "iba", "lower_bound", "simulated"],
        "tolerance": 0.03,
        "sigma": 3.0,
    },
    "fig-2d-assoc-vs-lmax": {
        "description": "2D LoS association vs maximum blockage length at fixed beta",
        "dimension": 2,
        "metric": "assoc_los",
        "params": _P2D,
        "sweep": {"axis": "l_max_m", "values": [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000]},
        "outputs": ["analytic", "iba", "lower_bound", "simulated"],
        "tolerance": 0.03,
    },
    "fig-2d-coverage": {
        "description": "2D SINR coverage vs threshold",
        "dimension": 2,
        "metric": "coverage",
        "params": _P2D,
        "sweep": {"axis": "threshold_db", "start": -10.0, "stop": 30.0, "num": 9},
        "outputs": ["analytic", "iba", "simulated"],
        "tolerance": 0.03,
        "iba_above_max_x": 10.0,
    },
    "fig-2d-coverage-lap": {
        "description": "2D SINR coverage with LoS-only path loss and its correlation bounds",
        "dimension": 2,
        "metric": "coverage",
        "params": {**_P2D, "pathloss": {"model": "lap"}},
        "sweep": {"axis": "threshold_db", "values": [-10.0, 0.0, 10.0, 20.0]},
        "outputs": ["analytic", "lower_bound", "upper_bound", "simulated"],
        "tolerance": 0.03,
    },
    "fig-2d-rate": {
        "description": "2D rate coverage with equal bandwidth sharing, 200 users per km^2",
        "dimension": 2,
        "metric": "rate_coverage",
        "params": {**_P2D, "user_density_per_km2": 200.0},
        "sweep": {"axis": "rho_mbps", "values": [10.0, 25.0, 50.0, 100.0, 200.0, 400.0]},
        "outputs": ["analytic", "iba", "simulated"],
        "tolerance": 0.03,
    },
}


def _expand(raw: dict) -> dict:
    if "preset" not in raw:
        return raw
    name = raw["preset"]
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; run `blockcorr presets` for the list")
    merged = copy.deepcopy(PRESETS[name])
    merged["name"] = name
    for k, v in raw.items():
        if k == "preset":
            continue
        if isinstance(v, dict) and isinstance(merged.get(k), dict):
            merged[k] = {**merged[k], **v}
        else:
            merged[k] = v
    return merged


def preset_yaml(name: str, n_scenes: Optional[int] = None) -> str:
    """A runnable config file for one preset."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    entry = {"preset": name}
    if n_scenes is not None:
        entry["n_scenes"] = n_scenes
    return yaml.safe_dump({"seed": 1, "scenarios": [entry]}, sort_keys=False)


# --------------------------------------------------------------------------
# loading with source positions

def _drop_tags(loc) -> list:
    """Remove the discriminator value pydantic inserts after a scenario index."""
    out = list(loc)
    if len(out) >= 3 and out[0] == "scenarios" and isinstance(out[1], int):
        del out[2]
    return out


def _line_of(node, loc) -> Optional[int]:
    """1-based line of the YAML node at pydantic location ``loc``."""
    line = None
    for key in loc:
        if node is None:
            break
        line = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt = v
                    line = k.start_mark.line + 1
                    break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            # pydantic union tags and the like do not exist in the document
            continue
    if node is not None and line is None:
        line = node.start_mark.line + 1
    return line


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        raw = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ConfigError(f"{where}: YAML syntax error: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping with a 'scenarios' list")
    scenarios = raw.get("scenarios")
    if isinstance(scenarios, list):
        raw = dict(raw)
        raw["scenarios"] = [_expand(s) if isinstance(s, dict) else s for s in scenarios]
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = _drop_tags(err["loc"])
            path = ".".join(str(p) for p in loc) or "<root>"
            ln = _line_of(root, loc)
            where = f"{source}:{ln}" if ln else source
            lines.append(f"{where}: {path}: {err['msg']}")
        raise ConfigError("\n".join(lines)) from None


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, path)
