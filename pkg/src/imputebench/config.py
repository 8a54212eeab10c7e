"""Pipeline configuration: a JSON object with one section per stage.

Unknown keys are rejected and every value is checked against its module's
domain before any work starts.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .core import NORMALIZATIONS, ORIENTATIONS, SYNTHETIC_KINDS
from .downstream import FORECASTERS, _check_params
from .errors import ImputeBenchError
from .explain.surrogate import MIN_ROWS
from .gengap import RATE_MAX, RATE_MIN, ContaminationSpec
from .impute import get_algorithm
from .metrics import canonical_metric
from .optimize import ParamSpace

SEED_ENV = "IMPUTE_SEED"


def env_seed(default: int = 0) -> int:
    value = os.environ.get(SEED_ENV)
    return default if value in (None, "") else int(value)


def _algorithm(name: str):
    # pydantic only reports ValueError and AssertionError as validation problems
    try:
        return get_algorithm(name)
    except KeyError as exc:
        raise ValueError(str(exc)) from None


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SyntheticSource(_Section):
    kind: Literal[SYNTHETIC_KINDS] = "correlated-lowrank"
    m: int = Field(10, ge=1)
    n: int = Field(200, ge=8)
    noise_std: float = Field(0.1, ge=0)
    seed: int = 0


class DatasetSection(_Section):
    source: Union[str, SyntheticSource]
    orientation: Literal[ORIENTATIONS] = "series-rows"
    header: bool = False
    normalization: Literal[NORMALIZATIONS] = "none"


class ContaminationSection(_Section):
    pattern: Literal["mono-block", "multi-block", "mono", "multi"] = "mono-block"
    rate: float = 0.2
    series_fraction: float = Field(1.0, gt=0, le=1)
    arrangement: Literal["random", "overlapping", "disjoint", "blackout"] = "random"
    block_size: int = Field(10, ge=1)
    placement: Literal["uniform", "gaussian"] = "uniform"
    protected_prefix: float = Field(0.10, ge=0, le=0.5)
    seed: Optional[int] = None

    @field_validator("rate")
    @classmethod
    def _rate(cls, v):
        if not RATE_MIN <= v <= RATE_MAX:
            raise ValueError(f"rate {v} outside [{RATE_MIN:.2f}, {RATE_MAX:.2f}] of the series length")
        return v

    @model_validator(mode="after")
    def _resolve(self):
        if self.seed is None:
            self.seed = env_seed()
        self.to_spec()
        return self

    def to_spec(self) -> ContaminationSpec:
        return ContaminationSpec(self.pattern, self.rate, self.series_fraction, self.arrangement,
                                 self.block_size, self.placement, self.protected_prefix, self.seed)


class TuneSection(_Section):
    space: dict
    strategy: Literal["grid", "random", "successive-halving", "sh"] = "grid"
    budget: int = Field(20, ge=1)
    metric: Literal["rmse", "mae"] = "rmse"
    seed: int = 0

    def to_space(self) -> ParamSpace:
        return ParamSpace.from_config(self.space, budget=self.budget, strategy=self.strategy, seed=self.seed)


class AlgorithmItem(_Section):
    name: str
    params: dict = Field(default_factory=dict)
    tune: Optional[TuneSection] = None

    @model_validator(mode="after")
    def _check(self):
        info = _algorithm(self.name)
        for key, value in self.params.items():
            if key not in info.params:
                raise ValueError(f"{self.name} has no parameter {key!r}")
            info.params[key].check(value)
        if self.tune is not None:
            space = self.tune.to_space()
            unknown = set(space.params) - set(info.params)
            if unknown:
                raise ValueError(f"tune.space names unknown parameter(s) {sorted(unknown)}")
        return self


class ImputationSection(_Section):
    algorithms: list[AlgorithmItem] = Field(min_length=1)

    @field_validator("algorithms", mode="before")
    @classmethod
    def _names(cls, v):
        return [{"name": a} if isinstance(a, str) else a for a in v]

    @model_validator(mode="after")
    def _unique(self):
        names = [a.name for a in self.algorithms]
        if len(set(names)) != len(names):
            raise ValueError("algorithm names must be unique")
        return self


class ExplainSection(_Section):
    algorithm: Optional[str] = None
    runs: int = Field(5, ge=1)
    rates: list[float] = Field(default_factory=lambda: [0.1, 0.2, 0.4], min_length=1)
    mode: Literal["exact", "sampled"] = "exact"
    n_samples: int = Field(1000, ge=2)
    seed: Optional[int] = None

    @field_validator("rates")
    @classmethod
    def _rates(cls, v):
        for r in v:
            ContaminationSpec(rate=r)
        return v

    @model_validator(mode="after")
    def _rows(self):
        if self.runs * len(self.rates) < MIN_ROWS:
            raise ValueError(f"runs x rates gives {self.runs * len(self.rates)} training rows, need {MIN_ROWS}")
        return self


class DownstreamSection(_Section):
    algorithms: Optional[list[str]] = None
    forecaster: Literal[FORECASTERS] = "ar"
    params: dict = Field(default_factory=dict)
    split: float = Field(0.8, gt=0.5, le=0.95)
    horizon: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _check(self):
        self.params = _check_params(self.forecaster, self.params)
        for name in self.algorithms or []:
            _algorithm(name)
        return self


class OutputSection(_Section):
    directory: str = "imputebench-out"
    formats: list[Literal["csv", "json"]] = Field(default_factory=lambda: ["json"])
    plots: bool = False


class PipelineConfig(_Section):
    dataset: DatasetSection
    contamination: ContaminationSection = Field(default_factory=ContaminationSection)
    imputation: ImputationSection
    metrics: list[str] = Field(default_factory=lambda: ["rmse"], min_length=1)
    explain: Optional[ExplainSection] = None
    downstream: Optional[DownstreamSection] = None
    output: OutputSection = Field(default_factory=OutputSection)

    @field_validator("metrics")
    @classmethod
    def _metrics(cls, v):
        return [canonical_metric(m) for m in v]

    @model_validator(mode="after")
    def _cross(self):
        names = [a.name for a in self.imputation.algorithms]
        if self.explain is not None:
            if self.explain.algorithm is None:
                self.explain.algorithm = names[0]
            _algorithm(self.explain.algorithm)
            if self.explain.seed is None:
                self.explain.seed = self.contamination.seed
        if self.downstream is not None and self.downstream.algorithms is None:
            self.downstream.algorithms = names
        return self


class ConfigError(ImputeBenchError, ValueError):
    """Config failed to parse or validate; ``problems`` holds ``(location, message)`` pairs."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(f"{loc}: {msg}" for loc, msg in self.problems))


def _location(loc) -> str:
    return ".".join(str(p) for p in loc) or "<root>"


def parse_config(data: dict) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError([("<root>", "config must be a JSON object")])
    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as exc:
        problems = []
        for err in exc.errors():
            msg = err["msg"]
            if err["type"] == "extra_forbidden":
                msg = "unknown key"
            problems.append((_location(err["loc"]), msg))
        raise ConfigError(problems) from None


def load_config(path) -> PipelineConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([("<file>", f"cannot read {path}: {exc}")]) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("<file>", f"invalid JSON at line {exc.lineno}: {exc.msg}")]) from None
    return parse_config(data)
