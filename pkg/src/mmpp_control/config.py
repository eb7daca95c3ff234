"""YAML scenario files.

```yaml
phase:
  Q: [[-1, 1], [1, -1]]
  lambdas: [0.5, 1.0]
cost:
  service: {family: exponential}          # or quadratic (offset), power_series (coefficients)
  holding: {family: linear}               # or shifted_linear (k), power (C, p)
  u_max: 5
solver:
  alpha: 0.0
  truncation_N: 50
  tolerance: 1.0e-8
nhpp:                                     # only for the nhpp subcommands
  rate: {family: sinusoid, amplitude: 5, offset: 6}
  period_T: 6.283185307179586
  delta_t: 0.031415926535897934
  partitions: 6
```

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field
from pydantic import ValidationError as SchemaError

from .errors import ConfigError, ValidationError
from .model import (
    CostModel,
    ExponentialCost,
    LinearHolding,
    PhaseProcess,
    PowerHolding,
    PowerSeriesCost,
    QuadraticCost,
    Scenario,
    ShiftedLinearHolding,
)
from .nhpp import NhppScenario, PiecewiseConstant, Sinusoid


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PhaseSection(_Strict):
    Q: List[List[float]]
    lambdas: List[float]


class ExponentialSpec(_Strict):
    family: Literal["exponential"]


class QuadraticSpec(_Strict):
    family: Literal["quadratic"]
    offset: float = 0.0


class PowerSeriesSpec(_Strict):
    family: Literal["power_series"]
    coefficients: List[float]


class LinearSpec(_Strict):
    family: Literal["linear"]


class ShiftedLinearSpec(_Strict):
    family: Literal["shifted_linear"]
    k: int = Field(ge=0)


class PowerSpec(_Strict):
    family: Literal["power"]
    C: float = 1.0
    p: int = Field(default=1, ge=1)


class CostSection(_Strict):
    service: Union[ExponentialSpec, QuadraticSpec, PowerSeriesSpec] = Field(discriminator="family")
    holding: Union[LinearSpec, ShiftedLinearSpec, PowerSpec] = Field(discriminator="family")
    u_max: float


class SolverSection(_Strict):
    alpha: float = 0.0
    truncation_N: int = 50
    tolerance: float = 1e-8
    uniformization_slack: float = 1.0
    max_iterations: int = 1_000_000
    boundary: Literal["extrapolate", "block"] = "extrapolate"


class PiecewiseSpec(_Strict):
    family: Literal["piecewise_constant"]
    breakpoints: List[float]
    rates: List[float]


class SinusoidSpec(_Strict):
    family: Literal["sinusoid"]
    amplitude: float
    offset: float


class NhppSection(_Strict):
    rate: Union[PiecewiseSpec, SinusoidSpec] = Field(discriminator="family")
    period_T: float
    delta_t: float
    partitions: int = Field(default=1, ge=1)
    cut_points: Optional[List[float]] = None


class Config(_Strict):
    phase: Optional[PhaseSection] = None
    cost: CostSection
    solver: SolverSection = SolverSection()
    nhpp: Optional[NhppSection] = None

    def cost_model(self) -> CostModel:
        c = self.cost
        if c.service.family == "exponential":
            service = ExponentialCost()
        elif c.service.family == "quadratic":
            service = QuadraticCost(c.service.offset)
        else:
            service = PowerSeriesCost(tuple(c.service.coefficients))
        if c.holding.family == "linear":
            holding = LinearHolding()
        elif c.holding.family == "shifted_linear":
            holding = ShiftedLinearHolding(c.holding.k)
        else:
            holding = PowerHolding(c.holding.C, c.holding.p)
        return _guard(lambda: CostModel(service, holding, c.u_max))

    def scenario(self) -> Scenario:
        if self.phase is None:
            raise ConfigError("this command needs a 'phase' section")
        s = self.solver
        return _guard(
            lambda: Scenario(
                PhaseProcess(self.phase.Q, self.phase.lambdas),
                self.cost_model(),
                truncation_N=s.truncation_N,
                alpha=s.alpha,
                tolerance=s.tolerance,
                uniformization_slack=s.uniformization_slack,
                max_iterations=s.max_iterations,
                boundary=s.boundary,
            )
        )

    def nhpp_scenario(self) -> NhppScenario:
        if self.nhpp is None:
            raise ConfigError("this command needs an 'nhpp' section")
        n = self.nhpp

        def build():
            if n.rate.family == "sinusoid":
                rate = Sinusoid(n.rate.amplitude, n.rate.offset, n.period_T)
            else:
                if abs(n.rate.breakpoints[-1] - n.period_T) > 1e-12 * max(1.0, n.period_T):
                    raise ValidationError("piecewise breakpoints must end at period_T")
                rate = PiecewiseConstant(tuple(n.rate.breakpoints), tuple(n.rate.rates))
            return NhppScenario(
                rate,
                self.cost_model(),
                delta_t=n.delta_t,
                truncation_N=self.solver.truncation_N,
                tolerance=self.solver.tolerance,
                max_iterations=self.solver.max_iterations,
            )

        return _guard(build)


def _guard(build):
    try:
        return build()
    except ConfigError:
        raise
    except (ValidationError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(data) -> Config:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    try:
        return Config.model_validate(data)
    except SchemaError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> Config:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return parse_config(data)
