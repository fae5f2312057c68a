from __future__ import annotations

import json
import tomllib

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .distributions import RegVarLaw, SlowlyVaryingFn, WeibullLaw
from .enum import InterarrivalKind, OutputFormat, SlowlyVarying
from .exceptions import InvalidArgumentError
from .forkjoin import ModelParams
from .util import DEFAULT_BUDGET, check_positive

__all__ = [
    'parse_slowly_varying',
    'ModelConfig', 'RunConfig', 'OutputConfig', 'ExperimentConfig'
]


def parse_slowly_varying(text: str) -> SlowlyVaryingFn:
    """``const:<c>`` (``const`` alone means c = 1), ``log`` or ``expsqrtlog``."""

    name, _, arg = text.strip().partition(':')
    kind = SlowlyVarying.from_param(name)

    if arg and kind is not SlowlyVarying.CONSTANT:
        raise InvalidArgumentError('Only "const" takes an argument!', parse_slowly_varying, text)

    try:
        constant = float(arg) if arg else 1.0
    except ValueError:
        raise InvalidArgumentError('Bad constant in "{text}"!', parse_slowly_varying, text=text) from None

    return kind(constant)


@dataclass(frozen=True)
class ModelConfig:
    alpha: float = 0.8
    q: float = 1.0
    beta: float = 2.0
    L: str = 'const:1'
    mu: float = 1.0
    interarrival: str = 'exp'
    n_servers: int = 1024

    def __post_init__(self) -> None:
        check_positive(ModelConfig, n_servers=self.n_servers, mu=self.mu)

        InterarrivalKind.from_param(self.interarrival)

        self.weibull()
        self.regvar()

    def weibull(self) -> WeibullLaw:
        return WeibullLaw(self.alpha, self.q)

    def regvar(self) -> RegVarLaw:
        return RegVarLaw(self.beta, parse_slowly_varying(self.L))

    def build(self) -> ModelParams:
        return ModelParams.with_drift(self.weibull(), self.regvar(), self.mu, self.n_servers, self.interarrival)


@dataclass(frozen=True)
class RunConfig:
    horizon: float = 1.0
    grid_step: float = 0.1
    step: float = 1e-3
    """cell width of the limit-process grid"""
    replications: int = 1000
    samples: int = 1000
    jobs: int = 5
    seed: int = 0
    budget: int = DEFAULT_BUDGET

    def __post_init__(self) -> None:
        check_positive(
            RunConfig, horizon=self.horizon, grid_step=self.grid_step, step=self.step,
            replications=self.replications, samples=self.samples, budget=self.budget
        )

        if self.seed < 0 or self.jobs < 0:
            raise InvalidArgumentError('"seed" and "jobs" must be >= 0!', RunConfig, (self.seed, self.jobs))


@dataclass(frozen=True)
class OutputConfig:
    path: str = '-'
    """``-`` writes to stdout"""
    format: str = 'csv'

    def __post_init__(self) -> None:
        object.__setattr__(self, 'format', OutputFormat.from_param(self.format).value)


_TYPES: dict[str, tuple[type, ...]] = {'float': (int, float), 'int': (int,), 'str': (str,)}


def _section(cls: type[Any], name: str, values: Mapping[str, Any]) -> Any:
    if not isinstance(values, Mapping):
        raise InvalidArgumentError('"{name}" must be a table!', ExperimentConfig.loads, name=name)

    known = {f.name: f for f in fields(cls)}

    for key, value in values.items():
        if key not in known:
            raise InvalidArgumentError(
                'Unknown key "{name}.{key}"!', ExperimentConfig.loads, sorted(known), name=name, key=key
            )

        allowed = _TYPES[str(known[key].type)]

        if isinstance(value, bool) or not isinstance(value, allowed):
            raise InvalidArgumentError(
                '"{name}.{key}" must be {tname}!', ExperimentConfig.loads, value,
                name=name, key=key, tname=known[key].type
            )

    return cls(**{k: float(v) if str(known[k].type) == 'float' else v for k, v in values.items()})


def _toml_value(value: Any) -> str:
    if isinstance(value, str):
        return json.dumps(value)

    return repr(value)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    run: RunConfig = field(default_factory=RunConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def loads(cls, text: str) -> ExperimentConfig:
        """Parse dotted-key TOML (``model.alpha = 0.8``); tables are accepted too."""

        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            raise InvalidArgumentError('Malformed config: {err}', cls.loads, err=e) from None

        sections = {f.name: f.default_factory for f in fields(cls)}  # type: ignore[misc]

        for name in data:
            if name not in sections:
                raise InvalidArgumentError('Unknown section "{name}"!', cls.loads, sorted(sections), name=name)

        return cls(**{
            name: _section(factory, name, data[name])
            for name, factory in sections.items() if name in data
        })

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise InvalidArgumentError('Cannot read config "{path}": {err}', cls.load, path=path, err=e) from None

        return cls.loads(text)

    def dumps(self) -> str:
        return ''.join(
            f'{section}.{key} = {_toml_value(value)}\n'
            for section, values in asdict(self).items()
            for key, value in values.items()
        )

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    def override(self, **flags: Any) -> ExperimentConfig:
        """Replace values from ``section__key`` flags; None means not given."""

        updates = dict[str, dict[str, Any]]()

        for name, value in flags.items():
            if value is None:
                continue

            section, _, key = name.partition('__')
            updates.setdefault(section, {})[key] = value

        unknown = set(updates) - {f.name for f in fields(self)}

        if unknown:
            raise InvalidArgumentError('Unknown config sections {names}!', self.override, names=sorted(unknown))

        try:
            return replace(self, **{
                section: replace(getattr(self, section), **values) for section, values in updates.items()
            })
        except TypeError as e:
            raise InvalidArgumentError('Unknown config key: {err}', self.override, err=e) from None
