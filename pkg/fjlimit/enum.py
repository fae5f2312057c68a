from __future__ import annotations

from enum import Enum, IntEnum
from typing import TYPE_CHECKING, Any, Self

from .exceptions import InvalidArgumentError

if TYPE_CHECKING:
    from .distributions import BoundedLaw, InterarrivalLaw, SlowlyVaryingFn
    from .limit import LimitLaw

__all__ = [
    'SlowlyVarying',
    'InterarrivalKind',
    'BoundedKind',
    'ConjugateOrder',
    'LimitLawKind',
    'FiniteSupportMode',
    'OutputFormat'
]


_ALIASES = {
    'SlowlyVarying': {'const': 'CONSTANT', 'log': 'LOG_FLOOR', 'expsqrtlog': 'EXP_SQRT_LOG'},
    'InterarrivalKind': {'exp': 'EXPONENTIAL', 'det': 'DETERMINISTIC'},
    'LimitLawKind': {'frechet': 'FRECHET_MARGINAL', 'steady': 'STEADY_STATE'},
    'FiniteSupportMode': {'sup': 'SUPREMUM'},
}


class _ParamEnumMixin:

    @classmethod
    def from_param(cls, value: Any) -> Self:
        if isinstance(value, cls):
            return value

        if isinstance(value, str):
            key = value.strip().lower().replace('-', '_')

            for member in cls:  # type: ignore[attr-defined]
                if key in {member.name.lower(), str(member.value).lower()}:
                    return member  # type: ignore[no-any-return]

            aliases = _ALIASES.get(cls.__name__, {})

            if key in aliases:
                return cls[aliases[key]]  # type: ignore[index,no-any-return]

        try:
            return cls(value)  # type: ignore[call-arg]
        except ValueError:
            pass

        raise InvalidArgumentError(
            'Unknown {name} "{value}"!', cls.from_param, reason=[m.name.lower() for m in cls],  # type: ignore
            name=cls.__name__, value=value
        )


class SlowlyVarying(_ParamEnumMixin, IntEnum):
    """Shipped slowly varying functions L for the regularly varying job sizes."""

    CONSTANT = 0
    """L(x) = c"""
    LOG_FLOOR = 1
    """L(x) = max(log x, 1)"""
    EXP_SQRT_LOG = 2
    """L(x) = exp(sqrt(log x)) for x >= 1, 1 below"""

    def __call__(self, constant: float = 1.0) -> SlowlyVaryingFn:
        from .distributions import SlowlyVaryingFn

        return SlowlyVaryingFn(self, constant)

    def support_edge(self, beta: float, constant: float = 1.0) -> float:
        """Last point where L(x) / x^beta >= 1."""

        from math import exp

        match self:
            case SlowlyVarying.CONSTANT:
                return float(constant ** (1.0 / beta))
            case SlowlyVarying.LOG_FLOOR:
                return 1.0
            case SlowlyVarying.EXP_SQRT_LOG:
                # sqrt(u) = beta * u on log scale
                return exp(1.0 / beta ** 2)

        raise NotImplementedError(self)


class InterarrivalKind(_ParamEnumMixin, IntEnum):
    EXPONENTIAL = 0
    DETERMINISTIC = 1

    def __call__(self, mean: float) -> InterarrivalLaw:
        from .distributions import InterarrivalLaw

        return InterarrivalLaw(self, mean)


class BoundedKind(_ParamEnumMixin, IntEnum):
    """Laws for A with a finite right endpoint."""

    UNIFORM = 0
    POINT = 1

    def __call__(self, endpoint: float, lower: float = 0.0) -> BoundedLaw:
        from .distributions import BoundedLaw

        return BoundedLaw(self, endpoint, lower if self is BoundedKind.UNIFORM else endpoint)


class ConjugateOrder(IntEnum):
    FIRST = 1
    SECOND = 2


class LimitLawKind(_ParamEnumMixin, IntEnum):
    FRECHET_MARGINAL = 0
    TRANSIENT = 1
    STEADY_STATE = 2

    def __call__(self, beta: float, mu: float = 1.0, t: float = 1.0) -> LimitLaw:
        from .limit import LimitLaw

        return LimitLaw(self, beta, mu, t)


class FiniteSupportMode(_ParamEnumMixin, IntEnum):
    FIXED = 0
    """Sum over exactly k jobs"""
    SUPREMUM = 1
    """Supremum over the first 0..k jobs"""


class OutputFormat(_ParamEnumMixin, str, Enum):
    CSV = 'csv'
    JSON = 'json'
