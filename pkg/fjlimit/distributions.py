from __future__ import annotations

import logging

from dataclasses import dataclass, field
from functools import cached_property
from math import inf, log
from typing import Any, Protocol, runtime_checkable

import numpy as np

from numpy.random import Generator
from numpy.typing import ArrayLike, NDArray

from .enum import BoundedKind, InterarrivalKind, SlowlyVarying
from .exceptions import ConvergenceError, InvalidArgumentError, NumericError
from .util import check_open_unit, check_positive, open_uniform

__all__ = [
    'Law',
    'WeibullLaw', 'WeibullFactorLaw', 'SlowlyVaryingFn', 'RegVarLaw', 'FrechetLaw', 'InterarrivalLaw', 'BoundedLaw',
    'sample_weibull', 'sample_regvar', 'sample_frechet',
    'mean_of'
]

logger = logging.getLogger(__name__)

_BISECT_TOL = 1e-13
_BISECT_MAX_ITER = 200


@runtime_checkable
class Law(Protocol):
    @property
    def mean(self) -> float:
        ...

    def ppf(self, u: ArrayLike) -> Any:
        ...

    def draw(self, rng: Generator, size: int | tuple[int, ...] | None = None) -> Any:
        ...


class _InverseSampled:
    def ppf(self, u: ArrayLike) -> Any:
        raise NotImplementedError

    def draw(self, rng: Generator, size: int | tuple[int, ...] | None = None) -> Any:
        return self.ppf(open_uniform(rng, size))


@dataclass(frozen=True)
class WeibullLaw(_InverseSampled):
    """Exact Weibull tail P(A > x) = exp(-q x^alpha), the server-specific service factor."""

    alpha: float
    q: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise InvalidArgumentError('"alpha" must lie in (0, 1)!', WeibullLaw, self.alpha)

        check_positive(WeibullLaw, q=self.q)

    def sf(self, x: ArrayLike) -> Any:
        x = np.asarray(x, dtype=np.float64)

        return np.where(x > 0.0, np.exp(-self.q * np.maximum(x, 0.0) ** self.alpha), 1.0)

    def cdf(self, x: ArrayLike) -> Any:
        x = np.asarray(x, dtype=np.float64)

        return np.where(x > 0.0, -np.expm1(-self.q * np.maximum(x, 0.0) ** self.alpha), 0.0)

    def isf(self, u: ArrayLike) -> Any:
        """Point with survival probability u."""

        return (-np.log(u) / self.q) ** (1.0 / self.alpha)

    def ppf(self, u: ArrayLike) -> Any:
        return (-np.log1p(-np.asarray(u, dtype=np.float64)) / self.q) ** (1.0 / self.alpha)

    def draw(self, rng: Generator, size: int | tuple[int, ...] | None = None) -> Any:
        return self.isf(open_uniform(rng, size))

    @cached_property
    def mean(self) -> float:
        from scipy.special import gamma

        return float(gamma(1.0 + 1.0 / self.alpha) * self.q ** (-1.0 / self.alpha))


@dataclass(frozen=True)
class WeibullFactorLaw(WeibullLaw):
    """Weibull server factor of any shape alpha > 0, for comparisons where alpha >= 1 is allowed."""

    def __post_init__(self) -> None:
        check_positive(WeibullFactorLaw, alpha=self.alpha, q=self.q)


@dataclass(frozen=True)
class SlowlyVaryingFn:
    kind: SlowlyVarying = SlowlyVarying.CONSTANT
    constant: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'kind', SlowlyVarying.from_param(self.kind))

        if self.kind is SlowlyVarying.CONSTANT:
            check_positive(SlowlyVaryingFn, constant=self.constant)

    def __call__(self, x: ArrayLike) -> Any:
        return np.exp(self.log_at(np.log(np.asarray(x, dtype=np.float64))))

    def log_at(self, log_x: ArrayLike) -> Any:
        """log L evaluated from log x."""

        log_x = np.asarray(log_x, dtype=np.float64)

        match self.kind:
            case SlowlyVarying.CONSTANT:
                return np.full_like(log_x, log(self.constant))
            case SlowlyVarying.LOG_FLOOR:
                return np.log(np.maximum(log_x, 1.0))
            case SlowlyVarying.EXP_SQRT_LOG:
                return np.sqrt(np.maximum(log_x, 0.0))

        raise NotImplementedError(self.kind)

    def __str__(self) -> str:
        if self.kind is SlowlyVarying.CONSTANT:
            return f'const:{self.constant!r}'

        return 'log' if self.kind is SlowlyVarying.LOG_FLOOR else 'expsqrtlog'


@dataclass(frozen=True)
class RegVarLaw(_InverseSampled):
    """Common job size B with P(B > x) = min(1, L(x) / x^beta), supported on [x0, inf)."""

    beta: float
    L: SlowlyVaryingFn = field(default_factory=SlowlyVaryingFn)

    def __post_init__(self) -> None:
        if not self.beta > 1.0:
            raise InvalidArgumentError('"beta" must be > 1 for a finite mean!', RegVarLaw, self.beta)

    @cached_property
    def x0(self) -> float:
        return self.L.kind.support_edge(self.beta, self.L.constant)

    def log_sf(self, log_x: ArrayLike) -> Any:
        log_x = np.asarray(log_x, dtype=np.float64)

        tail = self.L.log_at(log_x) - self.beta * log_x

        return np.where(log_x <= log(self.x0), 0.0, np.minimum(tail, 0.0))

    def sf(self, x: ArrayLike) -> Any:
        x = np.asarray(x, dtype=np.float64)

        with np.errstate(divide='ignore'):
            return np.where(x <= self.x0, 1.0, np.exp(self.log_sf(np.log(np.maximum(x, self.x0)))))

    def cdf(self, x: ArrayLike) -> Any:
        return 1.0 - self.sf(x)

    def ppf(self, u: ArrayLike) -> Any:
        log_p = np.log1p(-np.asarray(u, dtype=np.float64))

        if self.L.kind is SlowlyVarying.CONSTANT:
            return np.maximum(np.exp((log(self.L.constant) - log_p) / self.beta), self.x0)

        return np.exp(self._bisect_log(log_p))

    def _bisect_log(self, log_p: NDArray[np.float64]) -> NDArray[np.float64]:
        # log_sf is strictly decreasing on [log x0, inf) and equals 0 at log x0
        lo = np.full_like(log_p, log(self.x0))
        hi = lo + 1.0

        while np.any(above := self.log_sf(hi) > log_p):
            hi = np.where(above, lo + 2.0 * (hi - lo), hi)

        for iteration in range(_BISECT_MAX_ITER):
            if np.all(hi - lo <= np.maximum(_BISECT_TOL, 4.0 * np.spacing(np.abs(hi)))):
                logger.debug('regvar inversion converged after %d bisections', iteration)
                return 0.5 * (lo + hi)

            mid = 0.5 * (lo + hi)
            upper = self.log_sf(mid) > log_p
            lo, hi = np.where(upper, mid, lo), np.where(upper, hi, mid)

        raise ConvergenceError(
            'Tail inversion did not converge!', sample_regvar, self,
            last_iterate=float(np.max(hi)), residual=float(np.max(hi - lo)), iterations=_BISECT_MAX_ITER
        )

    @cached_property
    def mean(self) -> float:
        if self.L.kind is SlowlyVarying.CONSTANT:
            return self.beta * self.x0 / (self.beta - 1.0)

        from scipy.integrate import quad

        def integrand(y: float) -> float:
            return float(np.exp(self.L.log_at(y) - (self.beta - 1.0) * y))

        y0 = log(self.x0)
        # LOG_FLOOR has its kink at log x = 1
        y1 = max(y0, 1.0)

        # E[B] = x0 + int_{x0}^inf P(B > x) dx, on log scale
        value, error = 0.0, 0.0

        for lo, hi in ((y0, y1), (y1, inf)):
            if hi > lo:
                part, part_error = quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-11, limit=500)
                value, error = value + part, error + part_error

        logger.debug('regvar mean quadrature: value=%r error=%r', value, error)

        if not np.isfinite(value) or error > 1e-8 * abs(value):
            raise NumericError(
                'Quadrature for the job-size mean did not converge!', mean_of, self,
                estimate=value, error=error
            )

        return self.x0 + value


@dataclass(frozen=True)
class FrechetLaw(_InverseSampled):
    """P(X <= x) = exp(-scale / x^beta) for x > 0."""

    beta: float
    scale: float = 1.0

    def __post_init__(self) -> None:
        check_positive(FrechetLaw, beta=self.beta, scale=self.scale)

    def cdf(self, x: ArrayLike) -> Any:
        x = np.asarray(x, dtype=np.float64)

        with np.errstate(divide='ignore'):
            return np.where(x > 0.0, np.exp(-self.scale / np.maximum(x, 0.0) ** self.beta), 0.0)

    def ppf(self, u: ArrayLike) -> Any:
        return self.scale ** (1.0 / self.beta) * (-np.log(u)) ** (-1.0 / self.beta)

    @property
    def mean(self) -> float:
        if self.beta <= 1.0:
            return inf

        from scipy.special import gamma

        return float(self.scale ** (1.0 / self.beta) * gamma(1.0 - 1.0 / self.beta))


@dataclass(frozen=True)
class InterarrivalLaw(_InverseSampled):
    kind: InterarrivalKind
    mean: float

    def __post_init__(self) -> None:
        object.__setattr__(self, 'kind', InterarrivalKind.from_param(self.kind))

        check_positive(InterarrivalLaw, mean=self.mean)

    def ppf(self, u: ArrayLike) -> Any:
        u = np.asarray(u, dtype=np.float64)

        if self.kind is InterarrivalKind.DETERMINISTIC:
            return np.full_like(u, self.mean)

        return -self.mean * np.log(u)


@dataclass(frozen=True)
class BoundedLaw(_InverseSampled):
    """Server factor A with finite right endpoint, used instead of the Weibull law."""

    kind: BoundedKind
    endpoint: float
    lower: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'kind', BoundedKind.from_param(self.kind))

        check_positive(BoundedLaw, endpoint=self.endpoint)

        if self.kind is BoundedKind.UNIFORM and not 0.0 <= self.lower < self.endpoint:
            raise InvalidArgumentError('Need 0 <= lower < endpoint!', BoundedLaw, (self.lower, self.endpoint))

    def ppf(self, u: ArrayLike) -> Any:
        u = np.asarray(u, dtype=np.float64)

        if self.kind is BoundedKind.POINT:
            return np.full_like(u, self.endpoint)

        return self.lower + (self.endpoint - self.lower) * u

    @property
    def mean(self) -> float:
        if self.kind is BoundedKind.POINT:
            return self.endpoint

        return 0.5 * (self.lower + self.endpoint)


def sample_weibull(law: WeibullLaw, u: ArrayLike) -> Any:
    return law.isf(check_open_unit(u, sample_weibull))


def sample_regvar(law: RegVarLaw, u: ArrayLike) -> Any:
    return law.ppf(check_open_unit(u, sample_regvar))


def sample_frechet(law: FrechetLaw, u: ArrayLike) -> Any:
    return law.ppf(check_open_unit(u, sample_frechet))


def mean_of(law: WeibullLaw | RegVarLaw | InterarrivalLaw | BoundedLaw | FrechetLaw) -> float:
    if not isinstance(law, Law):
        raise InvalidArgumentError('Expected a law, got {tname}!', mean_of, tname=type(law).__name__)

    return float(law.mean)
