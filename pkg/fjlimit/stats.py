from __future__ import annotations

from dataclasses import dataclass
from math import log, sqrt
from typing import Any, Callable, NamedTuple, Protocol, runtime_checkable

import numpy as np

from numpy.typing import ArrayLike, NDArray

from .exceptions import InvalidArgumentError
from .util import check_positive

__all__ = [
    'HasCdf',
    'EmpiricalDistribution',
    'KsReport', 'ks_against', 'two_sample_ks',
    'dkw_band', 'two_sample_threshold',
    'BennettBound', 'bennett_bound', 'bennett_h',
    'record_count', 'expected_records',
    'effective_sample_size'
]


@runtime_checkable
class HasCdf(Protocol):
    def cdf(self, x: ArrayLike) -> Any:
        ...


def dkw_band(n: float, alpha: float = 0.01) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band at confidence 1 - alpha."""

    return sqrt(log(2.0 / alpha) / (2.0 * n))


def two_sample_threshold(n: int, m: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample KS critical value."""

    return sqrt(-log(alpha / 2.0) / 2.0) * sqrt((n + m) / (n * m))


@dataclass(frozen=True)
class EmpiricalDistribution:
    sorted_samples: NDArray[np.float64]
    effective_n: float | None = None

    def __post_init__(self) -> None:
        samples = np.asarray(self.sorted_samples, dtype=np.float64)

        if samples.ndim != 1 or samples.size < 1:
            raise InvalidArgumentError('Need a non-empty one-dimensional sample!', EmpiricalDistribution)

        if np.any(samples[1:] < samples[:-1]):
            raise InvalidArgumentError('Samples must be sorted ascending!', EmpiricalDistribution)

        object.__setattr__(self, 'sorted_samples', samples)

    @classmethod
    def from_samples(cls, samples: ArrayLike, effective_n: float | None = None) -> EmpiricalDistribution:
        return cls(np.sort(np.asarray(samples, dtype=np.float64).ravel()), effective_n)

    @property
    def n(self) -> int:
        return int(self.sorted_samples.size)

    @property
    def n_eff(self) -> float:
        return self.n if self.effective_n is None else self.effective_n

    def ecdf(self, x: ArrayLike) -> Any:
        return np.searchsorted(self.sorted_samples, x, side='right') / self.n

    def sf(self, x: ArrayLike) -> Any:
        return 1.0 - self.ecdf(x)

    def quantile(self, p: ArrayLike) -> Any:
        return np.quantile(self.sorted_samples, p, method='inverted_cdf')

    def dkw_band(self, alpha: float = 0.01) -> float:
        return dkw_band(self.n_eff, alpha)

    @property
    def mean(self) -> float:
        return float(np.mean(self.sorted_samples))


@dataclass(frozen=True)
class KsReport:
    statistic: float
    n: int
    dkw_band_99: float
    threshold: float
    passed: bool

    def as_dict(self) -> dict[str, Any]:
        return {
            'statistic': self.statistic, 'n': self.n, 'dkw_band_99': self.dkw_band_99,
            'threshold': self.threshold, 'pass': self.passed
        }


def _check_finite(emp: EmpiricalDistribution, func: Callable[..., Any]) -> None:
    if not np.all(np.isfinite(emp.sorted_samples)):
        raise InvalidArgumentError('Samples must be finite!', func)


def ks_against(
    emp: EmpiricalDistribution, law: HasCdf | Callable[[Any], Any], threshold: float | None = None
) -> KsReport:
    """
    One-sample KS distance between ``emp`` and an analytic CDF.

    :param emp:         Sample.
    :param law:         Anything with a vectorised ``cdf`` method, or the CDF itself.
    :param threshold:   Pass threshold; defaults to the 99% DKW band at the (effective) sample size.

    :return:            Report with the largest one-sided gap over all jump points.
    """

    from scipy.stats import kstest

    _check_finite(emp, ks_against)

    cdf = law.cdf if isinstance(law, HasCdf) else law

    statistic = float(kstest(emp.sorted_samples, cdf).statistic)
    band = emp.dkw_band()
    threshold = band if threshold is None else threshold

    return KsReport(statistic, emp.n, band, threshold, statistic <= threshold)


def two_sample_ks(
    a: EmpiricalDistribution, b: EmpiricalDistribution, threshold: float | None = None
) -> KsReport:
    from scipy.stats import ks_2samp

    _check_finite(a, two_sample_ks)
    _check_finite(b, two_sample_ks)

    statistic = float(ks_2samp(a.sorted_samples, b.sorted_samples).statistic)
    critical = two_sample_threshold(a.n, b.n)
    threshold = critical if threshold is None else threshold

    return KsReport(statistic, a.n + b.n, critical, threshold, statistic <= threshold)


class BennettBound(NamedTuple):
    tight: float
    """exp(-(n s^2 / M^2) h(y M / (n s^2)))"""
    relaxed: float
    """exp(-(y / M) (log(1 + y M / (n s^2)) - 1))"""


def bennett_h(x: ArrayLike) -> Any:
    x = np.asarray(x, dtype=np.float64)

    return (1.0 + x) * np.log1p(x) - x


def bennett_bound(n: int, sigma2: float, m_bound: float, y: float) -> BennettBound:
    """Tail bounds for a sum of ``n`` centred summands with variance ``sigma2`` bounded by ``m_bound``."""

    check_positive(bennett_bound, n=n, sigma2=sigma2, m_bound=m_bound, y=y)

    total = n * sigma2
    x = y * m_bound / total

    tight = np.exp(-(total / m_bound ** 2) * bennett_h(x))
    relaxed = np.exp(-(y / m_bound) * (np.log1p(x) - 1.0))

    return BennettBound(float(np.clip(tight, 0.0, 1.0)), float(np.clip(relaxed, 0.0, 1.0)))


def record_count(samples: ArrayLike) -> int:
    """Number of strict running maxima (new extremes) in sequence order."""

    samples = np.asarray(samples, dtype=np.float64).ravel()

    if samples.size < 1:
        raise InvalidArgumentError('Need a non-empty sequence!', record_count)

    return 1 + int(np.count_nonzero(samples[1:] > np.maximum.accumulate(samples)[:-1]))


def expected_records(last: int, first: int = 1) -> float:
    """Expected new extremes of an i.i.d. continuous sequence at indices first..last: sum of 1/j."""

    from scipy.special import digamma

    if not 1 <= first <= last:
        raise InvalidArgumentError('Need 1 <= first <= last!', expected_records, (first, last))

    return float(digamma(last + 1) - digamma(first))


def effective_sample_size(samples: ArrayLike, batches: int = 32) -> float:
    """Batch-means estimate of the effective size of an autocorrelated sample (in sequence order)."""

    samples = np.asarray(samples, dtype=np.float64).ravel()
    n = samples.size

    if n < 2 * batches:
        return float(n)

    size = n // batches

    variance = np.var(samples, ddof=1)
    means = samples[: size * batches].reshape(batches, size).mean(axis=1)
    long_run = size * np.var(means, ddof=1)

    if variance <= 0.0 or long_run <= 0.0:
        return float(n)

    return float(np.clip(n * variance / long_run, 1.0, n))
