from __future__ import annotations

import logging

from dataclasses import dataclass
from math import ceil, floor, isfinite, log
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from numpy.random import Generator
from numpy.typing import ArrayLike, NDArray

from .distributions import FrechetLaw, InterarrivalLaw, RegVarLaw, WeibullLaw
from .enum import LimitLawKind
from .exceptions import InvalidArgumentError, NumericError
from .forkjoin import ModelParams, TrajectoryBatch, auxiliary_block, draw_jobs
from .scaling import ScalingConstants, compute_b
from .stats import EmpiricalDistribution, KsReport, two_sample_ks
from .util import check_budget, check_positive, chunk_rows, fan_out, replication_stream, stack_rows, time_grid

__all__ = [
    'GridSpec', 'ExtremalField',
    'drifted_sup_path', 'auxiliary_sup_path', 'record_path',
    'simulate_drifted_sup', 'simulate_aux_limit', 'simulate_extremal_field',
    'simulate_job_size_sup', 'ProfileComparison', 'simulate_profile_comparison',
    'LimitLaw',
    'cdf_frechet_marginal', 'cdf_steady_state', 'cdf_transient',
    'hurwitz_partial', 'CdfBounds', 'steady_state_bounds',
    'holder_profile', 'holder_maximiser',
    'joint_cdf_decomposition'
]

logger = logging.getLogger(__name__)

_DIRECT_TERMS = 10 ** 6


@dataclass(frozen=True)
class GridSpec:
    """Cells ((k - 1) h, k h], k = 1..m, covering [0, horizon], recorded every ``record_step``."""

    horizon: float
    step: float
    record_step: float | None = None

    def __post_init__(self) -> None:
        check_positive(GridSpec, horizon=self.horizon, step=self.step)

        if self.step > self.horizon:
            raise InvalidArgumentError('Cell width must not exceed the horizon!', GridSpec, (self.step, self.horizon))

        if self.record_step is not None:
            check_positive(GridSpec, record_step=self.record_step)

            if abs(self.record_step / self.step - self.stride) > 1e-6 * self.stride:
                raise InvalidArgumentError(
                    '"record_step" must be a multiple of the cell width!', GridSpec, (self.record_step, self.step)
                )

    @property
    def cells(self) -> int:
        return ceil(self.horizon / self.step - 1e-9)

    @property
    def stride(self) -> int:
        if self.record_step is None:
            return 1

        return max(1, round(self.record_step / self.step))

    def record_cells(self) -> NDArray[np.int64]:
        """Recorded cell indices, 0 (the origin) and the last cell included."""

        cells = np.arange(0, self.cells + 1, self.stride, dtype=np.int64)

        if cells[-1] != self.cells:
            cells = np.append(cells, self.cells)

        return cells

    def times(self) -> NDArray[np.float64]:
        return self.record_cells() * self.step


def drifted_sup_path(increments: ArrayLike, mu: float, step: float) -> NDArray[np.float64]:
    """
    V_k = max(0, max(V_(k-1), Y_k) - mu h), V_0 = 0, for k = 1..m along the last axis.

    Unrolled, V_k = max(0, max_(j <= k) (Y_j + mu h (j - 1)) - mu h k).
    """

    y = np.asarray(increments, dtype=np.float64)
    drift = mu * step
    k = np.arange(1, y.shape[-1] + 1, dtype=np.float64)

    shifted = np.maximum.accumulate(y + drift * (k - 1.0), axis=-1)

    return np.maximum(0.0, shifted - drift * k)


def auxiliary_sup_path(increments: ArrayLike, mu: float, step: float) -> NDArray[np.float64]:
    """U_k = max(U_(k-1), R_k - mu k h), U_0 = 0, with R the running max of the increments."""

    y = np.asarray(increments, dtype=np.float64)
    k = np.arange(1, y.shape[-1] + 1, dtype=np.float64)

    records = np.maximum.accumulate(y, axis=-1)

    return np.maximum(0.0, np.maximum.accumulate(records - mu * step * k, axis=-1))


def record_path(increments: ArrayLike, mu: float = 0.0, step: float = 1.0) -> NDArray[np.float64]:
    """X_(kh) = max(Y_1, ..., Y_k); the drift is unused."""

    return np.maximum.accumulate(np.asarray(increments, dtype=np.float64), axis=-1)


_KERNELS: dict[str, Callable[[ArrayLike, float, float], NDArray[np.float64]]] = {
    'drifted_sup': drifted_sup_path,
    'aux_sup': auxiliary_sup_path,
    'record': record_path
}


@dataclass(frozen=True)
class ExtremalField:
    """Cell maxima Y_k of a two-parameter extremal field; X_(s,t) is the max over the cells in (s, t]."""

    increments: NDArray[np.float64]
    step: float

    @classmethod
    def sample(
        cls, grid: GridSpec, beta: float, rng: Generator, replications: int | None = None
    ) -> ExtremalField:
        law = FrechetLaw(beta, grid.step)
        size = grid.cells if replications is None else (replications, grid.cells)

        return cls(np.asarray(law.draw(rng, size), dtype=np.float64), grid.step)

    def _cell(self, t: float) -> int:
        k = round(t / self.step)

        if abs(k * self.step - t) > 1e-9 * max(1.0, t) or not 0 <= k <= self.increments.shape[-1]:
            raise InvalidArgumentError('{t} is not a grid time of the field!', self.window_max, t=t)

        return k

    def window_max(self, s: float, t: float) -> Any:
        """X_(s,t); 0 for the empty window s = t."""

        if s > t:
            raise InvalidArgumentError('Need s <= t!', self.window_max, (s, t))

        j0, j1 = self._cell(s), self._cell(t)

        if j0 == j1:
            return np.zeros(self.increments.shape[:-1]) if self.increments.ndim > 1 else 0.0

        return self.increments[..., j0:j1].max(axis=-1)

    def path(self) -> NDArray[np.float64]:
        return record_path(self.increments)


@dataclass(frozen=True)
class _LimitWorker:
    grid: GridSpec
    beta: float
    mu: float
    seed: int
    kernel: str

    def __call__(self, index: int) -> NDArray[np.float64]:
        field = ExtremalField.sample(self.grid, self.beta, replication_stream(self.seed, index))
        path = _KERNELS[self.kernel](field.increments, self.mu, self.grid.step)

        return np.concatenate(([0.0], path))[self.grid.record_cells()]


def _simulate_limit(
    grid: GridSpec, beta: float, mu: float, replications: int, seed: int,
    budget: int | None, workers: int | None, kernel: str, func: Callable[..., Any]
) -> TrajectoryBatch:
    check_positive(func, beta=beta, replications=replications)

    if mu < 0.0:
        raise InvalidArgumentError('"mu" must be >= 0!', func, mu)

    check_budget(grid.cells * replications, budget, func)

    logger.debug('%s: cells=%d stride=%d replications=%d', func.__name__, grid.cells, grid.stride, replications)

    values = stack_rows(fan_out(_LimitWorker(grid, beta, mu, seed, kernel), range(replications), workers))

    return TrajectoryBatch(
        grid.times(), values, seed, None,
        {
            'process': kernel, 'beta': beta, 'mu': mu,
            'horizon': grid.horizon, 'step': grid.step, 'record_step': grid.record_step
        }
    )


def simulate_drifted_sup(
    grid: GridSpec, beta: float, mu: float, replications: int, seed: int = 0,
    *, budget: int | None = None, workers: int | None = None
) -> TrajectoryBatch:
    """
    Paths of sup_(s <= t) (X_(s,t) - mu (t - s)) with Frechet(beta, scale=h) cell maxima.

    :param grid:            Cells and recording times.
    :param beta:            Frechet shape.
    :param mu:              Drift.
    :param replications:    Independent paths.
    :param seed:            Master seed; path r uses the stream (seed, r).
    """

    return _simulate_limit(grid, beta, mu, replications, seed, budget, workers, 'drifted_sup', simulate_drifted_sup)


def simulate_aux_limit(
    grid: GridSpec, beta: float, mu: float, replications: int, seed: int = 0,
    *, budget: int | None = None, workers: int | None = None
) -> TrajectoryBatch:
    """Paths of sup_(s <= t) (X_s - mu s)."""

    return _simulate_limit(grid, beta, mu, replications, seed, budget, workers, 'aux_sup', simulate_aux_limit)


def simulate_extremal_field(
    grid: GridSpec, beta: float, replications: int, seed: int = 0,
    *, budget: int | None = None, workers: int | None = None
) -> TrajectoryBatch:
    """Paths of the record process X_t = X_(0,t)."""

    return _simulate_limit(grid, beta, 0.0, replications, seed, budget, workers, 'record', simulate_extremal_field)


@dataclass(frozen=True)
class _JobSizeWorker:
    params: ModelParams
    jobs: int
    sample_jobs: NDArray[np.int64]
    scaling: ScalingConstants
    seed: int

    def __call__(self, index: int) -> NDArray[np.float64]:
        rng = replication_stream(self.seed, index)
        p = self.params
        rows = chunk_rows(p.n_servers, self.jobs)

        # same blocks as the fork-join path worker, so the factors are drawn and dropped
        sizes = [
            draw_jobs(p.weibull, p.regvar, p.interarrival, p.n_servers, rng, min(rows, self.jobs - start)).b
            for start in range(0, self.jobs, rows)
        ]

        path = drifted_sup_path(np.concatenate(sizes) / self.scaling.ratio, p.mu, 1.0 / self.scaling.c_n)

        return np.concatenate(([0.0], path))[self.sample_jobs]


def simulate_job_size_sup(
    params: ModelParams, horizon: float, grid_step: float, replications: int, seed: int = 0,
    *, budget: int | None = None, scaling: ScalingConstants | None = None, workers: int | None = None
) -> TrajectoryBatch:
    """
    Paths of sup_(s <= t) (max of B_j / (c_N / b_N) over jobs floor(s c_N)..floor(t c_N) - mu (t - s)).

    Only the common job sizes enter. Replication r reads the very draws of replication r of
    ``simulate_max_wait`` under the same seed, so the two batches are coupled path by path.

    :param params:          Model.
    :param horizon:         Scaled horizon T.
    :param grid_step:       Spacing of the recording grid in scaled time.
    :param replications:    Independent replications.
    :param seed:            Master seed shared with the fork-join run it is coupled to.
    """

    check_positive(simulate_job_size_sup, replications=replications)

    scaling = params.scaling if scaling is None else scaling
    grid = time_grid(horizon, grid_step)
    jobs = scaling.jobs(horizon)

    if jobs < 1:
        raise InvalidArgumentError(
            'horizon * c_N must cover at least one job!', simulate_job_size_sup, (horizon, scaling.c_n)
        )

    check_budget(params.n_servers * jobs * replications, budget, simulate_job_size_sup)

    sample_jobs = np.array([scaling.jobs(t) for t in grid], dtype=np.int64)

    logger.debug('simulate_job_size_sup: N=%d jobs=%d replications=%d', params.n_servers, jobs, replications)

    worker = _JobSizeWorker(params, jobs, sample_jobs, scaling, seed)
    values = stack_rows(fan_out(worker, range(replications), workers))

    return TrajectoryBatch(
        grid, values, seed, scaling, {'process': 'job_size_sup', 'params': params.as_dict(), 'jobs': jobs}
    )


class ProfileComparison(NamedTuple):
    scaled_max: NDArray[np.float64]
    """max_i sup_(0 <= k <= l) of the k-job server sums over b_N, one per replication"""
    profile: NDArray[np.float64]
    """holder_profile of the same B_1..B_l"""

    def relative_gap(self) -> NDArray[np.float64]:
        return np.asarray(np.abs(self.scaled_max / self.profile - 1.0), dtype=np.float64)

    def ks(self) -> KsReport:
        return two_sample_ks(
            EmpiricalDistribution.from_samples(self.scaled_max), EmpiricalDistribution.from_samples(self.profile)
        )


@dataclass(frozen=True)
class _ProfileWorker:
    server: WeibullLaw
    regvar: RegVarLaw
    interarrival: InterarrivalLaw
    n_servers: int
    jobs: int
    b_n: float
    seed: int

    def __call__(self, index: int) -> tuple[float, float]:
        rng = replication_stream(self.seed, index)

        sums, running = np.zeros(self.n_servers), 0.0
        sizes = list[NDArray[np.float64]]()
        rows = chunk_rows(self.n_servers, self.jobs)

        for start in range(0, self.jobs, rows):
            draws = draw_jobs(
                self.server, self.regvar, self.interarrival, self.n_servers, rng, min(rows, self.jobs - start)
            )

            _, sums, running = auxiliary_block(sums, running, draws.increments)
            sizes.append(draws.b)

        return running / self.b_n, holder_profile(np.concatenate(sizes), self.server.alpha)


def simulate_profile_comparison(
    server: WeibullLaw, regvar: RegVarLaw, interarrival: InterarrivalLaw, n_servers: int,
    jobs: int, replications: int, seed: int = 0, *, budget: int | None = None, workers: int | None = None
) -> ProfileComparison:
    """
    Pair max_i sup_(0 <= k <= l) sum_(j <= k) (A_ij B_j - T_j) / b_N with the profile of B_1..B_l.

    For alpha <= 1 the profile is max_j B_j, above 1 it is an l_p norm of the job sizes.
    Pass a ``WeibullFactorLaw`` for shapes outside (0, 1).

    :param server:      Weibull server factor; b_N = (log N / q)^(1 / alpha).
    :param jobs:        l.
    """

    check_positive(simulate_profile_comparison, jobs=jobs, replications=replications)

    b_n = compute_b(n_servers, server)

    check_budget(n_servers * jobs * replications, budget, simulate_profile_comparison)

    worker = _ProfileWorker(server, regvar, interarrival, n_servers, jobs, b_n, seed)
    pairs = np.array(fan_out(worker, range(replications), workers), dtype=np.float64).reshape(-1, 2)

    logger.debug('profile comparison: N=%d l=%d b_N=%.4g', n_servers, jobs, b_n)

    return ProfileComparison(pairs[:, 0], pairs[:, 1])


def _check_law(func: Callable[..., Any], beta: float, mu: float) -> None:
    if not beta > 1.0:
        raise InvalidArgumentError('"beta" must be > 1!', func, beta)

    check_positive(func, mu=mu)


def _check_x(x: ArrayLike, func: Callable[..., Any]) -> NDArray[np.float64]:
    x = np.asarray(x, dtype=np.float64)

    if np.any(np.isnan(x)) or np.any(x <= 0.0):
        raise InvalidArgumentError('"x" must be > 0!', func, x)

    return x


def _steady_exponent(x: NDArray[np.float64], beta: float, mu: float) -> Any:
    return x ** (1.0 - beta) / (mu * (beta - 1.0))


def _transient_exponent(x: NDArray[np.float64], t: float, beta: float, mu: float) -> Any:
    return (x ** (1.0 - beta) - (x + mu * t) ** (1.0 - beta)) / (mu * (beta - 1.0))


def _scalar(value: Any) -> Any:
    return float(value) if np.ndim(value) == 0 else value


def cdf_frechet_marginal(x: ArrayLike, t: float, beta: float) -> Any:
    """P(X_t <= x) = exp(-t / x^beta)."""

    check_positive(cdf_frechet_marginal, t=t, beta=beta)

    return _scalar(np.exp(-t / _check_x(x, cdf_frechet_marginal) ** beta))


def cdf_steady_state(x: ArrayLike, beta: float, mu: float) -> Any:
    """exp(-1 / (mu (beta - 1) x^(beta - 1)))"""

    _check_law(cdf_steady_state, beta, mu)

    return _scalar(np.exp(-_steady_exponent(_check_x(x, cdf_steady_state), beta, mu)))


def cdf_transient(x: ArrayLike, t: float, beta: float, mu: float) -> Any:
    """exp(-((x / mu)^(1 - beta) - (x / mu + t)^(1 - beta)) / (mu^beta (beta - 1)))"""

    _check_law(cdf_transient, beta, mu)

    if not t >= 0.0:
        raise InvalidArgumentError('"t" must be >= 0!', cdf_transient, t)

    return _scalar(np.exp(-_transient_exponent(_check_x(x, cdf_transient), t, beta, mu)))


@dataclass(frozen=True)
class LimitLaw:
    """Closed-form law of a limit process at a fixed time; total on the real line (0 below the support)."""

    kind: LimitLawKind
    beta: float
    mu: float = 1.0
    t: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'kind', LimitLawKind.from_param(self.kind))

        if self.kind is LimitLawKind.FRECHET_MARGINAL:
            check_positive(LimitLaw, beta=self.beta, t=self.t)
        else:
            _check_law(LimitLaw, self.beta, self.mu)

            if not self.t >= 0.0:
                raise InvalidArgumentError('"t" must be >= 0!', LimitLaw, self.t)

    def _exponent(self, x: NDArray[np.float64]) -> Any:
        match self.kind:
            case LimitLawKind.FRECHET_MARGINAL:
                return self.t / x ** self.beta
            case LimitLawKind.TRANSIENT:
                return _transient_exponent(x, self.t, self.beta, self.mu)
            case LimitLawKind.STEADY_STATE:
                return _steady_exponent(x, self.beta, self.mu)

        raise NotImplementedError(self.kind)

    def cdf(self, x: ArrayLike) -> Any:
        x = np.asarray(x, dtype=np.float64)
        positive = np.maximum(x, np.finfo(np.float64).tiny)

        with np.errstate(over='ignore', divide='ignore', invalid='ignore'):
            return _scalar(np.where(x > 0.0, np.exp(-self._exponent(positive)), 0.0))

    def sf(self, x: ArrayLike) -> Any:
        x = np.asarray(x, dtype=np.float64)
        positive = np.maximum(x, np.finfo(np.float64).tiny)

        with np.errstate(over='ignore', divide='ignore', invalid='ignore'):
            return _scalar(np.where(x > 0.0, -np.expm1(-self._exponent(positive)), 1.0))

    def quantile(self, p: float) -> float:
        if not 0.0 < p < 1.0:
            raise InvalidArgumentError('"p" must lie in (0, 1)!', self.quantile, p)

        match self.kind:
            case LimitLawKind.FRECHET_MARGINAL:
                return float((self.t / -log(p)) ** (1.0 / self.beta))
            case LimitLawKind.STEADY_STATE:
                return float((1.0 / (self.mu * (self.beta - 1.0) * -log(p))) ** (1.0 / (self.beta - 1.0)))

        if self.t == 0.0:
            return 0.0

        from scipy.optimize import brentq

        # the transient law is stochastically smaller than the steady state
        hi = LimitLaw(LimitLawKind.STEADY_STATE, self.beta, self.mu).quantile(p)
        lo = 0.5 * hi

        while self.cdf(lo) >= p:
            lo *= 0.5

        return float(brentq(lambda x: self.cdf(x) - p, lo, hi, xtol=1e-14, rtol=1e-12))


def _zeta_tail(s: float, beta: float) -> float:
    """Euler-Maclaurin estimate of sum_(i >= 0) (s + i)^-beta for large s."""

    return (
        s ** (1.0 - beta) / (beta - 1.0) + 0.5 * s ** -beta
        + beta * s ** (-beta - 1.0) / 12.0
        - beta * (beta + 1.0) * (beta + 2.0) * s ** (-beta - 3.0) / 720.0
    )


def _partial_zeta(a: float, beta: float, last: int | None) -> float:
    """sum_(i=0..last) (a + i)^-beta, last = None for the full series."""

    count = _DIRECT_TERMS if last is None else min(last + 1, _DIRECT_TERMS)

    total = float(np.sum((a + np.arange(count, dtype=np.float64)) ** -beta))

    if last is None:
        total += _zeta_tail(a + count, beta)
    elif last + 1 > count:
        total += _zeta_tail(a + count, beta) - _zeta_tail(a + last + 1, beta)

    return total


def hurwitz_partial(
    x: float, beta: float, mu: float, delta: float, horizon: float | None = None
) -> float:
    """
    delta / (mu delta)^beta * sum_(i=0..I) (x / (mu delta) + i)^-beta.

    :param horizon:     Transient form with I = floor(horizon / delta); None sums the whole series.

    :return:            Exponent of the discretised limit CDF; tends to 1 / (mu (beta - 1) x^(beta - 1))
                        (or the transient exponent) as delta goes to 0.
    """

    check_positive(hurwitz_partial, x=x, mu=mu, delta=delta)

    if horizon is None and not beta > 1.0:
        raise InvalidArgumentError('The series diverges for beta <= 1!', hurwitz_partial, beta)

    check_positive(hurwitz_partial, beta=beta)

    if horizon is not None and not horizon >= 0.0:
        raise InvalidArgumentError('"horizon" must be >= 0!', hurwitz_partial, horizon)

    last = None if horizon is None else floor(horizon / delta + 1e-9)
    scale = mu * delta

    with np.errstate(over='ignore', invalid='ignore'):
        value = float(delta * np.power(scale, -beta) * _partial_zeta(x / scale, beta, last))

    if not isfinite(value):
        raise NumericError('Hurwitz sum overflowed!', hurwitz_partial, (x, beta, mu, delta), estimate=value)

    return value


class CdfBounds(NamedTuple):
    lower: float
    upper: float


def steady_state_bounds(x: float, beta: float, mu: float, delta: float) -> CdfBounds:
    """Bounds on the steady-state CDF from the discretised series: with and without its first term."""

    _check_law(steady_state_bounds, beta, mu)

    exponent = hurwitz_partial(x, beta, mu, delta)
    # i = 0 term of the series
    first = delta * x ** -beta

    return CdfBounds(float(np.exp(-exponent)), float(np.exp(-(exponent - first))))


def _check_profile(b: Sequence[float], alpha: float, func: Callable[..., Any]) -> NDArray[np.float64]:
    values = np.asarray(b, dtype=np.float64).ravel()

    if values.size < 1:
        raise InvalidArgumentError('Need at least one job size!', func)

    if not np.all(np.isfinite(values) & (values > 0.0)):
        raise InvalidArgumentError('Job sizes must be positive!', func, b)

    check_positive(func, alpha=alpha)

    return values


def holder_profile(b: Sequence[float], alpha: float) -> float:
    """
    max of sum_j z_j b_j over 0 <= z_j <= 1 with sum_j z_j^alpha <= 1.

    This is max_j b_j for alpha <= 1 and the l_(alpha / (alpha - 1)) norm of b otherwise
    (z_j^alpha <= sum_j z_j^alpha <= 1 already forces z_j <= 1).
    """

    values = _check_profile(b, alpha, holder_profile)

    if alpha <= 1.0:
        return float(values.max())

    p = alpha / (alpha - 1.0)
    top = values.max()

    return float(top * np.sum((values / top) ** p) ** (1.0 / p))


def holder_maximiser(b: Sequence[float], alpha: float) -> NDArray[np.float64]:
    """A feasible z attaining ``holder_profile``."""

    values = _check_profile(b, alpha, holder_maximiser)

    if alpha <= 1.0:
        z = np.zeros_like(values)
        z[int(np.argmax(values))] = 1.0
        return z

    p = alpha / (alpha - 1.0)

    return (values / holder_profile(values, alpha)) ** (p - 1.0)  # type: ignore[no-any-return]


def joint_cdf_decomposition(x1: float, t1: float, x2: float, t2: float, beta: float, mu: float) -> float:
    """P(V(t1) <= x1, V(t2) <= x2) of the drifted supremum V, from its transient marginals."""

    _check_law(joint_cdf_decomposition, beta, mu)
    check_positive(joint_cdf_decomposition, x1=x1, x2=x2, t1=t1)

    if not t1 < t2:
        raise InvalidArgumentError('Need t1 < t2!', joint_cdf_decomposition, (t1, t2))

    later = float(cdf_transient(x2, t2, beta, mu))

    if x2 + mu * t2 <= x1 + mu * t1:
        return later

    first = float(cdf_transient(x1, t1, beta, mu))
    shared = float(cdf_transient(x2 + mu * (t2 - t1), t1, beta, mu))

    return first / shared * later
