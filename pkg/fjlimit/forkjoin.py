from __future__ import annotations

import logging

from dataclasses import dataclass, field
from functools import cached_property
from math import ceil
from typing import Any, NamedTuple

import numpy as np

from numpy.random import Generator
from numpy.typing import ArrayLike, NDArray

from .distributions import BoundedLaw, InterarrivalLaw, RegVarLaw, WeibullLaw
from .enum import FiniteSupportMode, InterarrivalKind
from .exceptions import InvalidArgumentError
from .scaling import ScalingConstants, scaling_constants
from .stats import EmpiricalDistribution, KsReport, effective_sample_size, two_sample_ks
from .util import check_budget, check_positive, chunk_rows, fan_out, replication_stream, stack_rows, time_grid

__all__ = [
    'ModelParams', 'ServerState', 'TrajectoryBatch',
    'JobDraws', 'draw_jobs',
    'step', 'lindley_block', 'auxiliary_block',
    'simulate_max_wait', 'simulate_auxiliary', 'simulate_steady_state',
    'FiniteSupportComparison', 'simulate_finite_support'
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelParams:
    """The pre-limit system: N servers, server factors A, common job sizes B and interarrivals T."""

    weibull: WeibullLaw
    regvar: RegVarLaw
    interarrival: InterarrivalLaw
    n_servers: int

    def __post_init__(self) -> None:
        if self.n_servers < 1:
            raise InvalidArgumentError('Need at least one server!', ModelParams, self.n_servers)

        if not self.mu > 0.0:
            raise InvalidArgumentError(
                'E[T] must exceed E[A] E[B] for a negative drift!', ModelParams,
                f'E[T]={self.interarrival.mean!r}, E[A]E[B]={self.weibull.mean * self.regvar.mean!r}'
            )

    @classmethod
    def with_drift(
        cls, weibull: WeibullLaw, regvar: RegVarLaw, mu: float, n_servers: int,
        interarrival: InterarrivalKind | str = InterarrivalKind.EXPONENTIAL
    ) -> ModelParams:
        """Build the model whose interarrival mean is E[A] E[B] + mu."""

        check_positive(cls.with_drift, mu=mu)

        kind = InterarrivalKind.from_param(interarrival)

        return cls(weibull, regvar, kind(weibull.mean * regvar.mean + mu), n_servers)

    @property
    def mu(self) -> float:
        return self.interarrival.mean - self.weibull.mean * self.regvar.mean

    @cached_property
    def scaling(self) -> ScalingConstants:
        return scaling_constants(self.n_servers, self.weibull, self.regvar)

    def as_dict(self) -> dict[str, Any]:
        return {
            'alpha': self.weibull.alpha, 'q': self.weibull.q,
            'beta': self.regvar.beta, 'L': str(self.regvar.L),
            'mu': self.mu, 'interarrival': self.interarrival.kind.name.lower(),
            'n_servers': self.n_servers
        }


@dataclass(frozen=True)
class ServerState:
    waits: NDArray[np.float64]

    def __post_init__(self) -> None:
        waits = np.asarray(self.waits, dtype=np.float64)

        if waits.ndim != 1 or np.any(waits < 0.0):
            raise InvalidArgumentError('Waits must be a vector of nonnegative reals!', ServerState)

        object.__setattr__(self, 'waits', waits)

    @classmethod
    def empty(cls, n_servers: int) -> ServerState:
        return cls(np.zeros(n_servers))

    @property
    def max(self) -> float:
        return float(self.waits.max())


@dataclass(frozen=True)
class TrajectoryBatch:
    """Replicated sample paths on a common time grid, one row per replication."""

    grid: NDArray[np.float64]
    values: NDArray[np.float64]
    seed: int
    scaling: ScalingConstants | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.values.ndim != 2 or self.values.shape[1] != self.grid.size:
            raise InvalidArgumentError(
                'Values must be a replication x grid matrix!', TrajectoryBatch, (self.values.shape, self.grid.size)
            )

        if not np.all(np.isfinite(self.values)):
            raise InvalidArgumentError('Trajectory values must be finite!', TrajectoryBatch)

    @property
    def replications(self) -> int:
        return int(self.values.shape[0])

    def column(self, t: float) -> int:
        """Index of grid time ``t``."""

        index = int(np.argmin(np.abs(self.grid - t)))

        if abs(self.grid[index] - t) > 1e-9 * max(1.0, abs(t)):
            raise InvalidArgumentError('{t} is not a grid time!', self.column, t=t)

        return index

    def at(self, t: float) -> EmpiricalDistribution:
        return EmpiricalDistribution.from_samples(self.values[:, self.column(t)])

    def endpoint(self) -> EmpiricalDistribution:
        return EmpiricalDistribution.from_samples(self.values[:, -1])

    def sup_distance(self, other: TrajectoryBatch) -> NDArray[np.float64]:
        """Per replication, the largest gap |self - other| over the common grid."""

        if self.values.shape != other.values.shape or not np.allclose(self.grid, other.grid):
            raise InvalidArgumentError(
                'Batches must share their grid and replications!', self.sup_distance,
                (self.values.shape, other.values.shape)
            )

        return np.asarray(np.abs(self.values - other.values).max(axis=1), dtype=np.float64)


class JobDraws(NamedTuple):
    a: NDArray[np.float64]
    """jobs x servers server factors"""
    b: NDArray[np.float64]
    t: NDArray[np.float64]

    @property
    def increments(self) -> NDArray[np.float64]:
        return self.a * self.b[:, None] - self.t[:, None]


def draw_jobs(
    server: WeibullLaw | BoundedLaw, regvar: RegVarLaw, interarrival: InterarrivalLaw,
    n_servers: int, rng: Generator, jobs: int
) -> JobDraws:
    """Draw ``jobs`` shared (B, T) pairs, then the jobs x servers factors, in that order."""

    b = regvar.draw(rng, jobs)
    t = interarrival.draw(rng, jobs)

    return JobDraws(server.draw(rng, (jobs, n_servers)), b, t)


def step(state: ServerState, a: ArrayLike, b: float, t: float) -> ServerState:
    """One Lindley update W_i <- max(0, W_i + a_i b - t) on every server."""

    a = np.asarray(a, dtype=np.float64)

    if a.shape != state.waits.shape:
        raise InvalidArgumentError('Need one factor per server!', step, (a.shape, state.waits.shape))

    return ServerState(np.maximum(0.0, state.waits + a * b - t))


def lindley_block(
    waits: NDArray[np.float64], increments: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Run the Lindley recursion over a block of jobs on all servers at once.

    Uses W_n = S_n - min(-W_0, S_1, ..., S_n) with S the cumulative increments of the block.

    :param waits:       Waits before the block, one per server.
    :param increments:  jobs x servers increments A B - T.

    :return:            Max over servers after each job, and the waits after the block.
    """

    sums = np.cumsum(increments, axis=0)
    floor = np.minimum(np.minimum.accumulate(sums, axis=0), -waits)
    block = sums - floor

    return block.max(axis=1), block[-1].copy()


def auxiliary_block(
    sums: NDArray[np.float64], running: float, increments: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64], float]:
    """
    Free (never reset) server sums over a block of jobs.

    :return:    Running max over time of max_i S_i after each job, the sums after the block
                and the running max carried into the next block.
    """

    block = sums + np.cumsum(increments, axis=0)
    peaks = np.maximum(running, np.maximum.accumulate(block.max(axis=1)))

    return peaks, block[-1].copy(), float(peaks[-1])


@dataclass(frozen=True)
class _PathWorker:
    params: ModelParams
    jobs: int
    sample_jobs: NDArray[np.int64]
    c_n: float
    seed: int
    auxiliary: bool

    def __call__(self, index: int) -> NDArray[np.float64]:
        rng = replication_stream(self.seed, index)
        p = self.params

        maxima = np.zeros(self.jobs + 1)
        sums, running = np.zeros(p.n_servers), 0.0
        rows = chunk_rows(p.n_servers, self.jobs)

        for start in range(0, self.jobs, rows):
            size = min(rows, self.jobs - start)
            increments = draw_jobs(p.weibull, p.regvar, p.interarrival, p.n_servers, rng, size).increments

            if self.auxiliary:
                block, sums, running = auxiliary_block(sums, running, increments)
            else:
                block, sums = lindley_block(sums, increments)

            maxima[start + 1:start + 1 + size] = block

        return maxima[self.sample_jobs] / self.c_n


def _simulate_paths(
    params: ModelParams, horizon: float, grid_step: float, replications: int, seed: int,
    budget: int | None, scaling: ScalingConstants | None, workers: int | None, auxiliary: bool
) -> TrajectoryBatch:
    func = simulate_auxiliary if auxiliary else simulate_max_wait

    check_positive(func, replications=replications)

    scaling = params.scaling if scaling is None else scaling
    grid = time_grid(horizon, grid_step)
    jobs = scaling.jobs(horizon)

    if jobs < 1:
        raise InvalidArgumentError('horizon * c_N must cover at least one job!', func, (horizon, scaling.c_n))

    check_budget(params.n_servers * jobs * replications, budget, func)

    sample_jobs = np.array([scaling.jobs(t) for t in grid], dtype=np.int64)

    logger.debug(
        '%s: N=%d jobs=%d replications=%d rows/block=%d', func.__name__, params.n_servers, jobs,
        replications, chunk_rows(params.n_servers, jobs)
    )

    worker = _PathWorker(params, jobs, sample_jobs, scaling.c_n, seed, auxiliary)
    values = stack_rows(fan_out(worker, range(replications), workers))

    return TrajectoryBatch(
        grid, values, seed, scaling,
        {'process': 'auxiliary' if auxiliary else 'max_wait', 'params': params.as_dict(), 'jobs': jobs}
    )


def simulate_max_wait(
    params: ModelParams, horizon: float, grid_step: float, replications: int, seed: int = 0,
    *, budget: int | None = None, scaling: ScalingConstants | None = None, workers: int | None = None
) -> TrajectoryBatch:
    """
    Scaled maximum waiting time max_i W_i(t c_N) / c_N sampled on a time grid.

    :param params:          Model.
    :param horizon:         Scaled horizon T; floor(T c_N) jobs are simulated.
    :param grid_step:       Spacing of the recording grid in scaled time.
    :param replications:    Independent replications.
    :param seed:            Master seed; replication r uses the stream (seed, r).
    :param budget:          Cap on server-job updates (N x jobs x replications).
    :param scaling:         Override of the model's scaling constants.
    :param workers:         Worker processes; defaults to ``FJLIMIT_THREADS``.
    """

    return _simulate_paths(params, horizon, grid_step, replications, seed, budget, scaling, workers, False)


def simulate_auxiliary(
    params: ModelParams, horizon: float, grid_step: float, replications: int, seed: int = 0,
    *, budget: int | None = None, scaling: ScalingConstants | None = None, workers: int | None = None
) -> TrajectoryBatch:
    """Running supremum over time of max_i S_i / c_N, S_i the never-reset server sums."""

    return _simulate_paths(params, horizon, grid_step, replications, seed, budget, scaling, workers, True)


def simulate_steady_state(
    params: ModelParams, warmup_jobs: int | None = None, samples: int = 1000,
    sample_gap_jobs: int | None = None, seed: int = 0, *, budget: int | None = None,
    scaling: ScalingConstants | None = None, enforce_warmup: bool = True
) -> EmpiricalDistribution:
    """
    Long-run samples of max_i W_i / c_N from a single chain.

    :param warmup_jobs:         Jobs discarded first; defaults to ceil(10 c_N).
    :param samples:             Recorded values.
    :param sample_gap_jobs:     Jobs between recorded values; defaults to ceil(c_N).
    :param enforce_warmup:      Reject warmups shorter than 10 c_N.

    :return:                    Sample tagged with its batch-means effective size.
    """

    scaling = params.scaling if scaling is None else scaling

    warmup = ceil(10.0 * scaling.c_n) if warmup_jobs is None else warmup_jobs
    gap = max(1, ceil(scaling.c_n)) if sample_gap_jobs is None else sample_gap_jobs

    check_positive(simulate_steady_state, samples=samples, sample_gap_jobs=gap)

    if warmup < 0 or (enforce_warmup and warmup < 10.0 * scaling.c_n):
        raise InvalidArgumentError(
            'Warmup of {warmup} jobs is shorter than 10 c_N = {need}!', simulate_steady_state,
            'pass enforce_warmup=False to override', warmup=warmup, need=10.0 * scaling.c_n
        )

    total = warmup + samples * gap

    check_budget(params.n_servers * total, budget, simulate_steady_state)

    rng = replication_stream(seed, 0)
    rows = chunk_rows(params.n_servers, total)
    waits = np.zeros(params.n_servers)
    recorded = list[NDArray[np.float64]]()

    for start in range(0, total, rows):
        size = min(rows, total - start)
        draws = draw_jobs(params.weibull, params.regvar, params.interarrival, params.n_servers, rng, size)

        block, waits = lindley_block(waits, draws.increments)

        job = np.arange(start + 1, start + size + 1)
        recorded.append(block[(job > warmup) & ((job - warmup) % gap == 0)])

    values = np.concatenate(recorded) / scaling.c_n
    ess = effective_sample_size(values)

    logger.debug('steady state: warmup=%d gap=%d samples=%d ess=%.1f', warmup, gap, values.size, ess)

    return EmpiricalDistribution.from_samples(values, ess)


class FiniteSupportComparison(NamedTuple):
    max_system: EmpiricalDistribution
    """max over servers of the A-driven sums"""
    reference: EmpiricalDistribution
    """single system with A fixed at the right endpoint, on the same (B, T) draws"""

    def ks(self) -> KsReport:
        return two_sample_ks(self.max_system, self.reference)


@dataclass(frozen=True)
class _FiniteSupportWorker:
    bounded: BoundedLaw
    regvar: RegVarLaw
    interarrival: InterarrivalLaw
    n_servers: int
    jobs: int
    seed: int
    supremum: bool

    def __call__(self, index: int) -> tuple[float, float]:
        rng = replication_stream(self.seed, index)

        sums, running = np.zeros(self.n_servers), 0.0
        ref_sum, ref_running = 0.0, 0.0

        rows = chunk_rows(self.n_servers, self.jobs)

        for start in range(0, self.jobs, rows):
            draws = draw_jobs(
                self.bounded, self.regvar, self.interarrival, self.n_servers, rng, min(rows, self.jobs - start)
            )

            _, sums, running = auxiliary_block(sums, running, draws.increments)

            ref = ref_sum + np.cumsum(self.bounded.endpoint * draws.b - draws.t)
            ref_sum, ref_running = float(ref[-1]), max(ref_running, float(ref.max()))

        if self.supremum:
            return running, ref_running

        return float(sums.max()), ref_sum


def simulate_finite_support(
    bounded: BoundedLaw, regvar: RegVarLaw, interarrival: InterarrivalLaw, n_servers: int,
    jobs: int, replications: int, seed: int = 0, mode: FiniteSupportMode | str = FiniteSupportMode.FIXED,
    *, budget: int | None = None, workers: int | None = None
) -> FiniteSupportComparison:
    """
    Compare max_i of k-job sums driven by a bounded server factor with the system where A equals
    its right endpoint b. Both sides share every (B, T) draw.

    :param jobs:    k; zero gives point masses at 0.
    :param mode:    Sum over exactly k jobs, or the supremum over 0..k jobs.
    """

    mode = FiniteSupportMode.from_param(mode)

    check_positive(simulate_finite_support, n_servers=n_servers, replications=replications)

    if jobs < 0:
        raise InvalidArgumentError('"jobs" must be >= 0!', simulate_finite_support, jobs)

    if mode is FiniteSupportMode.SUPREMUM and not bounded.endpoint * regvar.mean < interarrival.mean:
        raise InvalidArgumentError(
            'The supremum needs E[b B - T] < 0!', simulate_finite_support,
            f'b E[B]={bounded.endpoint * regvar.mean!r}, E[T]={interarrival.mean!r}'
        )

    check_budget(n_servers * jobs * replications, budget, simulate_finite_support)

    worker = _FiniteSupportWorker(
        bounded, regvar, interarrival, n_servers, jobs, seed, mode is FiniteSupportMode.SUPREMUM
    )
    pairs = np.array(fan_out(worker, range(replications), workers), dtype=np.float64).reshape(-1, 2)

    return FiniteSupportComparison(
        EmpiricalDistribution.from_samples(pairs[:, 0]), EmpiricalDistribution.from_samples(pairs[:, 1])
    )
