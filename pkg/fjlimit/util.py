from __future__ import annotations

import logging
import os

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Iterable, Sequence, TypeVar

import numpy as np

from numpy.random import Generator, Philox, SeedSequence
from numpy.typing import ArrayLike, NDArray

from .exceptions import BudgetError, InvalidArgumentError

__all__ = [
    'DEFAULT_BUDGET', 'THREADS_ENV',
    'replication_stream', 'open_uniform',
    'check_open_unit', 'check_positive',
    'check_budget', 'chunk_rows',
    'worker_count', 'fan_out', 'stack_rows',
    'time_grid'
]

logger = logging.getLogger(__name__)

T = TypeVar('T')

DEFAULT_BUDGET = 2 ** 33
"""Server-job updates allowed per invocation."""

THREADS_ENV = 'FJLIMIT_THREADS'

_CHUNK_ELEMENTS = 2 ** 22


def replication_stream(seed: int, index: int = 0) -> Generator:
    """Counter-based Philox stream of replication ``index`` under master ``seed``."""

    if seed < 0 or index < 0:
        raise InvalidArgumentError('Seed and replication index must be >= 0!', replication_stream, (seed, index))

    return Generator(Philox(SeedSequence(seed, spawn_key=(index,))))


def open_uniform(rng: Generator, size: int | tuple[int, ...] | None = None) -> Any:
    """Uniform variates on the open interval (0, 1), on a 2^-52 lattice shifted by half a step."""

    return (rng.integers(0, 2 ** 52, size=size) + 0.5) * 2.0 ** -52


def check_open_unit(u: ArrayLike, func: Callable[..., Any]) -> NDArray[np.float64]:
    arr = np.asarray(u, dtype=np.float64)

    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise InvalidArgumentError('Uniform variates must lie in the open interval (0, 1)!', func, u)

    return arr


def check_positive(func: Callable[..., Any], **values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise InvalidArgumentError(f'"{name}" must be > 0!', func, value)


def check_budget(updates: int, budget: int | None, func: Callable[..., Any]) -> None:
    budget = DEFAULT_BUDGET if budget is None else budget

    if updates > budget:
        raise BudgetError(
            'Run needs {updates} server-job updates, over the budget of {budget}!', func,
            'raise --budget or shrink the run', requested=updates, budget=budget,
            updates=updates
        )


def chunk_rows(n_servers: int, total: int) -> int:
    """Rows (jobs) per block so one block holds about 4M server entries."""

    return max(1, min(total, _CHUNK_ELEMENTS // max(1, n_servers)))


def worker_count(requested: int | None = None) -> int:
    if requested is None:
        value = os.environ.get(THREADS_ENV, '1').strip() or '1'

        try:
            requested = int(value)
        except ValueError:
            raise InvalidArgumentError(
                '"{env}" must be an integer!', worker_count, value, env=THREADS_ENV
            ) from None

    return max(1, min(requested, os.cpu_count() or 1))


def fan_out(
    worker: Callable[[int], T], indices: Iterable[int], workers: int | None = None
) -> list[T]:
    """
    Run ``worker`` over replication indices, merged back in index order.

    :param worker:      Picklable callable taking a replication index.
    :param indices:     Replication indices.
    :param workers:     Process count; defaults to ``FJLIMIT_THREADS`` (1 runs in-process).

    :return:            Results ordered by index.
    """

    indices = list(indices)
    workers = worker_count(workers)

    if workers == 1 or len(indices) < 2:
        return [worker(i) for i in indices]

    logger.debug('fanning %d replications over %d processes', len(indices), workers)

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, indices, chunksize=max(1, len(indices) // (4 * workers))))


def stack_rows(rows: Sequence[NDArray[np.float64]]) -> NDArray[np.float64]:
    if not rows:
        return np.empty((0, 0), dtype=np.float64)

    return np.vstack(rows)


def time_grid(horizon: float, step: float) -> NDArray[np.float64]:
    """Times 0, step, 2 step, ... up to ``horizon``, with ``horizon`` itself always included."""

    check_positive(time_grid, horizon=horizon, step=step)

    if step > horizon:
        raise InvalidArgumentError('Grid step must not exceed the horizon!', time_grid, (step, horizon))

    grid = step * np.arange(int(horizon / step + 1e-9) + 1, dtype=np.float64)

    if horizon - grid[-1] > 1e-9 * horizon:
        grid = np.append(grid, horizon)

    return grid
