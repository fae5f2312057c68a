from __future__ import annotations

import logging

from dataclasses import dataclass
from math import exp, expm1, isfinite, log
from typing import Iterable, NamedTuple, Sequence

from .distributions import RegVarLaw, WeibullLaw
from .enum import ConjugateOrder
from .exceptions import ConvergenceError, InvalidArgumentError
from .util import check_positive

__all__ = [
    'ScalingConstants',
    'compute_b', 'solve_c', 'fixed_point_residual',
    'scaling_constants', 'scaling_table',
    'ConjugateResidual', 'conjugate_candidate', 'verify_conjugate'
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScalingConstants:
    """Extreme-value scale b_N and the joint time/space scale c_N (in jobs)."""

    n_servers: int
    b_n: float
    c_n: float
    residual: float
    iterations: int

    @property
    def ratio(self) -> float:
        """c_N / b_N, the scale of the largest job size over c_N jobs."""

        return self.c_n / self.b_n

    def jobs(self, t: float) -> int:
        """Job index floor(t c_N) of scaled time t."""

        return int(t * self.c_n + 1e-9)


def compute_b(n_servers: int, law: WeibullLaw) -> float:
    if n_servers < 2:
        raise InvalidArgumentError('Need at least 2 servers for log N > 0!', compute_b, n_servers)

    return (log(n_servers) / law.q) ** (1.0 / law.alpha)


def fixed_point_residual(c_n: float, b_n: float, reg: RegVarLaw) -> float:
    """|c L(c/b) / (c/b)^beta - 1|, the defect of c = (c/b)^beta / L(c/b)."""

    log_ratio = log(c_n) - log(b_n)

    return abs(expm1(log(c_n) + float(reg.L.log_at(log_ratio)) - reg.beta * log_ratio))


def solve_c(
    b_n: float, reg: RegVarLaw, *, n_servers: int = 0,
    damping: float = 0.5, rtol: float = 1e-10, max_iter: int = 500
) -> ScalingConstants:
    """
    Solve c = (c / b)^beta / L(c / b) for c.

    Iterates the equivalent map log c <- (beta log b + log L(c / b)) / (beta - 1) in log space,
    damped by ``damping``, starting from the L = 1 solution b^(beta / (beta - 1)).

    :param b_n:         Weibull extreme scale b_N.
    :param reg:         Job-size law supplying beta and L.
    :param n_servers:   Only recorded in the result.
    :param damping:     Weight of the new iterate.
    :param rtol:        Stop once successive c differ by this relative amount.
    :param max_iter:    Iteration cap.

    :return:            Scaling constants with the fixed-point residual.
    """

    check_positive(solve_c, b_n=b_n)

    beta, log_b = reg.beta, log(b_n)

    y = beta * log_b / (beta - 1.0)

    for iteration in range(1, max_iter + 1):
        target = (beta * log_b + float(reg.L.log_at(y - log_b))) / (beta - 1.0)
        step = damping * (target - y)
        y += step

        logger.debug('solve_c: iteration=%d log c=%r step=%r', iteration, y, step)

        if abs(step) <= rtol:
            break
    else:
        raise ConvergenceError(
            'Fixed point for c_N did not converge in {max_iter} iterations!', solve_c, b_n,
            last_iterate=exp(y), residual=fixed_point_residual(exp(y), b_n, reg), iterations=max_iter,
            max_iter=max_iter
        )

    c_n = exp(y)

    if not isfinite(c_n) or c_n <= b_n:
        raise InvalidArgumentError(
            'c_N / b_N must exceed 1; N is too small for the scaling regime!', solve_c, f'c_N={c_n!r}, b_N={b_n!r}'
        )

    return ScalingConstants(n_servers, b_n, c_n, fixed_point_residual(c_n, b_n, reg), iteration)


def scaling_constants(n_servers: int, weibull: WeibullLaw, regvar: RegVarLaw) -> ScalingConstants:
    return solve_c(compute_b(n_servers, weibull), regvar, n_servers=n_servers)


def scaling_table(n_values: Iterable[int], weibull: WeibullLaw, regvar: RegVarLaw) -> list[ScalingConstants]:
    return [scaling_constants(n, weibull, regvar) for n in n_values]


class ConjugateResidual(NamedTuple):
    x: float
    candidate: float
    residual: float


def _log_candidate(log_x: float, reg: RegVarLaw, order: ConjugateOrder) -> float:
    k = 1.0 / (reg.beta - 1.0)

    inner = k * log_x

    if order is ConjugateOrder.SECOND:
        inner += k * float(reg.L.log_at(inner))

    return k * float(reg.L.log_at(inner))


def _check_x(x: float, func: object) -> float:
    if not x >= 1.0:
        raise InvalidArgumentError('Candidates are defined for x >= 1!', func, x)  # type: ignore[arg-type]

    return log(x)


def conjugate_candidate(x: float, reg: RegVarLaw, order: int | ConjugateOrder = ConjugateOrder.FIRST) -> float:
    """Explicit candidate for the slowly varying conjugate of L, of order 1 or 2."""

    return exp(_log_candidate(_check_x(x, conjugate_candidate), reg, ConjugateOrder(order)))


def verify_conjugate(
    reg: RegVarLaw, order: int | ConjugateOrder, x_grid: Sequence[float]
) -> list[ConjugateResidual]:
    """Residual |L~(x) / L(L~(x) x^(1/(beta-1)))^(1/(beta-1)) - 1| of a candidate along ``x_grid``."""

    order = ConjugateOrder(order)

    if any(b <= a for a, b in zip(x_grid, x_grid[1:])):
        raise InvalidArgumentError('"x_grid" must be strictly increasing!', verify_conjugate)

    k = 1.0 / (reg.beta - 1.0)

    table = list[ConjugateResidual]()

    for x in x_grid:
        log_x = _check_x(x, verify_conjugate)
        log_cand = _log_candidate(log_x, reg, order)

        defect = log_cand - k * float(reg.L.log_at(log_cand + k * log_x))

        table.append(ConjugateResidual(x, exp(log_cand), abs(expm1(defect))))

    return table
