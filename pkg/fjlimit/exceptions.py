from __future__ import annotations

from typing import Any, Callable

__all__ = [
    'FJLimitError',
    'InvalidArgumentError',
    'ConvergenceError', 'NumericError',
    'BudgetError'
]


class FJLimitError(Exception):
    """Base of every error raised by fjlimit."""

    def __init__(
        self, message: str, func: Callable[..., Any] | str | None = None, reason: Any = None, **kwargs: Any
    ) -> None:
        self.message = message.format(**kwargs) if kwargs else message
        self.func = func
        self.reason = reason

        super().__init__(self._render())

    def _render(self) -> str:
        out = self.message

        if self.func is not None:
            name = self.func if isinstance(self.func, str) else getattr(self.func, '__qualname__', repr(self.func))
            out = f'({name}) {out}'

        if self.reason is not None:
            out = f'{out} ({self.reason})'

        return out


class InvalidArgumentError(FJLimitError, ValueError):
    """An argument is outside the domain of the operation."""


class ConvergenceError(FJLimitError, ArithmeticError):
    """An iterative solve hit its iteration cap."""

    def __init__(
        self, message: str, func: Callable[..., Any] | str | None = None, reason: Any = None,
        *, last_iterate: float = float('nan'), residual: float = float('nan'), iterations: int = 0, **kwargs: Any
    ) -> None:
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations

        super().__init__(message, func, reason, **kwargs)


class NumericError(FJLimitError, ArithmeticError):
    """Quadrature or summation did not reach the requested accuracy."""

    def __init__(
        self, message: str, func: Callable[..., Any] | str | None = None, reason: Any = None,
        *, estimate: float = float('nan'), error: float = float('nan'), **kwargs: Any
    ) -> None:
        self.estimate = estimate
        self.error = error

        super().__init__(message, func, reason, **kwargs)


class BudgetError(FJLimitError, RuntimeError):
    """A simulation would exceed the server-job update budget."""

    def __init__(
        self, message: str, func: Callable[..., Any] | str | None = None, reason: Any = None,
        *, requested: int = 0, budget: int = 0, **kwargs: Any
    ) -> None:
        self.requested = requested
        self.budget = budget

        super().__init__(message, func, reason, **kwargs)
