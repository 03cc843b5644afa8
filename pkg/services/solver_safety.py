"""
Robust numeric solving: damped Gauss-Newton, restarts and a divergence breaker.
Multi-start searches stop early when too many starts in a row diverge.
"""

import logging
from dataclasses import dataclass, field
from functools import wraps
from typing import Callable, Optional, ParamSpec, Tuple, Type, TypeVar

import numpy as np

from services.errors import SolverDivergenceError

logger = logging.getLogger(__name__)

P = ParamSpec('P')
T = TypeVar('T')

ResidualFn = Callable[[np.ndarray], np.ndarray]


@dataclass
class SolverLimits:
    """Iteration and restart limits for Newton-type solves."""
    max_iterations: int = 80
    tolerance: float = 1e-13
    fd_step: float = 1e-7
    min_damping: float = 1.0 / 1024
    blowup_norm: float = 1e8
    max_starts: int = 400
    max_attempts: int = 3
    breaker_threshold: int = 150


class DivergenceBreaker:
    """Opens after too many consecutive divergent starts."""

    def __init__(self, threshold: int = 150):
        self.threshold = threshold
        self.failure_count = 0
        self.total_failures = 0
        self.is_open = False

    def record_failure(self) -> None:
        self.failure_count += 1
        self.total_failures += 1
        if self.failure_count >= self.threshold and not self.is_open:
            self.is_open = True
            logger.warning(
                f"Divergence breaker OPENED after {self.failure_count} consecutive failed starts"
            )

    def record_success(self) -> None:
        self.failure_count = 0

    def can_continue(self) -> bool:
        return not self.is_open


def with_restarts(
    max_attempts: int = 3,
    retry_on: Tuple[Type[Exception], ...] = (SolverDivergenceError,),
):
    """
    Decorator that re-runs a randomized solve when it fails.

    The wrapped function is expected to draw a fresh start on every call
    (e.g. from a generator passed in its arguments).

    Args:
        max_attempts: Maximum number of attempts
        retry_on: Exception types that trigger a restart
    """
    def decorator(func: Callable[P, T]) -> Callable[P, T]:
        @wraps(func)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
            last_exception: Optional[Exception] = None
            for attempt in range(1, max_attempts + 1):
                try:
                    return func(*args, **kwargs)
                except retry_on as e:
                    last_exception = e
                    if attempt < max_attempts:
                        logger.debug(
                            f"Attempt {attempt}/{max_attempts} failed for {func.__name__}: {e}. "
                            f"Retrying..."
                        )
                    else:
                        logger.warning(f"All {max_attempts} attempts failed for {func.__name__}: {e}")
            raise last_exception
        return wrapper
    return decorator


# ============================================
# GAUSS-NEWTON
# ============================================

@dataclass
class SolveResult:
    x: np.ndarray
    residual: float
    iterations: int
    history: list = field(default_factory=list)


def numeric_jacobian(fn: ResidualFn, x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference Jacobian of a holomorphic residual map."""
    base = np.asarray(fn(x))
    jac = np.zeros((base.size, x.size), dtype=complex)
    for k in range(x.size):
        step = np.zeros(x.size, dtype=complex)
        step[k] = h
        jac[:, k] = (np.asarray(fn(x + step)) - np.asarray(fn(x - step))) / (2 * h)
    return jac


def gauss_newton(
    fn: ResidualFn,
    x0: np.ndarray,
    limits: Optional[SolverLimits] = None,
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> SolveResult:
    """
    Damped Gauss-Newton with least-squares steps and backtracking.

    Works for over- and underdetermined systems; the minimum-norm step is used.

    Raises:
        SolverDivergenceError: Blow-up, failed line search or no convergence
    """
    limits = limits or SolverLimits()
    x = np.asarray(x0, dtype=complex).copy()
    r = np.asarray(fn(x), dtype=complex)
    norm = float(np.linalg.norm(r))
    history = [norm]
    for iteration in range(1, limits.max_iterations + 1):
        if norm < limits.tolerance:
            return SolveResult(x, float(np.max(np.abs(r))), iteration - 1, history)
        jac = jacobian(x) if jacobian else numeric_jacobian(fn, x, limits.fd_step)
        step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        damping = 1.0
        while damping >= limits.min_damping:
            candidate = x + damping * step
            r_new = np.asarray(fn(candidate), dtype=complex)
            new_norm = float(np.linalg.norm(r_new))
            if np.isfinite(new_norm) and new_norm < norm:
                break
            damping /= 2
        else:
            if norm < 1e3 * limits.tolerance:
                break
            raise SolverDivergenceError(
                f"Line search failed at iteration {iteration} (residual {norm:.3e})",
                {"iteration": iteration, "residual": norm},
            )
        x, r, norm = candidate, r_new, new_norm
        history.append(norm)
        if np.linalg.norm(x) > limits.blowup_norm:
            raise SolverDivergenceError(
                f"Iterate blew up at iteration {iteration}",
                {"iteration": iteration, "norm": float(np.linalg.norm(x))},
            )
        if np.linalg.norm(damping * step) < 1e-15 * max(1.0, float(np.linalg.norm(x))):
            break
    residual = float(np.max(np.abs(r))) if r.size else 0.0
    if residual > max(limits.tolerance, 1e-9):
        raise SolverDivergenceError(
            f"No convergence after {limits.max_iterations} iterations (residual {residual:.3e})",
            {"residual": residual, "iterations": limits.max_iterations},
        )
    return SolveResult(x, residual, len(history) - 1, history)


def random_complex(rng: np.random.Generator, size: int, scale: float = 2.0) -> np.ndarray:
    """Random start with dyadic rational parts, reproducible from the generator."""
    re = rng.integers(-8, 9, size=size) / 8.0 * scale
    im = rng.integers(-8, 9, size=size) / 8.0 * scale
    return re + 1j * im
