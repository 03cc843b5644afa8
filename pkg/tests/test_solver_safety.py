import numpy as np
import pytest

from services.errors import SolverDivergenceError
from services.solver_safety import DivergenceBreaker, SolverLimits, gauss_newton, random_complex, with_restarts


def test_gauss_newton_finds_a_root():
    result = gauss_newton(lambda x: np.array([x[0] ** 2 - 4]), np.array([1.5 + 0.1j]))
    assert abs(result.x[0] - 2) < 1e-10
    assert result.residual < 1e-9


def test_gauss_newton_underdetermined():
    result = gauss_newton(lambda x: np.array([x[0] * x[1] - 1]), np.array([0.5 + 0j, 0.5 + 0j]))
    assert abs(result.x[0] * result.x[1] - 1) < 1e-10


def test_inconsistent_system_diverges():
    with pytest.raises(SolverDivergenceError):
        gauss_newton(lambda x: np.array([x[0] - 1, x[0] - 2]), np.array([0j]))


def test_breaker_opens_after_threshold():
    breaker = DivergenceBreaker(threshold=3)
    breaker.record_failure()
    breaker.record_failure()
    breaker.record_success()
    breaker.record_failure()
    breaker.record_failure()
    assert breaker.can_continue()
    breaker.record_failure()
    assert not breaker.can_continue()
    assert breaker.total_failures == 5


def test_with_restarts_retries():
    calls = []

    @with_restarts(max_attempts=3)
    def flaky():
        calls.append(1)
        if len(calls) < 3:
            raise SolverDivergenceError("diverged")
        return "ok"

    assert flaky() == "ok"
    assert len(calls) == 3


def test_with_restarts_reraises():
    @with_restarts(max_attempts=2)
    def hopeless():
        raise SolverDivergenceError("diverged")

    with pytest.raises(SolverDivergenceError):
        hopeless()


def test_random_starts_are_reproducible():
    a = random_complex(np.random.default_rng(7), 4)
    b = random_complex(np.random.default_rng(7), 4)
    assert np.array_equal(a, b)
    assert SolverLimits().max_attempts == 3
