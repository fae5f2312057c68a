from __future__ import annotations

import pytest

from fjlimit import InterarrivalKind, ModelParams, RegVarLaw, ScalingConstants, SlowlyVarying, WeibullLaw


@pytest.fixture
def weibull() -> WeibullLaw:
    return WeibullLaw(0.8, 1.0)


@pytest.fixture
def pareto() -> RegVarLaw:
    return RegVarLaw(2.0, SlowlyVarying.CONSTANT(1.0))


@pytest.fixture
def small_model(weibull: WeibullLaw, pareto: RegVarLaw) -> ModelParams:
    return ModelParams.with_drift(weibull, pareto, 1.0, 8)


@pytest.fixture
def model_factory(weibull: WeibullLaw, pareto: RegVarLaw):  # type: ignore[no-untyped-def]
    def make(n_servers: int, mu: float = 1.0, kind: InterarrivalKind = InterarrivalKind.EXPONENTIAL) -> ModelParams:
        return ModelParams.with_drift(weibull, pareto, mu, n_servers, kind)

    return make


@pytest.fixture
def unit_scaling():  # type: ignore[no-untyped-def]
    """Scaling override that makes grid time t land on job t c_N."""

    def make(n_servers: int, c_n: float) -> ScalingConstants:
        return ScalingConstants(n_servers, 1.0, c_n, 0.0, 0)

    return make
