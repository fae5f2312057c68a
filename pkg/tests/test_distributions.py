from __future__ import annotations

from math import exp, gamma, log

import numpy as np
import pytest

from hypothesis import given
from hypothesis import strategies as st

from fjlimit import (
    BoundedKind, FrechetLaw, InterarrivalKind, InvalidArgumentError, RegVarLaw, SlowlyVarying, WeibullFactorLaw,
    WeibullLaw, dkw_band, ks_against, mean_of, replication_stream, sample_frechet, sample_regvar, sample_weibull
)
from fjlimit.stats import EmpiricalDistribution

unit = st.floats(1e-6, 1.0 - 1e-6)


class TestWeibull:
    def test_examples(self) -> None:
        assert sample_weibull(WeibullLaw(0.5, 1.0), exp(-1.0)) == pytest.approx(1.0, rel=1e-12)
        assert sample_weibull(WeibullLaw(0.5, 1.0), exp(-4.0)) == pytest.approx(16.0, rel=1e-12)

    def test_inverts_survival(self) -> None:
        law = WeibullLaw(0.8, 2.0)
        x = sample_weibull(law, 0.5)

        assert x == pytest.approx((log(2.0) / 2.0) ** 1.25, rel=1e-12)
        assert law.sf(x) == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize('u', [0.0, 1.0, -0.1, 1.5])
    def test_rejects_closed_interval(self, u: float) -> None:
        with pytest.raises(InvalidArgumentError):
            sample_weibull(WeibullLaw(0.5), u)

    @pytest.mark.parametrize('alpha', [0.0, 1.0, 1.5, -0.2])
    def test_rejects_alpha(self, alpha: float) -> None:
        with pytest.raises(InvalidArgumentError):
            WeibullLaw(alpha)

    @given(u=unit)
    def test_round_trip(self, u: float) -> None:
        law = WeibullLaw(0.6, 1.5)

        assert law.cdf(law.ppf(u)) == pytest.approx(u, abs=1e-9)
        assert law.sf(sample_weibull(law, u)) == pytest.approx(u, abs=1e-9)
        assert sample_weibull(law, u) > 0.0

    def test_mean(self) -> None:
        assert mean_of(WeibullLaw(0.5, 1.0)) == pytest.approx(2.0, rel=1e-12)
        assert mean_of(WeibullLaw(0.8, 2.0)) == pytest.approx(gamma(2.25) * 2.0 ** -1.25, rel=1e-12)

    @pytest.mark.parametrize('alpha', [0.5, 1.0, 2.0])
    def test_factor_law_any_shape(self, alpha: float) -> None:
        law = WeibullFactorLaw(alpha)

        assert isinstance(law, WeibullLaw)
        assert law.sf(1.0) == pytest.approx(exp(-1.0), rel=1e-12)
        assert mean_of(law) == pytest.approx(gamma(1.0 + 1.0 / alpha), rel=1e-12)

        with pytest.raises(InvalidArgumentError):
            WeibullFactorLaw(-alpha)


class TestRegVar:
    def test_pareto_examples(self, pareto: RegVarLaw) -> None:
        assert sample_regvar(pareto, 0.75) == pytest.approx(2.0, rel=1e-12)
        assert sample_regvar(pareto, 1e-15) == pytest.approx(1.0, rel=1e-12)
        assert pareto.x0 == 1.0

    def test_log_floor_example(self) -> None:
        x = sample_regvar(RegVarLaw(2.0, SlowlyVarying.LOG_FLOOR()), 0.9)

        assert log(x) / x ** 2 == pytest.approx(0.1, rel=1e-10)
        assert x > exp(1.0)

    @pytest.mark.parametrize('kind', list(SlowlyVarying))
    @given(u=unit)
    def test_round_trip(self, kind: SlowlyVarying, u: float) -> None:
        law = RegVarLaw(2.5, kind(3.0 if kind is SlowlyVarying.CONSTANT else 1.0))
        x = sample_regvar(law, u)

        assert x >= law.x0
        assert law.cdf(x) == pytest.approx(u, abs=1e-9)

    def test_support_edges(self) -> None:
        assert RegVarLaw(2.0, SlowlyVarying.CONSTANT(4.0)).x0 == pytest.approx(2.0)
        assert RegVarLaw(2.0, SlowlyVarying.LOG_FLOOR()).x0 == 1.0

        law = RegVarLaw(2.0, SlowlyVarying.EXP_SQRT_LOG())

        # the tail formula is exactly 1 at the edge
        assert float(law.L(law.x0)) / law.x0 ** 2 == pytest.approx(1.0, rel=1e-12)
        assert law.sf(law.x0 * 0.999) == 1.0

    def test_rejects_infinite_mean(self) -> None:
        with pytest.raises(InvalidArgumentError):
            RegVarLaw(1.0)

    def test_means(self, pareto: RegVarLaw) -> None:
        assert mean_of(pareto) == pytest.approx(2.0, rel=1e-12)
        assert mean_of(RegVarLaw(3.0, SlowlyVarying.CONSTANT(8.0))) == pytest.approx(3.0, rel=1e-12)

        # 1 + int_1^e x^-2 dx + int_e^inf log(x) x^-2 dx
        assert mean_of(RegVarLaw(2.0, SlowlyVarying.LOG_FLOOR())) == pytest.approx(2.0 + exp(-1.0), rel=1e-8)

        assert 1.0 < mean_of(RegVarLaw(2.0, SlowlyVarying.EXP_SQRT_LOG())) < np.inf


class TestSlowlyVarying:
    @pytest.mark.parametrize('kind', list(SlowlyVarying))
    @pytest.mark.parametrize('scale', [0.5, 2.0, 10.0])
    def test_slow_variation(self, kind: SlowlyVarying, scale: float) -> None:
        L = kind(2.0 if kind is SlowlyVarying.CONSTANT else 1.0)

        def defect(log_x: float) -> float:
            return abs(float(np.expm1(L.log_at(log_x + log(scale)) - L.log_at(log_x))))

        assert defect(2000.0) < 0.05
        assert defect(2000.0) <= defect(log(1e8))

    def test_values(self) -> None:
        assert SlowlyVarying.CONSTANT(2.5)(1e10) == pytest.approx(2.5)
        assert SlowlyVarying.LOG_FLOOR()(2.0) == pytest.approx(1.0)
        assert SlowlyVarying.LOG_FLOOR()(exp(4.0)) == pytest.approx(4.0)
        assert SlowlyVarying.EXP_SQRT_LOG()(0.5) == pytest.approx(1.0)
        assert SlowlyVarying.EXP_SQRT_LOG()(exp(16.0)) == pytest.approx(exp(4.0))

    def test_str(self) -> None:
        assert str(SlowlyVarying.CONSTANT(1.0)) == 'const:1.0'
        assert str(SlowlyVarying.LOG_FLOOR()) == 'log'
        assert str(SlowlyVarying.EXP_SQRT_LOG()) == 'expsqrtlog'

    def test_from_param(self) -> None:
        assert SlowlyVarying.from_param('log') is SlowlyVarying.LOG_FLOOR
        assert SlowlyVarying.from_param('exp-sqrt-log') is SlowlyVarying.EXP_SQRT_LOG
        assert SlowlyVarying.from_param(0) is SlowlyVarying.CONSTANT

        with pytest.raises(InvalidArgumentError):
            SlowlyVarying.from_param('cubic')


class TestFrechet:
    def test_examples(self) -> None:
        assert sample_frechet(FrechetLaw(2.0, 1.0), exp(-1.0)) == pytest.approx(1.0, rel=1e-12)
        assert sample_frechet(FrechetLaw(2.0, 4.0), exp(-1.0)) == pytest.approx(2.0, rel=1e-12)
        assert sample_frechet(FrechetLaw(3.0, 1.0), 0.5) == pytest.approx(log(2.0) ** (-1.0 / 3.0), rel=1e-12)

    @given(u=unit)
    def test_round_trip(self, u: float) -> None:
        law = FrechetLaw(2.0, 0.3)

        assert law.cdf(sample_frechet(law, u)) == pytest.approx(u, abs=1e-9)

    def test_cdf_below_support(self) -> None:
        assert FrechetLaw(2.0).cdf(0.0) == 0.0
        assert FrechetLaw(2.0).cdf(-3.0) == 0.0


class TestOtherLaws:
    def test_interarrival(self) -> None:
        law = InterarrivalKind.EXPONENTIAL(3.0)

        assert mean_of(law) == 3.0
        assert law.ppf(exp(-1.0)) == pytest.approx(3.0)
        assert np.all(InterarrivalKind.DETERMINISTIC(2.0).draw(replication_stream(0), 5) == 2.0)

    def test_bounded(self) -> None:
        uniform = BoundedKind.UNIFORM(1.0)
        point = BoundedKind.POINT(2.0)

        assert uniform.mean == 0.5
        assert point.mean == 2.0
        assert np.all(point.draw(replication_stream(0), (3, 4)) == 2.0)

        draws = uniform.draw(replication_stream(1), 1000)

        assert np.all((draws > 0.0) & (draws < 1.0))

    def test_mean_of_rejects_non_laws(self) -> None:
        with pytest.raises(InvalidArgumentError):
            mean_of(3.0)  # type: ignore[arg-type]


@pytest.mark.parametrize('seed', [0, 1, 2])
@pytest.mark.parametrize(
    'law', [
        WeibullLaw(0.8, 1.0),
        RegVarLaw(2.0, SlowlyVarying.CONSTANT(1.0)),
        RegVarLaw(2.0, SlowlyVarying.LOG_FLOOR()),
        FrechetLaw(2.0, 1.0)
    ], ids=['weibull', 'pareto', 'regvar-log', 'frechet']
)
def test_sampler_calibration(law: WeibullLaw | RegVarLaw | FrechetLaw, seed: int) -> None:
    n = 10 ** 5
    emp = EmpiricalDistribution.from_samples(law.draw(replication_stream(seed), n))
    report = ks_against(emp, law)

    assert report.dkw_band_99 == pytest.approx(dkw_band(n))
    assert report.passed, report
