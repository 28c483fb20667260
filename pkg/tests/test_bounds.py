"""Unit tests for confidence radii, the rate envelope and the Natarajan search."""

import itertools
import math

import pytest

from riskpess.bounds import (
    MAX_BRUTEFORCE_CONTEXTS,
    certified_rate_constant,
    corollary_rate,
    natarajan_dim_bruteforce,
    natarajan_growth_bound,
    pointwise_bound,
    satisfies_growth_bound,
    uniform_dr_radius,
    uniform_is_radius,
    uniform_radius,
    uniform_wis_radius,
    wis_eta,
    wis_eta_from_propensities,
)
from riskpess.dataset import Policy, PolicyClass
from riskpess.infrastructure.error_handler import ConfigurationError, GuardExceededError, MissingBiasError
from riskpess.schemas import BoundConfig, Diagnostics, Estimator, Flavor


def _diag(sigma=1.0, sigma_prime=None, r=0.0, n=100_000, n_informative=None, beta_min=0.5):
    n_informative = n if n_informative is None else n_informative
    return Diagnostics(
        n=n,
        n_informative=n_informative,
        sigma=sigma,
        sigma_prime=sigma if sigma_prime is None else sigma_prime,
        r=r,
        beta_min=beta_min if n_informative else None,
        w_bar=1.0 if n_informative else None,
    )


NO_OVERLAP = _diag(sigma=0.0, r=1.0, n=50, n_informative=0)
C_EXAMPLE = math.log(400.0) + 3.0 * math.log(4e5)


def _full_class(m, K):
    return PolicyClass(tuple(Policy(t) for t in itertools.product(range(K), repeat=m)))


class TestPointwise:
    """Radius for one fixed policy."""

    def test_small_sample_saturates(self):
        radius = pointwise_bound(_diag(sigma=2.0, n=2), 2, 0.1)
        assert radius.value == 1.0
        assert radius.deviation == pytest.approx(3.0 * math.sqrt(4.0 * math.log(80.0)))

    def test_no_overlap_saturates(self):
        assert pointwise_bound(NO_OVERLAP, 50, 0.05).value == 1.0

    def test_large_sample(self):
        radius = pointwise_bound(_diag(sigma=1.0, n=10 ** 6), 10 ** 6, 0.05)
        assert radius.value == pytest.approx(2.0 * math.sqrt(8.0 * math.log(160.0) / 1e6))
        assert radius.value == pytest.approx(0.012744, abs=1e-6)

    def test_bias_adds_r(self):
        diag = _diag(sigma=1.0, r=0.1, n=10 ** 6, n_informative=900_000)
        radius = pointwise_bound(diag, 10 ** 6, 0.05)
        assert radius.bias == 0.1
        assert radius.value == pytest.approx(radius.deviation + 0.1)

    def test_bernstein_formula(self):
        diag = _diag(sigma=3.0, sigma_prime=1.5, n=10_000, beta_min=0.2)
        log_term = math.log(8.0 / 0.05)
        expected = 2.5 * math.sqrt(8.0 * log_term / 10_000) + 2.0 * log_term / (3.0 * 10_000 * 0.2)
        assert pointwise_bound(diag, 10_000, 0.05, Flavor.BERNSTEIN).value == pytest.approx(expected)

    def test_bernstein_smaller_when_condition_holds(self):
        diag = _diag(sigma=3.0, sigma_prime=1.5, n=10_000, beta_min=0.2)
        log_term = math.log(8.0 / 0.05)
        root = math.sqrt(8.0 * log_term / 10_000)
        condition = diag.sigma_prime * root + 2.0 * log_term / (3.0 * 10_000 * 0.2) < diag.sigma * root
        hoeffding = pointwise_bound(diag, 10_000, 0.05, Flavor.HOEFFDING).value
        bernstein = pointwise_bound(diag, 10_000, 0.05, Flavor.BERNSTEIN).value
        assert condition
        assert bernstein < hoeffding

    @pytest.mark.parametrize("delta", [0.0, 1.0, -0.1])
    def test_delta_range(self, delta):
        with pytest.raises(ConfigurationError, match="delta must lie in"):
            pointwise_bound(_diag(), 100, delta)


class TestUniformIS:
    """Uniform radius for clipped IS."""

    def test_no_overlap_saturates(self):
        assert uniform_is_radius(NO_OVERLAP, 50, 2, 1, 0.05).value == 1.0

    def test_reference_value(self):
        radius = uniform_is_radius(_diag(sigma=2.0), 100_000, 2, 3, 0.05)
        assert radius.value == pytest.approx(4.0 * math.sqrt(8e-5 * C_EXAMPLE))
        assert radius.value == pytest.approx(0.23917, abs=1e-5)

    def test_increasing_in_dimension(self):
        radii = [uniform_is_radius(_diag(sigma=2.0), 100_000, 2, d, 0.05).value for d in (1, 2, 4, 8)]
        assert radii == sorted(radii)
        assert len(set(radii)) == len(radii)

    def test_monotone_in_delta_and_n(self):
        diag = _diag(sigma=2.0)
        assert uniform_is_radius(diag, 100_000, 2, 3, 0.01).value > uniform_is_radius(diag, 100_000, 2, 3, 0.1).value
        assert uniform_is_radius(diag, 200_000, 2, 3, 0.05).value < uniform_is_radius(diag, 100_000, 2, 3, 0.05).value

    def test_bernstein_uses_complexity_term(self):
        diag = _diag(sigma=3.0, sigma_prime=1.5, n=10_000, beta_min=0.2)
        C = math.log(20.0 / 0.05) + 2.0 * math.log(10_000 * 4)
        expected = 3.5 * math.sqrt(8.0 * C / 10_000) + 2.0 * C / (3.0 * 10_000 * 0.2)
        assert uniform_is_radius(diag, 10_000, 2, 2, 0.05, Flavor.BERNSTEIN).value == pytest.approx(expected)


class TestUniformWIS:
    """Self-normalized radius."""

    def test_no_overlap_saturates(self):
        assert uniform_wis_radius(NO_OVERLAP, 50, 2, 1, 0.05).value == 1.0

    def test_large_eta_saturates(self):
        diag = _diag(sigma=10.0, n=100, n_informative=5)
        assert wis_eta(diag, 100, 2, 1, 0.05) >= 1.0
        assert uniform_wis_radius(diag, 100, 2, 1, 0.05).value == 1.0

    def test_reference_value(self):
        n = 100_000
        diag = _diag(sigma=1.0, n=n)
        eta = math.sqrt(n / (2.0 * n ** 2) * (math.log(160.0) + 3.0 * math.log(4e5)))
        xi = (1.0 / (1.0 - eta) + 2.0) * math.sqrt(8.0 / n * C_EXAMPLE) + eta / (1.0 - eta)

        assert wis_eta(diag, n, 2, 3, 0.05) == pytest.approx(eta)
        assert eta == pytest.approx(0.014794, abs=1e-6)
        assert uniform_wis_radius(diag, n, 2, 3, 0.05).value == pytest.approx(xi)
        assert xi == pytest.approx(0.195291, abs=1e-6)

    def test_eta_forms_agree(self):
        propensities = [0.5, 0.25, 0.8, 0.1, 0.5, 0.4]
        n = 10
        sigma = math.sqrt(sum(b ** -2 for b in propensities) / n)
        diag = _diag(sigma=sigma, n=n, n_informative=len(propensities), r=0.4)
        assert wis_eta(diag, n, 3, 2, 0.1) == pytest.approx(
            wis_eta_from_propensities(propensities, n, 3, 2, 0.1), rel=1e-12
        )


class TestUniformDR:
    """Doubly robust radius."""

    def test_zero_bias_is_deviation_only(self):
        radius = uniform_dr_radius(_diag(sigma=1.0), 100_000, 2, 3, 0.05, r_bar=0.0)
        assert radius.bias == 0.0
        assert radius.value == pytest.approx(4.0 * math.sqrt(8e-5 * C_EXAMPLE))

    def test_full_bias_saturates(self):
        assert uniform_dr_radius(_diag(sigma=0.0, r=1.0, n_informative=0), 100, 2, 1, 0.05, 1.0).value == 1.0

    def test_missing_bias(self):
        with pytest.raises(MissingBiasError, match="r_bar"):
            uniform_dr_radius(_diag(), 100, 2, 1, 0.05, None)

    def test_negative_bias(self):
        with pytest.raises(ConfigurationError, match="nonnegative"):
            uniform_dr_radius(_diag(), 100, 2, 1, 0.05, -0.1)

    def test_dispatch_prefers_explicit_bias(self):
        config = BoundConfig(estimator="drc", dr_bias=1.0)
        assert uniform_radius(_diag(), 100_000, 2, 3, config, r_bar=0.0).bias == 0.0
        assert uniform_radius(_diag(), 100_000, 2, 3, config).value == 1.0


class TestDispatch:
    """uniform_radius routing and BoundConfig."""

    def test_routes_by_estimator(self):
        diag = _diag(sigma=2.0)
        assert uniform_radius(diag, 100_000, 2, 3, BoundConfig()) == uniform_is_radius(diag, 100_000, 2, 3, 0.05)
        assert uniform_radius(diag, 100_000, 2, 3, BoundConfig(estimator="wis")) == uniform_wis_radius(
            diag, 100_000, 2, 3, 0.05
        )

    def test_short_names_map_to_bounded_estimators(self):
        assert BoundConfig(estimator="is").estimator == Estimator.CLIPPED_IS
        assert BoundConfig(estimator="dr").estimator == Estimator.DRC

    @pytest.mark.parametrize("estimator", [Estimator.IS, Estimator.DR])
    def test_unbounded_estimator_rejected(self, estimator):
        with pytest.raises(ValueError, match="estimator must be one of"):
            BoundConfig(estimator=estimator)


class TestRateEnvelope:
    """Envelope and its precondition."""

    def test_reference_value(self):
        envelope = corollary_rate(10_000, 2, 2, 0.05, 0.5)
        assert envelope.value == pytest.approx(math.sqrt(2.0 * math.log(4e4) * math.log(400.0) / 5000.0))
        assert envelope.value == pytest.approx(0.15936, abs=1e-5)
        assert envelope.precondition_holds

    def test_quadrupling_n_halves(self):
        a = corollary_rate(1000, 2, 1, 0.05, 0.5).value
        b = corollary_rate(4000, 2, 1, 0.05, 0.5).value
        assert b / a == pytest.approx(0.5 * math.sqrt(math.log(16000) / math.log(4000)))

    def test_smaller_overlap_is_larger(self):
        values = [corollary_rate(1000, 2, 2, 0.05, b).value for b in (0.5, 0.25, 0.1)]
        assert values == sorted(values)

    def test_precondition_reported_not_enforced(self):
        envelope = corollary_rate(10, 2, 3, 0.05, 0.01)
        assert not envelope.precondition_holds
        assert envelope.value > 0

    def test_beta_inf_range(self):
        with pytest.raises(ConfigurationError, match="beta_inf"):
            corollary_rate(100, 2, 1, 0.05, 0.0)

    def test_certified_constant(self):
        assert certified_rate_constant(1.0) == pytest.approx(8.0 * (4.0 * math.sqrt(2.0) + 1.0 / 3.0))


class TestNatarajan:
    """Exhaustive Natarajan dimension."""

    @pytest.mark.parametrize("m, K", [(1, 2), (2, 2), (3, 2), (2, 3), (4, 2)])
    def test_full_class(self, m, K):
        assert natarajan_dim_bruteforce(_full_class(m, K)) == m

    def test_singleton(self):
        assert natarajan_dim_bruteforce(PolicyClass((Policy((0, 1, 1)),))) == 0

    def test_two_policies_differing_once(self):
        cls = PolicyClass((Policy((0, 1, 1)), Policy((0, 0, 1))))
        assert natarajan_dim_bruteforce(cls) == 1

    def test_constant_policies(self):
        cls = PolicyClass((Policy((0, 0, 0)), Policy((1, 1, 1)), Policy((2, 2, 2))))
        assert natarajan_dim_bruteforce(cls) == 1

    def test_restricted_universe(self):
        assert natarajan_dim_bruteforce(_full_class(3, 2), context_universe=[0, 2]) == 2

    def test_guard(self):
        cls = PolicyClass((Policy(tuple([0] * (MAX_BRUTEFORCE_CONTEXTS + 1))),))
        with pytest.raises(GuardExceededError, match="Declare natarajan_dim"):
            natarajan_dim_bruteforce(cls)

    @pytest.mark.parametrize(
        "cls",
        [
            _full_class(3, 2),
            _full_class(2, 3),
            PolicyClass((Policy((0, 1, 1)), Policy((0, 0, 1)))),
            PolicyClass((Policy((0, 0)), Policy((1, 1)), Policy((1, 0)))),
        ],
    )
    def test_growth_bound_holds(self, cls):
        K = 1 + max(a for p in cls for a in p.table)
        d = natarajan_dim_bruteforce(cls)
        assert satisfies_growth_bound(cls, K, d)

    def test_growth_bound_value(self):
        assert natarajan_growth_bound(3, 2, 2) == 9 * 16
