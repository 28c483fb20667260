"""Unit tests for risk functionals."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from riskpess.infrastructure.error_handler import InvalidCDFError, NotLipschitzError
from riskpess.risk import (
    CPTRisk,
    CVaRRisk,
    DistortedRisk,
    DistortionFn,
    EntropicRisk,
    MeanRisk,
    MeanVarianceRisk,
    Utility,
    VaRRisk,
    VarianceRisk,
    evaluate_risk,
    is_monotone_risk,
    lipschitz_constant,
    parse_risk,
)
from riskpess.stepfn import StepFn, SupportInterval, compact, from_atoms, merged_grid, sup_norm_distance


UNIT = SupportInterval(upper=1.0)
BERNOULLI = StepFn(0.0, [0.0, 1.0], [0.5, 1.0])

LIPSCHITZ_RISKS = [
    MeanRisk(),
    VarianceRisk(),
    MeanVarianceRisk(alpha=0.5),
    MeanVarianceRisk(alpha=-0.3),
    EntropicRisk(alpha=1.5),
    EntropicRisk(alpha=-2.0),
    CVaRRisk(alpha=0.3),
    CVaRRisk(alpha=0.9),
    DistortedRisk(g=DistortionFn(knots=[(0.0, 0.0), (0.3, 0.6), (1.0, 1.0)])),
    CPTRisk(
        u_plus=Utility(knots=[(0.0, 0.0), (0.5, 0.8), (2.0, 1.0)]),
        w_plus=DistortionFn(knots=[(0.0, 0.0), (0.5, 0.3), (1.0, 1.0)]),
    ),
]
MONOTONE_RISKS = [rho for rho in LIPSCHITZ_RISKS if is_monotone_risk(rho)]


@st.composite
def atoms(draw, D=1.0, max_atoms=6):
    ys = draw(st.lists(st.integers(0, 20), min_size=1, max_size=max_atoms))
    weights = draw(st.lists(st.integers(1, 9), min_size=len(ys), max_size=len(ys)))
    total = float(sum(weights))
    return np.array(ys, dtype=float) * D / 20.0, np.array(weights, dtype=float) / total


def _pointwise_max(f, g):
    grid = merged_grid(f, g)
    return compact(0.0, grid, np.maximum(f(grid), g(grid)))


class TestEvaluate:
    """Integral representations against known values."""

    def test_mean_of_bernoulli(self):
        assert evaluate_risk(MeanRisk(), BERNOULLI, UNIT) == 0.5

    def test_variance_of_bernoulli(self):
        assert evaluate_risk(VarianceRisk(), BERNOULLI, UNIT) == pytest.approx(0.25)

    def test_cvar_of_bernoulli(self):
        assert evaluate_risk(CVaRRisk(alpha=0.5), BERNOULLI, UNIT) == pytest.approx(1.0)

    @pytest.mark.parametrize("c", [0.0, 0.3, 1.0])
    def test_entropic_of_point_mass(self, c):
        point = StepFn(0.0, [c], [1.0])
        assert evaluate_risk(EntropicRisk(alpha=1.0), point, UNIT) == pytest.approx(c, abs=1e-12)

    def test_var_quantiles(self):
        assert evaluate_risk(VaRRisk(alpha=0.5), BERNOULLI, UNIT) == 0.0
        assert evaluate_risk(VaRRisk(alpha=0.7), BERNOULLI, UNIT) == 1.0

    def test_var_of_sub_cdf_is_support_end(self):
        assert evaluate_risk(VaRRisk(alpha=0.9), StepFn(0.0, [0.5], [0.6]), UNIT) == 1.0

    def test_sub_cdf_deficit_sits_at_support_end(self):
        sub = StepFn(0.0, [0.2], [0.5])
        assert evaluate_risk(MeanRisk(), sub, UNIT) == pytest.approx(0.5 * 0.2 + 0.5 * 1.0)

    def test_mean_variance_combines(self):
        rho = MeanVarianceRisk(alpha=-2.0)
        assert evaluate_risk(rho, BERNOULLI, UNIT) == pytest.approx(0.5 - 2.0 * 0.25)

    def test_non_monotone_input_rejected(self):
        with pytest.raises(InvalidCDFError, match="monotonize_clip"):
            evaluate_risk(MeanRisk(), StepFn(0.0, [0.1, 0.5], [0.8, 0.4]), UNIT)

    def test_out_of_range_input_rejected(self):
        with pytest.raises(InvalidCDFError):
            evaluate_risk(CVaRRisk(alpha=0.5), StepFn(0.0, [0.5], [1.5]), UNIT)

    def test_identity_cpt_is_the_mean(self):
        rho = CPTRisk(u_plus=Utility(knots=[(0.0, 0.0), (1.0, 1.0)]), w_plus=DistortionFn.identity())
        f = from_atoms([0.1, 0.45, 0.8], [0.2, 0.3, 0.5])
        assert evaluate_risk(rho, f, UNIT) == pytest.approx(evaluate_risk(MeanRisk(), f, UNIT), abs=1e-12)

    @settings(max_examples=50)
    @given(atoms())
    def test_identity_distortion_is_the_mean(self, dist):
        f = from_atoms(*dist)
        distorted = evaluate_risk(DistortedRisk(g=DistortionFn.identity()), f, UNIT)
        assert distorted == pytest.approx(evaluate_risk(MeanRisk(), f, UNIT), abs=1e-12)

    @given(atoms(), st.sampled_from([0.1, 0.5, 0.75, 0.95]))
    def test_cvar_kink_distortion_is_cvar(self, dist, alpha):
        f = from_atoms(*dist)
        distorted = evaluate_risk(DistortedRisk(g=DistortionFn.cvar_kink(alpha)), f, UNIT)
        assert distorted == pytest.approx(evaluate_risk(CVaRRisk(alpha=alpha), f, UNIT), abs=1e-12)


class TestMomentIdentities:
    """Integral forms agree with direct sums over atoms."""

    @given(atoms(D=2.0))
    def test_mean_and_variance(self, dist):
        ys, ps = dist
        f = from_atoms(ys, ps)
        D2 = SupportInterval(upper=2.0)
        mean = float(np.sum(ps * ys))
        var = float(np.sum(ps * ys ** 2) - mean ** 2)

        assert evaluate_risk(MeanRisk(), f, D2) == pytest.approx(mean, abs=1e-9)
        assert evaluate_risk(VarianceRisk(), f, D2) == pytest.approx(max(var, 0.0), abs=1e-9)

    @given(atoms(), st.sampled_from([-3.0, -0.5, 0.7, 2.0]))
    def test_entropic_log_sum_exp(self, dist, alpha):
        ys, ps = dist
        expected = math.log(float(np.sum(ps * np.exp(alpha * ys)))) / alpha
        assert evaluate_risk(EntropicRisk(alpha=alpha), from_atoms(ys, ps), UNIT) == pytest.approx(expected, abs=1e-9)

    @given(atoms(), st.sampled_from([0.2, 0.5, 0.8, 0.9]))
    def test_cvar_var_anchored_form(self, dist, alpha):
        ys, ps = dist
        f = from_atoms(ys, ps)
        var = evaluate_risk(VaRRisk(alpha=alpha), f, UNIT)
        expected = var + float(np.sum(ps * np.maximum(ys - var, 0.0))) / (1.0 - alpha)
        assert evaluate_risk(CVaRRisk(alpha=alpha), f, UNIT) == pytest.approx(expected, abs=1e-9)


class TestLipschitz:
    """Per-functional sup-norm constants."""

    def test_mean(self):
        assert lipschitz_constant(MeanRisk(), UNIT).value == 1.0

    def test_variance(self):
        assert lipschitz_constant(VarianceRisk(), SupportInterval(upper=2.0)).value == 12.0

    def test_cvar(self):
        assert lipschitz_constant(CVaRRisk(alpha=0.9), UNIT).value == pytest.approx(10.0)

    def test_mean_variance(self):
        assert lipschitz_constant(MeanVarianceRisk(alpha=-0.5), SupportInterval(upper=2.0)).value == 8.0

    def test_entropic_both_signs(self):
        assert lipschitz_constant(EntropicRisk(alpha=2.0), UNIT).value == pytest.approx(math.expm1(2.0) / 2.0)
        expected = math.expm1(-2.0) / (-2.0 * math.exp(-2.0))
        assert lipschitz_constant(EntropicRisk(alpha=-2.0), UNIT).value == pytest.approx(expected)

    def test_distorted_uses_max_slope(self):
        rho = DistortedRisk(g=DistortionFn(knots=[(0.0, 0.0), (0.3, 0.6), (1.0, 1.0)]))
        assert lipschitz_constant(rho, SupportInterval(upper=3.0)).value == pytest.approx(6.0)

    def test_cpt(self):
        rho = LIPSCHITZ_RISKS[-1]
        assert lipschitz_constant(rho, SupportInterval(upper=2.0)).value == pytest.approx(1.0 * 1.4)

    def test_var_is_not_lipschitz(self):
        with pytest.raises(NotLipschitzError, match="no finite sup-norm Lipschitz constant"):
            lipschitz_constant(VaRRisk(alpha=0.5), UNIT)

    @pytest.mark.parametrize("rho", LIPSCHITZ_RISKS, ids=lambda r: r.kind)
    @pytest.mark.parametrize("D", [1.0, 2.0])
    def test_lipschitz_property(self, rho, D):
        support = SupportInterval(upper=D)
        L = lipschitz_constant(rho, support).value
        rng = np.random.default_rng(17)
        for _ in range(200):
            f = from_atoms(rng.integers(0, 21, 4) * D / 20.0, rng.dirichlet(np.ones(4)))
            g = from_atoms(rng.integers(0, 21, 3) * D / 20.0, rng.dirichlet(np.ones(3)))
            gap = abs(evaluate_risk(rho, f, support) - evaluate_risk(rho, g, support))
            assert gap <= L * sup_norm_distance(f, g) + 1e-9


class TestMonotonicity:
    """Monotone flags and the ordering they promise."""

    @pytest.mark.parametrize(
        "rho, expected",
        [
            (MeanRisk(), True),
            (VarianceRisk(), False),
            (MeanVarianceRisk(alpha=0.0), True),
            (MeanVarianceRisk(alpha=0.1), False),
            (EntropicRisk(alpha=-1.0), True),
            (VaRRisk(alpha=0.5), True),
            (CVaRRisk(alpha=0.5), True),
            (DistortedRisk(g=DistortionFn.identity()), True),
        ],
    )
    def test_flags(self, rho, expected):
        assert is_monotone_risk(rho) is expected

    def test_variance_breaks_the_ordering(self):
        point_at_one = StepFn(0.0, [1.0], [1.0])
        assert np.all(point_at_one([0.0, 0.5, 1.0]) <= BERNOULLI([0.0, 0.5, 1.0]))
        assert evaluate_risk(VarianceRisk(), point_at_one, UNIT) < evaluate_risk(VarianceRisk(), BERNOULLI, UNIT)

    @pytest.mark.parametrize("rho", MONOTONE_RISKS, ids=lambda r: r.kind)
    def test_dominated_cdf_has_higher_risk(self, rho):
        rng = np.random.default_rng(5)
        for _ in range(100):
            f = from_atoms(rng.integers(0, 21, 4) / 20.0, rng.dirichlet(np.ones(4)))
            g = from_atoms(rng.integers(0, 21, 4) / 20.0, rng.dirichlet(np.ones(4)))
            higher = _pointwise_max(f, g)
            assert evaluate_risk(rho, f, UNIT) >= evaluate_risk(rho, higher, UNIT) - 1e-12


class TestParsing:
    """JSON forms of risk functionals."""

    def test_parse_json_text(self):
        assert parse_risk('{"kind": "cvar", "alpha": 0.9}') == CVaRRisk(alpha=0.9)

    def test_parse_distorted(self):
        rho = parse_risk({"kind": "distorted", "g": {"knots": [[0, 0], [0.5, 0.8], [1, 1]]}})
        assert isinstance(rho, DistortedRisk)
        assert rho.g.max_slope == pytest.approx(1.6)

    @pytest.mark.parametrize(
        "spec",
        [
            {"kind": "cvar", "alpha": 1.0},
            {"kind": "entropic", "alpha": 0.0},
            {"kind": "quantum"},
            {"kind": "distorted", "g": {"knots": [[0, 0], [0.5, 0.4], [1, 0.9]]}},
            {"kind": "distorted", "g": {"knots": [[0, 0], [0.5, 0.6], [0.4, 1]]}},
            {"kind": "cpt", "u_plus": {"knots": [[0, 0.1], [1, 1]]}, "w_plus": {"knots": [[0, 0], [1, 1]]}},
            {"kind": "mean", "alpha": 0.3},
        ],
    )
    def test_invalid_specs(self, spec):
        with pytest.raises(ValidationError):
            parse_risk(spec)

    def test_json_round_trip(self):
        rho = LIPSCHITZ_RISKS[-1]
        assert parse_risk(rho.model_dump_json()) == rho
