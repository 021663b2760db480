import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tubal.errors import InvalidConfig, InvalidRank
from tubal.measure import MeasurementEnsemble, apply, make_ensemble, make_orthogonal_ensemble
from tubal.rip import (
    DUDLEY_CONSTANT,
    calibrate_constant,
    covering_log_bound,
    delta_samples,
    delta_vs_m_curve,
    dof,
    dudley_gamma2_bound,
    estimate_delta,
    gamma2_upper_bound,
    model_size,
    recovery_delta_threshold,
    sample_unit_low_tubal_rank,
    theorem1_budget,
)
from tubal.seeding import derive_seed
from tubal.t_algebra import tubal_rank

# Calibration pre-run (seed 2026, dims (10,10,5), r=1, m=840, 100 samples,
# 20 repetitions): delta_hat ranged 0.091..0.173 with 90th percentile 0.158.
CAL_SEED = 2026
CAL_Q90 = 0.158


def _fourier_rank_oracle(X, tol=1e-9):
    Xf = np.fft.fft(X, axis=2)
    ranks = []
    for k in range(X.shape[2]):
        s = np.linalg.svd(Xf[:, :, k], compute_uv=False)
        ranks.append(int(np.sum(s > tol * s[0])))
    return max(ranks)


class TestSampler:
    def test_unit_norm(self):
        for seed in range(10):
            X = sample_unit_low_tubal_rank((5, 4, 3), 2, seed)
            assert abs(np.linalg.norm(X) - 1.0) < 1e-12

    def test_matrix_case(self):
        X = sample_unit_low_tubal_rank((4, 3, 1), 3, seed=5)
        assert X.shape == (4, 3, 1)
        assert np.linalg.matrix_rank(X[:, :, 0]) == 3

    def test_generic_rank_on_100_draws(self):
        for seed in range(100):
            X = sample_unit_low_tubal_rank((6, 5, 3), 2, seed)
            assert _fourier_rank_oracle(X) == 2
            assert tubal_rank(X) == 2

    def test_deterministic(self):
        a = sample_unit_low_tubal_rank((4, 4, 2), 1, seed=9)
        b = sample_unit_low_tubal_rank((4, 4, 2), 1, seed=9)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("r", [0, 5])
    def test_invalid_rank(self, r):
        with pytest.raises(InvalidRank):
            sample_unit_low_tubal_rank((4, 4, 2), r)


class TestEstimateDelta:
    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_isometry_is_zero(self, r):
        E = make_orthogonal_ensemble((4, 3, 2), seed=3)
        est = estimate_delta(E, r, samples=50, seed=1)
        assert est.delta_hat <= 1e-10
        assert est.r == r and est.samples == 50

    def test_single_sample(self):
        E = make_ensemble((5, 4, 3), 60, seed=2)
        est = estimate_delta(E, 2, samples=1, seed=7)
        X = sample_unit_low_tubal_rank((5, 4, 3), 2, derive_seed(7, 0))
        y = apply(E, X)
        assert est.delta_hat == pytest.approx(abs(y @ y - 1.0), rel=1e-12, abs=1e-15)

    def test_sign_flip_invariance(self):
        E = make_ensemble((5, 4, 3), 60, seed=2)
        F = MeasurementEnsemble.from_matrix(E.dims, -E.matrix)
        a = estimate_delta(E, 1, samples=30, seed=4).delta_hat
        b = estimate_delta(F, 1, samples=30, seed=4).delta_hat
        assert a == pytest.approx(b, rel=1e-12)

    @pytest.mark.parametrize("k", [1, 5, 20])
    def test_nested_monotonicity(self, k):
        E = make_ensemble((5, 5, 2), 40, seed=8)
        small = estimate_delta(E, 1, samples=k, seed=3).delta_hat
        large = estimate_delta(E, 1, samples=2 * k, seed=3).delta_hat
        assert large >= small

    def test_nonnegative(self):
        E = make_ensemble((3, 3, 2), 5, distribution="bernoulli", seed=1)
        assert estimate_delta(E, 1, samples=10, seed=0).delta_hat >= 0

    def test_invalid(self):
        E = make_ensemble((3, 3, 2), 5, seed=1)
        with pytest.raises(InvalidRank):
            estimate_delta(E, 4)
        with pytest.raises(InvalidConfig):
            estimate_delta(E, 1, samples=0)

    def test_calibrated_fixture(self):
        dims, r = (10, 10, 5), 1
        m = 8 * model_size(dims, r)
        assert m == 840
        vals = delta_samples(dims, r, m, "gaussian", samples=100, repetitions=20, seed=CAL_SEED)
        assert np.sum(vals < 0.6) >= 18
        assert np.quantile(vals, 0.9) == pytest.approx(CAL_Q90, abs=5e-4)


class TestBudget:
    def test_model_size_example(self):
        rep = theorem1_budget((10, 10, 5), 1, delta=1.0, epsilon=0.01, C=1.0)
        assert rep.m_bound == 105
        assert rep.dof == 95
        assert rep.gamma2_bound == pytest.approx(1.0)
        assert rep.covering_log == pytest.approx(105 * math.log(9))

    def test_epsilon_threshold(self):
        # eps >= e^-105 keeps the model-size branch
        rep = theorem1_budget((10, 10, 5), 1, delta=1.0, epsilon=math.exp(-105) * 1.001)
        assert rep.m_bound == 105

    def test_delta_halving(self):
        for delta in (0.9, 0.5, 0.37, 0.1):
            a = theorem1_budget((10, 10, 5), 1, delta, 0.01).m_bound
            b = theorem1_budget((10, 10, 5), 1, delta / 2, 0.01).m_bound
            assert abs(b - 4 * a) <= 4

    def test_epsilon_branch(self):
        eps = math.exp(-500)
        rep = theorem1_budget((2, 2, 1), 1, 0.5, eps, C=2.0)
        assert model_size((2, 2, 1), 1) < math.log(1 / eps)
        assert rep.m_bound == math.ceil(2.0 * 500 / 0.25)

    @pytest.mark.parametrize(
        "kwargs",
        [dict(delta=0.0), dict(delta=1.5), dict(epsilon=0.0), dict(epsilon=1.0), dict(C=0.0)],
    )
    def test_invalid(self, kwargs):
        args = dict(delta=0.5, epsilon=0.1, C=1.0) | kwargs
        with pytest.raises(InvalidConfig):
            theorem1_budget((4, 4, 2), 1, **args)

    def test_as_dict_echoes_inputs(self):
        d = theorem1_budget((10, 10, 5), 1, 1.0, 0.01).as_dict()
        assert d["dims"] == "10x10x5"
        assert d["r"] == 1 and d["delta"] == 1.0 and d["epsilon"] == 0.01 and d["C"] == 1.0

    def test_recovery_threshold(self):
        assert recovery_delta_threshold(2, 1) == pytest.approx(math.sqrt(0.5))
        assert recovery_delta_threshold(5, 3) == pytest.approx(math.sqrt(4 / 13))
        with pytest.raises(InvalidConfig):
            recovery_delta_threshold(1, 3)


class TestCovering:
    def test_boundary(self):
        assert covering_log_bound((10, 10, 5), 1, 1.0) == pytest.approx(105 * math.log(9))

    @pytest.mark.parametrize("eps", [0.0, -0.5, 1.5, 9.0])
    def test_out_of_range(self, eps):
        with pytest.raises(InvalidConfig):
            covering_log_bound((10, 10, 5), 1, eps)

    def test_matrix_reduction(self):
        assert covering_log_bound((7, 5, 1), 2, 0.25) == pytest.approx(2 * 13 * math.log(36))

    def test_doubling_rank(self):
        assert covering_log_bound((8, 8, 3), 4, 0.5) == pytest.approx(2 * covering_log_bound((8, 8, 3), 2, 0.5))


class TestGamma2:
    def test_values(self):
        assert gamma2_upper_bound((10, 10, 5), 1, 105) == pytest.approx(1.0)
        assert gamma2_upper_bound((10, 10, 5), 1, 420) == pytest.approx(0.5)

    def test_quadrupling(self):
        a = gamma2_upper_bound((6, 7, 2), 2, 50, c_prime=3.0)
        assert gamma2_upper_bound((6, 7, 2), 2, 200, c_prime=3.0) == pytest.approx(a / 2)

    def test_invalid(self):
        with pytest.raises(InvalidConfig):
            gamma2_upper_bound((6, 7, 2), 2, 0)
        with pytest.raises(InvalidConfig):
            gamma2_upper_bound((6, 7, 2), 2, 10, c_prime=0.0)

    def test_dudley_quadrature_matches_closed_form(self):
        for dims, r, m in [((10, 10, 5), 1, 105), ((30, 53, 3), 5, 2520), ((4, 4, 1), 2, 7)]:
            expected = DUDLEY_CONSTANT * gamma2_upper_bound(dims, r, m)
            assert dudley_gamma2_bound(dims, r, m) == pytest.approx(expected, rel=1e-8)

    def test_dudley_constant(self):
        # integral of sqrt(ln(9/u)) on (0,1] by the substitution u = 9 e^{-t^2}
        from scipy.special import erfc

        t0 = math.sqrt(math.log(9))
        closed = 9 * (t0 * math.exp(-t0 * t0) + math.sqrt(math.pi) / 2 * erfc(t0))
        assert DUDLEY_CONSTANT == pytest.approx(closed, rel=1e-10)


class TestDof:
    def test_examples(self):
        assert dof((30, 53, 3), 5) == 1170
        assert dof((10, 10, 5), 1) == 95
        assert dof((6, 6, 4), 6) == 36 * 4

    def test_invalid(self):
        with pytest.raises(InvalidRank):
            dof((4, 3, 2), 4)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 30), st.integers(1, 30), st.integers(1, 10), st.data())
    def test_dof_below_model_size(self, n1, n2, n3, data):
        r = data.draw(st.integers(1, min(n1, n2)))
        assert dof((n1, n2, n3), r) < model_size((n1, n2, n3), r)


@settings(max_examples=100, deadline=None)
@given(
    st.integers(1, 40),
    st.integers(1, 40),
    st.integers(1, 8),
    st.floats(0.01, 1.0),
    st.integers(1, 10_000),
    st.data(),
)
def test_scaling_laws(n1, n2, n3, eps_net, m, data):
    dims = (n1, n2, n3)
    r = data.draw(st.integers(1, max(1, min(n1, n2) // 2)))
    d = r * (n1 + n2 + 1) * n3
    cov = covering_log_bound(dims, r, eps_net)
    assert cov == pytest.approx(d * math.log(9 / eps_net), rel=1e-12)
    if 2 * r <= min(n1, n2):
        assert covering_log_bound(dims, 2 * r, eps_net) == pytest.approx(2 * cov, rel=1e-12)
    g = gamma2_upper_bound(dims, r, m)
    assert g == pytest.approx(math.sqrt(d / m), rel=1e-12)
    assert gamma2_upper_bound(dims, r, 4 * m) == pytest.approx(g / 2, rel=1e-12)
    delta = data.draw(st.floats(0.05, 1.0))
    rep = theorem1_budget(dims, r, delta, 0.5)
    assert rep.m_bound == math.ceil(d / delta**2)


class TestCurve:
    def test_single_row(self):
        rows = delta_vs_m_curve((4, 4, 2), 1, "gaussian", [30], samples=5, repetitions=1, seed=0)
        assert len(rows) == 1
        assert rows[0].median == rows[0].q10 == rows[0].q90

    def test_row_count(self):
        rows = delta_vs_m_curve((4, 4, 2), 1, "bernoulli", [10, 20, 40], samples=5, repetitions=3, seed=1)
        assert [row.m for row in rows] == [10, 20, 40]
        assert all(row.q10 <= row.median <= row.q90 for row in rows)

    @pytest.mark.parametrize("grid", [[], [20, 10], [10, 10]])
    def test_invalid_grid(self, grid):
        with pytest.raises(InvalidConfig):
            delta_vs_m_curve((4, 4, 2), 1, "gaussian", grid, samples=2, repetitions=1)

    def test_median_drops_over_16x(self):
        rows = delta_vs_m_curve((10, 10, 5), 1, "gaussian", [105, 1680], samples=50, repetitions=10, seed=5)
        assert rows[-1].median < rows[0].median

    def test_deterministic(self):
        a = delta_vs_m_curve((4, 4, 2), 1, "uniform", [10, 30], samples=5, repetitions=3, seed=2)
        b = delta_vs_m_curve((4, 4, 2), 1, "uniform", [10, 30], samples=5, repetitions=3, seed=2)
        assert a == b


def test_calibrate_constant_smoke():
    out = calibrate_constant((4, 4, 2), 1, delta=0.9, epsilon=0.2, m_grid=[400, 50], samples=5, repetitions=5, seed=0)
    assert out is not None
    m, C = out
    assert m in (50, 400)
    assert C == pytest.approx(m * 0.81 / model_size((4, 4, 2), 1))
    assert calibrate_constant((4, 4, 2), 1, delta=1e-6, epsilon=0.5, m_grid=[5], samples=5, repetitions=2) is None
