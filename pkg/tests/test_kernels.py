import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npsigtest.kernels import (
    Bandwidths,
    KernelSpec,
    PsiSpec,
    default_bandwidths,
    eval_kernel,
    eval_mixed_kernel,
    eval_psi,
    joint_x_kernel_matrix,
    mixed_kernel_matrix,
    psi_matrix,
    psi_profile,
)

EPA = KernelSpec()


class TestEvalKernel:
    def test_at_zero(self):
        assert eval_kernel(EPA, np.zeros(3)) == pytest.approx(0.75)

    def test_support_boundary(self):
        assert eval_kernel(EPA, np.array([1.0, 0.0])) == 0.0

    def test_half_norm(self):
        assert eval_kernel(EPA, np.array([0.5])) == pytest.approx(0.5625)

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=4))
    @settings(max_examples=60, deadline=None)
    def test_even_and_compact(self, coords):
        u = np.array(coords)
        v = eval_kernel(EPA, u)
        assert v == eval_kernel(EPA, -u)
        assert v >= 0.0
        if float(np.linalg.norm(u)) >= 1.0:
            assert v == 0.0


class TestMixedKernel:
    def test_all_continuous_reduces(self):
        assert eval_mixed_kernel(EPA, np.zeros(2), [], 1.0) == pytest.approx(0.75)

    def test_discrete_mismatch_annihilates(self):
        v = eval_mixed_kernel(EPA, np.zeros(2), [True, False], 1.0)
        assert v == 0.0

    def test_bandwidth_power(self):
        v = eval_mixed_kernel(EPA, np.zeros(1), [True], 0.5)
        assert v == pytest.approx(1.5)

    @given(
        st.lists(st.floats(-2, 2), min_size=1, max_size=3),
        st.floats(0.1, 3.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_no_discrete_columns_reduces_exactly(self, coords, h):
        diff = np.array(coords)
        got = eval_mixed_kernel(EPA, diff, [], h)
        assert got == h ** (-diff.size) * eval_kernel(EPA, diff / h)

    def test_matrix_matches_scalar(self):
        rng = np.random.default_rng(0)
        cont = rng.standard_normal((7, 2))
        disc = rng.integers(0, 2, size=(7, 1)).astype(float)
        m = mixed_kernel_matrix(cont, disc, 0.9)
        for i in range(7):
            assert m[i, i] == 0.0
            for j in range(7):
                if i == j:
                    continue
                expected = eval_mixed_kernel(
                    EPA, cont[i] - cont[j], disc[i] == disc[j], 0.9
                )
                assert m[i, j] == pytest.approx(expected, rel=1e-12)


class TestPsi:
    def test_normal_at_zero(self):
        assert eval_psi(PsiSpec("normal"), np.zeros(2)) == pytest.approx(
            1.0 / math.sqrt(2 * math.pi), rel=1e-10
        )

    def test_triangular_at_zero(self):
        # solving for unit second moment puts the triangular peak at 1/sqrt(6)
        assert eval_psi(PsiSpec("triangular"), np.zeros(1)) == pytest.approx(
            1.0 / math.sqrt(6.0), rel=1e-12
        )

    def test_indicator(self):
        assert eval_psi(PsiSpec("indicator"), np.zeros(3)) == 1.0
        assert eval_psi(PsiSpec("indicator"), np.array([0.0, 1.0])) == 0.0

    @pytest.mark.parametrize("family", ["triangular", "normal"])
    def test_density_normalization_and_second_moment(self, family):
        spec = PsiSpec(family)
        t = np.linspace(-12.0, 12.0, 1_000_001)
        vals = psi_profile(spec, t)
        mass = np.trapezoid(vals, t)
        second = np.trapezoid(t * t * vals, t)
        assert mass == pytest.approx(1.0, abs=1e-6)
        assert second == pytest.approx(1.0, abs=1e-6)

    def test_matrix_matches_scalar(self):
        rng = np.random.default_rng(1)
        cont = rng.standard_normal((6, 2))
        disc = rng.integers(0, 2, size=(6, 1)).astype(float)
        for family in ("normal", "triangular", "indicator"):
            m = psi_matrix(PsiSpec(family), cont, disc)
            for i in range(6):
                for j in range(6):
                    diff = np.concatenate([cont[i] - cont[j], disc[i] - disc[j]])
                    assert m[i, j] == pytest.approx(
                        eval_psi(PsiSpec(family), diff), rel=1e-12, abs=1e-300
                    )


class TestJointXKernel:
    def test_empty_x_gives_ones(self):
        m = joint_x_kernel_matrix(EPA, np.empty((4, 0)), 0.5)
        assert np.array_equal(m, np.ones((4, 4)))

    def test_matches_scaled_kernel(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((5, 2))
        h = 0.8
        m = joint_x_kernel_matrix(EPA, x, h)
        for i in range(5):
            for j in range(5):
                expected = h ** -2 * eval_kernel(EPA, (x[i] - x[j]) / h)
                assert m[i, j] == pytest.approx(expected, rel=1e-12)


class TestBandwidths:
    def test_rule_at_n100(self):
        bw = default_bandwidths(100, 1.0)
        assert bw.g == pytest.approx(0.46416, abs=5e-6)
        assert bw.h == pytest.approx(0.19953, abs=5e-6)

    def test_factor_scales_h_only(self):
        one = default_bandwidths(100, 1.0)
        two = default_bandwidths(100, 2.0)
        assert two.h == pytest.approx(0.39905, abs=5e-6)
        assert two.g == one.g

    def test_zero_factor_rejected(self):
        with pytest.raises(ValueError):
            default_bandwidths(100, 0.0)

    def test_nonpositive_bandwidths_rejected(self):
        with pytest.raises(ValueError):
            Bandwidths(g=0.0, h=1.0)
