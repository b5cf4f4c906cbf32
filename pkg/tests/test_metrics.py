import numpy as np
import pytest

from unmixlab.core import AbundanceSet, DimensionError, EndmemberMatrix, NumericsError
from unmixlab.metrics import (
    armse,
    asam,
    evaluate,
    reconstruct,
    rms_aad,
    rmse_per_endmember,
)
from unmixlab.synth import GbmParams, gbm_mix

RNG = np.random.default_rng(55)


def dirichlet_rows(n, p, rng=RNG):
    return rng.dirichlet(np.ones(p), size=n)


class TestRmse:
    def test_zero_on_identical(self):
        a = dirichlet_rows(10, 3)
        assert np.array_equal(rmse_per_endmember(a, a), np.zeros(3))

    def test_constant_offset_on_one_map(self):
        a = np.full((20, 2), 0.5)
        b = a.copy()
        b[:, 0] += 0.1
        b[:, 1] -= 0.1
        out = rmse_per_endmember(a, b)
        assert out[0] == pytest.approx(0.1, abs=1e-12)

    def test_two_pixel_hand_case(self):
        a_true = np.array([[0.2, 0.8], [0.6, 0.4]])
        a_est = np.array([[0.3, 0.7], [0.5, 0.5]])
        # per endmember: sqrt(mean of (0.1^2, 0.1^2)) = 0.1
        out = rmse_per_endmember(a_true, a_est)
        assert out == pytest.approx([0.1, 0.1], abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            rmse_per_endmember(np.ones((3, 2)), np.ones((4, 2)))


class TestArmse:
    def test_zero_on_identical(self):
        a = dirichlet_rows(12, 4)
        assert armse(a, a) == 0.0

    def test_uniform_epsilon_offset(self):
        a = np.full((9, 4), 0.25)
        b = a + 0.01
        assert armse(a, b) == pytest.approx(0.01, abs=1e-12)

    def test_operation_order_pixelwise_root_then_mean(self):
        # one pixel off by 0.2 in every coordinate, another exact:
        # mean(sqrt(mean(diff^2))) = (0.2 + 0) / 2
        a = np.array([[0.5, 0.5], [0.5, 0.5]])
        b = np.array([[0.7, 0.3], [0.5, 0.5]])
        assert armse(a, b) == pytest.approx(0.1, abs=1e-12)

    def test_invariant_under_joint_pixel_permutation(self):
        a = dirichlet_rows(30, 3)
        b = dirichlet_rows(30, 3)
        perm = RNG.permutation(30)
        assert armse(a, b) == pytest.approx(armse(a[perm], b[perm]), rel=1e-12)
        per_end = rmse_per_endmember(a, b)
        assert rmse_per_endmember(a[perm], b[perm]) == pytest.approx(per_end, rel=1e-12)


class TestRmsAad:
    def test_zero_on_identical(self):
        a = dirichlet_rows(8, 3)
        assert rms_aad(a, a) == pytest.approx(0.0, abs=1e-6)

    def test_scale_invariance(self):
        a = dirichlet_rows(15, 4) + 0.01
        b = dirichlet_rows(15, 4) + 0.01
        base = rms_aad(a, b)
        for c in (0.5, 2.0, 7.3):
            assert rms_aad(a, c * b) == pytest.approx(base, rel=1e-9)
            assert rms_aad(c * a, b) == pytest.approx(base, rel=1e-9)

    def test_orthogonal_pair_hand_value(self):
        # one orthogonal pixel pair, one identical: sqrt(((pi/2)^2 + 0) / 2)
        a = np.array([[1.0, 0.0], [0.5, 0.5]])
        b = np.array([[0.0, 1.0], [0.5, 0.5]])
        assert rms_aad(a, b) == pytest.approx(np.pi / (2.0 * np.sqrt(2.0)), abs=1e-10)

    def test_range(self):
        for _ in range(20):
            a = np.abs(RNG.normal(size=(10, 3))) + 1e-3
            b = np.abs(RNG.normal(size=(10, 3))) + 1e-3
            assert 0.0 <= rms_aad(a, b) <= np.pi

    def test_all_zero_norm_rejected(self):
        with pytest.raises(NumericsError):
            rms_aad(np.zeros((3, 2)), np.ones((3, 2)))


class TestAsam:
    def test_zero_on_identical_and_scaled(self):
        x = RNG.random((12, 6)) + 0.01
        assert asam(x, x) == pytest.approx(0.0, abs=1e-6)
        assert asam(x, 2.0 * x) == pytest.approx(0.0, abs=1e-6)

    def test_hand_value_single_pair(self):
        x = np.array([[1.0, 0.0, 0.0]])
        y = np.array([[1.0, 1.0, 0.0]])
        assert asam(x, y) == pytest.approx(np.pi / 4.0, abs=1e-12)

    def test_mean_over_pixels(self):
        x = np.array([[1.0, 0.0], [1.0, 0.0]])
        y = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert asam(x, y) == pytest.approx(np.pi / 4.0, abs=1e-12)


class TestReconstruct:
    def setup_method(self):
        rng = np.random.default_rng(5)
        self.m = EndmemberMatrix(rng.random((7, 3)) + 0.05)
        self.a = AbundanceSet(dirichlet_rows(12, 3, rng).reshape(3, 4, 3))

    def test_linear_mode_equals_gamma_zero(self):
        lin = reconstruct(self.a, self.m, "linear")
        gbm = gbm_mix(self.m, self.a, GbmParams.uniform(3, 0.0))
        assert np.array_equal(lin.values, gbm.values)

    def test_reconstruction_closes_the_loop(self):
        params = GbmParams.uniform(3, 0.35)
        cube = gbm_mix(self.m, self.a, params)
        recon = reconstruct(self.a, self.m, params)
        assert np.array_equal(recon.values, cube.values)
        # arccos of a rounding-level cosine leaves ~1e-8 of angle noise
        assert asam(cube.pixels(), recon.pixels()) == pytest.approx(0.0, abs=1e-7)

    def test_gbm_params_passthrough_matches_oracle(self):
        params = GbmParams.uniform(3, 0.6)
        recon = reconstruct(self.a, self.m, params)
        s = self.m.spectra
        rows = self.a.pixels()
        expected = rows @ s.T
        for i in range(3):
            for j in range(i + 1, 3):
                expected = expected + 0.6 * np.outer(rows[:, i] * rows[:, j], s[:, i] * s[:, j])
        assert np.abs(recon.pixels() - expected).max() < 1e-12


class TestEvaluate:
    def setup_method(self):
        rng = np.random.default_rng(8)
        self.m = EndmemberMatrix(rng.random((6, 3)) + 0.05)
        self.truth = AbundanceSet(dirichlet_rows(20, 3, rng).reshape(4, 5, 3))
        self.cube = gbm_mix(self.m, self.truth, GbmParams.uniform(3, 0.0))

    def test_identical_inputs_all_zero(self):
        report = evaluate(self.truth, a_true=self.truth, cube=self.cube, m=self.m)
        assert report.rmse == pytest.approx([0.0] * 3, abs=1e-9)
        assert report.armse == pytest.approx(0.0, abs=1e-9)
        assert report.rms_aad == pytest.approx(0.0, abs=1e-6)
        assert report.asam == pytest.approx(0.0, abs=1e-6)

    def test_sam_only_mode(self):
        report = evaluate(self.truth, cube=self.cube, m=self.m)
        assert report.armse is None
        assert report.asam is not None

    def test_nothing_computable_raises(self):
        with pytest.raises(NumericsError):
            evaluate(self.truth)

    def test_clamp_excess_is_tiny_on_valid_inputs(self):
        rng = np.random.default_rng(9)
        est = AbundanceSet(dirichlet_rows(20, 3, rng).reshape(4, 5, 3))
        report = evaluate(est, a_true=self.truth, cube=self.cube, m=self.m)
        assert report.clamp_excess <= 1e-7

    def test_json_and_table_round_trip(self):
        report = evaluate(self.truth, a_true=self.truth, endmember_names=["x", "y", "z"])
        data = report.to_dict()
        assert data["endmember_names"] == ["x", "y", "z"]
        table = report.format_table()
        assert "RMSE[x]" in table
        assert "aRMSE" in table
        assert "rmsAAD" in table

    def test_metrics_positive_on_differing_inputs(self):
        rng = np.random.default_rng(10)
        est = AbundanceSet(dirichlet_rows(20, 3, rng).reshape(4, 5, 3))
        report = evaluate(est, a_true=self.truth)
        assert report.armse > 0.0
        assert report.rms_aad > 0.0
        assert all(v > 0 for v in report.rmse)
