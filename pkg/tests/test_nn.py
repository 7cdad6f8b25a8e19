import numpy as np
import pytest

from bevtrack.errors import ShapeError
from bevtrack.model.config import TrackerConfig
from bevtrack.nn.encoding import positional_encoding_3d, sinusoidal_pe
from bevtrack.nn.flops import ATTN, PROJ, FlopCounter, matmul
from bevtrack.nn.layers import MlpParams, mlp_backward, mlp_forward, mlp_forward_cached
from bevtrack.nn.losses import focal_loss, focal_loss_grad, l1_loss, l1_loss_grad
from bevtrack.nn.params import DECODE_HEAD, REFINE_HEAD, check_params, expected_shapes, init_params
from bevtrack.nn.rng import stream

from gradcheck import assert_grad_close, numeric_grad


def _mlp(rng, sizes, activations):
    weights = tuple(rng.standard_normal((a, b)) for a, b in zip(sizes, sizes[1:]))
    biases = tuple(rng.standard_normal(b) for b in sizes[1:])
    return MlpParams(weights=weights, biases=biases, activations=activations)


class TestMlp:
    def test_shape_chain_checked(self, rng):
        with pytest.raises(ShapeError):
            MlpParams(
                weights=(rng.standard_normal((3, 4)), rng.standard_normal((5, 2))),
                biases=(np.zeros(4), np.zeros(2)),
                activations=("relu", "identity"),
            )

    def test_input_width_checked(self, rng):
        mlp = _mlp(rng, [3, 4, 2], ("relu", "identity"))
        with pytest.raises(ShapeError) as exc:
            mlp_forward(np.zeros(5), mlp)
        assert exc.value.error_code == "DIM_MISMATCH"

    def test_vector_and_batch_agree(self, rng):
        mlp = _mlp(rng, [3, 4, 2], ("relu", "identity"))
        x = rng.standard_normal((5, 3))
        batch = mlp_forward(x, mlp)
        assert batch.shape == (5, 2)
        np.testing.assert_allclose(mlp_forward(x[2], mlp), batch[2])

    def test_gradients_match_finite_differences(self, rng):
        for _ in range(20):
            mlp = _mlp(rng, [3, 5, 2], ("relu", "identity"))
            x = rng.standard_normal((4, 3))
            upstream = rng.standard_normal((4, 2))
            _, cache = mlp_forward_cached(x, mlp)
            dx, grads = mlp_backward(cache, upstream)

            def loss():
                return float(np.sum(mlp_forward(x, mlp) * upstream))

            assert_grad_close(dx, numeric_grad(loss, x))
            for i in range(2):
                assert_grad_close(grads[f"w{i}"], numeric_grad(loss, mlp.weights[i]))
                assert_grad_close(grads[f"b{i}"], numeric_grad(loss, mlp.biases[i]))


class TestLosses:
    def test_l1_value(self):
        assert l1_loss([1.0, -1.0], [0.0, 0.0]) == 1.0

    def test_l1_shape_mismatch(self):
        with pytest.raises(ShapeError):
            l1_loss(np.zeros(2), np.zeros(3))
        with pytest.raises(ShapeError):
            l1_loss(np.zeros(0), np.zeros(0))

    def test_l1_gradient(self, rng):
        pred = rng.standard_normal((3, 2))
        target = rng.standard_normal((3, 2))
        assert_grad_close(l1_loss_grad(pred, target), numeric_grad(lambda: l1_loss(pred, target), pred))

    def test_focal_value(self):
        # alpha_t (1 - p_t)^gamma (-log p_t) with p_t = 0.8
        assert focal_loss(0.8, 1) == pytest.approx(0.25 * 0.2 ** 2 * -np.log(0.8))
        assert focal_loss(0.8, 0) == pytest.approx(0.75 * 0.8 ** 2 * -np.log(0.2))

    def test_focal_scalar_returns_float(self):
        assert isinstance(focal_loss(0.3, 1), float)
        assert isinstance(focal_loss_grad(0.3, 1), float)

    def test_focal_gradient(self, rng):
        for _ in range(20):
            p = rng.uniform(0.02, 0.98, size=6)
            target = rng.integers(0, 2, size=6)
            numeric = numeric_grad(lambda: float(np.sum(focal_loss(p, target))), p)
            assert_grad_close(focal_loss_grad(p, target), numeric)

    def test_focal_clamped_extremes(self):
        assert np.isfinite(focal_loss(0.0, 1))
        assert focal_loss_grad(0.0, 1) == 0.0
        assert focal_loss_grad(1.0, 0) == 0.0


class TestEncoding:
    def test_zero_gives_interleaved_sin_cos(self):
        pe = sinusoidal_pe(0.0, 4)
        np.testing.assert_array_equal(pe, [0.0, 1.0, 0.0, 1.0])

    def test_first_pair_is_plain_sine(self):
        pe = sinusoidal_pe(np.array([1.0, 2.0]), 6)
        assert pe.shape == (2, 6)
        np.testing.assert_allclose(pe[:, 0], np.sin([1.0, 2.0]))
        np.testing.assert_allclose(pe[:, 1], np.cos([1.0, 2.0]))

    def test_odd_dim_rejected(self):
        with pytest.raises(ShapeError):
            sinusoidal_pe(1.0, 5)

    def test_3d_clamps_outside_region(self, caplog):
        bounds = ((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))
        inside = positional_encoding_3d((1.0, 1.0, 1.0), bounds, 12)
        outside = positional_encoding_3d((5.0, 9.0, 1.0), bounds, 12)
        np.testing.assert_array_equal(inside, outside)
        assert "outside the region" in caplog.text

    def test_3d_dim_must_split_by_axis(self):
        with pytest.raises(ShapeError):
            positional_encoding_3d((0.0, 0.0, 0.0), ((-1.0,) * 3, (1.0,) * 3), 8)


def test_matmul_counts_batch_multiply_adds():
    counter = FlopCounter()
    matmul(np.ones((3, 4, 5)), np.ones((3, 5, 2)), counter, ATTN)
    matmul(np.ones((4, 5)), np.ones((5, 6)), counter)
    assert counter[ATTN] == 3 * 4 * 5 * 2
    assert counter[PROJ] == 4 * 5 * 6
    assert counter.total == 120 + 120


def test_streams_are_named_and_reproducible():
    a = stream(7, "x").standard_normal(4)
    np.testing.assert_array_equal(a, stream(7, "x").standard_normal(4))
    assert not np.array_equal(a, stream(7, "y").standard_normal(4))
    assert not np.array_equal(a, stream(8, "x").standard_normal(4))


class TestParams:
    def test_init_matches_expected_shapes(self, small_config, small_params):
        shapes = expected_shapes(small_config)
        assert set(small_params) == set(shapes)
        for name, shape in shapes.items():
            assert small_params[name].shape == shape
        check_params(small_params, small_config)

    def test_heads_start_neutral(self, small_params):
        assert not small_params[f"{REFINE_HEAD}.w1"].any()
        assert not small_params[f"{DECODE_HEAD}.b1"].any()
        kinematic = small_params[f"{DECODE_HEAD}.kinematic"]
        assert kinematic.shape == (8, 4)
        np.testing.assert_array_equal(kinematic[:, 0], 1.0)
        assert not kinematic[:, 1:].any()

    def test_seeded(self, small_config, small_params):
        again = init_params(small_config, seed=0)
        other = init_params(small_config, seed=1)
        name = "future.motion_attn.layer0.attn.wq"
        np.testing.assert_array_equal(small_params[name], again[name])
        assert not np.array_equal(small_params[name], other[name])

    def test_check_params_rejects_other_dim(self, small_params):
        with pytest.raises(ShapeError) as exc:
            check_params(small_params, TrackerConfig(d=16, n_heads=2, n_layers=1))
        assert exc.value.error_code == "DIM_MISMATCH"
