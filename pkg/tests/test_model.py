import numpy as np
import pytest

from config_loader import ModelConfig
from conftest import write_feature_segments
from errors import (
    CorruptFile,
    IncompatibleBackbone,
    InputTooShort,
    NotStandardized,
    ShapeMismatch,
    VersionMismatch,
)
from model import (
    build_cnn14,
    checkpoint_from_model,
    compute_input_stats,
    count_parameters,
    forward,
    load_checkpoint,
    model_from_checkpoint,
    predict_segments,
    replace_head,
    save_checkpoint,
)
from model.checkpoint import decode_checkpoint, encode_checkpoint
from model.inference import load_features, stack_batch
from nn.tensor import Tensor
from training.losses import ccc_loss


def standardized(config: ModelConfig, seed: int = 0):
    model = build_cnn14(config, seed)
    model.set_input_stats(np.full(config.n_mels, -8.0), np.full(config.n_mels, 2.0))
    return model


def test_channels_follow_width_scale(tiny_model_config, small_model_config):
    assert tiny_model_config.block_channels == [2, 4, 8, 16, 32, 64]
    assert small_model_config.block_channels == [8, 16, 32, 64, 128, 256]
    assert ModelConfig().embedding_dim == 2048
    with pytest.raises(ValueError):
        ModelConfig(width_scale=1 / 4096)


def test_output_shapes(small_model_config, rng):
    model = standardized(small_model_config)
    batch = rng.normal(-8.0, 2.0, size=(2, 1, 200, 64))
    assert model.embed(batch).shape == (2, 256)
    assert model(batch).shape == (2, 1)
    assert forward(model, batch, "eval").shape == (2,)


@pytest.mark.slow
def test_full_width_output_shape(rng):
    model = standardized(ModelConfig())
    batch = rng.normal(-8.0, 2.0, size=(2, 1, 2997, 64))
    out = forward(model, batch, "eval")
    assert out.shape == (2,)
    assert np.all(np.isfinite(out.data))


def test_time_axis_is_halved_five_times(tiny_model_config, rng):
    model = standardized(tiny_model_config).eval()
    for frames in rng.integers(64, 400, size=8):
        x = Tensor(np.zeros((1, 1, int(frames), 64), dtype=np.float32))
        for block in model.blocks:
            x = block(x)
        expected = int(frames)
        for _ in range(5):
            expected //= 2
        assert x.shape == (1, 64, expected - 1, 1)


def test_input_validation(tiny_model_config):
    model = standardized(tiny_model_config)
    with pytest.raises(InputTooShort):
        forward(model, np.zeros((1, 1, 63, 64)))
    with pytest.raises(ShapeMismatch):
        forward(model, np.zeros((1, 1, 100, 40)))
    with pytest.raises(ShapeMismatch):
        forward(model, np.zeros((1, 100, 64)))
    with pytest.raises(NotStandardized):
        forward(build_cnn14(tiny_model_config), np.zeros((1, 1, 100, 64)))


def test_eval_is_deterministic_and_finite(tiny_model_config, rng):
    model = standardized(tiny_model_config)
    batch = rng.normal(-8.0, 2.0, size=(3, 1, 128, 64))
    first = forward(model, batch, "eval").data
    np.testing.assert_array_equal(first, forward(model, batch, "eval").data)
    assert np.all(np.isfinite(forward(model, np.zeros((2, 1, 64, 64)), "eval").data))


def test_train_mode_dropout_changes_output(rng):
    model = standardized(ModelConfig(width_scale=1 / 32, dropout_p=0.5))
    batch = rng.normal(-8.0, 2.0, size=(4, 1, 64, 64))
    first = forward(model, batch, "train").data
    second = forward(model, batch, "train").data
    assert not np.array_equal(first, second)


def test_same_seed_same_weights(tiny_model_config):
    a = build_cnn14(tiny_model_config, seed=5).state_dict()
    b = build_cnn14(tiny_model_config, seed=5).state_dict()
    c = build_cnn14(tiny_model_config, seed=6).state_dict()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert not np.array_equal(a["block1.conv1.weight"], c["block1.conv1.weight"])
    np.testing.assert_array_equal(a["fc_out.bias"], 0.0)


def test_compute_input_stats():
    features = [np.tile(np.arange(4.0), (10, 1)), np.tile(np.arange(4.0) + 2.0, (10, 1))]
    mean, std = compute_input_stats(features, 4)
    np.testing.assert_allclose(mean, np.arange(4.0) + 1.0)
    np.testing.assert_allclose(std, 1.0)

    constant = [np.full((5, 3), 7.0)]
    mean, std = compute_input_stats(constant, 3)
    np.testing.assert_allclose(mean, 7.0)
    np.testing.assert_array_equal(std, 1.0)
    with pytest.raises(ShapeMismatch):
        compute_input_stats([np.zeros((5, 2))], 3)


# ---- 检查点 ----

def test_checkpoint_round_trip_is_bit_exact(tmp_path, tiny_model_config, rng):
    model = standardized(tiny_model_config, seed=3)
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, path, metadata={"epoch": 4})
    loaded = load_checkpoint(path)

    original = model.state_dict()
    restored = loaded.state_dict()
    assert original.keys() == restored.keys()
    for name in original:
        np.testing.assert_array_equal(original[name], restored[name])
    np.testing.assert_array_equal(loaded.input_mean, model.input_mean)

    batch = rng.normal(-8.0, 2.0, size=(2, 1, 64, 64))
    np.testing.assert_array_equal(forward(model, batch).data, forward(loaded, batch).data)


def test_checkpoint_corruption_is_detected(tiny_model_config):
    data = encode_checkpoint(checkpoint_from_model(standardized(tiny_model_config)))
    assert decode_checkpoint(data).metadata == {}

    with pytest.raises(CorruptFile):
        decode_checkpoint(data[:-10])
    flipped = bytearray(data)
    flipped[len(data) // 2] ^= 0xFF
    with pytest.raises(CorruptFile):
        decode_checkpoint(bytes(flipped))
    with pytest.raises(CorruptFile):
        decode_checkpoint(b"NOPE" + data[4:])
    with pytest.raises(VersionMismatch):
        decode_checkpoint(data[:4] + (9).to_bytes(4, "little") + data[8:])


def test_checkpoint_into_other_width_fails(tiny_model_config):
    checkpoint = checkpoint_from_model(standardized(tiny_model_config))
    with pytest.raises(ShapeMismatch):
        model_from_checkpoint(checkpoint, ModelConfig(width_scale=1 / 16))


# ---- 替换输出层 ----

@pytest.fixture
def tagging_checkpoint():
    """527 维输出的预训练检查点"""
    pretrained = standardized(ModelConfig(width_scale=1 / 32, output_dim=527), seed=11)
    return checkpoint_from_model(pretrained)


def test_replace_head_keeps_backbone(tagging_checkpoint):
    model = replace_head(tagging_checkpoint, seed=1)
    assert model.config.output_dim == 1
    assert model.fc_out.weight.shape == (1, 64)
    state = model.state_dict()
    for name, value in tagging_checkpoint.tensors.items():
        if name.startswith("fc_out.") or name.startswith("input_norm."):
            continue
        np.testing.assert_array_equal(state[name], value)
    np.testing.assert_array_equal(model.input_mean, tagging_checkpoint.tensors["input_norm.mean"])
    np.testing.assert_array_equal(model.fc_out.bias.data, 0.0)


def test_replace_head_is_seeded(tagging_checkpoint):
    a = replace_head(tagging_checkpoint, seed=1).fc_out.weight.data
    b = replace_head(tagging_checkpoint, seed=1).fc_out.weight.data
    c = replace_head(tagging_checkpoint, seed=2).fc_out.weight.data
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_replace_head_requires_full_backbone(tagging_checkpoint):
    del tagging_checkpoint.tensors["block1.conv1.weight"]
    with pytest.raises(IncompatibleBackbone):
        replace_head(tagging_checkpoint)


def test_replace_head_rejects_other_width(tagging_checkpoint):
    with pytest.raises(IncompatibleBackbone):
        replace_head(tagging_checkpoint, config=ModelConfig(width_scale=1 / 16))


# ---- 推理 ----

def test_predictions_do_not_depend_on_batching(tmp_path, tiny_model_config):
    segments = write_feature_segments(tmp_path, [6, 9, 12, 15, 18, 20, 7])
    model = standardized(tiny_model_config)
    one = predict_segments(model, segments, batch_size=7, workers=1)
    many = predict_segments(model, segments, batch_size=2, workers=3)
    assert one.shape == (7,)
    assert one.dtype == np.float64
    np.testing.assert_allclose(one, many, rtol=1e-5, atol=1e-6)
    np.testing.assert_array_equal(many, predict_segments(model, segments, batch_size=2, workers=1))
    assert predict_segments(model, [], batch_size=2).shape == (0,)


# ---- 参数量、梯度与标准化 ----

def block_parameters(c_in: int, c: int) -> int:
    # 两个带偏置的 3×3 卷积 + 两个批归一化（weight 与 bias）
    return 9 * c_in * c + c + 9 * c * c + c + 4 * c


def test_tiny_parameter_count(tiny_model_config):
    channels = [1, 2, 4, 8, 16, 32, 64]
    blocks = sum(block_parameters(a, b) for a, b in zip(channels, channels[1:]))
    assert blocks == 74466
    assert count_parameters(build_cnn14(tiny_model_config)) == 74466 + (64 * 64 + 64) + (64 + 1)


@pytest.mark.slow
def test_full_width_parameter_count():
    # 卷积块 75,485,376 + fc1 4,196,352 + 输出层 2,049
    assert count_parameters(build_cnn14(ModelConfig())) == 79_683_777


def test_backward_reaches_every_parameter(rng):
    model = standardized(ModelConfig(width_scale=1 / 32, dropout_p=0.0), seed=2)
    batch = rng.normal(-8.0, 2.0, size=(4, 1, 128, 64))
    loss = ccc_loss(forward(model, batch, "train"), np.array([6.0, 10.0, 15.0, 20.0]))
    loss.backward()
    for name, param in model.named_parameters():
        assert param.grad is not None, name
        assert param.grad.shape == param.shape, name
        assert np.all(np.isfinite(param.grad)), name
        assert np.any(param.grad != 0), name


def test_standardized_features_have_unit_statistics(tmp_path, tiny_model_config):
    segments = write_feature_segments(tmp_path, [6, 9, 12, 15, 18, 20], n_frames=80)
    features = [load_features(s) for s in segments]
    mean, std = compute_input_stats(features, 64)
    model = build_cnn14(tiny_model_config)
    model.set_input_stats(mean, std)

    values = model.standardize(stack_batch(segments)).astype(np.float64)
    per_bin = values.reshape(-1, 64)
    np.testing.assert_allclose(per_bin.mean(axis=0), 0.0, atol=1e-4)
    np.testing.assert_allclose(per_bin.std(axis=0), 1.0, atol=1e-4)
