import math

import numpy as np
import pytest

from config_loader import ModelConfig, TrainingConfig
from conftest import make_segment, write_feature_segments
from errors import EmptyPartition, LengthMismatch, MissingFeatures, TooShort
from evaluation.metrics import mae
from model import build_cnn14, predict_segments, replace_head
from model.checkpoint import encode_checkpoint
from nn.tensor import Tensor
from training import (
    BatchLoader,
    EpochRecord,
    TrainHistory,
    ccc,
    ccc_loss,
    plan_batches,
    read_history,
    select_best_epoch,
    train,
    write_history,
)


# ---- CCC ----

@pytest.mark.parametrize("x, y, expected", [
    ([1, 2, 3], [1, 2, 3], 1.0),
    ([1, 2, 3], [3, 2, 1], -1.0),
    ([1, 2, 3], [2, 3, 4], 4 / 7),
    ([12, 12, 12, 12], [6, 10, 14, 18], 0.0),
])
def test_ccc_examples(x, y, expected):
    assert ccc(x, y) == pytest.approx(expected, abs=1e-6)


def test_ccc_properties(rng):
    for _ in range(10 ** 4):
        n = int(rng.integers(2, 30))
        x = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 5), size=n)
        y = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 5), size=n)
        value = ccc(x, y)
        assert abs(value) <= 1.0 + 1e-6
        assert value == ccc(y, x)


def test_ccc_input_errors():
    with pytest.raises(LengthMismatch):
        ccc([1, 2, 3], [1, 2])
    with pytest.raises(TooShort):
        ccc([1], [1])


def test_ccc_loss_examples():
    target = np.array([6.0, 9.0, 14.0, 20.0])
    perfect = ccc_loss(Tensor(target.copy(), requires_grad=True), target)
    assert perfect.item() == pytest.approx(0.0, abs=1e-6)
    constant = ccc_loss(Tensor(np.full(4, 12.0), requires_grad=True), target)
    assert constant.item() == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(LengthMismatch):
        ccc_loss(Tensor(np.zeros(3)), target)
    with pytest.raises(TooShort):
        ccc_loss(Tensor(np.zeros(1)), [12.0])


def test_ccc_loss_matches_metric(rng):
    pred = rng.normal(12.0, 3.0, size=16)
    target = rng.integers(6, 21, size=16)
    assert ccc_loss(Tensor(pred), target).item() == pytest.approx(1.0 - ccc(pred, target), abs=1e-12)


# ---- 选模 ----

@pytest.mark.parametrize("values, expected", [
    ([0.1, 0.3, 0.3, 0.2], 2),
    ([0.5], 1),
    ([math.nan, -0.2, math.nan], 2),
    ([math.nan, math.nan], 1),
])
def test_select_best_epoch(values, expected):
    assert select_best_epoch(values) == expected


@pytest.mark.parametrize("values, expected", [
    ([3.1, 2.4, 2.4, 2.9], 2),
    ([math.nan, 5.0, 4.0], 3),
])
def test_select_lowest_epoch(values, expected):
    assert select_best_epoch(values, higher_is_better=False) == expected


def test_select_best_epoch_needs_epochs():
    with pytest.raises(EmptyPartition):
        select_best_epoch([])


def test_history_round_trip(tmp_path):
    history = TrainHistory(epochs=[
        EpochRecord(epoch=1, train_loss=0.9123456789012345, dev_mae=3.1, dev_ccc=0.1),
        EpochRecord(epoch=2, train_loss=0.7, dev_mae=2.9, dev_ccc=1 / 3),
    ])
    path = tmp_path / "history.csv"
    write_history(path, history)
    loaded = read_history(path)
    assert loaded.epochs == history.epochs
    assert loaded.best_epoch == 2


# ---- 组批 ----

@pytest.mark.parametrize("n, size, expected", [
    (8, 4, [4, 4]),
    (9, 4, [4, 4]),
    (10, 4, [4, 4, 2]),
    (1, 4, []),
])
def test_plan_batches(n, size, expected):
    assert [len(b) for b in plan_batches(list(range(n)), size)] == expected


def test_batch_loader_keeps_order(tmp_path):
    segments = write_feature_segments(tmp_path, [6, 8, 10, 12, 14, 16])
    batches = [[5, 0], [3, 1, 2]]
    loaded = list(BatchLoader(segments, batches, prefetch=1))
    assert [b.segment_ids for b in loaded] == [["seg005", "seg000"], ["seg003", "seg001", "seg002"]]
    np.testing.assert_array_equal(loaded[0].targets, [16.0, 6.0])
    assert loaded[1].features.shape == (3, 1, 64, 64)


def test_batch_loader_reports_missing_features():
    segments = [make_segment("a"), make_segment("b")]
    with pytest.raises(MissingFeatures):
        list(BatchLoader(segments, [[0, 1]]))


# ---- 训练 ----

def short_run(**overrides) -> TrainingConfig:
    values = {"epochs": 2, "batch_size": 4, "learning_rate": 0.01, "shuffle_seed": 3}
    values.update(overrides)
    return TrainingConfig(**values)


def run_training(tmp_path, config: ModelConfig, cfg: TrainingConfig):
    train_segments = write_feature_segments(tmp_path / "train", [6, 8, 10, 12, 14, 16, 18, 20])
    dev_segments = write_feature_segments(tmp_path / "dev", [7, 11, 15, 19], seed=1)
    return train(build_cnn14(config, seed=cfg.init_seed), train_segments, dev_segments, cfg,
                 eval_batch_size=3)


def test_training_is_deterministic(tmp_path, tiny_model_config):
    first = run_training(tmp_path / "a", tiny_model_config, short_run())
    second = run_training(tmp_path / "b", tiny_model_config, short_run())
    assert first.history.epochs == second.history.epochs
    assert encode_checkpoint(first.checkpoint) == encode_checkpoint(second.checkpoint)
    assert len(first.history.epochs) == 2


def test_training_returns_best_epoch(tmp_path, tiny_model_config):
    result = run_training(tmp_path, tiny_model_config, short_run(epochs=3))
    history = result.history
    assert history.best_epoch == select_best_epoch(history.dev_cccs())
    assert result.checkpoint.metadata["best_epoch"] == history.best_epoch
    assert result.checkpoint.metadata["dev_ccc"] == history.best.dev_ccc
    assert result.model.is_standardized

    dev_segments = write_feature_segments(tmp_path / "dev", [7, 11, 15, 19], seed=1)
    preds = predict_segments(result.model, dev_segments, batch_size=3)
    assert ccc(preds, [7, 11, 15, 19]) == pytest.approx(history.best.dev_ccc, abs=1e-9)


def test_training_can_select_by_dev_mae(tmp_path, tiny_model_config):
    result = run_training(tmp_path, tiny_model_config, short_run(epochs=3, selection_metric="dev_mae"))
    history = result.history
    maes = [r.dev_mae for r in history.epochs]
    assert history.best_epoch == maes.index(min(maes)) + 1
    assert result.checkpoint.metadata["selection_metric"] == "dev_mae"
    assert result.checkpoint.metadata["best_epoch"] == history.best_epoch
    with pytest.raises(ValueError):
        TrainingConfig(selection_metric="train_loss")


def test_training_calls_epoch_hook(tmp_path, tiny_model_config):
    train_segments = write_feature_segments(tmp_path / "train", [6, 9, 12, 15])
    dev_segments = write_feature_segments(tmp_path / "dev", [8, 16], seed=1)
    seen = []
    train(build_cnn14(tiny_model_config), train_segments, dev_segments, short_run(),
          on_epoch=seen.append)
    assert [r.epoch for r in seen] == [1, 2]


def test_training_rejects_tiny_partitions(tmp_path, tiny_model_config):
    segments = write_feature_segments(tmp_path, [6, 9, 12])
    with pytest.raises(EmptyPartition):
        train(build_cnn14(tiny_model_config), segments, segments[:1], short_run())
    with pytest.raises(EmptyPartition):
        train(build_cnn14(tiny_model_config), segments[:1], segments, short_run())


@pytest.mark.slow
def test_small_model_overfits_eight_segments(tmp_path):
    targets = [6, 8, 10, 12, 14, 16, 18, 20]
    segments = write_feature_segments(tmp_path, targets, n_frames=128)
    config = ModelConfig(width_scale=0.125, dropout_p=0.0)
    cfg = TrainingConfig(epochs=200, batch_size=8, learning_rate=0.01, selection_metric="dev_mae")
    result = train(build_cnn14(config), segments, segments, cfg)

    preds = predict_segments(result.model, segments)
    assert mae(preds, targets) < 0.5
    assert result.history.best.dev_mae == pytest.approx(mae(preds, targets), abs=1e-9)
    assert result.history.best.dev_ccc > result.history.epochs[0].dev_ccc


@pytest.mark.slow
def test_pretrained_head_replacement_beats_random_init(tmp_path):
    config = ModelConfig(width_scale=1 / 16, dropout_p=0.0)
    corpus_a = write_feature_segments(tmp_path / "a", [6 + i % 15 for i in range(32)], seed=10)
    pretrain_dev = write_feature_segments(tmp_path / "a_dev", [7, 10, 13, 16, 19], seed=11)
    pretrained = train(build_cnn14(config, seed=0), corpus_a, pretrain_dev,
                       TrainingConfig(epochs=60, batch_size=8, learning_rate=0.01, shuffle_seed=1))

    # 更小且不相交的语料 B
    b_train = write_feature_segments(tmp_path / "b", [6 + (3 * i) % 15 for i in range(16)], seed=20)
    b_dev = write_feature_segments(tmp_path / "b_dev", [8, 11, 14, 17, 20], seed=21)
    b_test_targets = [6, 9, 12, 15, 18, 20]
    b_test = write_feature_segments(tmp_path / "b_test", b_test_targets, seed=22)
    fine_tune = TrainingConfig(epochs=10, batch_size=4, learning_rate=0.01, shuffle_seed=2)

    transferred = train(replace_head(pretrained.checkpoint, seed=0), b_train, b_dev, fine_tune)
    scratch = train(build_cnn14(config, seed=0), b_train, b_dev, fine_tune)

    transferred_mae = mae(predict_segments(transferred.model, b_test), b_test_targets)
    scratch_mae = mae(predict_segments(scratch.model, b_test), b_test_targets)
    assert transferred_mae < scratch_mae
