import json

import numpy as np
import pytest

from conftest import make_segment, write_feature_segments
from errors import EmptyInput, LengthMismatch, UnknownRunner
from evaluation import (
    UNDEFINED,
    PredictionPair,
    build_report,
    emit_comparison,
    emit_report,
    evaluate,
    mae,
    read_pairs,
    train_mean_baseline,
)
from model import build_cnn14


def random_pairs(rng, n: int, runners: list[str]) -> list[PredictionPair]:
    return [
        PredictionPair(
            segment_id=f"seg{i:04d}",
            runner_id=runners[int(rng.integers(len(runners)))],
            prediction=float(rng.normal(13.0, 3.0)),
            target=float(rng.integers(6, 21)),
        )
        for i in range(n)
    ]


@pytest.mark.parametrize("preds, targets, expected", [
    ([10, 10], [6, 20], 7.0),
    ([12.5], [12.5], 0.0),
    ([6, 20, 13], [20, 6, 13], 28 / 3),
])
def test_mae_examples(preds, targets, expected):
    assert mae(preds, targets) == pytest.approx(expected)


def test_mae_errors():
    with pytest.raises(EmptyInput):
        mae([], [])
    with pytest.raises(LengthMismatch):
        mae([1.0], [1.0, 2.0])


def test_single_pair_has_undefined_ccc():
    report = build_report([PredictionPair("a", "R001", 10.0, 12.0)])
    assert report.global_ccc is None
    assert report.global_mae == 2.0


def test_empty_report_rejected():
    with pytest.raises(EmptyInput):
        build_report([])


def test_strata_and_runners_reconstruct_global_mae(rng, profiles):
    report = build_report(random_pairs(rng, 200, ["R001", "R002", "R003"]), profiles)
    total = sum(r.mae * r.count for r in report.strata.values())
    assert sum(r.count for r in report.strata.values()) == report.count
    assert total / report.count == pytest.approx(report.global_mae, abs=1e-9)

    total = sum(r.mae * r.count for r in report.per_runner)
    assert total / report.count == pytest.approx(report.global_mae, abs=1e-9)
    assert set(report.strata) == {("21-30", "M"), ("21-30", "F"), ("51-60", "F")}


def test_single_stratum_equals_global(rng, profiles):
    report = build_report(random_pairs(rng, 30, ["R002"]), profiles)
    [cell] = report.strata.values()
    assert cell.mae == pytest.approx(report.global_mae, abs=1e-12)
    assert cell.count == 30


def test_per_runner_ranking():
    pairs = [
        PredictionPair("a1", "R002", 12.0, 12.0),
        PredictionPair("a2", "R002", 14.0, 14.0),
        PredictionPair("b1", "R001", 10.0, 14.0),
        PredictionPair("c1", "R003", 10.0, 12.0),
        PredictionPair("c2", "R003", 18.0, 16.0),
    ]
    report = build_report(pairs)
    assert [r.runner_id for r in report.per_runner] == ["R002", "R003", "R001"]
    assert [r.mae for r in report.per_runner] == [0.0, 2.0, 4.0]
    assert [r.count for r in report.per_runner] == [2, 2, 1]


def test_report_ignores_pair_order(rng, profiles):
    pairs = random_pairs(rng, 50, ["R001", "R002", "R003"])
    first = build_report(pairs, profiles)
    second = build_report(list(reversed(pairs)), profiles)
    assert first.pairs == second.pairs
    assert first.global_mae == second.global_mae
    assert first.per_runner == second.per_runner
    assert first.strata == second.strata


def test_unknown_runner_in_strata(rng, profiles):
    with pytest.raises(UnknownRunner):
        build_report(random_pairs(rng, 5, ["R999"]), profiles)


def test_emitted_pairs_reconstruct_mae(tmp_path, rng, profiles):
    report = build_report(random_pairs(rng, 40, ["R001", "R002", "R003"]), profiles)
    paths = emit_report(report, tmp_path / "report")
    for path in paths.values():
        assert path.exists()

    pairs = read_pairs(paths["pairs"])
    assert pairs == report.pairs
    assert mae([p.prediction for p in pairs], [p.target for p in pairs]) == report.global_mae

    summary = json.loads(paths["summary"].read_text(encoding="utf-8"))
    assert summary["count"] == 40
    assert summary["global_ccc"] == report.global_ccc
    assert len(summary["strata"]) == 3
    assert len(paths["per_runner_plot"].read_text(encoding="utf-8").splitlines()) == 3


def test_report_without_profiles(tmp_path):
    report = build_report([PredictionPair("a", "R001", 25.0, 20.0)])
    paths = emit_report(report, tmp_path, clip_predictions=True)
    assert paths["strata"].read_text(encoding="utf-8") == "age_range,sex,mae,count\n"
    assert paths["strata_plot"].read_text(encoding="utf-8") == ""

    summary = json.loads(paths["summary"].read_text(encoding="utf-8"))
    assert summary["global_ccc"] == UNDEFINED
    assert summary["clip_predictions"] is True
    header, row = paths["pairs"].read_text(encoding="utf-8").splitlines()
    assert header.endswith(",prediction_clipped")
    assert row == "a,R001,25.0,20.0,20.0"


def test_evaluate_is_repeatable(tmp_path, tiny_model_config, profiles):
    segments = write_feature_segments(tmp_path, [6, 9, 12, 15, 18, 20], runners=3)
    model = build_cnn14(tiny_model_config)
    model.set_input_stats(np.full(64, -8.0), np.full(64, 2.0))
    first = evaluate(model, segments, profiles, batch_size=4)
    second = evaluate(model, list(reversed(segments)), profiles, batch_size=4, workers=2)
    assert first.pairs == second.pairs
    assert [p.segment_id for p in first.pairs] == sorted(s.segment_id for s in segments)
    assert [p.target for p in first.pairs] == [6.0, 9.0, 12.0, 15.0, 18.0, 20.0]
    assert first.global_ccc is not None


def test_noisier_group_has_higher_stratum_mae(rng, profiles):
    pairs = []
    for i in range(600):
        runner = ("R001", "R002", "R003")[i % 3]
        target = float(rng.integers(6, 21))
        noise = rng.normal(0.0, 3.0 if runner == "R003" else 0.5)
        pairs.append(PredictionPair(f"seg{i:04d}", runner, target + noise, target))
    report = build_report(pairs, profiles)
    noisy = report.strata[("51-60", "F")].mae
    assert noisy > report.strata[("21-30", "M")].mae
    assert noisy > report.strata[("21-30", "F")].mae
    assert report.per_runner[-1].runner_id == "R003"


# ---- 常数基线 ----

def test_train_mean_baseline():
    segments = [make_segment("a", fatigue=6), make_segment("b", fatigue=9), make_segment("c", fatigue=15)]
    assert train_mean_baseline(segments) == 10.0
    with pytest.raises(EmptyInput):
        train_mean_baseline([])


def test_report_records_baseline(tmp_path):
    pairs = [
        PredictionPair("a", "R001", 8.0, 6.0),
        PredictionPair("b", "R001", 18.0, 20.0),
        PredictionPair("c", "R001", 13.0, 13.0),
    ]
    report = build_report(pairs, baseline_prediction=13.0)
    assert report.global_mae == pytest.approx(4 / 3)
    assert report.baseline_mae == pytest.approx(14 / 3)
    assert report.mae_to_baseline == pytest.approx(2 / 7)

    summary = json.loads(emit_report(report, tmp_path)["summary"].read_text(encoding="utf-8"))
    assert summary["baseline_prediction"] == 13.0
    assert summary["baseline_mae"] == pytest.approx(14 / 3)
    assert summary["mae_to_baseline"] == pytest.approx(2 / 7)

    without = json.loads(emit_report(build_report(pairs), tmp_path / "plain")["summary"]
                         .read_text(encoding="utf-8"))
    assert without["baseline_mae"] == UNDEFINED


# ---- 多模型对比 ----

def test_comparison_tables(tmp_path, rng, profiles):
    base = random_pairs(rng, 60, ["R001", "R002", "R003"])
    better = [PredictionPair(p.segment_id, p.runner_id, p.target + 0.5, p.target) for p in base]
    reports = {
        "cnn14-random": build_report(base, profiles, baseline_prediction=13.0),
        "cnn14-pretrained": build_report(better, profiles, baseline_prediction=13.0),
    }
    paths = emit_comparison(reports, tmp_path)

    strata = paths["strata"].read_text(encoding="utf-8").splitlines()
    assert strata[0] == "model,age_range,sex,mae,count"
    assert len(strata) == 1 + 3 * 2
    assert [line.split(",")[0] for line in strata[1:3]] == ["cnn14-random", "cnn14-pretrained"]
    assert strata[2].split(",")[3] == "0.5"

    runners = paths["per_runner"].read_text(encoding="utf-8").splitlines()
    assert len(runners) == 1 + 3 * 2
    ranking = [r.runner_id for r in reports["cnn14-random"].per_runner]
    assert [line.split(",")[1] for line in runners[1::2]] == ranking

    plot = paths["per_runner_plot"].read_text(encoding="utf-8").splitlines()
    assert [len(line.split()) for line in plot] == [3, 3, 3]

    summary = json.loads(paths["summary"].read_text(encoding="utf-8"))
    assert summary["models"] == ["cnn14-random", "cnn14-pretrained"]
    assert summary["global"]["cnn14-pretrained"]["mae"] == pytest.approx(0.5)
    assert summary["count"] == 60


def test_comparison_needs_same_segments(tmp_path, rng, profiles):
    pairs = random_pairs(rng, 10, ["R001"])
    reports = {"a": build_report(pairs, profiles), "b": build_report(pairs[:-1], profiles)}
    with pytest.raises(LengthMismatch):
        emit_comparison(reports, tmp_path)
    with pytest.raises(EmptyInput):
        emit_comparison({}, tmp_path)
