import numpy as np
import pytest

from conftest import make_segment
from dataset import (
    PARTITIONS,
    AnswerEvent,
    RunnerProfile,
    Segment,
    SessionManifest,
    label_histogram,
    load_manifest,
    read_partition,
    read_segments,
    segment_session,
    split_partitions,
    write_label_histogram,
    write_manifest,
    write_partition,
    write_segments,
)
from errors import EventsNotSorted, ParseError, RangeViolation, TooFewSessions, UnknownRunner


def session_with(times: list[float], session_id: str = "S1") -> SessionManifest:
    return SessionManifest(
        session_id=session_id,
        runner_id="R001",
        audio_path=f"audio/{session_id}.wav",
        events=tuple(AnswerEvent(time_s=t, fatigue=12, wellbeing=0) for t in times),
    )


def write_corpus_tables(root, runners: str, sessions: str, events: str):
    root.mkdir(parents=True, exist_ok=True)
    (root / "runners.csv").write_text(runners, encoding="utf-8")
    (root / "sessions.csv").write_text(sessions, encoding="utf-8")
    (root / "events.csv").write_text(events, encoding="utf-8")


# ---- 片段切分 ----

def test_segment_window_arithmetic():
    manifest = SessionManifest(
        session_id="S1", runner_id="R001", audio_path="a.wav",
        events=(AnswerEvent(time_s=20.0, fatigue=14, wellbeing=-2, surface="gravel"),),
    )
    [segment] = segment_session(manifest, 60.0)
    assert (segment.start_s, segment.end_s) == (5.0, 35.0)
    assert segment.fatigue == 14
    assert segment.wellbeing == -2
    assert segment.surface == "gravel"


def test_boundary_events_are_dropped():
    assert segment_session(session_with([10.0]), 60.0) == []
    assert segment_session(session_with([50.0]), 60.0) == []
    assert len(segment_session(session_with([15.0, 45.0]), 60.0)) == 2


def test_regular_questions_over_a_long_run():
    # 最后一个回答在 2700 s，窗口越界被丢弃
    times = [60.0 + 240.0 * i for i in range(12)]
    segments = segment_session(session_with(times), 2700.0)
    assert len(segments) == 11
    assert segments[-1].end_s == 2475.0
    assert all(b.start_s >= a.end_s for a, b in zip(segments, segments[1:]))


def test_overlapping_segments_are_kept():
    segments = segment_session(session_with([20.0, 30.0]), 60.0)
    assert len(segments) == 2
    assert segments[1].start_s < segments[0].end_s


def test_unsorted_events_rejected():
    with pytest.raises(EventsNotSorted):
        segment_session(session_with([40.0, 20.0]), 60.0)


def test_empty_session_has_no_segments():
    assert segment_session(session_with([]), 60.0) == []


def test_segment_table_round_trip(tmp_path):
    segments = segment_session(session_with([20.0, 40.0]), 60.0)
    path = tmp_path / "segments.csv"
    write_segments(path, segments)
    assert read_segments(path) == segments
    assert read_segments(path, segment_seconds=30.0) == segments


def test_segment_window_must_be_valid():
    with pytest.raises(ValueError):
        make_segment("a", start_s=-1.0)
    with pytest.raises(ValueError):
        Segment(segment_id="a", session_id="S1", runner_id="R001", start_s=10.0, end_s=10.0,
                fatigue=12, wellbeing=0)


def test_segment_table_duration_is_checked(tmp_path):
    path = tmp_path / "segments.csv"
    write_segments(path, segment_session(session_with([20.0, 40.0]), 60.0, half_window_s=10.0))
    assert len(read_segments(path)) == 2
    with pytest.raises(RangeViolation) as info:
        read_segments(path, segment_seconds=30.0)
    assert info.value.line == 2
    assert info.value.field == "end_s"

    path.write_text(
        path.read_text(encoding="utf-8").replace(",10.0,30.0,", ",30.0,10.0,", 1), encoding="utf-8"
    )
    with pytest.raises(ParseError):
        read_segments(path)


# ---- 清单 ----

def test_manifest_round_trip(tmp_path):
    profiles = [RunnerProfile(runner_id="R001", age_range="31-40", sex="F")]
    sessions = [session_with([20.0, 200.5]), session_with([], session_id="S2")]
    write_manifest(tmp_path, sessions, profiles)
    loaded_sessions, loaded_profiles = load_manifest(tmp_path)
    assert loaded_profiles == profiles
    assert loaded_sessions == sessions
    assert loaded_sessions[1].events == ()


def test_manifest_fatigue_out_of_range(tmp_path):
    write_corpus_tables(
        tmp_path,
        "runner_id,age_range,sex\nR001,21-30,M\n",
        "session_id,runner_id,audio_path\nS1,R001,a.wav\n",
        "session_id,time_s,fatigue,wellbeing,surface\nS1,20,12,0,asphalt\nS1,40,21,0,asphalt\n",
    )
    with pytest.raises(RangeViolation) as info:
        load_manifest(tmp_path)
    assert info.value.line == 3
    assert info.value.field == "fatigue"


def test_manifest_unknown_runner(tmp_path):
    write_corpus_tables(
        tmp_path,
        "runner_id,age_range,sex\nR001,21-30,M\n",
        "session_id,runner_id,audio_path\nS1,R999,a.wav\n",
        "session_id,time_s,fatigue,wellbeing,surface\n",
    )
    with pytest.raises(UnknownRunner):
        load_manifest(tmp_path)


def test_manifest_bad_values(tmp_path):
    write_corpus_tables(
        tmp_path,
        "runner_id,age_range,sex\nR001,18-20,M\n",
        "session_id,runner_id,audio_path\n",
        "session_id,time_s,fatigue,wellbeing,surface\n",
    )
    with pytest.raises(ParseError):
        load_manifest(tmp_path)


def test_manifest_duplicate_times(tmp_path):
    write_corpus_tables(
        tmp_path,
        "runner_id,age_range,sex\nR001,21-30,M\n",
        "session_id,runner_id,audio_path\nS1,R001,a.wav\n",
        "session_id,time_s,fatigue,wellbeing,surface\nS1,20,12,0,\nS1,20,13,0,\n",
    )
    with pytest.raises(ParseError):
        load_manifest(tmp_path)


def test_manifest_orders_events_by_time(tmp_path):
    write_corpus_tables(
        tmp_path,
        "runner_id,age_range,sex\nR001,21-30,M\n",
        "session_id,runner_id,audio_path\nS1,R001,a.wav\n",
        "session_id,time_s,fatigue,wellbeing,surface\nS1,90,14,0,gravel\nS1,30,9,2,asphalt\n",
    )
    [session], _ = load_manifest(tmp_path)
    assert [e.time_s for e in session.events] == [30.0, 90.0]
    assert session.events[0].surface == "asphalt"


# ---- 分区 ----

def corpus_segments(sizes: list[int]) -> list:
    segments = []
    for s, size in enumerate(sizes):
        for i in range(size):
            segments.append(make_segment(f"S{s:03d}-{i:03d}", session_id=f"S{s:03d}"))
    return segments


def test_three_equal_sessions_one_per_partition():
    split = split_partitions(corpus_segments([4, 4, 4]), (1 / 3, 1 / 3, 1 / 3), seed=3)
    for partition in ("train", "dev", "test"):
        assert len(split.sessions_in(partition)) == 1


def test_split_is_deterministic_and_order_free():
    segments = corpus_segments([3, 5, 2, 7, 4, 6])
    first = split_partitions(segments, seed=11)
    second = split_partitions(list(reversed(segments)), seed=11)
    assert first.assignment == second.assignment


def test_split_shares_close_to_targets():
    sizes = np.random.default_rng(7).integers(5, 16, size=100).tolist()
    split = split_partitions(corpus_segments(sizes), (0.56, 0.23, 0.21), seed=0)
    shares = split.shares()
    for partition, target in zip(("train", "dev", "test"), (0.56, 0.23, 0.21)):
        assert abs(shares[partition] - target) <= 0.05


def test_split_sessions_never_straddle_partitions():
    rng = np.random.default_rng(0)
    for seed in range(100):
        sizes = rng.integers(1, 12, size=int(rng.integers(3, 30))).tolist()
        split = split_partitions(corpus_segments(sizes), seed=seed)
        assert split.is_test_disjoint()
        for partition in ("train", "dev", "test"):
            assert split.sessions_in(partition)
        owners = {}
        for segment_id, partition in split.assignment.items():
            owners.setdefault(split.session_of[segment_id], set()).add(partition)
        assert all(len(parts) == 1 for parts in owners.values())


def test_split_preserves_labels_and_runner_sessions(rng):
    segments = []
    for s in range(12):
        for i in range(int(rng.integers(1, 8))):
            segments.append(make_segment(
                f"S{s:03d}-{i:03d}", session_id=f"S{s:03d}", runner_id=f"R{s % 4 + 1:03d}",
                fatigue=int(rng.integers(6, 21)),
            ))
    split = split_partitions(segments, seed=4)
    parts = {p: split.segments_in(p, segments) for p in PARTITIONS}

    regrouped = [s for part in parts.values() for s in part]
    assert sorted(s.segment_id for s in regrouped) == sorted(s.segment_id for s in segments)
    assert sorted(s.fatigue for s in regrouped) == sorted(s.fatigue for s in segments)
    for runner in {s.runner_id for s in segments}:
        before = {s.session_id for s in segments if s.runner_id == runner}
        after = {s.session_id for s in regrouped if s.runner_id == runner}
        assert after == before

    histogram = label_histogram(split, segments)
    for partition, part in parts.items():
        assert histogram[partition] == [sum(s.fatigue == rpe for s in part) for rpe in range(6, 21)]


def test_label_histogram_table(tmp_path):
    split = split_partitions(corpus_segments([2, 3, 4]), (1 / 3, 1 / 3, 1 / 3), seed=0)
    path = tmp_path / "rpe_histogram.csv"
    write_label_histogram(path, label_histogram(split, corpus_segments([2, 3, 4])))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "rpe,train,dev,test"
    assert len(lines) == 16
    # make_segment 的默认标签为 12
    row = lines[12 - 6 + 1].split(",")
    assert row[0] == "12"
    assert sorted(int(v) for v in row[1:]) == [2, 3, 4]


def test_split_needs_three_sessions():
    with pytest.raises(TooFewSessions):
        split_partitions(corpus_segments([5, 5]))


def test_partition_round_trip(tmp_path):
    split = split_partitions(corpus_segments([2, 3, 4, 5]), seed=1)
    path = tmp_path / "partition.csv"
    write_partition(path, split)
    loaded = read_partition(path)
    assert loaded.assignment == split.assignment
    assert loaded.session_of == split.session_of
