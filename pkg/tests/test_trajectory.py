import json

import numpy as np
import pytest

from pneuhand.hand import DofId, HandState
from pneuhand.trajectory import (
    TrackedFrame,
    TrajectoryError,
    constant_trajectory,
    frame_from_record,
    frame_to_record,
    load_trajectory,
    save_trajectory,
)
from pneuhand.transforms import Pose


def random_frames(n, seed=0):
    rng = np.random.default_rng(seed)
    frames = []
    t = 0.0
    for _ in range(n):
        t += rng.uniform(0.01, 0.1)
        q = rng.normal(size=4)
        wrist = Pose(rng.uniform(-300, 300, size=3), q / np.linalg.norm(q))
        hand = HandState({d: rng.uniform(0, 30) for d in DofId})
        frames.append(TrackedFrame(t, wrist, hand))
    return frames


def test_round_trip_is_lossless(tmp_path):
    frames = random_frames(1000)
    path = tmp_path / "traj.jsonl"
    assert save_trajectory(frames, path) == 1000
    loaded = load_trajectory(path)
    assert loaded == frames


def test_record_round_trip_single():
    frame = random_frames(1)[0]
    assert frame_from_record(frame_to_record(frame)) == frame


def test_decreasing_timestamps_name_the_line(tmp_path):
    frames = random_frames(3)
    records = [frame_to_record(f) for f in frames]
    records[2]["t"] = records[0]["t"]  # goes backwards
    path = tmp_path / "bad.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in records))
    with pytest.raises(TrajectoryError, match="line 3"):
        load_trajectory(path)


def test_truncated_final_line_names_the_line(tmp_path):
    frames = random_frames(2)
    lines = [json.dumps(frame_to_record(f)) for f in frames]
    path = tmp_path / "trunc.jsonl"
    path.write_text(lines[0] + "\n" + lines[1][: len(lines[1]) // 2])
    with pytest.raises(TrajectoryError, match="line 2"):
        load_trajectory(path)


def test_missing_field_names_line_and_field(tmp_path):
    record = frame_to_record(random_frames(1)[0])
    del record["quat"]
    path = tmp_path / "missing.jsonl"
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(TrajectoryError, match="line 1.*quat"):
        load_trajectory(path)


def test_incomplete_angles_rejected(tmp_path):
    record = frame_to_record(random_frames(1)[0])
    del record["angles"]["spread_2"]
    path = tmp_path / "angles.jsonl"
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(TrajectoryError, match="angles"):
        load_trajectory(path)


def test_blank_lines_are_skipped(tmp_path):
    frames = random_frames(2)
    path = tmp_path / "blank.jsonl"
    path.write_text(
        json.dumps(frame_to_record(frames[0])) + "\n\n" + json.dumps(frame_to_record(frames[1])) + "\n"
    )
    assert load_trajectory(path) == frames


def test_constant_trajectory_spans_duration():
    base = random_frames(1)[0]
    frames = list(constant_trajectory(base, duration_s=2.0, fps=10.0))
    assert len(frames) == 21
    assert frames[0].t_s == base.t_s
    assert frames[-1].t_s == pytest.approx(base.t_s + 2.0)
    assert all(f.wrist == base.wrist and f.hand == base.hand for f in frames)
