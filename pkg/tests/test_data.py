import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skelanon.data import (
    NUM_JOINTS,
    LabeledSample,
    SkeletonSequence,
    SplitPolicy,
    center_normalize,
    filter_samples,
    load_store,
    make_split,
    parse_skeleton_file,
    resample_frames,
    save_store,
    write_skeleton_file,
)
from skelanon.errors import EmptyPartition, MalformedFile

from conftest import random_sequence


def make_fixture_text(frames):
    return write_skeleton_file(frames)


def zero_fixture(n_frames=1, n_bodies=1):
    frame = [(b, np.zeros((NUM_JOINTS, 3), dtype=np.float32)) for b in range(n_bodies)]
    return make_fixture_text([frame] * n_frames)


def labeled(seq, action=0, private=0, subject=0, camera=0, n_bodies=1):
    return LabeledSample(seq, action, private, subject, camera, n_bodies=n_bodies)


class TestParser:
    def test_zero_fixture_single_body(self):
        bodies = parse_skeleton_file(zero_fixture())
        assert len(bodies) == 1
        body_id, seq = bodies[0]
        assert body_id == 0
        assert seq.coords.shape == (1, 25, 3)
        assert (seq.coords == 0).all()

    def test_truncated_frame_count(self):
        text = zero_fixture(n_frames=1)
        truncated = text.replace("1\n", "2\n", 1)  # declare 2 frames, provide 1
        with pytest.raises(MalformedFile) as err:
            parse_skeleton_file(truncated)
        assert err.value.line_number is not None

    def test_two_body_fixture_round_trips(self, rng):
        frames = []
        joints = {7: [], 9: []}
        for _ in range(3):
            frame = []
            for body_id in (7, 9):
                j = rng.normal(size=(25, 3)).astype(np.float32)
                joints[body_id].append(j)
                frame.append((body_id, j))
            frames.append(frame)
        bodies = dict(parse_skeleton_file(make_fixture_text(frames)))
        assert set(bodies) == {7, 9}
        for body_id in (7, 9):
            expected = np.stack(joints[body_id])
            assert bodies[body_id].coords.tobytes() == expected.tobytes()

    def test_body_absent_from_a_frame(self, rng):
        j = rng.normal(size=(25, 3)).astype(np.float32)
        frames = [[(1, j), (2, j)], [(1, j)]]
        bodies = dict(parse_skeleton_file(make_fixture_text(frames)))
        assert bodies[1].n_frames == 2
        assert bodies[2].n_frames == 1

    def test_non_numeric_token_rejected(self):
        text = zero_fixture().replace("0.0", "oops", 1)
        with pytest.raises(MalformedFile):
            parse_skeleton_file(text)

    def test_wrong_joint_count_rejected(self):
        text = zero_fixture().replace("\n25\n", "\n24\n", 1)
        with pytest.raises(MalformedFile):
            parse_skeleton_file(text)

    def test_parse_serialize_parse_bit_exact(self, rng):
        frames = [[(3, rng.normal(size=(25, 3)).astype(np.float32))] for _ in range(4)]
        text = make_fixture_text(frames)
        first = parse_skeleton_file(text)
        second = parse_skeleton_file(
            make_fixture_text(
                [[(bid, seq.coords[t]) for bid, seq in first] for t in range(4)]
            )
        )
        assert first[0][1].coords.tobytes() == second[0][1].coords.tobytes()


class TestFilter:
    def test_multi_body_dropped(self, rng):
        samples = [labeled(random_sequence(rng)) for _ in range(5)]
        samples[2] = labeled(random_sequence(rng), n_bodies=2)
        kept, drops = filter_samples(samples)
        assert len(kept) == 4
        assert dict(drops) == {"multi_body": 1}

    def test_all_valid_is_identity(self, rng):
        samples = [labeled(random_sequence(rng)) for _ in range(3)]
        kept, drops = filter_samples(samples)
        assert kept == samples
        assert not drops

    def test_nan_dropped_as_non_finite(self, rng):
        seq = random_sequence(rng)
        seq.coords[0, 0, 0] = np.nan
        kept, drops = filter_samples([labeled(seq)])
        assert kept == []
        assert dict(drops) == {"non_finite": 1}

    def test_idempotent(self, rng):
        samples = [labeled(random_sequence(rng), n_bodies=1 + (i % 2)) for i in range(6)]
        once, _ = filter_samples(samples)
        twice, drops = filter_samples(once)
        assert twice == once
        assert not drops


class TestSplit:
    def _roster(self, subjects, cameras, rng):
        return [
            labeled(random_sequence(rng), subject=s, camera=c)
            for s in subjects
            for c in cameras
        ]

    def test_by_subject_holdout(self, rng):
        samples = self._roster([1, 2, 3, 4], [0], rng)
        split = make_split(samples, SplitPolicy.BY_SUBJECT, [3, 4])
        val_subjects = {samples[i].subject_id for i in split.val_indices}
        train_subjects = {samples[i].subject_id for i in split.train_indices}
        assert val_subjects == {3, 4}
        assert train_subjects == {1, 2}

    def test_by_camera_keeps_subjects_in_both(self, rng):
        samples = self._roster([1, 2, 3], [0, 1], rng)
        split = make_split(samples, SplitPolicy.BY_CAMERA, [1])
        train_subjects = {samples[i].subject_id for i in split.train_indices}
        val_subjects = {samples[i].subject_id for i in split.val_indices}
        assert train_subjects == val_subjects == {1, 2, 3}

    def test_holdout_everything_raises(self, rng):
        samples = self._roster([1, 2], [0], rng)
        with pytest.raises(EmptyPartition):
            make_split(samples, SplitPolicy.BY_SUBJECT, [1, 2])

    @given(
        n_subjects=st.integers(2, 6),
        n_cameras=st.integers(1, 3),
        holdout_size=st.integers(1, 5),
    )
    @settings(max_examples=30, deadline=None)
    def test_partitions_disjoint_and_exhaustive(self, n_subjects, n_cameras, holdout_size):
        rng = np.random.default_rng(0)
        samples = self._roster(range(n_subjects), range(n_cameras), rng)
        holdout = list(range(min(holdout_size, n_subjects - 1)))
        if not holdout:
            return
        split = make_split(samples, SplitPolicy.BY_SUBJECT, holdout)
        train, val = set(split.train_indices), set(split.val_indices)
        assert not train & val
        assert train | val == set(range(len(samples)))


class TestResample:
    def test_identity_when_lengths_match(self, rng):
        seq = random_sequence(rng, t=10)
        out = resample_frames(seq, 10)
        assert (out.coords == seq.coords).all()

    def test_cyclic_padding(self, rng):
        seq = random_sequence(rng, t=2)
        out = resample_frames(seq, 5)
        expected = seq.coords[[0, 1, 0, 1, 0]]
        assert (out.coords == expected).all()

    def test_uniform_subsampling_matches_index_formula(self):
        ramp = np.arange(100, dtype=np.float32)[:, None, None] * np.ones((1, 25, 3), np.float32)
        seq = SkeletonSequence(ramp)
        out = resample_frames(seq, 50)
        expected_idx = [round(i * 100 / 50) for i in range(50)]
        assert out.coords[:, 0, 0].tolist() == [float(i) for i in expected_idx]

    @given(target=st.integers(1, 40), t=st.integers(1, 40))
    @settings(max_examples=50, deadline=None)
    def test_shape_and_value_preservation(self, target, t):
        rng = np.random.default_rng(t * 100 + target)
        seq = random_sequence(rng, t=t)
        out = resample_frames(seq, target)
        assert out.coords.shape == (target, 25, 3)
        source_rows = {bytes(f.tobytes()) for f in seq.coords}
        assert all(f.tobytes() in source_rows for f in out.coords)


class TestCenterNormalize:
    def test_already_centered_unchanged(self, rng):
        seq = random_sequence(rng)
        seq.coords -= seq.coords[0, 0]
        out = center_normalize(seq)
        assert (out.coords == seq.coords).all()

    def test_constant_offset_removed(self, rng):
        seq = random_sequence(rng)
        base = center_normalize(seq)
        shifted = SkeletonSequence(seq.coords + np.float32([1, 2, 3]))
        out = center_normalize(shifted)
        assert np.allclose(out.coords, base.coords, atol=1e-6)

    def test_root_lands_at_origin(self, rng):
        out = center_normalize(random_sequence(rng))
        assert (out.coords[0, 0] == 0).all()

    def test_idempotent_and_commutes_with_resample(self, rng):
        seq = random_sequence(rng, t=12)
        once = center_normalize(seq)
        assert (center_normalize(once).coords == once.coords).all()
        a = center_normalize(resample_frames(seq, 7))
        b = resample_frames(center_normalize(seq), 7)
        assert (a.coords == b.coords).all()


class TestStore:
    def test_round_trip(self, rng, tmp_path):
        samples = [labeled(random_sequence(rng), action=i, private=i, subject=i, camera=i % 2)
                   for i in range(3)]
        save_store(samples, tmp_path / "store")
        loaded = load_store(tmp_path / "store")
        assert len(loaded) == 3
        for orig, back in zip(samples, loaded):
            assert back.sequence.coords.tobytes() == orig.sequence.coords.tobytes()
            assert (back.action, back.private, back.subject_id, back.camera_id) == (
                orig.action, orig.private, orig.subject_id, orig.camera_id
            )
