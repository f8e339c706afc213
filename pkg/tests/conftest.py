import numpy as np
import pytest
import torch

from skelanon.data import SkeletonSequence, LabeledSample, make_split, SplitPolicy
from skelanon.synthetic import SyntheticConfig, generate_synthetic
from skelanon.training import SkeletonDataset, seed_everything


@pytest.fixture(autouse=True)
def _fixed_seeds():
    seed_everything(0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_sequence(rng, t=8, d=25):
    coords = rng.normal(size=(t, d, 3)).astype(np.float32)
    return SkeletonSequence(coords, joint_count=d) if d == 25 else SkeletonSequence(
        coords, joint_count=d, topology=[(j - 1, j) for j in range(1, d)]
    )


@pytest.fixture
def small_corpus():
    cfg = SyntheticConfig(n_subjects=4, n_actions=3, samples_per_pair=4, n_frames=16, noise=0.0)
    return generate_synthetic(cfg, 5)


@pytest.fixture
def small_dataset(small_corpus):
    return SkeletonDataset.from_samples(small_corpus)


@pytest.fixture
def small_split(small_corpus):
    return make_split(small_corpus, SplitPolicy.BY_CAMERA, [1])
