"""skelanon: privacy-leakage audits and adversarial anonymization for
3D skeleton action sequences."""

from .data import (
    DatasetSplit,
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
from .losses import LossWeights
from .models import ResidualAnonymizer, ToyGCN, UNetAnonymizer
from .synthetic import SyntheticConfig, bone_lengths, generate_synthetic
from .training import SkeletonDataset, TrainConfig, adversarial_train, apply_anonymizer, pretrain_classifier
from .evaluation import EvalReport, audit_leakage, evaluate_anonymizer, select_best, sweep

__version__ = "0.1.0"
