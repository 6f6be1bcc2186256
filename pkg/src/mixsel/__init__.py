"""Class-distance-aware partner selection for mixup-style augmentation."""

from mixsel.augment import MixedBatch, build_mixed_batch, choose_partner, cutmix_box, mix_linear, sample_lambda
from mixsel.config import ExperimentConfig, TrainConfig
from mixsel.dataset import (BlobsSpec, LabeledDataset, LongTailSpec, generate_blobs, iter_batches,
                            load_csv, make_long_tailed, save_csv)
from mixsel.metrics import CalibrationReport, class_accuracy_series, ece
from mixsel.model import Classifier, evaluate, init_classifier, loss_soft_ce, predict_probs, sgd_step
from mixsel.probstats import ClassStats, class_covariance, class_mean, class_stats, distance_matrix, mahalanobis
from mixsel.selection import SelectionState, epoch_update, init_state, select_classes, update_class

__all__ = [
    "BlobsSpec", "CalibrationReport", "ClassStats", "Classifier", "ExperimentConfig", "LabeledDataset",
    "LongTailSpec", "MixedBatch", "SelectionState", "TrainConfig", "build_mixed_batch", "choose_partner",
    "class_accuracy_series", "class_covariance", "class_mean", "class_stats", "cutmix_box",
    "distance_matrix", "ece", "epoch_update", "evaluate", "generate_blobs", "init_classifier",
    "init_state", "iter_batches", "load_csv", "loss_soft_ce", "mahalanobis", "make_long_tailed",
    "mix_linear", "predict_probs", "sample_lambda", "save_csv", "select_classes", "sgd_step",
    "update_class",
]
