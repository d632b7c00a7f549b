from segiqr.detector.dataset import FeatureDataset, split_train_test
from segiqr.detector.evaluate import EvalReport, evaluate, load_model, save_model
from segiqr.detector.gbt import GbtHyper, GbtModel, train_gbt
from segiqr.detector.logistic import LogisticHyper, LogisticModel, train_logistic
from segiqr.detector.metrics import accuracy_at_half, auc

__all__ = [
    "EvalReport",
    "FeatureDataset",
    "GbtHyper",
    "GbtModel",
    "LogisticHyper",
    "LogisticModel",
    "accuracy_at_half",
    "auc",
    "evaluate",
    "load_model",
    "save_model",
    "split_train_test",
    "train_gbt",
    "train_logistic",
]
