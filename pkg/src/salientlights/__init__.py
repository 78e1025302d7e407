"""Salience-aware object-detection toolkit.

Implements a salience-weighted focal loss with analytic gradients, the
nearest-ground-truth salience weighting rule, a salience-annotated
dataset schema with validation and seeded splitting, a toy feed-forward
detector on synthetic scenes, and a confidence-sweep precision-recall
evaluation with recall-difference curves.
"""

from .backend import BACKEND
from .dataset import (Annotation, BBox, Dataset, DatasetStats, Frame,
                      parse_dataset, serialize_dataset, split, stats, validate)
from .evaluation import EvalConfig, PRPoint, confusion_at_threshold, pr_sweep
from .geometry import (Detection, MatchResult, greedy_match, iou, nearest_gt,
                       salience_weight)
from .loss import (ClassTarget, LossParams, box_l1_loss, focal_grad_logit,
                   focal_loss, salience_focal_loss)
from .toy import (Scene, SceneConfig, ToyModel, TrainConfig, forward,
                  generate_scene, predict, train)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Annotation", "BBox", "Dataset", "DatasetStats", "Frame",
    "parse_dataset", "serialize_dataset", "split", "stats", "validate",
    "EvalConfig", "PRPoint", "confusion_at_threshold", "pr_sweep",
    "Detection", "MatchResult", "greedy_match", "iou", "nearest_gt",
    "salience_weight", "ClassTarget", "LossParams", "box_l1_loss",
    "focal_grad_logit", "focal_loss", "salience_focal_loss", "Scene",
    "SceneConfig", "ToyModel", "TrainConfig", "forward", "generate_scene",
    "predict", "train", "__version__",
]
