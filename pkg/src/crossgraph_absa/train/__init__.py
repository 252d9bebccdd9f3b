"""Loss, optimisers, metrics, the training loop and table-producing harnesses."""

from crossgraph_absa.train.ablation import (
    DEFAULT_SWEEP_DEPTHS,
    ResultRow,
    ResultTable,
    Scores,
    run_ablation,
    run_layer_sweep,
)
from crossgraph_absa.train.loss import cross_entropy_loss
from crossgraph_absa.train.metrics import EpochMetrics, EvalReport, RunMetrics, score_predictions
from crossgraph_absa.train.optim import AdamState, Optimizer, adam_step, adamw_step, clip_by_global_norm
from crossgraph_absa.train.trainer import (
    EarlyStopping,
    PreparedInstance,
    TrainingOutcome,
    evaluate,
    evaluate_split,
    loss_weights,
    prepare_split,
    train,
)

__all__ = [
    "DEFAULT_SWEEP_DEPTHS",
    "AdamState",
    "EarlyStopping",
    "EpochMetrics",
    "EvalReport",
    "Optimizer",
    "PreparedInstance",
    "ResultRow",
    "ResultTable",
    "RunMetrics",
    "Scores",
    "TrainingOutcome",
    "adam_step",
    "adamw_step",
    "clip_by_global_norm",
    "cross_entropy_loss",
    "evaluate",
    "evaluate_split",
    "loss_weights",
    "prepare_split",
    "run_ablation",
    "run_layer_sweep",
    "score_predictions",
    "train",
]
