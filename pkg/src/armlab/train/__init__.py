from armlab.train.config import TrainConfig
from armlab.train.loop import train, train_step
from armlab.train.evaluate import (
    EvalReport, run_rollouts, evaluate_checkpoint, eval_protocol,
)
from armlab.train.plots import emit_curves, emit_ablation_curves
from armlab.train.ablate import ablate, KINDS

__all__ = [
    "TrainConfig", "train", "train_step",
    "EvalReport", "run_rollouts", "evaluate_checkpoint", "eval_protocol",
    "emit_curves", "emit_ablation_curves", "ablate", "KINDS",
]
