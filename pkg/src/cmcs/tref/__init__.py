"""Trust evaluation: expert knowledge, two-channel graph convolution, training."""

from .expert import BernoulliConfig, ExpertEdge, estimate_pr, generate_expert_knowledge
from .model import (
    PropagationGraph,
    TrefModel,
    TrustState,
    backward,
    forward,
    loss,
    predict_level,
    predict_proba,
    softmax,
)
from .train import (
    Adam,
    FittedTrust,
    TrainConfig,
    TrainingDiverged,
    build_propagation,
    evaluate_pairs,
    exact_match_accuracy,
    load_model,
    save_model,
    train,
)
from .values import pair_auc, trust_benefit, trust_value

__all__ = [
    "Adam", "BernoulliConfig", "ExpertEdge", "FittedTrust", "PropagationGraph", "TrainConfig",
    "TrainingDiverged", "TrefModel", "TrustState", "backward", "build_propagation", "estimate_pr",
    "evaluate_pairs", "exact_match_accuracy", "forward", "generate_expert_knowledge", "load_model",
    "loss", "pair_auc", "predict_level", "predict_proba", "save_model", "softmax", "train",
    "trust_benefit", "trust_value",
]
