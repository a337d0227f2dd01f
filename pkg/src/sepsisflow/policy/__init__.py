from .awr import (
    PolicyBundle, TrainConfig, advantage_weights, attention_trajectory,
    awr_train, expectile_loss, policy_action, value_target,
)
from .bcq import bcq_probs, bcq_train
from .evaluate import EvalReport, evaluate, normalized_policy
from .persist import load_bundle, save_bundle
from .reward import DEFAULT_REWARD, RewardConfig, reward

__all__ = [
    "DEFAULT_REWARD", "EvalReport", "PolicyBundle", "RewardConfig",
    "TrainConfig", "advantage_weights", "attention_trajectory", "awr_train",
    "bcq_probs", "bcq_train", "evaluate", "expectile_loss", "load_bundle",
    "normalized_policy", "policy_action", "reward", "save_bundle",
    "value_target",
]
