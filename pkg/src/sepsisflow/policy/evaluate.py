"""Evaluation protocol: logged-action match rate with per-action precision/
recall, plus average per-step reward under simulator rollouts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..cohort import (
    N_ACTIONS, NormStats, SepsisSimulator, Transition, rollout_average_reward,
)
from .reward import DEFAULT_REWARD, RewardConfig, reward


@dataclass
class EvalReport:
    accuracy: float
    average_reward: float | None
    precision: list
    recall: list
    confusion: np.ndarray
    n_test: int = 0
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "average_reward": self.average_reward,
                "precision": list(self.precision), "recall": list(self.recall),
                "confusion": self.confusion.tolist(), "n_test": self.n_test,
                "config": self.config}


def normalized_policy(policy_fn, stats: NormStats):
    """Adapt a normalized-state policy to the simulator's raw states."""
    std = np.where(stats.std > 0, stats.std, 1.0)
    nonzero = stats.std > 0

    def raw_policy(raw_state: np.ndarray) -> int:
        s = np.where(nonzero, (raw_state - stats.mean) / std, 0.0)
        return int(policy_fn(s))

    return raw_policy


def evaluate(policy_fn, test_transitions: list[Transition],
             simulator: SepsisSimulator | None = None,
             norm_stats: NormStats | None = None,
             reward_config: RewardConfig = DEFAULT_REWARD,
             n_episodes: int = 100, seed: int = 0) -> EvalReport:
    """policy_fn maps one normalized state vector to an action id. When a
    simulator (and the normalization stats its raw states require) is given,
    average per-step rollout reward is reported as well."""
    if not test_transitions:
        raise ValueError("empty test set")
    pred = np.array([policy_fn(t.s) for t in test_transitions], dtype=np.int64)
    logged = np.array([t.a for t in test_transitions], dtype=np.int64)
    confusion = np.zeros((N_ACTIONS, N_ACTIONS), dtype=np.int64)
    np.add.at(confusion, (logged, pred), 1)
    accuracy = float(np.mean(pred == logged))
    tp = np.diag(confusion).astype(np.float64)
    pred_tot = confusion.sum(axis=0).astype(np.float64)
    true_tot = confusion.sum(axis=1).astype(np.float64)
    precision = [float(tp[a] / pred_tot[a]) if pred_tot[a] else 0.0
                 for a in range(N_ACTIONS)]
    recall = [float(tp[a] / true_tot[a]) if true_tot[a] else 0.0
              for a in range(N_ACTIONS)]
    avg_reward = None
    if simulator is not None:
        if norm_stats is None:
            raise ValueError("norm_stats required for simulator rollouts")

        def reward_fn(map_v, spo2_v, lact_v, mortality):
            return reward(map_v, spo2_v, lact_v, mortality, reward_config)

        avg_reward = rollout_average_reward(
            simulator, normalized_policy(policy_fn, norm_stats), reward_fn,
            n_episodes=n_episodes, seed=seed)
    return EvalReport(accuracy=accuracy, average_reward=avg_reward,
                      precision=precision, recall=recall, confusion=confusion,
                      n_test=len(test_transitions))
