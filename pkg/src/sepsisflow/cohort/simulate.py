"""Ground-truth synthetic ICU cohort.

Three latent severity regimes drive mean-reverting vital/lab dynamics with
additive treatment effects (fluids raise MAP, vasopressors raise it more).
A clinician-like behavior policy logs actions; a per-window death hazard
rises with hypotension, hyperlactatemia and hypoxia, so treatment choices
matter for outcomes. All randomness flows from one seeded generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import FEATURE_INDEX, FEATURE_NAMES, N_FEATURES, CANONICAL_FEATURES
from .io import CohortTable, RawRecord

I_MAP = FEATURE_INDEX["map"]
I_SPO2 = FEATURE_INDEX["spo2"]
I_LACT = FEATURE_INDEX["lactate"]
I_HR = FEATURE_INDEX["heart_rate"]
I_FLUID = FEATURE_INDEX["prior_fluids"]
I_VASO = FEATURE_INDEX["prior_vasopressors"]

WINDOW_HOURS = 4.0

# per-tier setpoints for the three driving vitals and the hazard intercept
TIER_PARAMS = (
    {"map": 78.0, "spo2": 97.0, "lactate": 1.2, "hazard": -5.2},   # low
    {"map": 62.0, "spo2": 93.0, "lactate": 2.8, "hazard": -3.0},   # intermediate
    {"map": 52.0, "spo2": 88.0, "lactate": 5.0, "hazard": -1.1},   # high
)

# additive per-window treatment effect (scaled by config.treatment_effect).
# Fluids mainly restore perfusion (lactate clearance) with a modest pressure
# effect; vasopressors mainly raise MAP with little lactate clearance — so
# the severity-matched action is identifiable per regime.
MAP_EFFECT = (0.0, 4.0, 12.0, 16.0)
SPO2_EFFECT = (0.0, 0.6, 1.2, 1.8)
LACT_EFFECT = (0.0, 0.60, 0.10, 0.70)

# overtreatment harm in already-stable patients (MAP above threshold and
# lactate below threshold): fluid overload impairs oxygenation, excess
# vasoconstriction raises lactate. Makes blanket treatment suboptimal
# versus targeted care while leaving treatment of sick patients beneficial.
OVERTREAT_MAP = 70.0
OVERTREAT_LACTATE = 2.0
OVERTREAT_SPO2 = (0.0, -4.0, -4.0, -5.0)   # overload / V-Q mismatch
OVERTREAT_LACT = (0.0, 0.8, 2.5, 3.0)      # vasoconstriction hypoperfusion

# generic baselines for the remaining features (physical units)
BASELINES = {
    "heart_rate": 82.0, "sbp": 115.0, "dbp": 68.0, "resp_rate": 18.0,
    "temp_c": 37.2, "gcs_total": 13.0, "urine_output": 220.0,
    "creatinine": 1.1, "wbc": 11.0, "platelets": 230.0, "bun": 22.0,
    "glucose": 135.0, "sodium": 139.0, "potassium": 4.1, "chloride": 103.0,
    "bicarbonate": 23.0, "hemoglobin": 11.5, "bilirubin": 1.0, "inr": 1.2,
    "ph": 7.38, "pao2": 95.0, "paco2": 40.0, "albumin": 3.2,
}
# features pushed in a severity-correlated direction (per tier index step)
SEVERITY_SHIFT = {
    "heart_rate": 12.0, "resp_rate": 4.0, "gcs_total": -2.0, "urine_output": -60.0,
    "creatinine": 0.6, "wbc": 4.0, "platelets": -45.0, "bun": 10.0,
    "bicarbonate": -3.0, "inr": 0.5, "ph": -0.05, "pao2": -12.0, "bilirubin": 0.8,
}
NOISE_SCALE = {
    "heart_rate": 4.0, "sbp": 5.0, "dbp": 4.0, "resp_rate": 1.5, "temp_c": 0.25,
    "gcs_total": 0.6, "urine_output": 35.0, "creatinine": 0.12, "wbc": 1.2,
    "platelets": 12.0, "bun": 2.5, "glucose": 18.0, "sodium": 1.5, "potassium": 0.18,
    "chloride": 1.5, "bicarbonate": 0.8, "hemoglobin": 0.35, "bilirubin": 0.2,
    "inr": 0.1, "ph": 0.02, "pao2": 8.0, "paco2": 3.0, "albumin": 0.12,
}


@dataclass
class SimConfig:
    n_patients: int
    seed: int = 0
    tier_mix: tuple[float, float, float] = (0.50, 0.30, 0.20)
    treatment_effect: float = 1.0
    max_windows: int = 40
    missing_prob: float = 0.15
    undertreat_prob: float = 0.30

    def __post_init__(self):
        if self.n_patients < 1:
            raise ValueError("n_patients must be >= 1")
        mix = np.asarray(self.tier_mix, dtype=np.float64)
        if mix.shape != (3,) or np.any(mix < 0) or abs(mix.sum() - 1.0) > 1e-9:
            raise ValueError("tier_mix must be a 3-element probability vector")


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class SepsisSimulator:
    """Markov patient-dynamics model; also usable for policy rollouts."""

    def __init__(self, config: SimConfig):
        self.config = config

    # ---- core dynamics ----------------------------------------------

    def initial_state(self, tier: int, rng: np.random.Generator) -> np.ndarray:
        p = TIER_PARAMS[tier]
        s = np.empty(N_FEATURES)
        for j, name in enumerate(FEATURE_NAMES):
            if name in ("map", "spo2", "lactate"):
                continue
            base = BASELINES.get(name, 0.0) + SEVERITY_SHIFT.get(name, 0.0) * tier
            s[j] = base + rng.normal(0, NOISE_SCALE.get(name, 0.0) or 1e-9)
        s[I_MAP] = p["map"] + rng.normal(0, 5.0)
        s[I_SPO2] = min(p["spo2"] + rng.normal(0, 1.5), 100.0)
        s[I_LACT] = max(p["lactate"] + rng.normal(0, 0.5), 0.2)
        s[FEATURE_INDEX["age"]] = float(np.clip(rng.normal(64, 14), 18, 100))
        s[FEATURE_INDEX["weight"]] = float(np.clip(rng.normal(80, 18), 40, 200))
        s[I_FLUID] = 0.0
        s[I_VASO] = 0.0
        return self._clip(s)

    def step_state(self, s: np.ndarray, tier: int, action: int,
                   rng: np.random.Generator) -> np.ndarray:
        p = TIER_PARAMS[tier]
        te = self.config.treatment_effect
        out = s.copy()
        overtreated = s[I_MAP] > OVERTREAT_MAP and s[I_LACT] < OVERTREAT_LACTATE
        spo2_eff = OVERTREAT_SPO2[action] if overtreated else SPO2_EFFECT[action]
        lact_eff = -OVERTREAT_LACT[action] if overtreated else LACT_EFFECT[action]
        out[I_MAP] += 0.35 * (p["map"] - s[I_MAP]) + te * MAP_EFFECT[action] + rng.normal(0, 3.0)
        out[I_SPO2] += 0.40 * (p["spo2"] - s[I_SPO2]) + te * spo2_eff + rng.normal(0, 0.8)
        out[I_LACT] += 0.35 * (p["lactate"] - s[I_LACT]) - te * lact_eff + rng.normal(0, 0.25)
        for name, shift in SEVERITY_SHIFT.items():
            j = FEATURE_INDEX[name]
            target = BASELINES[name] + shift * tier
            out[j] += 0.25 * (target - s[j]) + rng.normal(0, NOISE_SCALE.get(name, 0.5))
        # heart rate compensates for hypotension
        hr_target = BASELINES["heart_rate"] + 1.1 * max(0.0, 80.0 - out[I_MAP])
        out[I_HR] = s[I_HR] + 0.4 * (hr_target - s[I_HR]) + rng.normal(0, 3.0)
        for name in ("sbp", "dbp", "temp_c", "glucose", "sodium", "potassium",
                     "chloride", "hemoglobin", "paco2", "albumin"):
            j = FEATURE_INDEX[name]
            out[j] += 0.25 * (BASELINES[name] - s[j]) + rng.normal(0, NOISE_SCALE[name])
        out[I_FLUID] = 1.0 if action in (1, 3) else out[I_FLUID]
        out[I_VASO] = 1.0 if action in (2, 3) else out[I_VASO]
        return self._clip(out)

    @staticmethod
    def _clip(s: np.ndarray) -> np.ndarray:
        for j, f in enumerate(CANONICAL_FEATURES):
            s[j] = f.clip(s[j])
        return s

    def death_prob(self, s: np.ndarray, tier: int) -> float:
        logit = (TIER_PARAMS[tier]["hazard"]
                 + 0.085 * max(0.0, 65.0 - s[I_MAP])
                 + 0.50 * max(0.0, s[I_LACT] - 2.0)
                 + 0.10 * max(0.0, 92.0 - s[I_SPO2]))
        return float(_sigmoid(logit))

    def behavior_action(self, s: np.ndarray, rng: np.random.Generator) -> int:
        """Clinician-like logging policy: mostly severity-appropriate, with a
        fixed undertreatment rate that leaves headroom for learned policies."""
        if rng.random() < self.config.undertreat_prob:
            return 0
        m, l = s[I_MAP], s[I_LACT]
        if m < 60 and l > 2:
            probs = (0.05, 0.10, 0.25, 0.60)
        elif m < 65:
            probs = (0.15, 0.50, 0.25, 0.10)
        elif l > 2:
            probs = (0.45, 0.35, 0.10, 0.10)
        else:
            probs = (0.85, 0.10, 0.03, 0.02)
        return int(rng.choice(4, p=probs))

    # ---- episode generation -----------------------------------------

    def simulate_episode(self, rng: np.random.Generator, tier: int | None = None,
                         policy=None):
        """Returns (tier, states list, actions list, death_time_hours or None).

        ``states`` has one raw vector per window; ``actions[k]`` was taken in
        window k. Death is resolved against the post-action state.
        """
        cfg = self.config
        if tier is None:
            tier = int(rng.choice(3, p=np.asarray(cfg.tier_mix)))
        max_len = int(rng.integers(6, cfg.max_windows + 1))
        s = self.initial_state(tier, rng)
        states, actions = [s], []
        death_time = None
        for k in range(max_len - 1):
            a = (self.behavior_action(s, rng) if policy is None else int(policy(s)))
            actions.append(a)
            s = self.step_state(s, tier, a, rng)
            states.append(s)
            if rng.random() < self.death_prob(s, tier):
                death_time = (k + 2) * WINDOW_HOURS  # dies at end of next window
                break
            stable = s[I_MAP] > 70 and s[I_LACT] < 1.8 and s[I_SPO2] > 95
            if k >= 3 and stable and rng.random() < 0.25:
                break
        actions.append(0)  # no action logged for the terminal window
        return tier, states, actions, death_time


def simulate_cohort(config: SimConfig) -> tuple[CohortTable, dict[str, int]]:
    """Generate a raw cohort table plus ground-truth tier labels."""
    rng = np.random.default_rng(config.seed)
    sim = SepsisSimulator(config)
    table = CohortTable(clip_counts={f.name: 0 for f in CANONICAL_FEATURES})
    tiers: dict[str, int] = {}
    width = max(5, len(str(config.n_patients)))
    for i in range(config.n_patients):
        pid = f"p{i:0{width}d}"
        tier, states, actions, death_time = sim.simulate_episode(rng)
        tiers[pid] = tier
        rows = []
        for k, (s, a) in enumerate(zip(states, actions)):
            t = k * WINDOW_HOURS + float(rng.uniform(0.3, 3.7))
            values = []
            for j, name in enumerate(FEATURE_NAMES):
                kind = CANONICAL_FEATURES[j].kind
                drop = config.missing_prob
                if name in ("map", "spo2", "lactate"):
                    drop = 0.04
                elif kind in ("demographic", "treatment-indicator"):
                    drop = 0.0
                if k > 0 and rng.random() < drop:
                    values.append(None)
                else:
                    values.append(float(s[j]))
            rows.append(RawRecord(t=t, values=values, action=a, death_time=death_time))
        table.records[pid] = rows
    return table, tiers


def rollout_average_reward(sim: SepsisSimulator, policy, reward_fn,
                           n_episodes: int, seed: int) -> float:
    """Mean per-step reward over simulator episodes driven by ``policy``
    (a function raw-state -> action id)."""
    rng = np.random.default_rng(seed)
    rewards = []
    for _ in range(n_episodes):
        _, states, _, death_time = sim.simulate_episode(rng, policy=policy)
        n = len(states)
        for k in range(1, n):
            end = (k + 1) * WINDOW_HOURS
            mortality = death_time is not None and death_time <= end + 48.0
            s = states[k]
            rewards.append(reward_fn(s[I_MAP], s[I_SPO2], s[I_LACT], mortality))
    return float(np.mean(rewards))
