"""Composite step reward: short-term mortality penalty plus safe-range
bonuses for MAP, SpO2 and lactate. Range is [-1.0, +0.8]."""

from __future__ import annotations

from dataclasses import dataclass

import math


@dataclass(frozen=True)
class RewardConfig:
    mortality_weight: float = 1.0
    map_threshold: float = 65.0
    map_weight: float = 0.3
    spo2_threshold: float = 94.0
    spo2_weight: float = 0.3
    lactate_threshold: float = 2.0
    lactate_weight: float = 0.2


DEFAULT_REWARD = RewardConfig()


def reward(map_mmhg: float, spo2_pct: float, lactate_mmol: float,
           mortality_48h: bool, config: RewardConfig = DEFAULT_REWARD) -> float:
    for name, v in (("map", map_mmhg), ("spo2", spo2_pct), ("lactate", lactate_mmol)):
        if v is None or (isinstance(v, float) and math.isnan(v)):
            raise ValueError(f"missing vital {name!r}: impute before computing rewards")
    r = -config.mortality_weight * float(bool(mortality_48h))
    r += config.map_weight * float(map_mmhg > config.map_threshold)
    r += config.spo2_weight * float(spo2_pct > config.spo2_threshold)
    r += config.lactate_weight * float(lactate_mmol < config.lactate_threshold)
    return r
