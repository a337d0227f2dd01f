"""Canonical 30-feature clinical state schema.

Each feature carries a unit, a kind, plausibility clipping bounds, and
(for the three reward-relevant vitals) a safe-range predicate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    unit: str
    kind: str  # vital | lab | treatment-indicator | demographic
    plausible_min: float
    plausible_max: float
    safe_predicate: Callable[[float], bool] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.plausible_min < self.plausible_max:
            raise ValueError(f"{self.name}: plausible_min must be < plausible_max")

    def clip(self, x: float) -> float:
        return min(max(x, self.plausible_min), self.plausible_max)


def _f(name, unit, kind, lo, hi, safe=None):
    return FeatureSpec(name, unit, kind, lo, hi, safe)


CANONICAL_FEATURES: tuple[FeatureSpec, ...] = (
    # vitals
    _f("heart_rate", "bpm", "vital", 20, 220),
    _f("map", "mmHg", "vital", 20, 180, lambda x: x > 65),
    _f("sbp", "mmHg", "vital", 40, 250),
    _f("dbp", "mmHg", "vital", 20, 150),
    _f("resp_rate", "breaths/min", "vital", 4, 60),
    _f("temp_c", "degC", "vital", 30, 43),
    _f("spo2", "%", "vital", 50, 100, lambda x: x > 94),
    _f("gcs_total", "score", "vital", 3, 15),
    _f("urine_output", "mL/4h", "vital", 0, 4000),
    # labs
    _f("lactate", "mmol/L", "lab", 0.1, 20, lambda x: x < 2),
    _f("creatinine", "mg/dL", "lab", 0.2, 15),
    _f("wbc", "10^3/uL", "lab", 0.5, 80),
    _f("platelets", "10^3/uL", "lab", 5, 1000),
    _f("bun", "mg/dL", "lab", 2, 150),
    _f("glucose", "mg/dL", "lab", 20, 800),
    _f("sodium", "mEq/L", "lab", 110, 175),
    _f("potassium", "mEq/L", "lab", 1.5, 9),
    _f("chloride", "mEq/L", "lab", 70, 140),
    _f("bicarbonate", "mEq/L", "lab", 5, 50),
    _f("hemoglobin", "g/dL", "lab", 3, 20),
    _f("bilirubin", "mg/dL", "lab", 0.1, 40),
    _f("inr", "ratio", "lab", 0.5, 12),
    _f("ph", "pH", "lab", 6.8, 7.8),
    _f("pao2", "mmHg", "lab", 30, 600),
    _f("paco2", "mmHg", "lab", 10, 120),
    _f("albumin", "g/dL", "lab", 1, 6),
    # demographics
    _f("age", "years", "demographic", 18, 100),
    _f("weight", "kg", "demographic", 30, 250),
    # treatment indicators
    _f("prior_fluids", "0/1", "treatment-indicator", 0, 1),
    _f("prior_vasopressors", "0/1", "treatment-indicator", 0, 1),
)

FEATURE_NAMES: tuple[str, ...] = tuple(f.name for f in CANONICAL_FEATURES)
N_FEATURES = len(CANONICAL_FEATURES)
FEATURE_INDEX: dict[str, int] = {name: i for i, name in enumerate(FEATURE_NAMES)}

assert N_FEATURES == 30
assert len(set(FEATURE_NAMES)) == N_FEATURES

ACTION_NAMES = ("no_treatment", "fluids", "vasopressors", "combined")
N_ACTIONS = len(ACTION_NAMES)
