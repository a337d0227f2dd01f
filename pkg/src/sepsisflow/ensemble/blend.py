"""Safety blend: tabular fluid/vasopressor probabilities override the RL
action only when they clear the threshold strictly and strictly dominate
each other; otherwise the RL policy decides."""

from __future__ import annotations

from dataclasses import dataclass

ACTION_FLUIDS = 1
ACTION_VASOPRESSORS = 2


@dataclass(frozen=True)
class BlendConfig:
    omega: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.omega < 1.0:
            raise ValueError("omega must be in (0, 1)")


@dataclass(frozen=True)
class BlendDecision:
    action: int
    source: str            # "tabular-fluid" | "tabular-vaso" | "rl"
    p_fluid: float
    p_vaso: float
    a_rl: int


def blend(p_fluid: float, p_vaso: float, a_rl: int,
          omega: float = 0.5) -> BlendDecision:
    """Strict-inequality branch rule; ties on p_fluid == p_vaso fall through
    to the RL action."""
    for name, p in (("p_fluid", p_fluid), ("p_vaso", p_vaso)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must be in [0, 1]")
    if p_fluid > omega and p_fluid > p_vaso:
        return BlendDecision(ACTION_FLUIDS, "tabular-fluid", p_fluid, p_vaso, a_rl)
    if p_vaso > omega and p_vaso > p_fluid:
        return BlendDecision(ACTION_VASOPRESSORS, "tabular-vaso", p_fluid, p_vaso, a_rl)
    return BlendDecision(int(a_rl), "rl", p_fluid, p_vaso, a_rl)
