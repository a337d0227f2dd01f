"""Prompt assembly: deterministic fill of a placeholder template with the
patient state, risk tier, recommended action and retrieved guideline chunks."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..cohort import ACTION_NAMES, CANONICAL_FEATURES

_UNITS = {f.name: f.unit for f in CANONICAL_FEATURES}
_PLACEHOLDER_RE = re.compile(r"\{(\w+)\}")
ALLOWED_PLACEHOLDERS = {"state_table", "tier", "action", "chunks", "instructions"}

DEFAULT_INSTRUCTIONS = (
    "Write a short clinical rationale for the recommended action. Cite the "
    "guideline chunk ids you rely on and reference only the values shown "
    "in the state table.")

DEFAULT_TEMPLATE = """You are assisting with sepsis treatment decision support.

Patient state:
{state_table}

Risk tier: {tier}

Recommended action: {action}

Relevant guidelines:
{chunks}

{instructions}
"""


@dataclass(frozen=True)
class RationaleRequest:
    raw_state: dict              # feature name -> raw clinical value
    tier: str
    cluster_id: int
    action: int
    source: str                  # blend branch that produced the action
    probabilities: tuple = ()
    chunks: tuple = ()           # retrieved {chunk, score} records

    def __post_init__(self):
        if not 0 <= self.action < len(ACTION_NAMES):
            raise ValueError(f"invalid action {self.action}")
        if not self.chunks:
            raise ValueError("at least one retrieved chunk required")


def render_state_table(raw_state: dict) -> str:
    rows = []
    for name in sorted(raw_state):
        unit = _UNITS.get(name, "")
        suffix = f" {unit}" if unit else ""
        rows.append(f"- {name}: {raw_state[name]:g}{suffix}")
    return "\n".join(rows)


def render_chunks(chunks) -> str:
    return "\n".join(f"[{rec['chunk'].id}] {rec['chunk'].text}"
                     for rec in chunks)


def build_prompt(request: RationaleRequest,
                 template: str = DEFAULT_TEMPLATE) -> str:
    names = set(_PLACEHOLDER_RE.findall(template))
    unknown = names - ALLOWED_PLACEHOLDERS
    if unknown:
        raise ValueError(f"unresolved placeholders: {sorted(unknown)}")
    if "chunks" not in names:
        raise ValueError("template must include the {chunks} placeholder")
    action_name = ACTION_NAMES[request.action]
    fills = {
        "state_table": render_state_table(request.raw_state),
        "tier": str(request.tier),
        "action": f"{action_name} (source: {request.source})",
        "chunks": render_chunks(request.chunks),
        "instructions": DEFAULT_INSTRUCTIONS,
    }
    return _PLACEHOLDER_RE.sub(lambda m: fills[m.group(1)], template)
