"""Generation clients: an HTTP adapter for a local model server and a
deterministic rule-based mock sharing the same wire contract."""

from __future__ import annotations

import re
import time
from dataclasses import dataclass

import httpx


@dataclass(frozen=True)
class GenerationConfig:
    model: str = "local-clinical-llm"
    endpoint: str = "http://127.0.0.1:11434/api/generate"
    top_k: int = 100
    repeat_penalty: float = 1.1
    temperature: float = 0.7
    max_tokens: int = 256
    timeout_s: float = 30.0

    def __post_init__(self):
        if self.top_k < 1 or self.temperature <= 0 or self.max_tokens < 1:
            raise ValueError("invalid generation config")


# the configuration reported in the source experiments; temperature far above
# normal sampling ranges, kept selectable rather than silently corrected
PAPER_PRESET = GenerationConfig(temperature=4.7)


class GenerationError(Exception):
    """Carries the prompt so callers can retry without rebuilding it."""

    def __init__(self, message: str, prompt: str):
        super().__init__(message)
        self.prompt = prompt


def _wire_request(prompt: str, config: GenerationConfig) -> dict:
    return {"model": config.model, "prompt": prompt, "top_k": config.top_k,
            "repeat_penalty": config.repeat_penalty,
            "temperature": config.temperature, "max_tokens": config.max_tokens}


class HttpGenerationClient:
    def __init__(self, config: GenerationConfig = GenerationConfig()):
        self.config = config

    def generate(self, prompt: str, config: GenerationConfig | None = None) -> str:
        config = config or self.config
        try:
            resp = httpx.post(config.endpoint, json=_wire_request(prompt, config),
                              timeout=config.timeout_s)
        except httpx.HTTPError as exc:
            raise GenerationError(f"generation request failed: {exc}", prompt) from exc
        if resp.status_code // 100 != 2:
            raise GenerationError(
                f"generation server returned {resp.status_code}: {resp.text}",
                prompt)
        return resp.json()["text"]


_STATE_ROW_RE = re.compile(r"^- (\w+): (-?[\d.]+)", re.MULTILINE)
_ACTION_RE = re.compile(r"^Recommended action: (\w+)", re.MULTILINE)
_CHUNK_ID_RE = re.compile(r"^\[([\w-]+)\]", re.MULTILINE)

_ACTION_PHRASES = {
    "no_treatment": "Continued monitoring without escalation",
    "fluids": "Fluid resuscitation",
    "vasopressors": "Vasopressor therapy",
    "combined": "Combined fluid and vasopressor therapy",
}


class MockGenerationClient:
    """Deterministic in-process client: extracts the state table, action and
    chunk ids from the prompt and fills a fixed sentence template. Every
    number and id in the output comes from the prompt."""

    def generate(self, prompt: str, config: GenerationConfig | None = None) -> str:
        state = {m.group(1): float(m.group(2))
                 for m in _STATE_ROW_RE.finditer(prompt)}
        action_match = _ACTION_RE.search(prompt)
        action = action_match.group(1) if action_match else "no_treatment"
        ids = _CHUNK_ID_RE.findall(prompt)
        findings = []
        if "map" in state and state["map"] < 65:
            findings.append(f"persistent hypotension (MAP {state['map']:g} mmHg)")
        if "spo2" in state and state["spo2"] < 94:
            findings.append(f"hypoxemia (SpO2 {state['spo2']:g} %)")
        if "lactate" in state and state["lactate"] > 2:
            findings.append(f"elevated lactate ({state['lactate']:g} mmol/L)")
        reason = "; ".join(findings) if findings else "vitals within target ranges"
        phrase = _ACTION_PHRASES.get(action, action)
        cited = ", ".join(ids) if ids else "none"
        return (f"{phrase} is recommended due to {reason}. "
                f"Supporting guidance: {cited}.")


def generate_rationale(prompt: str, config: GenerationConfig, client) -> dict:
    """Returns the rationale text with generation metadata."""
    start = time.perf_counter()
    text = client.generate(prompt, config)
    return {"text": text, "model": config.model,
            "temperature": config.temperature, "top_k": config.top_k,
            "latency_s": time.perf_counter() - start}
