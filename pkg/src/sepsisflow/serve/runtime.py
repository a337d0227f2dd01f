"""Serving runtime: loads the trained artifacts once and answers recommend,
what-if, cluster-table and attention queries over them."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

import numpy as np

from ..cohort import (
    ACTION_NAMES, CANONICAL_FEATURES, FEATURE_NAMES, N_FEATURES, NormStats,
    impute, ingest_cohort, window_episodes,
)
from ..ensemble import blend, gbdt_predict_proba, load_gbdt, load_tab
from ..policy import load_bundle, policy_action
from ..policy.awr import attention_trajectory
from ..rationale import (
    GenerationConfig, HttpGenerationClient, MockGenerationClient,
    RationaleRequest, build_prompt, generate_rationale, load_index, query_text,
    retrieve,
)
from ..strat import RiskTier, load_cluster_model
from .pipeline import PipelineConfig, load_manifest, load_stats

ENDPOINT_ENV = "SEPSISFLOW_RATIONALE_ENDPOINT"
MOCK_ENV = "SEPSISFLOW_RATIONALE_MOCK"

ADVISORY = {
    RiskTier.LOW.value: ("Low-risk tier: no intervention is needed; continue "
                         "routine monitoring."),
    RiskTier.HIGH.value: ("High-risk tier: requiring immediate clinical "
                          "intervention; escalate to the care team."),
}

_SPEC_BY_NAME = {spec.name: spec for spec in CANONICAL_FEATURES}


class StateValidationError(ValueError):
    def __init__(self, field_errors: dict[str, str]):
        self.field_errors = dict(field_errors)
        detail = "; ".join(f"{k}: {v}" for k, v in sorted(field_errors.items()))
        super().__init__(f"invalid state: {detail}")


def validate_state(raw: dict) -> dict[str, float]:
    """Check the 30 clinical fields for presence and parseability; collect
    every problem before raising."""
    errors: dict[str, str] = {}
    out: dict[str, float] = {}
    for name in FEATURE_NAMES:
        if name not in raw or raw[name] is None:
            errors[name] = "missing"
            continue
        try:
            v = float(raw[name])
        except (TypeError, ValueError):
            errors[name] = f"unparseable value {raw[name]!r}"
            continue
        if not np.isfinite(v):
            errors[name] = "non-finite value"
            continue
        out[name] = v
    for name in raw:
        if name not in _SPEC_BY_NAME:
            errors[name] = "unknown field"
    if errors:
        raise StateValidationError(errors)
    return out


def state_findings(raw: dict[str, float]) -> list[str]:
    """Clinical findings terms used to ground the retrieval query."""
    terms = []
    if raw["map"] < 65:
        terms.append("hypotension low MAP")
    if raw["spo2"] < 94:
        terms.append("hypoxemia low oxygen saturation")
    if raw["lactate"] > 2:
        terms.append("elevated lactate hypoperfusion")
    if not terms:
        terms.append("stable vital signs")
    return terms


def make_generation_client(config: GenerationConfig):
    use_mock = os.environ.get(MOCK_ENV, "1") not in ("0", "false", "no")
    if use_mock:
        return MockGenerationClient()
    return HttpGenerationClient(config)


@dataclass
class PipelineRuntime:
    stats: NormStats
    cluster_model: object
    bundle: object
    gbdt: object
    tab: object
    index: object
    manifest: dict
    config: PipelineConfig
    gen_config: GenerationConfig
    client: object
    top_k: int = 3

    @classmethod
    def load(cls, root, gen_config: GenerationConfig | None = None,
             client=None) -> "PipelineRuntime":
        from pathlib import Path
        root = Path(root)
        manifest = load_manifest(root)
        config = PipelineConfig(**manifest.get("config", {}))
        gen_config = gen_config or GenerationConfig(
            endpoint=os.environ.get(
                ENDPOINT_ENV, GenerationConfig().endpoint))
        return cls(stats=load_stats(root),
                   cluster_model=load_cluster_model(root / "cluster_model.json"),
                   bundle=load_bundle(root / "policy_awr.json"),
                   gbdt=load_gbdt(root / "gbdt.json"),
                   tab=load_tab(root / "tab.json"),
                   index=load_index(root / "kb_index.json"),
                   manifest=manifest, config=config, gen_config=gen_config,
                   client=client or make_generation_client(gen_config))

    # ---- queries -----------------------------------------------------

    def normalize_state(self, raw: dict[str, float]) -> np.ndarray:
        x = np.array([raw[name] for name in FEATURE_NAMES], dtype=np.float64)
        std = np.where(self.stats.std > 0, self.stats.std, 1.0)
        z = (x - self.stats.mean) / std
        return np.where(self.stats.std > 0, z, 0.0)

    def cluster_table(self) -> list[dict]:
        return self.cluster_model.tier_table()

    def health(self) -> dict:
        return {"status": "ok",
                "stages": {name: rec.get("fingerprint")
                           for name, rec in self.manifest["stages"].items()}}

    def recommend(self, raw: dict, force: bool = False) -> dict:
        t_start = time.perf_counter()
        state = validate_state(raw)
        s = self.normalize_state(state)
        strat = self.cluster_model.stratify_values(s[None, :])
        tier = strat["tier"].value
        packet = {
            "tier": tier,
            "cluster_id": strat["cluster_id"],
            "is_noise": strat["is_noise"],
            "state": state,
        }
        t_strat = time.perf_counter()
        if tier in ADVISORY and not force:
            packet.update({"advisory": ADVISORY[tier], "action": None,
                           "action_name": None, "source": "tier-routing",
                           "p_fluid": None, "p_vaso": None,
                           "probabilities": None, "attention_weights": None,
                           "rationale": None, "chunk_ids": []})
            packet["timings"] = {"stratify_s": t_strat - t_start,
                                 "decide_s": 0.0, "rationale_s": 0.0}
            return packet
        pol = policy_action(self.bundle, s)
        gb = gbdt_predict_proba(self.gbdt, s[None, :])[0]
        tb = self.tab.predict_proba(s[None, :])[0]
        p_fluid = float(max(gb[1], tb[1]))
        p_vaso = float(max(gb[2], tb[2]))
        decision = blend(p_fluid, p_vaso, pol["action"],
                         omega=self.config.blend_omega)
        t_decide = time.perf_counter()
        chunks = retrieve(self.index,
                          query_text(state_findings(state),
                                     ACTION_NAMES[decision.action], tier),
                          k=self.top_k)
        request = RationaleRequest(
            raw_state=state, tier=tier, cluster_id=strat["cluster_id"],
            action=decision.action, source=decision.source,
            probabilities=tuple(float(p) for p in pol["probabilities"]),
            chunks=tuple(chunks))
        prompt = build_prompt(request)
        generated = generate_rationale(prompt, self.gen_config, self.client)
        t_done = time.perf_counter()
        packet.update({
            "advisory": None,
            "action": decision.action,
            "action_name": ACTION_NAMES[decision.action],
            "source": decision.source,
            "p_fluid": p_fluid,
            "p_vaso": p_vaso,
            "probabilities": [float(p) for p in pol["probabilities"]],
            "attention_weights": [float(w) for w in pol["attention_weights"]],
            "rationale": generated["text"],
            "chunk_ids": [rec["chunk"].id for rec in chunks],
            "timings": {"stratify_s": t_strat - t_start,
                        "decide_s": t_decide - t_strat,
                        "rationale_s": t_done - t_decide},
        })
        return packet

    def whatif(self, states: list[dict], force: bool = False) -> list[dict]:
        return [self.recommend(raw, force=force) for raw in states]

    def attention(self, episode_id: str, cohort_path) -> dict:
        table = ingest_cohort(cohort_path)
        if episode_id not in table.records:
            raise KeyError(f"unknown episode id {episode_id!r}")
        episodes = impute(window_episodes(table), self.stats.medians)
        episode = next(e for e in episodes if e.patient_id == episode_id)
        std = np.where(self.stats.std > 0, self.stats.std, 1.0)
        values = (episode.values - self.stats.mean) / std
        values = np.where(self.stats.std > 0, values, 0.0)
        weights = attention_trajectory(self.bundle, values)
        return {"episode_id": episode_id,
                "times": [float(t) for t in episode.times],
                "features": list(FEATURE_NAMES),
                "weights": weights.tolist()}


def packet_core(packet: dict) -> dict:
    """Packet with wall-clock timings removed; the determinism and
    CLI/HTTP-parity comparisons operate on this view."""
    return {k: v for k, v in packet.items() if k != "timings"}
