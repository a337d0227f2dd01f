"""HTTP service over a loaded pipeline: health, cluster table,
recommendation, what-if batches, and attention trajectories."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .runtime import PipelineRuntime, StateValidationError


class RecommendRequest(BaseModel):
    state: dict[str, float | None] = Field(
        description="clinical feature name -> raw value")
    force: bool = False


class WhatIfRequest(BaseModel):
    states: list[dict[str, float | None]]
    force: bool = False


class DecisionPacketModel(BaseModel):
    tier: str
    cluster_id: int
    is_noise: bool
    state: dict[str, float]
    advisory: str | None
    action: int | None
    action_name: str | None
    source: str
    p_fluid: float | None
    p_vaso: float | None
    probabilities: list[float] | None
    attention_weights: list[float] | None
    rationale: str | None
    chunk_ids: list[str]
    timings: dict[str, float]


class AttentionResponse(BaseModel):
    episode_id: str
    times: list[float]
    features: list[str]
    weights: list[list[float]]


def create_app(root, runtime: PipelineRuntime | None = None) -> FastAPI:
    root = Path(root)
    runtime = runtime or PipelineRuntime.load(root)
    app = FastAPI(title="sepsisflow", version="1.0")

    @app.exception_handler(StateValidationError)
    async def _validation_handler(request, exc: StateValidationError):
        return JSONResponse(status_code=400,
                            content={"error": "invalid state",
                                     "fields": exc.field_errors})

    @app.exception_handler(KeyError)
    async def _key_handler(request, exc: KeyError):
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.get("/health")
    def health():
        return runtime.health()

    @app.get("/clusters")
    def clusters():
        return {"clusters": runtime.cluster_table()}

    @app.post("/recommend", response_model=DecisionPacketModel)
    def recommend(req: RecommendRequest):
        return runtime.recommend(req.state, force=req.force)

    @app.post("/whatif", response_model=list[DecisionPacketModel])
    def whatif(req: WhatIfRequest):
        return runtime.whatif(req.states, force=req.force)

    @app.get("/attention/{episode_id}", response_model=AttentionResponse)
    def attention(episode_id: str):
        return runtime.attention(episode_id, root / "cohort.csv")

    return app
