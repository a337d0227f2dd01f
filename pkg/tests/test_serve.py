"""Pipeline orchestration, serving runtime, CLI and HTTP service."""

import json
import warnings
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from sepsisflow.cohort import FEATURE_NAMES
from sepsisflow.serve import (
    MissingDependencyError, PipelineConfig, PipelineRuntime,
    StaleArtifactError, StateValidationError, load_manifest, packet_core,
    run_ablation, run_pipeline, validate_state,
)
from sepsisflow.serve.ablation import render_table, split_by_patient
from sepsisflow.serve.cli import main as cli_main
from sepsisflow.serve.http import create_app
from sepsisflow.serve.pipeline import STAGE_ARTIFACTS, STAGE_ORDER
from sepsisflow.strat import RiskTier

SMALL = PipelineConfig(n_patients=200, awr_steps=200, vae_epochs=5,
                       diffusion_epochs=5, gbdt_trees=10, tab_epochs=5,
                       ensemble_subsample=1500, min_cluster_size=10,
                       min_samples=5)


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    root = tmp_path_factory.mktemp("artifacts")
    out = run_pipeline(root, SMALL)
    return root, out


@pytest.fixture(scope="module")
def runtime(built):
    root, _ = built
    return PipelineRuntime.load(root)


@pytest.fixture(scope="module")
def mean_state(runtime):
    return {name: float(runtime.stats.mean[i])
            for i, name in enumerate(FEATURE_NAMES)}


# ---- pipeline --------------------------------------------------------

def test_fresh_run_executes_all_stages(built):
    _, out = built
    assert out["executed"] == list(STAGE_ORDER)
    assert out["skipped"] == []


def test_manifest_records_all_artifacts_with_checksums(built):
    root, _ = built
    manifest = load_manifest(root)
    for stage in STAGE_ORDER:
        record = manifest["stages"][stage]
        assert record["fingerprint"]
        assert set(record["artifacts"]) == set(STAGE_ARTIFACTS[stage])
        for name in record["artifacts"]:
            assert (root / name).exists()


def test_rerun_skips_everything(built):
    root, _ = built
    out = run_pipeline(root, SMALL)
    assert out["executed"] == []
    assert out["skipped"] == list(STAGE_ORDER)


def test_unknown_stage_rejected(built):
    root, _ = built
    with pytest.raises(ValueError, match="unknown stages"):
        run_pipeline(root, SMALL, stages=["simulate", "deploy"])


def test_missing_dependency_names_stage(tmp_path):
    with pytest.raises(MissingDependencyError, match="simulate"):
        run_pipeline(tmp_path, SMALL, stages=["stratify"])


def test_deleting_artifact_reruns_stage_and_downstream(tmp_path):
    run_pipeline(tmp_path, SMALL)
    (tmp_path / "cluster_model.json").unlink()
    out = run_pipeline(tmp_path, SMALL)
    assert out["executed"] == ["stratify", "augment", "train", "ensemble",
                               "index"]
    assert out["skipped"] == ["simulate", "preprocess"]


def test_tampered_artifact_raises_stale_error(tmp_path):
    run_pipeline(tmp_path, SMALL)
    path = tmp_path / "stats.json"
    path.write_text(path.read_text() + " ")
    with pytest.raises(StaleArtifactError, match="stats.json"):
        run_pipeline(tmp_path, SMALL, stages=["preprocess"])


def test_config_change_invalidates_dependent_stages(tmp_path):
    from dataclasses import replace
    run_pipeline(tmp_path, SMALL)
    changed = replace(SMALL, awr_steps=SMALL.awr_steps + 1)
    out = run_pipeline(tmp_path, changed)
    assert "train" in out["executed"]
    assert "simulate" in out["skipped"]


# ---- validation ------------------------------------------------------

def test_validate_state_accepts_complete_state(mean_state):
    values = validate_state(mean_state)
    assert set(values) == set(FEATURE_NAMES)


def test_validate_state_lists_every_problem(mean_state):
    bad = dict(mean_state)
    del bad["map"]
    bad["spo2"] = "not-a-number"
    bad["made_up"] = 1.0
    with pytest.raises(StateValidationError) as err:
        validate_state(bad)
    assert set(err.value.field_errors) == {"map", "spo2", "made_up"}
    assert err.value.field_errors["map"] == "missing"
    assert "unparseable" in err.value.field_errors["spo2"]


# ---- recommend -------------------------------------------------------

def test_forced_packet_has_all_decision_fields(runtime, mean_state):
    packet = runtime.recommend(mean_state, force=True)
    assert packet["tier"] in ("Low", "Intermediate", "High")
    assert packet["source"] in ("tabular-fluid", "tabular-vaso", "rl")
    assert packet["action"] in (0, 1, 2, 3)
    assert 0.0 <= packet["p_fluid"] <= 1.0
    assert 0.0 <= packet["p_vaso"] <= 1.0
    assert abs(sum(packet["probabilities"]) - 1.0) < 1e-9
    assert abs(sum(packet["attention_weights"]) - 1.0) < 1e-9
    assert len(packet["attention_weights"]) == len(FEATURE_NAMES)
    assert packet["rationale"]
    assert packet["chunk_ids"]


def test_recommend_is_deterministic(runtime, mean_state):
    a = runtime.recommend(mean_state, force=True)
    b = runtime.recommend(mean_state, force=True)
    assert packet_core(a) == packet_core(b)


def test_low_tier_routes_to_advisory_without_blend(runtime, mean_state):
    class BrokenBundle:
        def __getattr__(self, name):
            raise AssertionError("policy must not run for advisory routing")

    class LowModel:
        def stratify_values(self, values):
            return {"tier": RiskTier.LOW, "cluster_id": 0, "is_noise": False}

    from dataclasses import replace
    routed = replace(runtime, cluster_model=LowModel(), bundle=BrokenBundle())
    packet = routed.recommend(mean_state)
    assert packet["advisory"] and "no intervention" in packet["advisory"]
    assert packet["action"] is None
    assert packet["source"] == "tier-routing"


def test_high_tier_force_recommend_runs_the_blend(runtime, mean_state):
    class HighModel:
        def stratify_values(self, values):
            return {"tier": RiskTier.HIGH, "cluster_id": 1, "is_noise": False}

    from dataclasses import replace
    routed = replace(runtime, cluster_model=HighModel())
    advisory = routed.recommend(mean_state)
    assert "immediate clinical intervention" in advisory["advisory"]
    forced = routed.recommend(mean_state, force=True)
    assert forced["action"] is not None


def test_whatif_preserves_order(runtime, mean_state):
    low_map = dict(mean_state, map=50.0)
    packets = runtime.whatif([mean_state, low_map], force=True)
    assert len(packets) == 2
    assert packets[0]["state"]["map"] == mean_state["map"]
    assert packets[1]["state"]["map"] == 50.0


def test_attention_trajectory_rows_sum_to_one(built, runtime):
    root, _ = built
    from sepsisflow.cohort import ingest_cohort
    pid = ingest_cohort(root / "cohort.csv").patient_ids()[0]
    out = runtime.attention(pid, root / "cohort.csv")
    weights = np.array(out["weights"])
    assert weights.shape[1] == len(FEATURE_NAMES)
    assert np.allclose(weights.sum(axis=1), 1.0)


# ---- CLI / HTTP ------------------------------------------------------

def test_cli_and_http_packets_are_identical(built, runtime, mean_state):
    root, _ = built
    result = CliRunner().invoke(cli_main, [
        "--manifest", str(root), "recommend",
        "--state", json.dumps(mean_state), "--force-recommend"])
    assert result.exit_code == 0, result.output
    cli_packet = json.loads(result.output)
    client = TestClient(create_app(root, runtime=runtime))
    resp = client.post("/recommend", json={"state": mean_state, "force": True})
    assert resp.status_code == 200
    http_packet = packet_core(resp.json())
    assert (json.dumps(cli_packet, sort_keys=True)
            == json.dumps(http_packet, sort_keys=True))


def test_cli_recommend_reports_field_errors(built, mean_state):
    root, _ = built
    bad = dict(mean_state)
    del bad["lactate"]
    result = CliRunner().invoke(cli_main, [
        "--manifest", str(root), "recommend", "--state", json.dumps(bad)])
    assert result.exit_code == 1
    assert "lactate" in result.output


def test_http_health_reports_stage_fingerprints(built, runtime):
    root, _ = built
    client = TestClient(create_app(root, runtime=runtime))
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert set(body["stages"]) == set(STAGE_ORDER)


def test_http_clusters_matches_tier_table(built, runtime):
    root, _ = built
    client = TestClient(create_app(root, runtime=runtime))
    body = client.get("/clusters").json()
    assert body["clusters"] == runtime.cluster_table()
    for row in body["clusters"]:
        assert row["risk_category"] in ("Low", "Intermediate", "High")


def test_http_whatif_returns_ordered_packets(built, runtime, mean_state):
    root, _ = built
    client = TestClient(create_app(root, runtime=runtime))
    low_map = dict(mean_state, map=50.0)
    resp = client.post("/whatif", json={"states": [mean_state, low_map],
                                        "force": True})
    assert resp.status_code == 200
    packets = resp.json()
    assert len(packets) == 2
    assert packets[1]["state"]["map"] == 50.0


def test_http_invalid_state_is_400_with_fields(built, runtime, mean_state):
    root, _ = built
    client = TestClient(create_app(root, runtime=runtime))
    bad = {k: v for k, v in mean_state.items() if k != "map"}
    resp = client.post("/recommend", json={"state": bad})
    assert resp.status_code == 400
    assert resp.json()["fields"] == {"map": "missing"}


def test_http_attention_unknown_episode_is_404(built, runtime):
    root, _ = built
    client = TestClient(create_app(root, runtime=runtime))
    assert client.get("/attention/nope").status_code == 404


def test_cli_stage_verbs_report_status(built):
    root, _ = built
    result = CliRunner().invoke(cli_main, ["--manifest", str(root), "index"])
    assert result.exit_code == 0, result.output
    assert "index: up to date" in result.output


# ---- ablation --------------------------------------------------------

def test_split_by_patient_is_disjoint_and_real_only(built):
    root, _ = built
    from sepsisflow.cohort import load_transitions
    transitions = load_transitions(root / "augmented.jsonl")
    train, test = split_by_patient(transitions)
    train_ids = {t.patient_id for t in train}
    test_ids = {t.patient_id for t in test}
    assert not train_ids & test_ids
    assert all(t.provenance == "real" for t in test)
    assert 0.05 < len(test_ids) / (len(train_ids) + len(test_ids)) < 0.4


def test_ablation_report_shape_and_replay_row(built, runtime):
    root, _ = built
    report = run_ablation(root, seeds=(0, 1), runtime=runtime, awr_steps=60)
    assert [r["configuration"] for r in report["rows"]] == [
        "BCQ", "BCQ + Attention", "AWR + Attention", "Ensemble"]
    for row in report["rows"]:
        assert 0.0 <= row["accuracy_mean"] <= 1.0
        assert row["accuracy_std"] is not None
        assert -1.0 <= row["average_reward_mean"] <= 0.8
    assert report["replay"]["accuracy_mean"] == 1.0
    table = render_table(report)
    assert "AWR + Attention" in table and "Replay" in table


def test_ablation_single_seed_warns(built, runtime):
    root, _ = built
    with pytest.warns(UserWarning, match="fewer than 2 seeds"):
        report = run_ablation(root, seeds=(0,), runtime=runtime, awr_steps=60)
    assert report["rows"][0]["accuracy_std"] is None
