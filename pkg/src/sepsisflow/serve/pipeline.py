"""Manifest-driven pipeline: ordered, idempotent stages with config and
artifact fingerprints, from cohort simulation through knowledge indexing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..augment import (
    DiffusionConfig, VaeConfig, augment_minority, diffusion_train, vae_train,
)
from ..cohort import (
    NormStats, SimConfig, build_transitions, fit_medians, fit_norm_stats,
    impute, ingest_cohort, load_transitions, normalize, save_transitions,
    simulate_cohort, window_episodes, write_cohort_csv,
)
from ..ensemble import (
    GbdtConfig, TabConfig, feature_gain_report, gbdt_train, save_gbdt,
    save_tab, tab_train,
)
from ..neural import load_tensors, save_tensors
from ..policy import DEFAULT_REWARD, TrainConfig, awr_train, reward, save_bundle
from ..rationale import default_knowledge, index_knowledge, save_index
from ..strat import fit_cluster_model, save_cluster_model

STAGE_ORDER = ("simulate", "preprocess", "stratify", "augment", "train",
               "ensemble", "index")

STAGE_ARTIFACTS = {
    "simulate": ("cohort.csv", "tiers.json"),
    "preprocess": ("stats.json", "transitions.jsonl"),
    "stratify": ("cluster_model.json",),
    "augment": ("vae.json", "diffusion.json", "augmented.jsonl"),
    "train": ("policy_awr.json",),
    "ensemble": ("gbdt.json", "tab.json", "gains.json"),
    "index": ("kb_index.json",),
}


class MissingDependencyError(RuntimeError):
    pass


class StaleArtifactError(RuntimeError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    n_patients: int = 2000
    seed: int = 0
    # stratification
    min_cluster_size: int = 30
    min_samples: int = 15
    target_dim: int = 6
    # augmentation
    vae_epochs: int = 30
    diffusion_epochs: int = 20
    rebalance_ratio: float = 0.5
    # policy
    awr_steps: int = 3000
    # ensemble
    gbdt_trees: int = 50
    gbdt_depth: int = 3
    tab_epochs: int = 20
    ensemble_subsample: int = 4000
    blend_omega: float = 0.5

    def stage_config(self, stage: str) -> dict:
        keys = {
            "simulate": ("n_patients", "seed"),
            "preprocess": ("seed",),
            "stratify": ("min_cluster_size", "min_samples", "target_dim", "seed"),
            "augment": ("vae_epochs", "diffusion_epochs", "rebalance_ratio", "seed"),
            "train": ("awr_steps", "seed"),
            "ensemble": ("gbdt_trees", "gbdt_depth", "tab_epochs",
                         "ensemble_subsample", "seed"),
            "index": (),
        }[stage]
        d = asdict(self)
        return {k: d[k] for k in keys}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _hash_obj(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def load_manifest(root: Path) -> dict:
    path = Path(root) / "manifest.json"
    if path.exists():
        return json.loads(path.read_text(encoding="utf-8"))
    return {"version": 1, "stages": {}}


def save_manifest(root: Path, manifest: dict):
    (Path(root) / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")


def _normalized_episodes(root: Path, stats: NormStats):
    table = ingest_cohort(Path(root) / "cohort.csv")
    eps = impute(window_episodes(table), stats.medians)
    return normalize(eps, stats), table


def load_stats(root: Path) -> NormStats:
    return NormStats.from_dict(
        json.loads((Path(root) / "stats.json").read_text(encoding="utf-8")))


def _reward_fn(map_v, spo2_v, lact_v, mortality):
    return reward(map_v, spo2_v, lact_v, mortality, DEFAULT_REWARD)


# ---- stage bodies ----------------------------------------------------

def _run_simulate(root: Path, config: PipelineConfig):
    table, tiers = simulate_cohort(SimConfig(n_patients=config.n_patients,
                                             seed=config.seed))
    write_cohort_csv(root / "cohort.csv", table)
    (root / "tiers.json").write_text(json.dumps(tiers, sort_keys=True),
                                     encoding="utf-8")


def _run_preprocess(root: Path, config: PipelineConfig):
    table = ingest_cohort(root / "cohort.csv")
    eps = window_episodes(table)
    medians = fit_medians(eps)
    eps = impute(eps, medians)
    stats = fit_norm_stats(eps, medians)
    norm = normalize(eps, stats)
    (root / "stats.json").write_text(json.dumps(stats.to_dict()),
                                     encoding="utf-8")
    save_transitions(root / "transitions.jsonl",
                     build_transitions(norm, _reward_fn))


def _run_stratify(root: Path, config: PipelineConfig):
    stats = load_stats(root)
    norm, _ = _normalized_episodes(root, stats)
    flags = {e.patient_id: e.outcome == "died" for e in norm}
    model = fit_cluster_model(norm, flags, target_dim=config.target_dim,
                              min_cluster_size=config.min_cluster_size,
                              min_samples=config.min_samples, seed=config.seed)
    save_cluster_model(root / "cluster_model.json", model)


def _run_augment(root: Path, config: PipelineConfig):
    transitions = load_transitions(root / "transitions.jsonl")
    minority = [t for t in transitions if t.a in (1, 2)]
    vae = vae_train(minority, VaeConfig(epochs=config.vae_epochs,
                                        seed=config.seed))
    windows = np.stack([t.s_next for t in minority])
    diff = diffusion_train(windows, DiffusionConfig(
        epochs=config.diffusion_epochs, seed=config.seed))
    save_tensors(root / "vae.json", vae.store.state_dict(),
                 meta={"kind": "vae", "config": asdict(vae.config),
                       "lo": vae.lo.tolist(), "hi": vae.hi.tolist()})
    save_tensors(root / "diffusion.json", diff.store.state_dict(),
                 meta={"kind": "diffusion", "config": asdict(diff.config),
                       "dim": diff.dim, "lo": diff.lo.tolist(),
                       "hi": diff.hi.tolist()})
    augmented = augment_minority(transitions, vae, diff,
                                 ratio=config.rebalance_ratio,
                                 seed=config.seed)
    save_transitions(root / "augmented.jsonl", augmented)


def _run_train(root: Path, config: PipelineConfig):
    transitions = load_transitions(root / "augmented.jsonl")
    bundle = awr_train(transitions, TrainConfig(steps=config.awr_steps,
                                                seed=config.seed))
    save_bundle(root / "policy_awr.json", bundle)


def _run_ensemble(root: Path, config: PipelineConfig):
    transitions = load_transitions(root / "augmented.jsonl")
    rng = np.random.default_rng(config.seed)
    idx = rng.permutation(len(transitions))[:config.ensemble_subsample]
    X = np.stack([transitions[i].s for i in idx])
    y = np.array([transitions[i].a for i in idx])
    gcfg = GbdtConfig(n_trees=config.gbdt_trees, depth=config.gbdt_depth,
                      seed=config.seed)
    gbdt = gbdt_train(X, y, gcfg)
    save_gbdt(root / "gbdt.json", gbdt)
    tab = tab_train(X, y, TabConfig(epochs=config.tab_epochs, seed=config.seed))
    save_tab(root / "tab.json", tab)
    # importance audit on a copy of the matrix with one uniform noise column
    Xn = np.hstack([X, rng.uniform(0, 1, (X.shape[0], 1))])
    audit = gbdt_train(Xn, y, gcfg)
    from ..cohort import FEATURE_NAMES
    report = feature_gain_report(audit, [*FEATURE_NAMES, "noise"],
                                 noise_index=X.shape[1])
    (root / "gains.json").write_text(
        json.dumps({"reliable": report.reliable, "rows": report.rows},
                   indent=2), encoding="utf-8")


def _run_index(root: Path, config: PipelineConfig):
    save_index(root / "kb_index.json", index_knowledge(default_knowledge()))


_STAGE_BODIES = {
    "simulate": _run_simulate,
    "preprocess": _run_preprocess,
    "stratify": _run_stratify,
    "augment": _run_augment,
    "train": _run_train,
    "ensemble": _run_ensemble,
    "index": _run_index,
}


def _stage_fingerprint(stage: str, config: PipelineConfig,
                       manifest: dict) -> str:
    upstream = {}
    for prev in STAGE_ORDER[:STAGE_ORDER.index(stage)]:
        rec = manifest["stages"].get(prev, {})
        upstream[prev] = rec.get("artifacts", {})
    return _hash_obj({"config": config.stage_config(stage),
                      "upstream": upstream})


def _artifacts_fresh(root: Path, stage: str, manifest: dict) -> bool:
    rec = manifest["stages"].get(stage)
    if rec is None:
        return False
    for name in STAGE_ARTIFACTS[stage]:
        if name not in rec["artifacts"] or not (root / name).exists():
            return False
    return True


def _verify_checksums(root: Path, stage: str, manifest: dict):
    for name, digest in manifest["stages"][stage]["artifacts"].items():
        actual = _sha256(root / name)
        if actual != digest:
            raise StaleArtifactError(
                f"artifact {name!r} of stage {stage!r} does not match its "
                f"recorded checksum; rerun the stage or restore the file")


def run_pipeline(root, config: PipelineConfig = PipelineConfig(),
                 stages=None) -> dict:
    """Run the requested stages (default: all) in order. A stage is skipped
    when its fingerprint and artifacts are unchanged; an executed stage
    forces every later stage to execute too."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    requested = set(STAGE_ORDER if stages is None else stages)
    unknown = requested - set(STAGE_ORDER)
    if unknown:
        raise ValueError(f"unknown stages: {sorted(unknown)}")
    manifest = load_manifest(root)
    manifest["config"] = asdict(config)
    executed, skipped = [], []
    upstream_changed = False
    for stage in STAGE_ORDER:
        fingerprint = _stage_fingerprint(stage, config, manifest)
        fresh = (_artifacts_fresh(root, stage, manifest)
                 and manifest["stages"][stage].get("fingerprint") == fingerprint
                 and not upstream_changed)
        if stage not in requested:
            if not fresh and any(
                    s in requested and STAGE_ORDER.index(s) > STAGE_ORDER.index(stage)
                    for s in requested):
                raise MissingDependencyError(
                    f"stage {stage!r} is missing or stale; run it first")
            continue
        if fresh:
            _verify_checksums(root, stage, manifest)
            skipped.append(stage)
            continue
        _STAGE_BODIES[stage](root, config)
        manifest["stages"][stage] = {
            "fingerprint": _stage_fingerprint(stage, config, manifest),
            "artifacts": {name: _sha256(root / name)
                          for name in STAGE_ARTIFACTS[stage]},
        }
        # recompute with fresh upstream checksums now recorded
        manifest["stages"][stage]["fingerprint"] = _stage_fingerprint(
            stage, config, manifest)
        save_manifest(root, manifest)
        executed.append(stage)
        upstream_changed = True
    save_manifest(root, manifest)
    return {"executed": executed, "skipped": skipped, "manifest": manifest}
