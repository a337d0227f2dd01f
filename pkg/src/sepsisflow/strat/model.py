"""Cluster-model assembly: padding/flattening, statistical validation,
tier assignment, cold-start stratification and model persistence."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.stats import chi2 as chi2_dist

from ..cohort.episodes import Episode
from ..cohort.features import FEATURE_INDEX
from .hdbscan import HdbscanState, hdbscan_fit, hdbscan_predict
from .reduce import reduce_matrix, reducer_from_dict

DEFAULT_SUBSET = ("map", "spo2", "lactate", "heart_rate", "resp_rate",
                  "gcs_total", "creatinine", "platelets", "wbc", "bicarbonate")


class RiskTier(str, Enum):
    LOW = "Low"
    INTERMEDIATE = "Intermediate"
    HIGH = "High"

    @classmethod
    def from_mortality(cls, m: float) -> "RiskTier":
        if not 0.0 <= m <= 1.0:
            raise ValueError(f"mortality rate {m} outside [0, 1]")
        if m <= 0.40:
            return cls.LOW
        if m <= 0.75:
            return cls.INTERMEDIATE
        return cls.HIGH


@dataclass
class ValidationReport:
    variance: float
    chi2: float
    df: int
    p_value: float
    significant: bool
    cluster_mortality: dict[int, float]

    def to_dict(self):
        return {"variance": self.variance, "chi2": self.chi2, "df": self.df,
                "p_value": self.p_value, "significant": self.significant,
                "cluster_mortality": {str(k): v for k, v in self.cluster_mortality.items()}}


def pad_and_flatten(episodes: list[Episode], L: int = 80,
                    feature_subset=DEFAULT_SUBSET):
    """Per-patient rows: the first L windows of the chosen features, zero
    padded at the tail and L2-normalized. Episodes longer than L are excluded
    and counted. Returns (matrix, patient_ids, n_excluded)."""
    idx = [FEATURE_INDEX[name] for name in feature_subset]
    rows, ids, excluded = [], [], 0
    for e in episodes:
        if e.n_windows > L:
            excluded += 1
            continue
        block = np.zeros((L, len(idx)))
        block[:e.n_windows] = e.values[:, idx]
        row = block.ravel()
        norm = np.linalg.norm(row)
        if norm > 0:  # zero rows have no direction to normalize
            row = row / norm
        rows.append(row)
        ids.append(e.patient_id)
    matrix = np.stack(rows) if rows else np.zeros((0, L * len(idx)))
    return matrix, ids, excluded


def flatten_single(values: np.ndarray, L: int, feature_subset) -> np.ndarray:
    """Pad/flatten one (n_windows, 30) state sequence with the fit-time config."""
    values = np.atleast_2d(values)
    idx = [FEATURE_INDEX[name] for name in feature_subset]
    if values.shape[0] > L:
        values = values[:L]
    block = np.zeros((L, len(idx)))
    block[:values.shape[0]] = values[:, idx]
    row = block.ravel()
    norm = np.linalg.norm(row)
    return row / norm if norm > 0 else row


def validate_clusters(labels: np.ndarray, mortality_flags: np.ndarray) -> ValidationReport:
    """Mortality variance across clusters plus a 2xK chi-square independence
    test (died/survived x cluster); noise points are excluded."""
    labels = np.asarray(labels)
    flags = np.asarray(mortality_flags, dtype=bool)
    mask = labels >= 0
    labels, flags = labels[mask], flags[mask]
    uniq = np.unique(labels)
    K = len(uniq)
    if K < 2:
        raise ValueError(f"need >= 2 non-noise clusters, got {K}")
    counts = np.array([np.sum(labels == c) for c in uniq], dtype=np.float64)
    if np.any(counts == 0):
        raise ValueError("cluster with zero members")
    deaths = np.array([np.sum(flags[labels == c]) for c in uniq], dtype=np.float64)
    m_k = deaths / counts
    m_overall = flags.mean()
    variance = float(np.sum((m_k - m_overall) ** 2) / K)

    observed = np.stack([deaths, counts - deaths])           # 2 x K
    row_tot = observed.sum(axis=1, keepdims=True)
    col_tot = observed.sum(axis=0, keepdims=True)
    total = observed.sum()
    expected = row_tot @ col_tot / total
    with np.errstate(divide="ignore", invalid="ignore"):
        cells = np.where(expected > 0, (observed - expected) ** 2 / expected, 0.0)
    chi2 = float(cells.sum())
    df = K - 1
    p = float(chi2_dist.sf(chi2, df))
    return ValidationReport(
        variance=variance, chi2=chi2, df=df, p_value=p,
        significant=p < 0.001,
        cluster_mortality={int(c): float(m) for c, m in zip(uniq, m_k)},
    )


def assign_tiers(labels: np.ndarray, mortality_flags: np.ndarray,
                 report: ValidationReport | None = None) -> dict[int, RiskTier]:
    if report is not None and not report.significant:
        warnings.warn("cluster validation not significant; tiers are advisory")
    labels = np.asarray(labels)
    flags = np.asarray(mortality_flags, dtype=bool)
    tier_map = {}
    for c in np.unique(labels[labels >= 0]):
        m = float(flags[labels == c].mean())
        tier_map[int(c)] = RiskTier.from_mortality(m)
    return tier_map


@dataclass
class ClusterModel:
    reducer: object
    hdbscan: HdbscanState
    mortality: dict[int, float]
    tier_map: dict[int, RiskTier]
    validation: ValidationReport
    L: int
    feature_subset: tuple[str, ...]

    def stratify_values(self, values: np.ndarray) -> dict:
        """Tier lookup for one raw state sequence (n_windows x 30, normalized).
        Noise maps to the Intermediate tier with is_noise set."""
        row = flatten_single(values, self.L, self.feature_subset)
        emb = self.reducer.transform(row[None, :])
        label = int(hdbscan_predict(self.hdbscan, emb)[0])
        if label < 0:
            return {"tier": RiskTier.INTERMEDIATE, "cluster_id": -1, "is_noise": True}
        return {"tier": self.tier_map[label], "cluster_id": label, "is_noise": False}

    def tier_table(self) -> list[dict]:
        rows = []
        for c in sorted(self.tier_map):
            members = int(np.sum(self.hdbscan.labels == c))
            rows.append({"cluster": c, "mortality_pct": round(100 * self.mortality[c], 1),
                         "patients": members, "risk_category": self.tier_map[c].value})
        return rows


def fit_cluster_model(episodes: list[Episode], mortality_flags: dict[str, bool],
                      L: int = 80, feature_subset=DEFAULT_SUBSET, target_dim: int = 8,
                      method: str = "pca", seed: int = 0, min_cluster_size: int = 30,
                      min_samples: int = 30, epsilon: float = 0.01) -> ClusterModel:
    matrix, ids, _ = pad_and_flatten(episodes, L=L, feature_subset=feature_subset)
    _, reducer = reduce_matrix(matrix, target_dim, method=method, seed=seed)
    emb = reducer.transform(matrix)
    state = hdbscan_fit(emb, min_cluster_size=min_cluster_size,
                        min_samples=min_samples, epsilon=epsilon)
    flags = np.array([mortality_flags[pid] for pid in ids], dtype=bool)
    report = validate_clusters(state.labels, flags)
    tier_map = assign_tiers(state.labels, flags, report)
    mortality = {c: float(flags[state.labels == c].mean()) for c in tier_map}
    return ClusterModel(reducer=reducer, hdbscan=state, mortality=mortality,
                        tier_map=tier_map, validation=report, L=L,
                        feature_subset=tuple(feature_subset))


FORMAT_VERSION = 1


def save_cluster_model(path, model: ClusterModel):
    doc = {
        "format_version": FORMAT_VERSION,
        "reducer": model.reducer.to_dict(),
        "hdbscan": {
            "points": [r.tolist() for r in model.hdbscan.points],
            "labels": model.hdbscan.labels.tolist(),
            "core": model.hdbscan.core.tolist(),
            "cluster_eps": model.hdbscan.cluster_eps.tolist(),
            "min_cluster_size": model.hdbscan.min_cluster_size,
            "min_samples": model.hdbscan.min_samples,
            "epsilon": model.hdbscan.epsilon,
        },
        "mortality": {str(k): v for k, v in model.mortality.items()},
        "tier_map": {str(k): v.value for k, v in model.tier_map.items()},
        "validation": model.validation.to_dict(),
        "L": model.L,
        "feature_subset": list(model.feature_subset),
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_cluster_model(path) -> ClusterModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError("unsupported cluster model format")
    h = doc["hdbscan"]
    state = HdbscanState(
        points=np.asarray(h["points"], dtype=np.float64).reshape(len(h["labels"]), -1),
        labels=np.asarray(h["labels"], dtype=np.int64),
        core=np.asarray(h["core"], dtype=np.float64),
        cluster_eps=np.asarray(h["cluster_eps"], dtype=np.float64),
        min_cluster_size=h["min_cluster_size"], min_samples=h["min_samples"],
        epsilon=h["epsilon"],
    )
    v = doc["validation"]
    report = ValidationReport(
        variance=v["variance"], chi2=v["chi2"], df=v["df"], p_value=v["p_value"],
        significant=v["significant"],
        cluster_mortality={int(k): x for k, x in v["cluster_mortality"].items()},
    )
    return ClusterModel(
        reducer=reducer_from_dict(doc["reducer"]), hdbscan=state,
        mortality={int(k): x for k, x in doc["mortality"].items()},
        tier_map={int(k): RiskTier(x) for k, x in doc["tier_map"].items()},
        validation=report, L=doc["L"], feature_subset=tuple(doc["feature_subset"]),
    )
