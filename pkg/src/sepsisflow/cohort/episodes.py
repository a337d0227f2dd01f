"""Episode/Transition data model and the preprocessing chain:
windowing -> LOCF+median imputation -> z-score normalization -> transitions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .features import FEATURE_INDEX, N_ACTIONS, N_FEATURES

WINDOW_HOURS = 4.0


@dataclass
class Episode:
    patient_id: str
    times: np.ndarray          # window start, hours since admission
    values: np.ndarray         # (n_windows, 30), NaN = missing until imputed
    actions: np.ndarray        # (n_windows,) int in {0..3}
    mortality_48h: np.ndarray  # (n_windows,) bool: death within 48h of window end
    outcome: str               # "survived" | "died"
    raw_values: np.ndarray | None = None  # physical units, kept through normalize

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError(f"{self.patient_id}: timestamps not strictly increasing")
        if np.any((self.actions < 0) | (self.actions >= N_ACTIONS)):
            raise ValueError(f"{self.patient_id}: invalid action id")

    @property
    def n_windows(self) -> int:
        return len(self.times)


@dataclass
class Transition:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    d: bool
    patient_id: str = ""
    t_index: int = 0
    provenance: str = "real"

    def __post_init__(self):
        if not -1.0 <= self.r <= 0.8:
            raise ValueError(f"reward {self.r} outside [-1, 0.8]")


@dataclass
class NormStats:
    mean: np.ndarray
    std: np.ndarray
    medians: np.ndarray

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist(),
                "medians": self.medians.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], dtype=np.float64),
                   np.asarray(d["std"], dtype=np.float64),
                   np.asarray(d["medians"], dtype=np.float64))


def window_episodes(cohort, window_hours: float = WINDOW_HOURS) -> list[Episode]:
    """Resample each patient's records into consecutive half-open windows
    [k*w, (k+1)*w); the last observation per feature within a window wins."""
    if window_hours <= 0:
        raise ValueError("window_hours must be positive")
    episodes = []
    for pid in cohort.patient_ids():
        rows = cohort.records[pid]
        if not rows:
            warnings.warn(f"patient {pid} has zero records, skipped")
            continue
        t_max = rows[-1].t
        n_windows = int(t_max // window_hours) + 1
        values = np.full((n_windows, N_FEATURES), np.nan)
        actions = np.zeros(n_windows, dtype=np.int64)
        seen_action = np.zeros(n_windows, dtype=bool)
        death_time = rows[0].death_time
        for row in rows:
            k = int(row.t // window_hours)
            for j, v in enumerate(row.values):
                if v is not None:
                    values[k, j] = v
            if row.action is not None:
                actions[k] = row.action
                seen_action[k] = True
        # carry the last seen action through observation-free windows
        last = 0
        for k in range(n_windows):
            if seen_action[k]:
                last = actions[k]
            actions[k] = last
        window_ends = (np.arange(n_windows) + 1) * window_hours
        mortality = (np.full(n_windows, False) if death_time is None
                     else death_time <= window_ends + 48.0)
        episodes.append(Episode(
            patient_id=pid,
            times=np.arange(n_windows) * window_hours,
            values=values,
            actions=actions,
            mortality_48h=mortality,
            outcome="died" if death_time is not None else "survived",
        ))
    return episodes


def fit_medians(train_episodes: list[Episode]) -> np.ndarray:
    """Per-feature median over all observed training values."""
    stacked = np.concatenate([e.values for e in train_episodes], axis=0)
    medians = np.empty(N_FEATURES)
    for j in range(N_FEATURES):
        col = stacked[:, j]
        observed = col[~np.isnan(col)]
        if observed.size == 0:
            raise ValueError(f"feature index {j} unobserved in every training episode")
        medians[j] = np.median(observed)
    return medians


def impute(episodes: list[Episode], medians: np.ndarray) -> list[Episode]:
    """LOCF within each episode; leading gaps filled with training medians."""
    out = []
    for e in episodes:
        vals = e.values.copy()
        for j in range(N_FEATURES):
            col = vals[:, j]
            last = medians[j]
            for k in range(len(col)):
                if np.isnan(col[k]):
                    col[k] = last
                else:
                    last = col[k]
        out.append(replace(e, values=vals))
    return out


def fit_norm_stats(train_episodes: list[Episode], medians: np.ndarray) -> NormStats:
    stacked = np.concatenate([e.values for e in train_episodes], axis=0)
    if np.any(np.isnan(stacked)):
        raise ValueError("normalization stats require imputed episodes")
    return NormStats(mean=stacked.mean(axis=0), std=stacked.std(axis=0),
                     medians=medians)


def normalize(episodes: list[Episode], stats: NormStats) -> list[Episode]:
    """z-score each feature; constant features (sigma == 0) map to 0.
    Physical-unit values are preserved on raw_values for reward computation."""
    std = np.where(stats.std > 0, stats.std, 1.0)
    zero_mask = stats.std == 0
    out = []
    for e in episodes:
        z = (e.values - stats.mean) / std
        z[:, zero_mask] = 0.0
        out.append(replace(e, values=z, raw_values=e.values.copy()))
    return out


def build_transitions(episodes: list[Episode], reward_fn) -> list[Transition]:
    """One transition per consecutive window pair; d marks the final pair.

    ``reward_fn(map, spo2, lactate, mortality_48h)`` receives the next
    window's physical-unit vitals.
    """
    i_map = FEATURE_INDEX["map"]
    i_spo2 = FEATURE_INDEX["spo2"]
    i_lact = FEATURE_INDEX["lactate"]
    transitions = []
    for e in episodes:
        if e.raw_values is None:
            raise ValueError(f"{e.patient_id}: normalize before building transitions")
        if e.n_windows < 2:
            warnings.warn(f"patient {e.patient_id}: single window, no transitions")
            continue
        for k in range(e.n_windows - 1):
            raw_next = e.raw_values[k + 1]
            r = reward_fn(raw_next[i_map], raw_next[i_spo2], raw_next[i_lact],
                          bool(e.mortality_48h[k + 1]))
            transitions.append(Transition(
                s=e.values[k].copy(), a=int(e.actions[k]), r=float(r),
                s_next=e.values[k + 1].copy(), d=(k == e.n_windows - 2),
                patient_id=e.patient_id, t_index=k,
            ))
    return transitions


def transitions_to_arrays(transitions: list[Transition]) -> dict[str, np.ndarray]:
    return {
        "s": np.stack([t.s for t in transitions]),
        "a": np.array([t.a for t in transitions], dtype=np.int64),
        "r": np.array([t.r for t in transitions]),
        "s_next": np.stack([t.s_next for t in transitions]),
        "d": np.array([t.d for t in transitions], dtype=np.float64),
    }
