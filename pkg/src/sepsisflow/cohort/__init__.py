from .features import (
    ACTION_NAMES, CANONICAL_FEATURES, FEATURE_INDEX, FEATURE_NAMES,
    N_ACTIONS, N_FEATURES, FeatureSpec,
)
from .episodes import (
    Episode, NormStats, Transition, build_transitions, fit_medians,
    fit_norm_stats, impute, normalize, transitions_to_arrays, window_episodes,
)
from .io import (
    CSV_HEADER, CohortTable, RawRecord, RowError, SchemaError,
    ingest_cohort, load_transitions, save_transitions, write_cohort_csv,
)
from .simulate import (
    SepsisSimulator, SimConfig, rollout_average_reward, simulate_cohort,
)
