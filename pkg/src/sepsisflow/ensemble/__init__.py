from .blend import (
    ACTION_FLUIDS, ACTION_VASOPRESSORS, BlendConfig, BlendDecision, blend,
)
from .gbdt import (
    GainReport, GbdtConfig, GbdtModel, Tree, best_split, feature_gain_report,
    fit_tree, gbdt_predict_proba, gbdt_train, load_gbdt, save_gbdt,
)
from .tabnet import TabClassifier, TabConfig, load_tab, save_tab, tab_train

__all__ = [
    "ACTION_FLUIDS", "ACTION_VASOPRESSORS", "BlendConfig", "BlendDecision",
    "GainReport", "GbdtConfig", "GbdtModel", "TabClassifier", "TabConfig",
    "Tree", "best_split", "blend", "feature_gain_report", "fit_tree",
    "gbdt_predict_proba", "gbdt_train", "load_gbdt", "load_tab", "save_gbdt",
    "save_tab", "tab_train",
]
