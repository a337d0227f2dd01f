import warnings

import numpy as np
import pytest

from sepsisflow.ensemble import (
    BlendConfig, GbdtConfig, TabConfig, best_split, blend, feature_gain_report,
    gbdt_predict_proba, gbdt_train, load_gbdt, load_tab, save_gbdt, save_tab,
    tab_train,
)
from sepsisflow.neural import Tensor, sparsemax_np

from gradcheck import finite_diff_check


# ---- split search vs exhaustive oracle -------------------------------

def oracle_best_split(x, g):
    """Brute-force variance reduction over every midpoint threshold."""
    n = len(x)
    parent = np.sum((g - g.mean()) ** 2)
    best = (0.0, float("nan"))
    for thr in np.unique(x)[:-1]:
        # midpoints between consecutive distinct values
        upper = np.unique(x)[np.unique(x) > thr].min()
        mid = 0.5 * (thr + upper)
        l, r = g[x <= mid], g[x > mid]
        gain = parent - np.sum((l - l.mean()) ** 2) - np.sum((r - r.mean()) ** 2)
        if gain > best[0] + 1e-12:
            best = (gain, mid)
    return best


def test_best_split_matches_exhaustive_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.choice(np.linspace(-2, 2, 9), size=30)
        g = rng.normal(0, 1, 30)
        gain, thr = best_split(x, g)
        ogain, othr = oracle_best_split(x, g)
        assert gain == pytest.approx(ogain, abs=1e-9)
        if ogain > 0:
            assert thr == pytest.approx(othr, abs=1e-12)


# ---- GBDT training ---------------------------------------------------

def separable_data():
    x = np.concatenate([np.linspace(-2, -1, 20), np.linspace(1, 2, 20)])
    y = np.array([0] * 20 + [1] * 20)
    return x[:, None], y


def test_gbdt_separable_depth1_single_tree_perfect():
    X, y = separable_data()
    model = gbdt_train(X, y, GbdtConfig(n_trees=1, depth=1))
    pred = np.argmax(gbdt_predict_proba(model, X), axis=1)
    assert np.array_equal(pred, y)
    # the single stump must split where the exhaustive oracle splits
    tree = model.rounds[0][0]
    resid_oracle_thr = 0.0   # classes separated around 0
    assert tree.feature[0] == 0
    assert abs(tree.threshold[0] - resid_oracle_thr) < 1.0


def test_gbdt_constant_features_predicts_priors():
    X = np.ones((40, 3))
    y = np.array([0] * 30 + [1] * 10)
    model = gbdt_train(X, y, GbdtConfig(n_trees=5, depth=3))
    for trees in model.rounds:
        for t in trees:
            assert t.feature == [-1] and t.gain == [0.0]   # stumps, zero gain
    p = gbdt_predict_proba(model, np.ones((1, 3)))[0]
    e = np.exp(np.log(np.maximum(np.array([0.75, 0.25, 0, 0]), 1e-12)))
    assert np.allclose(p, e / e.sum(), atol=1e-6)


def test_gbdt_deterministic():
    rng = np.random.default_rng(1)
    X = rng.normal(0, 1, (60, 4))
    y = rng.integers(0, 4, 60)
    m1 = gbdt_train(X, y, GbdtConfig(n_trees=5, depth=2, seed=3))
    m2 = gbdt_train(X, y, GbdtConfig(n_trees=5, depth=2, seed=3))
    for t1rs, t2rs in zip(m1.rounds, m2.rounds):
        for t1, t2 in zip(t1rs, t2rs):
            assert t1.feature == t2.feature
            assert t1.threshold == t2.threshold
            assert t1.value == t2.value


def test_gbdt_zero_trees_is_prior_softmax():
    X = np.zeros((10, 2))
    y = np.array([0, 0, 1, 1, 2, 2, 3, 3, 3, 3])
    model = gbdt_train(X, y, GbdtConfig(n_trees=0))
    p = gbdt_predict_proba(model, np.zeros((1, 2)))[0]
    freq = np.array([0.2, 0.2, 0.2, 0.4])
    e = np.exp(np.log(freq))
    assert np.allclose(p, e / e.sum())


def test_gbdt_probabilities_sum_to_one():
    rng = np.random.default_rng(2)
    X = rng.normal(0, 1, (50, 3))
    y = rng.integers(0, 4, 50)
    model = gbdt_train(X, y, GbdtConfig(n_trees=10, depth=2))
    p = gbdt_predict_proba(model, rng.normal(0, 1, (20, 3)))
    assert np.allclose(p.sum(axis=1), 1.0)
    assert np.all(p >= 0)


def test_gbdt_single_class_warns_and_predicts_it():
    X = np.random.default_rng(3).normal(0, 1, (20, 2))
    y = np.full(20, 2)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        model = gbdt_train(X, y, GbdtConfig(n_trees=2, depth=2))
    assert any("single-class" in str(w.message) for w in caught)
    pred = np.argmax(gbdt_predict_proba(model, X), axis=1)
    assert np.all(pred == 2)


def test_gbdt_dimension_mismatch():
    X, y = separable_data()
    model = gbdt_train(X, y, GbdtConfig(n_trees=1, depth=1))
    with pytest.raises(ValueError):
        gbdt_predict_proba(model, np.zeros((2, 5)))


def test_gbdt_monotone_transform_invariance():
    # strictly monotone feature transform; re-learned splits give the same
    # partition, so predictions are identical
    rng = np.random.default_rng(4)
    X = rng.normal(0, 1, (40, 2))
    y = (X[:, 0] + 0.3 * X[:, 1] > 0).astype(int)
    Xt = np.column_stack([np.exp(X[:, 0]), X[:, 1] ** 3])
    m1 = gbdt_train(X, y, GbdtConfig(n_trees=5, depth=2))
    m2 = gbdt_train(Xt, y, GbdtConfig(n_trees=5, depth=2))
    p1 = gbdt_predict_proba(m1, X)
    p2 = gbdt_predict_proba(m2, Xt)
    assert np.allclose(p1, p2, atol=1e-9)


# ---- gain report -----------------------------------------------------

def planted_signal_data(seed=5, n=300):
    rng = np.random.default_rng(seed)
    X = rng.normal(0, 1, (n, 4))
    y = ((X[:, 0] > 0).astype(int) + 2 * (X[:, 1] > 0).astype(int))
    noise = rng.uniform(0, 1, (n, 1))
    return np.hstack([X, noise]), y


def test_noise_feature_ranked_last():
    X, y = planted_signal_data()
    model = gbdt_train(X, y, GbdtConfig(n_trees=20, depth=3))
    report = feature_gain_report(model, noise_index=4)
    assert report.reliable
    assert report.rows[-1]["is_noise"]
    noise_gain = next(r["mean_gain"] for r in report.rows if r["is_noise"])
    for r in report.rows:
        if not r["is_noise"]:
            assert r["mean_gain"] >= noise_gain


def test_gain_report_no_signal_unreliable():
    X = np.ones((30, 3))
    y = np.random.default_rng(6).integers(0, 4, 30)
    model = gbdt_train(X, y, GbdtConfig(n_trees=5, depth=2))
    report = feature_gain_report(model)
    assert not report.reliable
    assert all(r["mean_gain"] == 0.0 for r in report.rows)


def test_gains_nonnegative():
    X, y = planted_signal_data(seed=7)
    model = gbdt_train(X, y, GbdtConfig(n_trees=10, depth=3))
    for r in feature_gain_report(model).rows:
        assert r["mean_gain"] >= 0.0


# ---- GBDT persistence ------------------------------------------------

def test_gbdt_round_trip_bit_exact(tmp_path):
    X, y = planted_signal_data(seed=8, n=100)
    model = gbdt_train(X, y, GbdtConfig(n_trees=5, depth=3))
    path = tmp_path / "gbdt.json"
    save_gbdt(path, model)
    loaded = load_gbdt(path)
    assert np.array_equal(gbdt_predict_proba(model, X),
                          gbdt_predict_proba(loaded, X))


# ---- TabClassifier ---------------------------------------------------

def test_tab_masks_on_simplex():
    rng = np.random.default_rng(9)
    X = rng.normal(0, 1, (50, 6))
    y = rng.integers(0, 4, 50)
    clf = tab_train(X, y, TabConfig(epochs=3, seed=9))
    masks = clf.masks_np(X)
    assert masks.shape == (3, 50, 6)
    assert np.allclose(masks.sum(axis=2), 1.0)
    assert np.all(masks >= 0)


def test_tab_attends_to_informative_feature():
    rng = np.random.default_rng(10)
    X = rng.normal(0, 1, (400, 8))
    y = (X[:, 0] > 0).astype(int)
    clf = tab_train(X, y, TabConfig(epochs=40, seed=10), n_classes=4)
    mean_mask = clf.masks_np(X).mean(axis=(0, 1))
    assert np.argmax(mean_mask) == 0
    assert np.all(mean_mask[0] > np.delete(mean_mask, 0))


def test_tab_gradients_through_sparsemax_path():
    rng = np.random.default_rng(11)
    X = rng.normal(0, 1, (3, 4))
    y = np.array([0, 1, 2])
    clf = tab_train(X, y, TabConfig(n_steps=2, hidden=3, epochs=1, seed=11))

    def loss_fn():
        logits, _ = clf.forward(Tensor(X))
        return -logits.log_softmax().gather_cols(y).mean()

    assert finite_diff_check(clf.store, loss_fn) <= 1e-4


def test_sparsemax_exact_zero_on_large_gap():
    p = sparsemax_np(np.array([[2.0, 0.5, 0.0]]))
    assert np.any(p == 0.0)
    assert p.sum() == pytest.approx(1.0)


def test_tab_round_trip(tmp_path):
    rng = np.random.default_rng(12)
    X = rng.normal(0, 1, (40, 5))
    y = rng.integers(0, 4, 40)
    clf = tab_train(X, y, TabConfig(epochs=2, seed=12))
    path = tmp_path / "tab.json"
    save_tab(path, clf)
    loaded = load_tab(path)
    assert np.array_equal(clf.predict_proba(X), loaded.predict_proba(X))


# ---- blend -----------------------------------------------------------

def test_blend_fluid_branch():
    d = blend(0.9, 0.2, 0, omega=0.5)
    assert d.action == 1 and d.source == "tabular-fluid"


def test_blend_rl_fallback():
    d = blend(0.1, 0.1, 3, omega=0.5)
    assert d.action == 3 and d.source == "rl"


def test_blend_tie_goes_to_rl():
    d = blend(0.6, 0.6, 2, omega=0.5)
    assert d.action == 2 and d.source == "rl"


def test_blend_truth_table():
    # hand-enumerated branch table over {< omega, = omega, > omega}^2, omega=0.5
    lo, eq, hi = 0.3, 0.5, 0.7
    expected = {
        (lo, lo): "rl", (lo, eq): "rl", (lo, hi): "tabular-vaso",
        (eq, lo): "rl", (eq, eq): "rl", (eq, hi): "tabular-vaso",
        (hi, lo): "tabular-fluid", (hi, eq): "tabular-fluid", (hi, hi): "rl",
    }
    for (pf, pv), source in expected.items():
        d = blend(pf, pv, 3, omega=0.5)
        assert d.source == source, (pf, pv)
        assert d.action == {"tabular-fluid": 1, "tabular-vaso": 2, "rl": 3}[source]
        assert (d.p_fluid, d.p_vaso, d.a_rl) == (pf, pv, 3)


def test_blend_input_validation():
    with pytest.raises(ValueError):
        blend(1.2, 0.1, 0)
    with pytest.raises(ValueError):
        BlendConfig(omega=0.0)


# ---- confusion-matrix arithmetic ------------------------------------

def test_precision_recall_match_hand_computed_fixture():
    from sepsisflow.cohort import N_FEATURES, Transition
    from sepsisflow.policy import evaluate
    logged = [0, 0, 0, 1, 1, 2, 2, 3, 3, 3]
    predicted = [0, 0, 1, 1, 2, 2, 2, 3, 3, 0]
    states = [np.full(N_FEATURES, float(i)) for i in range(10)]
    ts = [Transition(s=states[i], a=logged[i], r=0.0, s_next=states[i], d=False)
          for i in range(10)]
    lookup = {states[i].tobytes(): predicted[i] for i in range(10)}
    rep = evaluate(lambda s: lookup[np.asarray(s).tobytes()], ts)
    # hand-computed: confusion rows=logged, cols=predicted
    hand = np.array([[2, 1, 0, 0],
                     [0, 1, 1, 0],
                     [0, 0, 2, 0],
                     [1, 0, 0, 2]])
    assert np.array_equal(rep.confusion, hand)
    assert rep.accuracy == pytest.approx(0.7)
    assert rep.precision == pytest.approx([2 / 3, 1 / 2, 2 / 3, 1.0])
    assert rep.recall == pytest.approx([2 / 3, 1 / 2, 1.0, 2 / 3])
