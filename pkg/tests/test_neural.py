import json

import numpy as np
import pytest

from sepsisflow.neural import (
    Adam, AttentionEncoder, MLP, NonFiniteError, ParamStore, Tensor,
    load_tensors, save_tensors, softmax_np, sparsemax_np,
)
from gradcheck import finite_diff_check


rng = np.random.default_rng(7)


def test_linear_quadratic_gradient_closed_form():
    # loss = 0.5 * ||W x||^2, dL/dW = (W x) x^T
    store = ParamStore(seed=0)
    W = store.add("W", (4, 3))
    x = Tensor(rng.normal(size=(3, 1)))
    loss = (W @ x).square().sum() * 0.5
    loss.backward()
    expected = (W.value @ x.value) @ x.value.T
    assert np.allclose(W.grad, expected, atol=1e-12)


def test_zero_input_zero_gradient():
    store = ParamStore(seed=0)
    W = store.add("W", (3, 2))
    x = Tensor(np.zeros((1, 3)))
    out = x @ W
    assert np.all(out.value == 0)
    out.square().sum().backward()
    assert np.all(W.grad == 0)


@pytest.mark.parametrize("trial", range(20))
def test_random_graph_finite_difference(trial):
    r = np.random.default_rng(trial)
    store = ParamStore(seed=trial)
    mlp = MLP(store, "net", [5, 8, 3], activation="tanh")
    x = Tensor(r.normal(size=(4, 5)))
    y = r.integers(0, 3, size=4)

    def loss_fn():
        logp = mlp(x).log_softmax()
        return -logp.gather_cols(y).mean()

    assert finite_diff_check(store, loss_fn) <= 1e-4


def test_softmax_contracts():
    v = rng.normal(size=(6, 5))
    p = softmax_np(v)
    assert np.allclose(p.sum(axis=-1), 1.0, atol=1e-12)
    assert np.allclose(softmax_np(v + 3.7), p, atol=1e-12)
    # stability
    assert np.allclose(softmax_np(np.array([1000.0, 0.0])), [1.0, 0.0])
    # uniform in, uniform out
    assert np.allclose(softmax_np(np.zeros(4)), 0.25)


def test_sparsemax_against_brute_force():
    def brute_force(v):
        # try every support set, keep the feasible projection
        n = len(v)
        best, best_dist = None, np.inf
        for mask in range(1, 2 ** n):
            idx = [i for i in range(n) if mask >> i & 1]
            tau = (sum(v[i] for i in idx) - 1.0) / len(idx)
            p = np.zeros(n)
            for i in idx:
                p[i] = v[i] - tau
            if np.any(p < -1e-12):
                continue
            d = np.sum((p - v) ** 2)
            if d < best_dist:
                best, best_dist = p, d
        return best

    for trial in range(30):
        v = np.random.default_rng(trial).normal(size=6) * 2
        assert np.allclose(sparsemax_np(v), brute_force(v), atol=1e-9)


def test_sparsemax_edges():
    assert np.allclose(sparsemax_np(np.array([5.0, 0.0])), [1.0, 0.0])
    assert np.allclose(sparsemax_np(np.zeros(4)), 0.25)
    # exact zeros once gap exceeds 1
    out = sparsemax_np(np.array([2.0, 0.5, 0.0]))
    assert out[-1] == 0.0


def test_sparsemax_gradient():
    store = ParamStore(seed=3)
    W = store.add("W", (4, 6))
    x = Tensor(rng.normal(size=(3, 4)))
    tgt = rng.normal(size=(3, 6))

    def loss_fn():
        return ((x @ W).sparsemax() - tgt).square().sum()

    assert finite_diff_check(store, loss_fn) <= 1e-4


def test_attention_encoder_contracts():
    store = ParamStore(seed=1)
    enc = AttentionEncoder(store, state_dim=30)
    s = Tensor(rng.normal(size=(5, 30)))
    z, w = enc(s)
    assert z.shape == (5, 32)
    assert np.allclose(w.value.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(w.value >= 0)


def test_attention_uniform_when_scores_zero():
    store = ParamStore(seed=1)
    enc = AttentionEncoder(store, state_dim=8, score_hidden=4, z_dim=4)
    for name, p in store.items():
        if name.startswith("attn.score"):
            p.value = np.zeros_like(p.value)
    _, w = enc(Tensor(rng.normal(size=(2, 8))))
    assert np.allclose(w.value, 1.0 / 8, atol=1e-12)


def test_attention_encoder_gradient():
    store = ParamStore(seed=2)
    enc = AttentionEncoder(store, state_dim=6, score_hidden=4, enc_hidden=5, z_dim=3)
    s = Tensor(rng.normal(size=(2, 6)))

    def loss_fn():
        z, _ = enc(s)
        return z.square().sum()

    assert finite_diff_check(store, loss_fn) <= 1e-4


def test_adam_zero_grad_noop_and_determinism():
    def run():
        store = ParamStore(seed=5)
        W = store.add("W", (3, 3))
        opt = Adam(store, lr=1e-2)
        x = Tensor(np.eye(3))
        for _ in range(10):
            store.zero_grad()
            ((x @ W) - np.ones((3, 3))).square().sum().backward()
            opt.step()
        return W.value.copy()

    assert np.array_equal(run(), run())

    store = ParamStore(seed=5)
    W = store.add("W", (3, 3))
    before = W.value.copy()
    W.grad = np.zeros_like(W.value)
    opt = Adam(store)
    # zero gradient: adam update is exactly zero (m=v=0 -> step 0/(0+eps))
    opt.step()
    assert np.array_equal(W.value, before)


def test_adam_quadratic_bowl():
    store = ParamStore(seed=9)
    w = store.add("w", (4,))
    target = np.array([1.0, -2.0, 0.5, 3.0])
    opt = Adam(store, lr=5e-2)
    for _ in range(500):
        store.zero_grad()
        (Tensor(np.eye(4)) @ w - target).square().sum().backward()
        opt.step()
    loss = np.sum((w.value - target) ** 2)
    assert loss < 1e-6


def test_nonfinite_gradient_raises_with_name():
    store = ParamStore(seed=0)
    store.add("bad", (2,))
    store["bad"].grad = np.array([np.nan, 0.0])
    with pytest.raises(NonFiniteError, match="bad"):
        Adam(store).step()


def test_checkpoint_bit_exact_roundtrip(tmp_path):
    store = ParamStore(seed=11)
    store.add("a.W", (7, 5))
    store.add("b", (13,))
    path = tmp_path / "ckpt.json"
    save_tensors(path, store.state_dict(), meta={"kind": "test"})
    tensors, meta = load_tensors(path)
    assert meta["kind"] == "test"
    for k, v in store.state_dict().items():
        assert np.array_equal(tensors[k], v)
    # and through json text twice (stability of repr round-trip)
    save_tensors(path, tensors)
    tensors2, _ = load_tensors(path)
    for k in tensors:
        assert np.array_equal(tensors[k], tensors2[k])
