"""Bundle persistence on top of the shared checkpoint format."""

from __future__ import annotations

from dataclasses import asdict

from ..neural import ParamStore, load_tensors, save_tensors
from .awr import PolicyBundle, TrainConfig


def save_bundle(path, bundle: PolicyBundle):
    tensors = dict(bundle.store.state_dict())
    for i, (w, b) in enumerate(bundle.v_target):
        tensors[f"target.v.{i}.W"] = w
        tensors[f"target.v.{i}.b"] = b
    for i, (w, b) in enumerate(bundle.q_target):
        tensors[f"target.q.{i}.W"] = w
        tensors[f"target.q.{i}.b"] = b
    for i, (w, b) in enumerate(bundle.e_target):
        tensors[f"target.e.{i}.W"] = w
        tensors[f"target.e.{i}.b"] = b
    meta = {"kind": bundle.kind, "bc_threshold": bundle.bc_threshold,
            "config": asdict(bundle.config)}
    save_tensors(path, tensors, meta=meta)


def load_bundle(path) -> PolicyBundle:
    tensors, meta = load_tensors(path)
    config = TrainConfig(**meta["config"])
    store = ParamStore(seed=config.seed)
    v_target = [(tensors.pop(f"target.v.{i}.W"), tensors.pop(f"target.v.{i}.b"))
                for i in range(2)]
    q_target = [(tensors.pop(f"target.q.{i}.W"), tensors.pop(f"target.q.{i}.b"))
                for i in range(2)]
    e_target = [(tensors.pop(f"target.e.{i}.W"), tensors.pop(f"target.e.{i}.b"))
                for i in range(4)] if config.use_attention else []
    bundle = PolicyBundle(store=store, config=config, kind=meta["kind"],
                          bc_threshold=meta["bc_threshold"],
                          v_target=v_target, q_target=q_target,
                          e_target=e_target)
    store.load_state_dict(tensors)
    return bundle
