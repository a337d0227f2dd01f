"""Minority-action rebalancing: top up underrepresented actions with
synthetic transitions from the two trained generators."""

from __future__ import annotations

import math
from collections import Counter

import numpy as np

from ..cohort import Transition
from .diffusion import DiffusionModel, diffusion_sample
from .vae import VaeModel, vae_sample


def augment_minority(transitions: list[Transition], vae: VaeModel,
                     diffusion: DiffusionModel,
                     target_actions: tuple[int, ...] = (1, 2),
                     ratio: float = 0.5, seed: int = 0) -> list[Transition]:
    """Add synthetic transitions for each target action until its count
    reaches ratio x (majority action count). Real transitions pass through
    untouched; synthetic rows split evenly between the two generators and
    carry their provenance tag. The conditioning context (s, a, r, d) of each
    synthetic row is resampled jointly from a real transition with the same
    action; only s' is generated."""
    if not 0.0 < ratio <= 1.0:
        raise ValueError("ratio must be in (0, 1]")
    counts = Counter(t.a for t in transitions)
    if not counts:
        raise ValueError("no transitions")
    for a in target_actions:
        if counts[a] == 0:
            raise ValueError(f"target action {a} absent from data")
    majority = max(counts.values())
    goal = math.ceil(ratio * majority)
    rng = np.random.default_rng(seed)
    out = list(transitions)
    for a in target_actions:
        need = goal - counts[a]
        if need <= 0:
            continue
        pool = [t for t in transitions if t.a == a]
        bases = [pool[j] for j in rng.integers(len(pool), size=need)]
        n_vae = (need + 1) // 2
        vae_next = vae_sample(
            vae, a, np.array([b.r for b in bases[:n_vae]]),
            np.array([float(b.d) for b in bases[:n_vae]]),
            n_vae, seed=int(rng.integers(2 ** 31)))
        diff_next = diffusion_sample(diffusion, max(need - n_vae, 1),
                                     seed=int(rng.integers(2 ** 31)))
        synth = [(b, row, "vae") for b, row in zip(bases[:n_vae], vae_next)]
        synth += [(b, row, "diffusion")
                  for b, row in zip(bases[n_vae:], diff_next)]
        for base, s_next, tag in synth:
            out.append(Transition(s=base.s.copy(), a=a, r=base.r,
                                  s_next=s_next, d=base.d,
                                  patient_id=base.patient_id,
                                  t_index=base.t_index, provenance=tag))
    return out
