"""Named-tensor checkpoint format.

A checkpoint is a JSON document: format version, optional metadata, and a
list of tensors as (name, shape, flat float64 values). Python's float repr
is shortest-round-trip, so load -> predict is bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


def save_tensors(path, tensors: dict[str, np.ndarray], meta: dict | None = None):
    doc = {
        "format_version": FORMAT_VERSION,
        "meta": meta or {},
        "tensors": [
            {
                "name": name,
                "shape": list(np.asarray(arr).shape),
                "values": np.asarray(arr, dtype=np.float64).ravel().tolist(),
            }
            for name, arr in tensors.items()
        ],
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_tensors(path) -> tuple[dict[str, np.ndarray], dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format: {doc.get('format_version')}")
    tensors = {
        t["name"]: np.asarray(t["values"], dtype=np.float64).reshape(t["shape"])
        for t in doc["tensors"]
    }
    return tensors, doc.get("meta", {})
