"""Self-describing ``.npz`` checkpoints: a JSON header plus one array per parameter."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .network import LayerSpec, Network

FORMAT = "dropout-mi-checkpoint"
VERSION = 1


def save_checkpoint(net: Network, path, metadata: dict | None = None) -> Path:
    path = Path(path)
    header = {
        "format": FORMAT,
        "version": VERSION,
        "seed": net.seed,
        "layers": [s.to_dict() for s in net.specs],
        "shapes": {f"{i}.{k}": list(v.shape) for i, p in enumerate(net.params) for k, v in p.items()},
        "metadata": metadata or {},
    }
    arrays = {f"{i}.{k}": v for i, p in enumerate(net.params) for k, v in p.items()}
    with open(path, "wb") as fh:
        np.savez(fh, __header__=np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8),
                 **arrays)
    return path


def load_checkpoint(path) -> tuple[Network, dict]:
    with np.load(path) as data:
        header = json.loads(data["__header__"].tobytes().decode())
        if header.get("format") != FORMAT:
            raise ValueError(f"{path}: not a {FORMAT} file")
        if header.get("version") != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
        specs = [LayerSpec(**d) for d in header["layers"]]
        params: list[dict] = [dict() for _ in specs]
        for key, shape in header["shapes"].items():
            i, name = key.split(".", 1)
            arr = data[key]
            if list(arr.shape) != shape:
                raise ValueError(f"{path}: array {key} has shape {arr.shape}, header says {shape}")
            params[int(i)][name] = arr.copy()
    return Network(specs, params, header["seed"]), header["metadata"]
