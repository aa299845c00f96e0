"""Checkpoint format: a directory holding named weight arrays plus JSON metadata.

weights.npz        named, shape-tagged little-endian float arrays (state_dict)
optimizer.npz      optional optimizer state in the same encoding
meta.json          profile/config, charset hash, stage tag, step counter
"""

from __future__ import annotations

import json
import os

import numpy as np
import torch


def save_checkpoint(ckpt_dir: str, model: torch.nn.Module, meta: dict,
                    optimizer: torch.optim.Optimizer | None = None) -> str:
    os.makedirs(ckpt_dir, exist_ok=True)
    arrays = {name: tensor.detach().cpu().numpy()
              for name, tensor in model.state_dict().items()}
    np.savez(os.path.join(ckpt_dir, "weights.npz"), **arrays)
    if optimizer is not None:
        state = optimizer.state_dict()
        opt_arrays, opt_meta = {}, {"param_groups": state["param_groups"], "scalars": {}}
        for pid, slots in state["state"].items():
            for slot, value in slots.items():
                key = f"{pid}.{slot}"
                if isinstance(value, torch.Tensor):
                    opt_arrays[key] = value.detach().cpu().numpy()
                else:
                    opt_meta["scalars"][key] = value
        np.savez(os.path.join(ckpt_dir, "optimizer.npz"), **opt_arrays)
        with open(os.path.join(ckpt_dir, "optimizer.json"), "w", encoding="utf-8") as f:
            json.dump(opt_meta, f)
    with open(os.path.join(ckpt_dir, "meta.json"), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
    return ckpt_dir


def load_meta(ckpt_dir: str) -> dict:
    path = os.path.join(ckpt_dir, "meta.json")
    if not os.path.exists(path):
        raise FileNotFoundError(f"no meta.json in {ckpt_dir}")
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def load_checkpoint(ckpt_dir: str, model: torch.nn.Module,
                    optimizer: torch.optim.Optimizer | None = None,
                    expect_charset_hash: str | None = None) -> dict:
    """Restore weights (and optionally optimizer state); returns the metadata."""
    meta = load_meta(ckpt_dir)
    if expect_charset_hash is not None and meta.get("charset_hash") != expect_charset_hash:
        raise ValueError(f"charset hash mismatch: checkpoint has "
                         f"{meta.get('charset_hash')!r}, expected {expect_charset_hash!r}")
    with np.load(os.path.join(ckpt_dir, "weights.npz")) as arrays:
        ref_dtype = next(iter(model.state_dict().values())).dtype
        state = {name: torch.from_numpy(arrays[name]).to(ref_dtype) for name in arrays.files}
    model.load_state_dict(state)
    if optimizer is not None:
        opt_npz = os.path.join(ckpt_dir, "optimizer.npz")
        if not os.path.exists(opt_npz):
            raise FileNotFoundError(f"checkpoint {ckpt_dir} has no optimizer state")
        with open(os.path.join(ckpt_dir, "optimizer.json"), encoding="utf-8") as f:
            opt_meta = json.load(f)
        opt_state: dict = {}
        with np.load(opt_npz) as arrays:
            for key in arrays.files:
                pid, slot = key.split(".", 1)
                opt_state.setdefault(int(pid), {})[slot] = torch.from_numpy(arrays[key].copy())
        for key, value in opt_meta["scalars"].items():
            pid, slot = key.split(".", 1)
            opt_state.setdefault(int(pid), {})[slot] = value
        optimizer.load_state_dict({"state": opt_state,
                                   "param_groups": opt_meta["param_groups"]})
    return meta
