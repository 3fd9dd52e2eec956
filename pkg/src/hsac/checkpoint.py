"""Versioned single-file checkpoints (numpy ``.npz``).

Layout, format version 1:

``meta``                 JSON string: format, version, seed, episode, updates,
                         q, n, schedule, config (hyperparameters), rng states
``net/<name>/shapes``    int64 ``(layers, 2)`` array of ``(out, in)`` pairs
``net/<name>/params``    float64 flat parameters, order w0, b0, w1, b1, ...
``opt/<name>/m``, ``/v`` float64 flat Adam moments (absent before first step)
``opt/<name>/t``         int64 step counter
``log_alpha``            float64 ``(1,)``
``replay/<field>``       optional replay contents for exact resumption
"""

from __future__ import annotations

import json
import os
import zipfile
from pathlib import Path

import numpy as np

from .nn import Adam, MlpParams
from .sac import Learner, ReplayBuffer, SacConfig

FORMAT = "hsac-checkpoint"
VERSION = 1
NETS = ("actor", "critic1", "critic2", "target1", "target2")


class CheckpointCorrupt(RuntimeError):
    pass


def save_checkpoint(
    path: str | os.PathLike,
    learner: Learner,
    meta: dict,
    replay: ReplayBuffer | None = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays: dict[str, np.ndarray] = {}
    for name, net in learner.networks().items():
        arrays[f"net/{name}/shapes"] = np.array(net.shapes, dtype=np.int64)
        arrays[f"net/{name}/params"] = net.buffer.astype(np.float64)
    for name, opt in learner.optimizers().items():
        arrays[f"opt/{name}/t"] = np.array(opt.t, dtype=np.int64)
        if opt.m:
            arrays[f"opt/{name}/m"] = np.concatenate([m.ravel() for m in opt.m]).astype(np.float64)
            arrays[f"opt/{name}/v"] = np.concatenate([v.ravel() for v in opt.v]).astype(np.float64)
    arrays["log_alpha"] = learner.log_alpha_arr.astype(np.float64)
    if replay is not None:
        for key, val in replay.state_dict().items():
            arrays[f"replay/{key}"] = np.asarray(val)
    full_meta = {
        "format": FORMAT,
        "version": VERSION,
        "obs_dim": learner.obs_dim,
        "act_dim": learner.act_dim,
        "updates": learner.updates,
        "sac": learner.config.to_dict(),
        **meta,
    }
    arrays["meta"] = np.array(json.dumps(full_meta, sort_keys=True))
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        np.savez(fh, **arrays)
    os.replace(tmp, path)
    return path


def _load_npz(path: str | os.PathLike) -> dict[str, np.ndarray]:
    try:
        with np.load(path, allow_pickle=False) as data:
            return {k: data[k] for k in data.files}
    except (OSError, ValueError, zipfile.BadZipFile, EOFError) as exc:
        raise CheckpointCorrupt(f"cannot read checkpoint {path}: {exc}") from exc


def read_meta(path: str | os.PathLike) -> dict:
    return _parse_meta(_load_npz(path), path)


def _parse_meta(data: dict, path) -> dict:
    if "meta" not in data:
        raise CheckpointCorrupt(f"{path}: missing metadata")
    try:
        meta = json.loads(str(data["meta"]))
    except json.JSONDecodeError as exc:
        raise CheckpointCorrupt(f"{path}: bad metadata") from exc
    if meta.get("format") != FORMAT:
        raise CheckpointCorrupt(f"{path}: not an {FORMAT} file")
    if meta.get("version") != VERSION:
        raise CheckpointCorrupt(f"{path}: unsupported version {meta.get('version')}")
    return meta


def load_checkpoint(path: str | os.PathLike, with_replay: bool = False):
    """Returns ``(learner, meta, replay or None)``."""
    data = _load_npz(path)
    meta = _parse_meta(data, path)
    try:
        config = SacConfig.from_dict(meta["sac"])
        dtype = np.dtype(config.dtype)
        nets = {}
        for name in NETS:
            shapes = [tuple(int(v) for v in row) for row in data[f"net/{name}/shapes"]]
            vec = data[f"net/{name}/params"]
            if not np.all(np.isfinite(vec)):
                raise CheckpointCorrupt(f"{path}: non-finite parameters in {name}")
            nets[name] = MlpParams.from_flat(shapes, vec.astype(dtype))
        opts = {}
        for name in ("actor", "critic1", "critic2", "alpha"):
            opt = Adam(lr=getattr(config, "lr_alpha" if name == "alpha" else f"lr_{name.rstrip('12')}"))
            opt.t = int(data[f"opt/{name}/t"])
            if f"opt/{name}/m" in data:
                ref = np.array([0.0]) if name == "alpha" else nets[name].buffer
                opt.m = [data[f"opt/{name}/m"].astype(ref.dtype)]
                opt.v = [data[f"opt/{name}/v"].astype(ref.dtype)]
            opts[name] = opt
        learner = Learner(
            config=config,
            obs_dim=int(meta["obs_dim"]),
            act_dim=int(meta["act_dim"]),
            log_alpha=float(data["log_alpha"][0]),
            opt_actor=opts["actor"],
            opt_critic1=opts["critic1"],
            opt_critic2=opts["critic2"],
            opt_alpha=opts["alpha"],
            updates=int(meta["updates"]),
            **nets,
        )
    except KeyError as exc:
        raise CheckpointCorrupt(f"{path}: missing entry {exc}") from exc
    except ValueError as exc:
        raise CheckpointCorrupt(f"{path}: {exc}") from exc
    replay = None
    if with_replay and "replay/rew" in data:
        cap = int(meta.get("replay_capacity", config.capacity))
        replay = ReplayBuffer(cap, learner.obs_dim, learner.act_dim, dtype)
        replay.load_state_dict({k.split("/", 1)[1]: v for k, v in data.items() if k.startswith("replay/")})
    return learner, meta, replay
