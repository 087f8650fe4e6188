"""Trained-model snapshots and their binary file format.

Layout (all integers and floats little-endian)::

    5 bytes   magic b"DSCNN"
    1 byte    format version (1)
    uint32    header length H
    H bytes   UTF-8 JSON header: config, layer list with shapes, class names,
              per-epoch history
    float64[] learnable parameters, layer order, C order per tensor
    float64[] batch-norm running statistics, layer order
    uint32    epoch index (1-based)
    float64   validation loss

A file whose length does not match the header exactly is rejected.
"""
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..exceptions import BadFormat, VersionMismatch
from .network import Network, NetworkConfig

MAGIC = b"DSCNN"
FORMAT_VERSION = 1
_F64 = np.dtype("<f8")


@dataclass
class Checkpoint:
    config: NetworkConfig
    params: dict
    states: dict
    epoch: int
    val_loss: float
    class_names: list = field(default_factory=list)
    history: list = field(default_factory=list)

    @classmethod
    def from_network(cls, net, epoch, val_loss, class_names=(), history=()):
        return cls(
            config=NetworkConfig(**net.cfg.to_dict()),
            params={name: arr.copy() for name, arr in net.parameters()},
            states={name: arr.copy() for name, arr in net.states()},
            epoch=int(epoch),
            val_loss=float(val_loss),
            class_names=list(class_names),
            history=[dict(h) for h in history],
        )

    def network(self):
        """A fresh ``Network`` carrying this checkpoint's weights."""
        net = Network(NetworkConfig(**self.config.to_dict()))
        for name, arr in net.parameters():
            arr[...] = self.params[name]
        for name, arr in net.states():
            arr[...] = self.states[name]
        return net


def _header(ckpt):
    net_layout = Network(NetworkConfig(**ckpt.config.to_dict())).summary()
    return {
        "config": ckpt.config.to_dict(),
        "layers": net_layout,
        "class_names": ckpt.class_names,
        "history": ckpt.history,
    }


def to_bytes(ckpt):
    header = json.dumps(_header(ckpt), sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, bytes([FORMAT_VERSION]), struct.pack("<I", len(header)), header]
    for arr in ckpt.params.values():
        parts.append(np.ascontiguousarray(arr, dtype=_F64).tobytes())
    for arr in ckpt.states.values():
        parts.append(np.ascontiguousarray(arr, dtype=_F64).tobytes())
    parts.append(struct.pack("<Id", ckpt.epoch, ckpt.val_loss))
    return b"".join(parts)


def from_bytes(data):
    if len(data) < 10 or data[:5] != MAGIC:
        raise BadFormat("not a checkpoint file (bad magic)")
    if data[5] != FORMAT_VERSION:
        raise VersionMismatch(f"checkpoint format version {data[5]}, expected {FORMAT_VERSION}")
    (hlen,) = struct.unpack_from("<I", data, 6)
    pos = 10 + hlen
    if pos > len(data):
        raise BadFormat("checkpoint header truncated")
    try:
        header = json.loads(data[10:pos].decode("utf-8"))
        config = NetworkConfig.from_dict(header["config"])
        config.validate()
    except (ValueError, KeyError, TypeError) as exc:
        raise BadFormat(f"unreadable checkpoint header: {exc}") from exc

    template = Network(config)
    if header.get("layers") != template.summary():
        raise BadFormat("layer list in header does not match the configured network")
    expected = pos + 8 * (sum(a.size for _, a in template.parameters())
                          + sum(a.size for _, a in template.states())) + 12
    if len(data) != expected:
        raise BadFormat(f"checkpoint is {len(data)} bytes, expected {expected}")

    def read_blocks(named):
        nonlocal pos
        out = {}
        for name, arr in named:
            n = arr.size
            out[name] = np.frombuffer(data, dtype=_F64, count=n, offset=pos).reshape(arr.shape).copy()
            pos += 8 * n
        return out

    params = read_blocks(template.parameters())
    states = read_blocks(template.states())
    epoch, val_loss = struct.unpack_from("<Id", data, pos)
    return Checkpoint(config=config, params=params, states=states, epoch=epoch,
                      val_loss=val_loss, class_names=header.get("class_names", []),
                      history=header.get("history", []))


def save_checkpoint(ckpt, path):
    Path(path).write_bytes(to_bytes(ckpt))


def load_checkpoint(path):
    return from_bytes(Path(path).read_bytes())
