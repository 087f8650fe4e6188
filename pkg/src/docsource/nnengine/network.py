"""Network configuration, the fixed layer stack, and parameter counting."""
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..exceptions import BadConfig, ShapeMismatch
from .layers import BatchNorm, Conv2D, Dense, Flatten, MaxPool2, ReLU, softmax


@dataclass
class NetworkConfig:
    patch_size: int = 18
    n_classes: int = 2
    conv_filters: int = 50
    kernel: int = 3
    dense_units: int = 256
    epochs: int = 100
    batch_size: int = 64
    lr: float = 0.001
    decay: float = 0.0005
    seed: int = 0
    val_fraction: float = 0.1
    bn_momentum: float = 0.99

    def feature_map_size(self):
        """Spatial side after three valid convs and the 2x2 pool."""
        return (self.patch_size - 3 * (self.kernel - 1)) // 2

    def validate(self):
        for name in ("patch_size", "n_classes", "conv_filters", "kernel", "dense_units",
                     "epochs", "batch_size"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise BadConfig(f"{name} must be a positive integer, got {value!r}")
        if self.n_classes < 2:
            raise BadConfig(f"need at least 2 classes, got {self.n_classes}")
        if self.feature_map_size() < 1:
            raise BadConfig(
                f"patch size {self.patch_size} too small: three {self.kernel}x{self.kernel} "
                "valid convolutions and a 2x2 pool must leave at least 1x1")
        if self.batch_size < 2:
            raise BadConfig("batch_size must be >= 2 for batch normalisation")
        if not 0.0 < self.val_fraction < 1.0:
            raise BadConfig(f"val_fraction must lie in (0, 1), got {self.val_fraction}")
        if not 0.0 <= self.bn_momentum < 1.0:
            raise BadConfig(f"bn_momentum must lie in [0, 1), got {self.bn_momentum}")
        if not self.lr > 0 or self.decay < 0:
            raise BadConfig("lr must be > 0 and decay >= 0")
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise BadConfig(f"unknown NetworkConfig keys: {sorted(unknown)}")
        return cls(**data)


class Network:
    """conv-BN | conv-BN-ReLU | conv-BN-ReLU-pool | flatten | dense-ReLU | dense | softmax.

    The first block has no ReLU.
    """

    def __init__(self, cfg):
        self.cfg = cfg.validate()
        rng = np.random.default_rng(cfg.seed)
        f, k = cfg.conv_filters, cfg.kernel
        side = cfg.feature_map_size()
        m = cfg.bn_momentum
        self.layers = [
            Conv2D(k, 1, f, rng), BatchNorm(f, m),
            Conv2D(k, f, f, rng), BatchNorm(f, m), ReLU(),
            Conv2D(k, f, f, rng), BatchNorm(f, m), ReLU(),
            MaxPool2(), Flatten(),
            Dense(side * side * f, cfg.dense_units, rng), ReLU(),
            Dense(cfg.dense_units, cfg.n_classes, rng),
        ]
        # the input never needs a gradient
        self.layers[0].need_dx = False

    def _as_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        p = self.cfg.patch_size
        if x.ndim == 2:
            x = x[None]
        if x.ndim == 3:
            x = x[..., None]
        if x.shape[1:] != (p, p, 1):
            raise ShapeMismatch(f"expected patches of shape ({p}, {p}), got {x.shape[1:3]}")
        return x

    def forward(self, x, train=False):
        """Logits (pre-softmax) for a batch of patches."""
        out = self._as_input(x)
        for layer in self.layers:
            out = layer.forward(out, train)
        return out

    def backward(self, dlogits):
        grad = dlogits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)

    def predict_proba(self, x, batch_size=32):
        """Softmax scores in inference mode.

        Every chunk is zero-padded to exactly ``batch_size`` rows so each patch
        goes through identically shaped matrix products; a patch's scores then do
        not depend on what else is in the batch.
        """
        x = self._as_input(x)
        out = np.empty((len(x), self.cfg.n_classes))
        chunk = np.zeros((batch_size,) + x.shape[1:])
        for start in range(0, len(x), batch_size):
            part = x[start:start + batch_size]
            chunk[:len(part)] = part
            chunk[len(part):] = 0.0
            out[start:start + len(part)] = softmax(self.forward(chunk))[:len(part)]
        return out

    def parameters(self):
        """(name, array) for every learnable tensor, in layer order."""
        return [(f"{i}.{name}", layer.params[name])
                for i, layer in enumerate(self.layers) for name in layer.param_names]

    def gradients(self):
        return [layer.grads[name] for layer in self.layers for name in layer.param_names]

    def states(self):
        """(name, array) for every non-learnable tensor (BN running stats)."""
        return [(f"{i}.{name}", layer.state[name])
                for i, layer in enumerate(self.layers) for name in layer.state_names]

    def summary(self):
        return [layer.summary() for layer in self.layers] + [
            {"type": "softmax", "params": [], "state": []}]


def build_network(cfg):
    return Network(cfg)


def param_count(net, learnable_only=True):
    total = sum(arr.size for _, arr in net.parameters())
    if not learnable_only:
        total += sum(arr.size for _, arr in net.states())
    return int(total)
