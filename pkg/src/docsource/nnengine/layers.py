"""Layer primitives with hand-written backward passes.

Tensors are float64 in NHWC layout. Each primitive is a pair of pure functions
(``*_forward`` / ``*_backward``); the small layer classes at the bottom hold
parameters, gradients and the forward cache used by ``Network``.
"""
import numpy as np

from ..exceptions import DegenerateBatch, ShapeMismatch

BN_EPS = 1e-5
BN_MOMENTUM = 0.99
LOG_FLOOR = 1e-12


# ------------------------------------------------------------------ conv

def _im2col(x, kh, kw):
    """Rows of flattened (i, j, c)-ordered windows, one row per output pixel."""
    n, h, w, c = x.shape
    ho, wo = h - kh + 1, w - kw + 1
    cols = np.empty((n, ho, wo, kh * kw * c))
    for i in range(kh):
        for j in range(kw):
            k = (i * kw + j) * c
            cols[..., k:k + c] = x[:, i:i + ho, j:j + wo, :]
    return cols.reshape(n * ho * wo, kh * kw * c), (n, ho, wo)


def _check_conv(x, weights):
    if x.ndim != 4 or weights.ndim != 4:
        raise ShapeMismatch(f"conv expects 4-d input and kernel, got {x.shape}, {weights.shape}")
    if x.shape[3] != weights.shape[2]:
        raise ShapeMismatch(f"input has {x.shape[3]} channels, kernel expects {weights.shape[2]}")
    if x.shape[1] < weights.shape[0] or x.shape[2] < weights.shape[1]:
        raise ShapeMismatch(f"input {x.shape[1:3]} smaller than kernel {weights.shape[:2]}")


def conv2d_forward(x, weights, bias, return_cols=False):
    """Valid, stride-1 convolution (cross-correlation).

    ``y[n, h, w, f] = bias[f] + sum_{i, j, c} x[n, h+i, w+j, c] * weights[i, j, c, f]``
    """
    _check_conv(x, weights)
    kh, kw, _, f = weights.shape
    cols, (n, ho, wo) = _im2col(x, kh, kw)
    y = (cols @ weights.reshape(-1, f) + bias).reshape(n, ho, wo, f)
    return (y, cols) if return_cols else y


def conv2d_backward(x, weights, dy, need_dx=True, cols=None):
    """Gradients ``(dx, dweights, dbias)`` of a scalar loss given ``dy``.

    ``cols`` may carry the window matrix saved by the forward pass.
    """
    _check_conv(x, weights)
    kh, kw, c, f = weights.shape
    n, ho, wo = x.shape[0], x.shape[1] - kh + 1, x.shape[2] - kw + 1
    if dy.shape != (n, ho, wo, f):
        raise ShapeMismatch(f"dy shape {dy.shape} != {(n, ho, wo, f)}")
    if cols is None:
        cols, _ = _im2col(x, kh, kw)
    dy2 = dy.reshape(-1, f)
    dw = (cols.T @ dy2).reshape(weights.shape)
    db = dy2.sum(axis=0)
    dx = None
    if need_dx:
        dcols = (dy2 @ weights.reshape(-1, f).T).reshape(n, ho, wo, kh * kw * c)
        dx = np.zeros_like(x)
        for i in range(kh):
            for j in range(kw):
                k = (i * kw + j) * c
                dx[:, i:i + ho, j:j + wo, :] += dcols[..., k:k + c]
    return dx, dw, db


# ------------------------------------------------------------ batch norm

def batchnorm_forward(x, gamma, beta, mode, running_mean=None, running_var=None,
                      momentum=BN_MOMENTUM, eps=BN_EPS):
    """Per-channel normalisation over every axis but the last.

    In ``"train"`` mode the batch statistics are used and the running arrays,
    when given, are updated in place. ``"infer"`` uses the running statistics.
    Returns ``(y, cache)``; the cache is None in infer mode.
    """
    axes = tuple(range(x.ndim - 1))
    if mode == "train":
        if x.shape[0] < 2:
            raise DegenerateBatch("batch normalisation in train mode needs batch >= 2")
        mu = x.mean(axis=axes)
        var = x.var(axis=axes)
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = (x - mu) * inv_std
        if running_mean is not None:
            running_mean *= momentum
            running_mean += (1.0 - momentum) * mu
            running_var *= momentum
            running_var += (1.0 - momentum) * var
        return gamma * xhat + beta, (xhat, inv_std, gamma)
    if mode == "infer":
        inv_std = 1.0 / np.sqrt(running_var + eps)
        return (x - running_mean) * (inv_std * gamma) + beta, None
    raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")


def batchnorm_backward(dy, cache):
    """Train-mode gradients ``(dx, dgamma, dbeta)``."""
    xhat, inv_std, gamma = cache
    axes = tuple(range(dy.ndim - 1))
    m = dy.size // dy.shape[-1]
    dbeta = dy.sum(axis=axes)
    dgamma = (dy * xhat).sum(axis=axes)
    dx = (gamma * inv_std / m) * (m * dy - dbeta - xhat * dgamma)
    return dx, dgamma, dbeta


# ------------------------------------------------------- relu / max pool

def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(x, dy):
    return dy * (x > 0)


def _pool_windows(x):
    n, h, w, c = x.shape
    ho, wo = h // 2, w // 2
    if ho < 1 or wo < 1:
        raise ShapeMismatch(f"max pool needs spatial dims >= 2, got {(h, w)}")
    win = x[:, :2 * ho, :2 * wo, :].reshape(n, ho, 2, wo, 2, c)
    # window order (0,0), (0,1), (1,0), (1,1)
    return win.transpose(0, 1, 3, 5, 2, 4).reshape(n, ho, wo, c, 4)


def maxpool2(x):
    """2x2 max pool, stride 2; odd trailing rows/cols are dropped."""
    _, h, w, _ = x.shape
    if h < 2 or w < 2:
        raise ShapeMismatch(f"max pool needs spatial dims >= 2, got {(h, w)}")
    ho, wo = 2 * (h // 2), 2 * (w // 2)
    top = np.maximum(x[:, 0:ho:2, 0:wo:2], x[:, 0:ho:2, 1:wo:2])
    return np.maximum(top, np.maximum(x[:, 1:ho:2, 0:wo:2], x[:, 1:ho:2, 1:wo:2]))


def maxpool2_backward(x, dy):
    """Route each gradient to the window's first maximal element."""
    n, h, w, c = x.shape
    ho, wo = h // 2, w // 2
    idx = _pool_windows(x).argmax(axis=-1)
    routed = np.zeros((n, ho, wo, c, 4))
    np.put_along_axis(routed, idx[..., None], dy[..., None], axis=-1)
    dx = np.zeros_like(x)
    dx[:, :2 * ho, :2 * wo, :] = (
        routed.reshape(n, ho, wo, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(n, 2 * ho, 2 * wo, c)
    )
    return dx


# ------------------------------------------------------------------ dense

def dense_forward(x, weights, bias):
    if x.ndim != 2 or x.shape[1] != weights.shape[0]:
        raise ShapeMismatch(f"dense input {x.shape} does not match weights {weights.shape}")
    return x @ weights + bias


def dense_backward(x, weights, dy):
    return dy @ weights.T, x.T @ dy, dy.sum(axis=0)


# -------------------------------------------------- softmax / cross-entropy

def softmax(logits):
    """Row-wise softmax with max subtraction; accepts a vector or a batch."""
    f = np.asarray(logits, dtype=np.float64)
    shifted = f - f.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(scores, dscores):
    return scores * (dscores - (dscores * scores).sum(axis=-1, keepdims=True))


def cross_entropy(scores, labels):
    """Mean negative log score of the true class (log floored at 1e-12)."""
    scores = np.atleast_2d(scores)
    labels = np.asarray(labels, dtype=np.int64)
    picked = scores[np.arange(len(labels)), labels]
    return float(np.mean(-np.log(np.maximum(picked, LOG_FLOOR))))


def softmax_cross_entropy_backward(scores, labels):
    """Gradient of the mean cross-entropy w.r.t. the pre-softmax logits."""
    grad = np.array(scores, dtype=np.float64, copy=True)
    grad[np.arange(len(labels)), labels] -= 1.0
    return grad / len(labels)


# ------------------------------------------------------------ layer objects

class Layer:
    kind = "layer"
    param_names = ()
    state_names = ()

    def __init__(self):
        self.params = {}
        self.grads = {}
        self.state = {}
        self._cache = None

    def summary(self):
        return {
            "type": self.kind,
            "params": [[name, list(self.params[name].shape)] for name in self.param_names],
            "state": [[name, list(self.state[name].shape)] for name in self.state_names],
        }


class Conv2D(Layer):
    kind = "conv2d"
    param_names = ("weights", "bias")

    def __init__(self, kernel, in_channels, filters, rng):
        super().__init__()
        std = np.sqrt(2.0 / (kernel * kernel * in_channels))
        self.params["weights"] = rng.normal(0.0, std, size=(kernel, kernel, in_channels, filters))
        self.params["bias"] = np.zeros(filters)
        self.need_dx = True

    def forward(self, x, train):
        if not train:
            self._cache = None
            return conv2d_forward(x, self.params["weights"], self.params["bias"])
        y, cols = conv2d_forward(x, self.params["weights"], self.params["bias"], return_cols=True)
        self._cache = (x, cols)
        return y

    def backward(self, dy):
        x, cols = self._cache
        dx, dw, db = conv2d_backward(x, self.params["weights"], dy, need_dx=self.need_dx, cols=cols)
        self.grads["weights"], self.grads["bias"] = dw, db
        return dx


class BatchNorm(Layer):
    kind = "batchnorm"
    param_names = ("gamma", "beta")
    state_names = ("running_mean", "running_var")

    def __init__(self, channels, momentum=BN_MOMENTUM):
        super().__init__()
        self.momentum = momentum
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        self.state["running_mean"] = np.zeros(channels)
        self.state["running_var"] = np.ones(channels)

    def forward(self, x, train):
        y, self._cache = batchnorm_forward(
            x, self.params["gamma"], self.params["beta"], "train" if train else "infer",
            self.state["running_mean"], self.state["running_var"], momentum=self.momentum)
        return y

    def backward(self, dy):
        dx, self.grads["gamma"], self.grads["beta"] = batchnorm_backward(dy, self._cache)
        return dx


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, train):
        self._cache = x if train else None
        return relu(x)

    def backward(self, dy):
        return relu_backward(self._cache, dy)


class MaxPool2(Layer):
    kind = "maxpool2"

    def forward(self, x, train):
        self._cache = x if train else None
        return maxpool2(x)

    def backward(self, dy):
        return maxpool2_backward(self._cache, dy)


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x, train):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._cache)


class Dense(Layer):
    kind = "dense"
    param_names = ("weights", "bias")

    def __init__(self, n_in, n_out, rng):
        super().__init__()
        self.params["weights"] = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, n_out))
        self.params["bias"] = np.zeros(n_out)

    def forward(self, x, train):
        self._cache = x if train else None
        return dense_forward(x, self.params["weights"], self.params["bias"])

    def backward(self, dy):
        dx, self.grads["weights"], self.grads["bias"] = dense_backward(
            self._cache, self.params["weights"], dy)
        return dx
