"""Finite-difference gradient checks, one function per layer type.

Each check draws a random instance from ``rng``, compares every analytic
gradient (input and parameters) against central differences, and returns the
largest relative error seen.
"""
import numpy as np

from docsource.nnengine import (
    batchnorm_backward,
    batchnorm_forward,
    conv2d_backward,
    conv2d_forward,
    cross_entropy,
    dense_backward,
    dense_forward,
    maxpool2,
    maxpool2_backward,
    relu,
    relu_backward,
    softmax,
    softmax_cross_entropy_backward,
)
from tests.oracles import numeric_grad, rel_error

H = 1e-5


def check_conv(rng):
    n, h, w = rng.integers(1, 3), rng.integers(4, 7), rng.integers(4, 7)
    c, f, k = rng.integers(1, 4), rng.integers(1, 4), rng.integers(1, 4)
    x = rng.normal(size=(n, h, w, c))
    wt = rng.normal(size=(k, k, c, f))
    b = rng.normal(size=f)
    r = rng.normal(size=(n, h - k + 1, w - k + 1, f))

    def loss():
        return float(np.sum(conv2d_forward(x, wt, b) * r))

    dx, dw, db = conv2d_backward(x, wt, r)
    return max(rel_error(dx, numeric_grad(loss, x, H)),
               rel_error(dw, numeric_grad(loss, wt, H)),
               rel_error(db, numeric_grad(loss, b, H)))


def check_batchnorm(rng):
    n, h, w, c = rng.integers(2, 5), rng.integers(1, 4), rng.integers(1, 4), rng.integers(1, 4)
    x = rng.normal(size=(n, h, w, c)) * rng.uniform(0.5, 3) + rng.normal()
    gamma = rng.normal(size=c)
    beta = rng.normal(size=c)
    r = rng.normal(size=x.shape)

    def loss():
        return float(np.sum(batchnorm_forward(x, gamma, beta, "train")[0] * r))

    _, cache = batchnorm_forward(x, gamma, beta, "train")
    dx, dg, db = batchnorm_backward(r, cache)
    return max(rel_error(dx, numeric_grad(loss, x, H)),
               rel_error(dg, numeric_grad(loss, gamma, H)),
               rel_error(db, numeric_grad(loss, beta, H)))


def check_relu(rng):
    x = rng.normal(size=(rng.integers(1, 4), 3, 3, 2))
    # keep inputs away from the kink so differences are exact
    x += np.sign(x) * 0.01
    r = rng.normal(size=x.shape)

    def loss():
        return float(np.sum(relu(x) * r))

    return rel_error(relu_backward(x, r), numeric_grad(loss, x, H))


def check_maxpool(rng):
    n, h, w, c = rng.integers(1, 3), rng.integers(2, 7), rng.integers(2, 7), rng.integers(1, 4)
    # distinct values at least 1e-2 apart: no window has a near-tie
    x = rng.permutation(n * h * w * c).reshape(n, h, w, c) * 1e-2 + rng.normal()
    r = rng.normal(size=(n, h // 2, w // 2, c))

    def loss():
        return float(np.sum(maxpool2(x) * r))

    return rel_error(maxpool2_backward(x, r), numeric_grad(loss, x, H))


def check_dense(rng):
    n, i, o = rng.integers(1, 5), rng.integers(1, 12), rng.integers(1, 8)
    x = rng.normal(size=(n, i))
    wt = rng.normal(size=(i, o))
    b = rng.normal(size=o)
    r = rng.normal(size=(n, o))

    def loss():
        return float(np.sum(dense_forward(x, wt, b) * r))

    dx, dw, db = dense_backward(x, wt, r)
    return max(rel_error(dx, numeric_grad(loss, x, H)),
               rel_error(dw, numeric_grad(loss, wt, H)),
               rel_error(db, numeric_grad(loss, b, H)))


def check_softmax_ce(rng):
    n, s = rng.integers(1, 6), rng.integers(2, 8)
    logits = rng.normal(size=(n, s)) * rng.uniform(0.5, 4)
    labels = rng.integers(0, s, size=n)

    def loss():
        return cross_entropy(softmax(logits), labels)

    analytic = softmax_cross_entropy_backward(softmax(logits), labels)
    return rel_error(analytic, numeric_grad(loss, logits, H))


CHECKS = {
    "conv": check_conv,
    "batchnorm": check_batchnorm,
    "relu": check_relu,
    "maxpool": check_maxpool,
    "dense": check_dense,
    "softmax_ce": check_softmax_ce,
}
