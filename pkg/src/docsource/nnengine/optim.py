"""Adam with a time-based learning-rate decay."""
import numpy as np

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


class AdamState:
    """First/second moment estimates and the global update counter."""

    def __init__(self, params):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0


def decayed_lr(lr0, decay, t):
    """Learning rate after ``t`` updates: ``lr0 / (1 + decay * t)``."""
    return lr0 / (1.0 + decay * t)


def adam_step(params, grads, state, lr_t):
    """One bias-corrected Adam update, applied to ``params`` in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads and optimizer state disagree in length")
    state.t += 1
    t = state.t
    c1 = 1.0 - BETA1 ** t
    c2 = 1.0 - BETA2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= BETA1
        m += (1.0 - BETA1) * g
        v *= BETA2
        v += (1.0 - BETA2) * g * g
        p -= lr_t * (m / c1) / (np.sqrt(v / c2) + EPSILON)
    return params, state
