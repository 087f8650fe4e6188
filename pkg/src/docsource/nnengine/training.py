"""Mini-batch training with best-validation-epoch selection, and inference."""
import logging
from pathlib import Path

import numpy as np

from ..exceptions import EmptyDataset, ShapeMismatch
from .checkpoint import Checkpoint, save_checkpoint
from .layers import cross_entropy, softmax, softmax_cross_entropy_backward
from .network import Network
from .optim import AdamState, adam_step, decayed_lr

log = logging.getLogger(__name__)


def stratified_split(labels, val_fraction, seed):
    """Index arrays ``(train_idx, val_idx)`` holding out ``val_fraction`` per class.

    Each class with at least two samples contributes ``max(1, round(f * n))``
    validation samples; singleton classes stay in training.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train_idx, val_idx = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        n_val = 0 if len(idx) < 2 else min(len(idx) - 1, max(1, int(round(val_fraction * len(idx)))))
        val_idx.append(idx[:n_val])
        train_idx.append(idx[n_val:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(val_idx))


def _batches(order, batch_size):
    chunks = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    # a trailing batch of one cannot be batch-normalised; fold it into the previous one
    if len(chunks) > 1 and len(chunks[-1]) == 1:
        chunks[-2] = np.concatenate([chunks[-2], chunks.pop()])
    return chunks


def _check_set(x, y, cfg, what):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(x) == 0:
        raise EmptyDataset(f"{what} set is empty")
    p = cfg.patch_size
    if x.shape[1:] != (p, p):
        raise ShapeMismatch(f"{what} patches have shape {x.shape[1:]}, expected {(p, p)}")
    if len(y) != len(x):
        raise ShapeMismatch(f"{what}: {len(x)} patches but {len(y)} labels")
    if y.min() < 0 or y.max() >= cfg.n_classes:
        raise ValueError(f"{what} labels must lie in [0, {cfg.n_classes})")
    return x, y


def train(x_train, y_train, x_val, y_val, cfg, class_names=(), checkpoint_dir=None):
    """Train for ``cfg.epochs`` epochs; return the lowest-validation-loss checkpoint.

    Validation loss is evaluated in inference mode after every epoch; the earliest
    epoch wins ties. With ``checkpoint_dir`` every epoch's snapshot is written as
    ``epoch_NNN.ckpt``.
    """
    cfg.validate()
    x_train, y_train = _check_set(x_train, y_train, cfg, "training")
    x_val, y_val = _check_set(x_val, y_val, cfg, "validation")

    net = Network(cfg)
    opt = AdamState([p for _, p in net.parameters()])
    params = [p for _, p in net.parameters()]
    rng = np.random.default_rng([cfg.seed, 1])
    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)

    best, history = None, []
    for epoch in range(1, cfg.epochs + 1):
        losses, counts = [], []
        for batch in _batches(rng.permutation(len(x_train)), cfg.batch_size):
            scores = softmax(net.forward(x_train[batch], train=True))
            losses.append(cross_entropy(scores, y_train[batch]))
            counts.append(len(batch))
            net.backward(softmax_cross_entropy_backward(scores, y_train[batch]))
            adam_step(params, net.gradients(), opt, decayed_lr(cfg.lr, cfg.decay, opt.t))
        train_loss = float(np.dot(losses, counts) / np.sum(counts))
        val_loss = cross_entropy(net.predict_proba(x_val), y_val)
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        log.info("epoch %d/%d train_loss=%.5f val_loss=%.5f", epoch, cfg.epochs, train_loss, val_loss)

        if best is None or val_loss < best.val_loss or checkpoint_dir is not None:
            snap = Checkpoint.from_network(net, epoch, val_loss, class_names)
            if checkpoint_dir is not None:
                save_checkpoint(snap, checkpoint_dir / f"epoch_{epoch:03d}.ckpt")
            if best is None or val_loss < best.val_loss:
                best = snap
    best.history = history
    return best


def predict(ckpt, patches, batch_size=32):
    """Per-patch ``(labels, scores)`` from a checkpoint, in inference mode."""
    net = ckpt if isinstance(ckpt, Network) else ckpt.network()
    scores = net.predict_proba(patches, batch_size=batch_size)
    return scores.argmax(axis=1), scores
