"""Page-level attribution by majority vote over per-letter CNN predictions."""
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import NoComponents, ShapeMismatch
from .nnengine import predict
from .segmentation import extract_patches


@dataclass
class PageVerdict:
    label: int
    histogram: list
    n_components: int
    tie_broken: bool
    score_sums: list = field(default_factory=list)
    class_name: str = None

    def to_dict(self):
        return asdict(self)


def majority_vote(labels, scores, n_classes):
    """Most-voted class; ties go to the larger summed score, then the lower index.

    Score sums use ``math.fsum`` so the verdict does not depend on the order in
    which components are listed.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise NoComponents("no component predictions to vote on")
    scores = np.asarray(scores, dtype=np.float64).reshape(len(labels), n_classes)
    hist = np.bincount(labels, minlength=n_classes)
    sums = [math.fsum(scores[:, c]) for c in range(n_classes)]
    tied = np.flatnonzero(hist == hist.max())
    if len(tied) == 1:
        winner = int(tied[0])
    else:
        # max() keeps the first (lowest-index) class among equal sums
        winner = int(max(tied, key=lambda c: (sums[c], -c)))
    return PageVerdict(label=winner, histogram=hist.tolist(), n_components=int(labels.size),
                       tie_broken=len(tied) > 1, score_sums=sums)


def predict_page(ckpt, img, p=None):
    """Classify one document image with a trained checkpoint."""
    p = ckpt.config.patch_size if p is None else p
    if p != ckpt.config.patch_size:
        raise ShapeMismatch(f"patch size {p} does not match the checkpoint's {ckpt.config.patch_size}")
    patches, _ = extract_patches(img, p)
    if len(patches) == 0:
        raise NoComponents("no letter-sized components survived filtering")
    labels, scores = predict(ckpt, patches)
    verdict = majority_vote(labels, scores, ckpt.config.n_classes)
    if ckpt.class_names:
        verdict.class_name = ckpt.class_names[verdict.label]
    return verdict
