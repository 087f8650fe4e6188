"""scikit-learn compatible wrappers around the letter extractor and the CNN."""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .classify import majority_vote
from .exceptions import EmptyDataset, NoComponents
from .nnengine import NetworkConfig, predict, stratified_split, train
from .segmentation import extract_patches


class LetterPatchExtractor(TransformerMixin, BaseEstimator):
    """Page images -> list of ``(n_i, p, p)`` letter patch arrays (stateless)."""

    def __init__(self, patch_size=18):
        self.patch_size = patch_size

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return [extract_patches(img, self.patch_size)[0] for img in X]


def _as_patches(X, patch_size=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        side = int(round(np.sqrt(X.shape[1])))
        if side * side != X.shape[1]:
            raise ValueError(f"flattened patches of length {X.shape[1]} are not square")
        X = X.reshape(len(X), side, side)
    if X.ndim != 3 or X.shape[1] != X.shape[2]:
        raise ValueError(f"expected patches shaped (n, p, p), got {X.shape}")
    if patch_size is not None and X.shape[1] != patch_size:
        raise ValueError(f"patch size {X.shape[1]} != configured {patch_size}")
    if not np.all(np.isfinite(X)):
        raise ValueError("patches contain NaN or inf")
    return X


class CNNPatchClassifier(ClassifierMixin, BaseEstimator):
    """The letter CNN as an estimator on ``(n, p, p)`` (or ``(n, p*p)``) patches."""

    def __init__(self, patch_size=18, conv_filters=50, kernel=3, dense_units=256, epochs=100,
                 batch_size=64, lr=0.001, decay=0.0005, seed=0, val_fraction=0.1,
                 bn_momentum=0.99, checkpoint_dir=None):
        self.patch_size = patch_size
        self.conv_filters = conv_filters
        self.kernel = kernel
        self.dense_units = dense_units
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.decay = decay
        self.seed = seed
        self.val_fraction = val_fraction
        self.bn_momentum = bn_momentum
        self.checkpoint_dir = checkpoint_dir

    def _config(self, n_classes):
        params = self.get_params()
        params.pop("checkpoint_dir")
        return NetworkConfig(n_classes=n_classes, **params)

    def fit(self, X, y, class_names=None):
        X = _as_patches(X, self.patch_size)
        y = np.asarray(y)
        if len(X) == 0:
            raise EmptyDataset("no training patches")
        if len(y) != len(X):
            raise ValueError(f"{len(X)} patches but {len(y)} labels")
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes to train")
        cfg = self._config(len(self.classes_))
        tr, va = stratified_split(y_enc, self.val_fraction, self.seed)
        if len(va) == 0:
            raise EmptyDataset("validation hold-out is empty; add more patches")
        names = class_names if class_names is not None else [str(c) for c in self.classes_]
        self.checkpoint_ = train(X[tr], y_enc[tr], X[va], y_enc[va], cfg,
                                 class_names=list(names), checkpoint_dir=self.checkpoint_dir)
        self.n_features_in_ = self.patch_size * self.patch_size
        return self

    @classmethod
    def from_checkpoint(cls, ckpt):
        cfg = ckpt.config
        est = cls(**{k: v for k, v in cfg.to_dict().items() if k != "n_classes"})
        est.checkpoint_ = ckpt
        est.classes_ = np.arange(cfg.n_classes)
        est.n_features_in_ = cfg.patch_size * cfg.patch_size
        return est

    def predict_proba(self, X):
        check_is_fitted(self, "checkpoint_")
        return predict(self.checkpoint_, _as_patches(X, self.patch_size))[1]

    def predict(self, X):
        return self.classes_[self.predict_proba(X).argmax(axis=1)]


class PageSourceClassifier(ClassifierMixin, BaseEstimator):
    """Document-page classifier: letters -> CNN -> majority vote.

    ``fit`` takes page images and one device label per page. At most
    ``max_patches_per_page`` letters (a seeded random subset) are used from
    each training page; ``None`` keeps them all.
    """

    def __init__(self, patch_size=18, max_patches_per_page=None, epochs=100, batch_size=64,
                 lr=0.001, decay=0.0005, seed=0, val_fraction=0.1, bn_momentum=0.99):
        self.patch_size = patch_size
        self.max_patches_per_page = max_patches_per_page
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.decay = decay
        self.seed = seed
        self.val_fraction = val_fraction
        self.bn_momentum = bn_momentum

    def _cnn(self):
        params = self.get_params()
        params.pop("max_patches_per_page")
        return CNNPatchClassifier(**params)

    def fit_patches(self, page_patches, y, class_names=None):
        """Fit from pre-extracted per-page patch arrays."""
        rng = np.random.default_rng([self.seed, 0x5EED])
        xs, ys = [], []
        for patches, label in zip(page_patches, y):
            if self.max_patches_per_page is not None and len(patches) > self.max_patches_per_page:
                keep = np.sort(rng.choice(len(patches), self.max_patches_per_page, replace=False))
                patches = patches[keep]
            xs.append(patches)
            ys.extend([label] * len(patches))
        if not ys:
            raise EmptyDataset("training pages yielded no letter patches")
        self.cnn_ = self._cnn().fit(np.concatenate(xs), np.asarray(ys), class_names=class_names)
        self.classes_ = self.cnn_.classes_
        return self

    def fit(self, X, y, class_names=None):
        return self.fit_patches(LetterPatchExtractor(self.patch_size).transform(X), y, class_names)

    def verdicts_from_patches(self, page_patches):
        check_is_fitted(self, "cnn_")
        out = []
        for patches in page_patches:
            if len(patches) == 0:
                raise NoComponents("page yielded no letter patches")
            scores = self.cnn_.predict_proba(patches)
            out.append(majority_vote(scores.argmax(axis=1), scores, len(self.classes_)))
        return out

    def predict_patches(self, page_patches):
        return self.classes_[[v.label for v in self.verdicts_from_patches(page_patches)]]

    def predict(self, X):
        return self.predict_patches(LetterPatchExtractor(self.patch_size).transform(X))
