"""Experimental protocol: page splits, per-font training/evaluation, reports.

For every C(n_pages, k_train) split of a font's pages, a model is trained on
the letters of the train pages of every device and each remaining page is
attributed by majority vote. Accuracy is page-level.
"""
import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations
from pathlib import Path

import numpy as np

from .estimators import PageSourceClassifier
from .exceptions import BadSplitSpec, EmptyDataset, LabelOutOfRange, ManifestError
from .imagecore import load_image
from .nnengine import NetworkConfig
from .segmentation import extract_patches

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1


# ---------------------------------------------------------------- manifest

@dataclass
class Manifest:
    root: Path
    fonts: list
    devices: list
    pages: dict  # device id -> font -> list of absolute paths

    def page_paths(self, device, font):
        try:
            return self.pages[device][font]
        except KeyError:
            raise ManifestError(f"manifest has no pages for device {device!r}, font {font!r}") from None


def parse_manifest(data, root):
    root = Path(root)
    if not isinstance(data, dict):
        raise ManifestError("manifest must be a JSON object")
    if data.get("version") != MANIFEST_VERSION:
        raise ManifestError(f"unsupported manifest version {data.get('version')!r}")
    try:
        fonts = list(data["fonts"])
        devices, pages = [], {}
        for dev in data["devices"]:
            dev_id = str(dev["id"])
            if dev_id in pages:
                raise ManifestError(f"duplicate device id {dev_id!r}")
            devices.append(dev_id)
            pages[dev_id] = {}
            for font, paths in dev["pages"].items():
                if font not in fonts:
                    raise ManifestError(f"device {dev_id!r} lists undeclared font {font!r}")
                pages[dev_id][font] = [root / p for p in paths]
    except (KeyError, TypeError, AttributeError) as exc:
        raise ManifestError(f"malformed manifest: {exc!r}") from exc
    for dev_id, by_font in pages.items():
        for font, paths in by_font.items():
            for p in paths:
                if not p.is_file():
                    raise ManifestError(f"missing image for {dev_id}/{font}: {p}")
    return Manifest(root=root, fonts=fonts, devices=devices, pages=pages)


def load_manifest(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    return parse_manifest(data, path.parent)


# ------------------------------------------------------------------ splits

@dataclass(frozen=True)
class Split:
    train: tuple
    test: tuple


def enumerate_splits(n_pages, k_train):
    """All ``C(n_pages, k_train)`` train/test page partitions, lexicographic."""
    if not (isinstance(n_pages, (int, np.integer)) and isinstance(k_train, (int, np.integer))):
        raise BadSplitSpec("n_pages and k_train must be integers")
    if not 1 <= k_train < n_pages:
        raise BadSplitSpec(f"need 1 <= k_train < n_pages, got k_train={k_train}, n_pages={n_pages}")
    pages = range(n_pages)
    return [Split(train=tr, test=tuple(i for i in pages if i not in tr))
            for tr in combinations(pages, k_train)]


def confusion_matrix(truth, predicted, n_classes):
    """Row-normalised confusion matrix in percent; empty rows stay zero."""
    truth = np.asarray(truth, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if truth.shape != predicted.shape:
        raise ValueError(f"{truth.size} truth labels but {predicted.size} predictions")
    for arr in (truth, predicted):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise LabelOutOfRange(f"labels must lie in [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes))
    np.add.at(counts, (truth, predicted), 1.0)
    totals = counts.sum(axis=1, keepdims=True)
    return np.divide(100.0 * counts, totals, out=np.zeros_like(counts), where=totals > 0)


# ------------------------------------------------------------------ report

@dataclass
class ExperimentReport:
    font: str
    devices: list
    n_pages: int
    k_train: int
    splits: list
    split_accuracies: list
    mean_accuracy: float
    confusion: list
    config: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def summary_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["font", "split_id", "accuracy_pct"])
        for i, acc in enumerate(self.split_accuracies):
            writer.writerow([self.font, i, f"{acc:.4f}"])
        return buf.getvalue()

    def confusion_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["true\\predicted"] + list(self.devices))
        for dev, row in zip(self.devices, self.confusion):
            writer.writerow([dev] + [f"{v:.4f}" for v in row])
        return buf.getvalue()


def write_report(report, out_dir, stem=None):
    """Write ``<stem>.json``, ``<stem>_summary.csv`` and ``<stem>_confusion.csv``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or f"report_{report.font}_p{report.config.get('patch_size', 'x')}"
    paths = {
        "json": out_dir / f"{stem}.json",
        "summary": out_dir / f"{stem}_summary.csv",
        "confusion": out_dir / f"{stem}_confusion.csv",
    }
    paths["json"].write_text(report.to_json())
    paths["summary"].write_text(report.summary_csv())
    paths["confusion"].write_text(report.confusion_csv())
    return paths


# -------------------------------------------------------------- experiment

def _workers():
    try:
        return max(0, int(os.environ.get("DOCSOURCE_THREADS", "0")))
    except ValueError:
        return 0


def _run_split(index, split, page_patches, n_devices, cfg, max_patches, device_ids):
    """Train on one split and return its record (a plain dict)."""
    seed = cfg.seed + index
    n_test = len(split.test)
    truth = [d for d in range(n_devices) for _ in range(n_test)]
    record = {"split_id": index, "seed": seed, "train": list(split.train), "test": list(split.test)}
    if n_devices == 1:
        # a single class needs no model: every page is attributed to it
        record.update(n_train_patches=0, truth=truth, predicted=list(truth), accuracy_pct=100.0)
        return record

    train_pages, labels = [], []
    for d in range(n_devices):
        for k in split.train:
            train_pages.append(page_patches[d][k])
            labels.append(d)
    clf = PageSourceClassifier(
        patch_size=cfg.patch_size, max_patches_per_page=max_patches, epochs=cfg.epochs,
        batch_size=cfg.batch_size, lr=cfg.lr, decay=cfg.decay, seed=seed,
        val_fraction=cfg.val_fraction, bn_momentum=cfg.bn_momentum)
    clf.fit_patches(train_pages, labels, class_names=device_ids)
    test_pages = [page_patches[d][k] for d in range(n_devices) for k in split.test]
    verdicts = clf.verdicts_from_patches(test_pages)
    predicted = [int(clf.classes_[v.label]) for v in verdicts]
    correct = sum(int(t == p) for t, p in zip(truth, predicted))
    record.update(
        n_train_patches=int(sum(min(len(p), max_patches or len(p)) for p in train_pages)),
        truth=truth, predicted=predicted, accuracy_pct=100.0 * correct / len(truth),
        best_epoch=clf.cnn_.checkpoint_.epoch, val_loss=clf.cnn_.checkpoint_.val_loss)
    log.info("split %d train=%s accuracy=%.2f%%", index, split.train, record["accuracy_pct"])
    return record


def extract_page_patches(manifest, devices, font, patch_size):
    """Letter patches for every page of ``font``: ``[device][page] -> (n, p, p)``."""
    out = []
    for dev in devices:
        per_page = []
        for path in manifest.page_paths(dev, font):
            patches, _ = extract_patches(load_image(path), patch_size)
            per_page.append(patches)
        out.append(per_page)
    return out


def run_experiment(manifest, devices, font, cfg, k_train=2, max_train_patches_per_page=None,
                   page_patches=None):
    """Run every split for one font and device subset.

    ``cfg`` is a NetworkConfig; its ``n_classes`` is overridden by the subset
    size and its ``seed`` offsets the per-split seeds (seed + split index).
    """
    devices = list(devices) if devices else list(manifest.devices)
    unknown = [d for d in devices if d not in manifest.pages]
    if unknown:
        raise ManifestError(f"devices not in manifest: {unknown}")
    if font not in manifest.fonts:
        raise ManifestError(f"font {font!r} not in manifest fonts {manifest.fonts}")
    counts = {len(manifest.page_paths(d, font)) for d in devices}
    if len(counts) != 1:
        raise ManifestError(f"unequal page counts across devices for font {font!r}: {sorted(counts)}")
    n_pages = counts.pop()
    if n_pages < 2:
        raise ManifestError(f"need at least 2 pages per device for font {font!r}, have {n_pages}")
    splits = enumerate_splits(n_pages, k_train)
    n_dev = len(devices)
    cfg = replace(cfg, n_classes=max(n_dev, 2))

    if page_patches is None:
        page_patches = extract_page_patches(manifest, devices, font, cfg.patch_size)
    for d, per_page in enumerate(page_patches):
        for k, patches in enumerate(per_page):
            if len(patches) == 0:
                raise EmptyDataset(f"{devices[d]}/{font} page {k} yielded no letters")

    args = [(i, s, page_patches, n_dev, cfg, max_train_patches_per_page, devices)
            for i, s in enumerate(splits)]
    workers = _workers()
    if workers > 1 and len(splits) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_split, *zip(*args)))
    else:
        records = [_run_split(*a) for a in args]

    accs = [r["accuracy_pct"] for r in records]
    conf = np.mean([confusion_matrix(r["truth"], r["predicted"], n_dev) for r in records], axis=0)
    config = cfg.to_dict()
    config.update(n_classes=n_dev, k_train=k_train,
                  max_train_patches_per_page=max_train_patches_per_page)
    return ExperimentReport(
        font=font, devices=devices, n_pages=n_pages, k_train=k_train, splits=records,
        split_accuracies=accs, mean_accuracy=float(np.mean(accs)), confusion=conf.tolist(),
        config=config)


def sweep_patch_sizes(manifest, devices, font, cfg, sizes, **kwargs):
    """One report per patch size, everything else held fixed."""
    return [run_experiment(manifest, devices, font, replace(cfg, patch_size=p), **kwargs)
            for p in sizes]


__all__ = [
    "ExperimentReport", "Manifest", "NetworkConfig", "Split", "confusion_matrix",
    "enumerate_splits", "extract_page_patches", "load_manifest", "parse_manifest",
    "run_experiment", "sweep_patch_sizes", "write_report",
]
