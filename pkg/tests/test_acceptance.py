"""Acceptance gate: one test (and one printed PASS/FAIL line) per criterion.

The three end-to-end benchmarks generate full-size synthetic datasets and train
real models; together they take tens of minutes on one core (marked ``slow``).
"""
import json
import time

import numpy as np
import pytest

from docsource.cli import main as cli_main
from docsource.evalharness import enumerate_splits, load_manifest, run_experiment
from docsource.nnengine import (
    Network,
    NetworkConfig,
    cross_entropy,
    load_checkpoint,
    param_count,
    predict,
    save_checkpoint,
    softmax,
    stratified_split,
    train,
)
from docsource.segmentation import Component, filter_components, label_components
from docsource.synthdata import PageSpec, generate_dataset, same_model_bank, separable_bank
from tests.gradchecks import CHECKS
from tests.helpers import TINY_NET, tiny_config, write_mock_manifest
from tests.oracles import (
    cross_entropy_loop,
    flood_fill_components,
    layer_param_count,
    softmax_loop,
)

# Desk-scale training budget for the synthetic benchmarks (see README).
BENCH_SEPARABLE = dict(epochs=3, max_patches=200)
BENCH_SAME_MODEL = dict(epochs=6, max_patches=300)
BENCH_RESCALED = dict(epochs=3, max_patches=200)
BENCH_NET = dict(batch_size=32, bn_momentum=0.9)


def test_gradient_correctness(verdict):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = {name: max(check(rng) for _ in range(25)) for name, check in CHECKS.items()}
    elapsed = time.perf_counter() - start
    ok = all(err < 1e-4 for err in worst.values()) and elapsed < 60
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
    verdict("gradient correctness (25 instances/layer, < 1e-4, < 60 s)", ok,
            f"{detail}; {elapsed:.1f} s")
    assert ok


def test_architecture_fidelity(verdict):
    counts = {s: param_count(Network(NetworkConfig(patch_size=18, n_classes=s)))
              for s in (2, 8, 11, 21)}
    ok = all(c == layer_param_count(18, s) == 506_956 + 257 * s and c > 500_000
             for s, c in counts.items())
    verdict("architecture fidelity (506,956 + 257*S)", ok, str(counts))
    assert ok


def test_softmax_cross_entropy_oracles(verdict):
    rng = np.random.default_rng(7)
    worst_s = worst_l = 0.0
    for _ in range(1000):
        n, s = int(rng.integers(1, 9)), int(rng.integers(2, 22))
        logits = rng.normal(size=(n, s)) * rng.uniform(0.1, 20)
        labels = rng.integers(0, s, size=n)
        scores = softmax(logits)
        ref = np.array([softmax_loop(list(row)) for row in logits])
        worst_s = max(worst_s, float(np.abs(scores - ref).max()))
        worst_l = max(worst_l, abs(cross_entropy(scores, labels)
                                   - cross_entropy_loop(ref.tolist(), labels)))
    ok = worst_s <= 1e-12 and worst_l <= 1e-12
    verdict("softmax / cross-entropy oracles (1000 cases, 1e-12)", ok,
            f"max softmax diff {worst_s:.1e}, max loss diff {worst_l:.1e}")
    assert ok


def _filter_fixtures_hold():
    def comp(area, h=10, w=10, label=0):
        return Component(label=label, top=0, left=0, height=h, width=w, area=area)

    cases = [
        # (areas/boxes, labels expected to survive)
        ([comp(100, label=0), comp(100, label=1), comp(100, label=2), comp(10, label=3)], [0, 1, 2]),
        ([comp(50, label=0), comp(100, label=1), comp(100, label=2)], [0, 1, 2]),
        ([comp(49, label=0), comp(100, label=1), comp(100, label=2)], [1, 2]),
        ([comp(60, h=2, label=0), comp(60, h=3, label=1), comp(60, h=90, label=2),
          comp(60, h=91, label=3)], [1, 2]),
        ([comp(60, w=1, label=0), comp(60, w=2, label=1), comp(60, w=100, label=2),
          comp(60, w=101, label=3)], [1, 2]),
        # huge area does not rescue an out-of-bounds box
        ([comp(5000, h=2, w=50, label=0), comp(40, label=1), comp(40, label=2)], [1, 2]),
        # even count: median is the mean of the middle two (30 -> floor 15)
        ([comp(a, label=i) for i, a in enumerate([10, 20, 40, 100])], [1, 2, 3]),
        ([], []),
    ]
    return all([c.label for c in filter_components(comps)] == keep for comps, keep in cases)


def test_segmentation_oracle(verdict):
    rng = np.random.default_rng(11)
    mismatches = 0
    for _ in range(500):
        h, w = rng.integers(1, 33, size=2)
        mask = rng.random((h, w)) < rng.uniform(0.05, 0.7)
        comps, label_map = label_components(mask, return_map=True)
        ours, boxes_ok = set(), True
        for c in comps:
            pix = np.argwhere(label_map == c.label)
            ours.add(frozenset(map(tuple, pix.tolist())))
            lo, hi = pix.min(axis=0), pix.max(axis=0)
            boxes_ok &= (len(pix) == c.area and (lo[0], lo[1]) == (c.top, c.left)
                         and (hi - lo + 1).tolist() == [c.height, c.width])
        if ours != flood_fill_components(mask) or not boxes_ok:
            mismatches += 1
    filters_ok = _filter_fixtures_hold()
    ok = mismatches == 0 and filters_ok
    verdict("segmentation oracle (500 masks vs flood fill; filter fixtures)", ok,
            f"{mismatches} mismatching masks; filter fixtures {'ok' if filters_ok else 'FAILED'}")
    assert ok


def test_protocol_fidelity(verdict, tmp_path):
    n_splits = len(enumerate_splits(5, 2))
    manifest = load_manifest(write_mock_manifest(tmp_path, 21, ["cambria", "arial", "courier"], 5))
    shapes, row_sums = [], []
    for font in manifest.fonts:
        report = run_experiment(manifest, None, font, tiny_config(epochs=1))
        conf = np.asarray(report.confusion)
        shapes.append(conf.shape)
        row_sums.extend(conf.sum(axis=1).tolist())
        assert len(report.splits) == 10
    worst = max(abs(v - 100.0) for v in row_sums)
    ok = n_splits == 10 and all(s == (21, 21) for s in shapes) and worst <= 0.1
    verdict("protocol fidelity (10 splits; 21x3x5 mock manifest -> 21x21 confusion)", ok,
            f"{n_splits} splits; confusion shapes {sorted(set(shapes))}; "
            f"max |row sum - 100| = {worst:.2e}")
    assert ok


def _benchmark(tmp_path, bank, budget, seed=1):
    start = time.perf_counter()
    generate_dataset(bank, PageSpec(seed=seed), 5, tmp_path)
    manifest = load_manifest(tmp_path / "manifest.json")
    cfg = NetworkConfig(epochs=budget["epochs"], seed=seed, **BENCH_NET)
    report = run_experiment(manifest, None, manifest.fonts[0], cfg, k_train=2,
                            max_train_patches_per_page=budget["max_patches"])
    return report, time.perf_counter() - start


@pytest.mark.slow
def test_benchmark_separable(verdict, tmp_path):
    report, elapsed = _benchmark(tmp_path, separable_bank(5), BENCH_SEPARABLE)
    ok = report.mean_accuracy >= 90.0 and elapsed <= 20 * 60 and len(report.splits) == 10
    verdict("synthetic benchmark, 5 separated devices (>= 90%, <= 20 min)", ok,
            f"mean page accuracy {report.mean_accuracy:.2f}% over {len(report.splits)} splits "
            f"in {elapsed / 60:.1f} min")
    assert ok


@pytest.mark.slow
def test_benchmark_same_model(verdict, tmp_path):
    report, elapsed = _benchmark(tmp_path, same_model_bank(3), BENCH_SAME_MODEL)
    ok = report.mean_accuracy > 100 / 3 + 20
    verdict("synthetic benchmark, 3 same-model devices (> 53.33%)", ok,
            f"mean page accuracy {report.mean_accuracy:.2f}% in {elapsed / 60:.1f} min")
    assert ok


@pytest.mark.slow
def test_rescale_attack(verdict, tmp_path):
    bank = separable_bank(5, rescaled=True)
    report, elapsed = _benchmark(tmp_path, bank, BENCH_RESCALED)
    sizes = [s.native_size for s in bank]
    ok = report.mean_accuracy >= 85.0
    verdict("rescale-attack harness (>= 85%)", ok,
            f"native sizes {sizes} -> 3120x4160; mean page accuracy "
            f"{report.mean_accuracy:.2f}% in {elapsed / 60:.1f} min")
    assert ok


def _artifacts(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def _run_all_subcommands(root, capsys):
    cfg = root / "cfg.json"
    cfg.parent.mkdir(parents=True, exist_ok=True)
    cfg.write_text(json.dumps({
        "width": 780, "height": 1040, "glyph_count": 100, "glyph_min": 20, "glyph_max": 28,
        "margin": 40, "msg_width": 390, "msg_height": 520, "pages_per_font": 3, "n_devices": 2,
        "k_train": 2, "max_train_patches_per_page": 60, **TINY_NET}))
    data, model, reports = root / "data", root / "model", root / "eval"
    manifest = data / "manifest.json"
    image = data / "D1/serif/page_2.png"
    outputs = {}
    steps = [
        ("gen", ["gen", "--config", str(cfg), "--seed", "5", "--out", str(data)]),
        ("train", ["train", "--config", str(cfg), "--seed", "5", "--manifest", str(manifest),
                   "--out", str(model)]),
        ("eval", ["eval", "--config", str(cfg), "--seed", "5", "--manifest", str(manifest),
                  "--out", str(reports)]),
        ("predict", ["predict", "--model", str(model / "model.ckpt"), "--image", str(image)]),
        ("inspect", ["inspect", "--image", str(image)]),
    ]
    for name, argv in steps:
        code = cli_main(argv)
        outputs[name] = (code, capsys.readouterr().out.replace(str(root), "<root>"))
    return outputs, _artifacts(root)


def test_cli_determinism(verdict, tmp_path, capsys):
    out_a, files_a = _run_all_subcommands(tmp_path / "a", capsys)
    out_b, files_b = _run_all_subcommands(tmp_path / "b", capsys)
    codes_ok = all(code == 0 for code, _ in out_a.values())
    same_stdout = [k for k in out_a if out_a[k] == out_b[k]]
    same_files = files_a.keys() == files_b.keys() and all(files_a[k] == files_b[k] for k in files_a)
    ok = codes_ok and len(same_stdout) == len(out_a) and same_files
    verdict("determinism (gen/train/eval/predict/inspect twice, byte-identical)", ok,
            f"{len(files_a)} artifact files identical={same_files}; "
            f"identical stdout for {same_stdout}")
    assert ok


def test_checkpoint_round_trip(verdict, tmp_path):
    rng = np.random.default_rng(3)
    x = rng.random((200, 18, 18))
    y = (x[:, :, :9].mean(axis=(1, 2)) > x[:, :, 9:].mean(axis=(1, 2))).astype(int)
    tr, va = stratified_split(y, 0.1, 0)
    ckpt = train(x[tr], y[tr], x[va], y[va], NetworkConfig(epochs=1, batch_size=32))
    batch = rng.random((128, 18, 18))
    before = predict(ckpt, batch)[1]
    save_checkpoint(ckpt, tmp_path / "m.ckpt")
    after = predict(load_checkpoint(tmp_path / "m.ckpt"), batch)[1]
    ok = np.array_equal(before, after)
    verdict("checkpoint round trip (128 patches, bit-exact)", ok,
            f"max |diff| = {np.abs(before - after).max():.1e}")
    assert ok
