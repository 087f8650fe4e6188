"""Fast on-disk fixtures shared by the harness, CLI and acceptance tests."""
import json

import numpy as np

from docsource.imagecore import save_image
from docsource.nnengine import NetworkConfig

# a deliberately small network: the protocol, not the accuracy, is under test
TINY_NET = dict(conv_filters=4, dense_units=16, epochs=2, batch_size=16, bn_momentum=0.9)


def tiny_config(**kw):
    return NetworkConfig(**{**TINY_NET, **kw})


def mock_page(rng, ink, n_blobs=24, size=(120, 160)):
    """White page with letter-sized dark rectangles of intensity ``ink``."""
    h, w = size
    page = np.full((h, w), 255, np.uint8)
    for k in range(n_blobs):
        r, c = divmod(k, 6)
        bh, bw = int(rng.integers(10, 14)), int(rng.integers(7, 12))
        top, left = 6 + r * 26 + int(rng.integers(0, 4)), 4 + c * 19 + int(rng.integers(0, 4))
        page[top:top + bh, left:left + bw] = ink
    return page


def write_mock_manifest(root, n_devices, fonts, n_pages, seed=0):
    """Manifest whose devices differ only in ink level (trivially separable)."""
    rng = np.random.default_rng(seed)
    devices = []
    for d in range(n_devices):
        ink = int(10 + d * 200 // max(n_devices - 1, 1))
        pages = {}
        for font in fonts:
            rels = []
            for k in range(n_pages):
                rel = f"S{d + 1}/{font}/p{k}.pgm"
                (root / rel).parent.mkdir(parents=True, exist_ok=True)
                save_image(mock_page(rng, ink), root / rel)
                rels.append(rel)
            pages[font] = rels
        devices.append({"id": f"S{d + 1}", "pages": pages})
    manifest = {"version": 1, "fonts": list(fonts), "devices": devices}
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path
