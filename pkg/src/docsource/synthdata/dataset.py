"""On-disk synthetic datasets in the manifest layout read by the evaluation harness."""
import json
import logging
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..imagecore import save_image
from .device import (
    SHARE_SIZE,
    NATIVE_SIZES,
    DeviceSignature,
    MessagingProfile,
    capture,
    simulate_messaging,
)
from .render import STYLES, PageSpec, render_page

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"


def page_seed(base_seed, style, index):
    """Layout seed of page ``index`` in ``style``; identical for every device."""
    return int(base_seed) * 100_000 + int(style) * 1_000 + int(index)


def separable_bank(n, seed=0, rescaled=False):
    """``n`` devices whose capture parameters differ clearly from one another.

    With ``rescaled`` the devices take the alternate native sizes of the
    reference phone list (S12 onward) and are rescaled before sharing.
    """
    rng = np.random.default_rng([seed, 0xBA4C])
    alt_sizes = [NATIVE_SIZES[f"S{i}"] for i in range(12, 22)]
    bank = []
    for i in range(n):
        bank.append(DeviceSignature(
            name=f"D{i + 1}",
            seed=int(rng.integers(2**31)),
            prnu_strength=0.1 + 0.05 * (i % 3),
            noise_sigma=1.0 + 1.5 * (i % 4),
            blur_sigma=0.5 + 1.0 * i,
            vignette=0.05 + 0.1 * (i % 2),
            quality=(95, 85, 90, 80, 92, 88, 83, 97)[i % 8],
            white_level=(235.0, 220.0, 228.0, 212.0, 240.0)[i % 5],
            native_size=alt_sizes[i % len(alt_sizes)] if rescaled else None,
        ))
    return bank


def same_model_bank(n, seed=0, template=None):
    """``n`` devices identical in every parameter except the gain-field seed."""
    template = template or DeviceSignature(
        name="M", seed=0, prnu_strength=0.2, noise_sigma=2.0, blur_sigma=1.5,
        vignette=0.1, quality=92, white_level=230.0)
    rng = np.random.default_rng([seed, 0x5A3E])
    return [replace(template, name=f"M{i + 1}", seed=int(rng.integers(2**31))) for i in range(n)]


def load_bank(path):
    return [DeviceSignature.from_dict(rec) for rec in json.loads(Path(path).read_text())]


def save_bank(bank, path):
    Path(path).write_text(json.dumps([s.to_dict() for s in bank], indent=2, sort_keys=True) + "\n")


def generate_dataset(devices, page_template, pages_per_font, out_dir, styles=(0,),
                     messaging=None, share_size=SHARE_SIZE):
    """Render, capture and share every (device, style, page); write a manifest.

    All devices photograph the same clean pages. Images land at
    ``out_dir/<device>/<style>/page_<k>.png``; the manifest paths are relative
    to ``out_dir``. Returns the manifest dictionary.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    messaging = messaging or MessagingProfile()
    fonts = [STYLES[s] for s in styles]
    pages = {dev.name: {font: [] for font in fonts} for dev in devices}

    for style, font in zip(styles, fonts):
        for k in range(pages_per_font):
            spec = replace(page_template, style=style,
                           seed=page_seed(page_template.seed, style, k))
            clean = render_page(spec)
            for dev in devices:
                shared = simulate_messaging(capture(clean, dev, share_size), messaging)
                rel = Path(dev.name) / font / f"page_{k}.png"
                (out_dir / rel).parent.mkdir(parents=True, exist_ok=True)
                save_image(shared, out_dir / rel)
                pages[dev.name][font].append(rel.as_posix())
            log.info("style %s page %d: %d devices done", font, k, len(devices))

    manifest = {
        "version": MANIFEST_VERSION,
        "fonts": fonts,
        "devices": [{"id": dev.name, "pages": pages[dev.name]} for dev in devices],
        "generator": {
            "page_template": page_template.to_dict(),
            "messaging": messaging.to_dict(),
            "share_size": list(share_size),
            "signatures": [dev.to_dict() for dev in devices],
        },
    }
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
