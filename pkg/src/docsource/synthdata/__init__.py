"""Synthetic document datasets: procedural pages, device signatures, messaging."""
from .codec import compress_roundtrip, quant_table
from .device import (
    SHARE_SIZE,
    NATIVE_SIZES,
    DeviceSignature,
    MessagingProfile,
    apply_device,
    capture,
    noise_field,
    simulate_messaging,
)
from .render import STYLES, PageSpec, render_page
from .dataset import (
    MANIFEST_NAME,
    generate_dataset,
    load_bank,
    page_seed,
    same_model_bank,
    save_bank,
    separable_bank,
)
