"""Per-device capture signatures and messaging-app recompression."""
import hashlib
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy import ndimage

from ..exceptions import BadConfig, UpscaleRefused
from .codec import compress_roundtrip
from .resample import area_resize, linear_resize, to_uint8

# Native image sizes (width x height, as listed) of the 21 phones in the
# reference dataset. S1-S11 share 3120x4160.
NATIVE_SIZES = {
    **{f"S{i}": (3120, 4160) for i in range(1, 12)},
    "S12": (4096, 3072), "S13": (3072, 4096), "S14": (2976, 3968),
    "S15": (3264, 2448), "S16": (3264, 2448), "S17": (2448, 3264),
    "S18": (2464, 3280), "S19": (3456, 4608), "S20": (4128, 3096),
    "S21": (4128, 3096),
}
SHARE_SIZE = (3120, 4160)

# the gain field is drawn on a grid this many pixels coarser than the sensor
FIELD_GRAIN = 4


def portrait(size):
    w, h = size
    return (min(w, h), max(w, h))


@dataclass
class DeviceSignature:
    name: str
    seed: int
    prnu_strength: float = 0.0
    noise_sigma: float = 0.0
    blur_sigma: float = 0.0
    vignette: float = 0.0
    quality: int = 100
    white_level: float = 255.0
    native_size: tuple = None

    def validate(self):
        for name in ("prnu_strength", "noise_sigma", "blur_sigma", "vignette", "white_level"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise BadConfig(f"{name} must be finite and >= 0, got {value}")
        if not 1 <= int(self.quality) <= 100:
            raise BadConfig(f"quality must be in 1..100, got {self.quality}")
        return self

    def to_dict(self):
        d = asdict(self)
        d["native_size"] = list(self.native_size) if self.native_size else None
        return d

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise BadConfig(f"unknown device signature keys: {sorted(unknown)}")
        data = dict(data)
        if data.get("native_size") is not None:
            data["native_size"] = tuple(int(v) for v in data["native_size"])
        return cls(**data).validate()


@dataclass
class MessagingProfile:
    width: int = 780
    height: int = 1040
    quality: int = 75

    def to_dict(self):
        return asdict(self)


def noise_field(sig, shape):
    """Unit-mean multiplicative gain field, a pure function of the signature seed.

    The coarse field is white noise smoothed by an elongated Gaussian whose
    orientation and length are drawn from the seed, so two seeds differ in local
    texture as well as in the realisation.
    """
    h, w = shape
    if sig.prnu_strength == 0:
        return np.ones(shape)
    rng = np.random.default_rng([sig.seed, 0x505255])
    theta = rng.uniform(0.0, np.pi)
    sigma_long, sigma_short = rng.uniform(1.2, 2.5), 0.5
    r = np.arange(-6, 7)
    yy, xx = np.meshgrid(r, r, indexing="ij")
    u = xx * np.cos(theta) + yy * np.sin(theta)
    v = -xx * np.sin(theta) + yy * np.cos(theta)
    kernel = np.exp(-0.5 * ((u / sigma_long) ** 2 + (v / sigma_short) ** 2))
    kernel /= kernel.sum()

    ch, cw = -(-h // FIELD_GRAIN), -(-w // FIELD_GRAIN)
    coarse = ndimage.convolve(rng.standard_normal((ch, cw)), kernel, mode="wrap")
    coarse -= coarse.mean()
    coarse /= coarse.std()
    gains = 1.0 + sig.prnu_strength * coarse
    return np.repeat(np.repeat(gains, FIELD_GRAIN, axis=0), FIELD_GRAIN, axis=1)[:h, :w]


def _vignette(shape, strength):
    h, w = shape
    y = (np.arange(h) + 0.5 - h / 2) / (h / 2)
    x = (np.arange(w) + 0.5 - w / 2) / (w / 2)
    r2 = (y[:, None] ** 2 + x[None, :] ** 2) / 2.0
    return 1.0 - strength * r2


def _page_noise_seed(sig, page):
    digest = hashlib.sha256(np.ascontiguousarray(page).tobytes()).digest()
    return [sig.seed, int.from_bytes(digest[:8], "little")]


def apply_device(page, sig):
    """Camera capture model.

    blur -> exposure (white level) -> gain field -> additive noise -> vignette
    -> clamp -> block-DCT recompression at the device quality.
    """
    sig.validate()
    page = np.asarray(page, dtype=np.uint8)
    img = page.astype(np.float64)
    if sig.blur_sigma > 0:
        img = ndimage.gaussian_filter(img, sig.blur_sigma, mode="nearest")
    if sig.white_level != 255.0:
        img *= sig.white_level / 255.0
    if sig.prnu_strength > 0:
        img *= noise_field(sig, img.shape)
    if sig.noise_sigma > 0:
        rng = np.random.default_rng(_page_noise_seed(sig, page))
        img += rng.normal(0.0, sig.noise_sigma, size=img.shape)
    if sig.vignette > 0:
        img *= _vignette(img.shape, sig.vignette)
    out = to_uint8(img)
    if sig.quality < 100:
        out = compress_roundtrip(out, sig.quality)
    return out


def capture(page, sig, share_size=SHARE_SIZE):
    """Page as delivered to the messaging app by this device.

    A device whose native size differs from the page is simulated at its native
    size and then rescaled to ``share_size`` before sharing (rescale attack).
    """
    page_size = (page.shape[1], page.shape[0])
    native = portrait(sig.native_size) if sig.native_size else page_size
    src = page if native == page_size else to_uint8(linear_resize(page, native))
    img = apply_device(src, sig)
    if (img.shape[1], img.shape[0]) != tuple(share_size) and sig.native_size:
        img = to_uint8(linear_resize(img, share_size))
    return img


def simulate_messaging(img, profile=None):
    """Area-average downscale to the profile size, then recompress."""
    profile = profile or MessagingProfile()
    img = np.asarray(img)
    h, w = img.shape
    if profile.width > w or profile.height > h:
        raise UpscaleRefused(
            f"target {profile.width}x{profile.height} exceeds source {w}x{h}")
    small = to_uint8(area_resize(img, (profile.width, profile.height)))
    return compress_roundtrip(small, profile.quality)
