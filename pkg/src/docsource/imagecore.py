"""Image arrays, file I/O, grayscale conversion and global thresholding.

Images are plain numpy arrays:

* RGB image  -- ``uint8`` array of shape ``(height, width, 3)``
* gray image -- ``uint8`` array of shape ``(height, width)``
* bit mask   -- ``bool`` array of shape ``(height, width)``, True on ink
"""
from fractions import Fraction
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .exceptions import ConstantImage, CorruptData, UnsupportedFormat

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _as_uint8(img, ndim):
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        raise TypeError(f"expected uint8 image, got {arr.dtype}")
    if arr.ndim != ndim or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"bad image shape {arr.shape}")
    if ndim == 3 and arr.shape[2] != 3:
        raise ValueError(f"RGB image needs 3 channels, got {arr.shape[2]}")
    return arr


def to_grayscale(img):
    """BT.601 luma with round-half-up, computed in integer arithmetic.

    Gray images pass through unchanged.
    """
    arr = np.asarray(img)
    if arr.ndim == 2:
        return _as_uint8(arr, 2)
    arr = _as_uint8(arr, 3).astype(np.int64)
    # (299 R + 587 G + 114 B) / 1000, rounded half up
    acc = 299 * arr[..., 0] + 587 * arr[..., 1] + 114 * arr[..., 2]
    gray = (acc + 500) // 1000
    return np.clip(gray, 0, 255).astype(np.uint8)


def otsu_threshold(img):
    """Threshold t maximising between-class variance of {<= t, > t}.

    Scores are compared exactly (rational arithmetic) so ties go to the
    smallest t deterministically.
    """
    gray = _as_uint8(img, 2)
    hist = np.bincount(gray.ravel(), minlength=256).astype(np.int64)
    if np.count_nonzero(hist) < 2:
        raise ConstantImage("image has a single intensity; cannot threshold")

    n = int(hist.sum())
    total = int(np.dot(hist, np.arange(256)))
    best_t, best_score = 0, Fraction(-1)
    n0 = s0 = 0
    for t in range(256):
        n0 += int(hist[t])
        s0 += t * int(hist[t])
        n1 = n - n0
        if n0 == 0 or n1 == 0:
            score = Fraction(0)
        else:
            # between-class variance times n^2
            score = Fraction((s0 * n - total * n0) ** 2, n0 * n1)
        if score > best_score:
            best_t, best_score = t, score
    return best_t


def binarize(img, t):
    """Ink mask: True where intensity <= t (dark toner on white paper)."""
    return _as_uint8(img, 2) <= t


# ---------------------------------------------------------------- file I/O

def _read_pnm_token(data, pos):
    # skip whitespace and comments
    while pos < len(data):
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise CorruptData("truncated PNM header")
    return data[start:pos], pos


def _parse_pnm(data):
    magic = data[:2]
    channels = {b"P5": 1, b"P6": 3}[magic]
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_pnm_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise CorruptData(f"non-numeric PNM header field {tok!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise CorruptData("PNM dimensions must be positive")
    if maxval != 255:
        raise UnsupportedFormat(f"only 8-bit PNM is supported (maxval {maxval})")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise CorruptData("missing whitespace after PNM header")
    pos += 1
    expected = width * height * channels
    body = data[pos:pos + expected]
    if len(body) != expected:
        raise CorruptData(f"PNM pixel data truncated: {len(body)} of {expected} bytes")
    arr = np.frombuffer(body, dtype=np.uint8)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return arr.reshape(shape).copy()


def load_image(path):
    """Read a PNG, PGM (P5) or PPM (P6) file into a gray or RGB array."""
    path = Path(path)
    data = path.read_bytes()
    if data[:2] in (b"P5", b"P6"):
        return _parse_pnm(data)
    if data[:8] != PNG_SIGNATURE:
        raise UnsupportedFormat(f"{path}: not a PNG/PGM/PPM file")
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("L", "RGB"):
                return np.array(im, dtype=np.uint8)
            if mode in ("LA", "1", "I;16"):
                return np.array(im.convert("L"), dtype=np.uint8)
            if mode in ("P", "RGBA"):
                return np.array(im.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise CorruptData(f"{path}: {exc}") from exc
    raise UnsupportedFormat(f"{path}: unsupported PNG mode {mode}")


def save_image(img, path):
    """Write a gray or RGB array; format chosen by extension (.png/.pgm/.ppm)."""
    path = Path(path)
    arr = np.asarray(img)
    arr = _as_uint8(arr, arr.ndim)
    ext = path.suffix.lower()
    if ext in (".pgm", ".ppm"):
        if (ext == ".pgm") != (arr.ndim == 2):
            raise UnsupportedFormat(f"{ext} cannot hold an image of shape {arr.shape}")
        magic = b"P5" if arr.ndim == 2 else b"P6"
        h, w = arr.shape[:2]
        header = magic + f"\n{w} {h}\n255\n".encode("ascii")
        path.write_bytes(header + np.ascontiguousarray(arr).tobytes())
    elif ext == ".png":
        Image.fromarray(arr).save(path, format="PNG")
    else:
        raise UnsupportedFormat(f"unsupported extension {ext!r}")
