"""Lossy 8x8 block-DCT round trip (JPEG-style quantisation, no entropy coding)."""
import numpy as np
from scipy.fft import dctn, idctn

# ITU T.81 Annex K luminance table
LUMINANCE_TABLE = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.int64)


def quant_table(quality):
    """IJG quality scaling of the luminance table (quality 1..100)."""
    q = int(quality)
    if not 1 <= q <= 100:
        raise ValueError(f"quality must be in 1..100, got {quality}")
    scale = 5000 // q if q < 50 else 200 - 2 * q
    table = (LUMINANCE_TABLE * scale + 50) // 100
    return np.clip(table, 1, 255).astype(np.float64)


def compress_roundtrip(img, quality):
    """Quantise an 8-bit gray image in the 8x8 DCT domain and reconstruct it.

    Edges are padded by replication to a multiple of 8 and cropped afterwards.
    """
    arr = np.asarray(img, dtype=np.float64)
    h, w = arr.shape
    ph, pw = -h % 8, -w % 8
    padded = np.pad(arr, ((0, ph), (0, pw)), mode="edge") - 128.0
    bh, bw = padded.shape[0] // 8, padded.shape[1] // 8
    blocks = padded.reshape(bh, 8, bw, 8).transpose(0, 2, 1, 3)
    table = quant_table(quality)
    coeffs = dctn(blocks, type=2, axes=(2, 3), norm="ortho")
    coeffs = np.round(coeffs / table) * table
    rec = idctn(coeffs, type=2, axes=(2, 3), norm="ortho")
    rec = rec.transpose(0, 2, 1, 3).reshape(padded.shape)[:h, :w] + 128.0
    return np.clip(np.round(rec), 0, 255).astype(np.uint8)
