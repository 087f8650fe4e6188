"""Letter candidates: connected components, size filtering, fixed-size patches."""
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .exceptions import BadPatchSize, ConstantImage
from .imagecore import binarize, otsu_threshold, to_grayscale

# inclusive bounds on the tight bounding box of a kept component
MIN_HEIGHT, MAX_HEIGHT = 3, 90
MIN_WIDTH, MAX_WIDTH = 2, 100
AREA_FRACTION_OF_MEDIAN = 0.5

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class Component:
    label: int
    top: int
    left: int
    height: int
    width: int
    area: int

    @property
    def bbox(self):
        return (self.top, self.left, self.height, self.width)

    def to_dict(self):
        return asdict(self)


def label_components(mask, return_map=False):
    """8-connected components of a boolean mask, ordered by bbox (top, left).

    Labels are 1..n in that order. With ``return_map`` the label image (0 for
    background, component label elsewhere) is returned as well.
    """
    mask = np.asarray(mask, dtype=bool)
    labels, n = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if n == 0:
        return ([], labels) if return_map else []
    slices = ndimage.find_objects(labels)
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    # first raster index of each label breaks (top, left) ties deterministically
    flat = labels.ravel()
    nz = np.flatnonzero(flat)
    first = np.full(n + 1, flat.size, dtype=np.int64)
    np.minimum.at(first, flat[nz], nz)

    raw = []
    for k, (rs, cs) in enumerate(slices, start=1):
        raw.append((rs.start, cs.start, int(first[k]), rs.stop - rs.start,
                    cs.stop - cs.start, int(areas[k]), k))
    raw.sort()
    comps = [Component(label=i, top=t, left=l, height=h, width=w, area=a)
             for i, (t, l, _, h, w, a, _) in enumerate(raw, start=1)]
    if not return_map:
        return comps
    relabel = np.zeros(n + 1, dtype=labels.dtype)
    relabel[[r[-1] for r in raw]] = np.arange(1, n + 1)
    return comps, relabel[labels]


def _drop_reason(comp, area_floor):
    if comp.area < area_floor:
        return "area_below_half_median"
    if not MIN_HEIGHT <= comp.height <= MAX_HEIGHT:
        return "height_out_of_range"
    if not MIN_WIDTH <= comp.width <= MAX_WIDTH:
        return "width_out_of_range"
    return None


def area_floor(comps):
    if not comps:
        return 0.0
    return AREA_FRACTION_OF_MEDIAN * float(np.median([c.area for c in comps]))


def filter_components(comps):
    """Drop spurious components in one pass over the original set.

    Kept: area >= half the median area, 3 <= height <= 90, 2 <= width <= 100.
    The median is taken before anything is removed, so applying this twice
    can remove more the second time.
    """
    comps = list(comps)
    floor = area_floor(comps)
    return [c for c in comps if _drop_reason(c, floor) is None]


def _fit_axis(extent, p):
    """(source start, source stop, dest start) for one axis of crop/pad."""
    if extent >= p:
        lo = (extent - p) // 2
        return lo, lo + p, 0
    return 0, extent, (p - extent) // 2


def extract_patch(img, comp, p):
    """p x p patch in [0, 1] from the component's box of the gray image.

    Larger extents are centre-cropped and smaller ones zero-padded, each axis on
    its own; an odd surplus puts the smaller share on the top/left.
    """
    if int(p) != p or p < 1:
        raise BadPatchSize(f"patch size must be a positive integer, got {p}")
    p = int(p)
    gray = np.asarray(img)
    top, left, height, width = comp.bbox
    if top < 0 or left < 0 or top + height > gray.shape[0] or left + width > gray.shape[1]:
        raise ValueError(f"component bbox {comp.bbox} outside image {gray.shape}")
    r0, r1, dr = _fit_axis(height, p)
    c0, c1, dc = _fit_axis(width, p)
    patch = np.zeros((p, p), dtype=np.float64)
    sub = gray[top + r0:top + r1, left + c0:left + c1]
    patch[dr:dr + sub.shape[0], dc:dc + sub.shape[1]] = sub
    return patch / 255.0


def extract_patches(img, p):
    """Full page pipeline: gray -> Otsu -> mask -> components -> filter -> patches.

    Returns ``(patches, kept_components)`` with patches shaped (n, p, p). A
    constant image has no ink to separate and yields no patches.
    """
    if p < 1:
        raise BadPatchSize(f"patch size must be >= 1, got {p}")
    gray = to_grayscale(img)
    try:
        t = otsu_threshold(gray)
    except ConstantImage:
        return np.empty((0, p, p)), []
    kept = filter_components(label_components(binarize(gray, t)))
    patches = np.empty((len(kept), p, p), dtype=np.float64)
    for i, comp in enumerate(kept):
        patches[i] = extract_patch(gray, comp, p)
    return patches, kept


def debug_dump(img):
    """Per-component record (bbox, area, kept/dropped and why) for one page."""
    gray = to_grayscale(img)
    t = otsu_threshold(gray)
    comps = label_components(binarize(gray, t))
    floor = area_floor(comps)
    records = []
    for c in comps:
        reason = _drop_reason(c, floor)
        rec = c.to_dict()
        rec["kept"] = reason is None
        rec["reason"] = reason
        records.append(rec)
    return {
        "width": int(gray.shape[1]),
        "height": int(gray.shape[0]),
        "threshold": int(t),
        "area_floor": floor,
        "n_components": len(comps),
        "n_kept": sum(r["kept"] for r in records),
        "components": records,
    }
