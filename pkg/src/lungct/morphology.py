"""Flat grayscale morphology on 8-bit images.

Disk structuring elements, erosion/dilation and their compositions,
geodesic reconstruction, regional extrema and minima imposition. All
operators treat the image border by shrinking the neighborhood: pixels
outside the image simply do not participate, no padding value is
invented.

Internally everything runs on int32 arrays so intermediate images may
leave [0, 255] (reconstruction tricks rely on that); the public
functions accept and return uint8.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMarkerError
from .validation import as_bool_mask, as_gray_image, require_same_shape

# Sentinels that can never win a min/max against real data.
_HI = np.int32(2**30)
_LO = np.int32(-(2**30))

_OFFSETS_8 = tuple((dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if dy or dx)
_OFFSETS_4 = ((-1, 0), (0, -1), (0, 1), (1, 0))


@dataclass(frozen=True)
class StructuringElement:
    """Flat disk neighborhood: all integer offsets within ``radius``."""

    radius: int
    offsets: tuple

    def __post_init__(self):
        if (0, 0) not in self.offsets:
            raise ValueError("structuring element must contain its origin")


def make_disk(radius: int) -> StructuringElement:
    """Disk of the given radius: offsets (dx, dy) with dx^2 + dy^2 <= radius^2."""
    if radius < 0:
        raise ValueError(f"disk radius must be >= 0, got {radius}")
    r2 = radius * radius
    offsets = tuple(
        (dx, dy)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
        if dx * dx + dy * dy <= r2
    )
    return StructuringElement(radius=radius, offsets=offsets)


def _minmax_filter(arr, se, take_min):
    """Shrinking-border min/max filter over the structuring element (int32)."""
    h, w = arr.shape
    r = se.radius
    if r == 0:
        return arr.copy()
    pad_value = _HI if take_min else _LO
    padded = np.pad(arr, r, constant_values=pad_value)
    out = arr.copy()
    combine = np.minimum if take_min else np.maximum
    for dx, dy in se.offsets:
        if dx == 0 and dy == 0:
            continue
        view = padded[r + dy : r + dy + h, r + dx : r + dx + w]
        combine(out, view, out=out)
    return out


def erode(img, se: StructuringElement):
    """Minimum over the disk neighborhood of each pixel."""
    arr = as_gray_image(img).astype(np.int32)
    return _minmax_filter(arr, se, take_min=True).astype(np.uint8)


def dilate(img, se: StructuringElement):
    """Maximum over the disk neighborhood of each pixel."""
    arr = as_gray_image(img).astype(np.int32)
    return _minmax_filter(arr, se, take_min=False).astype(np.uint8)


def open_image(img, se: StructuringElement):
    """Erosion followed by dilation: removes bright structures below the disk."""
    return dilate(erode(img, se), se)


def close_image(img, se: StructuringElement):
    """Dilation followed by erosion: fills dark structures below the disk."""
    return erode(dilate(img, se), se)


# --- geodesic reconstruction ---------------------------------------------------

def _elementary(arr, padded, out, offsets, take_min):
    """One 3x3 (or cross) min/max step using a preallocated padded buffer."""
    h, w = arr.shape
    padded[1 : 1 + h, 1 : 1 + w] = arr
    np.copyto(out, arr)
    combine = np.minimum if take_min else np.maximum
    for dy, dx in offsets:
        view = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        combine(out, view, out=out)
    return out


def _reconstruct_int(marker, mask, by_dilation, connectivity=8):
    """Iterate geodesic dilation (or erosion) to the fixpoint, on int32."""
    offsets = _OFFSETS_8 if connectivity == 8 else _OFFSETS_4
    h, w = marker.shape
    pad_value = _LO if by_dilation else _HI
    padded = np.full((h + 2, w + 2), pad_value, dtype=np.int32)
    cur = marker.copy()
    buf = np.empty_like(cur)
    clamp = np.minimum if by_dilation else np.maximum
    while True:
        _elementary(cur, padded, buf, offsets, take_min=not by_dilation)
        clamp(buf, mask, out=buf)
        if np.array_equal(buf, cur):
            return cur
        cur, buf = buf, cur


def _check_connectivity(connectivity):
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")


def reconstruct_by_dilation(marker, mask, connectivity=8):
    """Grow ``marker`` under ``mask`` until stable (marker <= mask required).

    A marker exceeding the mask anywhere is clamped down with a warning.
    """
    _check_connectivity(connectivity)
    marker = as_gray_image(marker, "marker").astype(np.int32)
    mask = as_gray_image(mask, "mask").astype(np.int32)
    require_same_shape(marker, mask, "marker and mask")
    if np.any(marker > mask):
        warnings.warn("marker exceeds mask; clamping marker to mask", stacklevel=2)
        marker = np.minimum(marker, mask)
    return _reconstruct_int(marker, mask, by_dilation=True, connectivity=connectivity).astype(np.uint8)


def reconstruct_by_erosion(marker, mask, connectivity=8):
    """Shrink ``marker`` onto ``mask`` until stable (marker >= mask required)."""
    _check_connectivity(connectivity)
    marker = as_gray_image(marker, "marker").astype(np.int32)
    mask = as_gray_image(mask, "mask").astype(np.int32)
    require_same_shape(marker, mask, "marker and mask")
    if np.any(marker < mask):
        warnings.warn("marker is below mask; clamping marker to mask", stacklevel=2)
        marker = np.maximum(marker, mask)
    return _reconstruct_int(marker, mask, by_dilation=False, connectivity=connectivity).astype(np.uint8)


def open_by_reconstruction(img, se: StructuringElement, connectivity=8):
    """Erode, then rebuild surviving structures to their exact original shape."""
    img = as_gray_image(img)
    marker = erode(img, se).astype(np.int32)
    return _reconstruct_int(marker, img.astype(np.int32), True, connectivity).astype(np.uint8)


def close_by_reconstruction(img, se: StructuringElement, connectivity=8):
    """Dilate, then rebuild: dark structures below the disk are filled."""
    img = as_gray_image(img)
    marker = dilate(img, se).astype(np.int32)
    return _reconstruct_int(marker, img.astype(np.int32), False, connectivity).astype(np.uint8)


# --- regional extrema ------------------------------------------------------------

def regional_maxima(img, connectivity=8):
    """Mask of connected plateaus with no strictly brighter neighbor."""
    _check_connectivity(connectivity)
    arr = as_gray_image(img).astype(np.int32)
    rec = _reconstruct_int(arr - 1, arr, by_dilation=True, connectivity=connectivity)
    return arr > rec


def regional_minima(img, connectivity=8):
    """Mask of connected plateaus with no strictly darker neighbor."""
    _check_connectivity(connectivity)
    arr = as_gray_image(img).astype(np.int32)
    rec = _reconstruct_int(arr + 1, arr, by_dilation=False, connectivity=connectivity)
    return arr < rec


def impose_minima(img, markers, connectivity=8):
    """Force the image's regional minima to be exactly the marker components.

    Marker pixels drop to 0; everywhere else the output stays strictly
    positive and no non-marker minimum survives.
    """
    _check_connectivity(connectivity)
    arr = as_gray_image(img).astype(np.int32)
    markers = as_bool_mask(markers, arr.shape, "markers")
    if not markers.any():
        raise EmptyMarkerError("marker mask selects no pixel")
    forced = np.where(markers, np.int32(0), _HI)
    fence = np.minimum(arr + 1, forced)
    out = _reconstruct_int(forced, fence, by_dilation=False, connectivity=connectivity)
    return np.clip(out, 0, 255).astype(np.uint8)


def erode_mask(mask, se: StructuringElement):
    """Binary erosion with the shrinking-border policy."""
    mask = as_bool_mask(mask)
    arr = mask.astype(np.int32)
    return _minmax_filter(arr, se, take_min=True).astype(bool)


def dilate_mask(mask, se: StructuringElement):
    """Binary dilation with the shrinking-border policy."""
    mask = as_bool_mask(mask)
    arr = mask.astype(np.int32)
    return _minmax_filter(arr, se, take_min=False).astype(bool)
