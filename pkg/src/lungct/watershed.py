"""Marker-controlled watershed segmentation.

Markers come from regional maxima of a double reconstruction filter,
split into foreground/background by a global Otsu threshold. Minima are
imposed at all marker pixels and a priority flood grows each marker
component into a catchment basin; pixels where two different labels meet
become ridge (label 0). Candidate tumour regions are the basins grown
from foreground markers.
"""

import heapq
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import NoMarkerError, ShapeError
from .morphology import (
    close_by_reconstruction,
    erode_mask,
    impose_minima,
    make_disk,
    open_by_reconstruction,
    regional_maxima,
)
from .validation import as_bool_mask, as_gray_image

# The flood and the basin/ridge topology are 4-connected so each basin is
# a single 4-connected component; extrema detection above stays 8-connected.
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_FULL = np.ones((3, 3), dtype=bool)


@dataclass
class MarkerSet:
    """Disjoint foreground (candidate) and background (certain non-target) masks."""

    foreground: np.ndarray
    background: np.ndarray

    def __post_init__(self):
        self.foreground = as_bool_mask(self.foreground, name="foreground")
        self.background = as_bool_mask(self.background, self.foreground.shape, "background")
        if np.any(self.foreground & self.background):
            raise ValueError("foreground and background markers overlap")

    @property
    def shape(self):
        return self.foreground.shape

    def any(self):
        return bool(self.foreground.any() or self.background.any())


def otsu_threshold(img) -> int:
    """Histogram threshold maximizing between-class variance.

    Returns t such that the bright class is ``img >= t``. For a constant
    image there is no valid split; the returned t is one above the single
    value, so the bright class is empty.
    """
    img = as_gray_image(img)
    hist = np.bincount(img.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    below = np.cumsum(hist)                     # pixels with value < t is below[t-1]
    below_weighted = np.cumsum(hist * np.arange(256))
    best_t, best_score = None, -1.0
    for t in range(1, 256):
        n0 = below[t - 1]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        mu0 = below_weighted[t - 1] / n0
        mu1 = (below_weighted[255] - below_weighted[t - 1]) / n1
        score = n0 * n1 * (mu0 - mu1) ** 2
        if score > best_score:
            best_t, best_score = t, score
    if best_t is None:
        return int(img.flat[0]) + 1
    return best_t


def compute_markers(pre, disk_radius=8, border_erosion_radius=2, threshold=None) -> MarkerSet:
    """Derive watershed markers from a preprocessed slice.

    Opening- then closing-by-reconstruction with a disk flattens texture
    inside bright and dark structures; the regional maxima of that image
    above a threshold are foreground markers, while sub-threshold maxima
    plus the eroded dark area form the background markers. An empty
    foreground is a legal result meaning "no candidate on this slice".

    ``threshold`` swaps the bright/dark split strategy: pass an integer
    or a callable mapping the smoothed image to one; default is Otsu.
    """
    pre = as_gray_image(pre)
    se = make_disk(disk_radius)
    smooth = close_by_reconstruction(open_by_reconstruction(pre, se), se)
    maxima = regional_maxima(smooth, connectivity=8)
    if threshold is None:
        t = otsu_threshold(smooth)
    elif callable(threshold):
        t = int(threshold(smooth))
    else:
        t = int(threshold)
    bright = smooth >= t

    foreground = maxima & bright

    labels, n = ndimage.label(maxima, structure=_FULL)
    dark_maxima = np.zeros_like(maxima)
    if n:
        # A regional maximum is a plateau, so one sample decides the component.
        comp_bright = ndimage.maximum(bright, labels, index=np.arange(1, n + 1))
        dark_ids = np.flatnonzero(~comp_bright.astype(bool)) + 1
        if dark_ids.size:
            dark_maxima = np.isin(labels, dark_ids)
    background = (dark_maxima | erode_mask(~bright, make_disk(border_erosion_radius))) & ~foreground
    return MarkerSet(foreground=foreground, background=background)


def _seed_labels(markers: MarkerSet):
    """Label marker components: foreground first, then background, 4-connected."""
    fg_labels, n_fg = ndimage.label(markers.foreground, structure=_CROSS)
    bg_labels, n_bg = ndimage.label(markers.background, structure=_CROSS)
    seeds = fg_labels.astype(np.int32)
    np.add(seeds, np.where(bg_labels > 0, bg_labels + n_fg, 0).astype(np.int32), out=seeds)
    return seeds, n_fg, n_bg


def _flood(values, seeds):
    """Priority flood over padded flat lists; returns int32 label grid.

    Pops in increasing pixel value; insertion order breaks ties (FIFO).
    A popped pixel adopting two different neighbor labels becomes ridge
    (0) and does not propagate. Pockets sealed off entirely by ridge
    pixels - possible only in degenerate marker geometries - are resolved
    by continuation passes and default to ridge if no basin can reach them.
    """
    h, w = values.shape
    wp = w + 2
    val = np.pad(values.astype(np.int32), 1).ravel().tolist()
    lab_arr = np.pad(seeds, 1, constant_values=-2)
    interior = lab_arr[1:-1, 1:-1]
    remaining = int(np.count_nonzero(interior == 0))
    interior[interior == 0] = -1
    lab = lab_arr.ravel().tolist()

    offsets = (-wp, -1, 1, wp)
    heap = []
    push = heapq.heappush
    pop = heapq.heappop
    queued = bytearray(len(lab))
    seq = 0

    def enqueue_frontier(adjacency):
        nonlocal seq
        grid = np.array(lab, dtype=np.int32).reshape(h + 2, wp)
        assigned = grid >= 0
        frontier = (grid == -1) & ndimage.binary_dilation(assigned, structure=adjacency)
        for idx in np.flatnonzero(frontier.ravel()).tolist():
            if not queued[idx]:
                queued[idx] = 1
                push(heap, (val[idx], seq, idx))
                seq += 1

    def drain(allow_orphan):
        nonlocal seq, remaining
        while heap:
            _, _, idx = pop(heap)
            first = 0
            conflict = False
            for off in offsets:
                neighbor = lab[idx + off]
                if neighbor > 0:
                    if first == 0:
                        first = neighbor
                    elif neighbor != first:
                        conflict = True
            lab[idx] = 0 if (conflict or first == 0) else first
            remaining -= 1
            if conflict and not allow_orphan:
                continue  # ridge does not propagate in the main pass
            for off in offsets:
                n = idx + off
                if lab[n] == -1 and not queued[n]:
                    queued[n] = 1
                    push(heap, (val[n], seq, n))
                    seq += 1

    enqueue_frontier(_CROSS)
    drain(allow_orphan=False)

    # Continuation for sealed pockets: seed from anything already assigned
    # (ridge included), 8-connected so diagonal-only necks are crossed too.
    while remaining > 0:
        before = remaining
        enqueue_frontier(_FULL)
        drain(allow_orphan=True)
        if remaining == before:
            break  # pixels unreachable even 8-connectedly cannot exist
    out = np.array(lab, dtype=np.int32).reshape(h + 2, wp)[1:-1, 1:-1]
    return np.ascontiguousarray(out)


def watershed(img, markers: MarkerSet):
    """Flood the image from the marker set; 0 marks ridge lines.

    Minima are imposed at every marker pixel first, so each marker
    component becomes one catchment basin. Deterministic: identical
    inputs give identical label grids.
    """
    img = as_gray_image(img)
    if markers.shape != img.shape:
        raise ShapeError(f"markers shape {markers.shape} does not match image {img.shape}")
    if not markers.any():
        raise NoMarkerError("both marker masks are empty")
    relief = impose_minima(img, markers.foreground | markers.background)
    seeds, _, _ = _seed_labels(markers)
    return _flood(relief, seeds)


def candidate_masks(labels, markers: MarkerSet):
    """Masks of basins seeded by foreground and untouched by background.

    Each mask is the basin plus its bounding ridge pixels; a ridge pixel
    shared between two candidate basins is assigned to the lower label so
    the masks stay pairwise disjoint.
    """
    labels = np.asarray(labels)
    if labels.shape != markers.shape:
        raise ShapeError(f"labels shape {labels.shape} does not match markers {markers.shape}")
    fg_ids = set(np.unique(labels[markers.foreground]).tolist())
    bg_ids = set(np.unique(labels[markers.background]).tolist())
    candidate_ids = sorted((fg_ids - bg_ids) - {0})

    ridge = labels == 0
    claimed = np.zeros(labels.shape, dtype=bool)
    masks = []
    for basin_id in candidate_ids:
        basin = labels == basin_id
        bounding = ridge & ndimage.binary_dilation(basin, structure=_FULL) & ~claimed
        mask = basin | bounding
        claimed |= mask
        masks.append(mask)
    return masks


def extract_region(original, mask):
    """Keep the original pixels inside and on the mask, black out the rest."""
    original = as_gray_image(original, "original")
    mask = as_bool_mask(mask, original.shape)
    return np.where(mask, original, np.uint8(0))
