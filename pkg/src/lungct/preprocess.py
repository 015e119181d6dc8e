"""Per-slice preprocessing that primes a CT image for watershed segmentation.

The chain, in order: blacken the top/bottom bands (no anatomy of interest
there, only isolated artifacts), boost the tumour intensity band while
flattening everything else, superimpose a dark central strip so the
trachea region merges with its surrounding wall, then a closing/opening
pass to fill gaps inside bright structures and cut thin attachments.
"""

import numpy as np

from .base import ParamsMixin
from .morphology import close_image, make_disk, open_image
from .validation import as_gray_image, check_fraction, round_half_away

BAND_LOW_TARGET = 210   # tumour band lands on 210..230
BAND_OUT_TARGET = 10    # everything else lands on 10..30
BAND_SPAN = 20
STRIP_VALUE = 20        # middle of the suppressed 10..30 range


def blackout_bands(img, fraction=0.20):
    """Zero the top and bottom ``fraction`` of image rows."""
    check_fraction(fraction, "fraction", 0.0, 0.5, inclusive_high=False)
    img = as_gray_image(img)
    rows = int(np.floor(fraction * img.shape[0]))
    if rows == 0:
        return img.copy()
    out = img.copy()
    out[:rows, :] = 0
    out[-rows:, :] = 0
    return out


def _remap_lut(band_lo, band_hi):
    values = np.arange(256, dtype=np.float64)
    outside = BAND_OUT_TARGET + round_half_away(BAND_SPAN * values / 255.0)
    inside = BAND_LOW_TARGET + round_half_away(
        BAND_SPAN * (values - band_lo) / (band_hi - band_lo)
    )
    in_band = (values >= band_lo) & (values <= band_hi)
    return np.where(in_band, inside, outside).astype(np.uint8)


def remap_intensity(img, band_lo=110, band_hi=130):
    """Step the [band_lo, band_hi] range up to 210..230, everything else down to 10..30."""
    if not 0 <= band_lo < band_hi <= 255:
        raise ValueError(f"need 0 <= band_lo < band_hi <= 255, got {band_lo}, {band_hi}")
    img = as_gray_image(img)
    return _remap_lut(band_lo, band_hi)[img]


def apply_central_strip(img, width_fraction=0.06, blackout_fraction=0.20, value=STRIP_VALUE):
    """Paint a vertical strip of ``value`` through the image center.

    The strip is ``floor(width_fraction * width)`` pixels wide, widened to
    the symmetric odd span around the central column, and only covers rows
    between the blackout bands. A fraction too small to reach one pixel is
    the identity.
    """
    check_fraction(width_fraction, "width_fraction", 0.0, 0.3, inclusive_low=False)
    check_fraction(blackout_fraction, "blackout_fraction", 0.0, 0.5, inclusive_high=False)
    img = as_gray_image(img)
    height, width = img.shape
    strip = int(np.floor(width_fraction * width))
    if strip == 0:
        return img.copy()
    half = strip // 2
    center = width // 2
    band = int(np.floor(blackout_fraction * height))
    out = img.copy()
    out[band : height - band, max(0, center - half) : min(width, center + half + 1)] = value
    return out


def cleanup(img, close_radius=3, open_radius=3):
    """Close then open with small disks: fill interior gaps, detach thin bridges."""
    if close_radius < 1 or open_radius < 1:
        raise ValueError("cleanup radii must be >= 1")
    closed = close_image(img, make_disk(close_radius))
    return open_image(closed, make_disk(open_radius))


def preprocess_slice(
    img,
    blackout_fraction=0.20,
    band_lo=110,
    band_hi=130,
    strip_width_fraction=0.06,
    cleanup_radius_close=3,
    cleanup_radius_open=3,
):
    """Full preprocessing chain on one slice; deterministic, pure."""
    out = blackout_bands(img, blackout_fraction)
    out = remap_intensity(out, band_lo, band_hi)
    out = apply_central_strip(out, strip_width_fraction, blackout_fraction)
    return cleanup(out, cleanup_radius_close, cleanup_radius_open)


class SlicePreprocessor(ParamsMixin):
    """Estimator-style wrapper over the preprocessing chain.

    Stateless: ``fit`` records nothing and exists so the class slots into
    pipeline tooling; ``transform`` accepts one slice or a slice stack.
    """

    def __init__(
        self,
        blackout_fraction=0.20,
        band_lo=110,
        band_hi=130,
        strip_width_fraction=0.06,
        cleanup_radius_close=3,
        cleanup_radius_open=3,
    ):
        self.blackout_fraction = blackout_fraction
        self.band_lo = band_lo
        self.band_hi = band_hi
        self.strip_width_fraction = strip_width_fraction
        self.cleanup_radius_close = cleanup_radius_close
        self.cleanup_radius_open = cleanup_radius_open

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        X = np.asarray(X)
        if X.ndim == 2:
            return self._one(X)
        if X.ndim == 3:
            return np.stack([self._one(sl) for sl in X])
        raise ValueError(f"expected a slice or slice stack, got shape {X.shape}")

    def _one(self, img):
        return preprocess_slice(
            img,
            blackout_fraction=self.blackout_fraction,
            band_lo=self.band_lo,
            band_hi=self.band_hi,
            strip_width_fraction=self.strip_width_fraction,
            cleanup_radius_close=self.cleanup_radius_close,
            cleanup_radius_open=self.cleanup_radius_open,
        )
