"""Local spectral histogram features.

A pixel's feature is the concatenation, over a small filter bank, of the
normalized histogram of filter responses inside a square window centered at
the pixel. Superpixel features average the pixel features of their members.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from skimage.color import rgb2lab

from spsg import kernels

CHANNEL = "channel"
LOG = "log"


@dataclass(frozen=True)
class Filter:
    """One filter of the bank.

    ``kind`` is ``"channel"`` (pass a Lab channel through) or ``"log"``
    (Laplacian of Gaussian at ``scale`` pixels applied to ``channel``).
    """

    kind: str
    channel: int = 0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in (CHANNEL, LOG):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError("filter scale must be positive")
        if self.channel not in (0, 1, 2):
            raise ValueError("channel must be 0, 1 or 2")


@dataclass(frozen=True)
class FilterBank:
    filters: tuple

    def __post_init__(self):
        object.__setattr__(self, "filters", tuple(self.filters))
        if not self.filters:
            raise ValueError("filter bank must not be empty")

    def __len__(self):
        return len(self.filters)

    @classmethod
    def default(cls):
        """L, a, b pass-through plus LoG at scales 1 and 2 on L."""
        return cls((
            Filter(CHANNEL, 0),
            Filter(CHANNEL, 1),
            Filter(CHANNEL, 2),
            Filter(LOG, 0, 1.0),
            Filter(LOG, 0, 2.0),
        ))


@dataclass(frozen=True)
class LshParams:
    window_radius: int = 9
    bins_per_filter: int = 11
    filter_bank: FilterBank = field(default_factory=FilterBank.default)

    def __post_init__(self):
        if self.window_radius < 1:
            raise ValueError("window_radius must be >= 1")
        if self.bins_per_filter < 2:
            raise ValueError("bins_per_filter must be >= 2")

    @property
    def dim(self):
        return self.bins_per_filter * len(self.filter_bank)


def to_lab(image):
    """Convert an RGB raster with values in [0, 1] to CIE Lab."""
    image = np.asarray(image, dtype=np.float64)
    if image.size == 0:
        raise ValueError("empty image")
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an H x W x 3 image, got shape {image.shape}")
    if not np.all(np.isfinite(image)):
        raise ValueError("image contains non-finite values")
    if image.min() < 0.0 or image.max() > 1.0:
        raise ValueError("RGB values must lie in [0, 1]")
    return rgb2lab(image)


def log_kernel(sigma):
    """Sampled zero-mean Laplacian-of-Gaussian kernel with radius ceil(4 sigma)."""
    radius = int(np.ceil(4.0 * sigma))
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    r2 = ax[:, None] ** 2 + ax[None, :] ** 2
    s2 = sigma * sigma
    k = -(1.0 - r2 / (2.0 * s2)) * np.exp(-r2 / (2.0 * s2)) / (np.pi * s2 * s2)
    return k - k.mean()


def compute_filter_responses(lab, bank):
    """Apply ``bank`` to a Lab raster; returns a list of H x W rasters."""
    lab = np.asarray(lab, dtype=np.float64)
    if lab.size == 0:
        raise ValueError("empty image")
    if lab.ndim != 3 or lab.shape[2] != 3:
        raise ValueError(f"expected an H x W x 3 raster, got shape {lab.shape}")
    if not np.all(np.isfinite(lab)):
        raise ValueError("raster contains non-finite values")
    out = []
    for f in bank.filters:
        channel = lab[..., f.channel]
        if f.kind == CHANNEL:
            out.append(channel.copy())
        else:
            out.append(ndimage.convolve(channel, log_kernel(f.scale), mode="reflect"))
    return out


def quantize(response, nbins):
    """Uniform bins over [min, max] of the raster; the last bin is closed."""
    lo, hi = float(response.min()), float(response.max())
    if hi <= lo:
        return np.zeros(response.shape, dtype=np.int64)
    idx = np.floor((response - lo) / (hi - lo) * nbins).astype(np.int64)
    return np.minimum(idx, nbins - 1)


def compute_lsh_features(responses, params):
    """Per-pixel local spectral histograms, shape H x W x d."""
    responses = [np.asarray(r, dtype=np.float64) for r in responses]
    if not responses:
        raise ValueError("no filter responses")
    shape = responses[0].shape
    if any(r.shape != shape for r in responses):
        raise ValueError("filter responses must share dimensions")
    B = params.bins_per_filter
    blocks = [kernels.window_histograms(quantize(r, B), B, params.window_radius)
              for r in responses]
    return np.concatenate(blocks, axis=2)


def superpixel_features(field, labels):
    """Average pixel features per superpixel; returns the d x n matrix X."""
    field = np.asarray(field, dtype=np.float64)
    labels = np.asarray(labels)
    if field.shape[:2] != labels.shape:
        raise ValueError("feature field and label map dimensions differ")
    d = field.shape[2]
    flat = labels.ravel()
    if flat.size and flat.min() < 0:
        raise ValueError("negative superpixel id")
    n = int(flat.max()) + 1 if flat.size else 0
    counts = np.bincount(flat, minlength=n)
    if np.any(counts == 0):
        raise ValueError(f"superpixel ids are not dense: {int(np.sum(counts == 0))} empty ids")
    pixels = field.reshape(-1, d)
    # shift by one member pixel so labels with a constant vector come out exact
    first = np.full(n, flat.size, dtype=np.int64)
    np.minimum.at(first, flat, np.arange(flat.size))
    ref = pixels[first]
    dev = pixels - ref[flat]
    X = np.empty((d, n))
    for c in range(d):
        X[c] = ref[:, c] + np.bincount(flat, weights=dev[:, c], minlength=n) / counts
    return X


def image_features(image, labels, params=None):
    """RGB image and superpixel labels to the feature matrix X (d x n)."""
    params = params or LshParams()
    responses = compute_filter_responses(to_lab(image), params.filter_bank)
    return superpixel_features(compute_lsh_features(responses, params), labels)
