"""Initial over-segmentation: import or built-in SLIC, adjacency, sizes."""

from dataclasses import dataclass

import numpy as np
from skimage.measure import label as cc_label

from spsg import io, kernels
from spsg.features import to_lab


@dataclass(frozen=True)
class SuperpixelMap:
    """Per-pixel superpixel ids, dense in ``0..n-1``, each id 4-connected."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or labels.size == 0:
            raise ValueError("label map must be a nonempty 2-D array")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ValueError("label ids must be integers")
        labels = labels.astype(np.int64, copy=False)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def shape(self):
        return self.labels.shape

    @property
    def n(self):
        return int(self.labels.max()) + 1

    def validate(self):
        """Raise ``ValueError`` unless ids are dense and every region is connected."""
        lab = self.labels
        if lab.min() < 0:
            raise ValueError("negative superpixel id")
        counts = np.bincount(lab.ravel())
        if np.any(counts == 0):
            raise ValueError("superpixel ids are not dense")
        ncomp = cc_label(lab, background=-1, connectivity=1).max()
        if ncomp != len(counts):
            raise ValueError("some superpixels are not 4-connected")
        return self


def split_components(ids):
    """Give every 4-connected region of equal ids its own dense label.

    Labels follow first appearance in raster order.
    """
    ids = np.asarray(ids, dtype=np.int64)
    # skimage treats `background` specially; shift so no id collides with it
    comp = cc_label(ids - ids.min() + 1, background=0, connectivity=1)
    return comp.astype(np.int64) - 1


def import_labels(path, shape=None):
    """Read an external over-segmentation (16-bit PNG or CSV).

    Ids are relabeled densely and disconnected pieces of one id are split
    into separate superpixels.
    """
    ids = io.read_label_file(path)
    if shape is not None and tuple(ids.shape) != tuple(shape[:2]):
        raise ValueError(f"{path}: label map is {ids.shape}, image is {tuple(shape[:2])}")
    return SuperpixelMap(split_components(ids))


def sizes(spmap):
    return np.bincount(spmap.labels.ravel(), minlength=spmap.n)


def _grid_centers(lab, target_n, rng):
    H, W, _ = lab.shape
    step = np.sqrt(H * W / target_n)
    ny = max(1, int(round(H / step)))
    nx = max(1, int(round(W / step)))
    ys = (np.arange(ny) + 0.5) * H / ny
    xs = (np.arange(nx) + 0.5) * W / nx
    cy, cx = np.meshgrid(ys, xs, indexing="ij")
    cy = cy.ravel() + rng.uniform(-0.25, 0.25, cy.size)
    cx = cx.ravel() + rng.uniform(-0.25, 0.25, cx.size)
    cy = np.clip(cy, 0, H - 1)
    cx = np.clip(cx, 0, W - 1)
    iy, ix = cy.astype(int), cx.astype(int)
    centers = np.column_stack([lab[iy, ix], cy, cx])
    return centers, step


def _absorb_small(labels, min_size, lab):
    """Merge connected pieces smaller than ``min_size`` into a 4-neighbor.

    Each small piece joins the adjacent region with the closest mean Lab
    color, so fragments of a textured region stay on their side of an edge.
    """
    labels = split_components(labels)
    flat_lab = lab.reshape(-1, 3)
    while True:
        counts = np.bincount(labels.ravel())
        small = counts < min_size
        if not small.any() or len(counts) == 1:
            return labels
        means = np.column_stack([np.bincount(labels.ravel(), weights=flat_lab[:, c])
                                 for c in range(3)]) / counts[:, None]
        a = np.concatenate([labels[:, :-1].ravel(), labels[:-1, :].ravel()])
        b = np.concatenate([labels[:, 1:].ravel(), labels[1:, :].ravel()])
        diff = a != b
        a, b = a[diff], b[diff]
        src = np.concatenate([a, b])
        dst = np.concatenate([b, a])
        keep = small[src]
        src, dst = src[keep], dst[keep]
        if src.size == 0:
            return labels
        gap = np.sum((means[src] - means[dst]) ** 2, axis=1)
        order = np.lexsort((dst, -counts[dst], gap, src))
        src, dst = src[order], dst[order]
        first = np.ones(src.size, dtype=bool)
        first[1:] = src[1:] != src[:-1]
        target = np.arange(len(counts))
        # process smallest regions first; never merge into a region that is itself moving
        moved = np.zeros(len(counts), dtype=bool)
        for s, t in sorted(zip(src[first].tolist(), dst[first].tolist()),
                           key=lambda st: (counts[st[0]], st[0])):
            if moved[t]:
                continue
            target[s] = t
            moved[s] = True
        labels = split_components(target[labels])


def grid_slic(image, target_n, compactness=10.0, iterations=10, seed=0):
    """Built-in SLIC over-segmentation.

    k-means in joint (Lab, scaled position) space, seeded on a regular grid,
    followed by connectivity enforcement.
    """
    image = np.asarray(image, dtype=np.float64)
    if target_n < 2:
        raise ValueError("target_n must be >= 2")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    H, W = image.shape[:2]
    if target_n > H * W:
        raise ValueError(f"target_n={target_n} exceeds pixel count {H * W}")
    lab = np.ascontiguousarray(to_lab(image))
    rng = np.random.default_rng(seed)
    centers, step = _grid_centers(lab, target_n, rng)

    yy, xx = np.mgrid[0:H, 0:W]
    feats = np.concatenate([lab.reshape(-1, 3), yy.reshape(-1, 1), xx.reshape(-1, 1)], axis=1)
    labels = None
    for _ in range(iterations):
        labels, dist = kernels.slic_assign(lab, centers, step, compactness)
        orphan = labels < 0
        if orphan.any():
            # nearest center in the plane for pixels outside every search window
            py, px = np.nonzero(orphan)
            d2 = (py[:, None] - centers[None, :, 3]) ** 2 + (px[:, None] - centers[None, :, 4]) ** 2
            labels[py, px] = np.argmin(d2, axis=1)
        flat = labels.ravel()
        counts = np.bincount(flat, minlength=len(centers))
        alive = counts > 0
        new = np.empty_like(centers)
        for c in range(5):
            new[:, c] = np.bincount(flat, weights=feats[:, c], minlength=len(centers))
        new[alive] /= counts[alive, None]
        new[~alive] = centers[~alive]
        centers = new
    min_size = max(1, int(H * W / len(centers) / 4))
    return SuperpixelMap(_absorb_small(labels, min_size, lab))


@dataclass(frozen=True)
class AdjacencyGraph:
    """Edges between 4-adjacent superpixels.

    ``i < j`` elementwise, sorted lexicographically; ``pairs`` counts the
    boundary pixel pairs and ``bbar`` is the mean boundary strength in [0, 1].
    """

    n: int
    i: np.ndarray
    j: np.ndarray
    pairs: np.ndarray
    bbar: np.ndarray

    @property
    def edges(self):
        return list(zip(self.i.tolist(), self.j.tolist(), self.pairs.tolist(), self.bbar.tolist()))

    def __len__(self):
        return int(self.i.size)


def _pixel_pairs(shape):
    H, W = shape
    idx = np.arange(H * W).reshape(H, W)
    a = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    b = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    return a, b


def build_adjacency(spmap, image=None, boundary=None):
    """Adjacency graph with mean boundary strength per edge.

    Strength of a pixel pair is the Lab color difference rescaled so the
    largest difference between any two 4-adjacent pixels of the image is 1.
    With ``boundary`` (H x W in [0, 1]) the pair strength is the mean of the
    two boundary values instead.
    """
    labels = spmap.labels
    if boundary is None and image is None:
        raise ValueError("need an image or a boundary map")
    a, b = _pixel_pairs(labels.shape)
    if boundary is not None:
        boundary = np.asarray(boundary, dtype=np.float64)
        if boundary.shape != labels.shape:
            raise ValueError("boundary map dimensions differ from label map")
        flat = boundary.ravel()
        strength = 0.5 * (flat[a] + flat[b])
    else:
        image = np.asarray(image, dtype=np.float64)
        if image.shape[:2] != labels.shape:
            raise ValueError("image dimensions differ from label map")
        lab = to_lab(image).reshape(-1, 3)
        strength = np.sqrt(((lab[a] - lab[b]) ** 2).sum(axis=1))
        top = strength.max() if strength.size else 0.0
        strength = strength / top if top > 0 else np.zeros_like(strength)

    la, lb = labels.ravel()[a], labels.ravel()[b]
    cross = la != lb
    lo = np.minimum(la[cross], lb[cross])
    hi = np.maximum(la[cross], lb[cross])
    n = spmap.n
    if lo.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return AdjacencyGraph(n, empty, empty, empty, np.zeros(0))
    key = lo * n + hi
    uniq, inv = np.unique(key, return_inverse=True)
    pairs = np.bincount(inv)
    bbar = np.bincount(inv, weights=strength[cross]) / pairs
    return AdjacencyGraph(n, uniq // n, uniq % n, pairs, np.clip(bbar, 0.0, 1.0))
