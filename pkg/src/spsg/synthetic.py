"""Synthetic inputs: random model instances and two-region test images."""

import numpy as np
import scipy.sparse as sp

from spsg.model import ModelInstance, dissimilarity, laplacian


def random_graph(rng, n, extra_edges=None):
    """Connected random graph: a path plus ``extra_edges`` random chords.

    Returns ``(i, j)`` arrays with ``i < j`` and no duplicates.
    """
    extra = n if extra_edges is None else extra_edges
    i = list(range(n - 1))
    j = list(range(1, n))
    if n > 2:
        a = rng.integers(0, n, extra)
        b = rng.integers(0, n, extra)
        keep = a != b
        i += np.minimum(a, b)[keep].tolist()
        j += np.maximum(a, b)[keep].tolist()
    key = np.unique(np.array(i, dtype=np.int64) * n + np.array(j, dtype=np.int64))
    return key // n, key % n


def random_weights(rng, n, extra_edges=None):
    """Sparse symmetric similarity with weights in (0, 1] on a random graph."""
    i, j = random_graph(rng, n, extra_edges)
    w = rng.uniform(0.05, 1.0, i.size)
    return sp.csr_matrix((np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
                         shape=(n, n))


def random_instance(rng, l, n, gamma=1.0, lam=0.0, d=8):
    """Model instance from random nonnegative features and dictionary.

    Features come from a handful of clusters so that instances resemble
    superpixels of a few coherent regions.
    """
    k = max(1, min(4, n // 2))
    centers = rng.random((d, k))
    X = np.clip(centers[:, rng.integers(0, k, n)] + 0.15 * rng.standard_normal((d, n)), 0, None)
    D = np.clip(X[:, rng.integers(0, n, l)] + 0.1 * rng.standard_normal((d, l)), 0, None)
    s = rng.integers(20, 400, n).astype(np.float64)
    W = random_weights(rng, n)
    return ModelInstance(dissimilarity(D, X), s / s.sum(), W, laplacian(W), float(gamma), float(lam))


def two_region_image(size=64, seed=0, noise=0.03):
    """RGB image with two textured regions and its ground-truth labels.

    The left region is a reddish vertical stripe texture; the right region is
    a bluish checker texture. The boundary is a gentle curve.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    boundary = size / 2 + 0.12 * size * np.sin(2 * np.pi * yy / size)
    gt = (xx >= boundary).astype(np.int64)

    img = np.empty((size, size, 3))
    stripes = 0.5 + 0.5 * np.sign(np.sin(2 * np.pi * xx / 4.0))
    left = np.stack([0.75 + 0.15 * stripes, 0.25 + 0.1 * stripes, 0.2 + 0.05 * stripes], axis=-1)
    checks = ((yy // 3 + xx // 3) % 2)
    right = np.stack([0.2 + 0.05 * checks, 0.35 + 0.15 * checks, 0.7 + 0.2 * checks], axis=-1)
    img[gt == 0] = left[gt == 0]
    img[gt == 1] = right[gt == 1]
    img += noise * rng.standard_normal(img.shape)
    return np.clip(img, 0.0, 1.0), gt
