"""Pure numpy implementations of the hot kernels.

These are drop-in replacements for the compiled routines in ``_kernels.pyx``
and must return bit-identical results for the same inputs.
"""

import numpy as np


def project_simplex_columns(M):
    """Project every column of ``M`` onto the probability simplex.

    Sort-based closed form: sort each column in descending order, find the
    last index where ``u_k - (cumsum_k - 1) / k`` stays positive and shift by
    the corresponding threshold.
    """
    M = np.ascontiguousarray(M, dtype=np.float64)
    l, n = M.shape
    if l == 0 or n == 0:
        return M.copy()
    u = -np.sort(-M, axis=0)
    css = np.cumsum(u, axis=0) - 1.0
    k = np.arange(1, l + 1, dtype=np.float64)[:, None]
    t = css / k
    positive = (u - t) > 0
    # last positive index per column; index 0 is always positive
    rho = l - 1 - np.argmax(positive[::-1], axis=0)
    tau = t[rho, np.arange(n)]
    return np.maximum(M - tau, 0.0)


def window_histograms(bins, nbins, radius):
    """Normalized histograms of ``bins`` over clipped square windows.

    Parameters
    ----------
    bins : (H, W) int array
        Bin index of every pixel, in ``[0, nbins)``.
    nbins : int
    radius : int
        Half-width of the ``(2r+1) x (2r+1)`` window.

    Returns
    -------
    (H, W, nbins) float64 array whose last axis sums to one.
    """
    bins = np.asarray(bins)
    H, W = bins.shape
    r = int(radius)
    onehot = np.zeros((H + 1, W + 1, nbins), dtype=np.int64)
    onehot[1:, 1:][np.arange(H)[:, None], np.arange(W)[None, :], bins] = 1
    integral = onehot.cumsum(axis=0).cumsum(axis=1)

    y0 = np.clip(np.arange(H) - r, 0, H)
    y1 = np.clip(np.arange(H) + r + 1, 0, H)
    x0 = np.clip(np.arange(W) - r, 0, W)
    x1 = np.clip(np.arange(W) + r + 1, 0, W)
    counts = (integral[y1][:, x1] - integral[y0][:, x1]
              - integral[y1][:, x0] + integral[y0][:, x0])
    area = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    return counts / area[:, :, None].astype(np.float64)


def slic_assign(lab, centers, step, compactness):
    """One SLIC assignment pass.

    Each center searches a ``2*step`` square around itself; every pixel takes
    the center with the smallest combined distance
    ``||lab - lab_c||^2 + (compactness / step)^2 * ||xy - xy_c||^2``.
    Pixels reached by no center get label -1 and infinite distance.
    """
    H, W, _ = lab.shape
    labels = np.full((H, W), -1, dtype=np.int64)
    dist = np.full((H, W), np.inf)
    s = int(np.ceil(step))
    w2 = (compactness / step) ** 2
    for k in range(centers.shape[0]):
        cl, ca, cb, cy, cx = centers[k]
        ylo, yhi = max(int(cy) - s, 0), min(int(cy) + s + 1, H)
        xlo, xhi = max(int(cx) - s, 0), min(int(cx) + s + 1, W)
        if ylo >= yhi or xlo >= xhi:
            continue
        patch = lab[ylo:yhi, xlo:xhi]
        yy = np.arange(ylo, yhi, dtype=np.float64)[:, None] - cy
        xx = np.arange(xlo, xhi, dtype=np.float64)[None, :] - cx
        d = ((patch[..., 0] - cl) ** 2 + (patch[..., 1] - ca) ** 2
             + (patch[..., 2] - cb) ** 2) + w2 * (yy * yy + xx * xx)
        sub = dist[ylo:yhi, xlo:xhi]
        better = d < sub
        sub[better] = d[better]
        labels[ylo:yhi, xlo:xhi][better] = k
    return labels, dist
