# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Same contracts and bit-identical outputs as :mod:`spsg._fallback`.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, INFINITY

cnp.import_array()


cdef inline void _insert_desc(double* buf, Py_ssize_t j, double v) noexcept nogil:
    cdef Py_ssize_t q = j
    while q > 0 and buf[q - 1] < v:
        buf[q] = buf[q - 1]
        q -= 1
    buf[q] = v


def project_simplex_columns(M):
    cdef double[:, ::1] src = np.ascontiguousarray(M, dtype=np.float64)
    cdef Py_ssize_t l = src.shape[0], n = src.shape[1]
    out_arr = np.empty((l, n), dtype=np.float64)
    if l == 0 or n == 0:
        return out_arr
    cdef double[:, ::1] out = out_arr
    cdef double[::1] srt = np.empty(l, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double cs, t, tau, v
    with nogil:
        for i in range(n):
            for j in range(l):
                _insert_desc(&srt[0], j, src[j, i])
            cs = 0.0
            tau = 0.0
            for j in range(l):
                cs = cs + srt[j]
                t = (cs - 1.0) / <double>(j + 1)
                if srt[j] - t > 0:
                    tau = t
            for j in range(l):
                v = src[j, i] - tau
                out[j, i] = v if v > 0.0 else 0.0
    return out_arr


def window_histograms(bins, Py_ssize_t nbins, Py_ssize_t radius):
    cdef cnp.int64_t[:, ::1] b = np.ascontiguousarray(bins, dtype=np.int64)
    cdef Py_ssize_t H = b.shape[0], W = b.shape[1]
    out_arr = np.zeros((H, W, nbins), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    # column counts over the current vertical band, per column and bin
    cdef cnp.int64_t[:, ::1] colcount = np.zeros((W, nbins), dtype=np.int64)
    cdef cnp.int64_t[::1] run = np.zeros(nbins, dtype=np.int64)
    cdef Py_ssize_t y, x, k, yy, y0, y1, x0, x1, x_in, x_out
    cdef Py_ssize_t band_lo = 0, band_hi = 0
    cdef double area
    with nogil:
        for y in range(H):
            y0 = y - radius if y > radius else 0
            y1 = y + radius + 1 if y + radius + 1 < H else H
            # slide the band [band_lo, band_hi) to [y0, y1)
            while band_hi < y1:
                for x in range(W):
                    colcount[x, b[band_hi, x]] += 1
                band_hi += 1
            while band_lo < y0:
                for x in range(W):
                    colcount[x, b[band_lo, x]] -= 1
                band_lo += 1
            for k in range(nbins):
                run[k] = 0
            x1 = radius + 1 if radius + 1 < W else W
            for x_in in range(x1):
                for k in range(nbins):
                    run[k] += colcount[x_in, k]
            for x in range(W):
                x0 = x - radius if x > radius else 0
                x1 = x + radius + 1 if x + radius + 1 < W else W
                area = <double>((y1 - y0) * (x1 - x0))
                for k in range(nbins):
                    out[y, x, k] = run[k] / area
                # advance window to x + 1
                x_in = x + radius + 1
                if x_in < W:
                    for k in range(nbins):
                        run[k] += colcount[x_in, k]
                x_out = x - radius
                if x_out >= 0:
                    for k in range(nbins):
                        run[k] -= colcount[x_out, k]
    return out_arr


def slic_assign(lab, centers, double step, double compactness):
    cdef double[:, :, ::1] img = np.ascontiguousarray(lab, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(centers, dtype=np.float64)
    cdef Py_ssize_t H = img.shape[0], W = img.shape[1], K = c.shape[0]
    labels_arr = np.full((H, W), -1, dtype=np.int64)
    dist_arr = np.full((H, W), np.inf)
    cdef cnp.int64_t[:, ::1] labels = labels_arr
    cdef double[:, ::1] dist = dist_arr
    cdef Py_ssize_t s = <Py_ssize_t>ceil(step)
    cdef double w2 = (compactness / step) * (compactness / step)
    cdef Py_ssize_t k, y, x, ylo, yhi, xlo, xhi, icy, icx
    cdef double cl, ca, cb, cy, cx, dl, da, db, dy, dx, d
    with nogil:
        for k in range(K):
            cl = c[k, 0]
            ca = c[k, 1]
            cb = c[k, 2]
            cy = c[k, 3]
            cx = c[k, 4]
            icy = <Py_ssize_t>cy
            icx = <Py_ssize_t>cx
            ylo = icy - s if icy - s > 0 else 0
            yhi = icy + s + 1 if icy + s + 1 < H else H
            xlo = icx - s if icx - s > 0 else 0
            xhi = icx + s + 1 if icx + s + 1 < W else W
            for y in range(ylo, yhi):
                dy = <double>y - cy
                for x in range(xlo, xhi):
                    dx = <double>x - cx
                    dl = img[y, x, 0] - cl
                    da = img[y, x, 1] - ca
                    db = img[y, x, 2] - cb
                    d = ((dl * dl + da * da) + db * db) + w2 * (dy * dy + dx * dx)
                    if d < dist[y, x]:
                        dist[y, x] = d
                        labels[y, x] = k
    return labels_arr, dist_arr
