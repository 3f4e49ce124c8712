# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled versions of the loops in ``_pykernels``; same signatures, same tap order."""
import numpy as np


def delayed_convolve_multi(const double[:, :, ::1] history,
                           const Py_ssize_t[:, ::1] delays,
                           const double[:, :, ::1] weights):
    cdef Py_ssize_t n = weights.shape[0]
    cdef Py_ssize_t kh = weights.shape[1]
    cdef Py_ssize_t kw = weights.shape[2]
    cdef Py_ssize_t h = history.shape[1]
    cdef Py_ssize_t w = history.shape[2]
    cdef Py_ssize_t ry = kh // 2
    cdef Py_ssize_t rx = kw // 2
    cdef Py_ssize_t i, j, k, y, x, dy, dx, y0, y1, x0, x1, d
    cdef double wt
    cdef const double* src
    cdef double* dst

    out_arr = np.zeros((n, h, w))
    cdef double[:, :, ::1] out = out_arr

    with nogil:
        for i in range(kh):
            dy = i - ry
            y0 = dy if dy > 0 else 0
            y1 = h + dy if dy < 0 else h
            if y0 >= y1:
                continue
            for j in range(kw):
                dx = j - rx
                x0 = dx if dx > 0 else 0
                x1 = w + dx if dx < 0 else w
                if x0 >= x1:
                    continue
                d = delays[i, j]
                for k in range(n):
                    wt = weights[k, i, j]
                    if wt == 0.0:
                        continue
                    for y in range(y0, y1):
                        src = &history[d, y - dy, 0]
                        dst = &out[k, y, 0]
                        for x in range(x0, x1):
                            dst[x] = dst[x] + wt * src[x - dx]
    return out_arr


def convolve2d(const double[:, ::1] image, const double[:, ::1] weights):
    delays = np.zeros((weights.shape[0], weights.shape[1]), dtype=np.intp)
    hist = np.asarray(image)[None]
    return delayed_convolve_multi(hist, delays, np.asarray(weights)[None])[0]
