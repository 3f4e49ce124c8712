"""Pure numpy reference for the hot convolution loops.

Accumulation order matches ``_ckernels.pyx`` tap for tap, so both backends
produce bit-identical output (the extension is built with fp contraction off).
"""
import numpy as np


def _tap_bounds(offset, size):
    # output rows/cols that receive input[index - offset] with zero padding
    lo = max(0, offset)
    hi = min(size, size + offset)
    return lo, hi


def delayed_convolve_multi(history, delays, weights):
    """Convolve a frame history with ``n`` kernels that share one delay map.

    history : (D+1, H, W) float64, ``history[d]`` is the frame ``d`` steps back
    delays  : (K, K) intp, per-tap delay into ``history``
    weights : (n, K, K) float64

    out[k, y, x] = sum_{v,u} history[delays[v,u], y-v, x-u] * weights[k, v, u]
    with zero padding outside the frame.
    """
    n, kh, kw = weights.shape
    _, h, w = history.shape
    ry, rx = kh // 2, kw // 2
    out = np.zeros((n, h, w))
    for i in range(kh):
        dy = i - ry
        y0, y1 = _tap_bounds(dy, h)
        if y0 >= y1:
            continue
        for j in range(kw):
            dx = j - rx
            x0, x1 = _tap_bounds(dx, w)
            if x0 >= x1:
                continue
            src = history[delays[i, j], y0 - dy:y1 - dy, x0 - dx:x1 - dx]
            for k in range(n):
                wt = weights[k, i, j]
                if wt == 0.0:
                    continue
                out[k, y0:y1, x0:x1] += wt * src
    return out


def convolve2d(image, weights):
    """Zero-padded 'same' convolution of one frame with one kernel."""
    delays = np.zeros(weights.shape, dtype=np.intp)
    return delayed_convolve_multi(image[None], delays, weights[None])[0]
