"""Pure-numpy kernel implementations.

These are the reference implementations of the hot kernels; the numba
backend in ``_kernels_numba`` must agree with them to within floating-point
tolerance.  All functions assume validated, contiguous float32/int64 inputs
(the public wrappers take care of that) and any required padding has already
been applied by the caller.
"""

import numpy as np

from numpy.lib.stride_tricks import sliding_window_view


def conv2d_core(xpad, w, bias, sh, sw):
    # xpad: (n, ci, hp, wp) already zero-padded; w: (co, ci, kh, kw)
    kh, kw = w.shape[2], w.shape[3]
    win = sliding_window_view(xpad, (kh, kw), axis=(2, 3))
    win = win[:, :, ::sh, ::sw]
    out = np.tensordot(win, w, axes=[(1, 4, 5), (1, 2, 3)])
    out = np.ascontiguousarray(out.transpose(0, 3, 1, 2))
    out += bias[None, :, None, None]
    return out


def depthwise3x3_core(xpad, w):
    # xpad: (n, c, h+2, w+2); w: (c, 3, 3); one filter per channel
    n, c, hp, wp = xpad.shape
    h, wd = hp - 2, wp - 2
    out = np.zeros((n, c, h, wd), dtype=np.float32)
    for di in range(3):
        for dj in range(3):
            out += w[None, :, di, dj, None, None] * xpad[:, :, di:di + h, dj:dj + wd]
    return out


def maxpool_core(xpad, kh, kw, sh, sw):
    win = sliding_window_view(xpad, (kh, kw), axis=(2, 3))
    return np.ascontiguousarray(win[:, :, ::sh, ::sw].max(axis=(4, 5)))


def avgpool_core(x, kh, kw, sh, sw):
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))
    out = win[:, :, ::sh, ::sw].astype(np.float64).mean(axis=(4, 5))
    return np.ascontiguousarray(out.astype(np.float32))


def window_max_core(x, k):
    # Same-size max filter; positions outside the image do not contribute.
    r = k // 2
    h, w = x.shape
    tmp = x.copy()
    for s in range(1, r + 1):
        tmp[s:, :] = np.maximum(tmp[s:, :], x[:-s, :])
        tmp[:-s, :] = np.maximum(tmp[:-s, :], x[s:, :])
    out = tmp.copy()
    for s in range(1, r + 1):
        out[:, s:] = np.maximum(out[:, s:], tmp[:, :-s])
        out[:, :-s] = np.maximum(out[:, :-s], tmp[:, s:])
    return out


def render_gaussian_max(h, w, centers, sigma):
    # Max-combined unnormalized Gaussians, one per center, peak value 1.
    out = np.zeros((h, w), dtype=np.float64)
    if centers.shape[0]:
        rr = np.arange(h, dtype=np.float64)[:, None]
        cc = np.arange(w, dtype=np.float64)[None, :]
        inv = 1.0 / (2.0 * sigma * sigma)
        for i in range(centers.shape[0]):
            d2 = (rr - centers[i, 0]) ** 2 + (cc - centers[i, 1]) ** 2
            np.maximum(out, np.exp(-d2 * inv), out=out)
    return out.astype(np.float32)


def assign_pixels_core(rows, cols, dr, dc, centers, max_dist):
    # Nearest shifted-pixel-to-center assignment; -1 where the best center
    # is farther than max_dist.  First minimum wins ties.
    npx = rows.shape[0]
    out = np.empty(npx, dtype=np.int64)
    thr2 = max_dist * max_dist
    chunk = 65536
    for lo in range(0, npx, chunk):
        hi = min(lo + chunk, npx)
        pr = rows[lo:hi].astype(np.float64) + dr[lo:hi]
        pc = cols[lo:hi].astype(np.float64) + dc[lo:hi]
        d2 = (pr[:, None] - centers[None, :, 0]) ** 2
        d2 += (pc[:, None] - centers[None, :, 1]) ** 2
        best = np.argmin(d2, axis=1)
        bestd = d2[np.arange(hi - lo), best]
        best[bestd > thr2] = -1
        out[lo:hi] = best
    return out
