"""Numba-JIT kernel implementations.

Signatures mirror ``_kernels_numpy`` exactly.  Convolution goes through an
im2col buffer so the contraction itself runs in BLAS (np.dot); the remaining
kernels are plain loop nests, which is where the JIT actually wins.  Importing
this module without numba installed raises ImportError.
"""

import numpy as np

from numba import njit


@njit(cache=True)
def conv2d_core(xpad, w, bias, sh, sw):
    n, ci, hp, wp = xpad.shape
    co, _, kh, kw = w.shape
    ho = (hp - kh) // sh + 1
    wo = (wp - kw) // sw + 1
    cols = np.empty((n * ho * wo, ci * kh * kw), dtype=np.float32)
    for b in range(n):
        for i in range(ho):
            i0 = i * sh
            for j in range(wo):
                j0 = j * sw
                row = (b * ho + i) * wo + j
                p = 0
                for c in range(ci):
                    for di in range(kh):
                        for dj in range(kw):
                            cols[row, p] = xpad[b, c, i0 + di, j0 + dj]
                            p += 1
    flat = np.dot(cols, w.reshape(co, ci * kh * kw).T)
    out = np.empty((n, co, ho, wo), dtype=np.float32)
    for b in range(n):
        for i in range(ho):
            for j in range(wo):
                row = (b * ho + i) * wo + j
                for c in range(co):
                    out[b, c, i, j] = flat[row, c] + bias[c]
    return out


@njit(cache=True)
def depthwise3x3_core(xpad, w):
    n, c, hp, wp = xpad.shape
    h, wd = hp - 2, wp - 2
    out = np.zeros((n, c, h, wd), dtype=np.float32)
    for b in range(n):
        for ch in range(c):
            for di in range(3):
                for dj in range(3):
                    wv = w[ch, di, dj]
                    for i in range(h):
                        for j in range(wd):
                            out[b, ch, i, j] += wv * xpad[b, ch, i + di, j + dj]
    return out


@njit(cache=True)
def maxpool_core(xpad, kh, kw, sh, sw):
    n, c, hp, wp = xpad.shape
    ho = (hp - kh) // sh + 1
    wo = (wp - kw) // sw + 1
    out = np.empty((n, c, ho, wo), dtype=np.float32)
    for b in range(n):
        for ch in range(c):
            for i in range(ho):
                for j in range(wo):
                    m = xpad[b, ch, i * sh, j * sw]
                    for di in range(kh):
                        for dj in range(kw):
                            v = xpad[b, ch, i * sh + di, j * sw + dj]
                            if v > m:
                                m = v
                    out[b, ch, i, j] = m
    return out


@njit(cache=True)
def avgpool_core(x, kh, kw, sh, sw):
    n, c, hp, wp = x.shape
    ho = (hp - kh) // sh + 1
    wo = (wp - kw) // sw + 1
    out = np.empty((n, c, ho, wo), dtype=np.float32)
    inv = 1.0 / (kh * kw)
    for b in range(n):
        for ch in range(c):
            for i in range(ho):
                for j in range(wo):
                    s = 0.0
                    for di in range(kh):
                        for dj in range(kw):
                            s += x[b, ch, i * sh + di, j * sw + dj]
                    out[b, ch, i, j] = np.float32(s * inv)
    return out


@njit(cache=True)
def window_max_core(x, k):
    r = k // 2
    h, w = x.shape
    tmp = np.empty((h, w), dtype=x.dtype)
    for j in range(w):
        for i in range(h):
            lo = max(0, i - r)
            hi = min(h, i + r + 1)
            m = x[lo, j]
            for s in range(lo + 1, hi):
                if x[s, j] > m:
                    m = x[s, j]
            tmp[i, j] = m
    out = np.empty((h, w), dtype=x.dtype)
    for i in range(h):
        for j in range(w):
            lo = max(0, j - r)
            hi = min(w, j + r + 1)
            m = tmp[i, lo]
            for s in range(lo + 1, hi):
                if tmp[i, s] > m:
                    m = tmp[i, s]
            out[i, j] = m
    return out


@njit(cache=True)
def render_gaussian_max(h, w, centers, sigma):
    out = np.zeros((h, w), dtype=np.float64)
    inv = 1.0 / (2.0 * sigma * sigma)
    for idx in range(centers.shape[0]):
        cr = np.float64(centers[idx, 0])
        cc = np.float64(centers[idx, 1])
        for i in range(h):
            dr2 = (np.float64(i) - cr) ** 2
            for j in range(w):
                d2 = dr2 + (np.float64(j) - cc) ** 2
                v = np.exp(-d2 * inv)
                if v > out[i, j]:
                    out[i, j] = v
    return out.astype(np.float32)


@njit(cache=True)
def assign_pixels_core(rows, cols, dr, dc, centers, max_dist):
    npx = rows.shape[0]
    k = centers.shape[0]
    out = np.empty(npx, dtype=np.int64)
    thr2 = max_dist * max_dist
    for p in range(npx):
        pr = np.float64(rows[p]) + dr[p]
        pc = np.float64(cols[p]) + dc[p]
        best = -1
        bestd = np.inf
        for c in range(k):
            d2 = (pr - centers[c, 0]) ** 2 + (pc - centers[c, 1]) ** 2
            if d2 < bestd:
                bestd = d2
                best = c
        if bestd > thr2:
            best = -1
        out[p] = best
    return out
