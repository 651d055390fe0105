"""Unit tests for the dense tensor ops.

The convolution / pooling / upsampling results are checked against slow,
obviously-correct reference implementations written with explicit loops
(float64 throughout), not against the library's own kernels.
"""

import dataclasses

import numpy as np
import pytest

from emsa.tensorops import (
    ConvParams,
    NBt1DWeights,
    NormParams,
    ShapeError,
    adaptive_avg_pool,
    affine_norm,
    bilinear_upsample_weights,
    conv2d,
    factorized_conv3,
    fully_connected,
    global_avg_pool,
    learned_upsample,
    nbt1d_block,
    pool2d,
    relu,
    sigmoid,
    softmax,
    tanh,
)

from conftest import backend_modules


# ---------------------------------------------------------------------------
# reference implementations (oracles)
# ---------------------------------------------------------------------------

def conv2d_ref(x, w, b, stride, pad):
    """Direct 7-loop cross-correlation in float64."""
    n, ci, h, wd = x.shape
    co, ci2, kh, kw = w.shape
    assert ci == ci2
    sh, sw = stride
    ph, pw = pad
    xp = np.zeros((n, ci, h + 2 * ph, wd + 2 * pw), dtype=np.float64)
    xp[:, :, ph:ph + h, pw:pw + wd] = x
    oh = (h + 2 * ph - kh) // sh + 1
    ow = (wd + 2 * pw - kw) // sw + 1
    out = np.zeros((n, co, oh, ow), dtype=np.float64)
    for nn in range(n):
        for oc in range(co):
            for i in range(oh):
                for j in range(ow):
                    acc = float(b[oc])
                    for ic in range(ci):
                        for di in range(kh):
                            for dj in range(kw):
                                acc += xp[nn, ic, i * sh + di, j * sw + dj] * w[oc, ic, di, dj]
                    out[nn, oc, i, j] = acc
    return out


def pool2d_ref(x, size, stride, pad, mode):
    c, h, w = x.shape
    if mode == "max":
        xp = np.full((c, h + 2 * pad, w + 2 * pad), -np.inf, dtype=np.float64)
    else:
        assert pad == 0
        xp = np.zeros((c, h, w), dtype=np.float64)
    xp[:, pad:pad + h, pad:pad + w] = x
    oh = (h + 2 * pad - size) // stride + 1
    ow = (w + 2 * pad - size) // stride + 1
    out = np.zeros((c, oh, ow), dtype=np.float64)
    for ic in range(c):
        for i in range(oh):
            for j in range(ow):
                win = xp[ic, i * stride:i * stride + size, j * stride:j * stride + size]
                out[ic, i, j] = win.max() if mode == "max" else win.mean()
    return out


def bilinear_x2_ref(plane):
    """Half-pixel, border-clamped bilinear x2 of a single 2-D plane."""
    h, w = plane.shape
    out = np.zeros((2 * h, 2 * w), dtype=np.float64)
    for i in range(2 * h):
        for j in range(2 * w):
            sy = (i + 0.5) / 2.0 - 0.5
            sx = (j + 0.5) / 2.0 - 0.5
            y0 = int(np.floor(sy))
            x0 = int(np.floor(sx))
            fy = sy - y0
            fx = sx - x0

            def at(r, c):
                return plane[min(max(r, 0), h - 1), min(max(c, 0), w - 1)]

            out[i, j] = (
                at(y0, x0) * (1 - fy) * (1 - fx)
                + at(y0, x0 + 1) * (1 - fy) * fx
                + at(y0 + 1, x0) * fy * (1 - fx)
                + at(y0 + 1, x0 + 1) * fy * fx
            )
    return out


def window_max_ref(x, k):
    r = k // 2
    h, w = x.shape
    out = np.empty_like(x)
    for i in range(h):
        for j in range(w):
            out[i, j] = x[max(0, i - r):i + r + 1, max(0, j - r):j + r + 1].max()
    return out


# ---------------------------------------------------------------------------
# conv2d
# ---------------------------------------------------------------------------

def test_conv2d_hand_values():
    x = np.ones((1, 1, 5, 5), dtype=np.float32)
    w = np.ones((1, 1, 3, 3), dtype=np.float32)
    p = ConvParams(weight=w, bias=np.zeros(1, dtype=np.float32), stride=1, padding=1)
    y = conv2d(x, p)
    assert y.shape == (1, 1, 5, 5)
    assert y[0, 0, 2, 2] == 9.0
    assert y[0, 0, 0, 0] == 4.0
    assert y[0, 0, 0, 2] == 6.0


def test_conv2d_identity_kernel(rng):
    x = rng.standard_normal((2, 3, 6, 7)).astype(np.float32)
    w = np.zeros((3, 3, 3, 3), dtype=np.float32)
    for c in range(3):
        w[c, c, 1, 1] = 1.0
    p = ConvParams(weight=w, bias=np.zeros(3, dtype=np.float32), stride=1, padding=1)
    np.testing.assert_array_equal(conv2d(x, p), x)


def test_conv2d_bias_only():
    x = np.zeros((1, 2, 4, 4), dtype=np.float32)
    w = np.zeros((3, 2, 1, 1), dtype=np.float32)
    b = np.array([1.5, -2.0, 0.25], dtype=np.float32)
    y = conv2d(x, ConvParams(weight=w, bias=b, stride=1, padding=0))
    for oc in range(3):
        assert np.all(y[0, oc] == b[oc])


def test_conv2d_matches_reference(rng):
    cases = [
        (1, 1, 1, (1, 1), (1, 1), (0, 0), 5, 5),
        (1, 3, 4, (3, 3), (1, 1), (1, 1), 6, 7),
        (2, 2, 5, (3, 3), (2, 2), (1, 1), 9, 8),
        (1, 4, 2, (3, 1), (2, 1), (1, 0), 8, 6),
        (1, 4, 2, (1, 3), (1, 2), (0, 1), 6, 8),
        (2, 1, 3, (7, 7), (2, 2), (3, 3), 14, 14),
        (1, 5, 5, (3, 3), (1, 1), (0, 0), 4, 4),
        (1, 2, 6, (1, 1), (2, 2), (0, 0), 7, 9),
    ]
    for n, ci, co, k, s, p, h, w in cases:
        x = rng.standard_normal((n, ci, h, w)).astype(np.float32)
        wt = rng.standard_normal((co, ci, k[0], k[1])).astype(np.float32)
        b = rng.standard_normal(co).astype(np.float32)
        got = conv2d(x, ConvParams(weight=wt, bias=b, stride=s, padding=p))
        want = conv2d_ref(x.astype(np.float64), wt.astype(np.float64), b, s, p)
        assert got.shape == want.shape
        np.testing.assert_allclose(got, want, rtol=1e-4, atol=1e-4)


def test_conv2d_output_extent_formula(rng):
    x = rng.standard_normal((1, 2, 9, 9)).astype(np.float32)
    w = np.zeros((4, 2, 3, 3), dtype=np.float32)
    p = ConvParams(weight=w, stride=2, padding=0)
    assert conv2d(x, p).shape == (1, 4, 4, 4)
    p = ConvParams(weight=w, stride=2, padding=1)
    assert conv2d(x, p).shape == (1, 4, 5, 5)


def test_conv2d_accepts_3d_input(rng):
    x = rng.standard_normal((2, 5, 5)).astype(np.float32)
    w = rng.standard_normal((3, 2, 3, 3)).astype(np.float32)
    p = ConvParams(weight=w, bias=np.zeros(3, dtype=np.float32), stride=1, padding=1)
    y3 = conv2d(x, p)
    y4 = conv2d(x[None], p)
    assert y3.shape == (3, 5, 5)
    np.testing.assert_array_equal(y3, y4[0])


def test_conv2d_channel_mismatch():
    x = np.zeros((1, 3, 5, 5), dtype=np.float32)
    w = np.zeros((2, 4, 3, 3), dtype=np.float32)
    with pytest.raises(ShapeError, match="channel"):
        conv2d(x, ConvParams(weight=w))


def test_conv2d_input_smaller_than_kernel():
    x = np.zeros((1, 1, 2, 2), dtype=np.float32)
    w = np.zeros((1, 1, 3, 3), dtype=np.float32)
    with pytest.raises(ShapeError):
        conv2d(x, ConvParams(weight=w))


def test_conv_params_validation():
    w = np.zeros((2, 1, 3, 3), dtype=np.float32)
    with pytest.raises(ShapeError):
        ConvParams(weight=w, bias=np.zeros(3, dtype=np.float32))
    with pytest.raises(ShapeError):
        ConvParams(weight=w, stride=0)
    with pytest.raises(ShapeError):
        ConvParams(weight=w, padding=-1)
    with pytest.raises(ShapeError):
        ConvParams(weight=w[0])


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------

def test_affine_norm_standardizes(rng):
    x = rng.standard_normal((3, 40, 40)).astype(np.float32) * 3.0 + 1.0
    mean = x.mean(axis=(1, 2))
    var = x.var(axis=(1, 2))
    p = NormParams(
        gamma=np.ones(3, dtype=np.float32),
        beta=np.zeros(3, dtype=np.float32),
        mean=mean.astype(np.float32),
        var=var.astype(np.float32),
        eps=1e-12,
    )
    y = affine_norm(x, p)
    np.testing.assert_allclose(y.mean(axis=(1, 2)), 0.0, atol=1e-4)
    np.testing.assert_allclose(y.var(axis=(1, 2)), 1.0, rtol=1e-3)


def test_affine_norm_hand_value():
    x = np.full((1, 2, 2), 5.0, dtype=np.float32)
    p = NormParams(
        gamma=np.array([2.0], dtype=np.float32),
        beta=np.array([1.0], dtype=np.float32),
        mean=np.array([3.0], dtype=np.float32),
        var=np.array([4.0], dtype=np.float32),
        eps=1e-12,
    )
    # (5 - 3) / 2 * 2 + 1 = 3
    np.testing.assert_allclose(affine_norm(x, p), 3.0, rtol=1e-6)


def test_norm_params_validation():
    ones = np.ones(2, dtype=np.float32)
    with pytest.raises(ValueError):
        NormParams(gamma=ones, beta=ones, mean=ones, var=-ones, eps=1e-5)
    with pytest.raises(ValueError):
        NormParams(gamma=ones, beta=ones, mean=ones, var=ones, eps=0.0)
    with pytest.raises(ShapeError):
        NormParams(gamma=ones, beta=np.ones(3, dtype=np.float32), mean=ones, var=ones)


# ---------------------------------------------------------------------------
# factorized conv + NBt1D block
# ---------------------------------------------------------------------------

def test_factorized_matches_rank1_full_conv(rng):
    # A 3x1 pass followed by a 1x3 pass equals one full 3x3 conv with the
    # outer-product kernel (single channel, zero bias).
    u = rng.standard_normal(3).astype(np.float32)
    v = rng.standard_normal(3).astype(np.float32)
    x = rng.standard_normal((1, 1, 8, 9)).astype(np.float32)
    pv = ConvParams(weight=u.reshape(1, 1, 3, 1), stride=1, padding=(1, 0))
    ph = ConvParams(weight=v.reshape(1, 1, 1, 3), stride=1, padding=(0, 1))
    got = factorized_conv3(x, pv, ph)
    full = np.outer(u, v).astype(np.float32).reshape(1, 1, 3, 3)
    want = conv2d(x, ConvParams(weight=full, stride=1, padding=1))
    np.testing.assert_allclose(got, want, rtol=1e-4, atol=1e-5)


def test_factorized_rejects_wrong_kernels():
    pv = ConvParams(weight=np.zeros((1, 1, 3, 3), np.float32), padding=1)
    ph = ConvParams(weight=np.zeros((1, 1, 1, 3), np.float32), padding=(0, 1))
    with pytest.raises(ShapeError):
        factorized_conv3(np.zeros((1, 1, 5, 5), np.float32), pv, ph)


def _random_nbt1d(rng, channels, downsample=False, in_channels=None, zero_gamma=True):
    cin = in_channels if in_channels is not None else channels

    def cp(co, ci, kh, kw, stride, pad):
        return ConvParams(
            weight=rng.standard_normal((co, ci, kh, kw)).astype(np.float32) * 0.3,
            bias=rng.standard_normal(co).astype(np.float32) * 0.1,
            stride=stride,
            padding=pad,
        )

    def npar(c, gamma=None):
        return NormParams(
            gamma=(gamma if gamma is not None else rng.standard_normal(c)).astype(np.float32),
            beta=rng.standard_normal(c).astype(np.float32) * 0.1,
            mean=rng.standard_normal(c).astype(np.float32) * 0.1,
            var=rng.uniform(0.5, 2.0, c).astype(np.float32),
        )

    s1 = (2, 1) if downsample else (1, 1)
    s2 = (1, 2) if downsample else (1, 1)
    proj = proj_norm = None
    if downsample or cin != channels:
        proj = cp(channels, cin, 1, 1, (2, 2) if downsample else (1, 1), 0)
        proj_norm = npar(channels)
    g2 = np.zeros(channels) if zero_gamma else rng.standard_normal(channels)
    return NBt1DWeights(
        conv_v1=cp(channels, cin, 3, 1, s1, (1, 0)),
        conv_h1=cp(channels, channels, 1, 3, s2, (0, 1)),
        norm1=npar(channels),
        conv_v2=cp(channels, channels, 3, 1, (1, 1), (1, 0)),
        conv_h2=cp(channels, channels, 1, 3, (1, 1), (0, 1)),
        norm2=npar(channels, gamma=g2),
        proj=proj,
        proj_norm=proj_norm,
        dropout_rate=0.1,
    )


def test_nbt1d_zero_gamma_is_identity(rng):
    # With the final norm gamma and beta at zero the residual branch
    # contributes nothing, so the block reduces to relu(x) exactly.
    for _ in range(10):
        blk = _random_nbt1d(rng, 6)
        blk.norm2.beta[:] = 0.0
        x = rng.standard_normal((6, 9, 11)).astype(np.float32)
        np.testing.assert_array_equal(nbt1d_block(x, blk), np.maximum(x, 0.0))


def test_nbt1d_zero_gamma_downsample_is_projected_relu(rng):
    blk = _random_nbt1d(rng, 8, downsample=True, in_channels=4)
    blk.norm2.beta[:] = 0.0
    x = rng.standard_normal((4, 10, 12)).astype(np.float32)
    want = np.maximum(affine_norm(conv2d(x, blk.proj), blk.proj_norm), 0.0)
    np.testing.assert_array_equal(nbt1d_block(x, blk, downsample=True), want)


def test_nbt1d_shapes(rng):
    blk = _random_nbt1d(rng, 8, downsample=True, in_channels=4, zero_gamma=False)
    x = rng.standard_normal((4, 16, 20)).astype(np.float32)
    assert nbt1d_block(x, blk, downsample=True).shape == (8, 8, 10)
    blk = _random_nbt1d(rng, 5, zero_gamma=False)
    x = rng.standard_normal((5, 7, 9)).astype(np.float32)
    assert nbt1d_block(x, blk).shape == (5, 7, 9)


def test_nbt1d_weights_validation(rng):
    blk = _random_nbt1d(rng, 4)
    with pytest.raises(ValueError):
        dataclasses.replace(blk, dropout_rate=1.5)
    with pytest.raises(ShapeError):
        dataclasses.replace(blk, proj=blk.conv_v1, proj_norm=None)
    # downsample strides demand a matching flag and a projection
    ds = _random_nbt1d(rng, 4, downsample=True)
    with pytest.raises(ShapeError):
        nbt1d_block(np.zeros((4, 8, 8), np.float32), ds, downsample=False)
    ds.proj = None
    ds.proj_norm = None
    with pytest.raises(ShapeError):
        nbt1d_block(np.zeros((4, 8, 8), np.float32), ds, downsample=True)


# ---------------------------------------------------------------------------
# upsampling
# ---------------------------------------------------------------------------

def test_bilinear_upsample_weights_values():
    w = bilinear_upsample_weights(3)
    assert w.shape == (3, 3, 3)
    np.testing.assert_allclose(
        w[0],
        np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]], dtype=np.float32) / 16.0,
    )


def test_learned_upsample_preserves_constants():
    for c in (1, 3):
        x = np.full((c, 4, 5), 2.5, dtype=np.float32)
        y = learned_upsample(x, bilinear_upsample_weights(c))
        assert y.shape == (c, 8, 10)
        np.testing.assert_array_equal(y, np.full((c, 8, 10), 2.5, dtype=np.float32))


def test_learned_upsample_matches_bilinear_reference(rng):
    for h, w in ((1, 1), (2, 3), (5, 7), (8, 8)):
        x = rng.standard_normal((2, h, w)).astype(np.float32)
        got = learned_upsample(x, bilinear_upsample_weights(2))
        for c in range(2):
            want = bilinear_x2_ref(x[c].astype(np.float64))
            np.testing.assert_allclose(got[c], want, rtol=1e-5, atol=1e-6)


def test_learned_upsample_general_kernel(rng):
    # A one-hot centre kernel must reduce to plain nearest x2.
    x = rng.standard_normal((3, 4, 6)).astype(np.float32)
    w = np.zeros((3, 3, 3), dtype=np.float32)
    w[:, 1, 1] = 1.0
    got = learned_upsample(x, w)
    want = np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)
    np.testing.assert_array_equal(got, want)


def test_learned_upsample_weight_validation():
    x = np.zeros((3, 4, 4), dtype=np.float32)
    with pytest.raises(ShapeError):
        learned_upsample(x, bilinear_upsample_weights(2))
    with pytest.raises(ShapeError):
        learned_upsample(x, np.zeros((3, 5, 5), dtype=np.float32))


# ---------------------------------------------------------------------------
# pooling
# ---------------------------------------------------------------------------

def test_pool2d_hand_values():
    x = np.arange(16, dtype=np.float32).reshape(1, 4, 4)
    y = pool2d(x, 2, stride=2, mode="max")
    np.testing.assert_array_equal(y[0], [[5, 7], [13, 15]])
    y = pool2d(x, 2, stride=2, mode="avg")
    np.testing.assert_array_equal(y[0], [[2.5, 4.5], [10.5, 12.5]])


def test_pool2d_matches_reference(rng):
    for size, stride, pad, mode in (
        (2, 2, 0, "max"), (3, 2, 1, "max"), (3, 1, 1, "max"), (2, 1, 0, "avg"),
        (3, 3, 0, "avg"), (3, 2, 0, "max"),
    ):
        x = rng.standard_normal((3, 9, 11)).astype(np.float32)
        got = pool2d(x, size, stride=stride, padding=pad, mode=mode)
        want = pool2d_ref(x.astype(np.float64), size, stride, pad, mode)
        np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-6)


def test_pool2d_default_stride_is_window(rng):
    x = rng.standard_normal((2, 8, 8)).astype(np.float32)
    np.testing.assert_array_equal(pool2d(x, 2), pool2d(x, 2, stride=2))


def test_pool2d_avg_rejects_padding():
    with pytest.raises(ShapeError):
        pool2d(np.zeros((1, 4, 4), np.float32), 3, stride=2, padding=1, mode="avg")


def test_pool2d_mode_validation():
    with pytest.raises(ValueError):
        pool2d(np.zeros((1, 4, 4), np.float32), 2, mode="median")


def test_global_avg_pool(rng):
    x = rng.standard_normal((5, 6, 7)).astype(np.float32)
    y = global_avg_pool(x)
    assert y.shape == (5, 1, 1)
    np.testing.assert_allclose(y[:, 0, 0], x.mean(axis=(1, 2)), rtol=1e-5)


def test_adaptive_avg_pool_even_division(rng):
    x = rng.standard_normal((2, 8, 8)).astype(np.float32)
    y = adaptive_avg_pool(x, 2)
    want = x.reshape(2, 2, 4, 2, 4).mean(axis=(2, 4))
    np.testing.assert_allclose(y, want, rtol=1e-5, atol=1e-6)


def test_adaptive_avg_pool_uneven_bins():
    x = np.arange(5, dtype=np.float32).reshape(1, 1, 5)
    x = np.broadcast_to(x, (1, 5, 5)).copy()
    y = adaptive_avg_pool(x, 2)
    # column bins over 5 positions: [0, 3) and [2, 5)
    np.testing.assert_allclose(y[0, 0], [1.0, 3.0], rtol=1e-6)


def test_adaptive_avg_pool_size_one_is_global(rng):
    x = rng.standard_normal((3, 7, 9)).astype(np.float32)
    np.testing.assert_allclose(adaptive_avg_pool(x, 1)[:, 0, 0], global_avg_pool(x)[:, 0, 0],
                               rtol=1e-5)


def test_adaptive_avg_pool_too_large():
    with pytest.raises(ShapeError):
        adaptive_avg_pool(np.zeros((1, 3, 3), np.float32), 4)


# ---------------------------------------------------------------------------
# activations and fully connected
# ---------------------------------------------------------------------------

def test_relu():
    x = np.array([-2.0, 0.0, 3.5], dtype=np.float32)
    np.testing.assert_array_equal(relu(x), [0.0, 0.0, 3.5])


def test_sigmoid_values_and_stability():
    np.testing.assert_allclose(sigmoid(np.zeros(1, np.float32)), 0.5)
    np.testing.assert_allclose(sigmoid(np.array([2.0], np.float32)),
                               1 / (1 + np.exp(-2.0)), rtol=1e-6)
    big = np.array([-1e5, 1e5], dtype=np.float32)
    with np.errstate(over="raise"):
        y = sigmoid(big)
    assert y[0] == 0.0 and y[1] == 1.0


def test_tanh_range(rng):
    x = rng.standard_normal(100).astype(np.float32) * 50
    assert np.all(np.abs(tanh(x)) <= 1.0)


def test_softmax_properties(rng):
    x = rng.standard_normal((7, 4, 5)).astype(np.float32) * 10
    s = softmax(x, axis=0)
    np.testing.assert_allclose(s.sum(axis=0), 1.0, atol=1e-6)
    np.testing.assert_array_equal(np.argmax(s, axis=0), np.argmax(x, axis=0))
    # shift invariance
    np.testing.assert_allclose(softmax(x + 100.0, axis=0), s, rtol=1e-5, atol=1e-9)


def test_fully_connected(rng):
    x = rng.standard_normal(6).astype(np.float32)
    w = rng.standard_normal((4, 6)).astype(np.float32)
    b = rng.standard_normal(4).astype(np.float32)
    got = fully_connected(x, w, b)
    np.testing.assert_allclose(got, w.astype(np.float64) @ x + b, rtol=1e-5, atol=1e-6)
    np.testing.assert_allclose(fully_connected(x, w), w.astype(np.float64) @ x,
                               rtol=1e-5, atol=1e-6)
    with pytest.raises(ShapeError):
        fully_connected(rng.standard_normal(5).astype(np.float32), w, b)


# ---------------------------------------------------------------------------
# backend parity: both kernel implementations agree with the references
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("name,mod", backend_modules())
def test_backend_conv_core(name, mod, rng):
    x = rng.standard_normal((2, 3, 9, 10)).astype(np.float32)
    w = rng.standard_normal((4, 3, 3, 3)).astype(np.float32)
    b = rng.standard_normal(4).astype(np.float32)
    xpad = np.ascontiguousarray(np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1))))
    got = mod.conv2d_core(xpad, w, b, 2, 2)
    want = conv2d_ref(x.astype(np.float64), w.astype(np.float64), b, (2, 2), (1, 1))
    np.testing.assert_allclose(got, want, rtol=1e-4, atol=1e-4)


@pytest.mark.parametrize("name,mod", backend_modules())
def test_backend_window_max_core(name, mod, rng):
    hm = rng.random((17, 23)).astype(np.float32)
    got = mod.window_max_core(hm, 5)
    np.testing.assert_array_equal(got, window_max_ref(hm, 5))


@pytest.mark.parametrize("name,mod", backend_modules())
def test_backend_gaussian_peak_values(name, mod):
    centers = np.array([[10.0, 12.0]], dtype=np.float64)
    hm = mod.render_gaussian_max(32, 32, centers, 8.0)
    assert hm.dtype == np.float32
    assert hm[10, 12] == 1.0
    np.testing.assert_allclose(hm[10, 20], np.exp(-0.5), rtol=1e-6)
    np.testing.assert_allclose(hm[18, 12], np.exp(-0.5), rtol=1e-6)


@pytest.mark.parametrize("name,mod", backend_modules())
def test_backend_assign_first_min_wins(name, mod):
    # a pixel equidistant from two centers goes to the first one
    rows = np.array([5], dtype=np.int64)
    cols = np.array([5], dtype=np.int64)
    dr = np.zeros(1, dtype=np.float64)
    dc = np.zeros(1, dtype=np.float64)
    centers = np.array([[5.0, 3.0], [5.0, 7.0]], dtype=np.float64)
    got = mod.assign_pixels_core(rows, cols, dr, dc, centers, 10.0)
    assert got.tolist() == [0]
    # beyond max_dist -> -1
    got = mod.assign_pixels_core(rows, cols, dr, dc, centers, 1.5)
    assert got.tolist() == [-1]


def test_backends_bitwise_identical(rng):
    mods = backend_modules()
    if len(mods) < 2:
        pytest.skip("numba backend not available")
    (_, a), (_, b) = mods
    x = rng.standard_normal((1, 4, 12, 14)).astype(np.float32)
    w = rng.standard_normal((5, 4, 3, 3)).astype(np.float32)
    bias = rng.standard_normal(5).astype(np.float32)
    hm = rng.random((31, 33)).astype(np.float32)
    centers = rng.uniform(0, 30, (6, 2)).astype(np.float64)
    rows = np.repeat(np.arange(31), 33).astype(np.int64)
    cols = np.tile(np.arange(33), 31).astype(np.int64)
    dr = rng.uniform(-15, 15, rows.size).astype(np.float64)
    dc = rng.uniform(-15, 15, rows.size).astype(np.float64)

    np.testing.assert_array_equal(a.window_max_core(hm, 17), b.window_max_core(hm, 17))
    np.testing.assert_array_equal(
        a.render_gaussian_max(31, 33, centers, 8.0),
        b.render_gaussian_max(31, 33, centers, 8.0))
    np.testing.assert_array_equal(
        a.assign_pixels_core(rows, cols, dr, dc, centers, 7.5),
        b.assign_pixels_core(rows, cols, dr, dc, centers, 7.5))
    np.testing.assert_allclose(
        a.conv2d_core(x, w, bias, 1, 1), b.conv2d_core(x, w, bias, 1, 1),
        rtol=1e-5, atol=1e-5)
    dwk = rng.standard_normal((4, 3, 3)).astype(np.float32)
    xpad = np.ascontiguousarray(np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)), mode="edge"))
    np.testing.assert_allclose(
        a.depthwise3x3_core(xpad, dwk), b.depthwise3x3_core(xpad, dwk),
        rtol=1e-6, atol=1e-6)
    np.testing.assert_array_equal(
        a.maxpool_core(x, 3, 3, 2, 2), b.maxpool_core(x, 3, 3, 2, 2))
    np.testing.assert_allclose(
        a.avgpool_core(x, 2, 2, 2, 2), b.avgpool_core(x, 2, 2, 2, 2),
        rtol=1e-6, atol=1e-7)
