"""Dense tensor operations for the forward network graph.

Everything is inference-mode numpy (float32, channels-first).  Spatial inputs
are ``(C, H, W)`` or ``(N, C, H, W)``; single images are promoted to a batch
of one internally and demoted on return.  Shape problems raise
:class:`ShapeError` naming the offending dimension.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels


class ShapeError(ValueError):
    """An input extent is incompatible with an operation or parameter set."""


def _as_pair(v, name):
    if isinstance(v, int):
        v = (v, v)
    v = tuple(int(x) for x in v)
    if len(v) != 2:
        raise ShapeError(f"{name} must be an int or a pair, got {v!r}")
    return v


def _f32(a):
    return np.ascontiguousarray(np.asarray(a, dtype=np.float32))


@dataclass
class ConvParams:
    """Weights for a 2-D convolution: weight (out, in, kh, kw), optional bias."""

    weight: np.ndarray
    bias: np.ndarray | None = None
    stride: tuple[int, int] = (1, 1)
    padding: tuple[int, int] = (0, 0)

    def __post_init__(self):
        self.weight = _f32(self.weight)
        if self.weight.ndim != 4:
            raise ShapeError(
                f"conv weight must be 4-D (out, in, kh, kw), got {self.weight.shape}")
        if self.bias is not None:
            self.bias = _f32(self.bias)
            if self.bias.shape != (self.weight.shape[0],):
                raise ShapeError(
                    f"conv bias shape {self.bias.shape} does not match "
                    f"{self.weight.shape[0]} output channels")
        self.stride = _as_pair(self.stride, "stride")
        self.padding = _as_pair(self.padding, "padding")
        if min(self.stride) < 1:
            raise ShapeError(f"stride must be positive, got {self.stride}")
        if min(self.padding) < 0:
            raise ShapeError(f"padding must be non-negative, got {self.padding}")

    @property
    def out_channels(self):
        return self.weight.shape[0]

    @property
    def in_channels(self):
        return self.weight.shape[1]


@dataclass
class NormParams:
    """Inference-mode affine normalization: gamma, beta, running mean/var."""

    gamma: np.ndarray
    beta: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    eps: float = 1e-5

    def __post_init__(self):
        self.gamma = _f32(self.gamma)
        self.beta = _f32(self.beta)
        self.mean = _f32(self.mean)
        self.var = _f32(self.var)
        c = self.gamma.shape
        for name in ("beta", "mean", "var"):
            if getattr(self, name).shape != c:
                raise ShapeError(f"norm {name} shape {getattr(self, name).shape} != {c}")
        if self.gamma.ndim != 1:
            raise ShapeError(f"norm parameters must be 1-D, got {self.gamma.shape}")
        if np.any(self.var < 0):
            raise ValueError("norm variance must be non-negative")
        if not self.eps > 0:
            raise ValueError(f"norm eps must be positive, got {self.eps}")

    @property
    def channels(self):
        return self.gamma.shape[0]


def _promote(x, name="input"):
    x = _f32(x)
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ShapeError(f"{name} must be 3-D (C,H,W) or 4-D (N,C,H,W), got {x.shape}")


def _demote(y, squeezed):
    return y[0] if squeezed else y


def conv2d(x, params: ConvParams):
    """2-D convolution (cross-correlation) with zero padding.

    Output extent per axis is floor((H + 2p - K) / stride) + 1.
    """
    x, squeezed = _promote(x)
    n, ci, h, w = x.shape
    if ci != params.in_channels:
        raise ShapeError(
            f"conv2d: input has {ci} channels (dimension {x.ndim - 3}), "
            f"weight expects {params.in_channels}")
    (sh, sw), (ph, pw) = params.stride, params.padding
    kh, kw = params.weight.shape[2], params.weight.shape[3]
    ho = (h + 2 * ph - kh) // sh + 1
    wo = (w + 2 * pw - kw) // sw + 1
    if ho < 1 or wo < 1:
        raise ShapeError(
            f"conv2d: spatial extent {h}x{w} too small for kernel "
            f"{kh}x{kw} with padding {params.padding}")
    xpad = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw))) if (ph or pw) else x
    bias = params.bias if params.bias is not None else np.zeros(
        params.out_channels, dtype=np.float32)
    out = kernels.conv2d_core(np.ascontiguousarray(xpad), params.weight, bias, sh, sw)
    return _demote(out, squeezed)


def affine_norm(x, params: NormParams):
    """Channelwise inference normalization: (x - mean) / sqrt(var + eps) * gamma + beta."""
    x, squeezed = _promote(x)
    if x.shape[1] != params.channels:
        raise ShapeError(
            f"affine_norm: input has {x.shape[1]} channels, parameters have "
            f"{params.channels}")
    scale = (params.gamma / np.sqrt(params.var + params.eps)).astype(np.float32)
    shift = (params.beta - params.mean * scale).astype(np.float32)
    out = x * scale[None, :, None, None] + shift[None, :, None, None]
    return _demote(out, squeezed)


def factorized_conv3(x, vert: ConvParams, horiz: ConvParams):
    """A 3x3 convolution factorized into a 3x1 followed by a 1x3."""
    if vert.weight.shape[2:] != (3, 1):
        raise ShapeError(f"vertical factor must be 3x1, got {vert.weight.shape[2:]}")
    if horiz.weight.shape[2:] != (1, 3):
        raise ShapeError(f"horizontal factor must be 1x3, got {horiz.weight.shape[2:]}")
    return conv2d(conv2d(x, vert), horiz)


@dataclass
class NBt1DWeights:
    """Weights of one non-bottleneck-1D residual block.

    Two factorized 3x3 convolutions with a normalization after each pair;
    an optional strided 1x1 projection aligns the residual when the block
    downsamples or changes width.  ``dropout_rate`` is recorded for parity
    with training-time configuration but has no effect at inference.
    """

    conv_v1: ConvParams
    conv_h1: ConvParams
    norm1: NormParams
    conv_v2: ConvParams
    conv_h2: ConvParams
    norm2: NormParams
    proj: ConvParams | None = None
    proj_norm: NormParams | None = None
    dropout_rate: float = 0.1

    def __post_init__(self):
        if not 0 <= self.dropout_rate < 1:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if (self.proj is None) != (self.proj_norm is None):
            raise ShapeError("projection conv and norm must be given together")


def nbt1d_block(x, w: NBt1DWeights, downsample: bool = False):
    """Apply one non-bottleneck-1D block: factorized convs + residual, final relu.

    With ``downsample`` the first factorized pair and the projection use
    stride 2, halving both spatial extents.
    """
    expect = (2, 2) if downsample else (1, 1)
    got = (w.conv_v1.stride[0], w.conv_h1.stride[1])
    if got != expect:
        raise ShapeError(
            f"nbt1d_block: downsample={downsample} expects factor strides {expect}, "
            f"weights have {got}")
    if downsample and w.proj is None:
        raise ShapeError("nbt1d_block: downsampling requires a residual projection")

    residual = x
    if w.proj is not None:
        residual = affine_norm(conv2d(x, w.proj), w.proj_norm)

    y = relu(conv2d(x, w.conv_v1))
    y = conv2d(y, w.conv_h1)
    y = relu(affine_norm(y, w.norm1))
    y = relu(conv2d(y, w.conv_v2))
    y = conv2d(y, w.conv_h2)
    y = affine_norm(y, w.norm2)
    # dropout sits here during training; identity at inference

    if y.shape != residual.shape:
        raise ShapeError(
            f"nbt1d_block: branch shape {y.shape} does not match residual "
            f"{residual.shape}")
    return relu(y + residual)


def bilinear_upsample_weights(channels: int) -> np.ndarray:
    """Per-channel 3x3 blur weights that make learned_upsample an exact
    (border-clamped) bilinear x2 interpolation at initialization."""
    k = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]],
                 dtype=np.float32) / 16.0
    return np.broadcast_to(k, (channels, 3, 3)).copy()


def learned_upsample(x, weights):
    """Double both spatial extents: nearest x2 then a per-channel learned
    3x3 blur with replicated borders.

    With :func:`bilinear_upsample_weights` this reproduces half-pixel-aligned
    bilinear interpolation exactly, clamped at the borders; constant inputs
    stay constant.  The blur weights are per-channel and trainable.
    """
    x, squeezed = _promote(x)
    weights = _f32(weights)
    if weights.ndim != 3 or weights.shape[1:] != (3, 3):
        raise ShapeError(f"upsample weights must be (C, 3, 3), got {weights.shape}")
    if weights.shape[0] != x.shape[1]:
        raise ShapeError(
            f"learned_upsample: input has {x.shape[1]} channels, weights have "
            f"{weights.shape[0]}")
    up = np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)
    pad = np.pad(up, ((0, 0), (0, 0), (1, 1), (1, 1)), mode="edge")
    out = kernels.depthwise3x3_core(np.ascontiguousarray(pad), weights)
    return _demote(out, squeezed)


def pool2d(x, window, stride=None, padding=0, mode="max"):
    """Max or average pooling.  Max pooling pads with -inf so padded
    positions never win; average pooling does not support padding."""
    if mode not in ("max", "avg"):
        raise ValueError(f"pool mode must be 'max' or 'avg', got {mode!r}")
    x, squeezed = _promote(x)
    kh, kw = _as_pair(window, "window")
    sh, sw = _as_pair(stride if stride is not None else (kh, kw), "stride")
    ph, pw = _as_pair(padding, "padding")
    if mode == "avg" and (ph or pw):
        raise ShapeError("average pooling does not support padding")
    h, w = x.shape[2], x.shape[3]
    if h + 2 * ph < kh or w + 2 * pw < kw:
        raise ShapeError(
            f"pool2d: window {kh}x{kw} exceeds padded extent "
            f"{h + 2 * ph}x{w + 2 * pw}")
    if mode == "max":
        if ph or pw:
            x = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)),
                       constant_values=-np.inf)
        out = kernels.maxpool_core(np.ascontiguousarray(x), kh, kw, sh, sw)
    else:
        out = kernels.avgpool_core(np.ascontiguousarray(x), kh, kw, sh, sw)
    return _demote(out, squeezed)


def adaptive_avg_pool(x, out_hw):
    """Average pooling onto a fixed output grid (bin edges at i*H/out)."""
    x, squeezed = _promote(x)
    oh, ow = _as_pair(out_hw, "output size")
    n, c, h, w = x.shape
    if oh > h or ow > w:
        raise ShapeError(f"adaptive pool target {oh}x{ow} exceeds input {h}x{w}")
    out = np.empty((n, c, oh, ow), dtype=np.float32)
    for i in range(oh):
        r0, r1 = i * h // oh, -(-(i + 1) * h // oh)
        for j in range(ow):
            c0, c1 = j * w // ow, -(-(j + 1) * w // ow)
            out[:, :, i, j] = x[:, :, r0:r1, c0:c1].mean(axis=(2, 3), dtype=np.float64)
    return _demote(out, squeezed)


def global_avg_pool(x):
    """Mean over the spatial extents, keeping them as size-1 axes."""
    x, squeezed = _promote(x)
    out = x.mean(axis=(2, 3), keepdims=True, dtype=np.float64).astype(np.float32)
    return _demote(out, squeezed)


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float32), np.float32(0))


def sigmoid(x):
    x = np.asarray(x, dtype=np.float32)
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z)).astype(np.float32)


def tanh(x):
    return np.tanh(np.asarray(x, dtype=np.float32))


def softmax(x, axis=0):
    x = np.asarray(x, dtype=np.float64)
    x = x - x.max(axis=axis, keepdims=True)
    e = np.exp(x)
    return (e / e.sum(axis=axis, keepdims=True)).astype(np.float32)


def fully_connected(x, weight, bias=None):
    """Dense layer on a flattened input: weight (out, in), optional bias."""
    x = np.asarray(x, dtype=np.float32).reshape(-1)
    weight = _f32(weight)
    if weight.ndim != 2:
        raise ShapeError(f"fc weight must be 2-D (out, in), got {weight.shape}")
    if x.size != weight.shape[1]:
        raise ShapeError(
            f"fully_connected: flattened input length {x.size} does not match "
            f"weight input extent {weight.shape[1]}")
    y = weight @ x
    if bias is not None:
        bias = _f32(bias)
        if bias.shape != (weight.shape[0],):
            raise ShapeError(
                f"fc bias shape {bias.shape} does not match {weight.shape[0]} outputs")
        y = y + bias
    return y.astype(np.float32)
