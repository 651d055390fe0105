"""Forward network graph: dual encoders with attention fusion, a pooling
context module, and two decoders feeding the dense task heads.

The graph is a plain container of numpy weights built by
:func:`build_graph`; :func:`forward` runs a single RGB-D image through it.
Architecture outline (extents for a 480x640 input):

* RGB and depth encoders: 7x7 stem (1/2), 3x3 max pool (1/4), four stages
  of factorized residual blocks (3/4/6/3) reaching 1/32.  After the stem
  and every stage the depth features are fused into the RGB branch with
  squeeze-excitation gates over both modalities.
* Context module on the 1/32 features: adaptive-average-pool branches
  (1x1 global plus larger grids), each with a 1x1 conv, upsampled and
  fused back to the backbone width.  The global branch doubles as the
  scene-classification feature.
* Two structurally identical decoders (semantic, instance): three modules
  of 3x3 conv + three residual blocks + learned x2 upsampling, with
  projected encoder skips added at 1/16, 1/8 and 1/4.  The semantic
  decoder emits side outputs at 1/16 and 1/8.
* Heads at 1/4 followed by two learned x2 upsamplings: semantic logits,
  sigmoid center heatmap, tanh offsets, unit-normalized orientation
  biternions; scene logits come from a fully connected layer on the
  global context branch.
"""

import dataclasses
import json

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .container import ContainerError, load_tensor, save_tensor
from .tensorops import (ConvParams, NBt1DWeights, NormParams, ShapeError,
                        adaptive_avg_pool, affine_norm,
                        bilinear_upsample_weights, conv2d, fully_connected,
                        global_avg_pool, learned_upsample, nbt1d_block,
                        pool2d, relu, sigmoid, tanh)

ARCHIVE_FORMAT = "emsa-weights-v1"
_SE_REDUCTION = 16


@dataclass(frozen=True)
class GraphConfig:
    """Static shape plan of the network graph.

    Extents must be multiples of 32 (five downsamplings).  The channel plan
    is configurable mainly so tests can run tiny graphs; the defaults
    reproduce the full-size architecture.
    """

    height: int = 480
    width: int = 640
    num_semantic_classes: int = 40
    num_scene_classes: int = 10
    use_depth: bool = True
    encoder_channels: tuple = (64, 64, 128, 256, 512)
    stage_blocks: tuple = (3, 4, 6, 3)
    decoder_channels: tuple = (512, 256, 128)
    context_pool_sizes: tuple = (1, 2)
    head_upsample: str = "learned"
    dropout_rate: float = 0.1

    def __post_init__(self):
        for name in ("encoder_channels", "stage_blocks", "decoder_channels",
                     "context_pool_sizes"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        for side, v in (("height", self.height), ("width", self.width)):
            if v < 32 or v % 32:
                raise ValueError(f"{side} must be a positive multiple of 32, got {v}")
        if self.num_semantic_classes < 2:
            raise ValueError(
                f"need at least 2 semantic classes, got {self.num_semantic_classes}")
        if self.num_scene_classes < 2:
            raise ValueError(
                f"need at least 2 scene classes, got {self.num_scene_classes}")
        if len(self.encoder_channels) != 5 or min(self.encoder_channels) < 1:
            raise ValueError(
                "encoder_channels must be 5 positive ints (stem + 4 stages), "
                f"got {self.encoder_channels}")
        if len(self.stage_blocks) != 4 or min(self.stage_blocks) < 1:
            raise ValueError(
                f"stage_blocks must be 4 positive ints, got {self.stage_blocks}")
        if len(self.decoder_channels) != 3 or min(self.decoder_channels) < 1:
            raise ValueError(
                f"decoder_channels must be 3 positive ints, got {self.decoder_channels}")
        ctx_max = min(self.height, self.width) // 32
        if (not self.context_pool_sizes or 1 not in self.context_pool_sizes
                or len(set(self.context_pool_sizes)) != len(self.context_pool_sizes)):
            raise ValueError(
                "context_pool_sizes must be distinct and include 1, got "
                f"{self.context_pool_sizes}")
        if min(self.context_pool_sizes) < 1 or max(self.context_pool_sizes) > ctx_max:
            raise ValueError(
                f"context pool sizes must lie in 1..{ctx_max} for "
                f"{self.height}x{self.width} input, got {self.context_pool_sizes}")
        if self.head_upsample not in ("learned", "bilinear"):
            raise ValueError(
                f"head_upsample must be 'learned' or 'bilinear', got "
                f"{self.head_upsample!r}")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


@dataclass
class ConvBlock:
    conv: ConvParams
    norm: NormParams


@dataclass
class SEFusion:
    """Squeeze-excitation gates for both modalities at one fusion point."""

    rgb_fc1_w: np.ndarray
    rgb_fc1_b: np.ndarray
    rgb_fc2_w: np.ndarray
    rgb_fc2_b: np.ndarray
    depth_fc1_w: np.ndarray
    depth_fc1_b: np.ndarray
    depth_fc2_w: np.ndarray
    depth_fc2_b: np.ndarray


@dataclass
class EncoderStage:
    blocks: list


@dataclass
class Encoder:
    stem: ConvBlock
    stages: list


@dataclass
class ContextBranch:
    pool_size: int
    conv: ConvBlock


@dataclass
class ContextModule:
    branches: list
    fuse: ConvBlock


@dataclass
class DecoderModule:
    entry: ConvBlock
    blocks: list
    upsample: np.ndarray            # (C, 3, 3) learned x2 blur
    side: ConvParams | None = None  # optional side-output 1x1 conv


@dataclass
class Decoder:
    skip_projs: list
    modules: list


@dataclass
class Head:
    conv: ConvParams
    up1: np.ndarray
    up2: np.ndarray


@dataclass
class Graph:
    cfg: GraphConfig
    rgb_encoder: Encoder
    depth_encoder: Encoder | None
    fusions: list | None
    context: ContextModule
    scene_fc_w: np.ndarray
    scene_fc_b: np.ndarray
    semantic_decoder: Decoder
    instance_decoder: Decoder
    semantic_head: Head
    center_head: Head
    offset_head: Head
    orientation_head: Head


@dataclass
class ForwardOutputs:
    """Everything one forward pass produces.

    semantic_logits: (C_sem, H, W) raw scores, channel k = class id k+1.
    semantic_side: logits at 1/16 and 1/8 resolution (training supervision).
    center: (1, H, W) in [0, 1].
    offset: (2, H, W) in [-1, 1], normalized by (H, W).
    orientation: (2, H, W) unit-norm biternion per pixel.
    scene_logits: (C_scene,) raw scores, entry k = scene id k+1.
    """

    semantic_logits: np.ndarray
    semantic_side: list
    center: np.ndarray
    offset: np.ndarray
    orientation: np.ndarray
    scene_logits: np.ndarray


def _he(rng, shape, fan_in):
    std = np.float32(np.sqrt(2.0 / fan_in))
    return rng.standard_normal(shape, dtype=np.float32) * std


def _identity_norm(channels, zero_gamma=False):
    gamma = np.zeros(channels, np.float32) if zero_gamma else np.ones(channels, np.float32)
    return NormParams(gamma=gamma, beta=np.zeros(channels, np.float32),
                      mean=np.zeros(channels, np.float32),
                      var=np.ones(channels, np.float32))


def _conv(rng, cout, cin, kh, kw, stride=(1, 1), padding=(0, 0), bias=False):
    w = _he(rng, (cout, cin, kh, kw), fan_in=cin * kh * kw)
    b = np.zeros(cout, np.float32) if bias else None
    return ConvParams(weight=w, bias=b, stride=stride, padding=padding)


def _conv_block(rng, cout, cin, kh, kw, stride=(1, 1), padding=(0, 0)):
    return ConvBlock(conv=_conv(rng, cout, cin, kh, kw, stride, padding),
                     norm=_identity_norm(cout))


def _nbt1d(rng, cin, cout, downsample, dropout_rate):
    sv = (2, 1) if downsample else (1, 1)
    sh = (1, 2) if downsample else (1, 1)
    proj = proj_norm = None
    if downsample or cin != cout:
        proj = _conv(rng, cout, cin, 1, 1,
                     stride=(2, 2) if downsample else (1, 1))
        proj_norm = _identity_norm(cout)
    return NBt1DWeights(
        conv_v1=_conv(rng, cout, cin, 3, 1, stride=sv, padding=(1, 0)),
        conv_h1=_conv(rng, cout, cout, 1, 3, stride=sh, padding=(0, 1)),
        norm1=_identity_norm(cout),
        conv_v2=_conv(rng, cout, cout, 3, 1, padding=(1, 0)),
        conv_h2=_conv(rng, cout, cout, 1, 3, padding=(0, 1)),
        norm2=_identity_norm(cout, zero_gamma=True),
        proj=proj,
        proj_norm=proj_norm,
        dropout_rate=dropout_rate,
    )


def _encoder(rng, cfg, in_channels):
    stem_c, *stage_c = cfg.encoder_channels
    stem = _conv_block(rng, stem_c, in_channels, 7, 7, stride=(2, 2), padding=(3, 3))
    stages = []
    cin = stem_c
    for stage_idx, (cout, n_blocks) in enumerate(zip(stage_c, cfg.stage_blocks)):
        blocks = []
        for b in range(n_blocks):
            downsample = stage_idx > 0 and b == 0
            blocks.append(_nbt1d(rng, cin if b == 0 else cout, cout,
                                 downsample, cfg.dropout_rate))
        stages.append(EncoderStage(blocks=blocks))
        cin = cout
    return Encoder(stem=stem, stages=stages)


def _se_fusion(rng, channels):
    hidden = max(channels // _SE_REDUCTION, 4)

    def fc_pair():
        return (_he(rng, (hidden, channels), fan_in=channels),
                np.zeros(hidden, np.float32),
                _he(rng, (channels, hidden), fan_in=hidden),
                np.zeros(channels, np.float32))

    r1, rb1, r2, rb2 = fc_pair()
    d1, db1, d2, db2 = fc_pair()
    return SEFusion(rgb_fc1_w=r1, rgb_fc1_b=rb1, rgb_fc2_w=r2, rgb_fc2_b=rb2,
                    depth_fc1_w=d1, depth_fc1_b=db1, depth_fc2_w=d2,
                    depth_fc2_b=db2)


def _context(rng, cfg):
    cin = cfg.encoder_channels[-1]
    branch_c = max(cin // 2, 1)
    branches = [ContextBranch(pool_size=s, conv=_conv_block(rng, branch_c, cin, 1, 1))
                for s in cfg.context_pool_sizes]
    cat = cin + branch_c * len(branches)
    return ContextModule(branches=branches, fuse=_conv_block(rng, cin, cat, 1, 1)), branch_c


def _decoder(rng, cfg, with_sides):
    d = cfg.decoder_channels
    enc = cfg.encoder_channels
    skips_in = (enc[3], enc[2], enc[1])  # encoder channels at 1/16, 1/8, 1/4
    entries_in = (enc[4], d[0], d[1])
    skip_projs = [_conv_block(rng, d[i], skips_in[i], 1, 1) for i in range(3)]
    modules = []
    for i in range(3):
        blocks = [_nbt1d(rng, d[i], d[i], False, cfg.dropout_rate)
                  for _ in range(3)]
        side = None
        if with_sides and i < 2:
            side = _conv(rng, cfg.num_semantic_classes, d[i], 1, 1, bias=True)
        modules.append(DecoderModule(
            entry=_conv_block(rng, d[i], entries_in[i], 3, 3, padding=(1, 1)),
            blocks=blocks,
            upsample=bilinear_upsample_weights(d[i]),
            side=side,
        ))
    return Decoder(skip_projs=skip_projs, modules=modules)


def _head(rng, cfg, out_channels):
    return Head(conv=_conv(rng, out_channels, cfg.decoder_channels[2], 1, 1, bias=True),
                up1=bilinear_upsample_weights(out_channels),
                up2=bilinear_upsample_weights(out_channels))


def build_graph(cfg: GraphConfig, seed: int = 0) -> Graph:
    """Construct a graph with He-initialized convolutions.

    Normalizations start as identities except the final norm of every
    residual block, whose gamma is zero so each block begins as (projected)
    identity + relu.  Upsample blurs start as exact bilinear weights.  The
    same seed always yields the same weights.
    """
    rng = np.random.default_rng(seed)
    rgb_encoder = _encoder(rng, cfg, 3)
    depth_encoder = _encoder(rng, cfg, 1) if cfg.use_depth else None
    fusions = None
    if cfg.use_depth:
        fusions = [_se_fusion(rng, c) for c in cfg.encoder_channels]
    context, branch_c = _context(rng, cfg)
    scene_fc_w = _he(rng, (cfg.num_scene_classes, branch_c), fan_in=branch_c)
    scene_fc_b = np.zeros(cfg.num_scene_classes, np.float32)
    return Graph(
        cfg=cfg,
        rgb_encoder=rgb_encoder,
        depth_encoder=depth_encoder,
        fusions=fusions,
        context=context,
        scene_fc_w=scene_fc_w,
        scene_fc_b=scene_fc_b,
        semantic_decoder=_decoder(rng, cfg, with_sides=True),
        instance_decoder=_decoder(rng, cfg, with_sides=False),
        semantic_head=_head(rng, cfg, cfg.num_semantic_classes),
        center_head=_head(rng, cfg, 1),
        offset_head=_head(rng, cfg, 2),
        orientation_head=_head(rng, cfg, 2),
    )


def _se_gate(feat, w1, b1, w2, b2):
    z = global_avg_pool(feat).reshape(-1)
    return sigmoid(fully_connected(relu(fully_connected(z, w1, b1)), w2, b2))


def fuse_attention(fusion: SEFusion, rgb_feat, depth_feat):
    """Fuse depth features into the RGB stream with channel gates.

    Both feature maps are gated by their own squeeze-excitation weights and
    summed; all-zero depth features therefore leave only the gated RGB term.
    """
    rgb_feat = np.asarray(rgb_feat, dtype=np.float32)
    depth_feat = np.asarray(depth_feat, dtype=np.float32)
    if rgb_feat.shape != depth_feat.shape:
        raise ShapeError(
            f"fusion inputs differ: rgb {rgb_feat.shape}, depth {depth_feat.shape}")
    if rgb_feat.ndim != 3:
        raise ShapeError(f"fusion inputs must be (C, H, W), got {rgb_feat.shape}")
    g_r = _se_gate(rgb_feat, fusion.rgb_fc1_w, fusion.rgb_fc1_b,
                   fusion.rgb_fc2_w, fusion.rgb_fc2_b)
    g_d = _se_gate(depth_feat, fusion.depth_fc1_w, fusion.depth_fc1_b,
                   fusion.depth_fc2_w, fusion.depth_fc2_b)
    return (rgb_feat * g_r[:, None, None] + depth_feat * g_d[:, None, None])


def _stem_forward(enc, x):
    return relu(affine_norm(conv2d(x, enc.stem.conv), enc.stem.norm))


def _stage_forward(stage, x):
    for i, blk in enumerate(stage.blocks):
        x = nbt1d_block(x, blk, downsample=(i == 0 and blk.conv_v1.stride[0] == 2))
    return x


def _nearest_grid_resize(y, out_hw):
    # y: (C, s, s) -> (C, H, W) by floor index mapping (matches resize_nearest)
    c, h, w = y.shape
    oh, ow = out_hw
    ri = (np.arange(oh, dtype=np.int64) * h) // oh
    ci = (np.arange(ow, dtype=np.int64) * w) // ow
    return np.ascontiguousarray(y[:, ri][:, :, ci])


def _context_forward(ctx: ContextModule, x):
    feats = [x]
    scene_feat = None
    for br in ctx.branches:
        p = adaptive_avg_pool(x, (br.pool_size, br.pool_size))
        y = relu(affine_norm(conv2d(p, br.conv.conv), br.conv.norm))
        if br.pool_size == 1:
            scene_feat = y.reshape(-1)
        feats.append(_nearest_grid_resize(y, x.shape[1:]))
    cat = np.concatenate(feats, axis=0)
    out = relu(affine_norm(conv2d(cat, ctx.fuse.conv), ctx.fuse.norm))
    return out, scene_feat


def _decoder_forward(dec: Decoder, x, skips):
    sides = []
    for module, skip, proj in zip(dec.modules, skips, dec.skip_projs):
        x = relu(affine_norm(conv2d(x, module.entry.conv), module.entry.norm))
        for blk in module.blocks:
            x = nbt1d_block(x, blk)
        x = learned_upsample(x, module.upsample)
        x = x + affine_norm(conv2d(skip, proj.conv), proj.norm)
        if module.side is not None:
            sides.append(conv2d(x, module.side))
    return x, sides


def _head_forward(head: Head, x):
    y = conv2d(x, head.conv)
    y = learned_upsample(y, head.up1)
    return learned_upsample(y, head.up2)


def _unit_normalize(v):
    norm = np.sqrt(v[0] * v[0] + v[1] * v[1])
    out = np.empty_like(v)
    ok = norm > 1e-12
    out[0] = np.where(ok, v[0] / np.where(ok, norm, 1), 1.0)
    out[1] = np.where(ok, v[1] / np.where(ok, norm, 1), 0.0)
    return out


def forward(graph: Graph, rgb, depth=None) -> ForwardOutputs:
    """Run one image through the graph.

    ``rgb`` is (3, H, W); ``depth`` is (1, H, W) in meters with zeros for
    invalid measurements, required exactly when the graph was built with
    ``use_depth``.  Extents must match the graph configuration.
    """
    cfg = graph.cfg
    rgb = np.asarray(rgb, dtype=np.float32)
    if rgb.shape != (3, cfg.height, cfg.width):
        raise ShapeError(
            f"rgb must be (3, {cfg.height}, {cfg.width}), got {rgb.shape}")
    if cfg.use_depth:
        if depth is None:
            raise ShapeError("graph was built with use_depth; depth input missing")
        depth = np.asarray(depth, dtype=np.float32)
        if depth.shape != (1, cfg.height, cfg.width):
            raise ShapeError(
                f"depth must be (1, {cfg.height}, {cfg.width}), got {depth.shape}")
        if depth.min(initial=0.0) < 0:
            raise ValueError("depth values must be non-negative meters")
    elif depth is not None:
        raise ShapeError("graph was built without use_depth; depth must be None")

    x = _stem_forward(graph.rgb_encoder, rgb)
    if cfg.use_depth:
        xd = _stem_forward(graph.depth_encoder, depth)
        x = fuse_attention(graph.fusions[0], x, xd)
        xd = pool2d(xd, 3, stride=2, padding=1, mode="max")
    x = pool2d(x, 3, stride=2, padding=1, mode="max")

    skips = []
    for i in range(4):
        x = _stage_forward(graph.rgb_encoder.stages[i], x)
        if cfg.use_depth:
            xd = _stage_forward(graph.depth_encoder.stages[i], xd)
            x = fuse_attention(graph.fusions[i + 1], x, xd)
        skips.append(x)

    ctx, scene_feat = _context_forward(graph.context, skips[3])
    scene_logits = fully_connected(scene_feat, graph.scene_fc_w, graph.scene_fc_b)

    dec_skips = [skips[2], skips[1], skips[0]]
    sem_trunk, sides = _decoder_forward(graph.semantic_decoder, ctx, dec_skips)
    inst_trunk, _ = _decoder_forward(graph.instance_decoder, ctx, dec_skips)

    return ForwardOutputs(
        semantic_logits=_head_forward(graph.semantic_head, sem_trunk),
        semantic_side=sides,
        center=sigmoid(_head_forward(graph.center_head, inst_trunk)),
        offset=tanh(_head_forward(graph.offset_head, inst_trunk)),
        orientation=_unit_normalize(_head_forward(graph.orientation_head, inst_trunk)),
        scene_logits=scene_logits,
    )


def named_tensors(graph: Graph):
    """Yield (name, array) for every weight tensor, in a stable order."""
    out = []

    def walk(obj, prefix):
        if obj is None or isinstance(obj, GraphConfig):
            return
        if isinstance(obj, np.ndarray):
            out.append((prefix, obj))
        elif isinstance(obj, ConvParams):
            out.append((prefix + ".weight", obj.weight))
            if obj.bias is not None:
                out.append((prefix + ".bias", obj.bias))
        elif isinstance(obj, NormParams):
            for k in ("gamma", "beta", "mean", "var"):
                out.append((prefix + "." + k, getattr(obj, k)))
        elif dataclasses.is_dataclass(obj):
            for f in dataclasses.fields(obj):
                walk(getattr(obj, f.name), f"{prefix}.{f.name}" if prefix else f.name)
        elif isinstance(obj, (list, tuple)):
            for i, v in enumerate(obj):
                walk(v, f"{prefix}.{i}")

    walk(graph, "")
    return out


def save_archive(graph: Graph, archive_dir) -> None:
    """Write every tensor as a container file plus a JSON manifest."""
    d = Path(archive_dir)
    d.mkdir(parents=True, exist_ok=True)
    tensors = named_tensors(graph)
    manifest = {
        "format": ARCHIVE_FORMAT,
        "config": graph.cfg.to_dict(),
        "tensors": {name: {"file": name + ".emt", "shape": list(arr.shape)}
                    for name, arr in tensors},
    }
    for name, arr in tensors:
        save_tensor(d / (name + ".emt"), arr)
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def load_archive(archive_dir) -> Graph:
    """Rebuild a graph from an archive written by :func:`save_archive`."""
    d = Path(archive_dir)
    manifest_path = d / "manifest.json"
    if not manifest_path.is_file():
        raise FileNotFoundError(f"{manifest_path} does not exist")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise ContainerError(f"{manifest_path}: invalid JSON ({e})") from e
    if manifest.get("format") != ARCHIVE_FORMAT:
        raise ContainerError(
            f"{manifest_path}: format {manifest.get('format')!r}, expected "
            f"{ARCHIVE_FORMAT!r}")
    cfg = GraphConfig(**manifest["config"])
    graph = build_graph(cfg, seed=0)
    expected = dict(named_tensors(graph))
    listed = manifest["tensors"]
    if set(listed) != set(expected):
        missing = sorted(set(expected) - set(listed))[:3]
        extra = sorted(set(listed) - set(expected))[:3]
        raise ContainerError(
            f"{manifest_path}: tensor names do not match the config "
            f"(missing {missing}, unexpected {extra})")
    for name, arr in expected.items():
        loaded = load_tensor(d / listed[name]["file"])
        if loaded.shape != arr.shape:
            raise ContainerError(
                f"{name}: archive shape {loaded.shape} does not match "
                f"graph shape {arr.shape}")
        arr[...] = loaded
    return graph
