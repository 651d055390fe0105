"""Bottom-up panoptic instance codec.

Instances are represented densely: a center heatmap (max-combined Gaussians
at the rounded instance centroids) plus per-pixel 2-D offsets pointing at the
owning center, normalized by the image extents.  Decoding inverts this with
keypoint non-maximum suppression followed by nearest-center grouping of the
offset-shifted foreground pixels.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class CodecConfig:
    """Knobs of the instance target codec.

    sigma: Gaussian spread of the center heatmap in pixels.
    center_threshold: minimum heatmap score tau for a decoded center.
    nms_pool_size: odd window extent of the keypoint max filter.
    top_k: maximum number of decoded centers per image.
    unknown_distance: fraction of the image diagonal beyond which an
        offset-shifted pixel is left unassigned.
    min_area_fraction: instances covering a smaller fraction of the image
        are dropped when encoding targets.
    """

    sigma: float = 8.0
    center_threshold: float = 0.1
    nms_pool_size: int = 17
    top_k: int = 64
    unknown_distance: float = 0.05
    min_area_fraction: float = 0.0025

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.center_threshold < 1:
            raise ValueError(
                f"center_threshold must be in (0, 1), got {self.center_threshold}")
        if self.nms_pool_size < 3 or self.nms_pool_size % 2 == 0:
            raise ValueError(
                f"nms_pool_size must be odd and >= 3, got {self.nms_pool_size}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if not self.unknown_distance > 0:
            raise ValueError(
                f"unknown_distance must be positive, got {self.unknown_distance}")
        if not 0 < self.min_area_fraction < 1:
            raise ValueError(
                f"min_area_fraction must be in (0, 1), got {self.min_area_fraction}")


@dataclass
class InstanceTargets:
    """Dense training targets produced by :func:`encode_targets`."""

    heatmap: np.ndarray       # (1, H, W) float32 in [0, 1]
    offsets: np.ndarray       # (2, H, W) float32, (row, col) / (H, W)
    center_mask: np.ndarray   # (H, W) bool, pixels with valid center/offset targets
    thing_mask: np.ndarray    # (H, W) bool, thing-class pixels


@dataclass
class DetectedInstance:
    """One grouped instance: id, seed center, score and its pixel set."""

    id: int
    center: tuple[int, int]
    score: float
    pixels: tuple[np.ndarray, np.ndarray]  # (rows, cols) index arrays
    semantic_class: int | None = None
    orientation_deg: float | None = None

    @property
    def area(self) -> int:
        return int(len(self.pixels[0]))


def _check_instance_map(instance_map):
    inst = np.asarray(instance_map)
    if inst.ndim != 2:
        raise ValueError(f"instance map must be 2-D, got shape {inst.shape}")
    if not np.issubdtype(inst.dtype, np.integer):
        raise ValueError(f"instance map must be integer, got dtype {inst.dtype}")
    if inst.size and inst.min() < 0:
        raise ValueError("instance ids must be non-negative")
    return inst


def filter_small_instances(instance_map, min_area_fraction: float):
    """Zero out instances whose area fraction is below ``min_area_fraction``.

    The rule is inclusive: an instance exactly at the threshold is kept.
    Comparison happens on the area fraction, so e.g. 25 pixels on a 100x100
    map survive a 0.25% threshold while 24 do not.
    """
    inst = _check_instance_map(instance_map)
    if not 0 < min_area_fraction < 1:
        raise ValueError(
            f"min_area_fraction must be in (0, 1), got {min_area_fraction}")
    total = inst.shape[0] * inst.shape[1]
    out = inst.copy()
    ids, counts = np.unique(inst, return_counts=True)
    for inst_id, area in zip(ids.tolist(), counts.tolist()):
        if inst_id > 0 and area / total < min_area_fraction:
            out[out == inst_id] = 0
    return out


def instance_centers(instance_map) -> dict[int, tuple[int, int]]:
    """Rounded (half-up) centroid of every instance id > 0."""
    inst = _check_instance_map(instance_map)
    centers = {}
    for inst_id in np.unique(inst).tolist():
        if inst_id <= 0:
            continue
        rows, cols = np.nonzero(inst == inst_id)
        cr = int(np.floor(rows.mean() + 0.5))
        cc = int(np.floor(cols.mean() + 0.5))
        centers[inst_id] = (cr, cc)
    return centers


def encode_targets(instance_map, cfg: CodecConfig, thing_mask=None) -> InstanceTargets:
    """Instance id map -> dense center heatmap and normalized offsets.

    Instances below ``cfg.min_area_fraction`` are dropped first.  The heatmap
    is the pixelwise maximum of unit-height Gaussians at the rounded
    centroids; offsets store (center - pixel) divided by (H, W) and are zero
    off the instance pixels.
    """
    inst = filter_small_instances(instance_map, cfg.min_area_fraction)
    h, w = inst.shape
    if thing_mask is None:
        thing_mask = inst > 0
    else:
        thing_mask = np.asarray(thing_mask)
        if thing_mask.shape != inst.shape or thing_mask.dtype != bool:
            raise ValueError("thing_mask must be a bool map matching the instance map")

    centers = instance_centers(inst)
    offsets = np.zeros((2, h, w), dtype=np.float32)
    for inst_id, (cr, cc) in centers.items():
        rows, cols = np.nonzero(inst == inst_id)
        offsets[0][rows, cols] = (cr - rows) / h
        offsets[1][rows, cols] = (cc - cols) / w

    if centers:
        pts = np.array(list(centers.values()), dtype=np.int64)
    else:
        pts = np.zeros((0, 2), dtype=np.int64)
    heatmap = kernels.render_gaussian_max(h, w, pts, float(cfg.sigma))

    return InstanceTargets(
        heatmap=heatmap[None],
        offsets=offsets,
        center_mask=inst > 0,
        thing_mask=thing_mask,
    )


def _heatmap_2d(heatmap):
    hm = np.asarray(heatmap, dtype=np.float32)
    if hm.ndim == 3:
        if hm.shape[0] != 1:
            raise ValueError(f"heatmap must be (1, H, W) or (H, W), got {hm.shape}")
        hm = hm[0]
    if hm.ndim != 2:
        raise ValueError(f"heatmap must be (1, H, W) or (H, W), got {hm.shape}")
    if not np.all(np.isfinite(hm)):
        raise ValueError("heatmap contains non-finite values")
    return np.ascontiguousarray(hm)


def decode_centers(heatmap, cfg: CodecConfig) -> list[tuple[int, int, float]]:
    """Keypoint NMS on a center heatmap.

    Keeps local maxima of the ``nms_pool_size`` window scoring at least
    ``center_threshold``; of equal-scoring maxima closer than the window
    radius only the first in (score desc, row, col) order survives.  At most
    ``top_k`` centers are returned, ordered by (score desc, row, col).
    """
    hm = _heatmap_2d(heatmap)
    wm = kernels.window_max_core(hm, int(cfg.nms_pool_size))
    cand = (hm >= cfg.center_threshold) & (hm == wm)
    rows, cols = np.nonzero(cand)
    if len(rows) == 0:
        return []
    scores = hm[rows, cols]
    order = np.lexsort((cols, rows, -scores.astype(np.float64)))
    radius = (cfg.nms_pool_size - 1) // 2
    kept: list[tuple[int, int, float]] = []
    for idx in order:
        r, c, s = int(rows[idx]), int(cols[idx]), float(scores[idx])
        if any(abs(r - kr) <= radius and abs(c - kc) <= radius for kr, kc, _ in kept):
            continue
        kept.append((r, c, s))
        if len(kept) == cfg.top_k:
            break
    return kept


def group_pixels(centers, offsets, foreground, cfg: CodecConfig) -> list[DetectedInstance]:
    """Assign foreground pixels to decoded centers through the offset field.

    Every foreground pixel moves by its denormalized offset and joins the
    nearest center; pixels farther than ``unknown_distance`` times the image
    diagonal from every center stay unassigned, as do all pixels when there
    are no centers.  Centers are ranked by (score desc, row, col); instance
    ids are 1-based ranks and centers that attract no pixels are dropped.
    """
    offsets = np.asarray(offsets, dtype=np.float32)
    if offsets.ndim != 3 or offsets.shape[0] != 2:
        raise ValueError(f"offsets must be (2, H, W), got {offsets.shape}")
    fg = np.asarray(foreground)
    if fg.shape != offsets.shape[1:] or fg.dtype != bool:
        raise ValueError("foreground must be a bool map matching the offsets")
    h, w = fg.shape

    ranked = sorted(centers, key=lambda t: (-t[2], t[0], t[1]))
    rows, cols = np.nonzero(fg)
    if not ranked or len(rows) == 0:
        return []

    dr = offsets[0][rows, cols].astype(np.float64) * h
    dc = offsets[1][rows, cols].astype(np.float64) * w
    pts = np.array([(r, c) for r, c, _ in ranked], dtype=np.float64)
    max_dist = cfg.unknown_distance * float(np.hypot(h, w))
    assign = kernels.assign_pixels_core(
        rows.astype(np.int64), cols.astype(np.int64), dr, dc, pts, max_dist)

    out = []
    for k, (r, c, s) in enumerate(ranked):
        sel = assign == k
        if not np.any(sel):
            continue
        out.append(DetectedInstance(
            id=k + 1, center=(r, c), score=s,
            pixels=(rows[sel].copy(), cols[sel].copy())))
    return out


def instances_to_labelmap(instances, shape) -> np.ndarray:
    """Paint instance ids into an int32 (H, W) map; overlap is an error."""
    out = np.zeros(shape, dtype=np.int32)
    for inst in instances:
        rows, cols = inst.pixels
        if np.any(out[rows, cols]):
            raise ValueError(f"instance {inst.id} overlaps an earlier instance")
        out[rows, cols] = inst.id
    return out
