"""Multi-task training losses.

All losses are plain evaluation functions (no autograd): they exist so that
target encodings, masking rules and the task weighting can be validated and
reported exactly.  Accumulation happens in float64.
"""

import warnings

from dataclasses import dataclass

import numpy as np

from .metrics import resize_nearest
from .orientation import von_mises_loss
from .spectrum import VOID_ID


@dataclass(frozen=True)
class TaskWeights:
    """Loss weights; the default 1 : 0.25 : 3 : 1 ordering is
    semantic : scene : instance : orientation."""

    semantic: float = 1.0
    scene: float = 0.25
    instance: float = 3.0
    orientation: float = 1.0

    def __post_init__(self):
        vals = (self.semantic, self.scene, self.instance, self.orientation)
        if any(not np.isfinite(v) or v < 0 for v in vals):
            raise ValueError(f"task weights must be finite and non-negative: {vals}")
        if sum(vals) == 0:
            raise ValueError("at least one task weight must be positive")

    @classmethod
    def parse(cls, text: str) -> "TaskWeights":
        """Parse 'sem:scene:instance:orientation', e.g. '1:0.25:3:1'."""
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(
                f"task weights must be 4 colon-separated numbers, got {text!r}")
        s, sc, i, o = (float(p) for p in parts)
        return cls(semantic=s, scene=sc, instance=i, orientation=o)


def _log_softmax(logits):
    x = np.asarray(logits, dtype=np.float64)
    x = x - x.max(axis=0, keepdims=True)
    return x - np.log(np.exp(x).sum(axis=0, keepdims=True))


def semantic_loss(logits_outputs, gt, class_weights=None) -> float:
    """Weighted cross-entropy summed over full and side outputs.

    ``logits_outputs`` is a sequence of (C, h, w) maps at possibly different
    scales; the ground truth is resized to each with nearest neighbor.
    Channel k scores class id k+1.  Void pixels contribute nothing to the
    numerator but stay in the pixel-count denominator, so images with more
    void are penalized less.
    """
    if not logits_outputs:
        raise ValueError("semantic_loss needs at least one logits map")
    gt = np.asarray(gt)
    if gt.ndim != 2:
        raise ValueError(f"ground truth must be 2-D, got {gt.shape}")
    c = np.asarray(logits_outputs[0]).shape[0]
    if class_weights is None:
        class_weights = np.ones(c, dtype=np.float64)
    else:
        class_weights = np.asarray(class_weights, dtype=np.float64)
        if class_weights.shape != (c,):
            raise ValueError(
                f"class_weights must have shape ({c},), got {class_weights.shape}")

    numer = 0.0
    denom = 0
    for logits in logits_outputs:
        logits = np.asarray(logits)
        if logits.ndim != 3 or logits.shape[0] != c:
            raise ValueError(
                f"every output must be ({c}, h, w), got {logits.shape}")
        h, w = logits.shape[1:]
        gt_s = resize_nearest(gt, (h, w))
        if gt_s.max(initial=0) > c:
            raise ValueError(
                f"ground truth holds class id {gt_s.max()}, logits cover 1..{c}")
        ls = _log_softmax(logits)
        rows, cols = np.nonzero(gt_s != VOID_ID)
        ch = gt_s[rows, cols] - 1
        numer += float(np.sum(class_weights[ch] * -ls[ch, rows, cols]))
        denom += h * w
    return numer / denom


def center_loss(pred, target, mask) -> float:
    """Mean squared error on the center heatmap over masked pixels."""
    pred = np.asarray(pred, dtype=np.float64).squeeze()
    target = np.asarray(target, dtype=np.float64).squeeze()
    mask = np.asarray(mask)
    if pred.shape != target.shape or pred.shape != mask.shape:
        raise ValueError(
            f"center pred {pred.shape}, target {target.shape} and mask "
            f"{mask.shape} must agree")
    if not np.any(mask):
        warnings.warn("center_loss: empty mask, contributing zero")
        return 0.0
    d = pred[mask] - target[mask]
    return float(np.mean(d * d))


def offset_loss(pred, target, mask) -> float:
    """Mean absolute error on the 2-channel offsets over masked pixels."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    mask = np.asarray(mask)
    if pred.shape != target.shape or pred.ndim != 3 or pred.shape[0] != 2:
        raise ValueError(
            f"offsets must both be (2, H, W), got {pred.shape} and {target.shape}")
    if mask.shape != pred.shape[1:]:
        raise ValueError(f"mask {mask.shape} does not match offsets {pred.shape}")
    if not np.any(mask):
        warnings.warn("offset_loss: empty mask, contributing zero")
        return 0.0
    return float(np.mean(np.abs(pred[:, mask] - target[:, mask])))


def scene_loss(logits, gt_index: int, epsilon: float = 0.1) -> float:
    """Label-smoothed cross-entropy on the scene logits.

    The smoothed target puts 1 - epsilon on the true class and spreads
    epsilon uniformly over the remaining K - 1 classes.
    """
    logits = np.asarray(logits, dtype=np.float64).reshape(-1)
    k = logits.size
    if k < 2:
        raise ValueError(f"scene loss needs at least 2 classes, got {k}")
    if not 0 <= epsilon < 1:
        raise ValueError(f"epsilon must be in [0, 1), got {epsilon}")
    if not 0 <= gt_index < k:
        raise ValueError(f"gt_index {gt_index} outside 0..{k - 1}")
    target = np.full(k, epsilon / (k - 1), dtype=np.float64)
    target[gt_index] = 1.0 - epsilon
    ls = _log_softmax(logits)
    return float(-(target * ls).sum())


def orientation_loss(pred_field, target_field, mask, kappa: float = 1.0) -> float:
    """Masked mean von Mises loss between two dense biternion fields."""
    pred = np.asarray(pred_field, dtype=np.float64)
    target = np.asarray(target_field, dtype=np.float64)
    mask = np.asarray(mask)
    if pred.shape != target.shape or pred.ndim != 3 or pred.shape[0] != 2:
        raise ValueError(
            f"orientation fields must both be (2, H, W), got {pred.shape} "
            f"and {target.shape}")
    if mask.shape != pred.shape[1:]:
        raise ValueError(f"mask {mask.shape} does not match field {pred.shape}")
    if not np.any(mask):
        warnings.warn("orientation_loss: empty mask, contributing zero")
        return 0.0
    p = np.stack([pred[0][mask], pred[1][mask]], axis=-1)
    t = np.stack([target[0][mask], target[1][mask]], axis=-1)
    return von_mises_loss(p, t, kappa=kappa)


def total_loss(semantic: float, scene: float, center: float, offset: float,
               orientation: float, weights: TaskWeights = TaskWeights()) -> float:
    """Weighted sum; the two instance losses share the instance weight."""
    parts = {"semantic": semantic, "scene": scene, "center": center,
             "offset": offset, "orientation": orientation}
    for task, value in parts.items():
        if not np.isfinite(value):
            raise ValueError(f"{task} loss is not finite: {value}")
    return (weights.semantic * semantic
            + weights.scene * scene
            + weights.instance * (center + offset)
            + weights.orientation * orientation)


def median_frequency_weights(class_pixel_counts) -> np.ndarray:
    """Median-frequency balancing weights from per-class pixel counts.

    ``class_pixel_counts`` is indexed by class id (entry 0 = void, ignored).
    Returns weights aligned to prediction channels (entry k scores class
    id k+1); absent classes get weight 0.
    """
    counts = np.asarray(class_pixel_counts, dtype=np.float64)
    if counts.ndim != 1 or counts.size < 2:
        raise ValueError("class_pixel_counts must be 1-D with void plus classes")
    if np.any(counts < 0):
        raise ValueError("pixel counts must be non-negative")
    freq = counts[1:]
    present = freq > 0
    if not np.any(present):
        raise ValueError("no non-void pixels in the counts")
    med = np.median(freq[present])
    weights = np.zeros_like(freq)
    weights[present] = med / freq[present]
    return weights
