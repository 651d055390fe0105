"""Panoptic merging of semantic predictions and grouped instances.

The merge is instance-centric: every pixel of a grouped instance receives the
instance's majority-voted thing class together with the instance id, which
overrides the per-pixel semantic prediction there.  All remaining pixels keep
their semantic class with instance id 0.
"""

from dataclasses import dataclass

import numpy as np

from PIL import Image

from .codec import DetectedInstance
from .spectrum import ClassSpectrum, VOID_ID

PANOPTIC_ID_BASE = 1000  # encoded pixel = semantic_id * 1000 + instance_id
_PNG_MAX = 65535


@dataclass
class PanopticMap:
    """Paired semantic and instance id maps of one image."""

    semantic: np.ndarray  # (H, W) int
    instance: np.ndarray  # (H, W) int, 0 = no instance

    def __post_init__(self):
        self.semantic = np.asarray(self.semantic)
        self.instance = np.asarray(self.instance)
        for name in ("semantic", "instance"):
            a = getattr(self, name)
            if a.ndim != 2:
                raise ValueError(f"{name} map must be 2-D, got {a.shape}")
            if not np.issubdtype(a.dtype, np.integer):
                raise ValueError(f"{name} map must be integer, got {a.dtype}")
        if self.semantic.shape != self.instance.shape:
            raise ValueError(
                f"semantic {self.semantic.shape} and instance "
                f"{self.instance.shape} extents differ")
        if self.semantic.size:
            if self.semantic.min() < 0:
                raise ValueError("semantic ids must be non-negative")
            if self.instance.min() < 0 or self.instance.max() >= PANOPTIC_ID_BASE:
                raise ValueError(
                    f"instance ids must be in 0..{PANOPTIC_ID_BASE - 1}")

    @property
    def shape(self):
        return self.semantic.shape

    def check_consistent(self, spectrum: ClassSpectrum):
        """Structural invariants against a spectrum: no instances on void or
        stuff pixels, and every instance id under exactly one semantic class."""
        spectrum.check_labelmap(self.semantic)
        has_inst = self.instance > 0
        for sid in (VOID_ID, *spectrum.stuff_ids):
            if np.any(has_inst & (self.semantic == sid)):
                raise ValueError(
                    f"instance pixels on non-thing class {sid} "
                    f"({spectrum.name_of(sid)})")
        for inst_id in np.unique(self.instance[has_inst]).tolist():
            classes = np.unique(self.semantic[self.instance == inst_id])
            if len(classes) != 1:
                raise ValueError(
                    f"instance {inst_id} spans semantic classes {classes.tolist()}")


def logits_to_labels(logits) -> np.ndarray:
    """Semantic logits (C, H, W) -> label map; channel k maps to class id k+1
    (void is never predicted)."""
    logits = np.asarray(logits)
    if logits.ndim != 3:
        raise ValueError(f"logits must be (C, H, W), got {logits.shape}")
    return (np.argmax(logits, axis=0) + 1).astype(np.int32)


def foreground_mask(semantic, spectrum: ClassSpectrum) -> np.ndarray:
    """Bool mask of thing-class pixels."""
    sem = np.asarray(semantic)
    if sem.ndim != 2:
        raise ValueError(f"semantic map must be 2-D, got {sem.shape}")
    spectrum.check_labelmap(sem)
    mask = sem != VOID_ID
    for sid in spectrum.stuff_ids:
        mask &= sem != sid
    return mask


def majority_vote(instance: DetectedInstance, semantic,
                  spectrum: ClassSpectrum) -> int | None:
    """Most frequent thing class over the instance's pixels.

    Void and stuff votes are ignored; ties go to the lower class id; an
    instance with no thing-class votes returns None (to be discarded).
    """
    sem = np.asarray(semantic)
    spectrum.check_labelmap(sem)
    rows, cols = instance.pixels
    if len(rows) == 0:
        raise ValueError("majority_vote over an empty pixel set")
    counts = np.bincount(sem[rows, cols], minlength=spectrum.num_classes)
    counts[VOID_ID] = 0
    for sid in spectrum.stuff_ids:
        counts[sid] = 0
    if counts.max() == 0:
        return None
    return int(np.argmax(counts))


def merge(semantic, instances, spectrum: ClassSpectrum) -> PanopticMap:
    """Fuse a semantic label map with grouped instances into a panoptic map.

    Instance pixel sets must be disjoint and ids unique.  Each instance gets
    its majority-voted thing class painted over its pixels (annotated on the
    instance in place); instances voting stuff/void-only are discarded and
    their pixels fall back to the semantic prediction.
    """
    sem = np.asarray(semantic)
    if sem.ndim != 2:
        raise ValueError(f"semantic map must be 2-D, got {sem.shape}")
    spectrum.check_labelmap(sem)

    out_sem = sem.astype(np.int32, copy=True)
    out_inst = np.zeros(sem.shape, dtype=np.int32)
    seen_ids = set()
    painted = np.zeros(sem.shape, dtype=bool)
    for inst in instances:
        if not 1 <= inst.id < PANOPTIC_ID_BASE:
            raise ValueError(f"instance id {inst.id} outside 1..{PANOPTIC_ID_BASE - 1}")
        if inst.id in seen_ids:
            raise ValueError(f"duplicate instance id {inst.id}")
        seen_ids.add(inst.id)
        rows, cols = inst.pixels
        if np.any(painted[rows, cols]):
            raise ValueError(f"instance {inst.id} overlaps another instance")
        painted[rows, cols] = True
        voted = majority_vote(inst, sem, spectrum)
        inst.semantic_class = voted
        if voted is None:
            continue
        out_sem[rows, cols] = voted
        out_inst[rows, cols] = inst.id
    return PanopticMap(semantic=out_sem, instance=out_inst)


def encode_panoptic_png(pmap: PanopticMap, path) -> None:
    """Write a panoptic map as a 16-bit PNG of semantic*1000 + instance."""
    enc = pmap.semantic.astype(np.int64) * PANOPTIC_ID_BASE + pmap.instance
    if enc.size and enc.max() > _PNG_MAX:
        raise ValueError(
            f"encoded panoptic id {enc.max()} exceeds 16-bit range; semantic "
            f"ids above {_PNG_MAX // PANOPTIC_ID_BASE - 1} cannot be stored")
    Image.fromarray(enc.astype(np.uint16)).save(path, format="PNG")


def decode_panoptic_png(path) -> PanopticMap:
    """Read a panoptic map written by :func:`encode_panoptic_png`."""
    arr = np.asarray(Image.open(path)).astype(np.int64)
    if arr.ndim != 2:
        raise ValueError(f"panoptic PNG must be single-channel, got {arr.shape}")
    return PanopticMap(semantic=(arr // PANOPTIC_ID_BASE).astype(np.int32),
                       instance=(arr % PANOPTIC_ID_BASE).astype(np.int32))
