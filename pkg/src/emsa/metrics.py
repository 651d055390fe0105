"""Evaluation metrics: mean IoU, panoptic quality, orientation error and
scene accuracy.

Void ground-truth pixels (id 0) are excluded from every metric.  Label maps
that differ in extent from the ground truth must be brought to ground-truth
resolution first with :func:`resize_nearest`.
"""

import json

from dataclasses import dataclass

import numpy as np

from .merge import PanopticMap
from .orientation import angular_error
from .spectrum import ClassSpectrum, VOID_ID


def resize_nearest(labelmap, out_hw):
    """Nearest-neighbor resize of an integer label map.

    Source index = floor(target_index * in_extent / out_extent), the same
    mapping on both axes, which keeps the operation deterministic and
    integer-exact.
    """
    lm = np.asarray(labelmap)
    if lm.ndim != 2:
        raise ValueError(f"label map must be 2-D, got {lm.shape}")
    oh, ow = int(out_hw[0]), int(out_hw[1])
    if oh < 1 or ow < 1:
        raise ValueError(f"target extents must be positive, got {out_hw}")
    h, w = lm.shape
    ri = (np.arange(oh, dtype=np.int64) * h) // oh
    ci = (np.arange(ow, dtype=np.int64) * w) // ow
    return lm[np.ix_(ri, ci)]


@dataclass
class MIoUResult:
    """Per-class and mean intersection-over-union."""

    per_class: dict[int, float]
    miou: float


def miou_from_confusion(conf) -> MIoUResult:
    """Mean IoU from an accumulated (gt x pred) confusion matrix.

    Row 0 (void ground truth) must already be excluded.  Classes count when
    they appear on either axis; a class only ever predicted contributes an
    IoU of 0.
    """
    conf = np.asarray(conf, dtype=np.int64)
    if conf.ndim != 2 or conf.shape[0] != conf.shape[1]:
        raise ValueError(f"confusion matrix must be square, got {conf.shape}")
    if conf.sum() == 0:
        raise ValueError("ground truth is entirely void; mIoU is undefined")
    gt_tot = conf.sum(axis=1)
    pr_tot = conf.sum(axis=0)
    per_class = {}
    for c in range(1, conf.shape[0]):
        if gt_tot[c] == 0 and pr_tot[c] == 0:
            continue
        inter = conf[c, c]
        union = gt_tot[c] + pr_tot[c] - inter
        per_class[int(c)] = float(inter / union)
    return MIoUResult(per_class=per_class,
                      miou=float(np.mean(list(per_class.values()))))


def miou(pred, gt, spectrum: ClassSpectrum) -> MIoUResult:
    """Mean IoU over the classes present in ground truth or prediction.

    Void ground-truth pixels are dropped entirely; predictions there are
    never counted.  A class predicted but absent from the ground truth
    contributes an IoU of 0 to the mean.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"pred {pred.shape} and gt {gt.shape} extents differ")
    spectrum.check_labelmap(pred)
    spectrum.check_labelmap(gt)
    valid = gt != VOID_ID
    if not np.any(valid):
        raise ValueError("ground truth is entirely void; mIoU is undefined")
    p = pred[valid].astype(np.int64)
    g = gt[valid].astype(np.int64)
    n = spectrum.num_classes
    conf = np.bincount(g * n + p, minlength=n * n).reshape(n, n)
    return miou_from_confusion(conf)


@dataclass(frozen=True)
class SegmentMatch:
    """A matched ground-truth/prediction segment pair (IoU > 0.5)."""

    class_id: int
    gt_instance: int
    pred_instance: int
    iou: float


@dataclass
class ClassPQ:
    """Panoptic counts of one class."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    iou_sum: float = 0.0

    @property
    def rq(self) -> float:
        d = self.tp + 0.5 * self.fp + 0.5 * self.fn
        return self.tp / d if d else 0.0

    @property
    def sq(self) -> float:
        return self.iou_sum / self.tp if self.tp else 0.0

    @property
    def pq(self) -> float:
        d = self.tp + 0.5 * self.fp + 0.5 * self.fn
        return self.iou_sum / d if d else 0.0


@dataclass
class PQReport:
    """Aggregated panoptic quality; means are over classes with any segment."""

    per_class: dict[int, ClassPQ]
    pq: float
    sq: float
    rq: float
    pq_things: float
    pq_stuff: float
    num_classes: int
    num_thing_classes: int
    num_stuff_classes: int

    def to_dict(self) -> dict:
        return {
            "pq": self.pq, "sq": self.sq, "rq": self.rq,
            "pq_things": self.pq_things, "pq_stuff": self.pq_stuff,
            "num_classes": self.num_classes,
            "num_thing_classes": self.num_thing_classes,
            "num_stuff_classes": self.num_stuff_classes,
            "per_class": {
                str(c): {"pq": s.pq, "sq": s.sq, "rq": s.rq,
                         "tp": s.tp, "fp": s.fp, "fn": s.fn}
                for c, s in sorted(self.per_class.items())
            },
        }


def _segments(pmap: PanopticMap, spectrum: ClassSpectrum):
    """Codes and areas of all segments: stuff = one segment per class,
    things = one per instance id; thing pixels without an id form none."""
    code = pmap.semantic.astype(np.int64) * 100000 + pmap.instance
    codes, areas = np.unique(code, return_counts=True)
    segs = {}
    for cd, area in zip(codes.tolist(), areas.tolist()):
        cls, inst = cd // 100000, cd % 100000
        if cls == VOID_ID:
            continue
        if spectrum.is_thing(cls) and inst == 0:
            continue
        segs[cd] = int(area)
    return code, segs


class PanopticQuality:
    """Streaming panoptic-quality accumulator over an image sequence.

    Matching is per class with strict IoU > 0.5 (hence unique).  Void
    ground-truth pixels never count toward any union, and an unmatched
    predicted segment more than half covered by void ground truth is
    exempt from the false-positive count.  Classes in ``excluded_classes``
    are dropped from the aggregate means.
    """

    def __init__(self, spectrum: ClassSpectrum, excluded_classes=()):
        self.spectrum = spectrum
        self.excluded = frozenset(int(c) for c in excluded_classes)
        self.stats: dict[int, ClassPQ] = {}

    def _cls(self, class_id: int) -> ClassPQ:
        return self.stats.setdefault(class_id, ClassPQ())

    def add(self, pred: PanopticMap, gt: PanopticMap) -> list[SegmentMatch]:
        """Accumulate one image; returns its matched segment pairs."""
        if pred.shape != gt.shape:
            raise ValueError(f"pred {pred.shape} and gt {gt.shape} extents differ")
        self.spectrum.check_labelmap(pred.semantic)
        self.spectrum.check_labelmap(gt.semantic)

        gt_code, gt_segs = _segments(gt, self.spectrum)
        pr_code, pr_segs = _segments(pred, self.spectrum)
        void = gt.semantic == VOID_ID
        gt_code = gt_code.copy()
        gt_code[void] = -1

        pair = np.stack([gt_code.ravel(), pr_code.ravel()], axis=1)
        pairs, counts = np.unique(pair, axis=0, return_counts=True)
        inter = {(int(a), int(b)): int(n) for (a, b), n in zip(pairs, counts)}

        pred_void = {}
        for (a, b), n in inter.items():
            if a == -1:
                pred_void[b] = pred_void.get(b, 0) + n

        matches = []
        matched_gt, matched_pr = set(), set()
        for (a, b), n in sorted(inter.items()):
            if a not in gt_segs or b not in pr_segs:
                continue
            cls_a, cls_b = a // 100000, b // 100000
            if cls_a != cls_b:
                continue
            union = gt_segs[a] + pr_segs[b] - n - pred_void.get(b, 0)
            iou = n / union
            if iou > 0.5:
                st = self._cls(cls_a)
                st.tp += 1
                st.iou_sum += iou
                matched_gt.add(a)
                matched_pr.add(b)
                matches.append(SegmentMatch(
                    class_id=cls_a, gt_instance=a % 100000,
                    pred_instance=b % 100000, iou=float(iou)))

        for cd, area in gt_segs.items():
            if cd not in matched_gt:
                self._cls(cd // 100000).fn += 1
        for cd, area in pr_segs.items():
            if cd in matched_pr:
                continue
            if pred_void.get(cd, 0) / area > 0.5:
                continue
            self._cls(cd // 100000).fp += 1
        return matches

    def update(self, other: "PanopticQuality") -> None:
        """Fold another accumulator's counts into this one."""
        for cid, st in other.stats.items():
            mine = self._cls(cid)
            mine.tp += st.tp
            mine.fp += st.fp
            mine.fn += st.fn
            mine.iou_sum += st.iou_sum

    def result(self) -> PQReport:
        valid = {c: s for c, s in self.stats.items()
                 if c not in self.excluded and (s.tp + s.fp + s.fn) > 0}
        things = [c for c in valid if self.spectrum.is_thing(c)]
        stuff = [c for c in valid if self.spectrum.is_stuff(c)]

        def mean(vals):
            return float(np.mean(vals)) if vals else 0.0

        return PQReport(
            per_class=dict(self.stats),
            pq=mean([valid[c].pq for c in valid]),
            sq=mean([valid[c].sq for c in valid]),
            rq=mean([valid[c].rq for c in valid]),
            pq_things=mean([valid[c].pq for c in things]),
            pq_stuff=mean([valid[c].pq for c in stuff]),
            num_classes=len(valid),
            num_thing_classes=len(things),
            num_stuff_classes=len(stuff),
        )


def panoptic_quality(pred: PanopticMap, gt: PanopticMap,
                     spectrum: ClassSpectrum,
                     excluded_classes=()) -> PQReport:
    """Single-image convenience wrapper around :class:`PanopticQuality`."""
    acc = PanopticQuality(spectrum, excluded_classes)
    acc.add(pred, gt)
    return acc.result()


def maae(pred_orientations, gt_orientations, pairs=None):
    """Mean absolute angular error in degrees, or None without any pair.

    With ``pairs`` (an iterable of (gt_id, pred_id)) only those pairings are
    scored — the panoptic-matched setting, where unmatched instances carry no
    penalty.  Without it, instances are paired by shared id (the
    ground-truth-instances setting).
    """
    if pairs is None:
        pairs = [(k, k) for k in sorted(gt_orientations) if k in pred_orientations]
    errs = [angular_error(gt_orientations[g], pred_orientations[p])
            for g, p in pairs]
    return float(np.mean(errs)) if errs else None


def balanced_accuracy(pred_ids, gt_ids) -> float:
    """Mean per-class recall over the non-void classes present in ``gt_ids``."""
    pred = np.asarray(pred_ids, dtype=np.int64).reshape(-1)
    gt = np.asarray(gt_ids, dtype=np.int64).reshape(-1)
    if pred.shape != gt.shape:
        raise ValueError("prediction and ground-truth counts differ")
    keep = gt != VOID_ID
    if not np.any(keep):
        raise ValueError("all ground-truth scene labels are void")
    pred, gt = pred[keep], gt[keep]
    recalls = [float(np.mean(pred[gt == c] == c)) for c in np.unique(gt)]
    return float(np.mean(recalls))


@dataclass
class MetricReport:
    """Bundle of every evaluation result for one split."""

    miou: float
    per_class_iou: dict[int, float]
    panoptic: PQReport
    maae_gt: float | None = None
    maae_matched: float | None = None
    scene_balanced_accuracy: float | None = None
    num_images: int = 0

    def to_dict(self) -> dict:
        return {
            "num_images": self.num_images,
            "miou": self.miou,
            "per_class_iou": {str(k): v for k, v in sorted(self.per_class_iou.items())},
            "panoptic": self.panoptic.to_dict(),
            "maae_gt": self.maae_gt,
            "maae_matched": self.maae_matched,
            "scene_balanced_accuracy": self.scene_balanced_accuracy,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)
