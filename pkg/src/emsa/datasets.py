"""Dataset I/O and the synthetic scene generator.

On disk a split is a directory of per-sample subdirectories plus a
``split.json`` manifest:

    <split>/<sample_id>/rgb.png            8-bit RGB
    <split>/<sample_id>/depth.png          16-bit grayscale, millimeters
    <split>/<sample_id>/semantic.png       16-bit grayscale, class ids
    <split>/<sample_id>/instance.png       16-bit grayscale, instance ids
    <split>/<sample_id>/orientations.csv   instance_id,degrees (may be absent)
    <split>/<sample_id>/scene.txt          scene class id
    <split>/split.json                     {"samples": [ids...]}

Loaded samples keep rgb in [0, 1] float32 and depth in meters (zero marks
an invalid measurement), so ``save_sample`` followed by ``load_sample`` is
an identity for data quantized to 8-bit color / millimeter depth.
"""

import csv
import json

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from PIL import Image, UnidentifiedImageError

from .codec import filter_small_instances
from .spectrum import (ClassSpectrum, SceneSpectrum, default_scene_spectrum,
                       load_spectrum)

__all__ = [
    "Sample", "SampleRecord", "ExtentMismatchError", "CorruptFileError",
    "sample_record", "load_sample", "save_sample", "load_split", "save_split",
    "synth_scene", "class_pixel_counts", "filter_small_instances",
]

_FILES = ("rgb.png", "depth.png", "semantic.png", "instance.png", "scene.txt")


class ExtentMismatchError(ValueError):
    """The maps of one sample disagree in height or width."""


class CorruptFileError(ValueError):
    """A sample file exists but cannot be parsed."""


@dataclass
class SampleRecord:
    """Paths of one sample on disk."""

    sample_id: str
    rgb: Path
    depth: Path
    semantic: Path
    instance: Path
    scene: Path
    orientations: Path | None = None


@dataclass
class Sample:
    """One fully loaded RGB-D sample with dense and image-level labels."""

    rgb: np.ndarray                 # (3, H, W) float32 in [0, 1]
    depth: np.ndarray               # (1, H, W) float32 meters, 0 = invalid
    semantic: np.ndarray            # (H, W) int32
    instance: np.ndarray            # (H, W) int32
    orientations: dict[int, float]  # instance id -> degrees in [0, 360)
    scene: int

    @property
    def shape(self):
        return self.semantic.shape


def sample_record(sample_dir) -> SampleRecord:
    """Describe one sample directory, checking the required files exist."""
    d = Path(sample_dir)
    if not d.is_dir():
        raise FileNotFoundError(f"sample directory {d} does not exist")
    for name in _FILES:
        if not (d / name).is_file():
            raise FileNotFoundError(f"sample {d.name}: missing {name}")
    ori = d / "orientations.csv"
    return SampleRecord(
        sample_id=d.name, rgb=d / "rgb.png", depth=d / "depth.png",
        semantic=d / "semantic.png", instance=d / "instance.png",
        scene=d / "scene.txt", orientations=ori if ori.is_file() else None)


def _read_png(path, expect_rgb=False):
    try:
        arr = np.asarray(Image.open(path))
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        raise CorruptFileError(f"{path}: not a readable image ({e})") from e
    if expect_rgb:
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise CorruptFileError(f"{path}: expected 3-channel RGB, got {arr.shape}")
    elif arr.ndim != 2:
        raise CorruptFileError(f"{path}: expected single channel, got {arr.shape}")
    return arr


def load_sample(record, spectrum: ClassSpectrum,
                scene_spectrum: SceneSpectrum | None = None) -> Sample:
    """Load and validate one sample; ``record`` may also be a directory."""
    if not isinstance(record, SampleRecord):
        record = sample_record(record)
    scene_spectrum = scene_spectrum or default_scene_spectrum()

    rgb8 = _read_png(record.rgb, expect_rgb=True)
    depth16 = _read_png(record.depth)
    semantic = _read_png(record.semantic).astype(np.int32)
    instance = _read_png(record.instance).astype(np.int32)

    hw = semantic.shape
    for name, got in (("rgb", rgb8.shape[:2]), ("depth", depth16.shape),
                      ("instance", instance.shape)):
        if got != hw:
            raise ExtentMismatchError(
                f"sample {record.sample_id}: {name} extent {got} does not "
                f"match semantic {hw}")

    spectrum.check_labelmap(semantic)
    if instance.min(initial=0) < 0:
        raise ValueError(f"sample {record.sample_id}: negative instance id")

    orientations: dict[int, float] = {}
    if record.orientations is not None:
        present = set(np.unique(instance).tolist())
        with open(record.orientations, newline="") as f:
            rows = list(csv.reader(f))
        if not rows or rows[0] != ["instance_id", "degrees"]:
            raise CorruptFileError(f"{record.orientations}: bad or missing header")
        for row in rows[1:]:
            try:
                inst_id, deg = int(row[0]), float(row[1])
            except (ValueError, IndexError) as e:
                raise CorruptFileError(
                    f"{record.orientations}: bad row {row!r}") from e
            if inst_id <= 0 or inst_id not in present:
                raise ValueError(
                    f"sample {record.sample_id}: orientation for instance "
                    f"{inst_id} absent from the instance map")
            orientations[inst_id] = deg % 360.0

    try:
        scene = int(Path(record.scene).read_text().strip())
    except ValueError as e:
        raise CorruptFileError(f"{record.scene}: not an integer scene id") from e
    if not 0 <= scene < scene_spectrum.num_classes:
        raise ValueError(
            f"sample {record.sample_id}: scene id {scene} outside "
            f"0..{scene_spectrum.num_classes - 1}")

    return Sample(
        rgb=np.ascontiguousarray(rgb8.transpose(2, 0, 1).astype(np.float32) / 255.0),
        depth=(depth16.astype(np.float32) / 1000.0)[None],
        semantic=semantic,
        instance=instance,
        orientations=orientations,
        scene=scene,
    )


def save_sample(sample_dir, sample: Sample) -> None:
    """Write one sample; inverse of :func:`load_sample` for quantized data."""
    d = Path(sample_dir)
    d.mkdir(parents=True, exist_ok=True)
    rgb8 = np.clip(np.round(sample.rgb * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(rgb8.transpose(1, 2, 0)).save(d / "rgb.png")
    mm = np.clip(np.round(sample.depth[0] * 1000.0), 0, 65535).astype(np.uint16)
    Image.fromarray(mm).save(d / "depth.png")
    for name, arr in (("semantic", sample.semantic), ("instance", sample.instance)):
        if arr.min(initial=0) < 0 or arr.max(initial=0) > 65535:
            raise ValueError(f"{name} ids outside the 16-bit PNG range")
        Image.fromarray(arr.astype(np.uint16)).save(d / f"{name}.png")
    with open(d / "orientations.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["instance_id", "degrees"])
        for inst_id in sorted(sample.orientations):
            writer.writerow([inst_id, repr(float(sample.orientations[inst_id]))])
    (d / "scene.txt").write_text(f"{sample.scene}\n")


def load_split(split_dir) -> list[SampleRecord]:
    """Read a split manifest and return its sample records in listed order."""
    manifest = Path(split_dir) / "split.json"
    if not manifest.is_file():
        raise FileNotFoundError(f"{manifest} does not exist")
    try:
        ids = json.loads(manifest.read_text())["samples"]
    except (json.JSONDecodeError, KeyError) as e:
        raise CorruptFileError(f"{manifest}: {e}") from e
    return [sample_record(Path(split_dir) / sid) for sid in ids]


def save_split(split_dir, samples: dict[str, Sample]) -> None:
    """Write samples and the manifest; ids are listed in sorted order."""
    d = Path(split_dir)
    d.mkdir(parents=True, exist_ok=True)
    for sid, sample in samples.items():
        save_sample(d / sid, sample)
    manifest = {"samples": sorted(samples)}
    (d / "split.json").write_text(json.dumps(manifest, indent=2) + "\n")


def class_pixel_counts(labelmaps, num_classes: int) -> np.ndarray:
    """Total pixels per class id over an iterable of semantic maps."""
    counts = np.zeros(num_classes, dtype=np.int64)
    for lm in labelmaps:
        counts += np.bincount(np.asarray(lm).ravel(), minlength=num_classes)
    return counts


def _class_color(class_id: int) -> np.ndarray:
    return np.array([(class_id * 53 + 71) % 256,
                     (class_id * 97 + 31) % 256,
                     (class_id * 151 + 11) % 256], dtype=np.int64)


def synth_scene(seed: int, height: int = 96, width: int = 128,
                num_instances: int = 4, spectrum: ClassSpectrum | None = None,
                scene_id: int | None = None, min_center_spacing: int = 9,
                min_area_fraction: float = 0.0025) -> Sample:
    """Generate a deterministic synthetic indoor sample.

    A wall/floor stuff background with ``num_instances`` non-overlapping
    rectangles and ellipses of random thing classes.  Every instance covers
    at least ``min_area_fraction`` of the image and the rounded instance
    centroids are pairwise at least ``min_center_spacing`` apart in
    Chebyshev distance, so the instance codec can reconstruct the scene
    exactly.  Same seed, same bytes.
    """
    if height < 32 or width < 32:
        raise ValueError(f"scene extents must be at least 32x32, got {height}x{width}")
    if num_instances < 0:
        raise ValueError(f"num_instances must be non-negative, got {num_instances}")
    spectrum = spectrum or load_spectrum("nyuv2_40")
    scene_spectrum = default_scene_spectrum()
    rng = np.random.default_rng(seed)

    wall, floor = 1, 2
    split_row = int(rng.integers(height // 3, 2 * height // 3 + 1))
    semantic = np.full((height, width), wall, dtype=np.int32)
    semantic[split_row:] = floor
    instance = np.zeros((height, width), dtype=np.int32)

    thing_pool = sorted(spectrum.thing_ids)
    yy, xx = np.mgrid[0:height, 0:width]
    centers: list[tuple[int, int]] = []
    orientations: dict[int, float] = {}

    for inst_id in range(1, num_instances + 1):
        placed = False
        for _ in range(300):
            cls = int(thing_pool[rng.integers(0, len(thing_pool))])
            a = int(rng.integers(max(3, height // 16), max(4, height // 5)))
            b = int(rng.integers(max(3, width // 16), max(4, width // 5)))
            cy = int(rng.integers(a + 1, height - a - 1))
            cx = int(rng.integers(b + 1, width - b - 1))
            shape = rng.integers(0, 2)
            if shape == 0:
                mask = (np.abs(yy - cy) <= a) & (np.abs(xx - cx) <= b)
            else:
                mask = ((yy - cy) / a) ** 2 + ((xx - cx) / b) ** 2 <= 1.0
            area = int(mask.sum())
            if area / (height * width) < min_area_fraction or area < 1:
                continue
            if np.any(instance[mask]):
                continue
            rows, cols = np.nonzero(mask)
            cr = int(np.floor(rows.mean() + 0.5))
            cc = int(np.floor(cols.mean() + 0.5))
            if any(max(abs(cr - r), abs(cc - c)) < min_center_spacing
                   for r, c in centers):
                continue
            semantic[mask] = cls
            instance[mask] = inst_id
            centers.append((cr, cc))
            if cls in spectrum.orientation_ids:
                orientations[inst_id] = float(rng.uniform(0.0, 360.0))
            placed = True
            break
        if not placed:
            raise RuntimeError(
                f"could not place instance {inst_id} of {num_instances} on a "
                f"{height}x{width} scene (seed {seed}); fewer or smaller "
                f"instances needed")

    rgb8 = np.empty((height, width, 3), dtype=np.int64)
    for cls in np.unique(semantic).tolist():
        rgb8[semantic == cls] = _class_color(cls)
    noise = rng.integers(-10, 11, size=(height, width, 3))
    rgb8 = np.clip(rgb8 + noise, 0, 255).astype(np.uint8)

    depth_mm = (1800 + yy * 6).astype(np.int64)
    for inst_id in range(1, num_instances + 1):
        depth_mm[instance == inst_id] = int(rng.integers(500, 4000))
    depth_mm = np.clip(depth_mm, 0, 65535)

    if scene_id is None:
        scene_id = int(rng.integers(1, scene_spectrum.num_classes))
    elif not 0 <= scene_id < scene_spectrum.num_classes:
        raise ValueError(f"scene id {scene_id} outside the scene spectrum")

    return Sample(
        rgb=np.ascontiguousarray(
            rgb8.transpose(2, 0, 1).astype(np.float32) / 255.0),
        depth=(depth_mm.astype(np.float32) / 1000.0)[None],
        semantic=semantic,
        instance=instance,
        orientations=orientations,
        scene=int(scene_id),
    )
