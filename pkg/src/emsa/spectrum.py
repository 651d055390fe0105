"""Class and scene spectra.

A class spectrum fixes the semantic label ids of a dataset: id 0 is always
void, every other id is either stuff (amorphous, no instances) or thing
(countable), and a subset of the thing classes carries orientation
annotations.  Scene spectra list the image-level scene classes, again with
void at id 0.  Both round-trip through JSON; two class spectra ship with the
package (``nyuv2_40`` and ``sunrgbd_37``).
"""

import json

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

VOID_ID = 0

BUNDLED_SPECTRA = ("nyuv2_40", "sunrgbd_37")

SCENE_CLASS_NAMES = (
    "void", "bathroom", "bedroom", "dining room", "discussion room",
    "hallway", "kitchen", "living room", "office", "other indoor", "stairs",
)


class UnknownLabelError(ValueError):
    """A label map contains an id outside the spectrum."""


@dataclass(frozen=True)
class ClassSpectrum:
    """Semantic label ids of a dataset; index into ``class_names`` is the id."""

    name: str
    class_names: tuple[str, ...]
    stuff_ids: frozenset[int]
    orientation_ids: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "stuff_ids", frozenset(int(i) for i in self.stuff_ids))
        object.__setattr__(self, "orientation_ids",
                           frozenset(int(i) for i in self.orientation_ids))
        if len(self.class_names) < 2:
            raise ValueError("a spectrum needs void plus at least one class")
        if self.class_names[VOID_ID] != "void":
            raise ValueError(f"class id {VOID_ID} must be named 'void'")
        valid = range(1, len(self.class_names))
        for sid in self.stuff_ids:
            if sid not in valid:
                raise ValueError(f"stuff id {sid} outside 1..{len(self.class_names) - 1}")
        for oid in self.orientation_ids:
            if oid not in valid or oid in self.stuff_ids:
                raise ValueError(f"orientation id {oid} is not a thing class")

    @property
    def num_classes(self) -> int:
        """All ids including void."""
        return len(self.class_names)

    @property
    def num_prediction_classes(self) -> int:
        """Classes a model predicts (void is ground-truth-only)."""
        return len(self.class_names) - 1

    @property
    def thing_ids(self) -> frozenset[int]:
        return frozenset(range(1, len(self.class_names))) - self.stuff_ids

    def is_stuff(self, class_id: int) -> bool:
        self._check_id(class_id)
        return class_id in self.stuff_ids

    def is_thing(self, class_id: int) -> bool:
        self._check_id(class_id)
        return class_id != VOID_ID and class_id not in self.stuff_ids

    def name_of(self, class_id: int) -> str:
        self._check_id(class_id)
        return self.class_names[class_id]

    def _check_id(self, class_id: int):
        if not 0 <= class_id < len(self.class_names):
            raise UnknownLabelError(
                f"class id {class_id} outside spectrum '{self.name}' "
                f"(0..{len(self.class_names) - 1})")

    def check_labelmap(self, labelmap):
        """Raise :class:`UnknownLabelError` if any pixel id is out of range."""
        lm = np.asarray(labelmap)
        if lm.size == 0:
            return
        lo, hi = int(lm.min()), int(lm.max())
        if lo < 0 or hi >= len(self.class_names):
            bad = lo if lo < 0 else hi
            raise UnknownLabelError(
                f"label map holds id {bad}, outside spectrum '{self.name}' "
                f"(0..{len(self.class_names) - 1})")

    def to_json(self) -> str:
        return json.dumps({
            "name": self.name,
            "class_names": list(self.class_names),
            "stuff_ids": sorted(self.stuff_ids),
            "orientation_ids": sorted(self.orientation_ids),
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ClassSpectrum":
        d = json.loads(text)
        return cls(name=d["name"], class_names=tuple(d["class_names"]),
                   stuff_ids=frozenset(d["stuff_ids"]),
                   orientation_ids=frozenset(d["orientation_ids"]))


@dataclass(frozen=True)
class SceneSpectrum:
    """Image-level scene classes; id 0 is void."""

    class_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if len(self.class_names) < 2:
            raise ValueError("a scene spectrum needs void plus at least one class")
        if self.class_names[VOID_ID] != "void":
            raise ValueError(f"scene id {VOID_ID} must be named 'void'")

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def num_prediction_classes(self) -> int:
        return len(self.class_names) - 1

    def name_of(self, scene_id: int) -> str:
        if not 0 <= scene_id < len(self.class_names):
            raise UnknownLabelError(f"scene id {scene_id} outside 0..{len(self.class_names) - 1}")
        return self.class_names[scene_id]

    def to_json(self) -> str:
        return json.dumps({"scene_class_names": list(self.class_names)}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SceneSpectrum":
        return cls(class_names=tuple(json.loads(text)["scene_class_names"]))


def default_scene_spectrum() -> SceneSpectrum:
    return SceneSpectrum(class_names=SCENE_CLASS_NAMES)


def load_spectrum(name_or_path) -> ClassSpectrum:
    """Load a class spectrum: a bundled name or a path to a JSON file."""
    key = str(name_or_path)
    if key in BUNDLED_SPECTRA:
        text = resources.files("emsa").joinpath(f"spectra/{key}.json").read_text()
    else:
        path = Path(name_or_path)
        if not path.exists():
            raise FileNotFoundError(
                f"no such spectrum: {key!r} is neither a file nor one of "
                f"{BUNDLED_SPECTRA}")
        text = path.read_text()
    return ClassSpectrum.from_json(text)
