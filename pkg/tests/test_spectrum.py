"""Tests for class and scene spectra."""

import numpy as np
import pytest

from emsa.spectrum import (
    BUNDLED_SPECTRA,
    SCENE_CLASS_NAMES,
    VOID_ID,
    ClassSpectrum,
    SceneSpectrum,
    UnknownLabelError,
    default_scene_spectrum,
    load_spectrum,
)


def small_spectrum():
    return ClassSpectrum(
        name="toy",
        class_names=("void", "wall", "floor", "chair", "table"),
        stuff_ids=frozenset({1, 2}),
        orientation_ids=frozenset({3}),
    )


def test_void_is_zero():
    assert VOID_ID == 0


def test_class_counts():
    s = small_spectrum()
    assert s.num_classes == 5
    assert s.num_prediction_classes == 4
    assert s.thing_ids == frozenset({3, 4})


def test_stuff_thing_queries():
    s = small_spectrum()
    assert s.is_stuff(1) and s.is_stuff(2)
    assert not s.is_stuff(3)
    assert s.is_thing(3) and s.is_thing(4)
    assert not s.is_thing(0) and not s.is_stuff(0)
    assert s.name_of(3) == "chair"
    with pytest.raises(UnknownLabelError):
        s.name_of(5)
    with pytest.raises(UnknownLabelError):
        s.is_thing(-1)


def test_check_labelmap():
    s = small_spectrum()
    s.check_labelmap(np.array([[0, 4], [1, 3]]))
    s.check_labelmap(np.zeros((0, 3), dtype=np.int32))
    with pytest.raises(UnknownLabelError):
        s.check_labelmap(np.array([[0, 5]]))
    with pytest.raises(UnknownLabelError):
        s.check_labelmap(np.array([[-1, 0]]))


def test_spectrum_validation():
    with pytest.raises(ValueError):
        ClassSpectrum(name="x", class_names=("void",), stuff_ids=frozenset(),
                      orientation_ids=frozenset())
    with pytest.raises(ValueError):
        ClassSpectrum(name="x", class_names=("background", "a"),
                      stuff_ids=frozenset(), orientation_ids=frozenset())
    with pytest.raises(ValueError):
        ClassSpectrum(name="x", class_names=("void", "a"), stuff_ids={2},
                      orientation_ids=frozenset())
    with pytest.raises(ValueError):
        ClassSpectrum(name="x", class_names=("void", "a"), stuff_ids={0},
                      orientation_ids=frozenset())
    # orientation on a stuff class is contradictory
    with pytest.raises(ValueError):
        ClassSpectrum(name="x", class_names=("void", "a", "b"), stuff_ids={1},
                      orientation_ids={1})


def test_json_round_trip():
    s = small_spectrum()
    back = ClassSpectrum.from_json(s.to_json())
    assert back == s


def test_bundled_nyuv2():
    s = load_spectrum("nyuv2_40")
    assert s.num_classes == 41
    assert s.class_names[0] == "void"
    assert s.class_names[1] == "wall"
    assert s.class_names[2] == "floor"
    assert s.stuff_ids == frozenset({1, 2, 22})
    assert s.name_of(22) == "ceiling"
    assert s.orientation_ids == frozenset({3, 4, 5, 6, 10, 15, 17, 24, 25, 31, 32, 33})
    assert s.orientation_ids <= s.thing_ids


def test_bundled_sunrgbd():
    s = load_spectrum("sunrgbd_37")
    assert s.num_classes == 38
    assert s.class_names[:3] == ("void", "wall", "floor")
    assert s.orientation_ids <= s.thing_ids
    assert all(i not in s.stuff_ids for i in s.orientation_ids)


def test_bundled_names_constant():
    assert BUNDLED_SPECTRA == ("nyuv2_40", "sunrgbd_37")


def test_load_spectrum_from_path(tmp_path):
    p = tmp_path / "custom.json"
    p.write_text(small_spectrum().to_json())
    assert load_spectrum(p) == small_spectrum()


def test_load_spectrum_missing():
    with pytest.raises(FileNotFoundError, match="nyuv2_40"):
        load_spectrum("no_such_spectrum")


def test_scene_spectrum():
    s = default_scene_spectrum()
    assert s.class_names == SCENE_CLASS_NAMES
    assert s.num_classes == 11
    assert s.num_prediction_classes == 10
    assert s.name_of(0) == "void"
    assert s.name_of(6) == "kitchen"
    with pytest.raises(UnknownLabelError):
        s.name_of(11)
    back = SceneSpectrum.from_json(s.to_json())
    assert back == s
    with pytest.raises(ValueError):
        SceneSpectrum(class_names=("void",))
    with pytest.raises(ValueError):
        SceneSpectrum(class_names=("office", "void"))
