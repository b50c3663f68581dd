"""Tests for measurement-policy presets."""

import pytest

from src.exceptions import PolicyError
from src.presets import PresetManager


def test_list_presets():
    presets = PresetManager().list_presets()
    names = [p["name"] for p in presets]
    assert names == ["aq_only", "mixed", "pb_only", "same_axis", "singles"]
    assert all(p["type"] == "default" for p in presets)


def test_get_policy():
    policy = PresetManager().get_policy("mixed")
    assert policy.to_spec() == "A,Q:0.5;P,B:0.5"
    assert PresetManager().get_policy("singles").allocate(8) == [2, 2, 2, 2]


def test_unknown_preset():
    with pytest.raises(PolicyError):
        PresetManager().get_policy("nope")


def test_resolve_inline_and_named():
    manager = PresetManager()
    assert manager.resolve("A:1.0").to_spec() == "A:1"
    assert manager.resolve("same_axis").to_spec() == "A,P:0.5;B,Q:0.5"


def test_user_presets_override(tmp_path):
    (tmp_path / "mixed.yaml").write_text("description: mine\ngroups:\n  - labels: [A]\n    fraction: 1.0\n")
    (tmp_path / "only_q.yaml").write_text("groups:\n  - labels: [Q]\n    fraction: 1.0\n")
    manager = PresetManager(tmp_path)
    kinds = {p["name"]: p["type"] for p in manager.list_presets()}
    assert kinds["mixed"] == "user (override)"
    assert kinds["only_q"] == "user"
    assert manager.get_policy("mixed").to_spec() == "A:1"


def test_invalid_preset_file(tmp_path):
    (tmp_path / "bad.yaml").write_text("groups:\n  - labels: [A]\n    fraction: 0.3\n")
    manager = PresetManager(tmp_path)
    assert manager.get_preset("bad") is None
    with pytest.raises(PolicyError):
        manager.get_policy("bad")
