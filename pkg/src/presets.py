"""Named measurement policies stored as YAML."""

import yaml
import logging
from pathlib import Path
from typing import List, Dict, Any, Optional, Union
from dataclasses import dataclass

from .ensemble import MeasurementPolicy, PolicyGroup
from .exceptions import PolicyError

logger = logging.getLogger(__name__)


@dataclass
class PolicyPreset:
    """A named measurement policy."""
    name: str
    description: str
    policy: MeasurementPolicy
    metadata: Dict[str, Any]


class PresetManager:
    """Loads measurement-policy presets from the package and an optional user directory."""

    def __init__(self, user_preset_dir: Optional[Union[str, Path]] = None):
        """
        Initialize preset manager.

        Args:
            user_preset_dir: Directory with user-defined presets; these override packaged ones
        """
        self.user_dir = Path(user_preset_dir).expanduser() if user_preset_dir else None
        self.default_dir = Path(__file__).parent / "presets"

    def _directories(self) -> List[Path]:
        dirs = [self.default_dir]
        if self.user_dir is not None and self.user_dir.exists():
            dirs.append(self.user_dir)
        return dirs

    def list_presets(self) -> List[Dict[str, str]]:
        """
        List all available presets.

        Returns:
            List of dicts with 'name', 'type' (default/user), 'description' and 'policy'
        """
        presets: Dict[str, Dict[str, str]] = {}
        for directory in self._directories():
            for f in directory.glob("*.yaml"):
                preset = self._load_preset_file(f)
                if preset is None:
                    continue
                if directory == self.default_dir:
                    kind = "default"
                else:
                    kind = "user (override)" if f.stem in presets else "user"
                presets[f.stem] = {
                    "name": f.stem,
                    "type": kind,
                    "description": preset.description,
                    "policy": preset.policy.to_spec(),
                }
        return sorted(presets.values(), key=lambda x: x["name"])

    def get_preset(self, name: str) -> Optional[PolicyPreset]:
        """
        Load a preset by name; the user directory is checked first.

        Args:
            name: Preset name (without extension)

        Returns:
            PolicyPreset or None if not found
        """
        for directory in reversed(self._directories()):
            path = directory / f"{name}.yaml"
            if path.exists():
                return self._load_preset_file(path)
        return None

    def get_policy(self, name: str) -> MeasurementPolicy:
        """
        Policy of a named preset.

        Raises:
            PolicyError: If no valid preset has that name
        """
        preset = self.get_preset(name)
        if preset is None:
            raise PolicyError(f"Unknown policy preset '{name}'")
        return preset.policy

    def resolve(self, spec: str) -> MeasurementPolicy:
        """A preset name or an inline spec such as ``"A,Q:0.5;P,B:0.5"``."""
        if ":" in spec:
            return MeasurementPolicy.parse(spec)
        return self.get_policy(spec.strip())

    def _load_preset_file(self, path: Path) -> Optional[PolicyPreset]:
        """Helper to load and parse a preset file."""
        try:
            data = yaml.safe_load(path.read_text())
            groups = tuple(
                PolicyGroup(tuple(str(label) for label in g["labels"]), float(g["fraction"]))
                for g in data.get("groups", [])
            )
            return PolicyPreset(
                name=path.stem,
                description=data.get("description", ""),
                policy=MeasurementPolicy(groups),
                metadata=data.get("metadata", {}),
            )
        except Exception as e:
            logger.error(f"Failed to load preset {path}: {e}")
            return None
