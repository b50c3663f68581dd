"""Configuration settings for the RealityLab project."""

import logging
import math
import os
from pathlib import Path
from typing import Dict, Any, Optional

import yaml
from dotenv import load_dotenv

from .exceptions import ConfigurationError

load_dotenv()

logger = logging.getLogger(__name__)


class Config:
    """Central configuration management."""

    # Default Constants
    DEFAULT_N = 100000
    DEFAULT_SEED = 42
    DEFAULT_EXTENSION = "strict"
    DEFAULT_TOL = 1e-10
    DEFAULT_FORMAT = "text"
    DEFAULT_POLICY = "A,Q:0.5;P,B:0.5"
    DEFAULT_THETA_A = 0.0
    DEFAULT_THETA_B = math.pi / 2
    DEFAULT_THREADS = 1

    EXTENSIONS = ("strict", "wide")
    FORMATS = ("text", "json", "csv")

    SEED_ENV = "REALITYLAB_SEED"
    CONFIG_ENV = "REALITYLAB_CONFIG"

    # Paths
    PROJECT_ROOT = Path(__file__).parent.parent
    CONFIG_FILE = PROJECT_ROOT / "config.yaml"

    def __init__(self, config_file: Optional[Path] = None):
        """
        Initialize configuration.

        Args:
            config_file: Alternative YAML file; falls back to $REALITYLAB_CONFIG,
                then to config.yaml at the project root.
        """
        env_file = os.getenv(self.CONFIG_ENV)
        self.config_file = Path(config_file or env_file or self.CONFIG_FILE)
        self._config = self._load_config(strict=config_file is not None)

    def _load_config(self, strict: bool = False) -> Dict[str, Any]:
        """
        Load configuration from yaml file.

        Args:
            strict: Raise on a missing or malformed file instead of using defaults

        Raises:
            ConfigurationError: In strict mode, if the file cannot be used
        """
        if not self.config_file.exists():
            if strict:
                raise ConfigurationError(f"Config file {self.config_file} not found")
            return {}

        try:
            with open(self.config_file, "r") as f:
                data = yaml.safe_load(f) or {}
            if not isinstance(data, dict) or not isinstance(data.get("defaults", {}), dict):
                raise ValueError("expected a mapping with a 'defaults' section")
            return data
        except Exception as e:
            if strict:
                raise ConfigurationError(f"Invalid config file {self.config_file}: {e}")
            logger.warning(f"Ignoring invalid config file {self.config_file}: {e}")
            return {}

    def _default(self, key: str, fallback: Any) -> Any:
        return self._config.get("defaults", {}).get(key, fallback)

    @property
    def n(self) -> int:
        """Get ensemble size."""
        return int(self._default("n", self.DEFAULT_N))

    @property
    def seed(self) -> int:
        """Get seed from config file (environment override applied by resolve_seed)."""
        return int(self._default("seed", self.DEFAULT_SEED))

    @property
    def extension(self) -> str:
        """Get correlation-extension rule."""
        value = self._default("extension", self.DEFAULT_EXTENSION)
        if value not in self.EXTENSIONS:
            raise ConfigurationError(f"Unknown extension '{value}' in {self.config_file}")
        return value

    @property
    def tol(self) -> float:
        """Get algebraic tolerance."""
        return float(self._default("tol", self.DEFAULT_TOL))

    @property
    def format(self) -> str:
        """Get report format."""
        value = self._default("format", self.DEFAULT_FORMAT)
        if value not in self.FORMATS:
            raise ConfigurationError(f"Unknown format '{value}' in {self.config_file}")
        return value

    @property
    def policy(self) -> str:
        """Get EPR measurement policy (preset name or inline spec)."""
        return str(self._default("policy", self.DEFAULT_POLICY))

    @property
    def theta_a(self) -> float:
        """Get polar angle of the first EPR direction (radians)."""
        return float(self._default("theta_a", self.DEFAULT_THETA_A))

    @property
    def theta_b(self) -> float:
        """Get polar angle of the second EPR direction (radians)."""
        return float(self._default("theta_b", self.DEFAULT_THETA_B))

    @property
    def threads(self) -> int:
        """Get worker count for ensemble sampling."""
        return int(self._default("threads", self.DEFAULT_THREADS))

    def resolve_seed(self, cli_seed: Optional[int] = None) -> int:
        """
        Resolve the effective seed.

        $REALITYLAB_SEED wins over the command line, which wins over the file.
        """
        env_seed = os.getenv(self.SEED_ENV)
        if env_seed:
            try:
                return int(env_seed)
            except ValueError:
                raise ConfigurationError(f"{self.SEED_ENV} must be an integer, got '{env_seed}'")
        if cli_seed is not None:
            return cli_seed
        return self.seed


# Global config instance
config = Config()
