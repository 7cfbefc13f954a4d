import json
import os
from pathlib import Path

from ..core.exponent_field import DEFAULT_ETA

DEFAULTS = {
    'eta': DEFAULT_ETA,
    'tolerance': 1e-10,
    'seed': 0,
    'output_dir': 'varexp-runs',
}


# Persistent user defaults
class GlobalState:
    def __init__(self, config_dir: Path | str | None = None):
        if config_dir is None:
            config_dir = os.environ.get('VAREXP_CONFIG_DIR') or Path.home() / '.varexp'
        self.config_dir = Path(config_dir)
        self.config_file = self.config_dir / 'config.json'

    def _ensure_config_dir(self):
        """Ensure the config directory exists."""
        self.config_dir.mkdir(parents=True, exist_ok=True)

    def _load_config(self) -> dict:
        """Load the config file."""
        if not self.config_file.exists():
            return {}
        try:
            with open(self.config_file, 'r') as f:
                return json.load(f)
        except (json.JSONDecodeError, OSError):
            return {}

    def _save_config(self, config: dict):
        """Save the config file."""
        try:
            self._ensure_config_dir()
            with open(self.config_file, 'w') as f:
                json.dump(config, f, indent=2, sort_keys=True)
        except OSError:
            pass  # Silently fail if we can't write the config

    def get(self, key: str):
        if key not in DEFAULTS:
            raise KeyError(f"unknown setting {key!r}")
        return self._load_config().get(key, DEFAULTS[key])

    def set(self, key: str, value):
        if key not in DEFAULTS:
            raise KeyError(f"unknown setting {key!r}")
        config = self._load_config()
        config[key] = value
        self._save_config(config)

    @property
    def eta(self) -> float:
        return float(self.get('eta'))

    @property
    def tolerance(self) -> float:
        return float(self.get('tolerance'))

    @property
    def seed(self) -> int:
        return int(self.get('seed'))

    @property
    def output_dir(self) -> str:
        """Where runs write their artifacts, relative to the working directory unless absolute."""
        return str(self.get('output_dir'))

    @output_dir.setter
    def output_dir(self, value: str):
        self.set('output_dir', value)


# Single instance to be shared across modules
state = GlobalState()
