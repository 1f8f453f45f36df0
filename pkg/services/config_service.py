"""Configuration service"""
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from dotenv import dotenv_values
from pydantic import ValidationError

from models.experiment_models import ExperimentConfig, ExperimentInfo, ExperimentKind
from utils.errors import ConfigError

DEFAULT_PROJECT_DIR = Path(__file__).resolve().parent.parent


def _field_names() -> Dict[str, str]:
    """Accepted key -> ExperimentConfig field name, aliases included"""
    names = {}
    for name, field in ExperimentConfig.model_fields.items():
        names[name] = name
        if field.alias:
            names[field.alias] = name
    return names


class ConfigService:
    """Service for loading presets and building validated experiment configurations"""

    def __init__(self, base_dir: Optional[Path] = None):
        self.base_dir = Path(base_dir or os.getenv("PROJECT_DIR") or DEFAULT_PROJECT_DIR)

    def load_config(self) -> Dict:
        """Load configuration from config.yaml"""
        config_path = self.base_dir / "config.yaml"
        if not config_path.exists():
            raise ConfigError(f"config.yaml not found in {self.base_dir}")

        print(f"📄 Loading config from: {config_path}")
        with open(config_path, "r", encoding="utf-8") as f:
            try:
                config = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"config.yaml is not valid YAML: {e}") from e
        print(f"✅ Config loaded successfully, found {len(config.get('experiments', {}))} experiment presets")
        return config

    def get_env(self) -> Dict[str, str]:
        """Environment overrides; the process environment wins over a .env file"""
        env_file = self.base_dir / ".env"
        values = {}
        if env_file.exists():
            print(f"📄 Loading environment variables from: {env_file}")
            values.update({k: v for k, v in dotenv_values(env_file).items() if v is not None})
        for key in ("SCMS_OUTPUT_DIR", "SCMS_WORKERS"):
            if key in os.environ:
                values[key] = os.environ[key]
        return values

    def get_settings(self) -> Dict[str, Any]:
        settings = dict(self.load_config().get("settings", {}))
        env = self.get_env()
        if "SCMS_OUTPUT_DIR" in env:
            settings["output_dir"] = env["SCMS_OUTPUT_DIR"]
        if "SCMS_WORKERS" in env:
            try:
                settings["workers"] = int(env["SCMS_WORKERS"])
            except ValueError as e:
                raise ConfigError(f"SCMS_WORKERS must be an integer, got {env['SCMS_WORKERS']!r}") from e
        return settings

    def get_preset(self, kind: ExperimentKind) -> Dict:
        experiments = self.load_config().get("experiments", {})
        preset = experiments.get(ExperimentKind(kind).value)
        if preset is None:
            raise ConfigError(f"No preset for experiment '{ExperimentKind(kind).value}' in config.yaml")
        return preset

    def list_experiments(self) -> List[ExperimentInfo]:
        experiments = self.load_config().get("experiments", {})
        return [
            ExperimentInfo(
                kind=ExperimentKind(key),
                description=value.get("description", ""),
                preset=value.get("preset", {}),
            )
            for key, value in experiments.items()
        ]

    @staticmethod
    def read_config_file(config_file: Union[str, Path]) -> Dict[str, str]:
        """Flat key = value file, one ExperimentConfig field per line"""
        path = Path(config_file)
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}")
        print(f"📄 Loading experiment config from: {path}")
        values = dotenv_values(path)
        missing = [key for key, value in values.items() if value is None]
        if missing:
            raise ConfigError(f"Keys without a value in {path}: {', '.join(missing)}")
        return dict(values)

    @staticmethod
    def _normalize(values: Dict[str, Any], source: str) -> Dict[str, Any]:
        names = _field_names()
        unknown = sorted(key for key in values if key not in names)
        if unknown:
            raise ConfigError(f"Unknown configuration keys in {source}: {', '.join(unknown)}")
        return {names[key]: value for key, value in values.items()}

    def build_experiment_config(
        self,
        kind: ExperimentKind,
        overrides: Optional[Dict[str, Any]] = None,
        config_file: Optional[Union[str, Path]] = None,
        full_scale: bool = False,
    ) -> ExperimentConfig:
        """Merge preset, full-scale section, config file and overrides, in that order"""
        kind = ExperimentKind(kind)
        settings = self.get_settings()
        preset = self.get_preset(kind)

        merged: Dict[str, Any] = {
            "workers": settings.get("workers", 1),
            "failure_threshold": settings.get("failure_threshold", 0.01),
        }
        merged.update(self._normalize(preset.get("preset", {}), f"preset '{kind.value}'"))
        if full_scale or settings.get("scale") == "full":
            merged.update(self._normalize(preset.get("full", {}), f"full-scale section of '{kind.value}'"))
        if config_file:
            merged.update(self._normalize(self.read_config_file(config_file), str(config_file)))
        if overrides:
            merged.update(self._normalize({k: v for k, v in overrides.items() if v is not None}, "overrides"))

        merged["experiment"] = kind
        if not merged.get("out_dir"):
            merged["out_dir"] = str(Path(settings.get("output_dir", "results")) / kind.value)

        try:
            return ExperimentConfig(**merged)
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration for '{kind.value}': {e}") from e
