"""Pipeline configuration: TOML loading, validation, defaults, and hashing.

The config hash pins checkpoints to the configuration that produced them:
a checkpoint written under a different hash is ignored on resume.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .audioquality import AudioQualityConfig
from .speakers import SpeakerConfig
from .textquality import TextQualityConfig
from .trim import TrimSearchConfig
from .vad import VadConfig
from .validate import ExtensionPolicy

PROVIDER_URL_ENV = "SPEECHCORPUS_PROVIDER_URL"


class ConfigError(ValueError):
    """Invalid pipeline configuration."""


@dataclass(frozen=True)
class TtsFilter:
    audio_min: float = 0.8
    text_min: float = 0.5

    def __post_init__(self):
        for name, value in [("audio_min", self.audio_min), ("text_min", self.text_min)]:
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"tts_filter.{name} must be in [0,1], got {value}")


@dataclass(frozen=True)
class PipelineConfig:
    input_dir: Path
    output_dir: Path
    providers: str = "mock"  # mock | remote
    provider_endpoint: Optional[str] = None
    workers: int = 1
    seed: int = 0
    output_sample_rate_hz: int = 22_050
    tts_filter: TtsFilter = field(default_factory=TtsFilter)
    vad: VadConfig = field(default_factory=VadConfig)
    validation: ExtensionPolicy = field(default_factory=ExtensionPolicy)
    trim: TrimSearchConfig = field(default_factory=TrimSearchConfig)
    text_quality: TextQualityConfig = field(default_factory=TextQualityConfig)
    audio_quality: AudioQualityConfig = field(default_factory=AudioQualityConfig)
    speakers: SpeakerConfig = field(default_factory=SpeakerConfig)

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.providers not in ("mock", "remote"):
            raise ConfigError(f"providers must be 'mock' or 'remote', got {self.providers!r}")
        if self.providers == "remote" and not self.endpoint():
            raise ConfigError("remote providers need provider_endpoint or "
                              f"the {PROVIDER_URL_ENV} environment variable")

    def endpoint(self) -> Optional[str]:
        return os.environ.get(PROVIDER_URL_ENV) or self.provider_endpoint

    def config_hash(self) -> str:
        blob = json.dumps(_plain(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _build_section(cls, data: dict, section: str):
    field_names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - field_names
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    coerced = dict(data)
    for f in dataclasses.fields(cls):
        if f.name in coerced and isinstance(coerced[f.name], list):
            coerced[f.name] = tuple(coerced[f.name])
    try:
        return cls(**coerced)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{section}] section: {exc}") from exc


_SECTIONS = {
    "tts_filter": TtsFilter,
    "vad": VadConfig,
    "validation": ExtensionPolicy,
    "trim": TrimSearchConfig,
    "text_quality": TextQualityConfig,
    "audio_quality": AudioQualityConfig,
    "speakers": SpeakerConfig,
}

_TOP_LEVEL = {
    "input_dir", "output_dir", "providers", "provider_endpoint",
    "workers", "seed", "output_sample_rate_hz",
}


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    unknown = set(data) - _TOP_LEVEL - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    for key in ("input_dir", "output_dir"):
        if key not in data:
            raise ConfigError(f"config is missing required key {key!r}")

    kwargs = {k: data[k] for k in _TOP_LEVEL if k in data}
    kwargs["input_dir"] = Path(kwargs["input_dir"])
    kwargs["output_dir"] = Path(kwargs["output_dir"])
    for section, cls in _SECTIONS.items():
        if section in data:
            if not isinstance(data[section], dict):
                raise ConfigError(f"[{section}] must be a table")
            kwargs[section] = _build_section(cls, data[section], section)
    try:
        return PipelineConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
