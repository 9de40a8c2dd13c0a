"""Run configuration: built-in defaults < preset < YAML file < command-line flags."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from data.models import MultiViewDataset, SynthSpec
from data.loaders.dataset_files import load_dataset
from data.synthetic import generate_synth
from model.base import Algorithm, Hyperparams
from model.presets import get_preset


class ExperimentConfig(BaseModel):
    """Protocol settings for noise-sweep, evaluate, and grid."""

    model_config = ConfigDict(extra="forbid")

    noise_fractions: List[float] = Field(default_factory=lambda: [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    eval_mode: Literal["classify", "cluster", "sizes"] = "cluster"
    sizes: List[int] = Field(default_factory=lambda: [60, 120, 240])
    workers: int = Field(default=1, ge=1)
    model_grid: Dict[str, List[float]] = Field(default_factory=dict)
    dim_grid: Dict[str, List[float]] = Field(default_factory=dict)

    @field_validator("noise_fractions")
    @classmethod
    def ensure_fraction_range(cls, values: List[float]) -> List[float]:
        for value in values:
            if not 0.0 <= value <= 0.5:
                raise ValueError(f"noise fraction must lie in [0, 0.5], got {value}")
        return values

    @field_validator("seeds")
    @classmethod
    def ensure_seeds(cls, values: List[int]) -> List[int]:
        if not values:
            raise ValueError("at least one seed is required")
        return values


class RunConfig(BaseModel):
    """Fully resolved configuration of one command."""

    model_config = ConfigDict(extra="forbid")

    dataset_path: Optional[Path] = None
    synth: Optional[SynthSpec] = None
    preset: Optional[str] = None
    algorithm: Algorithm = Algorithm.STANDARD
    hyperparams: Hyperparams = Field(default_factory=Hyperparams)
    hyperparams_an: Hyperparams = Field(default_factory=Hyperparams)
    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)
    output_dir: Path = Path("out")
    record_timings: bool = False

    @model_validator(mode="after")
    def check_dataset_source(self) -> "RunConfig":
        if (self.dataset_path is None) == (self.synth is None):
            raise ValueError("exactly one dataset source is required: dataset_path, synth, or a synthetic preset")
        if self.dataset_path is not None and not (self.dataset_path / "manifest.json").is_file():
            raise ValueError(f"dataset_path {self.dataset_path} has no manifest.json")
        return self

    def hyperparams_for(self, algorithm: Optional[Algorithm] = None) -> Hyperparams:
        algorithm = self.algorithm if algorithm is None else algorithm
        return self.hyperparams_an if algorithm == Algorithm.ANTI_NOISE else self.hyperparams

    def load_dataset(self) -> MultiViewDataset:
        if self.dataset_path is not None:
            return load_dataset(self.dataset_path)
        return generate_synth(self.synth)

    def document(self) -> Dict[str, Any]:
        """JSON-ready form embedded in every output file."""
        return self.model_dump(mode="json", by_alias=True)


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    merged: Dict[str, Any] = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_yaml(path: Path) -> Dict[str, Any]:
    with Path(path).open("r", encoding="utf-8") as handle:
        data = yaml.safe_load(handle) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: top level of a run configuration must be a mapping")
    return data


def _canonical(layer: Mapping[str, Any]) -> Dict[str, Any]:
    """Spell the view-weight regularizer as the field name in every hyperparameter block."""
    canonical = dict(layer)
    for block in ("hyperparams", "hyperparams_an"):
        if isinstance(canonical.get(block), Mapping):
            values = dict(canonical[block])
            if "lambda" in values:
                values["lam"] = values.pop("lambda")
            canonical[block] = values
    return canonical


def preset_layer(name: str) -> Dict[str, Any]:
    preset = get_preset(name)
    layer: Dict[str, Any] = {
        "preset": preset.name,
        "hyperparams": preset.standard.model_dump(),
        "hyperparams_an": preset.anti_noise.model_dump(),
    }
    if preset.synth is not None:
        layer["synth"] = preset.synth.model_dump()
    return layer


def resolve_config(
    config_path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Merge the layers; ``overrides`` holds flag values, None meaning not given."""
    flags = {key: value for key, value in (overrides or {}).items() if value is not None}
    file_layer = load_yaml(config_path) if config_path is not None else {}

    preset_name = flags.get("preset", file_layer.get("preset"))
    raw: Dict[str, Any] = preset_layer(preset_name) if preset_name else {}
    raw = deep_merge(raw, _canonical(file_layer))
    if preset_name:
        raw["preset"] = get_preset(preset_name).name

    # an explicit dataset replaces the recipe a synthetic preset brings along
    if "dataset" in flags:
        raw["dataset_path"] = flags["dataset"]
        raw.pop("synth", None)
    elif raw.get("dataset_path") is not None and "synth" not in file_layer:
        raw.pop("synth", None)
    if "algorithm" in flags:
        raw["algorithm"] = flags["algorithm"]
    if "out" in flags:
        raw["output_dir"] = flags["out"]
    for key, field_name in (("seed", "seed"), ("max_iters", "max_iters")):
        if key in flags:
            for block in ("hyperparams", "hyperparams_an"):
                raw[block] = deep_merge(raw.get(block, {}), {field_name: flags[key]})
    if "seed" in flags and isinstance(raw.get("synth"), Mapping):
        raw["synth"] = deep_merge(raw["synth"], {"seed": flags["seed"]})
    return RunConfig.model_validate(raw)
