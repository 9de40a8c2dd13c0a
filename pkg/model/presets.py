"""Hyperparameter presets per dataset, for the standard and anti-noise schedules."""

from __future__ import annotations

from typing import Dict, Optional

from pydantic import BaseModel, ConfigDict

from data.models import SynthSpec
from data.synthetic import SYNTH1, SYNTH2
from model.base import Algorithm, Hyperparams


class Preset(BaseModel):
    """Tuned hyperparameters of one dataset; ``synth`` is set for generated datasets."""

    model_config = ConfigDict(frozen=True)

    name: str
    standard: Hyperparams
    anti_noise: Hyperparams
    synth: Optional[SynthSpec] = None

    def hyperparams(self, algorithm: Algorithm) -> Hyperparams:
        return self.anti_noise if algorithm == Algorithm.ANTI_NOISE else self.standard


def _preset(name: str, std: Dict[str, float], an: Dict[str, float], synth: Optional[SynthSpec] = None) -> Preset:
    return Preset(name=name, standard=Hyperparams(**std), anti_noise=Hyperparams(**an), synth=synth)


# The standard rows carry no mu; they keep the Hyperparams default.
PRESETS: Dict[str, Preset] = {
    preset.name: preset
    for preset in [
        _preset(
            "webkb",
            {"beta": 1e-4, "gamma": 10.0, "k_per_view": 40, "kc_per": 0.4},
            {"beta": 1e-5, "mu": 1e-3, "gamma": 0.1, "k_per_view": 20, "kc_per": 0.6},
        ),
        _preset(
            "20ng",
            {"beta": 1e-5, "gamma": 1e-5, "k_per_view": 20, "kc_per": 0.6},
            {"beta": 1e-5, "mu": 1e-2, "gamma": 1e-2, "k_per_view": 20, "kc_per": 0.4},
        ),
        _preset(
            "nus-wide",
            {"beta": 1e-4, "gamma": 1.0, "k_per_view": 20, "kc_per": 0.6},
            {"beta": 1e-5, "mu": 10.0, "gamma": 1.0, "k_per_view": 20, "kc_per": 0.7},
        ),
        _preset(
            "leaves",
            {"beta": 1e-3, "gamma": 1e-2, "k_per_view": 20, "kc_per": 0.6},
            {"beta": 1e-3, "mu": 0.1, "gamma": 1e-2, "k_per_view": 50, "kc_per": 0.6},
        ),
        _preset(
            "synth1",
            {"beta": 1e-5, "gamma": 1e-4, "k_per_view": 50, "kc_per": 0.4},
            {"beta": 1e-5, "mu": 1e-4, "gamma": 1e-4, "k_per_view": 40, "kc_per": 0.8},
            synth=SYNTH1,
        ),
        _preset(
            "synth2",
            {"beta": 1e-5, "gamma": 1e-2, "k_per_view": 50, "kc_per": 0.4},
            {"beta": 1e-4, "mu": 1.0, "gamma": 1e-4, "k_per_view": 30, "kc_per": 0.5},
            synth=SYNTH2,
        ),
    ]
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise ValueError(f"unknown preset {name!r}; expected one of {known}") from None
