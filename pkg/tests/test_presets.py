"""Tests for hyperparameters and the built-in presets."""

from __future__ import annotations

import pytest
from pydantic import ValidationError

from model.base import Algorithm, Hyperparams
from model.presets import PRESETS, get_preset


def test_block_sizes_follow_kc_per() -> None:
    hp = Hyperparams(k_per_view=50, kc_per=0.4)
    assert (hp.n_common, hp.n_specific) == (20, 30)
    assert hp.joint_dim(5) == 170


def test_lambda_alias() -> None:
    assert Hyperparams.model_validate({"lambda": 2.5}).lam == 2.5
    assert Hyperparams(lam=0.5).model_dump(by_alias=True)["lambda"] == 0.5


def test_degenerate_blocks_rejected() -> None:
    with pytest.raises(ValidationError):
        Hyperparams(k_per_view=2, kc_per=0.9)
    with pytest.raises(ValidationError):
        Hyperparams(gamma=0.0)


def test_synthetic_presets() -> None:
    synth1 = get_preset("Synth1")
    assert synth1.synth is not None and synth1.synth.n_tasks == 3
    assert synth1.hyperparams(Algorithm.ANTI_NOISE).joint_dim(5) == 72
    synth2 = get_preset("synth2")
    an = synth2.hyperparams(Algorithm.ANTI_NOISE)
    assert (an.beta, an.mu, an.gamma, an.k_per_view, an.kc_per) == (1e-4, 1.0, 1e-4, 30, 0.5)
    assert synth2.standard.gamma == 1e-2


def test_every_preset_builds_valid_blocks() -> None:
    assert set(PRESETS) == {"webkb", "20ng", "nus-wide", "leaves", "synth1", "synth2"}
    for preset in PRESETS.values():
        for algorithm in Algorithm:
            hp = preset.hyperparams(algorithm)
            assert hp.n_common >= 1 and hp.n_specific >= 1


def test_unknown_preset() -> None:
    with pytest.raises(ValueError, match="unknown preset"):
        get_preset("mnist")
