import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from voice2face.config import toy_preset
from voice2face.data.manifest import ClipDataset
from voice2face.data.toydata import synthesize_toy_dataset


@pytest.fixture(scope="session")
def toy_run_config():
    cfg = toy_preset()
    cfg.seed = 42
    return cfg


@pytest.fixture(scope="session")
def toy_dataset(toy_run_config, tmp_path_factory) -> ClipDataset:
    """The 20-identity, 5-clips-each synthetic dataset used across tests."""
    root = tmp_path_factory.mktemp("toy_data")
    synthesize_toy_dataset(
        str(root),
        n_identities=20,
        clips_per_identity=5,
        seed=toy_run_config.seed,
        audio_config=toy_run_config.audio,
        toy_config=toy_run_config.toy_data,
    )
    return ClipDataset.from_manifest(
        str(root / "manifest.jsonl"), toy_run_config.audio, toy_run_config.image
    )


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def tiny_run_config():
    """Miniature end-to-end config: 8px faces, 0.25 s audio at 4 kHz."""
    from voice2face.config import GanTrainConfig, InferenceTrainConfig, RunConfig, ToyDataConfig
    from helpers import (
        TINY_AUDIO,
        TINY_IMAGE,
        tiny_face_config,
        tiny_generator_config,
        tiny_speech_config,
    )

    return RunConfig(
        preset="toy",
        seed=77,
        audio=TINY_AUDIO,
        image=TINY_IMAGE,
        speech_encoder=tiny_speech_config(),
        face_encoder=tiny_face_config(),
        generator=tiny_generator_config(),
        inference=InferenceTrainConfig(
            batch_size=4, k=3, batches_per_epoch=2, max_epochs=2, n_val_examples=6,
            val_fraction=0.25, test_fraction=0.25,
        ),
        gan=GanTrainConfig(batch_size=4, max_iters=3, sample_every=0, log_every=1),
        toy_data=ToyDataConfig(n_identities=6, clips_per_identity=2, frames_per_clip=3),
    )


@pytest.fixture(scope="session")
def tiny_dataset(tiny_run_config, tmp_path_factory) -> ClipDataset:
    root = tmp_path_factory.mktemp("tiny_data")
    synthesize_toy_dataset(
        str(root),
        n_identities=tiny_run_config.toy_data.n_identities,
        clips_per_identity=tiny_run_config.toy_data.clips_per_identity,
        seed=tiny_run_config.seed,
        audio_config=tiny_run_config.audio,
        toy_config=tiny_run_config.toy_data,
        image_size=16,
    )
    return ClipDataset.from_manifest(
        str(root / "manifest.jsonl"), tiny_run_config.audio, tiny_run_config.image
    )
