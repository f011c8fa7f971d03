import copy
import json

import numpy as np
import pytest
import torch

from voice2face.errors import ConfigurationError
from voice2face.gan.training import load_gan_checkpoint, train_gan
from voice2face.matching_train import train_inference
from voice2face.schemas import REPORT_SCHEMAS


@pytest.fixture(scope="module")
def tiny_inference_ckpt(tiny_run_config, tiny_dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("gan_prereq")
    cfg = copy.deepcopy(tiny_run_config)
    cfg.inference.max_epochs = 1
    return train_inference(cfg, tiny_dataset, str(out)).checkpoint_path


@pytest.fixture(scope="module")
def tiny_gan(tiny_run_config, tiny_dataset, tiny_inference_ckpt, tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny_gan")
    cfg = copy.deepcopy(tiny_run_config)
    result = train_gan(cfg, tiny_dataset, str(out), encoder_checkpoint=tiny_inference_ckpt)
    return cfg, result


class TestTrainGan:
    def test_completes_and_checkpoint_loads(self, tiny_gan):
        _, result = tiny_gan
        gen, disc, speech = load_gan_checkpoint(result.checkpoint_path)
        z = np.zeros((1, 128), dtype=np.float32)
        c = np.zeros((1, 128), dtype=np.float32)
        out = gen.generate_numpy(z, c)
        assert out.shape == (1, 3, 8, 8)

    def test_log_schema(self, tiny_gan):
        import jsonschema

        _, result = tiny_gan
        lines = [json.loads(l) for l in open(result.log_path)]
        assert lines
        for line in lines:
            jsonschema.validate(line, REPORT_SCHEMAS["gan_log_line"])

    def test_missing_checkpoint_without_ablation_flag_rejected(
        self, tiny_run_config, tiny_dataset, tmp_path
    ):
        cfg = copy.deepcopy(tiny_run_config)
        with pytest.raises(ConfigurationError):
            train_gan(cfg, tiny_dataset, str(tmp_path / "x"), encoder_checkpoint=None)

    def test_ablation_runs_without_checkpoint(self, tiny_run_config, tiny_dataset, tmp_path):
        cfg = copy.deepcopy(tiny_run_config)
        cfg.gan.transfer_encoders = False
        cfg.gan.max_iters = 2
        result = train_gan(cfg, tiny_dataset, str(tmp_path / "abl"), encoder_checkpoint=None)
        load_gan_checkpoint(result.checkpoint_path)

    def test_frozen_speech_encoder_bitwise_unchanged(
        self, tiny_run_config, tiny_dataset, tiny_inference_ckpt, tmp_path
    ):
        from voice2face.nets.checkpoint import load_checkpoint

        cfg = copy.deepcopy(tiny_run_config)
        cfg.gan.max_iters = 4
        result = train_gan(cfg, tiny_dataset, str(tmp_path / "frozen"),
                           encoder_checkpoint=tiny_inference_ckpt)
        before = load_checkpoint(tiny_inference_ckpt)["state"]["speech_encoder"]
        after = load_checkpoint(result.checkpoint_path)["state"]["speech_encoder"]
        assert set(before) == set(after)
        for key in before:
            assert torch.equal(before[key], after[key]), f"{key} changed during GAN training"

    def test_discriminator_trunk_changes_by_default(self, tiny_gan, tiny_inference_ckpt):
        from voice2face.nets.checkpoint import load_checkpoint

        _, result = tiny_gan
        inf_face = load_checkpoint(tiny_inference_ckpt)["state"]["face_encoder"]
        gan_disc = load_checkpoint(result.checkpoint_path)["state"]["discriminator"]
        changed = any(
            not torch.equal(inf_face[k], gan_disc["phi." + k]) for k in inf_face
            if inf_face[k].dtype.is_floating_point
        )
        assert changed, "fine-tuned trunk should move during adversarial training"

    def test_checkpoint_round_trip_generation_bitwise(self, tiny_gan, tmp_path, rng):
        _, result = tiny_gan
        gen1, _, _ = load_gan_checkpoint(result.checkpoint_path)
        gen2, _, _ = load_gan_checkpoint(result.checkpoint_path)
        z = rng.standard_normal((2, 128)).astype(np.float32)
        c = rng.standard_normal((2, 128)).astype(np.float32)
        np.testing.assert_array_equal(gen1.generate_numpy(z, c), gen2.generate_numpy(z, c))

    def test_deterministic_under_seed(self, tiny_run_config, tiny_dataset, tiny_inference_ckpt, tmp_path):
        cfg = copy.deepcopy(tiny_run_config)
        cfg.gan.max_iters = 2
        r1 = train_gan(cfg, tiny_dataset, str(tmp_path / "a"), encoder_checkpoint=tiny_inference_ckpt)
        r2 = train_gan(cfg, tiny_dataset, str(tmp_path / "b"), encoder_checkpoint=tiny_inference_ckpt)
        assert open(r1.log_path).read() == open(r2.log_path).read()
